// URLLC rate against access latency: OMA waits for a reserved minislot,
// NOMA transmits at once but sees eMBB interference.

use cran_coexist::urllc::{blocking_terms, solve_eps_ud_oma};
use cran_coexist::{urllc_perf, Scheme, SystemParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let base = cran_coexist::validate(SystemParams {
        alpha: 0.2,
        q: 0.001,
        ..SystemParams::default()
    })?;

    println!(
        "{:>4} {:>10} {:>10} {:>11} {:>10}",
        "l_u", "p_block", "eps_ud", "oma_rate", "noma_rate"
    );
    let noma = urllc_perf(&base, Scheme::NomaPuncturing)?;
    for l_u in 1..=8 {
        let p = base.with(|s| s.l_u = l_u)?;
        let (p_block, _) = blocking_terms(l_u, p.q);
        let oma = urllc_perf(&p, Scheme::Oma)?;
        let eps = solve_eps_ud_oma(&p).map_or("-".to_string(), |e| format!("{e:.3e}"));
        println!(
            "{l_u:>4} {p_block:>10.3e} {eps:>10} {:>11.5} {:>10.5}",
            oma.rate, noma.rate
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

// Brute-force references: exact mask enumeration for a small network and an
// event-level simulation of URLLC access.

use cran_coexist::oracle::{exact_masked_logdet_mean, simulate_urllc_access, EnumerationKind};
use cran_coexist::urllc::blocking_terms;
use cran_coexist::SystemParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = cran_coexist::validate(SystemParams {
        m_cells: 6,
        q: 0.3,
        ..SystemParams::default()
    })?;
    for kind in [EnumerationKind::Puncturing, EnumerationKind::Tin] {
        let r = exact_masked_logdet_mean(&p, kind)?;
        println!(
            "{kind:?}: exact mean {:.6} over {} masks",
            r.exact_value, r.terms
        );
    }

    let p = p.with(|s| {
        s.l_u = 4;
        s.q = 0.1;
    })?;
    let eps_ud = 0.01;
    let sim = simulate_urllc_access(&p, eps_ud, 200_000, 5)?;
    let (b, t) = blocking_terms(p.l_u, p.q);
    println!(
        "Pr[error]: simulated {:.5} ± {:.1e}, analytic {:.5}",
        sim.pr_error,
        sim.pr_error_stderr,
        b + t * eps_ud
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

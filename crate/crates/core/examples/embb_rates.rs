// eMBB per-cell rate of every scheme at one operating point, finite M by
// Monte Carlo next to the M → ∞ limit.

use cran_coexist::{embb_rate, embb_rate_infinite, McConfig, Scheme, SystemParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = cran_coexist::validate(SystemParams {
        alpha: 0.2f64.sqrt(),
        q: 0.3,
        fronthaul_c: 4.0,
        m_cells: 16,
        ..SystemParams::default()
    })?;
    let mc = McConfig {
        seed: 3,
        samples: 400,
    };

    println!(
        "{:<16} {:>10} {:>10} {:>10}",
        "scheme", "finite_m", "stderr", "infinite"
    );
    for s in Scheme::ALL {
        let r = embb_rate(&params, s, mc)?;
        let inf =
            embb_rate_infinite(&params, s)?.map_or("-".to_string(), |r| format!("{:.5}", r.rate));
        println!(
            "{:<16} {:>10.5} {:>10.1e} {:>10}",
            s.name(),
            r.rate,
            r.mc_stderr,
            inf
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

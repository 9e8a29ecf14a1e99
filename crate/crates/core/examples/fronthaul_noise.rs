// Quantization noise needed to fit the fronthaul, per scheme, as the link
// capacity grows.

use cran_coexist::{sigma_q2_for, Scheme, SystemParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let base = cran_coexist::validate(SystemParams {
        alpha: 0.4f64.sqrt(),
        q: 0.3,
        ..SystemParams::default()
    })?;

    print!("{:>5}", "C");
    for s in Scheme::ALL {
        print!(" {:>16}", s.name());
    }
    println!();
    for c in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let p = base.with(|s| s.fronthaul_c = c)?;
        print!("{c:>5}");
        for s in Scheme::ALL {
            let n = sigma_q2_for(&p, s)?;
            if n.feasible {
                print!(" {:>16.4e}", n.sigma_q2);
            } else {
                print!(" {:>16}", "infeasible");
            }
        }
        println!();
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

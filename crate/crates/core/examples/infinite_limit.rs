// Puncturing rate as the number of cells grows, approaching the value from
// the erasure fixed point.

use cran_coexist::embb::{embb_rate_puncturing_infinite, embb_rate_puncturing_mc};
use cran_coexist::SystemParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let base = cran_coexist::validate(SystemParams {
        alpha: 0.4f64.sqrt(),
        q: 0.3,
        fronthaul_c: 2.0,
        ..SystemParams::default()
    })?;
    let limit = embb_rate_puncturing_infinite(&base, base.q)?;
    println!("fixed point: {:.5}", limit.rate);
    for m in [4, 8, 16, 32, 64] {
        let p = base.with(|s| s.m_cells = m)?;
        let r = embb_rate_puncturing_mc(&p, 11, 300)?;
        println!("M = {m:>3}: {:.5} ± {:.1e}", r.rate, r.mc_stderr);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

// Runs a built-in sweep at a reduced Monte Carlo budget and prints the CSV.

use cran_coexist::{emit, preset, run_sweep, Format};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = preset("fig7")?;
    spec.samples = 100;
    spec.base.m_cells = 8;
    spec.grid.truncate(4);
    let result = run_sweep(&spec)?;
    print!("{}", String::from_utf8(emit(&result, Format::Csv)?)?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

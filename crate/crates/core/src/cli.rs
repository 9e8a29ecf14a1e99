//! Command-line front end. Exit codes: 0 success, 1 invalid configuration,
//! 2 numerical failure (including failed `verify` checks).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::embb::{embb_rate_infinite, McConfig, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::experiments::{
    emit, evaluate, preset_file, preset_names, run_sweep, write_result, Format, PointEval,
    SweepFile, SweepSpec,
};
use crate::oracle::cross_checks;
use crate::params::{ParamOverrides, Params, Scheme};

#[derive(Debug, Parser)]
#[command(
    name = "cran-coexist",
    version,
    about = "eMBB/URLLC uplink rates in a fronthaul-limited cloud RAN"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every metric at one parameter point.
    Eval {
        #[command(flatten)]
        params: ParamFlags,
        /// Restrict to one scheme (repeatable).
        #[arg(long)]
        scheme: Vec<Scheme>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Also report the M → ∞ eMBB rate where one exists.
        #[arg(long)]
        infinite: bool,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Run a parameter sweep from a preset or a sweep file.
    Sweep {
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        preset: Option<String>,
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides applied on top of the sweep's base parameters.
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle cross-checks.
    Verify {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1_000_000)]
        windows: u64,
    },
    /// List the built-in sweep presets.
    ListPresets,
}

/// Parameter flags, named exactly as the config keys.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamFlags {
    /// Flat key-value parameter file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "alpha")]
    pub alpha: Option<f64>,
    #[arg(long = "alpha_sq")]
    pub alpha_sq: Option<f64>,
    #[arg(long = "beta")]
    pub beta: Option<f64>,
    #[arg(long = "p_b_db", allow_negative_numbers = true)]
    pub p_b_db: Option<f64>,
    #[arg(long = "p_u_db", allow_negative_numbers = true)]
    pub p_u_db: Option<f64>,
    #[arg(long = "fronthaul_c")]
    pub fronthaul_c: Option<f64>,
    #[arg(long = "q")]
    pub q: Option<f64>,
    #[arg(long = "n_f")]
    pub n_f: Option<u32>,
    #[arg(long = "n_t")]
    pub n_t: Option<u32>,
    #[arg(long = "m_cells")]
    pub m_cells: Option<usize>,
    #[arg(long = "l_u")]
    pub l_u: Option<u32>,
    #[arg(long = "eps_u")]
    pub eps_u: Option<f64>,
}

impl ParamFlags {
    /// Config file (if any) with the explicit flags layered on top.
    pub fn overrides(&self) -> Result<ParamOverrides> {
        let file = match &self.config {
            Some(path) => ParamOverrides::from_file(path)?,
            None => ParamOverrides::default(),
        };
        let flags = ParamOverrides {
            alpha: self.alpha,
            alpha_sq: self.alpha_sq,
            beta: self.beta,
            p_b_db: self.p_b_db,
            p_u_db: self.p_u_db,
            fronthaul_c: self.fronthaul_c,
            q: self.q,
            n_f: self.n_f,
            n_t: self.n_t,
            m_cells: self.m_cells,
            l_u: self.l_u,
            eps_u: self.eps_u,
        };
        if flags.alpha.is_some() && flags.alpha_sq.is_some() {
            return Err(Error::Config(
                "set either --alpha or --alpha_sq, not both".into(),
            ));
        }
        Ok(file.merged(&flags))
    }

    pub fn resolve(&self) -> Result<Params> {
        self.overrides()?.resolve()
    }
}

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses `args` and runs the command, writing results to `out`.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

/// Runs a parsed command. Returns the exit code for outcomes that are not
/// errors as such (failed verification checks).
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Eval {
            params,
            scheme,
            seed,
            samples,
            infinite,
            format,
        } => {
            let params = params.resolve()?;
            let schemes = if scheme.is_empty() {
                Scheme::ALL.to_vec()
            } else {
                scheme
            };
            if samples == 0 {
                return Err(Error::Config("samples must be positive".into()));
            }
            let mc = McConfig { seed, samples };
            let mut evals = Vec::new();
            for s in schemes {
                let e = evaluate(&params, s, mc)?;
                let inf = if infinite {
                    embb_rate_infinite(&params, s)?
                } else {
                    None
                };
                evals.push((e, inf.map(|r| r.rate)));
            }
            match format.as_str() {
                "text" => write_eval_text(out, &params, &evals).map_err(out_err)?,
                "json" => {
                    #[derive(serde::Serialize)]
                    struct Entry<'a> {
                        #[serde(flatten)]
                        eval: &'a PointEval,
                        embb_rate_infinite: Option<f64>,
                    }
                    #[derive(serde::Serialize)]
                    struct Doc<'a> {
                        params: &'a crate::params::SystemParams,
                        results: Vec<Entry<'a>>,
                    }
                    let doc = Doc {
                        params: params.system(),
                        results: evals
                            .iter()
                            .map(|(eval, inf)| Entry {
                                eval,
                                embb_rate_infinite: *inf,
                            })
                            .collect(),
                    };
                    let text = serde_json::to_string_pretty(&doc)
                        .map_err(|e| Error::Config(format!("json: {e}")))?;
                    writeln!(out, "{text}").map_err(out_err)?;
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown format `{other}` (text or json)"
                    )))
                }
            }
            Ok(0)
        }
        Command::Sweep {
            preset,
            spec,
            params,
            seed,
            samples,
            format,
            out: out_path,
        } => {
            let format: Format = format.parse()?;
            let mut file: SweepFile = match (preset, spec) {
                (Some(name), None) => preset_file(&name)?,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                        path: path.clone(),
                        source,
                    })?;
                    toml::from_str(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
                _ => {
                    return Err(Error::Config(
                        "give exactly one of --preset or --spec".into(),
                    ))
                }
            };
            if let Some(seed) = seed {
                file.seed = seed;
            }
            if let Some(samples) = samples {
                file.samples = samples;
            }
            let spec = SweepSpec::from_file_spec(file, &params.overrides()?)?;
            let result = run_sweep(&spec)?;
            match out_path {
                Some(path) => write_result(&result, format, &path)?,
                None => out.write_all(&emit(&result, format)?).map_err(out_err)?,
            }
            Ok(0)
        }
        Command::Verify {
            params,
            seed,
            samples,
            windows,
        } => {
            let base = params.resolve()?;
            if samples == 0 || windows == 0 {
                return Err(Error::Config("samples and windows must be positive".into()));
            }
            let checks = cross_checks(&base, seed, samples, windows)?;
            let mut failed = 0;
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{tag}  {}: {}", c.name, c.detail).map_err(out_err)?;
                failed += usize::from(!c.passed);
            }
            writeln!(
                out,
                "{} of {} checks passed",
                checks.len() - failed,
                checks.len()
            )
            .map_err(out_err)?;
            Ok(if failed == 0 { 0 } else { 2 })
        }
        Command::ListPresets => {
            for name in preset_names() {
                let f = preset_file(name)?;
                writeln!(out, "{name}\t{}", f.description).map_err(out_err)?;
            }
            Ok(0)
        }
    }
}

fn write_eval_text(
    out: &mut dyn Write,
    params: &Params,
    evals: &[(PointEval, Option<f64>)],
) -> std::io::Result<()> {
    let p = params.system();
    writeln!(
        out,
        "alpha={} beta={} p_b_db={} p_u_db={} fronthaul_c={} q={} n_f={} n_t={} m_cells={} l_u={} eps_u={}",
        p.alpha, p.beta, p.p_b_db, p.p_u_db, p.fronthaul_c, p.q, p.n_f, p.n_t, p.m_cells, p.l_u, p.eps_u
    )?;
    writeln!(
        out,
        "{:<16} {:>10} {:>10} {:>10} {:>11} {:>11} {:>8} {:>8}",
        "scheme", "embb_rate", "stderr", "urllc_rate", "eps_ud", "sigma_q2", "latency", "feasible"
    )?;
    for (e, _) in evals {
        writeln!(
            out,
            "{:<16} {:>10.6} {:>10.2e} {:>10.6} {:>11.4e} {:>11.4e} {:>8} {:>8}",
            e.scheme.name(),
            e.embb.rate,
            e.embb.mc_stderr,
            e.urllc.rate,
            e.urllc.eps_ud,
            e.noise.sigma_q2,
            e.urllc.access_latency,
            e.feasible()
        )?;
    }
    for (e, inf) in evals {
        if let Some(r) = inf {
            writeln!(out, "{:<16} embb_rate (M -> inf) = {r:.6}", e.scheme.name())?;
        }
    }
    Ok(())
}

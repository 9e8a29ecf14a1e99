//! Parameter sweeps and their CSV/JSON output.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embb::{embb_rate, EmbbRateResult, McConfig, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::fronthaul::{sigma_q2_for, QuantizationNoise};
use crate::params::{validate, ParamOverrides, Params, Scheme, SystemParams};
use crate::urllc::{urllc_perf, UrllcPerf};

/// Everything computed for one scheme at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointEval {
    pub scheme: Scheme,
    pub urllc: UrllcPerf,
    pub noise: QuantizationNoise,
    pub embb: EmbbRateResult,
}

impl PointEval {
    pub fn feasible(&self) -> bool {
        self.urllc.feasible && self.embb.feasible
    }
}

/// Evaluates `scheme` at finite M: exact OMA rates, Monte Carlo for NOMA.
pub fn evaluate(params: &Params, scheme: Scheme, mc: McConfig) -> Result<PointEval> {
    Ok(PointEval {
        scheme,
        urllc: urllc_perf(params, scheme)?,
        noise: sigma_q2_for(params, scheme)?,
        embb: embb_rate(params, scheme, mc)?,
    })
}

/// The swept quantity: a [`SystemParams`] field, or `alpha_sq` for α².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Alpha,
    AlphaSq,
    Beta,
    PBDb,
    PUDb,
    FronthaulC,
    Q,
    NF,
    NT,
    MCells,
    LU,
    EpsU,
}

impl Axis {
    const ALL: [Axis; 12] = [
        Axis::Alpha,
        Axis::AlphaSq,
        Axis::Beta,
        Axis::PBDb,
        Axis::PUDb,
        Axis::FronthaulC,
        Axis::Q,
        Axis::NF,
        Axis::NT,
        Axis::MCells,
        Axis::LU,
        Axis::EpsU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Alpha => "alpha",
            Axis::AlphaSq => "alpha_sq",
            Axis::Beta => "beta",
            Axis::PBDb => "p_b_db",
            Axis::PUDb => "p_u_db",
            Axis::FronthaulC => "fronthaul_c",
            Axis::Q => "q",
            Axis::NF => "n_f",
            Axis::NT => "n_t",
            Axis::MCells => "m_cells",
            Axis::LU => "l_u",
            Axis::EpsU => "eps_u",
        }
    }

    fn integral(self) -> bool {
        matches!(self, Axis::NF | Axis::NT | Axis::MCells | Axis::LU)
    }

    pub fn apply(self, p: &mut SystemParams, v: f64) -> Result<()> {
        if self.integral() && (v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64) {
            return Err(Error::Config(format!(
                "{} takes non-negative integer values, got {v}",
                self.name()
            )));
        }
        match self {
            Axis::Alpha => p.alpha = v,
            Axis::AlphaSq => {
                if v < 0.0 {
                    return Err(Error::Config(format!("alpha_sq = {v} is negative")));
                }
                p.alpha = v.sqrt()
            }
            Axis::Beta => p.beta = v,
            Axis::PBDb => p.p_b_db = v,
            Axis::PUDb => p.p_u_db = v,
            Axis::FronthaulC => p.fronthaul_c = v,
            Axis::Q => p.q = v,
            Axis::NF => p.n_f = v as u32,
            Axis::NT => p.n_t = v as u32,
            Axis::MCells => p.m_cells = v as usize,
            Axis::LU => p.l_u = v as u32,
            Axis::EpsU => p.eps_u = v,
        }
        Ok(())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Axis> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown axis `{s}`")))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EmbbRate,
    UrllcRate,
    EpsUd,
    SigmaQ2,
    Feasible,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::EmbbRate,
        Metric::UrllcRate,
        Metric::EpsUd,
        Metric::SigmaQ2,
        Metric::Feasible,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::EmbbRate => "embb_rate",
            Metric::UrllcRate => "urllc_rate",
            Metric::EpsUd => "eps_ud",
            Metric::SigmaQ2 => "sigma_q2",
            Metric::Feasible => "feasible",
        }
    }

    /// (value, stderr, feasible) of this metric.
    fn read(self, e: &PointEval) -> (f64, f64, bool) {
        match self {
            Metric::EmbbRate => (e.embb.rate, e.embb.mc_stderr, e.embb.feasible),
            Metric::UrllcRate => (e.urllc.rate, 0.0, e.urllc.feasible),
            Metric::EpsUd => (e.urllc.eps_ud, 0.0, e.urllc.feasible),
            Metric::SigmaQ2 => (e.noise.sigma_q2, 0.0, e.noise.feasible),
            Metric::Feasible => {
                let ok = e.feasible();
                (if ok { 1.0 } else { 0.0 }, 0.0, ok)
            }
        }
    }
}

fn all_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

fn default_seed() -> u64 {
    1
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

/// On-disk sweep description (TOML). `base` holds parameter overrides on top
/// of the defaults, in the same flat keys as a params config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub schemes: Vec<Scheme>,
    #[serde(default = "all_metrics")]
    pub outputs: Vec<Metric>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub base: ParamOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub name: String,
    pub base: SystemParams,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub outputs: Vec<Metric>,
    pub seed: u64,
    pub samples: usize,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<SweepSpec> {
        let file: SweepFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file_spec(file, &ParamOverrides::default())
    }

    pub fn load(path: &Path) -> Result<SweepSpec> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Builds a spec from its file form, with `overrides` layered on `base`.
    pub fn from_file_spec(file: SweepFile, overrides: &ParamOverrides) -> Result<SweepSpec> {
        let mut base = SystemParams::default();
        file.base.clone().merged(overrides).apply(&mut base)?;
        validate(base.clone())?;
        let spec = SweepSpec {
            name: file.name,
            base,
            axis: file.axis,
            grid: file.grid,
            schemes: file.schemes,
            outputs: file.outputs,
            seed: file.seed,
            samples: file.samples,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "grid must be finite and strictly increasing".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        for &v in &self.grid {
            self.axis.apply(&mut self.base.clone(), v)?;
        }
        Ok(())
    }

    /// Short digest of everything that determines the output.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&canon)[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: f64,
    pub scheme: Scheme,
    pub metric: Metric,
    pub value: f64,
    pub stderr: f64,
    pub feasible: bool,
    /// Set when the point could not be evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub sweep: String,
    pub axis: String,
    pub seed: u64,
    pub samples: usize,
    pub m_cells: usize,
    pub params_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub provenance: Provenance,
    pub rows: Vec<SweepRow>,
}

pub fn tool_version() -> String {
    format!("{} v{}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

fn rows_for_point(spec: &SweepSpec, x: f64) -> Vec<SweepRow> {
    let params = {
        let mut p = spec.base.clone();
        spec.axis.apply(&mut p, x).and_then(|_| validate(p))
    };
    let mc = McConfig {
        seed: spec.seed,
        samples: spec.samples,
    };
    let mut rows = Vec::with_capacity(spec.schemes.len() * spec.outputs.len());
    for &scheme in &spec.schemes {
        let eval = params
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|p| evaluate(p, scheme, mc).map_err(|e| e.to_string()));
        for &metric in &spec.outputs {
            let row = match &eval {
                Ok(e) => {
                    let (value, stderr, feasible) = metric.read(e);
                    SweepRow {
                        axis: x,
                        scheme,
                        metric,
                        value,
                        stderr,
                        feasible,
                        error: None,
                    }
                }
                Err(msg) => SweepRow {
                    axis: x,
                    scheme,
                    metric,
                    value: f64::NAN,
                    stderr: f64::NAN,
                    feasible: false,
                    error: Some(msg.clone()),
                },
            };
            rows.push(row);
        }
    }
    rows
}

/// Evaluates every (grid point, scheme) pair. Points run in parallel; rows
/// come back in grid order, then scheme order, then metric order. A point
/// that fails is recorded as infeasible rows carrying the error message.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.check()?;
    let rows = spec
        .grid
        .par_iter()
        .map(|&x| rows_for_point(spec, x))
        .collect::<Vec<_>>()
        .concat();
    Ok(SweepResult {
        provenance: Provenance {
            tool: tool_version(),
            sweep: spec.name.clone(),
            axis: spec.axis.name().to_string(),
            seed: spec.seed,
            samples: spec.samples,
            m_cells: spec.base.m_cells,
            params_hash: spec.hash(),
        },
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

pub const COLUMNS: [&str; 6] = ["axis", "scheme", "metric", "value", "stderr", "feasible"];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Serializes a sweep. CSV starts with `#`-prefixed provenance lines, then
/// the header row, then one line per row.
pub fn emit(result: &SweepResult, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let p = &result.provenance;
            let mut out = Vec::new();
            for (k, v) in [
                ("tool", p.tool.clone()),
                ("sweep", p.sweep.clone()),
                ("axis", p.axis.clone()),
                ("seed", p.seed.to_string()),
                ("samples", p.samples.to_string()),
                ("m_cells", p.m_cells.to_string()),
                ("params_hash", p.params_hash.clone()),
            ] {
                writeln!(out, "# {k}: {v}").expect("write to vec");
            }
            let mut w = csv::Writer::from_writer(out);
            let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
            w.write_record(COLUMNS).map_err(io)?;
            for r in &result.rows {
                w.write_record([
                    num(r.axis),
                    r.scheme.name().to_string(),
                    r.metric.name().to_string(),
                    num(r.value),
                    num(r.stderr),
                    r.feasible.to_string(),
                ])
                .map_err(io)?;
            }
            w.into_inner()
                .map_err(|e| Error::Config(format!("csv: {e}")))
        }
        Format::Json => {
            #[derive(Serialize)]
            struct JsonRow<'a> {
                axis: f64,
                scheme: &'a str,
                metric: &'a str,
                value: Option<f64>,
                stderr: Option<f64>,
                feasible: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                error: Option<&'a str>,
            }
            #[derive(Serialize)]
            struct Doc<'a> {
                provenance: &'a Provenance,
                columns: [&'static str; 6],
                rows: Vec<JsonRow<'a>>,
            }
            let doc = Doc {
                provenance: &result.provenance,
                columns: COLUMNS,
                rows: result
                    .rows
                    .iter()
                    .map(|r| JsonRow {
                        axis: r.axis,
                        scheme: r.scheme.name(),
                        metric: r.metric.name(),
                        value: finite(r.value),
                        stderr: finite(r.stderr),
                        feasible: r.feasible,
                        error: r.error.as_deref(),
                    })
                    .collect(),
            };
            let mut bytes = serde_json::to_vec_pretty(&doc).expect("json serializes");
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

/// [`emit`] straight to a file.
pub fn write_result(result: &SweepResult, format: Format, path: &Path) -> Result<()> {
    let bytes = emit(result, format)?;
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

const PRESETS: [(&str, &str); 5] = [
    ("fig5a", include_str!("../presets/fig5a.toml")),
    ("fig5b", include_str!("../presets/fig5b.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
    ("fig8", include_str!("../presets/fig8.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_file(name: &str) -> Result<SweepFile> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
    toml::from_str(text).map_err(|e| Error::Config(format!("preset {name}: {e}")))
}

pub fn preset(name: &str) -> Result<SweepSpec> {
    SweepSpec::from_file_spec(preset_file(name)?, &ParamOverrides::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> SweepSpec {
        let mut spec = preset("fig6").unwrap();
        spec.grid = vec![0.01, 0.3];
        spec.samples = 20;
        spec.base.m_cells = 6;
        spec
    }

    #[test]
    fn presets_parse() {
        for name in preset_names() {
            let spec = preset(name).unwrap();
            assert!(!spec.grid.is_empty());
            assert_eq!(spec.name, name);
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn preset_settings() {
        let f5 = preset("fig5a").unwrap();
        assert_eq!(f5.axis, Axis::AlphaSq);
        assert_eq!(f5.grid.len(), 21);
        assert_eq!(f5.base.q, 0.001);
        assert_eq!(preset("fig5b").unwrap().base.q, 0.01);
        assert_eq!(f5.base.l_u, 2);
        assert_eq!(f5.base.fronthaul_c, 1.5);
        assert_eq!(f5.schemes, vec![Scheme::Oma, Scheme::NomaPuncturing]);

        let f6 = preset("fig6").unwrap();
        assert_eq!(f6.axis, Axis::Q);
        assert_eq!(f6.schemes.len(), 4);
        assert_eq!(f6.base.fronthaul_c, 4.0);
        assert!((f6.base.alpha.powi(2) - 0.2).abs() < 1e-15);

        let f7 = preset("fig7").unwrap();
        assert_eq!(f7.axis, Axis::FronthaulC);
        assert_eq!(f7.base.q, 0.3);
        assert!((f7.base.alpha.powi(2) - 0.4).abs() < 1e-15);

        let f8 = preset("fig8").unwrap();
        assert_eq!(f8.axis, Axis::LU);
        assert_eq!(f8.grid, (1..=8).map(f64::from).collect::<Vec<_>>());
        assert_eq!(
            (f8.base.q, f8.base.fronthaul_c, f8.base.alpha),
            (0.001, 1.5, 0.2)
        );

        for spec in [&f5, &f6, &f7, &f8] {
            assert_eq!(spec.base.n_f, 10);
            assert_eq!(spec.base.p_b_db, 5.0);
            assert_eq!(spec.base.p_u_db, 10.0);
            assert_eq!(spec.base.beta, 1.0);
            assert_eq!(spec.base.eps_u, 1e-3);
        }
    }

    #[test]
    fn spec_validation() {
        let bad = |edit: fn(&mut SweepSpec)| {
            let mut s = tiny_spec();
            edit(&mut s);
            s.check().is_err()
        };
        assert!(bad(|s| s.grid.clear()));
        assert!(bad(|s| s.grid = vec![0.3, 0.1]));
        assert!(bad(|s| s.schemes.clear()));
        assert!(bad(|s| {
            s.axis = Axis::LU;
            s.grid = vec![1.0, 2.5];
        }));
        assert!(
            SweepSpec::parse("name = \"x\"\naxis = \"zeta\"\ngrid = [1]\nschemes = [\"oma\"]")
                .is_err()
        );
    }

    #[test]
    fn row_layout_and_counts() {
        let spec = tiny_spec();
        let res = run_sweep(&spec).unwrap();
        assert_eq!(res.rows.len(), 2 * 4 * 5);
        assert_eq!(res.rows[0].axis, 0.01);
        assert_eq!(res.rows[0].scheme, Scheme::Oma);
        assert_eq!(res.rows[0].metric, Metric::EmbbRate);
        assert_eq!(res.rows[39].axis, 0.3);
        let csv = String::from_utf8(emit(&res, Format::Csv).unwrap()).unwrap();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "axis,scheme,metric,value,stderr,feasible");
        assert_eq!(data.len(), 1 + 40);
    }

    #[test]
    fn infeasible_points_are_kept() {
        let mut spec = tiny_spec();
        spec.grid = vec![0.3, 0.6];
        spec.schemes = vec![Scheme::Oma];
        let res = run_sweep(&spec).unwrap();
        // L_U = 2 with q >= 0.3 blocks far more than eps_u
        let urllc: Vec<_> = res
            .rows
            .iter()
            .filter(|r| r.metric == Metric::UrllcRate)
            .collect();
        assert_eq!(urllc.len(), 2);
        assert!(urllc.iter().all(|r| !r.feasible && r.value == 0.0));
    }

    #[test]
    fn failing_point_recorded_in_row() {
        let mut spec = tiny_spec();
        spec.axis = Axis::Alpha;
        spec.grid = vec![0.5, 1.5];
        spec.schemes = vec![Scheme::Oma];
        spec.outputs = vec![Metric::EmbbRate];
        // check() only validates axis typing, so bypass it via run on a raw grid
        let res = run_sweep(&spec).unwrap();
        assert_eq!(res.rows.len(), 2);
        assert!(res.rows[0].error.is_none());
        assert!(res.rows[1].error.as_deref().unwrap().contains("alpha"));
        assert!(!res.rows[1].feasible);
    }

    #[test]
    fn empty_and_single_row_output() {
        let prov = Provenance {
            tool: tool_version(),
            sweep: "t".into(),
            axis: "q".into(),
            seed: 1,
            samples: 1,
            m_cells: 3,
            params_hash: "00".into(),
        };
        let mut res = SweepResult {
            provenance: prov,
            rows: vec![],
        };
        let csv = String::from_utf8(emit(&res, Format::Csv).unwrap()).unwrap();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec!["axis,scheme,metric,value,stderr,feasible"]);

        res.rows.push(SweepRow {
            axis: 0.5,
            scheme: Scheme::NomaSic,
            metric: Metric::SigmaQ2,
            value: f64::INFINITY,
            stderr: 0.0,
            feasible: false,
            error: None,
        });
        let csv = String::from_utf8(emit(&res, Format::Csv).unwrap()).unwrap();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        assert_eq!(data[1], "0.5,noma_sic,sigma_q2,inf,0.0,false");

        let json: serde_json::Value =
            serde_json::from_slice(&emit(&res, Format::Json).unwrap()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 1);
        assert!(json["rows"][0]["value"].is_null());
        assert_eq!(json["columns"][0], "axis");
    }

    #[test]
    fn write_result_reports_path() {
        let res = run_sweep(&tiny_spec()).unwrap();
        let err =
            write_result(&res, Format::Csv, Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
    }
}

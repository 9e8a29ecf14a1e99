//! System parameters for the symmetric circulant Wyner uplink.
//!
//! [`SystemParams`] is the raw, user-facing record (powers in dB). Running it
//! through [`validate`] yields [`Params`], which caches linear powers and is
//! what every rate routine consumes.

use std::fmt;
use std::ops::Deref;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Physical and protocol parameters of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Inter-cell eMBB amplitude gain.
    pub alpha: f64,
    /// URLLC amplitude gain.
    pub beta: f64,
    pub p_b_db: f64,
    pub p_u_db: f64,
    /// Per-link fronthaul capacity in bit/s/Hz.
    pub fronthaul_c: f64,
    /// Per-minislot URLLC packet generation probability.
    pub q: f64,
    /// Symbols per minislot (URLLC blocklength).
    pub n_f: u32,
    /// Minislots per frame.
    pub n_t: u32,
    /// Number of cells for finite-M evaluations.
    pub m_cells: usize,
    /// OMA worst-case access latency in minislots.
    pub l_u: u32,
    /// Target URLLC error probability.
    pub eps_u: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            alpha: 0.2f64.sqrt(),
            beta: 1.0,
            p_b_db: 5.0,
            p_u_db: 10.0,
            fronthaul_c: 1.5,
            q: 0.01,
            n_f: 10,
            n_t: 100,
            m_cells: 32,
            l_u: 2,
            eps_u: 1e-3,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Validated parameters with linear powers cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    raw: SystemParams,
    p_b: f64,
    p_u: f64,
}

impl Deref for Params {
    type Target = SystemParams;

    fn deref(&self) -> &SystemParams {
        &self.raw
    }
}

impl Params {
    pub fn system(&self) -> &SystemParams {
        &self.raw
    }

    /// Linear eMBB power P_B.
    pub fn p_b(&self) -> f64 {
        self.p_b
    }

    /// Linear URLLC power P_U.
    pub fn p_u(&self) -> f64 {
        self.p_u
    }

    /// Received eMBB power at one EN, (1 + 2α²)·P_B.
    pub fn embb_rx_power(&self) -> f64 {
        (1.0 + 2.0 * self.alpha * self.alpha) * self.p_b
    }

    /// Received URLLC power at its EN, β²·P_U.
    pub fn urllc_rx_power(&self) -> f64 {
        self.beta * self.beta * self.p_u
    }

    /// Copy with some raw fields changed, re-validated.
    pub fn with(&self, edit: impl FnOnce(&mut SystemParams)) -> Result<Params> {
        let mut raw = self.raw.clone();
        edit(&mut raw);
        validate(raw)
    }
}

/// Checks every invariant and converts dB powers to linear.
///
/// All violated fields are reported together.
pub fn validate(p: SystemParams) -> Result<Params> {
    let mut errs = Vec::new();
    let mut bad = |field: &'static str, message: String| errs.push(Violation { field, message });

    if !(0.0..=1.0).contains(&p.alpha) {
        bad("alpha", format!("{} not in [0, 1]", p.alpha));
    }
    if !(p.beta >= 0.0 && p.beta.is_finite()) {
        bad("beta", format!("{} must be finite and >= 0", p.beta));
    }
    if !(0.0..=1.0).contains(&p.q) {
        bad("q", format!("{} not in [0, 1]", p.q));
    }
    if !(p.eps_u > 0.0 && p.eps_u < 1.0) {
        bad("eps_u", format!("{} not in (0, 1)", p.eps_u));
    }
    if !(p.fronthaul_c >= 0.0 && !p.fronthaul_c.is_nan()) {
        bad("fronthaul_c", format!("{} must be >= 0", p.fronthaul_c));
    }
    if p.l_u < 1 {
        bad("l_u", "access latency must be at least 1 minislot".into());
    }
    if p.n_f < 1 {
        bad("n_f", "must be a positive integer".into());
    }
    if p.n_t < 1 {
        bad("n_t", "must be a positive integer".into());
    }
    if p.m_cells < 3 {
        bad("m_cells", format!("{} < 3", p.m_cells));
    }
    let p_b = db_to_linear(p.p_b_db);
    let p_u = db_to_linear(p.p_u_db);
    if !(p_b > 0.0 && p_b.is_finite()) {
        bad(
            "p_b_db",
            format!("{} dB has no positive finite linear value", p.p_b_db),
        );
    }
    if !(p_u > 0.0 && p_u.is_finite()) {
        bad(
            "p_u_db",
            format!("{} dB has no positive finite linear value", p.p_u_db),
        );
    }

    if errs.is_empty() {
        Ok(Params { raw: p, p_b, p_u })
    } else {
        Err(Error::InvalidParams(errs))
    }
}

/// Decoding architecture at the ENs and BBU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Oma,
    NomaPuncturing,
    #[serde(rename = "noma_tin")]
    NomaTreatAsNoise,
    NomaSic,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Oma,
        Scheme::NomaPuncturing,
        Scheme::NomaTreatAsNoise,
        Scheme::NomaSic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Oma => "oma",
            Scheme::NomaPuncturing => "noma_puncturing",
            Scheme::NomaTreatAsNoise => "noma_tin",
            Scheme::NomaSic => "noma_sic",
        }
    }

    pub fn is_noma(self) -> bool {
        self != Scheme::Oma
    }

    /// Worst-case URLLC access latency in minislots.
    pub fn access_latency(self, params: &SystemParams) -> u32 {
        match self {
            Scheme::Oma => params.l_u,
            _ => 1,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scheme> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// Partial assignment of [`SystemParams`] fields, as read from a flat
/// key-value config file or from command-line flags.
///
/// `alpha_sq` is accepted as an alternative to `alpha`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub alpha: Option<f64>,
    pub alpha_sq: Option<f64>,
    pub beta: Option<f64>,
    pub p_b_db: Option<f64>,
    pub p_u_db: Option<f64>,
    pub fronthaul_c: Option<f64>,
    pub q: Option<f64>,
    pub n_f: Option<u32>,
    pub n_t: Option<u32>,
    pub m_cells: Option<usize>,
    pub l_u: Option<u32>,
    pub eps_u: Option<f64>,
}

impl ParamOverrides {
    pub fn parse(text: &str) -> Result<ParamOverrides> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<ParamOverrides> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Layers `other` on top of `self`; fields set in `other` win.
    pub fn merged(mut self, other: &ParamOverrides) -> ParamOverrides {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        if other.alpha.is_some() || other.alpha_sq.is_some() {
            self.alpha = other.alpha;
            self.alpha_sq = other.alpha_sq;
        }
        take!(
            beta,
            p_b_db,
            p_u_db,
            fronthaul_c,
            q,
            n_f,
            n_t,
            m_cells,
            l_u,
            eps_u
        );
        self
    }

    pub fn apply(&self, p: &mut SystemParams) -> Result<()> {
        match (self.alpha, self.alpha_sq) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either alpha or alpha_sq, not both".into(),
                ))
            }
            (Some(a), None) => p.alpha = a,
            (None, Some(a2)) => {
                if a2 < 0.0 {
                    return Err(Error::Config(format!("alpha_sq = {a2} is negative")));
                }
                p.alpha = a2.sqrt();
            }
            (None, None) => {}
        }
        macro_rules! put {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        put!(
            beta,
            p_b_db,
            p_u_db,
            fronthaul_c,
            q,
            n_f,
            n_t,
            m_cells,
            l_u,
            eps_u
        );
        Ok(())
    }

    /// Defaults with these overrides applied, validated.
    pub fn resolve(&self) -> Result<Params> {
        let mut p = SystemParams::default();
        self.apply(&mut p)?;
        validate(p)
    }
}

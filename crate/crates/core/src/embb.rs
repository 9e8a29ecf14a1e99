//! Per-user eMBB rates for every scheme.
//!
//! Three evaluation routes are provided:
//!
//! - exact finite-M sums over the circulant spectrum (OMA),
//! - Monte Carlo averages of masked log-determinants over random URLLC
//!   activity patterns (puncturing, treat-as-noise, SIC),
//! - M → ∞ limits: the spectral integral for OMA and the fixed-point
//!   characterization for erasure channels (puncturing, SIC).
//!
//! Monte Carlo sample `i` draws its mask from a ChaCha stream selected by
//! `(seed, i)`, so results do not depend on evaluation order or thread count.
//! Puncturing, SIC and treat-as-noise share those uniforms: with the same
//! seed they see coupled masks.

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fronthaul::{
    oma_embb_fraction, oma_embb_power, sigma_q2_oma, sigma_q2_puncturing_at, sigma_q2_sic,
    sigma_q2_tin,
};
use crate::linops::{
    bisect_root, grow_upper_bracket, integrate, logdet_psd, CirculantChannel, DiagonalMask,
};
use crate::params::{Params, Scheme};

pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbbMethod {
    ExactFiniteM,
    MonteCarlo,
    InfiniteM,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbbRateResult {
    pub rate: f64,
    pub method: EmbbMethod,
    pub sigma_q2: f64,
    pub mc_samples: usize,
    pub mc_stderr: f64,
    pub seed: u64,
    pub feasible: bool,
}

impl EmbbRateResult {
    fn exact(rate: f64, method: EmbbMethod, sigma_q2: f64) -> Self {
        EmbbRateResult {
            rate,
            method,
            sigma_q2,
            mc_samples: 0,
            mc_stderr: 0.0,
            seed: 0,
            feasible: true,
        }
    }

    fn infeasible(method: EmbbMethod) -> Self {
        EmbbRateResult {
            rate: 0.0,
            method,
            sigma_q2: f64::INFINITY,
            mc_samples: 0,
            mc_stderr: 0.0,
            seed: 0,
            feasible: false,
        }
    }
}

/// Monte Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub seed: u64,
    pub samples: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 1,
            samples: DEFAULT_SAMPLES,
        }
    }
}

/// Running mean and variance (Welford), mergeable across partial runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &MeanStats) -> MeanStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        MeanStats {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for MeanStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = MeanStats::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// RNG stream for Monte Carlo sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(Error::Domain {
            function: "monte carlo",
            message: "need at least one sample".into(),
        });
    }
    Ok(())
}

fn monte_carlo(
    mc: McConfig,
    sigma_q2: f64,
    per_sample: impl Fn(u64) -> Result<f64> + Sync,
) -> Result<EmbbRateResult> {
    check_samples(mc.samples)?;
    let values: Vec<f64> = (0..mc.samples as u64)
        .into_par_iter()
        .map(&per_sample)
        .collect::<Result<_>>()?;
    let stats: MeanStats = values.into_iter().collect();
    Ok(EmbbRateResult {
        rate: stats.mean(),
        method: EmbbMethod::MonteCarlo,
        sigma_q2,
        mc_samples: mc.samples,
        mc_stderr: stats.stderr(),
        seed: mc.seed,
        feasible: true,
    })
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// OMA rate over M cells via the circulant spectrum:
/// ((1 - 1/L_U)/M)·Σ log₂(1 + λ_m²·P̄_B/(1 + σ_q²)).
pub fn embb_rate_oma_finite(params: &Params) -> Result<EmbbRateResult> {
    let noise = sigma_q2_oma(params);
    let Some(p_bar) = oma_embb_power(params).filter(|_| noise.feasible) else {
        return Ok(EmbbRateResult::infeasible(EmbbMethod::ExactFiniteM));
    };
    let ch = CirculantChannel::new(params.m_cells, params.alpha)?;
    let snr = p_bar / (1.0 + noise.sigma_q2);
    let sum: f64 = ch.eigenvalues().iter().map(|l| log2_1p(l * l * snr)).sum();
    let rate = oma_embb_fraction(params) * sum / params.m_cells as f64;
    Ok(EmbbRateResult::exact(
        rate,
        EmbbMethod::ExactFiniteM,
        noise.sigma_q2,
    ))
}

/// (1 - 1/L_U)·∫₀¹ log₂(1 + (1 + 2α cos 2πθ)²·P̄_B/(1 + σ_q²)) dθ at an
/// explicit quantization noise level.
pub fn oma_spectral_integral(params: &Params, sigma_q2: f64) -> Result<f64> {
    let Some(p_bar) = oma_embb_power(params) else {
        return Ok(0.0);
    };
    let snr = p_bar / (1.0 + sigma_q2);
    let a = params.alpha;
    let v = integrate(
        |t| {
            let l = 1.0 + 2.0 * a * (2.0 * PI * t).cos();
            log2_1p(l * l * snr)
        },
        0.0,
        1.0,
        1e-12,
    )?;
    Ok(oma_embb_fraction(params) * v)
}

/// OMA rate as M → ∞.
pub fn embb_rate_oma_infinite(params: &Params) -> Result<EmbbRateResult> {
    let noise = sigma_q2_oma(params);
    if !noise.feasible {
        return Ok(EmbbRateResult::infeasible(EmbbMethod::InfiniteM));
    }
    let rate = oma_spectral_integral(params, noise.sigma_q2)?;
    Ok(EmbbRateResult::exact(
        rate,
        EmbbMethod::InfiniteM,
        noise.sigma_q2,
    ))
}

/// (1/M)·log₂det(I + S_B·B·H·Hᵀ·B) for one retention mask.
pub fn puncturing_sample(gram: &DMatrix<f64>, s_b: f64, retention: &DiagonalMask) -> Result<f64> {
    let m = gram.nrows();
    let mat = DMatrix::from_fn(m, m, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d + s_b * retention.value(i) * gram[(i, j)] * retention.value(j)
    });
    Ok(logdet_psd(&mat)? / m as f64)
}

fn puncturing_mc_at(
    params: &Params,
    erasure: f64,
    sigma_q2: f64,
    mc: McConfig,
) -> Result<EmbbRateResult> {
    let m = params.m_cells;
    let gram = CirculantChannel::new(m, params.alpha)?.gram();
    let s_b = params.p_b() / (1.0 + sigma_q2);
    monte_carlo(mc, sigma_q2, |i| {
        let mut rng = sample_rng(mc.seed, i);
        let retention = DiagonalMask::draw_activity(&mut rng, m, erasure).complement();
        puncturing_sample(&gram, s_b, &retention)
    })
}

/// Puncturing rate (1/M)·E_B[log₂det(I + S_B·B·H·Hᵀ·B)] by Monte Carlo over
/// retention masks with Bernoulli(1 - q) diagonal.
pub fn embb_rate_puncturing_mc(
    params: &Params,
    seed: u64,
    samples: usize,
) -> Result<EmbbRateResult> {
    check_samples(samples)?;
    let noise = sigma_q2_puncturing_at(params, params.q);
    if !noise.feasible {
        return Ok(EmbbRateResult::infeasible(EmbbMethod::MonteCarlo));
    }
    puncturing_mc_at(params, params.q, noise.sigma_q2, McConfig { seed, samples })
}

/// Solves the fixed point f/(1+f) = ∫ x(θ)/(1 + y·x(θ) + (1-y)·f) dθ over
/// θ ∈ [-½, ½], with x(θ) = (1 + 2α cos 2πθ)²·S_B = Φ(θ) - 1 - σ_q².
///
/// The left side minus the right side is increasing in f and non-positive at
/// f = 0, so the root is bracketed by growing an upper end.
pub fn puncturing_fixed_point(alpha: f64, s_b: f64, y: f64) -> Result<f64> {
    let x = |t: f64| {
        let l = 1.0 + 2.0 * alpha * (2.0 * PI * t).cos();
        l * l * s_b
    };
    let err = RefCell::new(None);
    let g = |f: f64| {
        let inner = integrate(
            |t| x(t) / (1.0 + y * x(t) + (1.0 - y) * f),
            -0.5,
            0.5,
            1e-13,
        );
        match inner {
            Ok(v) => f / (1.0 + f) - v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let g0 = g(0.0);
    if let Some(e) = err.borrow_mut().take() {
        return Err(e);
    }
    if g0 >= 0.0 {
        return Ok(0.0);
    }
    let hi = grow_upper_bracket(g, 0.0, 1.0, 2.0, 200)?;
    let root = bisect_root(g, 0.0, hi, 1e-14);
    if let Some(e) = err.borrow_mut().take() {
        return Err(e);
    }
    root
}

/// ∫₀^{1-erasure} log₂(1 + f(y, S_B)) dy with f from [`puncturing_fixed_point`].
pub fn puncturing_infinite_rate(alpha: f64, s_b: f64, erasure: f64) -> Result<f64> {
    let err = RefCell::new(None);
    let v = integrate(
        |y| match puncturing_fixed_point(alpha, s_b, y) {
            Ok(f) => log2_1p(f),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        1.0 - erasure,
        1e-10,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    v
}

/// Puncturing rate as M → ∞ at the given erasure probability, with σ_q² from
/// the puncturing fronthaul condition at that erasure probability.
pub fn embb_rate_puncturing_infinite(params: &Params, erasure_prob: f64) -> Result<EmbbRateResult> {
    if !(0.0..1.0).contains(&erasure_prob) {
        return Err(Error::Domain {
            function: "embb_rate_puncturing_infinite",
            message: format!("erasure probability {erasure_prob} not in [0, 1)"),
        });
    }
    let noise = sigma_q2_puncturing_at(params, erasure_prob);
    if !noise.feasible {
        return Ok(EmbbRateResult::infeasible(EmbbMethod::InfiniteM));
    }
    let s_b = params.p_b() / (1.0 + noise.sigma_q2);
    let rate = puncturing_infinite_rate(params.alpha, s_b, erasure_prob)?;
    Ok(EmbbRateResult::exact(
        rate,
        EmbbMethod::InfiniteM,
        noise.sigma_q2,
    ))
}

/// Per-draw treat-as-noise rate,
/// (1/M)·[log₂det((1+σ_q²)I + P_B·H·Hᵀ + β²P_U·A) - log₂det((1+σ_q²)I + β²P_U·A)].
pub fn tin_sample(
    params: &Params,
    gram: &DMatrix<f64>,
    sigma_q2: f64,
    activity: &DiagonalMask,
) -> Result<f64> {
    let m = gram.nrows();
    let u = params.urllc_rx_power();
    let p_b = params.p_b();
    let base = |i: usize| 1.0 + sigma_q2 + u * activity.value(i);
    let num = DMatrix::from_fn(m, m, |i, j| {
        let d = if i == j { base(i) } else { 0.0 };
        d + p_b * gram[(i, j)]
    });
    let den: f64 = (0..m).map(|i| base(i).log2()).sum();
    Ok((logdet_psd(&num)? - den) / m as f64)
}

/// Per-draw values behind [`embb_rate_tin_mc`], in sample order.
pub fn tin_samples(params: &Params, seed: u64, samples: usize) -> Result<Vec<f64>> {
    let noise = sigma_q2_tin(params)?;
    if !noise.feasible {
        return Ok(vec![0.0; samples]);
    }
    let m = params.m_cells;
    let gram = CirculantChannel::new(m, params.alpha)?.gram();
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let activity = DiagonalMask::draw_activity(&mut rng, m, params.q);
            tin_sample(params, &gram, noise.sigma_q2, &activity)
        })
        .collect()
}

/// Treat-as-noise rate by Monte Carlo over Bernoulli(q) activity masks.
pub fn embb_rate_tin_mc(params: &Params, seed: u64, samples: usize) -> Result<EmbbRateResult> {
    check_samples(samples)?;
    let noise = sigma_q2_tin(params)?;
    if !noise.feasible {
        return Ok(EmbbRateResult::infeasible(EmbbMethod::MonteCarlo));
    }
    let m = params.m_cells;
    let gram = CirculantChannel::new(m, params.alpha)?.gram();
    let mc = McConfig { seed, samples };
    monte_carlo(mc, noise.sigma_q2, |i| {
        let mut rng = sample_rng(seed, i);
        let activity = DiagonalMask::draw_activity(&mut rng, m, params.q);
        tin_sample(params, &gram, noise.sigma_q2, &activity)
    })
}

/// SIC rate by Monte Carlo: puncturing at erasure probability q·ε_U^D.
pub fn embb_rate_sic_mc(
    params: &Params,
    eps_ud: f64,
    seed: u64,
    samples: usize,
) -> Result<EmbbRateResult> {
    check_samples(samples)?;
    let noise = sigma_q2_sic(params, eps_ud)?;
    if !noise.feasible {
        return Ok(EmbbRateResult::infeasible(EmbbMethod::MonteCarlo));
    }
    puncturing_mc_at(
        params,
        params.q * eps_ud,
        noise.sigma_q2,
        McConfig { seed, samples },
    )
}

/// SIC rate as M → ∞.
pub fn embb_rate_sic_infinite(params: &Params, eps_ud: f64) -> Result<EmbbRateResult> {
    sigma_q2_sic(params, eps_ud)?;
    embb_rate_puncturing_infinite(params, params.q * eps_ud)
}

/// Finite-M eMBB rate of `scheme`: exact for OMA, Monte Carlo otherwise.
/// SIC cancels with the NOMA decoding budget ε_U^D = ε_U.
pub fn embb_rate(params: &Params, scheme: Scheme, mc: McConfig) -> Result<EmbbRateResult> {
    match scheme {
        Scheme::Oma => embb_rate_oma_finite(params),
        Scheme::NomaPuncturing => embb_rate_puncturing_mc(params, mc.seed, mc.samples),
        Scheme::NomaTreatAsNoise => embb_rate_tin_mc(params, mc.seed, mc.samples),
        Scheme::NomaSic => embb_rate_sic_mc(params, params.eps_u, mc.seed, mc.samples),
    }
}

/// M → ∞ eMBB rate of `scheme`; `None` for treat-as-noise, which has no
/// closed limit.
pub fn embb_rate_infinite(params: &Params, scheme: Scheme) -> Result<Option<EmbbRateResult>> {
    Ok(match scheme {
        Scheme::Oma => Some(embb_rate_oma_infinite(params)?),
        Scheme::NomaPuncturing => Some(embb_rate_puncturing_infinite(params, params.q)?),
        Scheme::NomaTreatAsNoise => None,
        Scheme::NomaSic => Some(embb_rate_sic_infinite(params, params.eps_u)?),
    })
}

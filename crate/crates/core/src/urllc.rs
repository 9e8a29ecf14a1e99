//! URLLC rate, access latency and reliability.
//!
//! Rates use the normal approximation log₂(1 + S) - √(V/n_F)·Q⁻¹(ε_U^D) with
//! dispersion V = S/(1 + S), evaluated exactly in that form. Under OMA the
//! target ε_U is split between blockage at the single transmission
//! opportunity and decoding failures; under NOMA every packet is sent at once
//! and ε_U^D = ε_U.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{Params, Scheme};
use crate::specialfn::{binom_pmf, q_inv};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UrllcPerf {
    /// R_U in bit/s/Hz, 0 when infeasible.
    pub rate: f64,
    /// Decoding error budget ε_U^D (0 when no budget is left).
    pub eps_ud: f64,
    /// Worst-case access latency in minislots.
    pub access_latency: u32,
    /// Probability that a packet is dropped before transmission.
    pub p_block: f64,
    pub feasible: bool,
}

/// log₂(1 + snr) - √(V/n_F)·Q⁻¹(eps) with V = snr/(1 + snr). May be negative.
pub fn normal_approx_rate(snr: f64, n_f: u32, eps: f64) -> Result<f64> {
    let dispersion = snr / (1.0 + snr);
    let backoff = (dispersion / f64::from(n_f)).sqrt() * q_inv(eps)?;
    Ok(snr.ln_1p() / std::f64::consts::LN_2 - backoff)
}

/// Blockage and transmission weights of the OMA error probability,
/// Pr[E_U] = p_block + p_tx_weight·ε_U^D, with N ~ Bin(L_U - 1, q) extra
/// packets competing for the opportunity.
pub fn blocking_terms(l_u: u32, q: f64) -> (f64, f64) {
    let trials = l_u.saturating_sub(1);
    let mut p_block = 0.0;
    let mut p_tx = 0.0;
    for n in 0..=trials {
        let p = binom_pmf(n, trials, q).expect("n <= trials");
        let share = 1.0 / f64::from(n + 1);
        p_tx += p * share;
        if n >= 1 {
            p_block += p * f64::from(n) * share;
        }
    }
    (p_block, p_tx)
}

/// Decoding budget ε_U^D left after blockage, or `None` when blockage alone
/// uses up ε_U.
pub fn solve_eps_ud_oma(params: &Params) -> Option<f64> {
    let (p_block, p_tx) = blocking_terms(params.l_u, params.q);
    let eps_ud = (params.eps_u - p_block) / p_tx;
    (eps_ud > 0.0 && eps_ud < 1.0).then_some(eps_ud)
}

fn from_rate(raw: f64, eps_ud: f64, access_latency: u32, p_block: f64) -> UrllcPerf {
    let feasible = raw > 0.0;
    UrllcPerf {
        rate: raw.max(0.0),
        eps_ud,
        access_latency,
        p_block,
        feasible,
    }
}

/// OMA rate at a given decoding budget: interference-free, S = β²P_U.
pub fn urllc_rate_oma(params: &Params, eps_ud: f64) -> Result<UrllcPerf> {
    if !(eps_ud > 0.0 && eps_ud < 1.0) {
        return Err(Error::Domain {
            function: "urllc_rate_oma",
            message: format!("eps_ud = {eps_ud} not in (0, 1)"),
        });
    }
    let raw = normal_approx_rate(params.urllc_rx_power(), params.n_f, eps_ud)?;
    let (p_block, _) = blocking_terms(params.l_u, params.q);
    Ok(from_rate(raw, eps_ud, params.l_u, p_block))
}

/// OMA performance with ε_U^D solved from the target ε_U.
pub fn urllc_perf_oma(params: &Params) -> Result<UrllcPerf> {
    match solve_eps_ud_oma(params) {
        Some(eps_ud) => urllc_rate_oma(params, eps_ud),
        None => Ok(UrllcPerf {
            rate: 0.0,
            eps_ud: 0.0,
            access_latency: params.l_u,
            p_block: blocking_terms(params.l_u, params.q).0,
            feasible: false,
        }),
    }
}

/// URLLC SINR under NOMA, β²P_U / (1 + (1+2α²)P_B).
pub fn noma_sinr(params: &Params) -> f64 {
    params.urllc_rx_power() / (1.0 + params.embb_rx_power())
}

/// NOMA rate: eMBB treated as noise at the EN, access latency 1, ε_U^D = ε_U.
pub fn urllc_rate_noma(params: &Params) -> Result<UrllcPerf> {
    let raw = normal_approx_rate(noma_sinr(params), params.n_f, params.eps_u)?;
    Ok(from_rate(raw, params.eps_u, 1, 0.0))
}

pub fn urllc_perf(params: &Params, scheme: Scheme) -> Result<UrllcPerf> {
    match scheme {
        Scheme::Oma => urllc_perf_oma(params),
        _ => urllc_rate_noma(params),
    }
}

//! Quantization noise implied by the fronthaul capacity C for each scheme.
//!
//! Every EN compresses its samples point-to-point with Gaussian test
//! channels, so the rate spent per sample is log₂(1 + signal/σ_q²). The
//! schemes differ in which samples are forwarded and what side information
//! rides along with them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linops::{bisect_root, grow_upper_bracket};
use crate::params::{Params, Scheme};
use crate::specialfn::binary_entropy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizationNoise {
    /// +∞ when infeasible.
    pub sigma_q2: f64,
    pub scheme: Scheme,
    pub feasible: bool,
}

impl QuantizationNoise {
    fn ok(sigma_q2: f64, scheme: Scheme) -> Self {
        QuantizationNoise {
            sigma_q2,
            scheme,
            feasible: true,
        }
    }

    fn infeasible(scheme: Scheme) -> Self {
        QuantizationNoise {
            sigma_q2: f64::INFINITY,
            scheme,
            feasible: false,
        }
    }
}

/// 2^x - 1 without cancellation for small x.
fn exp2_m1(x: f64) -> f64 {
    (x * std::f64::consts::LN_2).exp_m1()
}

/// Fraction of minislots left to eMBB under OMA, 1 - 1/L_U.
pub fn oma_embb_fraction(params: &Params) -> f64 {
    1.0 - 1.0 / f64::from(params.l_u)
}

/// eMBB power under OMA, P̄_B = P_B / (1 - 1/L_U). `None` when L_U = 1.
pub fn oma_embb_power(params: &Params) -> Option<f64> {
    let frac = oma_embb_fraction(params);
    (frac > 0.0).then(|| params.p_b() / frac)
}

/// σ_q² = (1 + (1+2α²)P̄_B) / (2^{C/(1-1/L_U)} - 1).
pub fn sigma_q2_oma(params: &Params) -> QuantizationNoise {
    let Some(p_bar) = oma_embb_power(params) else {
        return QuantizationNoise::infeasible(Scheme::Oma);
    };
    if params.fronthaul_c <= 0.0 {
        return QuantizationNoise::infeasible(Scheme::Oma);
    }
    let frac = oma_embb_fraction(params);
    let signal = 1.0 + (1.0 + 2.0 * params.alpha * params.alpha) * p_bar;
    QuantizationNoise::ok(signal / exp2_m1(params.fronthaul_c / frac), Scheme::Oma)
}

/// Quantization noise when a fraction `erasure` of minislots is discarded at
/// the EN and the erasure pattern is sent losslessly at H(erasure) bits per
/// minislot.
fn sigma_q2_with_erasures(params: &Params, erasure: f64, scheme: Scheme) -> QuantizationNoise {
    if erasure >= 1.0 {
        return QuantizationNoise::infeasible(scheme);
    }
    let n_f = f64::from(params.n_f);
    let budget = n_f * params.fronthaul_c - binary_entropy(erasure);
    if budget <= 0.0 {
        return QuantizationNoise::infeasible(scheme);
    }
    let exponent = budget / (n_f * (1.0 - erasure));
    let signal = 1.0 + params.embb_rx_power();
    QuantizationNoise::ok(signal / exp2_m1(exponent), scheme)
}

/// Puncturing: only URLLC-free minislots are quantized.
///
/// Feasible iff n_F·C > H(q).
pub fn sigma_q2_puncturing(params: &Params) -> QuantizationNoise {
    sigma_q2_with_erasures(params, params.q, Scheme::NomaPuncturing)
}

/// Puncturing-style noise at an arbitrary erasure probability.
pub fn sigma_q2_puncturing_at(params: &Params, erasure: f64) -> QuantizationNoise {
    sigma_q2_with_erasures(params, erasure, Scheme::NomaPuncturing)
}

/// SIC: as puncturing, with erasure probability q·ε_U^D.
pub fn sigma_q2_sic(params: &Params, eps_ud: f64) -> Result<QuantizationNoise> {
    if !(0.0..=1.0).contains(&eps_ud) {
        return Err(Error::Domain {
            function: "sigma_q2_sic",
            message: format!("eps_ud = {eps_ud} not in [0, 1]"),
        });
    }
    Ok(sigma_q2_with_erasures(
        params,
        params.q * eps_ud,
        Scheme::NomaSic,
    ))
}

/// Fronthaul rate (bits per sample) consumed by treat-as-noise forwarding at
/// quantization noise `sigma_q2`, minus C.
pub fn tin_residual(params: &Params, sigma_q2: f64) -> f64 {
    let quiet = 1.0 + params.embb_rx_power();
    let busy = quiet + params.urllc_rx_power();
    // a class with zero weight contributes nothing, even where its log is inf
    let term = |w: f64, power: f64| {
        if w == 0.0 {
            0.0
        } else {
            w * (power / sigma_q2).ln_1p() / std::f64::consts::LN_2
        }
    };
    term(params.q, busy) + term(1.0 - params.q, quiet) - params.fronthaul_c
}

/// Treat-as-noise: every sample is forwarded, with one common σ_q² for the
/// URLLC-active and URLLC-free classes. Solved by bisection on ln σ_q².
pub fn sigma_q2_tin(params: &Params) -> Result<QuantizationNoise> {
    let scheme = Scheme::NomaTreatAsNoise;
    if params.fronthaul_c <= 0.0 {
        return Ok(QuantizationNoise::infeasible(scheme));
    }
    // increasing in u = ln σ_q²
    let g = |u: f64| -tin_residual(params, u.exp());
    let lo = f64::MIN_POSITIVE.ln();
    if g(lo) >= 0.0 {
        return Err(Error::Bracket {
            lo,
            hi: lo,
            g_lo: g(lo),
            g_hi: g(lo),
        });
    }
    let hi = grow_upper_bracket(g, lo, -lo + 1.0, 2.0, 64)?;
    let u = bisect_root(g, lo, hi, 1e-13)?;
    Ok(QuantizationNoise::ok(u.exp(), scheme))
}

/// Quantization noise for `scheme` at these parameters.
///
/// SIC uses ε_U^D = ε_U, the NOMA decoding budget.
pub fn sigma_q2_for(params: &Params, scheme: Scheme) -> Result<QuantizationNoise> {
    match scheme {
        Scheme::Oma => Ok(sigma_q2_oma(params)),
        Scheme::NomaPuncturing => Ok(sigma_q2_puncturing(params)),
        Scheme::NomaTreatAsNoise => sigma_q2_tin(params),
        Scheme::NomaSic => sigma_q2_sic(params, params.eps_u),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate, SystemParams};

    fn defaults() -> Params {
        validate(SystemParams::default()).unwrap()
    }

    #[test]
    fn oma_hand_value() {
        let p = defaults()
            .with(|s| {
                s.alpha = 0.0;
                s.p_b_db = 0.0;
                s.l_u = 2;
                s.fronthaul_c = 2.0;
            })
            .unwrap();
        let n = sigma_q2_oma(&p);
        assert!(n.feasible);
        // P̄_B = 2, σ² = 3 / (2^4 - 1)
        assert!((n.sigma_q2 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn oma_limits() {
        let p = defaults().with(|s| s.fronthaul_c = 60.0).unwrap();
        let p_bar = oma_embb_power(&p).unwrap();
        let scale = 1.0 + (1.0 + 2.0 * p.alpha * p.alpha) * p_bar;
        assert!(sigma_q2_oma(&p).sigma_q2 < 1e-14 * scale);

        let one = defaults().with(|s| s.l_u = 1).unwrap();
        assert!(!sigma_q2_oma(&one).feasible);
        assert!(oma_embb_power(&one).is_none());
        let zero_c = defaults().with(|s| s.fronthaul_c = 0.0).unwrap();
        assert!(!sigma_q2_oma(&zero_c).feasible);
    }

    #[test]
    fn puncturing_reduces_without_urllc() {
        let p = defaults().with(|s| s.q = 0.0).unwrap();
        let want = (1.0 + p.embb_rx_power()) / (2f64.powf(p.fronthaul_c) - 1.0);
        assert!((sigma_q2_puncturing(&p).sigma_q2 - want).abs() < 1e-14 * want);
        let p1 = defaults().with(|s| s.q = 1.0).unwrap();
        assert!(!sigma_q2_puncturing(&p1).feasible);
    }

    #[test]
    fn puncturing_matches_constraint_inversion() {
        let p = defaults()
            .with(|s| {
                s.alpha = 0.4f64.sqrt();
                s.q = 0.3;
                s.fronthaul_c = 2.0;
                s.n_f = 10;
            })
            .unwrap();
        // n_F C = n_F (1-q) log2(1 + N/σ²) + H(q), bisected on ln σ²
        let n = 1.0 + p.embb_rx_power();
        let residual =
            |u: f64| 10.0 * 0.7 * (1.0 + n / u.exp()).log2() + binary_entropy(0.3) - 10.0 * 2.0;
        let (mut lo, mut hi) = (-50.0f64, 50.0f64);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = (0.5 * (lo + hi)).exp();
        let got = sigma_q2_puncturing(&p).sigma_q2;
        assert!(
            (got - oracle).abs() < 1e-10 * oracle.max(1.0),
            "{got} vs {oracle}"
        );
    }

    #[test]
    fn puncturing_feasibility_boundary() {
        for q in [0.01, 0.1, 0.3, 0.5, 0.9] {
            let c_star = binary_entropy(q) / 10.0;
            let at = |c: f64| {
                let p = defaults()
                    .with(|s| {
                        s.q = q;
                        s.fronthaul_c = c;
                    })
                    .unwrap();
                sigma_q2_puncturing(&p)
            };
            assert!(!at(c_star - 1e-6).feasible);
            let just = at(c_star + 1e-6);
            assert!(just.feasible);
            assert!(just.sigma_q2 > 1e3);
        }
    }

    #[test]
    fn tin_single_class_reductions() {
        let p0 = defaults().with(|s| s.q = 0.0).unwrap();
        let want0 = (1.0 + p0.embb_rx_power()) / (2f64.powf(p0.fronthaul_c) - 1.0);
        let got0 = sigma_q2_tin(&p0).unwrap().sigma_q2;
        assert!((got0 - want0).abs() < 1e-10 * want0);

        let p1 = defaults().with(|s| s.q = 1.0).unwrap();
        let want1 =
            (1.0 + p1.urllc_rx_power() + p1.embb_rx_power()) / (2f64.powf(p1.fronthaul_c) - 1.0);
        let got1 = sigma_q2_tin(&p1).unwrap().sigma_q2;
        assert!((got1 - want1).abs() < 1e-10 * want1);
    }

    #[test]
    fn tin_root_self_consistent() {
        for c in [0.1, 1.5, 4.0, 20.0, 60.0] {
            let p = defaults()
                .with(|s| {
                    s.q = 0.3;
                    s.fronthaul_c = c;
                })
                .unwrap();
            let n = sigma_q2_tin(&p).unwrap();
            assert!(n.feasible && n.sigma_q2 > 0.0);
            assert!(tin_residual(&p, n.sigma_q2).abs() < 1e-9, "C = {c}");
        }
        let p = defaults().with(|s| s.fronthaul_c = 0.0).unwrap();
        assert!(!sigma_q2_tin(&p).unwrap().feasible);
    }

    #[test]
    fn sic_substitution() {
        let p = defaults().with(|s| s.q = 0.3).unwrap();
        let punc = sigma_q2_puncturing(&p).sigma_q2;
        assert_eq!(sigma_q2_sic(&p, 1.0).unwrap().sigma_q2, punc);
        let q0 = sigma_q2_puncturing_at(&p, 0.0).sigma_q2;
        assert_eq!(sigma_q2_sic(&p, 0.0).unwrap().sigma_q2, q0);
        assert!((sigma_q2_sic(&p, 1e-12).unwrap().sigma_q2 - q0).abs() < 1e-9 * q0);
        let at = sigma_q2_puncturing_at(&p, 0.3 * 1e-3).sigma_q2;
        assert_eq!(sigma_q2_sic(&p, 1e-3).unwrap().sigma_q2, at);
        assert!(sigma_q2_sic(&p, 1.5).is_err());
    }

    #[test]
    fn decreasing_in_capacity() {
        let grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
        for scheme in Scheme::ALL {
            let values: Vec<f64> = grid
                .iter()
                .map(|&c| {
                    let p = defaults()
                        .with(|s| {
                            s.q = 0.3;
                            s.fronthaul_c = c;
                        })
                        .unwrap();
                    let n = sigma_q2_for(&p, scheme).unwrap();
                    assert!(n.feasible);
                    n.sigma_q2
                })
                .collect();
            for w in values.windows(2) {
                assert!(w[1] < w[0], "{scheme}: {values:?}");
            }
        }
    }

    #[test]
    fn tin_costs_resolution() {
        for q in [0.01, 0.3, 0.7] {
            for c in [0.5, 2.0, 6.0] {
                let p = defaults()
                    .with(|s| {
                        s.q = q;
                        s.fronthaul_c = c;
                    })
                    .unwrap();
                let closed = (1.0 + p.embb_rx_power()) / (2f64.powf(c) - 1.0);
                assert!(sigma_q2_tin(&p).unwrap().sigma_q2 >= closed);
            }
        }
    }
}

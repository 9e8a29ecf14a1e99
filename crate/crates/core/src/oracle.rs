//! Brute-force references for the Monte Carlo estimators and the blocking
//! analysis.
//!
//! Nothing here goes through `linops`: the channel is rebuilt from its
//! definition and determinants come from a plain LU factorization, so these
//! routines can check the production path rather than echo it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embb::{
    embb_rate_oma_finite, embb_rate_puncturing_infinite, embb_rate_puncturing_mc, embb_rate_tin_mc,
    oma_spectral_integral,
};
use crate::error::{Error, Result};
use crate::fronthaul::{sigma_q2_puncturing, sigma_q2_tin};
use crate::params::Params;
use crate::urllc::blocking_terms;

pub const MAX_ENUMERATION_CELLS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationKind {
    Puncturing,
    Tin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnumerationReport {
    pub exact_value: f64,
    /// Masks with non-zero probability (2^M when 0 < q < 1).
    pub terms: usize,
    pub max_term_weight: f64,
    pub weight_sum: f64,
}

type Mat = Vec<Vec<f64>>;

fn wyner_gram(m: usize, alpha: f64) -> Mat {
    let h = |i: usize, j: usize| {
        let d = (i + m - j) % m;
        if d == 0 {
            1.0
        } else if d == 1 || d == m - 1 {
            alpha
        } else {
            0.0
        }
    };
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| (0..m).map(|k| h(i, k) * h(j, k)).sum())
                .collect()
        })
        .collect()
}

/// log₂|det| by Gaussian elimination with partial pivoting. Fails on a
/// singular or negative-determinant input.
pub fn lu_log2_det(mut a: Mat) -> Result<f64> {
    let n = a.len();
    let mut log_abs = 0.0;
    let mut sign = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return Err(Error::NotPositiveDefinite {
                dim: n,
                min_eig: 0.0,
                max_eig: f64::NAN,
            });
        }
        if pivot != col {
            a.swap(pivot, col);
            sign = -sign;
        }
        let p = a[col][col];
        if p < 0.0 {
            sign = -sign;
        }
        log_abs += p.abs().log2();
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for row in lower.iter_mut() {
            let factor = row[col] / p;
            if factor != 0.0 {
                for (x, &y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * y;
                }
            }
        }
    }
    if sign < 0.0 {
        return Err(Error::NotPositiveDefinite {
            dim: n,
            min_eig: f64::NAN,
            max_eig: f64::NAN,
        });
    }
    Ok(log_abs)
}

/// Exact mask average of the puncturing or treat-as-noise log-det rate,
/// summing all 2^M Bernoulli-weighted masks.
pub fn exact_masked_logdet_mean(
    params: &Params,
    kind: EnumerationKind,
) -> Result<EnumerationReport> {
    let m = params.m_cells;
    if m > MAX_ENUMERATION_CELLS {
        return Err(Error::Domain {
            function: "exact_masked_logdet_mean",
            message: format!("{m} cells exceeds enumeration limit {MAX_ENUMERATION_CELLS}"),
        });
    }
    let gram = wyner_gram(m, params.alpha);
    let q = params.q;
    let sigma_q2 = match kind {
        EnumerationKind::Puncturing => sigma_q2_puncturing(params),
        EnumerationKind::Tin => sigma_q2_tin(params)?,
    };
    if !sigma_q2.feasible {
        return Ok(EnumerationReport {
            exact_value: 0.0,
            terms: 0,
            max_term_weight: 0.0,
            weight_sum: 0.0,
        });
    }
    let sigma_q2 = sigma_q2.sigma_q2;

    let mut total = 0.0;
    let mut weight_sum = 0.0;
    let mut max_w: f64 = 0.0;
    let mut terms = 0;
    for bits in 0u32..(1 << m) {
        // bit k set = URLLC active in cell k
        let active: Vec<bool> = (0..m).map(|k| bits >> k & 1 == 1).collect();
        let ones = active.iter().filter(|&&a| a).count() as i32;
        let w = q.powi(ones) * (1.0 - q).powi(m as i32 - ones);
        if w == 0.0 {
            continue;
        }
        let value = match kind {
            EnumerationKind::Puncturing => {
                let s_b = params.p_b() / (1.0 + sigma_q2);
                let keep = |i: usize| if active[i] { 0.0 } else { 1.0 };
                let mat = (0..m)
                    .map(|i| {
                        (0..m)
                            .map(|j| {
                                let d = if i == j { 1.0 } else { 0.0 };
                                d + s_b * keep(i) * gram[i][j] * keep(j)
                            })
                            .collect()
                    })
                    .collect();
                lu_log2_det(mat)? / m as f64
            }
            EnumerationKind::Tin => {
                let u = params.urllc_rx_power();
                let diag = |i: usize| 1.0 + sigma_q2 + if active[i] { u } else { 0.0 };
                let num = (0..m)
                    .map(|i| {
                        (0..m)
                            .map(|j| params.p_b() * gram[i][j] + if i == j { diag(i) } else { 0.0 })
                            .collect()
                    })
                    .collect();
                let den = (0..m)
                    .map(|i| (0..m).map(|j| if i == j { diag(i) } else { 0.0 }).collect())
                    .collect();
                (lu_log2_det(num)? - lu_log2_det(den)?) / m as f64
            }
        };
        total += w * value;
        weight_sum += w;
        max_w = max_w.max(w);
        terms += 1;
    }
    Ok(EnumerationReport {
        exact_value: total,
        terms,
        max_term_weight: max_w,
        weight_sum,
    })
}

/// Empirical URLLC access statistics over simulated OMA windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccessSimulation {
    pub windows: u64,
    pub packets: u64,
    pub blocked: u64,
    pub decoding_failures: u64,
    /// Fraction of generated packets dropped before transmission.
    pub p_block: f64,
    pub p_block_stderr: f64,
    /// Fraction of generated packets lost (dropped or decoded in error).
    pub pr_error: f64,
    pub pr_error_stderr: f64,
}

#[derive(Default)]
struct RatioSums {
    x: f64,
    xx: f64,
    xy: f64,
}

impl RatioSums {
    fn push(&mut self, x: f64, y: f64) {
        self.x += x;
        self.xx += x * x;
        self.xy += x * y;
    }

    /// Ratio estimate Σx/Σy and its delta-method standard error.
    fn finish(&self, sum_y: f64, sum_yy: f64, n: f64) -> (f64, f64) {
        if sum_y == 0.0 {
            return (0.0, 0.0);
        }
        let r = self.x / sum_y;
        let resid = (self.xx - 2.0 * r * self.xy + r * r * sum_yy) / n;
        let mean_y = sum_y / n;
        (r, (resid.max(0.0) / n).sqrt() / mean_y)
    }
}

/// Minislot-level simulation of OMA access: each of the L_U minislots in a
/// window generates a packet with probability q, one queued packet is picked
/// uniformly for the opportunity and the rest are dropped, and the
/// transmitted packet fails with probability `eps_ud`.
pub fn simulate_urllc_access(
    params: &Params,
    eps_ud: f64,
    windows: u64,
    seed: u64,
) -> Result<AccessSimulation> {
    if windows == 0 {
        return Err(Error::Domain {
            function: "simulate_urllc_access",
            message: "need at least one window".into(),
        });
    }
    if !(0.0..=1.0).contains(&eps_ud) {
        return Err(Error::Domain {
            function: "simulate_urllc_access",
            message: format!("eps_ud = {eps_ud} not in [0, 1]"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut packets, mut blocked, mut failures) = (0u64, 0u64, 0u64);
    let (mut sum_yy, mut block, mut error) = (0.0, RatioSums::default(), RatioSums::default());
    let mut queue: Vec<u32> = Vec::with_capacity(params.l_u as usize);
    for _ in 0..windows {
        queue.clear();
        for slot in 0..params.l_u {
            if rng.random::<f64>() < params.q {
                queue.push(slot);
            }
        }
        let n = queue.len() as u64;
        let mut failed = 0u64;
        if n > 0 {
            let _chosen = queue[rng.random_range(0..queue.len())];
            if rng.random::<f64>() < eps_ud {
                failed = 1;
            }
        }
        let dropped = n.saturating_sub(1);
        packets += n;
        blocked += dropped;
        failures += failed;
        let y = n as f64;
        sum_yy += y * y;
        block.push(dropped as f64, y);
        error.push((dropped + failed) as f64, y);
    }
    let nw = windows as f64;
    let (p_block, p_block_stderr) = block.finish(packets as f64, sum_yy, nw);
    let (pr_error, pr_error_stderr) = error.finish(packets as f64, sum_yy, nw);
    Ok(AccessSimulation {
        windows,
        packets,
        blocked,
        decoding_failures: failures,
        p_block,
        p_block_stderr,
        pr_error,
        pr_error_stderr,
    })
}

/// Result of one oracle cross-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: String, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name,
            passed,
            detail,
        }
    }
}

/// Runs the oracle cross-checks around `base`: mask enumeration against
/// Monte Carlo, the blocking simulator against the closed form, the spectral
/// sum against its integral and the erasure fixed point against the spectral
/// integral.
pub fn cross_checks(
    base: &Params,
    seed: u64,
    samples: usize,
    windows: u64,
) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    for q in [0.1, 0.3, 0.6] {
        let p = base.with(|s| {
            s.m_cells = 8;
            s.q = q;
        })?;
        let punc = embb_rate_puncturing_mc(&p, seed, samples)?;
        let exact = exact_masked_logdet_mean(&p, EnumerationKind::Puncturing)?.exact_value;
        let z = (punc.rate - exact).abs() / punc.mc_stderr.max(f64::MIN_POSITIVE);
        out.push(CheckOutcome::new(
            format!("puncturing MC vs enumeration (M=8, q={q})"),
            z <= 4.0,
            format!(
                "mc {:.6} ± {:.2e}, exact {exact:.6}, {z:.2} se",
                punc.rate, punc.mc_stderr
            ),
        ));

        let tin = embb_rate_tin_mc(&p, seed, samples)?;
        let exact = exact_masked_logdet_mean(&p, EnumerationKind::Tin)?.exact_value;
        let z = (tin.rate - exact).abs() / tin.mc_stderr.max(f64::MIN_POSITIVE);
        out.push(CheckOutcome::new(
            format!("treat-as-noise MC vs enumeration (M=8, q={q})"),
            z <= 4.0,
            format!(
                "mc {:.6} ± {:.2e}, exact {exact:.6}, {z:.2} se",
                tin.rate, tin.mc_stderr
            ),
        ));
    }

    for l_u in [1, 2, 4] {
        for q in [0.01, 0.1, 0.5] {
            let p = base.with(|s| {
                s.l_u = l_u;
                s.q = q;
            })?;
            let eps_ud = 0.01;
            let sim = simulate_urllc_access(&p, eps_ud, windows, seed)?;
            let (b, t) = blocking_terms(l_u, q);
            let analytic = b + t * eps_ud;
            let dev = (sim.pr_error - analytic).abs();
            out.push(CheckOutcome::new(
                format!("access simulation vs closed form (L_U={l_u}, q={q})"),
                dev <= 3.0 * sim.pr_error_stderr,
                format!(
                    "empirical {:.5} ± {:.1e}, analytic {analytic:.5}",
                    sim.pr_error, sim.pr_error_stderr
                ),
            ));
        }
    }

    for alpha in [0.0, 0.2, 0.5, 1.0] {
        let p = base.with(|s| {
            s.m_cells = 512;
            s.alpha = alpha;
        })?;
        let finite = embb_rate_oma_finite(&p)?;
        let integral = oma_spectral_integral(&p, finite.sigma_q2)?;
        let dev = (finite.rate - integral).abs();
        out.push(CheckOutcome::new(
            format!("OMA spectral sum (M=512) vs integral (alpha={alpha})"),
            dev <= 1e-6,
            format!("sum {:.9}, integral {integral:.9}", finite.rate),
        ));
    }

    let p = base.with(|s| {
        s.q = 0.0;
        s.fronthaul_c = 60.0;
    })?;
    let fp = embb_rate_puncturing_infinite(&p, 0.0)?;
    let integral = spectral_integral(p.alpha, p.p_b());
    out.push(CheckOutcome::new(
        "erasure fixed point vs spectral integral (q=0, C=60)".into(),
        (fp.rate - integral).abs() <= 1e-4,
        format!("fixed point {:.8}, integral {integral:.8}", fp.rate),
    ));

    Ok(out)
}

/// ∫₀¹ log₂(1 + (1 + 2α cos 2πθ)²·snr) dθ by a fixed 4096-point midpoint
/// rule, which is spectrally accurate for this periodic integrand.
pub fn spectral_integral(alpha: f64, snr: f64) -> f64 {
    let n = 4096;
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) / n as f64;
            let l = 1.0 + 2.0 * alpha * (2.0 * PI * t).cos();
            (1.0 + l * l * snr).log2()
        })
        .sum::<f64>()
        / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate, SystemParams};

    fn defaults() -> Params {
        validate(SystemParams::default()).unwrap()
    }

    #[test]
    fn lu_matches_known_determinants() {
        assert_eq!(
            lu_log2_det(vec![vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap(),
            3.0
        );
        // [[0, 2], [1, 0]] has det -2: rejected
        assert!(lu_log2_det(vec![vec![0.0, 2.0], vec![1.0, 0.0]]).is_err());
        let v = lu_log2_det(vec![vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((v - 11f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn enumeration_term_counts() {
        let p = defaults().with(|s| {
            s.m_cells = 3;
            s.q = 0.0;
        });
        let r = exact_masked_logdet_mean(&p.unwrap(), EnumerationKind::Puncturing).unwrap();
        assert_eq!(r.terms, 1);
        assert_eq!(r.max_term_weight, 1.0);

        let p = defaults()
            .with(|s| {
                s.m_cells = 3;
                s.q = 0.5;
            })
            .unwrap();
        for kind in [EnumerationKind::Puncturing, EnumerationKind::Tin] {
            let r = exact_masked_logdet_mean(&p, kind).unwrap();
            assert_eq!(r.terms, 8);
            assert_eq!(r.max_term_weight, 0.125);
            assert!((r.weight_sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_weights_normalize() {
        for q in [0.01, 0.3, 0.77] {
            let p = defaults()
                .with(|s| {
                    s.m_cells = 10;
                    s.q = q;
                })
                .unwrap();
            let r = exact_masked_logdet_mean(&p, EnumerationKind::Tin).unwrap();
            assert_eq!(r.terms, 1024);
            assert!((r.weight_sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_cost_guard() {
        let p = defaults().with(|s| s.m_cells = 13).unwrap();
        assert!(exact_masked_logdet_mean(&p, EnumerationKind::Puncturing).is_err());
    }

    #[test]
    fn simulation_edge_cases() {
        let p = defaults().with(|s| s.q = 0.0).unwrap();
        let sim = simulate_urllc_access(&p, 0.01, 10_000, 1).unwrap();
        assert_eq!((sim.p_block, sim.pr_error), (0.0, 0.0));

        let p = defaults()
            .with(|s| {
                s.l_u = 1;
                s.q = 0.5;
            })
            .unwrap();
        let sim = simulate_urllc_access(&p, 0.01, 200_000, 2).unwrap();
        assert_eq!(sim.blocked, 0);
        assert!((sim.pr_error - 0.01).abs() <= 3.0 * sim.pr_error_stderr);
    }

    #[test]
    fn simulated_blocking_matches_closed_form() {
        let p = defaults()
            .with(|s| {
                s.l_u = 2;
                s.q = 0.5;
            })
            .unwrap();
        let sim = simulate_urllc_access(&p, 0.0, 1_000_000, 3).unwrap();
        assert!((sim.p_block - 0.25).abs() <= 3.0 * sim.p_block_stderr);
        assert!(sim.p_block_stderr > 0.0);
    }

    #[test]
    fn spectral_integral_reference() {
        let snr = 3.0;
        assert!((spectral_integral(0.0, snr) - 2.0).abs() < 1e-14);
    }
}

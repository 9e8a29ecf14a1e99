//! Scalar special functions used by the rate formulas.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Gaussian tail probability Pr[N(0,1) > x].
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`q_func`] on (0, 1).
///
/// Newton iterations from a rational starting guess, kept inside a shrinking
/// bisection bracket so a bad step can never escape.
pub fn q_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain {
            function: "q_inv",
            message: format!("eps = {eps} not in (0, 1)"),
        });
    }
    if eps == 0.5 {
        return Ok(0.0);
    }
    if eps > 0.5 {
        return q_inv(1.0 - eps).map(|x| -x);
    }

    // Abramowitz & Stegun 26.2.23, |error| < 4.5e-4
    let t = (-2.0 * eps.ln()).sqrt();
    let mut x = t
        - (2.515517 + 0.802853 * t + 0.010328 * t * t)
            / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);

    // q_func is decreasing: q_func(lo) >= eps >= q_func(hi)
    let (mut lo, mut hi) = (0.0, 40.0);
    for _ in 0..200 {
        let r = q_func(x) - eps;
        if r > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = normal_pdf(x);
        let mut next = if pdf > 0.0 { x + r / pdf } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-14 * x.abs().max(1.0) || hi - lo <= 1e-14 {
            break;
        }
    }
    Ok(x)
}

/// Binary entropy in bits, with 0·log 0 = 0.
pub fn binary_entropy(q: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(q) + term(1.0 - q)
}

/// Binomial probability mass Pr[Bin(trials, q) = n].
pub fn binom_pmf(n: u32, trials: u32, q: f64) -> Result<f64> {
    if n > trials {
        return Err(Error::Domain {
            function: "binom_pmf",
            message: format!("n = {n} exceeds trials = {trials}"),
        });
    }
    let k = n.min(trials - n);
    let mut coeff = 1.0;
    for i in 0..k {
        coeff = coeff * f64::from(trials - i) / f64::from(i + 1);
    }
    Ok(coeff * q.powi(n as i32) * (1.0 - q).powi((trials - n) as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [a, b] with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn q_func_values() {
        assert_eq!(q_func(0.0), 0.5);
        assert!(q_func(10.0) < 1e-20);
        let x = 1.2815515655446004;
        let oracle = simpson(normal_pdf, x, x + 40.0, 200_000);
        assert!((oracle - 0.1).abs() < 1e-9);
        assert!((q_func(x) - oracle).abs() < 1e-9);
    }

    #[test]
    fn q_inv_values() {
        assert_eq!(q_inv(0.5).unwrap(), 0.0);
        // bisection on q_func as oracle
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_func(mid) > 1e-3 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = q_inv(1e-3).unwrap();
        assert!((got - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!((got - 3.0902).abs() < 1e-4);
        assert!((q_inv(q_func(2.0)).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn q_inv_round_trip_deep_tail() {
        for k in 1..=15 {
            let eps = 10f64.powi(-k);
            let x = q_inv(eps).unwrap();
            assert!(((q_func(x) - eps) / eps).abs() < 1e-10, "eps {eps}");
            assert!((q_func(x) - eps).abs() < 1e-10);
        }
        for eps in [0.6, 0.9, 0.999] {
            assert!((q_func(q_inv(eps).unwrap()) - eps).abs() < 1e-10);
        }
    }

    #[test]
    fn q_inv_rejects_out_of_domain() {
        for eps in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(q_inv(eps).is_err());
        }
    }

    #[test]
    fn monotone_on_grids() {
        let xs: Vec<f64> = (0..200).map(|i| -8.0 + 0.08 * i as f64).collect();
        for w in xs.windows(2) {
            assert!(q_func(w[0]) > q_func(w[1]));
        }
        let es: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
        for w in es.windows(2) {
            assert!(q_inv(w[0]).unwrap() > q_inv(w[1]).unwrap());
        }
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        let h = binary_entropy(0.11);
        // natural-log evaluation as a cross-check
        let ln_form = -(0.11f64 * 0.11f64.ln() + 0.89 * 0.89f64.ln()) / std::f64::consts::LN_2;
        assert!((h - ln_form).abs() < 1e-15);
        assert!((h - 0.49999).abs() < 1e-4);
        for i in 1..50 {
            let q = i as f64 / 100.0;
            assert!((binary_entropy(q) - binary_entropy(1.0 - q)).abs() < 1e-15);
            assert!(binary_entropy(q) < 1.0);
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binom_pmf(0, 0, 0.3).unwrap(), 1.0);
        assert_eq!(binom_pmf(1, 1, 0.5).unwrap(), 0.5);
        // 6 * (3/10)^2 * (7/10)^2 = 2646/10000
        assert!((binom_pmf(2, 4, 0.3).unwrap() - 0.2646).abs() < 1e-10);
        assert!(binom_pmf(5, 4, 0.3).is_err());
        assert_eq!(binom_pmf(0, 3, 0.0).unwrap(), 1.0);
        assert_eq!(binom_pmf(3, 3, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn binomial_normalizes() {
        for trials in 0..=64 {
            for q in [0.0, 0.001, 0.1, 0.37, 0.5, 0.9, 1.0] {
                let s: f64 = (0..=trials).map(|n| binom_pmf(n, trials, q).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-12, "trials {trials} q {q}: {s}");
            }
        }
    }
}

//! Numerical backbone: the circulant Wyner channel, log-determinants,
//! quadrature and bracketing root finders.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};

/// The M×M circulant Wyner channel with first column [1, α, 0, …, 0, α]ᵀ.
#[derive(Debug, Clone)]
pub struct CirculantChannel {
    m: usize,
    alpha: f64,
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl CirculantChannel {
    pub fn new(m: usize, alpha: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::Dimension(format!(
                "circulant Wyner channel needs at least 3 cells, got {m}"
            )));
        }
        let mut col = vec![0.0; m];
        col[0] = 1.0;
        col[1] = alpha;
        col[m - 1] = alpha;
        let matrix = DMatrix::from_fn(m, m, |i, j| col[(i + m - j) % m]);
        let eigenvalues = (0..m)
            .map(|k| 1.0 + 2.0 * alpha * (2.0 * PI * k as f64 / m as f64).cos())
            .collect();
        Ok(CirculantChannel {
            m,
            alpha,
            matrix,
            eigenvalues,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// λ_k = 1 + 2α·cos(2πk/M), k = 0..M-1.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// H·Hᵀ
    pub fn gram(&self) -> DMatrix<f64> {
        &self.matrix * self.matrix.transpose()
    }
}

/// Shorthand for [`CirculantChannel::new`].
pub fn build_channel(m: usize, alpha: f64) -> Result<CirculantChannel> {
    CirculantChannel::new(m, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    /// 1 = URLLC user active in the cell (matrix A).
    Activity,
    /// 1 = sample kept and forwarded (matrix B = I - A).
    Retention,
}

/// Binary diagonal matrix stored as its diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalMask {
    pub diag: Vec<bool>,
    pub kind: MaskKind,
}

impl DiagonalMask {
    /// Draws M independent Bernoulli(`p_active`) activity indicators.
    pub fn draw_activity<R: Rng + ?Sized>(rng: &mut R, m: usize, p_active: f64) -> Self {
        let diag = (0..m).map(|_| rng.random::<f64>() < p_active).collect();
        DiagonalMask {
            diag,
            kind: MaskKind::Activity,
        }
    }

    /// A ↔ B
    pub fn complement(&self) -> Self {
        DiagonalMask {
            diag: self.diag.iter().map(|b| !b).collect(),
            kind: match self.kind {
                MaskKind::Activity => MaskKind::Retention,
                MaskKind::Retention => MaskKind::Activity,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.diag.iter().filter(|&&b| b).count()
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.diag[i] {
            1.0
        } else {
            0.0
        }
    }
}

/// log₂ det of a symmetric positive-definite matrix, via Cholesky.
pub fn logdet_psd(mat: &DMatrix<f64>) -> Result<f64> {
    let n = mat.nrows();
    if n != mat.ncols() {
        return Err(Error::Dimension(format!(
            "logdet of non-square {}x{} matrix",
            n,
            mat.ncols()
        )));
    }
    let scale = mat.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Domain {
                    function: "logdet_psd",
                    message: format!("matrix not symmetric at ({i}, {j})"),
                });
            }
        }
    }
    match mat.clone().cholesky() {
        Some(chol) => Ok(chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| 2.0 * d.log2())
            .sum()),
        None => {
            let eig = SymmetricEigen::new(mat.clone()).eigenvalues;
            Err(Error::NotPositiveDefinite {
                dim: n,
                min_eig: eig.min(),
                max_eig: eig.max(),
            })
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-9;
const MIN_LEVEL: usize = 5;
const MAX_LEVEL: usize = 22;

/// Romberg integration of `f` over [a, b]: trapezoid refinement with
/// Richardson extrapolation, stopped when successive diagonal entries agree
/// to `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let width = b - a;
    if width == 0.0 {
        return Ok(0.0);
    }
    let mut prev = vec![0.5 * width * (f(a) + f(b))];
    let mut h = width;
    let mut n_new = 1usize;
    let mut change = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut sum = 0.0;
        for i in 0..n_new {
            sum += f(a + (2 * i + 1) as f64 * h);
        }
        n_new *= 2;
        let mut row = Vec::with_capacity(level + 1);
        row.push(0.5 * prev[0] + h * sum);
        let mut factor = 1.0;
        for j in 1..=level {
            factor *= 4.0;
            let r = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0);
            row.push(r);
        }
        change = (row[level] - prev[level - 1]).abs();
        if level >= MIN_LEVEL && change <= tol {
            return Ok(row[level]);
        }
        if !change.is_finite() && !row[level].is_finite() {
            break;
        }
        prev = row;
    }
    Err(Error::Tolerance {
        best: *prev.last().unwrap(),
        tol,
        change,
    })
}

/// [`integrate`] over the unit interval.
pub fn integrate_01(f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    integrate(f, 0.0, 1.0, tol)
}

/// Bisection for a root of `g` in [lo, hi].
///
/// Stops once |g(x)| <= tol or the bracket is narrower than
/// tol·max(1, |x|).
pub fn bisect_root(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if !(g_lo.signum() != g_hi.signum()) || g_lo.is_nan() || g_hi.is_nan() {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    let lo_negative = g_lo < 0.0;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..4096 {
        mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= tol || hi - lo <= tol * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    Ok(mid)
}

/// For increasing `g` with g(lo) <= 0, returns some hi > lo with g(hi) > 0,
/// stepping hi = lo + step·growᵏ.
pub fn grow_upper_bracket(
    g: impl Fn(f64) -> f64,
    lo: f64,
    step: f64,
    grow: f64,
    max_steps: usize,
) -> Result<f64> {
    let mut d = step;
    for _ in 0..max_steps {
        let hi = lo + d;
        if g(hi) > 0.0 {
            return Ok(hi);
        }
        d *= grow;
    }
    let hi = lo + d;
    Err(Error::Bracket {
        lo,
        hi,
        g_lo: g(lo),
        g_hi: g(hi),
    })
}

//! Small dense complex helpers on top of `nalgebra`.
//!
//! Matrices in this crate are at most a few dozen rows, so condition numbers
//! are taken from a full SVD rather than estimated.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Condition-number threshold above which a system is reported as singular.
pub const COND_LIMIT: f64 = 1e12;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Singular values, largest first.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// 2-norm condition number of a square matrix; `inf` when singular.
pub fn cond(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if min > 0.0 && min.is_finite() => max / min,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Column-rank style condition: ratio of the largest to the `k`-th singular value.
pub fn cond_rank(m: &CMatrix, k: usize) -> f64 {
    let sv = singular_values(m);
    if k == 0 {
        return 1.0;
    }
    if sv.len() < k {
        return f64::INFINITY;
    }
    let (max, kth) = (sv[0], sv[k - 1]);
    if kth > 0.0 { max / kth } else { f64::INFINITY }
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let Some(&max) = sv.first() else { return 0 };
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Solves `m x = rhs`, returning `None` together with the condition number
/// when `m` is numerically singular.
pub fn solve_checked(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix, f64> {
    if m.nrows() == 0 {
        return Ok(CMatrix::zeros(0, rhs.ncols()));
    }
    let k = cond(m);
    if !k.is_finite() || k > COND_LIMIT {
        return Err(k);
    }
    m.clone().lu().solve(rhs).ok_or(f64::INFINITY)
}

pub fn inverse_checked(m: &CMatrix) -> Result<CMatrix, f64> {
    solve_checked(m, &CMatrix::identity(m.nrows(), m.nrows()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn diag(entries: &[C64]) -> CMatrix {
    let n = entries.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { C64::new(0.0, 0.0) })
}

/// Row vector as a `1 x n` matrix.
pub fn row(entries: &[C64]) -> CMatrix {
    CMatrix::from_row_slice(1, entries.len(), entries)
}

/// Hermitian inner product `x y*` of two row vectors.
pub fn dot_conj(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sq(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Copy of `m` with the given rows and columns selected.
pub fn select(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

//! Maximization of the flat passband value over the norm parameters.
//!
//! With `x = |w1|²`, `y = |w2|²`, `z = |v1|²` and `u = |w2 w1*|² / (x y)`,
//! the passband value of an `S = 0` flat coupling is
//!
//! ```text
//! F = (2 √(xyu) / (1 + x + y + xy - xyu))²
//! ```
//!
//! subject to `(1 + x - z)(1 + y - xyu/z) = 4xyu`. For fixed `(x, y, u)` the
//! constraint is a quadratic in `z`, so the search runs over `(x, y, u)` and
//! keeps the points where a positive `z` exists.

use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub u: f64,
    #[serde(rename = "F_value")]
    pub f_value: f64,
    pub at_boundary: bool,
}

impl OptimizationResult {
    pub fn constraint_residual(&self) -> f64 {
        constraint(self.x, self.y, self.z, self.u)
    }
}

/// Upper end of the `x` and `y` search range.
pub const SEARCH_MAX: f64 = 2.0;

pub fn objective(x: f64, y: f64, u: f64) -> f64 {
    let m = x * y * u;
    let f = 2.0 * m.sqrt() / (1.0 + x + y + x * y - m);
    f * f
}

/// `(1 + x - z)(1 + y - xyu/z) - 4xyu`
pub fn constraint(x: f64, y: f64, z: f64, u: f64) -> f64 {
    let m = x * y * u;
    (1.0 + x - z) * (1.0 + y - m / z) - 4.0 * m
}

/// Positive roots `z` of the constraint, largest first.
pub fn z_roots(x: f64, y: f64, u: f64) -> Vec<f64> {
    let (p, q, m) = (1.0 + x, 1.0 + y, x * y * u);
    // q z² - (pq - 3m) z + p m = 0
    let b = p * q - 3.0 * m;
    let disc = b * b - 4.0 * p * q * m;
    if b <= 0.0 || disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let hi = (b + sq) / (2.0 * q);
    let lo = p * m / (q * hi);
    [hi, lo].into_iter().filter(|&z| z > 0.0 && z.is_finite()).collect()
}

pub fn feasible(x: f64, y: f64, u: f64) -> bool {
    !z_roots(x, y, u).is_empty()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![hi];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Copy)]
struct Box3 {
    lo: [f64; 3],
    hi: [f64; 3],
}

/// Best feasible grid point in the box, as `(F, x, y, u)`.
fn grid_best(b: Box3, density: usize) -> Option<(f64, f64, f64, f64)> {
    let xs = linspace(b.lo[0], b.hi[0], density);
    let ys = linspace(b.lo[1], b.hi[1], density);
    let us = linspace(b.lo[2], b.hi[2], density);
    xs.par_iter()
        .filter_map(|&x| {
            let mut best: Option<(f64, f64, f64, f64)> = None;
            for &y in &ys {
                for &u in &us {
                    if x <= 0.0 || y <= 0.0 || u <= 0.0 || !feasible(x, y, u) {
                        continue;
                    }
                    let f = objective(x, y, u);
                    if best.is_none_or(|b| f > b.0) {
                        best = Some((f, x, y, u));
                    }
                }
            }
            best
        })
        // Deterministic tie-break regardless of scheduling.
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2, b.3) < (a.1, a.2, a.3)) { b } else { a })
}

/// Moves `(x, y)` along `(1, 1)` to the edge of the feasible set, keeping `u`.
fn project_to_boundary(x: f64, y: f64, u: f64) -> (f64, f64) {
    let mut step = 1e-6;
    while feasible(x + step, y + step, u) && step < SEARCH_MAX {
        step *= 2.0;
    }
    if feasible(x + step, y + step, u) {
        return (x, y);
    }
    let (mut lo, mut hi) = (0.0, step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(x + mid, y + mid, u) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * (x + hi) {
            break;
        }
    }
    (x + lo, y + lo)
}

/// Grid search over `x, y ∈ (0, 2]`, `u ∈ (0, 1]` with `density` points per
/// axis, `refine` rounds of zooming in on the incumbent, and a final push of
/// `(x, y)` onto the edge of the feasible set.
pub fn optimize_passband(density: usize, refine: usize) -> OptimizationResult {
    let density = density.max(3);
    let h0 = SEARCH_MAX / density as f64;
    let mut b = Box3 { lo: [h0, h0, 1.0 / density as f64], hi: [SEARCH_MAX, SEARCH_MAX, 1.0] };
    let (mut f, mut x, mut y, mut u) = grid_best(b, density).expect("the grid always contains feasible points");
    for _ in 0..refine {
        let hw: Vec<f64> = (0..3).map(|k| 2.0 * (b.hi[k] - b.lo[k]) / (density - 1) as f64).collect();
        let centre = [x, y, u];
        let mut nb = b;
        for k in 0..3 {
            nb.lo[k] = (centre[k] - hw[k]).max(f64::MIN_POSITIVE);
            nb.hi[k] = centre[k] + hw[k];
        }
        nb.hi[2] = nb.hi[2].min(1.0);
        b = nb;
        if let Some(best) = grid_best(b, density) {
            if best.0 >= f {
                (f, x, y, u) = best;
            }
        }
    }
    let (px, py) = project_to_boundary(x, y, u);
    if objective(px, py, u) >= f {
        (x, y) = (px, py);
        f = objective(x, y, u);
    }
    let z = z_roots(x, y, u).first().copied().unwrap_or(f64::NAN);
    OptimizationResult { x, y, z, u, f_value: f, at_boundary: u >= 1.0 - 1e-12 }
}

/// Outcome of sampling the feasible set with `u` kept strictly below one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorScan {
    pub samples: usize,
    pub feasible: usize,
    pub max_f: f64,
    pub argmax: [f64; 3],
}

pub fn interior_scan(density: usize) -> InteriorScan {
    let density = density.max(2);
    let h = SEARCH_MAX / density as f64;
    let xs: Vec<f64> = (1..=density).map(|i| i as f64 * h).collect();
    let us: Vec<f64> = (1..density).map(|i| i as f64 / density as f64).collect();
    let mut out = InteriorScan { samples: 0, feasible: 0, max_f: 0.0, argmax: [f64::NAN; 3] };
    for &x in &xs {
        for &y in &xs {
            for &u in &us {
                out.samples += 1;
                if !feasible(x, y, u) {
                    continue;
                }
                out.feasible += 1;
                let f = objective(x, y, u);
                if f > out.max_f {
                    out.max_f = f;
                    out.argmax = [x, y, u];
                }
            }
        }
    }
    out
}

/// Smallest normalized Lagrange residual over interior feasible points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagrangeScan {
    pub points: usize,
    pub min_residual: f64,
    /// `(x, y, z, u)` at the minimum.
    pub argmin: [f64; 4],
}

fn grad_objective(x: f64, y: f64, u: f64) -> [f64; 4] {
    let m = x * y * u;
    let d = 1.0 + x + y + x * y - m;
    // F = 4m / d²
    let df_dm = 4.0 / (d * d) + 8.0 * m / (d * d * d);
    let df_dd_x = 1.0 + y; // ∂d/∂x with m held fixed
    let df_dd_y = 1.0 + x;
    let dd = -8.0 * m / (d * d * d);
    [
        df_dm * y * u + dd * df_dd_x,
        df_dm * x * u + dd * df_dd_y,
        0.0,
        df_dm * x * y,
    ]
}

fn grad_constraint(x: f64, y: f64, z: f64, u: f64) -> [f64; 4] {
    let m = x * y * u;
    let a = 1.0 + x - z;
    let b = 1.0 + y - m / z;
    let dm = [y * u, x * u, 0.0, x * y];
    let mut g = [0.0; 4];
    for k in 0..4 {
        let da = [1.0, 0.0, -1.0, 0.0][k];
        let db = [0.0, 1.0, m / (z * z), 0.0][k] - dm[k] / z;
        g[k] = da * b + a * db - 4.0 * dm[k];
    }
    g
}

/// For each interior feasible grid point, the residual
/// `|∇F - λ ∇G| / |∇F|` minimized over `λ`; zero at a stationary point of
/// the Lagrangian in `(x, y, z, u)`.
pub fn lagrange_residual_scan(density: usize) -> LagrangeScan {
    let density = density.max(2);
    let h = SEARCH_MAX / density as f64;
    let mut out = LagrangeScan { points: 0, min_residual: f64::INFINITY, argmin: [f64::NAN; 4] };
    for i in 1..=density {
        for j in 1..=density {
            for k in 1..density {
                let (x, y, u) = (i as f64 * h, j as f64 * h, k as f64 / density as f64);
                for z in z_roots(x, y, u) {
                    let gf = grad_objective(x, y, u);
                    let gg = grad_constraint(x, y, z, u);
                    let gg2: f64 = gg.iter().map(|v| v * v).sum();
                    let lambda = if gg2 > 0.0 { gf.iter().zip(&gg).map(|(a, b)| a * b).sum::<f64>() / gg2 } else { 0.0 };
                    let res: f64 = gf.iter().zip(&gg).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
                    let norm: f64 = gf.iter().map(|v| v * v).sum::<f64>().sqrt();
                    out.points += 1;
                    let r = res / norm;
                    if r < out.min_residual {
                        out.min_residual = r;
                        out.argmin = [x, y, z, u];
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_at_known_maximum() {
        assert!((objective(0.5, 0.5, 1.0) - 0.25).abs() < 1e-15);
        assert_eq!(z_roots(0.5, 0.5, 1.0).len(), 2);
        for z in z_roots(0.5, 0.5, 1.0) {
            assert!((z - 0.5).abs() < 1e-7, "{z}");
        }
    }

    #[test]
    fn roots_satisfy_constraint() {
        for (x, y, u) in [(0.3, 0.7, 0.4), (1.5, 0.2, 0.9), (0.1, 0.1, 1.0)] {
            for z in z_roots(x, y, u) {
                assert!(constraint(x, y, z, u).abs() < 1e-12, "{x} {y} {u} {z}");
            }
        }
    }

    #[test]
    fn symmetric_slice_peaks_at_one_half() {
        let xs: Vec<f64> = (1..=2000).map(|i| i as f64 * 1e-3).filter(|&x| feasible(x, x, 1.0)).collect();
        let best = xs.iter().copied().max_by(|a, b| objective(*a, *a, 1.0).total_cmp(&objective(*b, *b, 1.0))).unwrap();
        assert!((best - 0.5).abs() < 1.1e-3, "{best}");
        assert!(!feasible(0.51, 0.51, 1.0));
    }

    #[test]
    fn finds_the_maximum() {
        let r = optimize_passband(50, 3);
        assert!((r.f_value - 0.25).abs() < 1e-6, "{r:?}");
        for (got, want) in [(r.x, 0.5), (r.y, 0.5), (r.z, 0.5), (r.u, 1.0)] {
            assert!((got - want).abs() < 1e-3, "{r:?}");
        }
        assert!(r.at_boundary);
        assert!(r.constraint_residual().abs() < 1e-9, "{}", r.constraint_residual());
    }

    #[test]
    fn interior_stays_below_quarter() {
        let s = interior_scan(40);
        assert!(s.feasible > 0);
        assert!(s.max_f < 0.25, "{s:?}");
    }

    #[test]
    fn no_interior_stationary_point_on_coarse_grid() {
        let scan = lagrange_residual_scan(20);
        assert!(scan.points > 1000);
        assert!(scan.min_residual > 0.05, "{scan:?}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (x, y, z, u) = (0.4, 0.9, 0.6, 0.7);
        let h = 1e-6;
        let gf = grad_objective(x, y, u);
        let fd = [
            (objective(x + h, y, u) - objective(x - h, y, u)) / (2.0 * h),
            (objective(x, y + h, u) - objective(x, y - h, u)) / (2.0 * h),
            0.0,
            (objective(x, y, u + h) - objective(x, y, u - h)) / (2.0 * h),
        ];
        let gg = grad_constraint(x, y, z, u);
        let fdg = [
            (constraint(x + h, y, z, u) - constraint(x - h, y, z, u)) / (2.0 * h),
            (constraint(x, y + h, z, u) - constraint(x, y - h, z, u)) / (2.0 * h),
            (constraint(x, y, z + h, u) - constraint(x, y, z - h, u)) / (2.0 * h),
            (constraint(x, y, z, u + h) - constraint(x, y, z, u - h)) / (2.0 * h),
        ];
        for k in 0..4 {
            assert!((gf[k] - fd[k]).abs() < 1e-7, "F {k}");
            assert!((gg[k] - fdg[k]).abs() < 1e-7, "G {k}");
        }
    }
}

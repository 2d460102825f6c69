//! Flat-passband analysis for rank-two couplings.
//!
//! With input and output on lines 1 and 2, controllers (potential `V`) next
//! and drains last, the `T` block splits as
//!
//! ```text
//!     T = [ v1  w1 ]
//!         [ v2  w2 ]
//! ```
//!
//! For `E < V` the transmission amplitude is a ratio whose denominator is
//! `a + i b σ + c σ² + d σ/√E + i f/√E + g/E` with `σ = sqrt(V/E - 1)`. The
//! probability is constant on `(0, V)` and vanishes at high energy exactly when
//! `v2 v1* + w2 w1* = 0`, `c = d = g = 0`, `|a| = |b|` and
//! `f/b = s21/(v2 v1*)`; the plateau is then
//! `(2|v2 v1*| / (1 + |w1|² + |w2|² + |w1|²|w2|² - |v2 v1*|²))²`.

use serde::Serialize;

use crate::coupling::{LineConfig, Role, STCoupling};
use crate::error::{Error, Result};
use crate::linalg::{self, dot_conj, norm_sq, CMatrix, C64};
use crate::scattering::{open_band_grid, sweep, transmission_probability};
use crate::Tolerances;

/// Split of the `2 x (n-2)` block `T` into controller columns `v` and drain columns `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub v1: Vec<C64>,
    pub v2: Vec<C64>,
    pub w1: Vec<C64>,
    pub w2: Vec<C64>,
}

impl Partition {
    pub fn new(v1: Vec<C64>, v2: Vec<C64>, w1: Vec<C64>, w2: Vec<C64>) -> Result<Self> {
        if v1.len() != v2.len() || w1.len() != w2.len() {
            return Err(Error::DimensionMismatch(format!(
                "rows differ in length: v ({}, {}), w ({}, {})",
                v1.len(),
                v2.len(),
                w1.len(),
                w2.len()
            )));
        }
        Ok(Self { v1, v2, w1, w2 })
    }

    pub fn controllers(&self) -> usize {
        self.v1.len()
    }

    pub fn drains(&self) -> usize {
        self.w1.len()
    }

    /// Index of the last controller line, counting lines from 1.
    pub fn q(&self) -> usize {
        self.controllers() + 2
    }

    /// `T = [[v1, w1], [v2, w2]]`.
    pub fn t_matrix(&self) -> CMatrix {
        let (nv, nw) = (self.controllers(), self.drains());
        CMatrix::from_fn(2, nv + nw, |i, j| match (i, j < nv) {
            (0, true) => self.v1[j],
            (1, true) => self.v2[j],
            (0, false) => self.w1[j - nv],
            _ => self.w2[j - nv],
        })
    }

    /// Splits a `2 x (n-2)` block whose first `controllers` columns are controllers.
    pub fn from_t(t: &CMatrix, controllers: usize) -> Result<Self> {
        if t.nrows() != 2 || controllers > t.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "T is {}x{}, cannot split off {controllers} controller columns",
                t.nrows(),
                t.ncols()
            )));
        }
        let take = |row: usize, cols: std::ops::Range<usize>| cols.map(|j| t[(row, j)]).collect::<Vec<_>>();
        let m = t.ncols();
        Ok(Self {
            v1: take(0, 0..controllers),
            v2: take(1, 0..controllers),
            w1: take(0, controllers..m),
            w2: take(1, controllers..m),
        })
    }

    pub fn v2v1(&self) -> C64 {
        dot_conj(&self.v2, &self.v1)
    }

    pub fn w2w1(&self) -> C64 {
        dot_conj(&self.w2, &self.w1)
    }

    /// Standard layout: input, output, controllers at potential `v`, drains.
    pub fn layout(&self, s: &CMatrix, v: f64) -> Result<(STCoupling, LineConfig)> {
        let st = STCoupling::new(s.clone(), self.t_matrix())?;
        let lines = LineConfig::standard(&vec![v; self.controllers()], self.drains())?;
        Ok((st, lines))
    }
}

/// Extracts the partition, `S` and the shared controller potential from a
/// rank-two coupling with input on ST line 0 and output on ST line 1.
pub fn partition_of(c: &STCoupling, lines: &LineConfig) -> Result<(Partition, CMatrix, f64)> {
    if c.r != 2 {
        return Err(Error::UnsupportedLayout(format!("flat-band check requires r=2, got r={}", c.r)));
    }
    if lines.len() != c.n {
        return Err(Error::DimensionMismatch(format!("coupling has {} lines, line config has {}", c.n, lines.len())));
    }
    if lines.input() != 0 || lines.output() != 1 {
        return Err(Error::UnsupportedLayout(
            "flat-band check requires input and output on the first two ST lines".into(),
        ));
    }
    let controllers = lines.controllers();
    let potentials: Vec<f64> = controllers.iter().map(|&j| lines.potential(j)).collect();
    let Some(&v) = potentials.first() else {
        return Err(Error::ConfigMismatch("flat-band check needs at least one controller".into()));
    };
    if potentials.iter().any(|&p| p != v) {
        return Err(Error::ConfigMismatch(format!("controller potentials differ: {potentials:?}")));
    }
    let column = |j: usize| j - 2;
    let pick = |row: usize, set: &[usize]| set.iter().map(|&j| c.t[(row, column(j))]).collect::<Vec<_>>();
    let drains = lines.drains();
    let p = Partition {
        v1: pick(0, &controllers),
        v2: pick(1, &controllers),
        w1: pick(0, &drains),
        w2: pick(1, &drains),
    };
    Ok((p, c.s.clone(), v))
}

/// Real coefficients of the below-band denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
    pub g: f64,
}

pub fn coefficients(p: &Partition, s: &CMatrix) -> CoefficientSet {
    let (nv1, nv2) = (norm_sq(&p.v1), norm_sq(&p.v2));
    let (nw1, nw2) = (norm_sq(&p.w1), norm_sq(&p.w2));
    let v2v1 = p.v2v1();
    let w2w1 = p.w2w1();
    let w1w2 = w2w1.conj();
    let v1v2 = v2v1.conj();
    let (s11, s22, s21) = (s[(0, 0)].re, s[(1, 1)].re, s[(1, 0)]);
    let det_s = (s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)]).re;
    CoefficientSet {
        a: 1.0 + nw1 + nw2 + nw1 * nw2 - w2w1.norm_sqr(),
        b: nv1 + nv2 + nw1 * nv2 + nv1 * nw2 - 2.0 * (v2v1 * w1w2).re,
        c: -nv1 * nv2 + v2v1.norm_sqr(),
        d: -s11 * nv2 - s22 * nv1 + 2.0 * (s21 * v1v2).re,
        f: s11 + s22 + s11 * nw2 + s22 * nw1 - 2.0 * (s21 * w1w2).re,
        g: -det_s,
    }
}

/// Which admissible shape of `S` a coupling has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlatCase {
    #[serde(rename = "S_zero")]
    SZero,
    #[serde(rename = "same_sign")]
    SameSign,
    #[serde(rename = "opposite_sign")]
    OppositeSign,
    #[serde(rename = "fail")]
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatbandReport {
    /// `|v2 v1* + w2 w1*|`
    pub residual_diagonality: f64,
    pub residual_c: f64,
    pub residual_d: f64,
    pub residual_g: f64,
    /// `||a| - |b||`
    pub residual_ab: f64,
    /// `|f/b - s21/(v2 v1*)|`
    pub residual_fb: f64,
    /// `|(1 + |w1|² - |v1|²)(1 + |w2|² - |v2|²) - 4 |v1|²|v2|²|`
    pub residual_simplified: f64,
    /// Largest residual among the conditions of the detected `S` case.
    pub residual_case: f64,
    pub v2v1_abs: f64,
    pub case: FlatCase,
    pub coefficients: CoefficientSet,
    pub predicted_p: f64,
    pub verdict: bool,
}

impl FlatbandReport {
    /// The residual checks in evaluation order, with names.
    pub fn residuals(&self) -> [(&'static str, f64); 8] {
        [
            ("diagonality", self.residual_diagonality),
            ("c", self.residual_c),
            ("d", self.residual_d),
            ("g", self.residual_g),
            ("ab", self.residual_ab),
            ("fb", self.residual_fb),
            ("simplified", self.residual_simplified),
            ("case", self.residual_case),
        ]
    }

    /// Name of the first failing condition, if any.
    pub fn first_failure(&self, tol: f64) -> Option<&'static str> {
        if self.v2v1_abs <= tol {
            return Some("v2v1_nonzero");
        }
        self.residuals().into_iter().find(|(_, r)| !(*r < tol)).map(|(name, _)| name)
    }
}

pub fn check_flat(p: &Partition, s: &CMatrix) -> FlatbandReport {
    check_flat_tol(p, s, &Tolerances::default())
}

pub fn check_flat_tol(p: &Partition, s: &CMatrix, tol: &Tolerances) -> FlatbandReport {
    let k = coefficients(p, s);
    let (nv1, nv2) = (norm_sq(&p.v1), norm_sq(&p.v2));
    let (nw1, nw2) = (norm_sq(&p.w1), norm_sq(&p.w2));
    let v2v1 = p.v2v1();
    let v2v1_abs = v2v1.norm();
    let s21 = s[(1, 0)];

    let residual_fb = if v2v1_abs > 0.0 && k.b != 0.0 {
        (k.f / k.b - s21 / v2v1).norm()
    } else {
        f64::INFINITY
    };

    let (case, residual_case) = classify(p, s, tol.flat);
    let mut report = FlatbandReport {
        residual_diagonality: (v2v1 + p.w2w1()).norm(),
        residual_c: k.c.abs(),
        residual_d: k.d.abs(),
        residual_g: k.g.abs(),
        residual_ab: (k.a.abs() - k.b.abs()).abs(),
        residual_fb,
        residual_simplified: ((1.0 + nw1 - nv1) * (1.0 + nw2 - nv2) - 4.0 * nv1 * nv2).abs(),
        residual_case,
        v2v1_abs,
        case,
        coefficients: k,
        predicted_p: passband_value(p),
        verdict: false,
    };
    report.verdict = case != FlatCase::Fail && report.first_failure(tol.flat).is_none();
    report
}

fn classify(p: &Partition, s: &CMatrix, tol: f64) -> (FlatCase, f64) {
    if linalg::max_abs(s) < tol {
        return (FlatCase::SZero, 0.0);
    }
    let (s11, s22, s21) = (s[(0, 0)].re, s[(1, 1)].re, s[(1, 0)]);
    let (n1, n2) = (norm_sq(&p.v1).sqrt(), norm_sq(&p.v2).sqrt());
    if s11.abs() < tol || s22.abs() < tol || n1 == 0.0 || n2 == 0.0 {
        return (FlatCase::Fail, f64::INFINITY);
    }
    let unit = p.v2v1() / (n1 * n2);
    let root = (s11 * s22).abs().sqrt();
    let sgn = s11.signum();
    if s11 * s22 > 0.0 {
        let ratio = ((s11 / s22).sqrt() - n1 / n2).abs();
        let off = (s21 - sgn * root * unit).norm();
        (FlatCase::SameSign, ratio.max(off))
    } else {
        let sqrt2 = std::f64::consts::SQRT_2;
        let ratio = [1.0, -1.0]
            .iter()
            .map(|e| ((s11.abs() / s22.abs()).sqrt() - (sqrt2 + e * sgn) * n1 / n2).abs())
            .fold(f64::INFINITY, f64::min);
        let off = [1.0, -1.0].iter().map(|e| (s21 - e * root * unit).norm()).fold(f64::INFINITY, f64::min);
        let vw = (norm_sq(&p.w1) - (3.0 * n1 * n1 - 1.0))
            .abs()
            .max((norm_sq(&p.w2) - (3.0 * n2 * n2 - 1.0)).abs());
        (FlatCase::OppositeSign, ratio.max(off).max(vw))
    }
}

/// Plateau value `(2|v2 v1*| / (1 + |w1|² + |w2|² + |w1|²|w2|² - |v2 v1*|²))²`.
pub fn passband_value(p: &Partition) -> f64 {
    let (nw1, nw2) = (norm_sq(&p.w1), norm_sq(&p.w2));
    let x = p.v2v1().norm();
    let ratio = 2.0 * x / (1.0 + nw1 + nw2 + nw1 * nw2 - x * x);
    ratio * ratio
}

/// Above-band probability of a flat coupling,
/// `P0 ((1 - τ)² + ρ²/E) / ((1 + τ)² + ρ²/E)` with `τ = sqrt(1 - V/E)` and
/// `ρ² = |s21|² / (|v1|²|v2|²)`.
pub fn analytic_p_above_v(p: &Partition, s21: C64, v: f64, energy: f64) -> f64 {
    let (nw1, nw2) = (norm_sq(&p.w1), norm_sq(&p.w2));
    let level = 2.0 * p.v2v1().norm() / ((1.0 + nw1) * (1.0 + nw2) - p.w2w1().norm_sqr());
    let rho2 = s21.norm_sqr() / (norm_sq(&p.v1) * norm_sq(&p.v2));
    let tau = (1.0 - v / energy).sqrt();
    let extra = rho2 / energy;
    level * level * ((1.0 - tau).powi(2) + extra) / ((1.0 + tau).powi(2) + extra)
}

/// `dP/dE` of [`analytic_p_above_v`].
pub fn analytic_slope_above_v(p: &Partition, s21: C64, v: f64, energy: f64) -> f64 {
    let (nw1, nw2) = (norm_sq(&p.w1), norm_sq(&p.w2));
    let level = 2.0 * p.v2v1().norm() / ((1.0 + nw1) * (1.0 + nw2) - p.w2w1().norm_sqr());
    let rho2 = s21.norm_sqr() / (norm_sq(&p.v1) * norm_sq(&p.v2));
    let tau = (1.0 - v / energy).sqrt();
    let dtau = v / (2.0 * energy * energy * tau);
    let extra = rho2 / energy;
    let dextra = -rho2 / (energy * energy);
    let num = (1.0 - tau).powi(2) + extra;
    let den = (1.0 + tau).powi(2) + extra;
    let dnum = -2.0 * (1.0 - tau) * dtau + dextra;
    let dden = 2.0 * (1.0 + tau) * dtau + dextra;
    level * level * (dnum * den - num * dden) / (den * den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatnessStats {
    pub max: f64,
    pub min: f64,
    pub deviation: f64,
}

/// Spread of `P(E)` over `grid` through the generic reduction.
pub fn numerical_flatness(c: &STCoupling, lines: &LineConfig, grid: &[f64]) -> Result<FlatnessStats> {
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for sample in sweep(c, lines, grid) {
        let p = sample?.p;
        max = max.max(p);
        min = min.min(p);
    }
    Ok(FlatnessStats { max, min, deviation: max - min })
}

/// [`numerical_flatness`] on `points` evenly spaced energies inside `(0, v)`.
pub fn numerical_flatness_below(c: &STCoupling, lines: &LineConfig, v: f64, points: usize) -> Result<FlatnessStats> {
    numerical_flatness(c, lines, &open_band_grid(v, points))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeSlope {
    pub eps: f64,
    pub energy: f64,
    pub slope: f64,
}

/// Central-difference slope of `P` at `E = V (1 + ε)` with step `ε V / 10`.
pub fn edge_slope(c: &STCoupling, lines: &LineConfig, v: f64, eps_list: &[f64]) -> Result<Vec<EdgeSlope>> {
    eps_list
        .iter()
        .map(|&eps| {
            let energy = v * (1.0 + eps);
            let h = 0.1 * eps * v;
            let hi = transmission_probability(c, lines, energy + h)?;
            let lo = transmission_probability(c, lines, energy - h)?;
            Ok(EdgeSlope { eps, energy, slope: (hi - lo) / (2.0 * h) })
        })
        .collect()
}

/// True when every slope is negative and, between consecutive ε, the slope
/// magnitude grows by `sqrt(ε_i / ε_{i+1})` up to a factor in `[0.2, 2]`.
pub fn slopes_diverge_like_inverse_sqrt(slopes: &[EdgeSlope]) -> bool {
    slopes.iter().all(|s| s.slope < 0.0)
        && slopes.windows(2).all(|w| {
            let growth = w[1].slope / w[0].slope;
            let expected = (w[0].eps / w[1].eps).sqrt();
            let rel = growth / expected;
            (0.2..=2.0).contains(&rel)
        })
}

/// Whether `T1 (I + T2* T2)^{-1} T1*` is diagonal, with its off-diagonal magnitude.
pub fn r3_diagonality_check(t1: &CMatrix, t2: &CMatrix) -> Result<(bool, f64)> {
    if t1.nrows() != 2 || t1.ncols() != t2.ncols() {
        return Err(Error::DimensionMismatch("T1 must be 2 x m and T2 must have m columns".into()));
    }
    let m = t1.ncols();
    let metric = CMatrix::identity(m, m) + t2.adjoint() * t2;
    let x = linalg::solve_checked(&metric, &t1.adjoint()).map_err(|cond| Error::SingularInner { energy: f64::NAN, cond })?;
    let limit = t1 * x;
    let off = limit[(0, 1)].norm().max(limit[(1, 0)].norm());
    Ok((off < 1e-10, off))
}

/// Roles helper for tests and design: are all auxiliary lines after the
/// controllers drains?
pub fn is_standard_layout(lines: &LineConfig) -> bool {
    let roles = lines.roles();
    roles.len() >= 2
        && roles[0] == Role::Input
        && roles[1] == Role::Output
        && roles[2..].windows(2).all(|w| !(w[0] == Role::Drain && matches!(w[1], Role::Controller(_))))
}

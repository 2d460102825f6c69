//! Construction of rank-two couplings with a flat passband.
//!
//! A design fixes `v1` and `v2 = λ v1` on the controller columns, then picks
//! `w2` so that `w2 w1* = -v2 v1*` and
//! `(1 + |w1|² - |v1|²)(1 + |w2|² - |v2|²) = 4 |v1|²|v2|²`. The component of
//! `w2` along `w1` is fixed by the first equation; the norm equation is met
//! either by an orthogonal component (two or more drains) or by rescaling
//! `w1` (collinear `w1`, `w2`).

use serde::{Deserialize, Serialize};

use crate::coupling::{LineConfig, STCoupling};
use crate::error::{Error, Result};
use crate::flatband::{check_flat, FlatbandReport, Partition};
use crate::linalg::{self, dot_conj, norm_sq, CMatrix, C64};

/// Shape of `S` requested from [`design_flat`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignCase {
    #[serde(rename = "S_zero", alias = "s_zero")]
    SZero,
    SameSign,
    OppositeSign,
}

impl std::str::FromStr for DesignCase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "S_zero" | "s_zero" | "zero" => Ok(Self::SZero),
            "same_sign" => Ok(Self::SameSign),
            "opposite_sign" => Ok(Self::OppositeSign),
            other => Err(format!("unknown case `{other}` (expected S_zero, same_sign or opposite_sign)")),
        }
    }
}

/// Free parameters of a flat-band design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub case: DesignCase,
    /// Controller part of the first row of `T`; its length is the controller count.
    pub v1: Vec<C64>,
    /// `v2 = lambda v1`.
    pub lambda: C64,
    /// Drain part of the first row of `T`; its length is the drain count. In
    /// the orthogonal mode its norm is kept, otherwise only its direction.
    pub w1: Vec<C64>,
    /// Phase of the part of `w2` orthogonal to `w1`. `Some` selects the
    /// orthogonal mode (needs two or more drains).
    #[serde(default)]
    pub w2_phase: Option<f64>,
    /// Scale of `S`; ignored for `S_zero`.
    #[serde(default)]
    pub s: f64,
}

impl DesignSpec {
    pub fn controllers(&self) -> usize {
        self.v1.len()
    }

    pub fn drains(&self) -> usize {
        self.w1.len()
    }
}

/// A constructed coupling together with its flat-band report.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub coupling: STCoupling,
    pub partition: Partition,
    pub report: FlatbandReport,
}

impl Design {
    /// Standard roles with every controller at potential `v`.
    pub fn lines(&self, v: f64) -> Result<LineConfig> {
        LineConfig::standard(&vec![v; self.partition.controllers()], self.partition.drains())
    }
}

const GEOM_TOL: f64 = 1e-12;

/// Unit vector orthogonal to `u` (which must be a unit vector of length ≥ 2).
fn orthogonal_unit(u: &[C64]) -> Vec<C64> {
    let k = (0..u.len())
        .min_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm()))
        .expect("non-empty");
    let mut e: Vec<C64> = (0..u.len()).map(|j| linalg::re(if j == k { 1.0 } else { 0.0 })).collect();
    let overlap = dot_conj(&e, u);
    for (ej, uj) in e.iter_mut().zip(u) {
        *ej -= overlap * uj;
    }
    let n = norm_sq(&e).sqrt();
    e.iter().map(|z| z / n).collect()
}

/// Positive solutions `x = |w1|²` of the norm equation when `w2` is parallel to `w1`.
fn collinear_w1_norms(z: f64, l: f64) -> Vec<f64> {
    // (1 - Lz) x² + [(1 - z)(1 - Lz) - 3 L z²] x + (1 - z) L z² = 0
    let qa = 1.0 - l * z;
    let qb = (1.0 - z) * (1.0 - l * z) - 3.0 * l * z * z;
    let qc = (1.0 - z) * l * z * z;
    let mut roots = Vec::new();
    if qa.abs() < GEOM_TOL {
        if qb.abs() > GEOM_TOL {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        let scale = qb * qb + (4.0 * qa * qc).abs();
        if disc >= -1e-14 * scale {
            let sq = disc.max(0.0).sqrt();
            // Stable quadratic roots.
            let q = -0.5 * (qb + qb.signum() * sq);
            if q != 0.0 {
                roots.push(q / qa);
                roots.push(qc / q);
            } else {
                roots.push(-qb / (2.0 * qa));
            }
        }
    }
    roots.retain(|&x| x > GEOM_TOL && x.is_finite());
    roots
}

/// Builds a coupling satisfying the flat-band conditions for `spec`.
pub fn design_flat(spec: &DesignSpec) -> Result<Design> {
    let z = norm_sq(&spec.v1);
    let l = spec.lambda.norm_sqr();
    let w1_norm_given = norm_sq(&spec.w1);
    if spec.v1.is_empty() || z == 0.0 || l == 0.0 {
        return Err(Error::Infeasible("v1 and v2 = lambda v1 must be nonzero".into()));
    }
    if spec.w1.is_empty() || w1_norm_given == 0.0 {
        return Err(Error::Infeasible("w1 must be nonzero (at least one drain)".into()));
    }
    let dim_w = spec.w1.len();
    let orthogonal_mode = spec.w2_phase.is_some() && dim_w >= 2;

    let (x, y) = match spec.case {
        DesignCase::OppositeSign => {
            if z <= 1.0 / 3.0 {
                return Err(Error::InfeasibleNegCase(z));
            }
            let y = 3.0 * l * z - 1.0;
            if y <= 0.0 {
                return Err(Error::Infeasible(format!("|w2|^2 = 3|v2|^2 - 1 = {y} is not positive")));
            }
            (3.0 * z - 1.0, y)
        }
        _ if orthogonal_mode => {
            let denom = 1.0 + w1_norm_given - z;
            if denom.abs() < GEOM_TOL {
                return Err(Error::Infeasible("1 + |w1|^2 - |v1|^2 vanishes".into()));
            }
            let y = l * z - 1.0 + 4.0 * l * z * z / denom;
            if y <= 0.0 {
                return Err(Error::Infeasible(format!("norm equation gives |w2|^2 = {y}")));
            }
            (w1_norm_given, y)
        }
        _ => {
            let roots = collinear_w1_norms(z, l);
            let x = roots
                .into_iter()
                .min_by(|a, b| (a - w1_norm_given).abs().total_cmp(&(b - w1_norm_given).abs()))
                .ok_or_else(|| {
                    Error::Infeasible(format!("no positive |w1|^2 solves the norm equation for |v1|^2 = {z}, |lambda|^2 = {l}"))
                })?;
            (x, l * z * z / x)
        }
    };

    let scale = (x / w1_norm_given).sqrt();
    let w1: Vec<C64> = spec.w1.iter().map(|w| w * scale).collect();
    let v2: Vec<C64> = spec.v1.iter().map(|v| spec.lambda * v).collect();
    let along = -spec.lambda * z / x;
    let perp_sq = y - l * z * z / x;
    if perp_sq < -1e-10 {
        return Err(Error::Infeasible(format!(
            "|w2 w1*| = {} exceeds |w1||w2| = {}",
            (l * z * z).sqrt(),
            (x * y).sqrt()
        )));
    }
    let mut w2: Vec<C64> = w1.iter().map(|w| along * w).collect();
    if perp_sq > 1e-10 {
        if dim_w < 2 {
            return Err(Error::Infeasible(format!(
                "w2 needs a component of norm² {perp_sq} orthogonal to w1, but there is only one drain"
            )));
        }
        let unit: Vec<C64> = w1.iter().map(|w| w / x.sqrt()).collect();
        let e = orthogonal_unit(&unit);
        let g = C64::from_polar(perp_sq.sqrt(), spec.w2_phase.unwrap_or(0.0));
        for (w, ej) in w2.iter_mut().zip(&e) {
            *w += g * ej;
        }
    }
    let partition = Partition::new(spec.v1.clone(), v2, w1, w2)?;

    let candidates: Vec<CMatrix> = match spec.case {
        DesignCase::SZero => vec![CMatrix::zeros(2, 2)],
        DesignCase::SameSign => {
            if spec.s == 0.0 {
                return Err(Error::Infeasible("same_sign needs s != 0".into()));
            }
            vec![same_sign_s(&partition, spec.s)]
        }
        DesignCase::OppositeSign => {
            if spec.s == 0.0 {
                return Err(Error::Infeasible("opposite_sign needs s != 0".into()));
            }
            [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
                .iter()
                .map(|&(er, es)| opposite_sign_s(&partition, spec.s, er, es))
                .collect()
        }
    };

    let mut last = None;
    for s in candidates {
        let report = check_flat(&partition, &s);
        if report.verdict {
            let coupling = STCoupling::new(s, partition.t_matrix())?;
            return Ok(Design { coupling, partition, report });
        }
        last = Some(report);
    }
    let report = last.expect("at least one candidate");
    Err(Error::NotFlat(format!(
        "{:?} case: first failing condition `{}`",
        spec.case,
        report.first_failure(1e-9).unwrap_or("case")
    )))
}

/// `s11 = s |v1|/|v2|`, `s22 = s |v2|/|v1|`, `s21 = s v2 v1* / (|v1||v2|)`.
fn same_sign_s(p: &Partition, s: f64) -> CMatrix {
    let (n1, n2) = (norm_sq(&p.v1).sqrt(), norm_sq(&p.v2).sqrt());
    let s21 = p.v2v1() * (s / (n1 * n2));
    CMatrix::from_row_slice(2, 2, &[linalg::re(s * n1 / n2), s21.conj(), s21, linalg::re(s * n2 / n1)])
}

/// `sqrt(|s11|/|s22|) = (√2 + e_ratio sgn(s)) |v1|/|v2|`, `s21 = e_s21 |s| v2 v1* / (|v1||v2|)`.
fn opposite_sign_s(p: &Partition, s: f64, e_ratio: f64, e_s21: f64) -> CMatrix {
    let (n1, n2) = (norm_sq(&p.v1).sqrt(), norm_sq(&p.v2).sqrt());
    let rho = n1 / n2;
    let sq2 = std::f64::consts::SQRT_2;
    let sgn = s.signum();
    let s11 = s * (sq2 + e_ratio * sgn) * rho;
    let s22 = -s * (sq2 - e_ratio * sgn) / rho;
    let s21 = p.v2v1() * (e_s21 * s.abs() / (n1 * n2));
    CMatrix::from_row_slice(2, 2, &[linalg::re(s11), s21.conj(), s21, linalg::re(s22)])
}

/// Which `S` accompanies the maximal-transmission `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SVariant {
    /// `S = 0`
    Zero,
    /// `S = s (1, ᾱ; α, 1)`
    Plus,
    /// `S = s (1 + √2, ᾱ; α, 1 - √2)`
    MinusUpper,
    /// `S = s (1 - √2, ᾱ; α, 1 + √2)`
    MinusLower,
}

impl std::str::FromStr for SVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zero" => Ok(Self::Zero),
            "plus" => Ok(Self::Plus),
            "minus-upper" | "minus_upper" => Ok(Self::MinusUpper),
            "minus-lower" | "minus_lower" => Ok(Self::MinusLower),
            other => Err(format!("unknown variant `{other}` (zero, plus, minus-upper, minus-lower)")),
        }
    }
}

/// `T = [[v, w], [α v, -α w]]` with `|v| = |w| = 1/√2` spread evenly over
/// `dim_v` controllers and `dim_w` drains, `S` per `variant`, and all
/// controllers at potential `v`. No flat-band check is applied.
pub fn maximal_coupling(
    alpha: C64,
    dim_v: usize,
    dim_w: usize,
    s: f64,
    variant: SVariant,
    v: f64,
) -> Result<(STCoupling, LineConfig)> {
    if (alpha.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::BadAlpha(alpha.norm()));
    }
    if dim_v == 0 || dim_w == 0 {
        return Err(Error::Infeasible("need at least one controller and one drain".into()));
    }
    let ev = linalg::re(1.0 / (2.0 * dim_v as f64).sqrt());
    let ew = linalg::re(1.0 / (2.0 * dim_w as f64).sqrt());
    let p = Partition::new(vec![ev; dim_v], vec![alpha * ev; dim_v], vec![ew; dim_w], vec![-alpha * ew; dim_w])?;
    let sq2 = std::f64::consts::SQRT_2;
    let (d1, d2) = match variant {
        SVariant::Zero => (0.0, 0.0),
        SVariant::Plus => (1.0, 1.0),
        SVariant::MinusUpper => (1.0 + sq2, 1.0 - sq2),
        SVariant::MinusLower => (1.0 - sq2, 1.0 + sq2),
    };
    let s_mat = if variant == SVariant::Zero {
        CMatrix::zeros(2, 2)
    } else {
        CMatrix::from_row_slice(2, 2, &[linalg::re(s * d1), alpha.conj() * s, alpha * s, linalg::re(s * d2)])
    };
    p.layout(&s_mat, v)
}

/// [`maximal_coupling`] followed by the flat-band check; fails with
/// [`Error::NotFlat`] when the constructed coupling does not pass it.
pub fn design_maximal(alpha: C64, dim_v: usize, dim_w: usize, s: f64, variant: SVariant) -> Result<Design> {
    let (coupling, lines) = maximal_coupling(alpha, dim_v, dim_w, s, variant, 1.0)?;
    let (partition, s_mat, _) = crate::flatband::partition_of(&coupling, &lines)?;
    let report = check_flat(&partition, &s_mat);
    if !report.verdict {
        return Err(Error::NotFlat(format!(
            "{variant:?} with s = {s}: first failing condition `{}`",
            report.first_failure(1e-9).unwrap_or("case")
        )));
    }
    Ok(Design { coupling, partition, report })
}

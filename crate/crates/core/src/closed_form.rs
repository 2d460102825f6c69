//! Closed-form transmission amplitudes for the special block layouts.
//!
//! These are kept as independent cross-checks of [`crate::scattering::transmission`];
//! every function here assumes a fixed placement of input, output and auxiliary
//! lines and builds its answer from the ST blocks directly.

use crate::coupling::{momentum, LineConfig, Role, STCoupling};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I};

fn scaled_momenta(energy: f64, potentials: &[f64]) -> Result<Vec<C64>> {
    let k = energy.sqrt();
    potentials.iter().map(|&v| momentum(energy, v).map(|m| m.value() / k)).collect()
}

fn aux_role(v: f64) -> Role {
    if v > 0.0 { Role::Controller(v) } else { Role::Drain }
}

/// Roles for `[input, output, aux...]`.
pub fn io_first_lines(potentials: &[f64]) -> LineConfig {
    let mut roles = vec![Role::Input, Role::Output];
    roles.extend(potentials.iter().map(|&v| aux_role(v)));
    LineConfig::new(roles).expect("one input, one output, non-negative potentials")
}

/// `r = 1` layout: input on line 1, output on line 2, `T = (t_2, ..., t_n)`,
/// `S = (s)`. `potentials` covers lines `3..n`.
///
/// `Trans(E) = 2 conj(t_2) / (1 + |t_2|^2 - s/(i√E) + Σ_{j≥3} (k_j/√E) |t_j|^2)`
pub fn closed_form_r1(t: &[C64], s: f64, potentials: &[f64], energy: f64) -> Result<C64> {
    if t.len() != potentials.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "T has {} entries but {} auxiliary potentials were given",
            t.len(),
            potentials.len()
        )));
    }
    let d = scaled_momenta(energy, potentials)?;
    let ik = I * energy.sqrt();
    let leak: C64 = t[1..].iter().zip(&d).map(|(tj, dj)| dj * tj.norm_sqr()).sum();
    let denom = 1.0 + t[0].norm_sqr() - s / ik + leak;
    Ok(2.0 * t[0].conj() / denom)
}

pub fn r1_coupling(t: &[C64], s: f64) -> STCoupling {
    STCoupling::from_raw(t.len() + 1, 1, CMatrix::from_element(1, 1, linalg::re(s)), linalg::row(t))
}

/// ST blocks for a vertex whose input and output columns of `B` are linearly
/// dependent. ST order is `[input, Ψ_cd (r-part), Ψ_cd (rest), output]` and
///
/// ```text
///     T = [ T1  t ]      S = [ s    S2 ]
///         [ T2  0 ]          [ S2*  S4 ]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct LinDepBlocks {
    pub s: f64,
    /// `1 x (r-1)`
    pub s2: CMatrix,
    /// `(r-1) x (r-1)`, Hermitian
    pub s4: CMatrix,
    /// `1 x (n-r-1)`
    pub t1: CMatrix,
    /// `(r-1) x (n-r-1)`
    pub t2: CMatrix,
    pub t: C64,
}

impl LinDepBlocks {
    pub fn r(&self) -> usize {
        self.s4.nrows() + 1
    }

    pub fn n(&self) -> usize {
        self.r() + self.t1.ncols() + 1
    }

    pub fn coupling(&self) -> STCoupling {
        let (n, r) = (self.n(), self.r());
        let m = self.t1.ncols();
        let mut s = CMatrix::zeros(r, r);
        s[(0, 0)] = linalg::re(self.s);
        s.view_mut((0, 1), (1, r - 1)).copy_from(&self.s2);
        s.view_mut((1, 0), (r - 1, 1)).copy_from(&self.s2.adjoint());
        s.view_mut((1, 1), (r - 1, r - 1)).copy_from(&self.s4);
        let mut t = CMatrix::zeros(r, n - r);
        t.view_mut((0, 0), (1, m)).copy_from(&self.t1);
        t.view_mut((1, 0), (r - 1, m)).copy_from(&self.t2);
        t[(0, m)] = self.t;
        STCoupling::from_raw(n, r, s, t)
    }

    /// Roles in ST order; `k2` covers the `r - 1` lines in the `S` block,
    /// `k3` the remaining auxiliary lines.
    pub fn lines(&self, k2_potentials: &[f64], k3_potentials: &[f64]) -> LineConfig {
        let mut roles = vec![Role::Input];
        roles.extend(k2_potentials.iter().chain(k3_potentials).map(|&v| aux_role(v)));
        roles.push(Role::Output);
        LineConfig::new(roles).expect("valid roles")
    }
}

/// `Trans(E) = 2 conj(t) / (1 + |t|^2 - f/(i√E))` with
/// `f = s - i T1 K3 T1* + (S2 - i T1 K3 T2*) (i K2 + i T2 K3 T2* - S4)^{-1} (S2* - i T2 K3 T1*)`.
pub fn closed_form_lindep(
    blocks: &LinDepBlocks,
    k2_potentials: &[f64],
    k3_potentials: &[f64],
    energy: f64,
) -> Result<C64> {
    let r1 = blocks.s4.nrows();
    let m = blocks.t1.ncols();
    if k2_potentials.len() != r1 || k3_potentials.len() != m || blocks.t2.shape() != (r1, m) {
        return Err(Error::DimensionMismatch("linear-dependence blocks and potentials disagree".into()));
    }
    let k2: Vec<C64> = k2_potentials.iter().map(|&v| momentum(energy, v).map(|k| k.value())).collect::<Result<_>>()?;
    let k3: Vec<C64> = k3_potentials.iter().map(|&v| momentum(energy, v).map(|k| k.value())).collect::<Result<_>>()?;
    let (k2, k3) = (linalg::diag(&k2), linalg::diag(&k3));
    let (t1, t2) = (&blocks.t1, &blocks.t2);

    let mut f = linalg::re(blocks.s) - (t1 * &k3 * t1.adjoint())[(0, 0)] * I;
    if r1 > 0 {
        let inner = &k2 * I + t2 * &k3 * t2.adjoint() * I - &blocks.s4;
        let left = &blocks.s2 - t1 * &k3 * t2.adjoint() * I;
        let right = blocks.s2.adjoint() - t2 * &k3 * t1.adjoint() * I;
        let x = linalg::solve_checked(&inner, &right).map_err(|cond| Error::SingularInner { energy, cond })?;
        f += (left * x)[(0, 0)];
    }
    let ik = I * energy.sqrt();
    Ok(2.0 * blocks.t.conj() / (1.0 + blocks.t.norm_sqr() - f / ik))
}

/// The 2x2 matrix `M(E)` of a reduced vertex with `B_diss = I` and the
/// amplitude `-2 M_21 / (1 + Tr M + det M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedForm {
    pub m: CMatrix,
    pub amplitude: C64,
}

impl ReducedForm {
    fn from_m(m: CMatrix) -> Self {
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let amplitude = -2.0 * m[(1, 0)] / (1.0 + m.trace() + det);
        Self { m, amplitude }
    }

    /// Full input/output scattering matrix `(I + M)^{-1} (I - M) = -I + 2 adj(I + M) / det(I + M)`.
    pub fn scattering(&self) -> CMatrix {
        let m = &self.m;
        let det = (1.0 + m[(0, 0)]) * (1.0 + m[(1, 1)]) - m[(0, 1)] * m[(1, 0)];
        let adj = CMatrix::from_row_slice(2, 2, &[1.0 + m[(1, 1)], -m[(0, 1)], -m[(1, 0)], 1.0 + m[(0, 0)]]);
        adj * (2.0 / det) - CMatrix::identity(2, 2)
    }
}

/// `r = 2` layout: input and output on lines 1, 2; `potentials` covers lines `3..n`.
/// `M(E) = T D T* - S/(i√E)` with `D = diag(k_j/√E)`.
pub fn closed_form_r2(s: &CMatrix, t: &CMatrix, potentials: &[f64], energy: f64) -> Result<ReducedForm> {
    if s.shape() != (2, 2) || t.nrows() != 2 || t.ncols() != potentials.len() {
        return Err(Error::DimensionMismatch("r = 2 layout needs 2x2 S and 2x(n-2) T".into()));
    }
    let d = linalg::diag(&scaled_momenta(energy, potentials)?);
    let ik = I * energy.sqrt();
    let m = t * d * t.adjoint() - s / ik;
    Ok(ReducedForm::from_m(m))
}

/// `r ≥ 3` scale-invariant layout `T = [T1; T2]` with `T1` the input/output rows.
/// `pot2` covers the `r - 2` auxiliary lines in the `S` block, `pot3` the rest.
///
/// Elimination gives `Ψ'_io = -i√E M Ψ_io` with
/// `M = T1 D3 (I + T2* D2^{-1} T2 D3)^{-1} T1*`, which tends to
/// `T1 (I + T2* T2)^{-1} T1*` at high energy.
pub fn closed_form_r3plus(t1: &CMatrix, t2: &CMatrix, pot2: &[f64], pot3: &[f64], energy: f64) -> Result<ReducedForm> {
    if t1.nrows() != 2 || t2.nrows() != pot2.len() || t1.ncols() != pot3.len() || t2.ncols() != pot3.len() {
        return Err(Error::DimensionMismatch("r >= 3 layout blocks and potentials disagree".into()));
    }
    let d2 = scaled_momenta(energy, pot2)?;
    if let Some(j) = d2.iter().position(|d| d.norm() == 0.0) {
        return Err(Error::SingularD2 { energy, line: j + 2 });
    }
    let d2_inv = linalg::diag(&d2.iter().map(|d| 1.0 / d).collect::<Vec<_>>());
    let d3 = linalg::diag(&scaled_momenta(energy, pot3)?);
    let m3 = pot3.len();
    let inner = CMatrix::identity(m3, m3) + t2.adjoint() * d2_inv * t2 * &d3;
    let x = linalg::solve_checked(&inner, &t1.adjoint()).map_err(|cond| Error::SingularInner { energy, cond })?;
    Ok(ReducedForm::from_m(t1 * d3 * x))
}

pub fn r3_coupling(t1: &CMatrix, t2: &CMatrix) -> STCoupling {
    let r = 2 + t2.nrows();
    let m = t1.ncols();
    let mut t = CMatrix::zeros(r, m);
    t.view_mut((0, 0), (2, m)).copy_from(t1);
    t.view_mut((2, 0), (r - 2, m)).copy_from(t2);
    STCoupling::from_raw(r + m, r, CMatrix::zeros(r, r), t)
}

//! Energy-dependent scattering on the star vertex.
//!
//! With all potentials zero the full `n x n` matrix follows from
//! `Sc(E) = -(A + i√E B)^{-1} (A - i√E B)`. With controllers or drains
//! attached, their boundary values are eliminated through
//! `ψ'_j(0) = i k_j ψ_j(0)`, which leaves a (generally non-self-adjoint)
//! 2x2 boundary condition between input and output. The same formula applied
//! to that pair gives the input/output scattering matrix; its `(1, 0)` entry is
//! the transmission amplitude.

use rayon::prelude::*;

use crate::coupling::{momentum, st_to_general, LineConfig, STCoupling};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, COND_LIMIT, I};

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub energy: f64,
    pub entries: CMatrix,
}

impl ScatteringMatrix {
    /// Entrywise maximum of `|Sc Sc* - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.entries.nrows();
        linalg::max_abs(&(&self.entries * self.entries.adjoint() - CMatrix::identity(n, n)))
    }
}

fn check_energy(energy: f64) -> Result<()> {
    if energy > 0.0 && energy.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveEnergy(energy))
    }
}

fn pencil_scattering(a: &CMatrix, b: &CMatrix, energy: f64) -> Result<CMatrix> {
    check_energy(energy)?;
    let ik = I * energy.sqrt();
    let lhs = a + b * ik;
    let rhs = a - b * ik;
    linalg::solve_checked(&lhs, &rhs)
        .map(|x| -x)
        .map_err(|cond| Error::SingularPencil { energy, cond })
}

/// Scattering matrix of a general self-adjoint pair at zero potential.
pub fn scattering_general(bc: &crate::coupling::GeneralBC, energy: f64) -> Result<ScatteringMatrix> {
    let entries = pencil_scattering(&bc.a, &bc.b, energy)?;
    Ok(ScatteringMatrix { energy, entries })
}

/// Scattering matrix straight from the ST blocks:
/// `Sc = -I + 2 [I; T*] (I + TT* - S/(i√E))^{-1} [I, T]`.
pub fn scattering_st(c: &STCoupling, energy: f64) -> Result<ScatteringMatrix> {
    c.validate()?;
    check_energy(energy)?;
    let (n, r) = (c.n, c.r);
    let mut entries = -CMatrix::identity(n, n);
    if r > 0 {
        let ik = I * energy.sqrt();
        let core = CMatrix::identity(r, r) + &c.t * c.t.adjoint() - &c.s / ik;
        let inv = linalg::inverse_checked(&core).map_err(|cond| Error::SingularCore { energy, cond })?;
        let mut left = CMatrix::zeros(n, r);
        left.view_mut((0, 0), (r, r)).fill_with_identity();
        left.view_mut((r, 0), (n - r, r)).copy_from(&c.t.adjoint());
        let right = left.adjoint();
        entries += (left * inv * right) * linalg::re(2.0);
    }
    Ok(ScatteringMatrix { energy, entries })
}

/// Reduced 2x2 boundary condition `A Ψ_io + B Ψ'_io = 0` between input and
/// output. Row scaling is whatever the elimination produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeBC {
    pub a: CMatrix,
    pub b: CMatrix,
    pub energy: f64,
}

impl DissipativeBC {
    /// Numerical rank of `(A | B)`.
    pub fn rank(&self) -> usize {
        let mut ab = CMatrix::zeros(2, 4);
        ab.view_mut((0, 0), (2, 2)).copy_from(&self.a);
        ab.view_mut((0, 2), (2, 2)).copy_from(&self.b);
        linalg::rank(&ab, 1e-10)
    }

    /// `AB* - BA*`; zero exactly when the reduced vertex conserves current.
    pub fn dissipation(&self) -> CMatrix {
        &self.a * self.b.adjoint() - &self.b * self.a.adjoint()
    }
}

/// Eliminates controller and drain boundary values from the ST equations.
///
/// The unknowns are `(ψ_i, ψ_o, ψ'_i, ψ'_o, Ψ_cd)`. Substituting
/// `Ψ'_cd = i K Ψ_cd` folds each auxiliary line into a single column; Gaussian
/// elimination with partial pivoting over those columns leaves two equations
/// in the input/output unknowns only.
pub fn reduce_vertex(c: &STCoupling, lines: &LineConfig, energy: f64) -> Result<DissipativeBC> {
    check_energy(energy)?;
    if lines.len() != c.n {
        return Err(Error::DimensionMismatch(format!(
            "coupling has {} lines, line config has {}",
            c.n,
            lines.len()
        )));
    }
    let bc = st_to_general(c)?;
    let n = c.n;
    let io = [lines.input(), lines.output()];
    let aux = lines.auxiliary();
    let m = aux.len();

    // [ C | A_io | B_io ]
    let mut aug = CMatrix::zeros(n, m + 4);
    for (col, &j) in aux.iter().enumerate() {
        let ik = I * momentum(energy, lines.potential(j))?.value();
        for row in 0..n {
            aug[(row, col)] = bc.a[(row, j)] + ik * bc.b[(row, j)];
        }
    }
    for (col, &j) in io.iter().enumerate() {
        for row in 0..n {
            aug[(row, m + col)] = bc.a[(row, j)];
            aug[(row, m + 2 + col)] = bc.b[(row, j)];
        }
    }

    if m > 0 {
        let block = aug.columns(0, m).into_owned();
        let cond = linalg::cond_rank(&block, m);
        if !cond.is_finite() || cond > COND_LIMIT {
            return Err(Error::DegenerateElimination { energy, cond });
        }
    }

    for col in 0..m {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[(x, col)].norm().total_cmp(&aug[(y, col)].norm()))
            .expect("non-empty pivot range");
        aug.swap_rows(col, pivot);
        let p = aug[(col, col)];
        for row in col + 1..n {
            let factor = aug[(row, col)] / p;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for k in col..m + 4 {
                let v = aug[(col, k)];
                aug[(row, k)] -= factor * v;
            }
        }
    }

    let a = aug.view((m, m), (2, 2)).into_owned();
    let b = aug.view((m, m + 2), (2, 2)).into_owned();
    Ok(DissipativeBC { a, b, energy })
}

/// Input/output scattering matrix of a reduced vertex. Entry `(1, 0)` is the
/// transmission amplitude, `(0, 0)` the reflection amplitude.
pub fn dissipative_scattering(d: &DissipativeBC, energy: f64) -> Result<ScatteringMatrix> {
    let entries = pencil_scattering(&d.a, &d.b, energy)?;
    Ok(ScatteringMatrix { energy, entries })
}

/// One point of an input-to-output transmission curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionSample {
    pub energy: f64,
    /// Transmission amplitude.
    pub t: C64,
    /// Reflection amplitude back into the input line.
    pub r_refl: C64,
    /// Transmission probability `|t|^2`.
    pub p: f64,
}

impl TransmissionSample {
    /// `|r|^2 + |t|^2`; below one when current leaks into open auxiliary lines.
    pub fn flux(&self) -> f64 {
        self.r_refl.norm_sqr() + self.p
    }
}

pub fn transmission(c: &STCoupling, lines: &LineConfig, energy: f64) -> Result<TransmissionSample> {
    let d = reduce_vertex(c, lines, energy)?;
    let sc = dissipative_scattering(&d, energy)?;
    let t = sc.entries[(1, 0)];
    Ok(TransmissionSample { energy, t, r_refl: sc.entries[(0, 0)], p: t.norm_sqr() })
}

pub fn transmission_probability(c: &STCoupling, lines: &LineConfig, energy: f64) -> Result<f64> {
    transmission(c, lines, energy).map(|s| s.p)
}

/// Evaluates [`transmission`] on every energy in parallel; results keep the
/// order of `energies`.
pub fn sweep(c: &STCoupling, lines: &LineConfig, energies: &[f64]) -> Vec<Result<TransmissionSample>> {
    energies.par_iter().map(|&e| transmission(c, lines, e)).collect()
}

/// Energy grid specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    Linear,
    Log,
}

/// `points` energies from `e_min` to `e_max` inclusive.
pub fn energy_grid(e_min: f64, e_max: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    assert!(points >= 2, "grid needs at least two points");
    let last = (points - 1) as f64;
    match spacing {
        Spacing::Linear => (0..points).map(|i| e_min + (e_max - e_min) * i as f64 / last).collect(),
        Spacing::Log => {
            let (lo, hi) = (e_min.ln(), e_max.ln());
            (0..points).map(|i| (lo + (hi - lo) * i as f64 / last).exp()).collect()
        }
    }
}

/// `points` energies strictly inside `(0, v)`.
pub fn open_band_grid(v: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|i| v * i as f64 / (points + 1) as f64).collect()
}

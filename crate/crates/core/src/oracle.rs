//! Brute-force scattering solve used to cross-check the reduction.
//!
//! Takes the wave `e^{-i√E x} + r e^{i√E x}` on the input and `a_j e^{i k_j x}`
//! on every other line, imposes the full `n` boundary conditions, and solves
//! the resulting `n x n` system for `(r, a_j)` directly. No elimination order
//! or reduced boundary condition is involved.

use crate::coupling::{momentum, st_to_general, LineConfig, STCoupling};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I};

/// All outgoing amplitudes for unit incidence on the input line.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub energy: f64,
    /// Reflection amplitude on the input line.
    pub reflection: C64,
    /// Outgoing amplitude on each line in ST order; the input entry is zero.
    pub amplitudes: Vec<C64>,
    /// Momentum on each line.
    pub momenta: Vec<C64>,
    input: usize,
    output: usize,
}

impl OracleSolution {
    pub fn transmission(&self) -> C64 {
        self.amplitudes[self.output]
    }

    /// `|r|^2 + Σ (k_j/√E) |a_j|^2` over lines with real positive momentum.
    pub fn flux_sum(&self) -> f64 {
        let k_in = self.energy.sqrt();
        let outgoing: f64 = self
            .amplitudes
            .iter()
            .zip(&self.momenta)
            .enumerate()
            .filter(|(j, (_, k))| *j != self.input && k.im == 0.0 && k.re > 0.0)
            .map(|(_, (a, k))| k.re / k_in * a.norm_sqr())
            .sum();
        self.reflection.norm_sqr() + outgoing
    }
}

pub fn full_solve_oracle(c: &STCoupling, lines: &LineConfig, energy: f64) -> Result<OracleSolution> {
    if !(energy > 0.0) {
        return Err(Error::NonpositiveEnergy(energy));
    }
    if lines.len() != c.n {
        return Err(Error::DimensionMismatch(format!(
            "coupling has {} lines, line config has {}",
            c.n,
            lines.len()
        )));
    }
    let bc = st_to_general(c)?;
    let n = c.n;
    let input = lines.input();
    let momenta = (0..n)
        .map(|j| momentum(energy, lines.potential(j)).map(|k| k.value()))
        .collect::<Result<Vec<_>>>()?;

    // Unknown j is r when j == input, a_j otherwise.
    let mut system = CMatrix::zeros(n, n);
    let mut rhs = CMatrix::zeros(n, 1);
    for row in 0..n {
        for j in 0..n {
            system[(row, j)] = bc.a[(row, j)] + I * momenta[j] * bc.b[(row, j)];
        }
        rhs[(row, 0)] = -(bc.a[(row, input)] - I * momenta[input] * bc.b[(row, input)]);
    }
    let x = linalg::solve_checked(&system, &rhs).map_err(|cond| Error::SingularSystem { energy, cond })?;

    let mut amplitudes: Vec<C64> = x.column(0).iter().copied().collect();
    let reflection = amplitudes[input];
    amplitudes[input] = C64::new(0.0, 0.0);
    Ok(OracleSolution { energy, reflection, amplitudes, momenta, input, output: lines.output() })
}

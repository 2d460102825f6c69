//! Vertex couplings in ST-form and general `(A, B)` form, edge roles, and the
//! momentum map.
//!
//! Boundary conditions are `A Ψ(0) + B Ψ'(0) = 0`. The ST-form fixes
//!
//! ```text
//!     A = -[ S    0 ]      B = [ I  T ]
//!          [ -T*  I ]          [ 0  0 ]
//! ```
//!
//! with `S` Hermitian of order `r` and `T` an arbitrary `r x (n - r)` matrix,
//! which makes the pair self-adjoint by construction. Coordinates are in
//! "ST order": the first `r` lines carry the independent derivative rows.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::Tolerances;

/// A vertex coupling in ST-form.
#[derive(Debug, Clone, PartialEq)]
pub struct STCoupling {
    pub n: usize,
    pub r: usize,
    /// Hermitian `r x r` block.
    pub s: CMatrix,
    /// `r x (n - r)` block.
    pub t: CMatrix,
}

impl STCoupling {
    /// Builds and validates a coupling; `n` and `r` are read off the block shapes.
    pub fn new(s: CMatrix, t: CMatrix) -> Result<Self> {
        let r = s.nrows();
        let n = r + t.ncols();
        let c = Self { n, r, s, t };
        validate_st(&c)?;
        Ok(c)
    }

    /// Builds a coupling without checking any invariant.
    pub fn from_raw(n: usize, r: usize, s: CMatrix, t: CMatrix) -> Self {
        Self { n, r, s, t }
    }

    /// Scale-invariant coupling (`S = 0`).
    pub fn scale_invariant(t: CMatrix) -> Result<Self> {
        let r = t.nrows();
        Self::new(CMatrix::zeros(r, r), t)
    }

    /// Standard Kirchhoff (free) coupling of degree `n`: `r = 1`, `T = (1, ..., 1)`, `S = 0`.
    pub fn kirchhoff(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            n,
            r: 1,
            s: CMatrix::zeros(1, 1),
            t: CMatrix::from_element(1, n - 1, linalg::re(1.0)),
        }
    }

    /// Neumann conditions `Ψ'(0) = 0` (`r = n`, `S = 0`).
    pub fn neumann(n: usize) -> Self {
        Self { n, r: n, s: CMatrix::zeros(n, n), t: CMatrix::zeros(n, 0) }
    }

    /// Dirichlet conditions `Ψ(0) = 0` (`r = 0`).
    pub fn dirichlet(n: usize) -> Self {
        Self { n, r: 0, s: CMatrix::zeros(0, 0), t: CMatrix::zeros(0, n) }
    }

    pub fn validate(&self) -> Result<()> {
        validate_st(self)
    }

    pub fn to_general(&self) -> Result<GeneralBC> {
        st_to_general(self)
    }
}

/// Checks the ST-form invariants with default tolerances.
pub fn validate_st(c: &STCoupling) -> Result<()> {
    validate_st_tol(c, &Tolerances::default())
}

pub fn validate_st_tol(c: &STCoupling, tol: &Tolerances) -> Result<()> {
    if c.r > c.n {
        return Err(Error::DimensionMismatch(format!("r = {} exceeds n = {}", c.r, c.n)));
    }
    if c.s.shape() != (c.r, c.r) {
        return Err(Error::DimensionMismatch(format!(
            "S is {}x{}, expected {}x{}",
            c.s.nrows(),
            c.s.ncols(),
            c.r,
            c.r
        )));
    }
    if c.t.shape() != (c.r, c.n - c.r) {
        return Err(Error::DimensionMismatch(format!(
            "T is {}x{}, expected {}x{}",
            c.t.nrows(),
            c.t.ncols(),
            c.r,
            c.n - c.r
        )));
    }
    for i in 0..c.r {
        for j in 0..=i {
            let residual = (c.s[(i, j)] - c.s[(j, i)].conj()).norm();
            if !(residual <= tol.hermitian) {
                return Err(Error::NonHermitianS { row: i, col: j, residual });
            }
        }
    }
    if c.t.iter().chain(c.s.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DimensionMismatch("non-finite matrix entry".into()));
    }
    Ok(())
}

/// General boundary-condition pair `A Ψ(0) + B Ψ'(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralBC {
    pub a: CMatrix,
    pub b: CMatrix,
}

impl GeneralBC {
    pub fn new(a: CMatrix, b: CMatrix) -> Result<Self> {
        if a.shape() != b.shape() || a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "A is {:?}, B is {:?}; both must be square of equal order",
                a.shape(),
                b.shape()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn dirichlet(n: usize) -> Self {
        Self { a: CMatrix::identity(n, n), b: CMatrix::zeros(n, n) }
    }

    pub fn neumann(n: usize) -> Self {
        Self { a: CMatrix::zeros(n, n), b: CMatrix::identity(n, n) }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}

/// `A = -[[S, 0], [-T*, I]]`, `B = [[I, T], [0, 0]]`.
pub fn st_to_general(c: &STCoupling) -> Result<GeneralBC> {
    validate_st(c)?;
    let (n, r) = (c.n, c.r);
    let mut a = CMatrix::zeros(n, n);
    let mut b = CMatrix::zeros(n, n);
    for i in 0..r {
        for j in 0..r {
            a[(i, j)] = -c.s[(i, j)];
        }
        b[(i, i)] = linalg::re(1.0);
        for j in 0..n - r {
            b[(i, r + j)] = c.t[(i, j)];
        }
    }
    for i in 0..n - r {
        for j in 0..r {
            a[(r + i, j)] = c.t[(j, i)].conj();
        }
        a[(r + i, r + i)] = linalg::re(-1.0);
    }
    Ok(GeneralBC { a, b })
}

/// Outcome of the self-adjointness test on `(A, B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfAdjointness {
    pub self_adjoint: bool,
    pub rank: usize,
    /// Entrywise maximum of `|AB* - BA*|`.
    pub commutator_residual: f64,
}

pub fn check_selfadjoint(bc: &GeneralBC) -> SelfAdjointness {
    check_selfadjoint_tol(bc, &Tolerances::default())
}

pub fn check_selfadjoint_tol(bc: &GeneralBC, tol: &Tolerances) -> SelfAdjointness {
    let n = bc.order();
    let mut ab = CMatrix::zeros(n, 2 * n);
    ab.view_mut((0, 0), (n, n)).copy_from(&bc.a);
    ab.view_mut((0, n), (n, n)).copy_from(&bc.b);
    let rank = linalg::rank(&ab, tol.rank_rel);
    let comm = &bc.a * bc.b.adjoint() - &bc.b * bc.a.adjoint();
    let commutator_residual = linalg::max_abs(&comm);
    SelfAdjointness {
        self_adjoint: rank == n && commutator_residual < tol.hermitian,
        rank,
        commutator_residual,
    }
}

/// Role of one edge of the star.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Role {
    Input,
    Output,
    /// Controlling line carrying a constant potential `V > 0`.
    Controller(f64),
    Drain,
}

impl Role {
    pub fn potential(&self) -> f64 {
        match *self {
            Role::Controller(v) => v,
            _ => 0.0,
        }
    }
}

/// Per-line roles, indexed in ST order.
#[derive(Debug, Clone, PartialEq)]
pub struct LineConfig {
    roles: Vec<Role>,
    input: usize,
    output: usize,
}

impl LineConfig {
    pub fn new(roles: Vec<Role>) -> Result<Self> {
        let inputs: Vec<usize> = positions(&roles, |r| matches!(r, Role::Input));
        let outputs: Vec<usize> = positions(&roles, |r| matches!(r, Role::Output));
        if inputs.len() != 1 || outputs.len() != 1 {
            return Err(Error::InvalidLineConfig(format!(
                "need exactly one input and one output, found {} and {}",
                inputs.len(),
                outputs.len()
            )));
        }
        for (j, role) in roles.iter().enumerate() {
            if let Role::Controller(v) = role {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidLineConfig(format!(
                        "controller on line {j} has potential {v}; must be > 0"
                    )));
                }
            }
        }
        Ok(Self { input: inputs[0], output: outputs[0], roles })
    }

    /// Input on line 0, output on line 1, then the given controller
    /// potentials, then `drains` drains.
    pub fn standard(controllers: &[f64], drains: usize) -> Result<Self> {
        let mut roles = vec![Role::Input, Role::Output];
        roles.extend(controllers.iter().map(|&v| Role::Controller(v)));
        roles.extend(std::iter::repeat_n(Role::Drain, drains));
        Self::new(roles)
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn potential(&self, line: usize) -> f64 {
        self.roles[line].potential()
    }

    /// Controller and drain lines in ST order.
    pub fn auxiliary(&self) -> Vec<usize> {
        (0..self.roles.len()).filter(|&j| j != self.input && j != self.output).collect()
    }

    pub fn controllers(&self) -> Vec<usize> {
        positions(&self.roles, |r| matches!(r, Role::Controller(_)))
    }

    pub fn drains(&self) -> Vec<usize> {
        positions(&self.roles, |r| matches!(r, Role::Drain))
    }

    /// Largest controller potential, if any controller exists.
    pub fn max_potential(&self) -> Option<f64> {
        self.roles.iter().filter_map(|r| match r {
            Role::Controller(v) => Some(*v),
            _ => None,
        }).reduce(f64::max)
    }
}

fn positions(roles: &[Role], pred: impl Fn(&Role) -> bool) -> Vec<usize> {
    roles.iter().enumerate().filter(|(_, r)| pred(r)).map(|(j, _)| j).collect()
}

/// Wavenumber on a line with potential `V` at energy `E` (units `ħ = 2m = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum(pub C64);

impl Momentum {
    pub fn value(self) -> C64 {
        self.0
    }

    /// Open channels carry real, positive momentum.
    pub fn is_open(self) -> bool {
        self.0.im == 0.0 && self.0.re > 0.0
    }
}

/// `sqrt(E - V)` above the potential, `i sqrt(V - E)` below it, and `0` at `E = V`.
pub fn momentum(energy: f64, potential: f64) -> Result<Momentum> {
    if !(energy > 0.0) {
        return Err(Error::NonpositiveEnergy(energy));
    }
    let k = if energy > potential {
        C64::new((energy - potential).sqrt(), 0.0)
    } else if energy < potential {
        C64::new(0.0, (potential - energy).sqrt())
    } else {
        C64::new(0.0, 0.0)
    };
    Ok(Momentum(k))
}

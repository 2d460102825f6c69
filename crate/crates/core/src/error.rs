use thiserror::Error;

/// Errors produced by coupling validation, scattering evaluation and filter design.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NonHermitianS: S[{row}][{col}] differs from conj(S[{col}][{row}]) by {residual:e}")]
    NonHermitianS { row: usize, col: usize, residual: f64 },

    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("NonpositiveEnergy: E = {0}")]
    NonpositiveEnergy(f64),

    #[error("InvalidLineConfig: {0}")]
    InvalidLineConfig(String),

    #[error("SingularPencil at E = {energy}: condition number {cond:e}")]
    SingularPencil { energy: f64, cond: f64 },

    #[error("SingularCore at E = {energy}: condition number {cond:e}")]
    SingularCore { energy: f64, cond: f64 },

    #[error("DegenerateElimination at E = {energy}: controller/drain block condition number {cond:e}")]
    DegenerateElimination { energy: f64, cond: f64 },

    #[error("SingularInner at E = {energy}: condition number {cond:e}")]
    SingularInner { energy: f64, cond: f64 },

    #[error("SingularD2 at E = {energy}: line {line} has zero momentum")]
    SingularD2 { energy: f64, line: usize },

    #[error("SingularSystem at E = {energy}: condition number {cond:e}")]
    SingularSystem { energy: f64, cond: f64 },

    #[error("ConfigMismatch: {0}")]
    ConfigMismatch(String),

    #[error("UnsupportedLayout: {0}")]
    UnsupportedLayout(String),

    #[error("BadAlpha: |alpha| = {0}, expected 1")]
    BadAlpha(f64),

    #[error("Infeasible: {0}")]
    Infeasible(String),

    #[error("InfeasibleNegCase: |v1|^2 = {0} < 1/3 makes |w1|^2 = 3|v1|^2 - 1 negative")]
    InfeasibleNegCase(f64),

    #[error("NotFlat: constructed coupling fails the flat-band check ({0})")]
    NotFlat(String),
}

pub type Result<T> = std::result::Result<T, Error>;

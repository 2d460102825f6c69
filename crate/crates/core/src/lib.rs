//! Scattering on quantum star graphs with ST-form vertex couplings, and the
//! design of couplings that act as potential-controlled band-pass filters.
//!
//! A star of `n` half-lines meets in one vertex. One line is the input, one the
//! output; the rest are controllers (constant potential `V > 0`) or drains
//! (zero potential). The crate computes the input-to-output transmission
//! probability `P(E)`, checks whether a coupling makes `P` flat on `(0, V)`,
//! and constructs couplings that do.
//!
//! ```
//! use qgf::design::{maximal_coupling, SVariant};
//! use qgf::linalg::c;
//! use qgf::scattering::transmission_probability;
//!
//! let (st, lines) = maximal_coupling(c(1.0, 0.0), 1, 1, 0.0, SVariant::Zero, 1.0).unwrap();
//! for e in [0.1, 0.5, 0.9] {
//!     let p = transmission_probability(&st, &lines, e).unwrap();
//!     assert!((p - 0.25).abs() < 1e-12);
//! }
//! assert!(transmission_probability(&st, &lines, 5.0).unwrap() < 0.01);
//! ```

pub mod closed_form;
pub mod config;
pub mod coupling;
pub mod design;
pub mod error;
pub mod flatband;
pub mod linalg;
pub mod optimize;
pub mod oracle;
pub mod probe;
pub mod scattering;

pub use coupling::{momentum, GeneralBC, LineConfig, Momentum, Role, STCoupling};
pub use error::{Error, Result};
pub use scattering::{transmission, TransmissionSample};

/// Numerical tolerances shared by validation and flat-band checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute entrywise tolerance for Hermiticity of `S` and for `AB* - BA*`.
    pub hermitian: f64,
    /// Relative singular-value threshold for numerical rank.
    pub rank_rel: f64,
    /// Absolute tolerance on flat-band residuals.
    pub flat: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { hermitian: 1e-10, rank_rel: 1e-10, flat: 1e-9 }
    }
}

impl Tolerances {
    /// Parses an override string.
    ///
    /// Either a single number, which replaces every tolerance, or a comma list
    /// of `key=value` pairs with keys `hermitian`, `rank`, `flat`.
    pub fn parse(spec: &str) -> std::result::Result<Self, String> {
        let mut tol = Self::default();
        let spec = spec.trim();
        if let Ok(v) = spec.parse::<f64>() {
            return Ok(Self { hermitian: v, rank_rel: v, flat: v });
        }
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let value: f64 = value.trim().parse().map_err(|e| format!("bad value for `{key}`: {e}"))?;
            match key.trim() {
                "hermitian" => tol.hermitian = value,
                "rank" => tol.rank_rel = value,
                "flat" => tol.flat = value,
                other => return Err(format!("unknown tolerance `{other}`")),
            }
        }
        Ok(tol)
    }

    /// Defaults, overridden by the `QGF_TOL` environment variable when set.
    pub fn from_env() -> std::result::Result<Self, String> {
        match std::env::var("QGF_TOL") {
            Ok(s) => Self::parse(&s),
            Err(_) => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_overrides() {
        assert_eq!(Tolerances::parse("1e-6").unwrap().flat, 1e-6);
        let t = Tolerances::parse("flat=1e-7, hermitian=1e-12").unwrap();
        assert_eq!((t.flat, t.hermitian, t.rank_rel), (1e-7, 1e-12, 1e-10));
        assert!(Tolerances::parse("speed=3").is_err());
    }
}

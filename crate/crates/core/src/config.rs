//! JSON coupling files.
//!
//! ```text
//! {
//!   "n": 4, "r": 2,
//!   "S": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
//!   "T": [[[0.7071, 0], [0.7071, 0]], [[0.7071, 0], [-0.7071, 0]]],
//!   "lines": [{"role": "input"}, {"role": "output"},
//!             {"role": "controller", "V": 1.0}, {"role": "drain"}],
//!   "permutation": [0, 1, 2, 3],
//!   "design": { ... }
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. `S` is `r x r` and `T` is
//! `r x (n - r)`, both indexed in ST order: the first `r` coordinates are the
//! lines whose derivative rows are independent. `lines` is listed in file
//! order; `permutation[i]` is the ST index of file line `i` and defaults to
//! the identity. The optional `design` block records the parameters a
//! coupling was synthesized from and is not needed to evaluate it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coupling::{validate_st_tol, LineConfig, Role, STCoupling};
use crate::design::DesignSpec;
use crate::error::Error;
use crate::linalg::{CMatrix, C64};
use crate::Tolerances;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("ParseError at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        ConfigError::Parse { line: e.line(), column: e.column(), message }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum LineEntry {
    Input,
    Output,
    Controller {
        #[serde(rename = "V")]
        v: f64,
    },
    Drain,
}

impl From<LineEntry> for Role {
    fn from(e: LineEntry) -> Self {
        match e {
            LineEntry::Input => Role::Input,
            LineEntry::Output => Role::Output,
            LineEntry::Controller { v } => Role::Controller(v),
            LineEntry::Drain => Role::Drain,
        }
    }
}

impl From<Role> for LineEntry {
    fn from(r: Role) -> Self {
        match r {
            Role::Input => LineEntry::Input,
            Role::Output => LineEntry::Output,
            Role::Controller(v) => LineEntry::Controller { v },
            Role::Drain => LineEntry::Drain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingFile {
    pub n: usize,
    pub r: usize,
    #[serde(rename = "S")]
    pub s: Vec<Vec<C64>>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<C64>>,
    pub lines: Vec<LineEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSpec>,
}

fn to_matrix(name: &str, rows: &[Vec<C64>], nrows: usize, ncols: usize) -> Result<CMatrix, Error> {
    // An r x 0 block may be written as `[]` or as r empty rows.
    if ncols == 0 && (rows.is_empty() || rows.iter().all(Vec::is_empty)) {
        return Ok(CMatrix::zeros(nrows, 0));
    }
    if rows.len() != nrows || rows.iter().any(|row| row.len() != ncols) {
        let shape: Vec<usize> = rows.iter().map(Vec::len).collect();
        return Err(Error::DimensionMismatch(format!(
            "{name} must be {nrows}x{ncols}; got {} rows with lengths {shape:?}",
            rows.len()
        )));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn from_matrix(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl CouplingFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// File contents for a coupling whose lines are already in ST order.
    pub fn from_coupling(c: &STCoupling, lines: &LineConfig) -> Self {
        Self {
            n: c.n,
            r: c.r,
            s: from_matrix(&c.s),
            t: from_matrix(&c.t),
            lines: lines.roles().iter().map(|&r| r.into()).collect(),
            permutation: None,
            design: None,
        }
    }

    pub fn with_design(mut self, spec: DesignSpec) -> Self {
        self.design = Some(spec);
        self
    }

    /// Pretty JSON with each matrix row and line entry on a single line.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("plain data serializes");
        let mut out = String::new();
        write_value(&mut out, &value, 0);
        out.push('\n');
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// ST index of each file line.
    fn st_index(&self) -> Result<Vec<usize>, Error> {
        let n = self.lines.len();
        let Some(p) = &self.permutation else {
            return Ok((0..n).collect());
        };
        let mut seen = vec![false; n];
        if p.len() != n || p.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::InvalidLineConfig(format!(
                "permutation {p:?} is not a permutation of 0..{n}"
            )));
        }
        Ok(p.clone())
    }

    /// Roles in ST order.
    pub fn line_config(&self) -> Result<LineConfig, Error> {
        let perm = self.st_index()?;
        let mut roles = vec![Role::Drain; self.lines.len()];
        for (i, &k) in perm.iter().enumerate() {
            roles[k] = self.lines[i].into();
        }
        LineConfig::new(roles)
    }

    pub fn build(&self) -> Result<(STCoupling, LineConfig), Error> {
        self.build_tol(&Tolerances::default())
    }

    /// Checks shapes, the permutation, Hermiticity of `S` and the line roles.
    /// An `S` that is Hermitian within `tol.hermitian` is replaced by its
    /// Hermitian part `(S + S*)/2`.
    pub fn build_tol(&self, tol: &Tolerances) -> Result<(STCoupling, LineConfig), Error> {
        if self.r > self.n {
            return Err(Error::DimensionMismatch(format!("r = {} exceeds n = {}", self.r, self.n)));
        }
        if self.lines.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "n = {} but {} lines are listed",
                self.n,
                self.lines.len()
            )));
        }
        let s = to_matrix("S", &self.s, self.r, self.r)?;
        let t = to_matrix("T", &self.t, self.r, self.n - self.r)?;
        let mut c = STCoupling::from_raw(self.n, self.r, s, t);
        validate_st_tol(&c, tol)?;
        c.s = (&c.s + c.s.adjoint()).map(|z| z * 0.5);
        Ok((c, self.line_config()?))
    }
}

fn nesting(v: &serde_json::Value) -> usize {
    match v {
        serde_json::Value::Array(a) => 1 + a.iter().map(nesting).max().unwrap_or(0),
        serde_json::Value::Object(o) => 1 + o.values().map(nesting).max().unwrap_or(0),
        _ => 0,
    }
}

fn write_inline(out: &mut String, v: &serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_inline(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                out.push_str(&serde_json::to_string(key).expect("string key"));
                out.push_str(": ");
                write_inline(out, item);
            }
            out.push('}');
        }
        scalar => out.push_str(&serde_json::to_string(scalar).expect("scalar")),
    }
}

/// Containers nested at most two deep are written inline.
fn write_value(out: &mut String, v: &serde_json::Value, indent: usize) {
    use serde_json::Value;
    if nesting(v) <= 2 {
        write_inline(out, v);
        return;
    }
    let pad = "  ".repeat(indent + 1);
    match v {
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad);
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&serde_json::to_string(key).expect("string key"));
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
        _ => unreachable!("scalars have nesting 0"),
    }
}

/// Reads the `design` block from any JSON object that carries one.
pub fn load_design_spec(text: &str) -> Result<DesignSpec, ConfigError> {
    #[derive(Deserialize)]
    struct Wrapper {
        design: DesignSpec,
    }
    let w: Wrapper = serde_json::from_str(text)?;
    Ok(w.design)
}

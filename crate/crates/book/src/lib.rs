//! The guide's chapters as documentation modules, so that every Rust snippet
//! in the book is compiled and run by `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/couplings.md")]
pub mod couplings {}

#[doc = include_str!("../../../book/src/scattering.md")]
pub mod scattering {}

#[doc = include_str!("../../../book/src/flat_passband.md")]
pub mod flat_passband {}

#[doc = include_str!("../../../book/src/design.md")]
pub mod design {}

#[doc = include_str!("../../../book/src/optimization.md")]
pub mod optimization {}

#[doc = include_str!("../../../book/src/impossibility.md")]
pub mod impossibility {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

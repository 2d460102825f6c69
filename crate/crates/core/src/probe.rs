//! Randomized checks that rank-one and linearly dependent couplings cannot
//! produce a flat passband with vanishing high-energy transmission.
//!
//! For both layouts the amplitude tends to `2 conj(t) / (1 + |t|² + ...)` as
//! `E → ∞`, so a nonzero input-output entry `t` of `T` keeps `P` away from
//! zero, while `t = 0` decouples the output completely. A violation is a
//! sample whose `P` is positive and flat on `(0, min V)` yet (numerically)
//! zero at high energy, or a sample contradicting either limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::{io_first_lines, r1_coupling, LinDepBlocks};
use crate::coupling::{LineConfig, STCoupling};
use crate::design::{design_flat, Design, DesignCase, DesignSpec};
use crate::linalg::{self, CMatrix, C64};
use crate::scattering::transmission_probability;

/// Energy standing in for the high-energy limit.
pub const HIGH_ENERGY: f64 = 1e6;
/// `P` below this counts as zero.
pub const ZERO_P: f64 = 1e-9;
const FLAT_POINTS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub layout: String,
    pub seed: u64,
    pub samples: usize,
    /// Samples with a nonzero input-output entry of `T`.
    pub coupled: usize,
    /// Samples with that entry forced to zero.
    pub decoupled: usize,
    /// Samples where the solver reported a singular system.
    pub skipped: usize,
    pub violations: usize,
    /// Smallest `P(HIGH_ENERGY)` among coupled samples.
    pub min_limit_p: f64,
    /// Largest `P` seen anywhere on a decoupled sample.
    pub max_decoupled_p: f64,
}

enum Outcome {
    Coupled { limit_p: f64, violation: bool },
    Decoupled { max_p: f64, violation: bool },
    Skipped,
}

fn complex(rng: &mut ChaCha8Rng) -> C64 {
    linalg::c(rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0))
}

fn potential(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.1..=10.0)
}

/// Auxiliary potentials; at least one line is a controller, the others are
/// controllers or drains at random.
fn aux_potentials(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..count).map(|_| if rng.random_bool(0.6) { potential(rng) } else { 0.0 }).collect();
    if !v.iter().any(|&p| p > 0.0) {
        let k = rng.random_range(0..count);
        v[k] = potential(rng);
    }
    v
}

fn hermitian(rng: &mut ChaCha8Rng, r: usize) -> CMatrix {
    let m = CMatrix::from_fn(r, r, |_, _| complex(rng));
    (&m + m.adjoint()).map(|z| z * 0.5)
}

fn evaluate(c: &STCoupling, lines: &LineConfig, t_zero: bool) -> Outcome {
    let v_min = lines.controllers().iter().map(|&j| lines.potential(j)).fold(f64::INFINITY, f64::min);
    let grid = crate::scattering::open_band_grid(v_min, FLAT_POINTS);
    let below: Result<Vec<f64>, _> = grid.iter().map(|&e| transmission_probability(c, lines, e)).collect();
    let (Ok(below), Ok(limit_p)) = (below, transmission_probability(c, lines, HIGH_ENERGY)) else {
        return Outcome::Skipped;
    };
    let (lo, hi) = below.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let flat_positive = hi - lo < 1e-9 && lo > ZERO_P;
    let decaying = limit_p < ZERO_P;
    if t_zero {
        let max_p = hi.max(limit_p);
        Outcome::Decoupled { max_p, violation: max_p > ZERO_P || (flat_positive && decaying) }
    } else {
        Outcome::Coupled { limit_p, violation: decaying || (flat_positive && decaying) }
    }
}

fn collect(layout: &str, seed: u64, outcomes: Vec<Outcome>) -> ProbeReport {
    let mut rep = ProbeReport {
        layout: layout.into(),
        seed,
        samples: outcomes.len(),
        coupled: 0,
        decoupled: 0,
        skipped: 0,
        violations: 0,
        min_limit_p: f64::INFINITY,
        max_decoupled_p: 0.0,
    };
    for o in outcomes {
        match o {
            Outcome::Coupled { limit_p, violation } => {
                rep.coupled += 1;
                rep.violations += violation as usize;
                rep.min_limit_p = rep.min_limit_p.min(limit_p);
            }
            Outcome::Decoupled { max_p, violation } => {
                rep.decoupled += 1;
                rep.violations += violation as usize;
                rep.max_decoupled_p = rep.max_decoupled_p.max(max_p);
            }
            Outcome::Skipped => rep.skipped += 1,
        }
    }
    rep
}

/// Every tenth sample has `t = 0`.
fn forces_zero(i: usize) -> bool {
    i % 10 == 9
}

/// Per-sample generator seeded from `(seed, i)`, so results do not depend on
/// thread scheduling.
fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Random rank-one couplings on `n ∈ [3, 8]` lines with input on line 0 and
/// output on line 1.
pub fn r1_sample(seed: u64, i: usize) -> (STCoupling, LineConfig, bool) {
    let mut rng = sample_rng(seed, i);
    let n = rng.random_range(3..=8);
    let mut t: Vec<C64> = (0..n - 1).map(|_| complex(&mut rng)).collect();
    let zero = forces_zero(i);
    if zero {
        t[0] = C64::new(0.0, 0.0);
    }
    let s = rng.random_range(-2.0..=2.0);
    let pots = aux_potentials(&mut rng, n - 2);
    (r1_coupling(&t, s), io_first_lines(&pots), zero)
}

pub fn probe_r1_impossibility(samples: usize, seed: u64) -> ProbeReport {
    let outcomes = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (c, lines, zero) = r1_sample(seed, i);
            evaluate(&c, &lines, zero)
        })
        .collect();
    collect("r1", seed, outcomes)
}

/// Random linear-dependence layouts with `n ≤ 8`.
pub fn lindep_sample(seed: u64, i: usize) -> (STCoupling, LineConfig, bool) {
    let mut rng = sample_rng(seed, i);
    let r = rng.random_range(1..=3);
    let m = rng.random_range(1..=(7 - r));
    let zero = forces_zero(i);
    let blocks = LinDepBlocks {
        s: rng.random_range(-2.0..=2.0),
        s2: CMatrix::from_fn(1, r - 1, |_, _| complex(&mut rng)),
        s4: hermitian(&mut rng, r - 1),
        t1: CMatrix::from_fn(1, m, |_, _| complex(&mut rng)),
        t2: CMatrix::from_fn(r - 1, m, |_, _| complex(&mut rng)),
        t: if zero { C64::new(0.0, 0.0) } else { complex(&mut rng) },
    };
    let pots = aux_potentials(&mut rng, r - 1 + m);
    let (k2, k3) = pots.split_at(r - 1);
    (blocks.coupling(), blocks.lines(k2, k3), zero)
}

pub fn probe_lindep_impossibility(samples: usize, seed: u64) -> ProbeReport {
    let outcomes = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (c, lines, zero) = lindep_sample(seed, i);
            evaluate(&c, &lines, zero)
        })
        .collect();
    collect("lindep", seed, outcomes)
}

/// A random design request for the `S = 0` or same-sign case with one to
/// three controllers and drains.
pub fn random_design_spec(rng: &mut ChaCha8Rng) -> DesignSpec {
    let controllers = rng.random_range(1..=3);
    let drains = rng.random_range(1..=3);
    let mut v1: Vec<C64> = (0..controllers).map(|_| complex(rng)).collect();
    // Keep |v1|² in a range where the norm equation is usually solvable.
    let target = rng.random_range(0.01..1.5f64);
    let scale = (target / linalg::norm_sq(&v1)).sqrt();
    v1.iter_mut().for_each(|v| *v *= scale);
    let lambda = complex(rng) * 0.5;
    let w1 = (0..drains).map(|_| complex(rng)).collect();
    let w2_phase = (drains >= 2 && rng.random_bool(0.7)).then(|| rng.random_range(0.0..std::f64::consts::TAU));
    let case = if rng.random_bool(0.5) { DesignCase::SZero } else { DesignCase::SameSign };
    let s = if case == DesignCase::SZero { 0.0 } else { rng.random_range(-2.0..=2.0) };
    DesignSpec { case, v1, lambda, w1, w2_phase, s }
}

/// Designs from `count` random specs; infeasible specs are dropped.
pub fn random_flat_designs(count: usize, seed: u64) -> Vec<Design> {
    (0..count)
        .into_par_iter()
        .filter_map(|i| design_flat(&random_design_spec(&mut sample_rng(seed, i))).ok())
        .collect()
}

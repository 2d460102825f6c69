#![allow(dead_code)]

use qgf::coupling::{LineConfig, Role, STCoupling};
use qgf::linalg::{c, CMatrix, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0))
}

pub fn hermitian(rng: &mut ChaCha8Rng, r: usize) -> CMatrix {
    let m = CMatrix::from_fn(r, r, |_, _| complex(rng));
    (&m + m.adjoint()).map(|z| z * 0.5)
}

pub fn random_st(rng: &mut ChaCha8Rng, n: usize, r: usize) -> STCoupling {
    let s = hermitian(rng, r);
    let t = CMatrix::from_fn(r, n - r, |_, _| complex(rng));
    STCoupling::new(s, t).unwrap()
}

/// Input and output at random positions; each other line is a controller
/// with `V ∈ [0.1, 10]` or a drain.
pub fn random_lines(rng: &mut ChaCha8Rng, n: usize, drain_prob: f64) -> LineConfig {
    let mut roles: Vec<Role> = (0..n)
        .map(|_| if rng.random_bool(drain_prob) { Role::Drain } else { Role::Controller(rng.random_range(0.1..=10.0)) })
        .collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    roles[idx[0]] = Role::Input;
    roles[idx[1]] = Role::Output;
    LineConfig::new(roles).unwrap()
}

/// A random coupling on `n ∈ [2, 8]` lines of any rank, mixed roles, and an
/// energy in `[0.05, 12]`.
pub fn random_case(seed: u64) -> (STCoupling, LineConfig, f64) {
    let mut rng = rng(seed);
    let n = rng.random_range(2..=8);
    let r = rng.random_range(0..=n);
    let st = random_st(&mut rng, n, r);
    let lines = random_lines(&mut rng, n, 0.4);
    let e = rng.random_range(0.05..=12.0);
    (st, lines, e)
}

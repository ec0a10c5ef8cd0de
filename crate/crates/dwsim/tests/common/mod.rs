//! Independent references shared by the integration and acceptance targets.
#![allow(dead_code)]

use dwsim::chain::{FermiChainSpec, Parity};
use dwsim::encoding::{dw_to_fock, IsingBoundary, Ladder, Representative};
use dwsim::C64;
use rand::Rng;

/// σ± acting directly on an N-spin register, occupied = |1⟩, site 1 in the top bit.
pub fn apply_ladder(state: &[C64], n: usize, site: usize, l: Ladder) -> Vec<C64> {
    let bit = 1usize << (n - site);
    let mut out = vec![C64::new(0.0, 0.0); state.len()];
    for (i, &a) in state.iter().enumerate() {
        match l {
            Ladder::Raise if i & bit == 0 => out[i | bit] += a,
            Ladder::Lower if i & bit != 0 => out[i ^ bit] += a,
            _ => {}
        }
    }
    out
}

/// ⟨ψ|S + S†|ψ⟩ where S is the ordered product of the string (rightmost acts first).
pub fn spin_expectation(string: &[(usize, Ladder)], state: &[C64], n: usize) -> f64 {
    let mut s = state.to_vec();
    for &(site, l) in string.iter().rev() {
        s = apply_ladder(&s, n, site, l);
    }
    let z: C64 = state.iter().zip(&s).map(|(a, b)| a.conj() * b).sum();
    2.0 * z.re
}

/// Spin-model amplitudes of a register state (standard representative).
pub fn register_to_spins(amps: &[C64], n: usize, parity: Parity) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); 1 << n];
    for (q, &a) in amps.iter().enumerate() {
        let occ = dw_to_fock(q, n - 1, parity, IsingBoundary::Open, Representative::Standard);
        out[occ as usize] += a;
    }
    out
}

pub fn random_string<R: Rng>(rng: &mut R, n: usize) -> Vec<(usize, Ladder)> {
    let len = 2 * rng.random_range(1..=2usize);
    (0..len)
        .map(|_| (rng.random_range(1..=n), if rng.random_bool(0.5) { Ladder::Raise } else { Ladder::Lower }))
        .collect()
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / nrm).collect()
}

pub fn random_spec<R: Rng>(rng: &mut R, n: usize) -> FermiChainSpec {
    let t = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eps = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
    FermiChainSpec::open(t, eps, v).unwrap()
}

pub fn configs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

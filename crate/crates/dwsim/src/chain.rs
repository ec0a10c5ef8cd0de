//! Target fermion chains and the model builders (SSH, Aubry-Andre, XXZ, Floquet NNN).
//!
//! Occupation strings are stored as integers with site 1 in the most
//! significant of `N` bits, so numeric order is lexicographic order.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::operator::{BasisTag, HermitianOperator};
use crate::C64;

pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(m: usize) -> Parity {
        if m % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn admits(self, m: usize) -> bool {
        Parity::of(m) == self
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermiChainSpec {
    pub n: usize,
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
    pub v: Vec<f64>,
    pub boundary: Boundary,
    pub parity: Parity,
}

impl FermiChainSpec {
    pub fn new(t: Vec<f64>, eps: Vec<f64>, v: Vec<f64>, boundary: Boundary, parity: Parity) -> Result<Self> {
        let s = FermiChainSpec { n: eps.len(), t, eps, v, boundary, parity };
        s.validate()?;
        Ok(s)
    }

    pub fn open(t: Vec<f64>, eps: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Self::new(t, eps, v, Boundary::Open, Parity::Odd)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::InvalidSpec(format!("chain needs at least 2 sites, got {n}")));
        }
        let bonds = match self.boundary {
            Boundary::Open => n - 1,
            Boundary::Periodic => n,
        };
        if self.eps.len() != n || self.t.len() != bonds || self.v.len() != bonds {
            return Err(Error::InvalidSpec(format!(
                "list lengths t={}, eps={}, v={} do not fit N={n} ({:?})",
                self.t.len(),
                self.eps.len(),
                self.v.len(),
                self.boundary
            )));
        }
        if self.t.iter().chain(&self.eps).chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("chain parameters"));
        }
        Ok(())
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    /// max{|t_n|, |ε_n|, |v_n|}
    pub fn energy_scale(&self) -> f64 {
        self.t.iter().chain(&self.eps).chain(&self.v).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let f = |xs: &[f64]| xs.iter().map(|x| x * factor).collect();
        FermiChainSpec { t: f(&self.t), eps: f(&self.eps), v: f(&self.v), ..self.clone() }
    }

    pub fn n_bonds(&self) -> usize {
        self.t.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinChainParams {
    pub t: Vec<f64>,
    pub v_tilde: Vec<f64>,
    pub eps_tilde: Vec<f64>,
}

impl SpinChainParams {
    pub fn n(&self) -> usize {
        self.eps_tilde.len()
    }

    /// Fermion chain with the same spectrum in every excitation sector,
    /// up to the constant `Σṽ − Σε̃`.
    pub fn to_fermi(&self) -> Result<FermiChainSpec> {
        let n = self.n();
        if self.t.len() + 1 != n || self.v_tilde.len() + 1 != n {
            return Err(Error::InvalidSpec("spin-chain list lengths".into()));
        }
        let vt = |k: usize| -> f64 {
            // 1-based bond index; zero outside the chain
            if k >= 1 && k < n {
                self.v_tilde[k - 1]
            } else {
                0.0
            }
        };
        let eps = (1..=n).map(|k| 2.0 * (self.eps_tilde[k - 1] - vt(k) - vt(k - 1))).collect();
        let v = self.v_tilde.iter().map(|x| 4.0 * x).collect();
        FermiChainSpec::open(self.t.clone(), eps, v)
    }

    pub fn spectral_offset(&self) -> f64 {
        self.v_tilde.iter().sum::<f64>() - self.eps_tilde.iter().sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveBond {
    pub t0: f64,
    pub t1: f64,
    pub phi1: f64,
    pub t2: f64,
    pub phi2: f64,
}

/// Per-bond two-harmonic hopping drive with period `tau`.
///
/// The harmonics oscillate at the angular frequency 2π/τ, so one drive
/// period is exactly `tau` and stroboscopic times are multiples of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub bonds: Vec<DriveBond>,
    pub tau: f64,
}

impl DriveSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidSpec(format!("drive period {} must be positive", self.tau)));
        }
        if self
            .bonds
            .iter()
            .any(|b| ![b.t0, b.t1, b.phi1, b.t2, b.phi2].iter().all(|x| x.is_finite()))
        {
            return Err(Error::NonFinite("drive amplitudes"));
        }
        Ok(())
    }

    /// Ω = 1/τ
    pub fn frequency(&self) -> f64 {
        1.0 / self.tau
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI / self.tau
    }

    pub fn hopping_at(&self, time: f64) -> Vec<f64> {
        let w = self.angular_frequency();
        self.bonds
            .iter()
            .map(|b| b.t0 + b.t1 * (w * time + b.phi1).cos() + b.t2 * (2.0 * w * time + b.phi2).cos())
            .collect()
    }

    /// Largest |t_n(T)| over a period bound.
    pub fn amplitude_bound(&self) -> f64 {
        self.bonds.iter().map(|b| b.t0.abs() + b.t1.abs() + b.t2.abs()).fold(0.0, f64::max)
    }

    pub fn static_drive(t: &[f64], tau: f64) -> Self {
        DriveSpec {
            bonds: t.iter().map(|&t0| DriveBond { t0, t1: 0.0, phi1: 0.0, t2: 0.0, phi2: 0.0 }).collect(),
            tau,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DriveSpec {
            bonds: self
                .bonds
                .iter()
                .map(|b| DriveBond { t0: b.t0 * factor, t1: b.t1 * factor, t2: b.t2 * factor, ..*b })
                .collect(),
            tau: self.tau,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Ssh { v: f64, w: f64 },
    AubryAndre {
        lambda: f64,
        #[serde(default = "golden")]
        beta: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        mu: f64,
    },
    Xxz { t: f64, delta: f64, theta: f64 },
    FloquetNnn { k1: f64, k2: f64, tau: f64 },
}

fn golden() -> f64 {
    GOLDEN_RATIO
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let vals: Vec<f64> = match *self {
            ModelParams::Ssh { v, w } => vec![v, w],
            ModelParams::AubryAndre { lambda, beta, phi, mu } => vec![lambda, beta, phi, mu],
            ModelParams::Xxz { t, delta, theta } => vec![t, delta, theta],
            ModelParams::FloquetNnn { k1, k2, tau } => vec![k1, k2, tau],
        };
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(())
    }

    /// Static fermion chain for the model (the Floquet model yields its
    /// time-averaged hopping).
    pub fn fermi_spec(&self, n: usize) -> Result<FermiChainSpec> {
        self.validate()?;
        match *self {
            ModelParams::Ssh { v, w } => ssh_spec(v, w, n),
            ModelParams::AubryAndre { lambda, beta, phi, mu } => aubry_andre_spec(lambda, beta, phi, mu, n),
            ModelParams::Xxz { t, delta, theta } => Ok(xxz_spec(t, delta, theta, n)?.1),
            ModelParams::FloquetNnn { k1, k2, tau } => {
                let d = floquet_nnn_drive(k1, k2, tau, n)?;
                FermiChainSpec::open(d.bonds.iter().map(|b| b.t0).collect(), vec![0.0; n], vec![0.0; n - 1])
            }
        }
    }
}

pub fn ssh_spec(v: f64, w: f64, n: usize) -> Result<FermiChainSpec> {
    if n % 2 == 1 || n < 4 {
        return Err(Error::InvalidSpec(format!("SSH chain needs even N >= 4, got {n}")));
    }
    let t = (1..n).map(|k| if k % 2 == 1 { v } else { w }).collect();
    FermiChainSpec::open(t, vec![0.0; n], vec![0.0; n - 1])
}

pub fn aubry_andre_spec(lambda: f64, beta: f64, phi: f64, mu: f64, n: usize) -> Result<FermiChainSpec> {
    if n < 2 {
        return Err(Error::InvalidSpec("Aubry-Andre chain needs N >= 2".into()));
    }
    let eps = (1..=n).map(|k| lambda * (2.0 * PI * beta * k as f64 + phi).cos()).collect();
    let t = (1..n)
        .map(|k| 1.0 + mu * (2.0 * PI * beta * (k as f64 + 0.5) + phi).cos())
        .collect();
    FermiChainSpec::open(t, eps, vec![0.0; n - 1])
}

/// Inhomogeneous XXZ chain Σ t(σxσx + σyσy) + Δ_n σzσz with
/// Δ_n = Δ + θ(2n − N)/(N − 2), and the equivalent fermion chain.
pub fn xxz_spec(t: f64, delta: f64, theta: f64, n: usize) -> Result<(SpinChainParams, FermiChainSpec)> {
    if n < 3 {
        return Err(Error::InvalidSpec(format!("XXZ ramp needs N >= 3, got {n}")));
    }
    let deltas: Vec<f64> = (1..n)
        .map(|k| delta + theta * (2.0 * k as f64 - n as f64) / (n as f64 - 2.0))
        .collect();
    let spin = SpinChainParams { t: vec![-2.0 * t; n - 1], v_tilde: deltas, eps_tilde: vec![0.0; n] };
    let fermi = spin.to_fermi()?;
    Ok((spin, fermi))
}

pub fn floquet_nnn_drive(k1: f64, k2: f64, tau: f64, n: usize) -> Result<DriveSpec> {
    if !(tau > 0.0) {
        return Err(Error::InvalidSpec(format!("drive period {tau} must be positive")));
    }
    let t0 = -3.0 * k1 * tau / (4.0 * PI);
    let t1 = k2.abs().sqrt();
    let bonds = (1..n)
        .map(|k| {
            let phi1 = -(k as f64) * PI / 2.0;
            DriveBond { t0, t1, phi1, t2: 2.0 * t1, phi2: phi1 + PI }
        })
        .collect();
    let d = DriveSpec { bonds, tau };
    d.validate()?;
    Ok(d)
}

/// Effective-model time elapsed per unit of drive time: the drive realizes
/// (3τ/4π)·H_NNN(K1, −K2) over one period.
pub fn floquet_time_scale(tau: f64) -> f64 {
    3.0 * tau / (4.0 * PI)
}

/// Occupation strings of `n` sites with `m` particles, lexicographic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockBasis {
    pub n: usize,
    pub m: usize,
    pub states: Vec<u64>,
}

impl FockBasis {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m > n || n > 62 {
            return Err(Error::InvalidSector { n, m });
        }
        let mut states = Vec::with_capacity(binomial(n, m));
        // Gosper's hack enumerates fixed-popcount integers in increasing order
        if m == 0 {
            states.push(0);
        } else {
            let mut x: u64 = (1u64 << m) - 1;
            let limit = 1u64 << n;
            while x < limit {
                states.push(x);
                let c = x & x.wrapping_neg();
                let r = x + c;
                x = (((r ^ x) >> 2) / c) | r;
            }
        }
        Ok(FockBasis { n, m, states })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, occ: u64) -> Option<usize> {
        self.states.binary_search(&occ).ok()
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::Occupation { sites: self.n, particles: self.m }
    }
}

/// Is site `k` (1-based) occupied.
pub fn occupied(occ: u64, n: usize, k: usize) -> bool {
    (occ >> (n - k)) & 1 == 1
}

pub fn site_bit(n: usize, k: usize) -> u64 {
    1u64 << (n - k)
}

/// Parse "0110" (site 1 first) into an occupation integer.
pub fn parse_occupation(s: &str) -> Result<u64> {
    let mut occ = 0u64;
    for ch in s.chars() {
        occ <<= 1;
        match ch {
            '0' => {}
            '1' => occ |= 1,
            _ => return Err(Error::InvalidSpec(format!("bad occupation string {s:?}"))),
        }
    }
    Ok(occ)
}

pub fn format_occupation(occ: u64, n: usize) -> String {
    (1..=n).map(|k| if occupied(occ, n, k) { '1' } else { '0' }).collect()
}

/// M-particle block of H = −Σ t_n (c†_n c_{n+1} + h.c.) + Σ ε_n n_n + Σ v_n n_n n_{n+1}.
pub fn assemble_fermi(spec: &FermiChainSpec, m: usize) -> Result<HermitianOperator> {
    spec.validate()?;
    let n = spec.n;
    if m > n {
        return Err(Error::InvalidSector { n, m });
    }
    let basis = FockBasis::new(n, m)?;
    let bonds: Vec<(usize, usize)> = (1..=spec.n_bonds()).map(|k| (k, if k == n { 1 } else { k + 1 })).collect();
    let mut trips = Vec::new();
    for (col, &o) in basis.states.iter().enumerate() {
        let mut diag = 0.0;
        for k in 1..=n {
            if occupied(o, n, k) {
                diag += spec.eps[k - 1];
            }
        }
        for (b, &(a, c)) in bonds.iter().enumerate() {
            let oa = occupied(o, n, a);
            let oc = occupied(o, n, c);
            if oa && oc {
                diag += spec.v[b];
            }
            if oa != oc && spec.t[b] != 0.0 {
                let o2 = o ^ site_bit(n, a) ^ site_bit(n, c);
                let row = basis.index_of(o2).expect("hop stays in sector");
                // wrap-around bond crosses the other M−1 fermions
                let sign = if c == 1 && m % 2 == 0 { -1.0 } else { 1.0 };
                trips.push((row, col, C64::new(-spec.t[b] * sign, 0.0)));
            }
        }
        trips.push((col, col, C64::new(diag, 0.0)));
    }
    HermitianOperator::new(CsrMatrix::from_triplets(basis.dim(), trips), basis.tag())
}

/// M-excitation block of −Σ t_n(σ+_n σ−_{n+1} + h.c.) + Σ ṽ_n σz_n σz_{n+1} + Σ ε̃_n σz_n,
/// excitations being σz = +1 spins, in the occupation ordering.
pub fn assemble_spin_chain(params: &SpinChainParams, m: usize) -> Result<HermitianOperator> {
    let n = params.n();
    if params.t.len() + 1 != n || params.v_tilde.len() + 1 != n {
        return Err(Error::InvalidSpec("spin-chain list lengths".into()));
    }
    if m > n {
        return Err(Error::InvalidSector { n, m });
    }
    let basis = FockBasis::new(n, m)?;
    let sz = |o: u64, k: usize| if occupied(o, n, k) { 1.0 } else { -1.0 };
    let mut trips = Vec::new();
    for (col, &o) in basis.states.iter().enumerate() {
        let mut diag = 0.0;
        for k in 1..=n {
            diag += params.eps_tilde[k - 1] * sz(o, k);
        }
        for k in 1..n {
            diag += params.v_tilde[k - 1] * sz(o, k) * sz(o, k + 1);
            if occupied(o, n, k) != occupied(o, n, k + 1) {
                let o2 = o ^ site_bit(n, k) ^ site_bit(n, k + 1);
                let row = basis.index_of(o2).expect("flip-flop stays in sector");
                trips.push((row, col, C64::new(-params.t[k - 1], 0.0)));
            }
        }
        trips.push((col, col, C64::new(diag, 0.0)));
    }
    HermitianOperator::new(CsrMatrix::from_triplets(basis.dim(), trips), basis.tag())
}

/// M-particle block of H = Σ K1 c†_{n+1}c_n + iK2 c†_{n+2}c_n + h.c.
pub fn nnn_effective_operator(k1: f64, k2: f64, n: usize, m: usize) -> Result<HermitianOperator> {
    if m == 0 || m > n {
        return Err(Error::InvalidSector { n, m });
    }
    let basis = FockBasis::new(n, m)?;
    let mut trips = Vec::new();
    for (col, &o) in basis.states.iter().enumerate() {
        for k in 1..n {
            // c†_{k+1} c_k
            if occupied(o, n, k) && !occupied(o, n, k + 1) {
                let o2 = o ^ site_bit(n, k) ^ site_bit(n, k + 1);
                let row = basis.index_of(o2).unwrap();
                trips.push((row, col, C64::new(k1, 0.0)));
                trips.push((col, row, C64::new(k1, 0.0)));
            }
            // c†_{k+2} c_k, string through site k+1
            if k + 2 <= n && occupied(o, n, k) && !occupied(o, n, k + 2) {
                let o2 = o ^ site_bit(n, k) ^ site_bit(n, k + 2);
                let row = basis.index_of(o2).unwrap();
                let sign = if occupied(o, n, k + 1) { -1.0 } else { 1.0 };
                trips.push((row, col, C64::new(0.0, k2 * sign)));
                trips.push((col, row, C64::new(0.0, -k2 * sign)));
            }
        }
    }
    HermitianOperator::new(CsrMatrix::from_triplets(basis.dim(), trips), basis.tag())
}

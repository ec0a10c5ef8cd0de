//! Domain-wall encoding of fermion chains on Ising chains.
//!
//! Open chains of `N` sites use `N-1` qubits between two virtual spins
//! (`v_L = 0`, `v_R = 1` for odd particle parity, `0` for even). A particle
//! sits on site `n` when qubits `n-1` and `n` differ. Periodic chains are
//! realized on a ring of `2N` qubits holding two copies of the chain.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::{self, binomial, DriveSpec, FermiChainSpec, FockBasis, Parity};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::operator::{assemble_operator_with_cap, BasisTag, HermitianOperator, PauliTerm, QuantumState, StateData};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    Ferro,
    Antiferro,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsingBoundary {
    Open,
    PeriodicDoubled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    Standard,
    Flipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Transverse {
    Static(Vec<f64>),
    Driven(DriveSpec),
}

/// Ising chain H = −Σ t_k X_k + Σ h_k Z_k + Σ Jnn_k Z_k Z_{k+1} + Σ Jnnn_k Z_k Z_{k+2} + constant.
///
/// On the ring the coupling lists have `n_qubits` entries and wrap around.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingChainSpec {
    pub n_sites: usize,
    pub n_qubits: usize,
    pub h: Vec<f64>,
    pub jnn: Vec<f64>,
    pub jnnn: Vec<f64>,
    pub tx: Transverse,
    pub j: f64,
    pub gauge: Gauge,
    pub parity: Parity,
    pub boundary: IsingBoundary,
    pub constant: f64,
    /// max{|t|, |ε|, |v|} of the encoded model (drive amplitude bound when driven)
    pub energy_scale: f64,
    /// |J| below three times the model energy scale
    pub weak_coupling: bool,
}

/// What a register state means: enough to decode walls into occupations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n_sites: usize,
    pub parity: Parity,
    pub boundary: IsingBoundary,
    pub gauge: Gauge,
}

impl Layout {
    pub fn open(n_sites: usize, parity: Parity) -> Self {
        Layout { n_sites, parity, boundary: IsingBoundary::Open, gauge: Gauge::Ferro }
    }

    pub fn n_qubits(&self) -> usize {
        match self.boundary {
            IsingBoundary::Open => self.n_sites - 1,
            IsingBoundary::PeriodicDoubled => self.n_sites,
        }
    }

    /// XOR mask taking ferro-gauge indices to this gauge.
    pub fn gauge_mask(&self) -> usize {
        gauge_mask(self.gauge, self.n_qubits())
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::Register { n_qubits: self.n_qubits() }
    }
}

fn gauge_mask(g: Gauge, n_qubits: usize) -> usize {
    match g {
        Gauge::Ferro => 0,
        // qubits 2, 4, ... are bits 1, 3, ...
        Gauge::Antiferro => (0..n_qubits).filter(|b| b % 2 == 1).fold(0, |m, b| m | (1 << b)),
    }
}

/// Coefficients over an extended spin list (index 0..=last), before the
/// virtual spins are substituted.
struct ExtendedTerms {
    n_spins: usize,
    ring: bool,
    x: Vec<(usize, f64)>,
    zz: Vec<(usize, usize, f64)>,
}

/// The ring-or-chain uniform form: −Σ t_n X_n + Σ c_n σ_{n−1}σ_n + Σ (v_n/4) σ_{n−1}σ_{n+1}
/// with c_n = J − ε_n/2 − v_{n−1}/4 − v_n/4.
fn extended_terms(spec: &FermiChainSpec, j: f64, tx: &[f64]) -> ExtendedTerms {
    let n = spec.n;
    match spec.boundary {
        chain::Boundary::Open => {
            // spins 0..=N, 0 and N virtual
            let v = |k: usize| if k >= 1 && k < n { spec.v[k - 1] } else { 0.0 };
            let mut zz = Vec::new();
            for k in 1..=n {
                zz.push((k - 1, k, j - spec.eps[k - 1] / 2.0 - v(k - 1) / 4.0 - v(k) / 4.0));
            }
            for k in 1..n {
                zz.push((k - 1, k + 1, v(k) / 4.0));
            }
            let x = (1..n).map(|k| (k, tx[k - 1])).collect();
            ExtendedTerms { n_spins: n + 1, ring: false, x, zz }
        }
        chain::Boundary::Periodic => {
            // ring of 2N spins (index 0..2N-1, spin 0 is qubit 2N)
            let m = 2 * n;
            let t = |k: usize| tx[(k - 1) % n];
            let eps = |k: usize| spec.eps[(k - 1) % n];
            let v = |k: usize| spec.v[(k + m - 1) % m % n];
            let mut zz = Vec::new();
            for k in 1..=m {
                zz.push(((k - 1) % m, k % m, j - eps(k) / 2.0 - v(k - 1 + m) / 4.0 - v(k) / 4.0));
                zz.push(((k - 1) % m, (k + 1) % m, v(k) / 4.0));
            }
            let x = (1..=m).map(|k| (k % m, t(k))).collect();
            ExtendedTerms { n_spins: m, ring: true, x, zz }
        }
    }
}

pub fn encode_ising(spec: &FermiChainSpec, j: f64, parity: Parity, gauge: Gauge) -> Result<IsingChainSpec> {
    spec.validate()?;
    if !j.is_finite() {
        return Err(Error::NonFinite("domain-wall coupling"));
    }
    let ext = extended_terms(spec, j, &spec.t);
    build_from_extended(spec, ext, j, parity, gauge, Transverse::Static(spec.t.clone()))
}

/// Same chain with the transverse field following a drive.
pub fn encode_ising_driven(
    spec: &FermiChainSpec,
    drive: &DriveSpec,
    j: f64,
    parity: Parity,
    gauge: Gauge,
) -> Result<IsingChainSpec> {
    drive.validate()?;
    if drive.bonds.len() != spec.n_bonds() {
        return Err(Error::InvalidSpec("drive bond count differs from chain".into()));
    }
    let mut s = encode_ising(spec, j, parity, gauge)?;
    let scale = drive.amplitude_bound().max(spec.eps.iter().chain(&spec.v).fold(0.0, |m, x| m.max(x.abs())));
    s.energy_scale = scale;
    s.weak_coupling = j.abs() < 3.0 * scale;
    s.tx = Transverse::Driven(drive.clone());
    Ok(s)
}

fn build_from_extended(
    spec: &FermiChainSpec,
    ext: ExtendedTerms,
    j: f64,
    parity: Parity,
    gauge: Gauge,
    tx: Transverse,
) -> Result<IsingChainSpec> {
    let n = spec.n;
    let (n_qubits, boundary) = if ext.ring {
        (ext.n_spins, IsingBoundary::PeriodicDoubled)
    } else {
        (n - 1, IsingBoundary::Open)
    };
    // map extended spin -> Some(qubit 1-based) or None(virtual value)
    let right = match parity {
        Parity::Odd => -1.0,
        Parity::Even => 1.0,
    };
    let resolve = |s: usize| -> std::result::Result<usize, f64> {
        if ext.ring {
            Ok(if s == 0 { ext.n_spins } else { s })
        } else if s == 0 {
            Err(1.0)
        } else if s == n {
            Err(right)
        } else {
            Ok(s)
        }
    };
    let mut h = vec![0.0; n_qubits];
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut constant = 0.0;
    for &(a, b, c) in &ext.zz {
        match (resolve(a), resolve(b)) {
            (Ok(p), Ok(q)) => *pairs.entry((p.min(q), p.max(q))).or_insert(0.0) += c,
            (Ok(p), Err(s)) | (Err(s), Ok(p)) => h[p - 1] += c * s,
            (Err(s1), Err(s2)) => constant += c * s1 * s2,
        }
    }
    let (mut jnn, mut jnnn) = if ext.ring {
        (vec![0.0; n_qubits], vec![0.0; n_qubits])
    } else {
        (vec![0.0; n_qubits.saturating_sub(1)], vec![0.0; n_qubits.saturating_sub(2)])
    };
    for (&(p, q), &c) in &pairs {
        let d = q - p;
        if ext.ring {
            // ring pairs: (k, k+1) or (k, k+2) modulo n_qubits
            let m = n_qubits;
            if d == 1 {
                jnn[p - 1] += c;
            } else if d == m - 1 {
                jnn[m - 1] += c;
            } else if d == 2 {
                jnnn[p - 1] += c;
            } else if d == m - 2 {
                jnnn[q - 1] += c;
            } else {
                unreachable!("ring coupling distance {d}");
            }
        } else if d == 1 {
            jnn[p - 1] += c;
        } else {
            jnnn[p - 1] += c;
        }
    }
    let _ = ext.x;
    let mut out = IsingChainSpec {
        n_sites: n,
        n_qubits,
        h,
        jnn,
        jnnn,
        tx,
        j,
        gauge: Gauge::Ferro,
        parity,
        boundary,
        constant,
        energy_scale: spec.energy_scale(),
        weak_coupling: j.abs() < 3.0 * spec.energy_scale(),
    };
    if gauge == Gauge::Antiferro {
        out = out.to_antiferro();
    }
    Ok(out)
}

impl IsingChainSpec {
    pub fn layout(&self) -> Layout {
        let n_sites = match self.boundary {
            IsingBoundary::Open => self.n_sites,
            IsingBoundary::PeriodicDoubled => self.n_qubits,
        };
        Layout { n_sites, parity: self.parity, boundary: self.boundary, gauge: self.gauge }
    }

    pub fn is_ring(&self) -> bool {
        self.boundary == IsingBoundary::PeriodicDoubled
    }

    /// Conjugation by X on every second qubit: fields there and all NN couplings flip sign.
    fn to_antiferro(mut self) -> Self {
        for (k, h) in self.h.iter_mut().enumerate() {
            if k % 2 == 1 {
                *h = -*h;
            }
        }
        if self.is_ring() && self.n_qubits % 2 == 1 {
            // odd ring: the wrap bond joins two odd qubits and keeps its sign
            let last = self.jnn.len() - 1;
            for (k, c) in self.jnn.iter_mut().enumerate() {
                if k != last {
                    *c = -*c;
                }
            }
        } else {
            self.jnn.iter_mut().for_each(|c| *c = -*c);
        }
        self.gauge = Gauge::Antiferro;
        self
    }

    pub fn transverse_at(&self, time: f64) -> Vec<f64> {
        let t = match &self.tx {
            Transverse::Static(t) => t.clone(),
            Transverse::Driven(d) => d.hopping_at(time),
        };
        if self.is_ring() {
            let n = t.len();
            (0..self.n_qubits).map(|k| t[k % n]).collect()
        } else {
            t
        }
    }

    fn zz_terms(&self) -> Vec<PauliTerm> {
        let nq = self.n_qubits;
        let mut terms = vec![PauliTerm::identity(self.constant)];
        for (k, &h) in self.h.iter().enumerate() {
            terms.push(PauliTerm::z(h, k + 1));
        }
        let wrap = |k: usize| (k - 1) % nq + 1;
        for (k, &c) in self.jnn.iter().enumerate() {
            terms.push(PauliTerm::zz(c, k + 1, wrap(k + 2)));
        }
        for (k, &c) in self.jnnn.iter().enumerate() {
            terms.push(PauliTerm::zz(c, k + 1, wrap(k + 3)));
        }
        terms
    }

    /// All Pauli terms at time `time` (static chains ignore it).
    pub fn pauli_terms_at(&self, time: f64) -> Vec<PauliTerm> {
        let mut terms = self.zz_terms();
        for (k, t) in self.transverse_at(time).into_iter().enumerate() {
            terms.push(PauliTerm::x(-t, k + 1));
        }
        terms
    }

    /// Energy of every register basis state under the Z part.
    pub fn diagonal_energies(&self) -> Vec<f64> {
        let nq = self.n_qubits;
        let z = |i: usize, q: usize| if (i >> ((q - 1) % nq)) & 1 == 0 { 1.0 } else { -1.0 };
        (0..1usize << nq)
            .map(|i| {
                let mut e = self.constant;
                for (k, &h) in self.h.iter().enumerate() {
                    e += h * z(i, k + 1);
                }
                for (k, &c) in self.jnn.iter().enumerate() {
                    e += c * z(i, k + 1) * z(i, k + 2);
                }
                for (k, &c) in self.jnnn.iter().enumerate() {
                    e += c * z(i, k + 1) * z(i, k + 3);
                }
                e
            })
            .collect()
    }

    /// Model couplings divided by α with J kept; a drive also gets its period stretched by α.
    pub fn rescaled(&self, alpha: f64) -> Result<Self> {
        let (boundary, nb) = match self.boundary {
            IsingBoundary::Open => (chain::Boundary::Open, self.n_sites - 1),
            IsingBoundary::PeriodicDoubled => (chain::Boundary::Periodic, self.n_sites),
        };
        let zero = FermiChainSpec::new(vec![0.0; nb], vec![0.0; self.n_sites], vec![0.0; nb], boundary, self.parity)?;
        let base = encode_ising(&zero, self.j, self.parity, self.gauge)?;
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| y + (x - y) / alpha).collect::<Vec<f64>>();
        let tx = match &self.tx {
            Transverse::Static(t) => Transverse::Static(t.iter().map(|x| x / alpha).collect()),
            Transverse::Driven(d) => {
                let mut d = d.scaled(1.0 / alpha);
                d.tau *= alpha;
                Transverse::Driven(d)
            }
        };
        Ok(IsingChainSpec {
            h: mix(&self.h, &base.h),
            jnn: mix(&self.jnn, &base.jnn),
            jnnn: mix(&self.jnnn, &base.jnnn),
            constant: base.constant + (self.constant - base.constant) / alpha,
            tx,
            energy_scale: self.energy_scale / alpha,
            weak_coupling: self.j.abs() < 3.0 * self.energy_scale / alpha,
            ..self.clone()
        })
    }
}

pub fn assemble_ising(spec: &IsingChainSpec) -> Result<HermitianOperator> {
    if let Transverse::Driven(_) = spec.tx {
        return Err(Error::InvalidSpec("driven chain has no static Hamiltonian; use assemble_ising_at".into()));
    }
    assemble_ising_at(spec, 0.0)
}

pub fn assemble_ising_at(spec: &IsingChainSpec, time: f64) -> Result<HermitianOperator> {
    assemble_operator_with_cap(&spec.pauli_terms_at(time), spec.n_qubits, 24)
}

/// Open chain on N+1 qubits with the virtual spins as explicit, undriven qubits
/// (qubit 1 is v_L, qubit N+1 is v_R). Commutes with the global spin flip.
pub fn assemble_ising_extended(spec: &FermiChainSpec, j: f64) -> Result<HermitianOperator> {
    if spec.boundary != chain::Boundary::Open {
        return Err(Error::InvalidSpec("extended register is defined for open chains".into()));
    }
    let ext = extended_terms(spec, j, &spec.t);
    let mut terms: Vec<PauliTerm> = ext.x.iter().map(|&(k, t)| PauliTerm::x(-t, k + 1)).collect();
    terms.extend(ext.zz.iter().map(|&(a, b, c)| PauliTerm::zz(c, a + 1, b + 1)));
    assemble_operator_with_cap(&terms, ext.n_spins, 24)
}

/// Coupler pair (J_NN, J_NNN) that splits the two-particle configuration of
/// three spins from the others: E(000) = E(001) = −v/3, E(010) = v.
pub fn interaction_coupler(v: f64) -> (f64, f64) {
    (-v / 3.0, v / 3.0)
}

fn extended_bits(index: usize, n_qubits: usize, parity: Parity) -> impl Iterator<Item = u8> {
    let vr = match parity {
        Parity::Odd => 1u8,
        Parity::Even => 0u8,
    };
    std::iter::once(0u8)
        .chain((0..n_qubits).map(move |b| ((index >> b) & 1) as u8))
        .chain(std::iter::once(vr))
}

pub fn count_domain_walls(index: usize, n_qubits: usize, parity: Parity, boundary: IsingBoundary) -> usize {
    match boundary {
        IsingBoundary::Open => {
            let bits: Vec<u8> = extended_bits(index, n_qubits, parity).collect();
            bits.windows(2).filter(|w| w[0] != w[1]).count()
        }
        IsingBoundary::PeriodicDoubled => {
            let rot = ((index >> 1) | ((index & 1) << (n_qubits - 1))) & ((1 << n_qubits) - 1);
            (index ^ rot).count_ones() as usize
        }
    }
}

/// Occupations (site-1-first integer) of the walls in a ferro-gauge register index.
fn walls_to_occupation(index: usize, n_qubits: usize, parity: Parity, boundary: IsingBoundary, rep: Representative) -> u64 {
    match boundary {
        IsingBoundary::Open => {
            let n = n_qubits + 1;
            let flip = if rep == Representative::Flipped { 1u8 } else { 0u8 };
            let bits: Vec<u8> = extended_bits(index, n_qubits, parity).map(|b| b ^ flip).collect();
            // the qubits themselves are not flipped, only the virtual reference
            let mut e = bits.clone();
            for (k, b) in e.iter_mut().enumerate().skip(1).take(n_qubits) {
                *b = ((index >> (k - 1)) & 1) as u8;
            }
            let mut occ = 0u64;
            for k in 1..=n {
                occ <<= 1;
                if e[k - 1] != e[k] {
                    occ |= 1;
                }
            }
            occ
        }
        IsingBoundary::PeriodicDoubled => {
            let n = n_qubits;
            let q = |k: usize| (index >> ((k + n - 1) % n)) & 1;
            let mut occ = 0u64;
            for k in 1..=n {
                occ <<= 1;
                if q(k - 1 + n) != q(k) {
                    occ |= 1;
                }
            }
            occ
        }
    }
}

/// Qubit string of an occupation pattern; `occ` has site 1 as its top bit.
pub fn fock_to_dw(occ: u64, n_sites: usize, parity: Parity, boundary: IsingBoundary, rep: Representative) -> Result<usize> {
    let pop = occ.count_ones() as usize;
    if occ >> n_sites != 0 {
        return Err(Error::InvalidSpec(format!("occupation has bits beyond {n_sites} sites")));
    }
    let (n_qubits, needed_even) = match boundary {
        IsingBoundary::Open => {
            if !parity.admits(pop) {
                return Err(Error::ParityMismatch(format!("{pop} particles in {parity:?} sector")));
            }
            (n_sites - 1, false)
        }
        IsingBoundary::PeriodicDoubled => (n_sites, true),
    };
    if needed_even && pop % 2 == 1 {
        return Err(Error::ParityMismatch("a ring holds an even number of walls".into()));
    }
    let mut q = 0u8;
    let mut index = 0usize;
    for k in 1..=n_qubits {
        q ^= chain::occupied(occ, n_sites, k) as u8;
        index |= (q as usize) << (k - 1);
    }
    if rep == Representative::Flipped {
        index ^= (1 << n_qubits) - 1;
    }
    Ok(index)
}

pub fn dw_to_fock(index: usize, n_qubits: usize, parity: Parity, boundary: IsingBoundary, rep: Representative) -> u64 {
    walls_to_occupation(index, n_qubits, parity, boundary, rep)
}

/// Register states with exactly M walls.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceIndex {
    pub n_sites: usize,
    pub n_qubits: usize,
    pub m: usize,
    pub parity: Parity,
    pub boundary: IsingBoundary,
    /// register indices, ascending
    pub basis: Vec<usize>,
    /// register indices ordered like the occupation basis (ring: each
    /// occupation is followed by its flipped partner)
    pub fock_order: Vec<usize>,
}

impl SubspaceIndex {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.basis.binary_search(&index).is_ok()
    }

    /// Basis tag of block-level operators and states.
    pub fn block_tag(&self) -> BasisTag {
        match self.boundary {
            IsingBoundary::Open => BasisTag::Occupation { sites: self.n_sites, particles: self.m },
            IsingBoundary::PeriodicDoubled => {
                BasisTag::Subspace { n_qubits: self.n_qubits, indices: self.fock_order.clone() }
            }
        }
    }

    pub fn register_tag(&self) -> BasisTag {
        BasisTag::Register { n_qubits: self.n_qubits }
    }

    /// Register amplitudes of a block-ordered vector.
    pub fn embed(&self, block: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); 1 << self.n_qubits];
        for (&r, &a) in self.fock_order.iter().zip(block) {
            out[r] = a;
        }
        out
    }

    /// Block-ordered amplitudes of a register vector.
    pub fn extract(&self, full: &[C64]) -> Vec<C64> {
        self.fock_order.iter().map(|&r| full[r]).collect()
    }

    /// Projector onto the subspace, on the full register.
    pub fn projector(&self) -> Result<HermitianOperator> {
        let n = 1usize << self.n_qubits;
        let trips = self.basis.iter().map(|&i| (i, i, C64::new(1.0, 0.0))).collect();
        HermitianOperator::new(CsrMatrix::from_triplets(n, trips), self.register_tag())
    }
}

pub fn enumerate_m_subspace(n_sites: usize, m: usize, parity: Parity, boundary: IsingBoundary) -> Result<SubspaceIndex> {
    if m > n_sites || n_sites < 2 {
        return Err(Error::InvalidSector { n: n_sites, m });
    }
    let fock = FockBasis::new(n_sites, m)?;
    let (n_qubits, fock_order) = match boundary {
        IsingBoundary::Open => {
            if !parity.admits(m) {
                return Err(Error::ParityMismatch(format!("M={m} in {parity:?} sector")));
            }
            let order = fock
                .states
                .iter()
                .map(|&o| fock_to_dw(o, n_sites, parity, boundary, Representative::Standard))
                .collect::<Result<Vec<_>>>()?;
            (n_sites - 1, order)
        }
        IsingBoundary::PeriodicDoubled => {
            if m % 2 == 1 {
                return Err(Error::ParityMismatch(format!("ring with M={m} walls")));
            }
            let mut order = Vec::with_capacity(2 * fock.dim());
            for &o in &fock.states {
                order.push(fock_to_dw(o, n_sites, parity, boundary, Representative::Standard)?);
                order.push(fock_to_dw(o, n_sites, parity, boundary, Representative::Flipped)?);
            }
            (n_sites, order)
        }
    };
    let mut basis = fock_order.clone();
    basis.sort_unstable();
    Ok(SubspaceIndex { n_sites, n_qubits, m, parity, boundary, basis, fock_order })
}

/// Every wall-count sector realizable under the parity (open) or on the ring.
pub fn valid_sectors(n_sites: usize, parity: Parity, boundary: IsingBoundary) -> Vec<usize> {
    (0..=n_sites)
        .filter(|&m| match boundary {
            IsingBoundary::Open => parity.admits(m),
            IsingBoundary::PeriodicDoubled => m % 2 == 0,
        })
        .collect()
}

/// Restriction of a register operator to a wall sector, in occupation order.
pub fn project_to_block(op: &HermitianOperator, sub: &SubspaceIndex) -> Result<HermitianOperator> {
    if op.dim() != 1 << sub.n_qubits {
        return Err(Error::DimensionMismatch { expected: 1 << sub.n_qubits, found: op.dim() });
    }
    let m = op.matrix().select(&sub.fock_order, &sub.fock_order);
    HermitianOperator::new(CsrMatrix::from_dense(&m), sub.block_tag())
}

/// Site occupations p_n = ½ − ½⟨σ_{n−1}σ_n⟩, virtual spins included.
pub fn site_occupations(state: &QuantumState, layout: &Layout) -> Result<Vec<f64>> {
    let nq = layout.n_qubits();
    if state.dim() != 1 << nq {
        return Err(Error::DimensionMismatch { expected: 1 << nq, found: state.dim() });
    }
    let pops = match state.data() {
        StateData::Pure(v) => v.iter().map(|a| a.norm_sqr()).collect::<Vec<_>>(),
        StateData::Mixed(r) => (0..r.nrows()).map(|i| r[(i, i)].re).collect(),
    };
    let norm: f64 = pops.iter().sum();
    let mask = layout.gauge_mask();
    let mut p = vec![0.0; layout.n_sites];
    for (i, &w) in pops.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let occ = walls_to_occupation(i ^ mask, nq, layout.parity, layout.boundary, Representative::Standard);
        for (k, pk) in p.iter_mut().enumerate() {
            if chain::occupied(occ, layout.n_sites, k + 1) {
                *pk += w;
            }
        }
    }
    Ok(p.into_iter().map(|x| x / norm).collect())
}

/// Ladder operator in a σ± string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ladder {
    Raise,
    Lower,
}

fn sparse_wall_number(n_ext: usize, site: usize, occupied: bool) -> CsrMatrix {
    // extended spins are register qubits 1..=n_ext, spin s is bit s
    let dim = 1usize << n_ext;
    let trips = (0..dim)
        .filter(|&i| {
            let wall = ((i >> (site - 1)) ^ (i >> site)) & 1 == 1;
            wall == occupied
        })
        .map(|i| (i, i, C64::new(1.0, 0.0)))
        .collect();
    CsrMatrix::from_triplets(dim, trips)
}

fn sparse_flip_range(n_ext: usize, a: usize, b: usize) -> CsrMatrix {
    // X on spins min(a,b)..max(a,b)-1
    let dim = 1usize << n_ext;
    let (lo, hi) = (a.min(b), a.max(b));
    let mask = (lo..hi).fold(0usize, |m, s| m | (1 << s));
    CsrMatrix::from_triplets(dim, (0..dim).map(|i| (i ^ mask, i, C64::new(1.0, 0.0))).collect())
}

/// Domain-wall image of the σ± string S plus its adjoint, on the extended
/// register of N+1 spins (virtual spins explicit). Commutes with the global flip.
pub fn map_even_string_extended(string: &[(usize, Ladder)], n_sites: usize) -> Result<HermitianOperator> {
    if string.len() % 2 == 1 {
        return Err(Error::ParityMismatch("odd-length σ± string".into()));
    }
    if let Some(&(s, _)) = string.iter().find(|(s, _)| *s == 0 || *s > n_sites) {
        return Err(Error::IndexOutOfRange { index: s, n_qubits: n_sites });
    }
    let n_ext = n_sites + 1;
    let dim = 1usize << n_ext;
    let mut op = CsrMatrix::identity(dim);
    for pair in string.chunks(2) {
        let (i, li) = pair[0];
        let (j, lj) = pair[1];
        let left = sparse_wall_number(n_ext, i, li == Ladder::Raise);
        let right = sparse_wall_number(n_ext, j, lj == Ladder::Lower);
        let x = sparse_flip_range(n_ext, i, j);
        op = op.matmul(&left.matmul(&x).matmul(&right));
    }
    let herm = op.lincomb(C64::new(1.0, 0.0), &op.adjoint(), C64::new(1.0, 0.0));
    HermitianOperator::new(herm, BasisTag::Register { n_qubits: n_ext })
}

/// Extended operator restricted to fixed virtual spins, on the N−1 qubit register.
pub fn restrict_to_virtuals(ext: &HermitianOperator, n_sites: usize, parity: Parity, rep: Representative) -> Result<HermitianOperator> {
    let nq = n_sites - 1;
    let (mut vl, mut vr) = (0usize, if parity == Parity::Odd { 1usize } else { 0 });
    if rep == Representative::Flipped {
        vl ^= 1;
        vr ^= 1;
    }
    let idx: Vec<usize> = (0..1usize << nq).map(|q| vl | (q << 1) | (vr << (nq + 1))).collect();
    let m = ext.matrix().select(&idx, &idx);
    HermitianOperator::new(CsrMatrix::from_dense(&m), BasisTag::Register { n_qubits: nq })
}

/// Domain-wall image of S + S† on the encoding register (standard virtual spins).
pub fn map_even_string_operator(string: &[(usize, Ladder)], n_sites: usize, parity: Parity) -> Result<HermitianOperator> {
    let ext = map_even_string_extended(string, n_sites)?;
    restrict_to_virtuals(&ext, n_sites, parity, Representative::Standard)
}

/// Embed a register state with the virtual spins as explicit qubits.
pub fn extend_state(amps: &[C64], n_sites: usize, parity: Parity, rep: Representative) -> Vec<C64> {
    let nq = n_sites - 1;
    let (mut vl, mut vr) = (0usize, if parity == Parity::Odd { 1usize } else { 0 });
    if rep == Representative::Flipped {
        vl ^= 1;
        vr ^= 1;
    }
    let mut out = vec![C64::new(0.0, 0.0); 1 << (nq + 2)];
    for (q, &a) in amps.iter().enumerate() {
        out[vl | (q << 1) | (vr << (nq + 1))] = a;
    }
    out
}

pub fn spin_inversion_operator(n_qubits: usize) -> Result<HermitianOperator> {
    let dim = 1usize << n_qubits;
    let all = dim - 1;
    let trips = (0..dim).map(|i| (i ^ all, i, C64::new(1.0, 0.0))).collect();
    HermitianOperator::new(CsrMatrix::from_triplets(dim, trips), BasisTag::Register { n_qubits })
}

/// "0010" → index with qubit 1 first.
pub fn parse_qubits(s: &str) -> Result<usize> {
    let mut idx = 0usize;
    for (k, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => idx |= 1 << k,
            _ => return Err(Error::InvalidSpec(format!("bad qubit string {s:?}"))),
        }
    }
    Ok(idx)
}

pub fn format_qubits(index: usize, n_qubits: usize) -> String {
    (0..n_qubits).map(|k| if (index >> k) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Register state of an occupation pattern (standard representative, ferro gauge
/// unless the layout says otherwise).
pub fn fock_state(occ: u64, layout: &Layout) -> Result<QuantumState> {
    let idx = fock_to_dw(occ, layout.n_sites, layout.parity, layout.boundary, Representative::Standard)?;
    QuantumState::basis_state(idx ^ layout.gauge_mask(), layout.tag())
}

/// Number of register states; sanity helper for sector sums.
pub fn sector_dimension(n_sites: usize, m: usize, boundary: IsingBoundary) -> usize {
    match boundary {
        IsingBoundary::Open => binomial(n_sites, m),
        IsingBoundary::PeriodicDoubled => 2 * binomial(n_sites, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{assemble_fermi, parse_occupation, Boundary};
    use crate::linalg::{eigvalsh_csr, vdot};
    use crate::operator::expectation_value;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn odd() -> Parity {
        Parity::Odd
    }

    fn random_spec(rng: &mut ChaCha8Rng, n: usize) -> FermiChainSpec {
        let mut r = |k: usize| (0..k).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>();
        FermiChainSpec::open(r(n - 1), r(n), r(n - 1)).unwrap()
    }

    #[test]
    fn three_site_free_chain() {
        let s = FermiChainSpec::open(vec![1.0, 1.0], vec![0.0; 3], vec![0.0; 2]).unwrap();
        let e = encode_ising(&s, -5.0, odd(), Gauge::Ferro).unwrap();
        assert_eq!(e.n_qubits, 2);
        assert_eq!(e.h, vec![-5.0, 5.0]);
        assert_eq!(e.jnn, vec![-5.0]);
        assert!(e.jnnn.is_empty());
        assert_eq!(e.tx, Transverse::Static(vec![1.0, 1.0]));
    }

    #[test]
    fn interaction_terms_four_sites() {
        let s = FermiChainSpec::open(vec![1.0; 3], vec![0.0; 4], vec![4.0, 0.0, 0.0]).unwrap();
        let j = -5.0;
        let e = encode_ising(&s, j, odd(), Gauge::Ferro).unwrap();
        // v_1 enters via σ_0σ_2 → field +1 on qubit 2, and via bond 1
        assert_eq!(e.h, vec![j - 1.0, 1.0, -j]);
        assert_eq!(e.jnn, vec![j - 1.0, j]);
        // the pair (1,3) carries v_2 / 4
        assert_eq!(e.jnnn, vec![0.0]);
        let s2 = FermiChainSpec::open(vec![1.0; 3], vec![0.0; 4], vec![0.0, 4.0, 0.0]).unwrap();
        assert_eq!(encode_ising(&s2, j, odd(), Gauge::Ferro).unwrap().jnnn, vec![1.0]);
    }

    #[test]
    fn rescaled_ising_matches_scaled_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = random_spec(&mut rng, 6);
        for g in [Gauge::Ferro, Gauge::Antiferro] {
            let e = encode_ising(&spec, -7.0, odd(), g).unwrap().rescaled(2.5).unwrap();
            let direct = encode_ising(&spec.scaled(1.0 / 2.5), -7.0, odd(), g).unwrap();
            let d = assemble_ising(&e).unwrap().lincomb(1.0, &assemble_ising(&direct).unwrap(), -1.0).unwrap();
            assert!(d.matrix().max_abs() < 1e-12);
        }
    }

    #[test]
    fn three_spin_coupler_energies() {
        let v = 1.7;
        let (jnn, jnnn) = interaction_coupler(v);
        let e = |s: [f64; 3]| jnn * (s[0] * s[1] + s[1] * s[2]) + jnnn * s[0] * s[2];
        assert!((e([1.0, 1.0, 1.0]) + v / 3.0).abs() < 1e-15);
        assert!((e([1.0, 1.0, -1.0]) + v / 3.0).abs() < 1e-15);
        assert!((e([1.0, -1.0, 1.0]) - v).abs() < 1e-15);
    }

    #[test]
    fn wall_counts() {
        let c = |s: &str, p| count_domain_walls(parse_qubits(s).unwrap(), 2, p, IsingBoundary::Open);
        assert_eq!(c("11", Parity::Odd), 1);
        assert_eq!(c("01", Parity::Odd), 1);
        assert_eq!(c("00", Parity::Odd), 1);
        assert_eq!(c("10", Parity::Odd), 3);
        assert_eq!(c("00", Parity::Even), 0);
        assert_eq!(c("10", Parity::Even), 2);
        for n in 2..9 {
            for m in 1..=n {
                // |m⟩ = 0^{m-1} 1^{N-m}
                let s: String = (1..n).map(|k| if k < m { '0' } else { '1' }).collect();
                assert_eq!(count_domain_walls(parse_qubits(&s).unwrap(), n - 1, odd(), IsingBoundary::Open), 1);
            }
        }
    }

    #[test]
    fn subspace_enumeration() {
        let s = enumerate_m_subspace(3, 1, odd(), IsingBoundary::Open).unwrap();
        let strs: Vec<String> = s.basis.iter().map(|&i| format_qubits(i, 2)).collect();
        assert_eq!(s.dim(), 3);
        for x in ["00", "01", "11"] {
            assert!(strs.contains(&x.to_string()));
        }
        let s3 = enumerate_m_subspace(3, 3, odd(), IsingBoundary::Open).unwrap();
        assert_eq!(s3.basis, vec![parse_qubits("10").unwrap()]);
        assert!(enumerate_m_subspace(3, 2, odd(), IsingBoundary::Open).is_err());
        for n in 2..=16 {
            for p in [Parity::Odd, Parity::Even] {
                let total: usize = valid_sectors(n, p, IsingBoundary::Open).iter().map(|&m| binomial(n, m)).sum();
                assert_eq!(total, 1 << (n - 1));
            }
        }
        for n in 2..=8 {
            for m in valid_sectors(n, odd(), IsingBoundary::Open) {
                let s = enumerate_m_subspace(n, m, odd(), IsingBoundary::Open).unwrap();
                assert!(s.basis.iter().all(|&i| count_domain_walls(i, n - 1, odd(), IsingBoundary::Open) == m));
            }
        }
    }

    #[test]
    fn fock_mapping_examples() {
        let f = |s: &str, p, r| {
            let o = parse_occupation(s).unwrap();
            format_qubits(fock_to_dw(o, s.len(), p, IsingBoundary::Open, r).unwrap(), s.len() - 1)
        };
        assert_eq!(f("100", Parity::Odd, Representative::Standard), "11");
        assert_eq!(f("101", Parity::Even, Representative::Standard), "11");
        assert_eq!(f("00110", Parity::Even, Representative::Standard), "0010");
        assert_eq!(f("00110", Parity::Even, Representative::Flipped), "1101");
        assert!(fock_to_dw(parse_occupation("110").unwrap(), 3, Parity::Odd, IsingBoundary::Open, Representative::Standard).is_err());
    }

    proptest! {
        #[test]
        fn fock_roundtrip(n in 2usize..12, bits in any::<u64>(), flipped in any::<bool>()) {
            let occ = bits & ((1u64 << n) - 1);
            let p = Parity::of(occ.count_ones() as usize);
            let rep = if flipped { Representative::Flipped } else { Representative::Standard };
            let idx = fock_to_dw(occ, n, p, IsingBoundary::Open, rep).unwrap();
            prop_assert_eq!(dw_to_fock(idx, n - 1, p, IsingBoundary::Open, rep), occ);
            let std_idx = if flipped { idx ^ ((1 << (n - 1)) - 1) } else { idx };
            prop_assert_eq!(count_domain_walls(std_idx, n - 1, p, IsingBoundary::Open), occ.count_ones() as usize);
        }

        #[test]
        fn ring_roundtrip(n in 2usize..8, bits in any::<u64>()) {
            let m = 2 * n;
            let mut occ = bits & ((1u64 << m) - 1);
            if occ.count_ones() % 2 == 1 { occ ^= 1; }
            for rep in [Representative::Standard, Representative::Flipped] {
                let idx = fock_to_dw(occ, m, Parity::Even, IsingBoundary::PeriodicDoubled, rep).unwrap();
                prop_assert_eq!(dw_to_fock(idx, m, Parity::Even, IsingBoundary::PeriodicDoubled, rep), occ);
                prop_assert_eq!(count_domain_walls(idx, m, Parity::Even, IsingBoundary::PeriodicDoubled), occ.count_ones() as usize);
            }
        }
    }

    #[test]
    fn block_identity_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=7 {
            for parity in [Parity::Odd, Parity::Even] {
                let spec = random_spec(&mut rng, n).with_parity(parity);
                let j = rng.random_range(-20.0..-1.0);
                let h = assemble_ising(&encode_ising(&spec, j, parity, Gauge::Ferro).unwrap()).unwrap();
                for m in valid_sectors(n, parity, IsingBoundary::Open) {
                    let sub = enumerate_m_subspace(n, m, parity, IsingBoundary::Open).unwrap();
                    let b = project_to_block(&h, &sub).unwrap();
                    let f = assemble_fermi(&spec, m).unwrap();
                    let shift = (n as f64 - 2.0 * m as f64) * j - 0.25 * spec.v.iter().sum::<f64>()
                        - 0.5 * spec.eps.iter().sum::<f64>();
                    let d = b.lincomb(1.0, &f, -1.0).unwrap().to_dense();
                    for i in 0..d.nrows() {
                        for k in 0..d.ncols() {
                            let expect = if i == k { shift } else { 0.0 };
                            assert!((d[(i, k)].re - expect).abs() < 1e-10 && d[(i, k)].im == 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn transverse_field_block_is_hopping() {
        let s = FermiChainSpec::open(vec![0.7; 5], vec![0.0; 6], vec![0.0; 5]).unwrap();
        let terms: Vec<PauliTerm> = (1..6).map(|k| PauliTerm::x(-0.7, k)).collect();
        let hx = assemble_operator_with_cap(&terms, 5, 20).unwrap();
        let sub = enumerate_m_subspace(6, 1, odd(), IsingBoundary::Open).unwrap();
        let b = project_to_block(&hx, &sub).unwrap();
        assert_eq!(b.to_dense(), assemble_fermi(&s, 1).unwrap().to_dense());
        let id = crate::operator::assemble_operator(&[PauliTerm::identity(1.0)], 5).unwrap();
        let bi = project_to_block(&id, &sub).unwrap().to_dense();
        for i in 0..6 {
            for k in 0..6 {
                assert_eq!(bi[(i, k)].re, if i == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn sector_structure_of_assembled_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = random_spec(&mut rng, 7);
        let h = assemble_ising(&encode_ising(&spec, -4.0, odd(), Gauge::Ferro).unwrap()).unwrap();
        for (i, k, _) in h.matrix().iter() {
            let a = count_domain_walls(i, 6, odd(), IsingBoundary::Open) as i64;
            let b = count_domain_walls(k, 6, odd(), IsingBoundary::Open) as i64;
            assert!(a == b || (a - b).abs() == 2);
        }
    }

    #[test]
    fn antiferro_gauge_is_isospectral() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [4usize, 5, 7] {
            let spec = random_spec(&mut rng, n);
            let a = assemble_ising(&encode_ising(&spec, -6.0, odd(), Gauge::Ferro).unwrap()).unwrap();
            let b = assemble_ising(&encode_ising(&spec, -6.0, odd(), Gauge::Antiferro).unwrap()).unwrap();
            let ea = eigvalsh_csr(a.matrix()).unwrap();
            let eb = eigvalsh_csr(b.matrix()).unwrap();
            assert!(ea.iter().zip(&eb).all(|(x, y)| (x - y).abs() < 1e-10));
            let af = encode_ising(&spec, -6.0, odd(), Gauge::Antiferro).unwrap();
            assert!(af.jnn.iter().all(|&c| c > 0.0));
        }
    }

    #[test]
    fn occupations_from_register() {
        let l3 = Layout::open(3, odd());
        let s = QuantumState::basis_state(parse_qubits("11").unwrap(), l3.tag()).unwrap();
        assert_eq!(site_occupations(&s, &l3).unwrap(), vec![1.0, 0.0, 0.0]);
        let l5 = Layout::open(5, Parity::Even);
        let s = QuantumState::basis_state(parse_qubits("0010").unwrap(), l5.tag()).unwrap();
        assert_eq!(site_occupations(&s, &l5).unwrap(), vec![0.0, 0.0, 1.0, 1.0, 0.0]);
        let a = 1.0 / 2f64.sqrt();
        let mut v = vec![C64::new(0.0, 0.0); 4];
        v[parse_qubits("11").unwrap()] = C64::new(a, 0.0);
        v[parse_qubits("01").unwrap()] = C64::new(a, 0.0);
        let s = QuantumState::pure(v, l3.tag()).unwrap();
        let p = site_occupations(&s, &l3).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
    }

    /// σz-correlator formula applied literally, as an independent check of
    /// the wall decoding.
    #[test]
    fn occupations_match_zz_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for parity in [Parity::Odd, Parity::Even] {
            let n = 6;
            let l = Layout::open(n, parity);
            let v: Vec<C64> = (0..32).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let nrm = crate::linalg::norm(&v);
            let s = QuantumState::pure(v.iter().map(|x| x / nrm).collect(), l.tag()).unwrap();
            let p = site_occupations(&s, &l).unwrap();
            let ex = |terms: Vec<PauliTerm>| expectation_value(&crate::operator::assemble_operator(&terms, 5).unwrap(), &s).unwrap();
            let sign_n = if parity == Parity::Odd { 1.0 } else { -1.0 };
            assert!((p[0] - (0.5 - 0.5 * ex(vec![PauliTerm::z(1.0, 1)]))).abs() < 1e-12);
            assert!((p[n - 1] - (0.5 + sign_n * 0.5 * ex(vec![PauliTerm::z(1.0, n - 1)]))).abs() < 1e-12);
            for k in 2..n {
                assert!((p[k - 1] - (0.5 - 0.5 * ex(vec![PauliTerm::zz(1.0, k - 1, k)]))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inversion_operator() {
        let pi = spin_inversion_operator(4).unwrap();
        let s = QuantumState::basis_state(parse_qubits("0010").unwrap(), BasisTag::Register { n_qubits: 4 }).unwrap();
        let out = crate::operator::apply_to_state(&pi, &s).unwrap();
        assert_eq!(out.amplitudes().unwrap()[parse_qubits("1101").unwrap()], C64::new(1.0, 0.0));
        let sq = pi.matrix().matmul(pi.matrix());
        assert_eq!(sq, CsrMatrix::identity(16));
    }

    fn commutator_norm(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
        let c = a.matmul(b).lincomb(C64::new(1.0, 0.0), &b.matmul(a), C64::new(-1.0, 0.0));
        c.max_abs()
    }

    #[test]
    fn inversion_commutes_with_chain_hamiltonians() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 3..=7 {
            let spec = random_spec(&mut rng, n);
            let ext = assemble_ising_extended(&spec, -3.0).unwrap();
            let pi = spin_inversion_operator(n + 1).unwrap();
            assert!(commutator_norm(ext.matrix(), pi.matrix()) < 1e-12);
            let mut per = spec.clone();
            per.boundary = Boundary::Periodic;
            per.t.push(rng.random_range(-1.0..1.0));
            per.v.push(rng.random_range(-1.0..1.0));
            if n <= 5 {
                let ring = assemble_ising(&encode_ising(&per, -3.0, Parity::Even, Gauge::Ferro).unwrap()).unwrap();
                let pi = spin_inversion_operator(2 * n).unwrap();
                assert!(commutator_norm(ring.matrix(), pi.matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn extended_register_restricts_to_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = random_spec(&mut rng, 5);
        let ext = assemble_ising_extended(&spec, -4.0).unwrap();
        for p in [Parity::Odd, Parity::Even] {
            let r = restrict_to_virtuals(&ext, 5, p, Representative::Standard).unwrap();
            let h = assemble_ising(&encode_ising(&spec, -4.0, p, Gauge::Ferro).unwrap()).unwrap();
            let d = r.lincomb(1.0, &h, -1.0).unwrap();
            assert!(d.matrix().max_abs() < 1e-12);
        }
    }

    #[test]
    fn ring_doubling_conserves_walls_and_repeats_parameters() {
        let per = FermiChainSpec::new(vec![1.0, 0.5, 0.2], vec![0.3, -0.1, 0.0], vec![0.4, 0.0, 0.8], Boundary::Periodic, Parity::Odd).unwrap();
        let e = encode_ising(&per, -6.0, Parity::Odd, Gauge::Ferro).unwrap();
        assert_eq!(e.n_qubits, 6);
        assert_eq!(e.transverse_at(0.0), vec![1.0, 0.5, 0.2, 1.0, 0.5, 0.2]);
        let h = assemble_ising(&e).unwrap();
        for (i, k, _) in h.matrix().iter() {
            let a = count_domain_walls(i, 6, Parity::Even, IsingBoundary::PeriodicDoubled) as i64;
            let b = count_domain_walls(k, 6, Parity::Even, IsingBoundary::PeriodicDoubled) as i64;
            assert!(a == b || (a - b).abs() == 2);
        }
        // a doubled single particle: two walls, one per copy
        let occ = parse_occupation("100100").unwrap();
        let l = e.layout();
        let s = fock_state(occ, &l).unwrap();
        let p = site_occupations(&s, &l).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn even_strings_number_and_hopping() {
        let n = 5;
        let nop = map_even_string_operator(&[(1, Ladder::Raise), (1, Ladder::Lower)], n, odd()).unwrap();
        // n_1 + n_1† = 2 n_1 = I − σ_1^z
        let expect = crate::operator::assemble_operator(&[PauliTerm::identity(1.0), PauliTerm::z(-1.0, 1)], n - 1).unwrap();
        assert!(nop.lincomb(1.0, &expect, -1.0).unwrap().matrix().max_abs() < 1e-14);
        // hopping sum reproduces the hopping block in every odd sector
        let mut hop: Option<HermitianOperator> = None;
        for k in 1..n {
            let o = map_even_string_operator(&[(k, Ladder::Raise), (k + 1, Ladder::Lower)], n, odd()).unwrap();
            hop = Some(match hop {
                None => o,
                Some(h) => h.lincomb(1.0, &o, 1.0).unwrap(),
            });
        }
        let hop = hop.unwrap().scaled(-1.0);
        let s = FermiChainSpec::open(vec![1.0; n - 1], vec![0.0; n], vec![0.0; n - 1]).unwrap();
        for m in [1usize, 3, 5] {
            let sub = enumerate_m_subspace(n, m, odd(), IsingBoundary::Open).unwrap();
            let b = project_to_block(&hop, &sub).unwrap();
            assert_eq!(b.to_dense(), assemble_fermi(&s, m).unwrap().to_dense());
        }
        assert!(map_even_string_operator(&[(1, Ladder::Raise)], n, odd()).is_err());
    }

    #[test]
    fn fock_expectation_is_occupation() {
        let n = 6;
        for bits in 0u64..64 {
            let p = Parity::of(bits.count_ones() as usize);
            let l = Layout::open(n, p);
            let s = fock_state(bits, &l).unwrap();
            for k in 1..=n {
                let op = map_even_string_operator(&[(k, Ladder::Raise), (k, Ladder::Lower)], n, p).unwrap();
                let e = expectation_value(&op, &s).unwrap() / 2.0;
                assert_eq!(e, if crate::chain::occupied(bits, n, k) { 1.0 } else { 0.0 });
            }
        }
        let _ = vdot(&[C64::new(1.0, 0.0)], &[C64::new(1.0, 0.0)]);
    }
}

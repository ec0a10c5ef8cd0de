//! Second-order Schrieffer–Wolff analysis of the wall-number blocks.

use std::collections::BTreeMap;

use faer::Mat;

use crate::chain::{FermiChainSpec, Parity};
use crate::encoding::{count_domain_walls, enumerate_m_subspace, valid_sectors, IsingBoundary, SubspaceIndex};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Eigh};
use crate::operator::HermitianOperator;
use crate::C64;

/// (N−2M)J − ¼Σv − ½Σε: what separates the M-wall block of H_DW from H_Fermi^(M).
pub fn block_offset(spec: &FermiChainSpec, j: f64, m: usize) -> f64 {
    (spec.n as f64 - 2.0 * m as f64) * j - 0.25 * spec.v.iter().sum::<f64>() - 0.5 * spec.eps.iter().sum::<f64>()
}

#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub n_sites: usize,
    pub parity: Parity,
    pub j: f64,
    pub sectors: BTreeMap<usize, SubspaceIndex>,
    /// H_DW^(M) − offset, in occupation order
    pub blocks: BTreeMap<usize, HermitianOperator>,
    pub offsets: BTreeMap<usize, f64>,
    /// V_{M,M+2}: rows in sector M, columns in sector M+2
    pub couplings: BTreeMap<(usize, usize), Mat<C64>>,
}

/// Split an open-chain, ferro-gauge H_DW into wall sectors.
pub fn block_decompose(h_dw: &HermitianOperator, spec: &FermiChainSpec, j: f64, parity: Parity) -> Result<BlockDecomposition> {
    let n = spec.n;
    let nq = n - 1;
    if h_dw.dim() != 1 << nq {
        return Err(Error::DimensionMismatch { expected: 1 << nq, found: h_dw.dim() });
    }
    let walls = |i: usize| count_domain_walls(i, nq, parity, IsingBoundary::Open);
    for (r, c, _) in h_dw.matrix().iter() {
        let (a, b) = (walls(r), walls(c));
        if a != b && a.abs_diff(b) != 2 {
            return Err(Error::ForbiddenCoupling { from: b, to: a });
        }
    }
    let mut sectors = BTreeMap::new();
    let mut blocks = BTreeMap::new();
    let mut offsets = BTreeMap::new();
    for m in valid_sectors(n, parity, IsingBoundary::Open) {
        let sub = enumerate_m_subspace(n, m, parity, IsingBoundary::Open)?;
        let off = block_offset(spec, j, m);
        let b = h_dw.matrix().select(&sub.fock_order, &sub.fock_order);
        let b = CsrMatrix::from_dense(&b).add_diagonal(-off);
        blocks.insert(m, HermitianOperator::new(b, sub.block_tag())?);
        offsets.insert(m, off);
        sectors.insert(m, sub);
    }
    let mut couplings = BTreeMap::new();
    for (&m, sub) in &sectors {
        if let Some(up) = sectors.get(&(m + 2)) {
            couplings.insert((m, m + 2), h_dw.matrix().select(&sub.fock_order, &up.fock_order));
        }
    }
    Ok(BlockDecomposition { n_sites: n, parity, j, sectors, blocks, offsets, couplings })
}

impl BlockDecomposition {
    /// Register matrix rebuilt from blocks, offsets and couplings.
    pub fn reassemble(&self) -> CsrMatrix {
        let dim = 1usize << (self.n_sites - 1);
        let mut trips = Vec::new();
        for (m, b) in &self.blocks {
            let order = &self.sectors[m].fock_order;
            for (i, k, v) in b.matrix().iter() {
                trips.push((order[i], order[k], v));
            }
            for &r in order {
                trips.push((r, r, C64::new(self.offsets[m], 0.0)));
            }
        }
        for ((lo, hi), v) in &self.couplings {
            let (ro, co) = (&self.sectors[lo].fock_order, &self.sectors[hi].fock_order);
            for i in 0..v.nrows() {
                for k in 0..v.ncols() {
                    let x = v[(i, k)];
                    if x != C64::new(0.0, 0.0) {
                        trips.push((ro[i], co[k], x));
                        trips.push((co[k], ro[i], x.conj()));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(dim, trips)
    }

    /// Coupling from sector `m` (rows) to sector `k` (columns).
    pub fn coupling(&self, m: usize, k: usize) -> Option<Mat<C64>> {
        if k == m + 2 {
            self.couplings.get(&(m, k)).cloned()
        } else if m == k + 2 {
            self.couplings.get(&(k, m)).map(|v| v.adjoint().to_owned())
        } else {
            None
        }
    }

    fn neighbours(&self, m: usize) -> Vec<usize> {
        [m.checked_sub(2), Some(m + 2)].into_iter().flatten().filter(|k| self.blocks.contains_key(k)).collect()
    }

    fn sector_eigen(&self, m: usize) -> Result<Eigh> {
        let b = self.blocks.get(&m).ok_or(Error::InvalidSector { n: self.n_sites, m })?;
        b.eigh()
    }
}

/// Eigen-data of one sector: energies λ include the offset.
struct Sector {
    lam: Vec<f64>,
    eig: Eigh,
}

/// Ṽ = U_M† V U_k for each neighbour k.
struct Dressing {
    home: Sector,
    others: Vec<(usize, Sector, Mat<C64>)>,
}

fn guard(li: f64, lk: f64, i: usize, k: usize, j: f64) -> Result<f64> {
    let gap = li - lk;
    if gap.abs() < 1e-6 * j.abs() {
        return Err(Error::Degenerate { i, k, gap });
    }
    Ok(gap)
}

fn dressing(dec: &BlockDecomposition, m: usize, cache: &mut BTreeMap<usize, Sector>) -> Result<Dressing> {
    let mut get = |s: usize| -> Result<Sector> {
        if let Some(x) = cache.remove(&s) {
            return Ok(x);
        }
        let eig = dec.sector_eigen(s)?;
        let off = dec.offsets[&s];
        Ok(Sector { lam: eig.values.iter().map(|x| x + off).collect(), eig })
    };
    let home = get(m)?;
    let mut others = Vec::new();
    for k in dec.neighbours(m) {
        let sec = get(k)?;
        let v = dec.coupling(m, k).expect("neighbour coupling");
        let vt = home.eig.vectors.adjoint() * &v * &sec.eig.vectors;
        others.push((k, sec, vt));
    }
    Ok(Dressing { home, others })
}

/// ½ Σ_k Ṽ_ik conj(Ṽ_jk) (1/(λi−λk) + 1/(λj−λk)) in the bare eigenbasis of the home sector.
fn second_order_correction(lam: &[f64], others: &[(&[f64], &Mat<C64>)], j: f64) -> Result<Mat<C64>> {
    let d = lam.len();
    let mut corr = Mat::<C64>::zeros(d, d);
    for &(lk, vt) in others {
        let mut w = Mat::<C64>::zeros(d, lk.len());
        for i in 0..d {
            for k in 0..lk.len() {
                w[(i, k)] = vt[(i, k)] / guard(lam[i], lk[k], i, k, j)?;
            }
        }
        let a = &w * vt.adjoint();
        corr += Mat::from_fn(d, d, |i, q| 0.5 * (a[(i, q)] + a[(q, i)].conj()));
    }
    Ok(corr)
}

/// H_eff^(M) = H_Fermi^(M) + second-order correction, occupation basis.
pub fn sw_effective_hamiltonian(dec: &BlockDecomposition, m: usize) -> Result<HermitianOperator> {
    let dr = dressing(dec, m, &mut BTreeMap::new())?;
    let others: Vec<(&[f64], &Mat<C64>)> = dr.others.iter().map(|(_, s, v)| (s.lam.as_slice(), v)).collect();
    let corr = second_order_correction(&dr.home.lam, &others, dec.j)?;
    let u = &dr.home.eig.vectors;
    let back = u * &corr * u.adjoint();
    let h = dec.blocks[&m].to_dense() + back;
    HermitianOperator::from_dense_symmetrized(&h, dec.blocks[&m].basis().clone())
}

#[derive(Clone, Debug)]
pub struct DressedSpectrum {
    /// sector of each window index
    pub sectors: Vec<usize>,
    /// bare λ_i, offsets included
    pub bare_values: Vec<f64>,
    /// bare eigenvectors per sector, occupation basis
    pub bare_vectors: BTreeMap<usize, Mat<C64>>,
    pub dressed_values: Vec<f64>,
    /// ψ̃_ik over the window; vanishes between different sectors
    pub correction_amplitudes: Mat<C64>,
    /// first-order admixture Ṽ_ki/(λi−λk) of each window state into its neighbour sectors
    pub leakage_amplitudes: BTreeMap<(usize, usize), Mat<C64>>,
    /// same-sector pairs whose bare gap is below 1e-9 (amplitude left at zero)
    pub near_degenerate: Vec<(usize, usize)>,
}

impl DressedSpectrum {
    pub fn len(&self) -> usize {
        self.bare_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bare_values.is_empty()
    }

    /// Window indices belonging to sector m.
    pub fn indices_of(&self, m: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.sectors[i] == m).collect()
    }
}

pub fn dressed_spectrum(dec: &BlockDecomposition, window: &[usize]) -> Result<DressedSpectrum> {
    let mut sectors = Vec::new();
    let mut bare_values = Vec::new();
    let mut dressed_values = Vec::new();
    let mut bare_vectors = BTreeMap::new();
    let mut leakage_amplitudes = BTreeMap::new();
    let mut near_degenerate = Vec::new();
    let mut blocks: Vec<(usize, Mat<C64>)> = Vec::new();
    let mut ms: Vec<usize> = window.to_vec();
    ms.sort_unstable();
    ms.dedup();
    for &m in &ms {
        let dr = dressing(dec, m, &mut BTreeMap::new())?;
        let lam = &dr.home.lam;
        let d = lam.len();
        let mut shift = vec![0.0; d];
        let mut p = Mat::<C64>::zeros(d, d);
        for (k, sec, vt) in &dr.others {
            let lk = &sec.lam;
            // W'_{ik'} = Ṽ_ik' / (λk' − λi)
            let mut w = Mat::<C64>::zeros(d, lk.len());
            let mut leak = Mat::<C64>::zeros(lk.len(), d);
            for i in 0..d {
                for q in 0..lk.len() {
                    let gap = guard(lam[i], lk[q], i, q, dec.j)?;
                    shift[i] += vt[(i, q)].norm_sqr() / gap;
                    w[(i, q)] = vt[(i, q)] / -gap;
                    leak[(q, i)] = vt[(i, q)].conj() / gap;
                }
            }
            // P_ki = Σ_k' Ṽ_kk' conj(W'_ik') + W'_kk' conj(Ṽ_ik')
            p += vt * w.adjoint() + &w * vt.adjoint();
            leakage_amplitudes.insert((m, *k), leak);
        }
        let base = sectors.len();
        let mut psi = Mat::<C64>::zeros(d, d);
        for i in 0..d {
            for k in 0..d {
                if i == k {
                    continue;
                }
                let gap = lam[i] - lam[k];
                if gap.abs() < 1e-9 {
                    near_degenerate.push((base + i, base + k));
                    continue;
                }
                psi[(i, k)] = p[(k, i)] / gap;
            }
        }
        blocks.push((base, psi));
        for i in 0..d {
            sectors.push(m);
            bare_values.push(lam[i]);
            dressed_values.push(lam[i] + shift[i]);
        }
        bare_vectors.insert(m, dr.home.eig.vectors.clone());
    }
    let total = sectors.len();
    let mut correction_amplitudes = Mat::<C64>::zeros(total, total);
    for (base, psi) in blocks {
        for i in 0..psi.nrows() {
            for k in 0..psi.ncols() {
                correction_amplitudes[(base + i, base + k)] = psi[(i, k)];
            }
        }
    }
    Ok(DressedSpectrum {
        sectors,
        bare_values,
        bare_vectors,
        dressed_values,
        correction_amplitudes,
        leakage_amplitudes,
        near_degenerate,
    })
}

/// Σ|a_i|² e^{iT(λi−λ̃i)} for bare-eigenbasis amplitudes a over the window.
pub fn predicted_overlap(amplitudes: &[C64], spectrum: &DressedSpectrum, time: f64) -> Result<C64> {
    if amplitudes.len() != spectrum.len() {
        return Err(Error::DimensionMismatch { expected: spectrum.len(), found: amplitudes.len() });
    }
    Ok(amplitudes
        .iter()
        .zip(spectrum.bare_values.iter().zip(&spectrum.dressed_values))
        .map(|(a, (l, ld))| a.norm_sqr() * C64::from_polar(1.0, time * (l - ld)))
        .sum())
}

/// ⟨A,B⟩_F² / (‖A‖_F² ‖B‖_F²)
pub fn operator_fidelity(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let (na, nb) = (a.matrix().frobenius_sq(), b.matrix().frobenius_sq());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let inner: C64 = a.matrix().iter().map(|(i, k, x)| x.conj() * b.matrix().get(i, k)).sum();
    Ok((inner.norm_sqr() / (na * nb)).min(1.0))
}

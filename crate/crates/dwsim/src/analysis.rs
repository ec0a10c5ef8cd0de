//! Observables and spectral statistics.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::{binomial, FockBasis};
use crate::encoding::{fock_to_dw, Layout, Representative, SubspaceIndex};
use crate::error::{Error, Result};
use crate::linalg::dense::{eigvalsh_real, spectral_norm};
use crate::operator::{BasisTag, QuantumState, StateData};
use crate::C64;

/// Register amplitudes of an occupation-basis state (standard representative).
pub fn embed_exact(exact: &QuantumState, layout: &Layout) -> Result<Vec<C64>> {
    let amps = exact.amplitudes().ok_or_else(|| Error::InvalidSpec("exact reference must be a pure state".into()))?;
    match exact.basis() {
        BasisTag::Occupation { sites, particles } => {
            if *sites != layout.n_sites {
                return Err(Error::BasisMismatch(format!("{sites} sites vs layout of {}", layout.n_sites)));
            }
            let fock = FockBasis::new(*sites, *particles)?;
            let mask = layout.gauge_mask();
            let mut out = vec![C64::new(0.0, 0.0); 1 << layout.n_qubits()];
            for (&o, &a) in fock.states.iter().zip(amps) {
                out[fock_to_dw(o, *sites, layout.parity, layout.boundary, Representative::Standard)? ^ mask] = a;
            }
            Ok(out)
        }
        BasisTag::Register { n_qubits } if *n_qubits == layout.n_qubits() => Ok(amps.to_vec()),
        other => Err(Error::BasisMismatch(format!("cannot embed {other:?}"))),
    }
}

fn overlap_with(psi: &[C64], state: &QuantumState) -> Result<f64> {
    if psi.len() != state.dim() {
        return Err(Error::DimensionMismatch { expected: psi.len(), found: state.dim() });
    }
    Ok(match state.data() {
        StateData::Pure(v) => psi.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr(),
        StateData::Mixed(r) => {
            let mut acc = C64::new(0.0, 0.0);
            for (i, a) in psi.iter().enumerate() {
                if *a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (j, b) in psi.iter().enumerate() {
                    acc += a.conj() * r[(i, j)] * b;
                }
            }
            acc.re
        }
    })
}

/// |⟨ψ_exact|ψ_DW⟩|², or ⟨ψ_exact|ρ_DW|ψ_exact⟩ for a mixed register state.
pub fn state_fidelity(exact: &QuantumState, dw: &QuantumState, layout: &Layout) -> Result<f64> {
    if dw.basis() != &layout.tag() {
        return Err(Error::BasisMismatch(format!("register state has basis {:?}", dw.basis())));
    }
    let psi = embed_exact(exact, layout)?;
    overlap_with(&psi, dw)
}

/// Fidelity of two states on the same basis.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.basis() != b.basis() {
        return Err(Error::BasisMismatch("fidelity between different bases".into()));
    }
    let psi = a.amplitudes().ok_or_else(|| Error::InvalidSpec("first argument must be pure".into()))?;
    overlap_with(psi, b)
}

/// ‖P^(M) ψ‖² or Tr(P ρ P), ferro-gauge sector.
pub fn subspace_fidelity(dw: &QuantumState, sub: &SubspaceIndex) -> Result<f64> {
    subspace_weight(dw, sub, 0)
}

/// Sector weight with the register in a gauge given by its XOR mask.
pub fn subspace_weight(dw: &QuantumState, sub: &SubspaceIndex, mask: usize) -> Result<f64> {
    if dw.dim() != 1 << sub.n_qubits {
        return Err(Error::DimensionMismatch { expected: 1 << sub.n_qubits, found: dw.dim() });
    }
    Ok(match dw.data() {
        StateData::Pure(v) => sub.basis.iter().map(|&i| v[i ^ mask].norm_sqr()).sum(),
        StateData::Mixed(r) => sub.basis.iter().map(|&i| r[(i ^ mask, i ^ mask)].re).sum(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParticipationEntropy {
    pub value: f64,
    /// weight outside the sector, removed before renormalizing
    pub discarded: f64,
}

/// S₂ = −ln Σ|⟨η|ψ⟩|⁴ over the sector basis, after projecting and renormalizing.
pub fn participation_entropy(state: &QuantumState, sub: &SubspaceIndex) -> Result<ParticipationEntropy> {
    participation_entropy_gauged(state, sub, 0)
}

pub fn participation_entropy_gauged(state: &QuantumState, sub: &SubspaceIndex, mask: usize) -> Result<ParticipationEntropy> {
    let probs: Vec<f64> = match state.basis() {
        BasisTag::Register { .. } => {
            let pops = state.populations();
            if pops.len() != 1 << sub.n_qubits {
                return Err(Error::DimensionMismatch { expected: 1 << sub.n_qubits, found: pops.len() });
            }
            sub.fock_order.iter().map(|&i| pops[i ^ mask]).collect()
        }
        _ => {
            if state.dim() != sub.dim() {
                return Err(Error::DimensionMismatch { expected: sub.dim(), found: state.dim() });
            }
            state.populations()
        }
    };
    let total_all = state.norm_sqr();
    let w: f64 = probs.iter().sum();
    if w < 0.5 * total_all {
        return Err(Error::LeftSector(w / total_all));
    }
    let ipr: f64 = probs.iter().map(|p| (p / w).powi(2)).sum();
    let value = (-ipr.ln()).clamp(0.0, (sub.dim() as f64).ln());
    Ok(ParticipationEntropy { value, discarded: 1.0 - w / total_all })
}

/// Trapezoidal mean of a sampled series over [t0, t1].
pub fn time_average(series: &[(f64, f64)], t0: f64, t1: f64) -> Result<f64> {
    if series.len() < 2 || t1 <= t0 || t0 < series[0].0 - 1e-12 || t1 > series[series.len() - 1].0 + 1e-12 {
        return Err(Error::EmptyWindow(t0, t1));
    }
    let at = |t: f64| -> f64 {
        let k = series.partition_point(|&(x, _)| x < t).clamp(1, series.len() - 1);
        let ((xa, ya), (xb, yb)) = (series[k - 1], series[k]);
        if xb == xa {
            ya
        } else {
            ya + (yb - ya) * (t - xa) / (xb - xa)
        }
    };
    let mut pts = vec![(t0, at(t0))];
    pts.extend(series.iter().copied().filter(|&(x, _)| x > t0 && x < t1));
    pts.push((t1, at(t1)));
    let area: f64 = pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    Ok(area / (t1 - t0))
}

/// 𝓟 = |⟨ψ0|ψ_T⟩|²
pub fn survival_probability(psi0: &QuantumState, psit: &QuantumState) -> Result<f64> {
    fidelity(psi0, psit)
}

/// r = −ln(𝓟)/N; +∞ once 𝓟 underflows.
pub fn rate_function(psi0: &QuantumState, psit: &QuantumState, n: usize) -> Result<f64> {
    Ok(rate_from_probability(survival_probability(psi0, psit)?, n))
}

pub fn rate_from_probability(p: f64, n: usize) -> f64 {
    if p <= 1e-300 {
        f64::INFINITY
    } else {
        (-p.ln() / n as f64).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRatios {
    pub ratios: Vec<f64>,
    /// ⟨min(r, 1/r)⟩
    pub mean: f64,
    /// indices dropped for a zero spacing
    pub skipped: usize,
}

pub fn gap_ratio_statistics(eigenvalues: &[f64]) -> Result<GapRatios> {
    if eigenvalues.len() < 4 {
        return Err(Error::TooFewLevels { needed: 4, got: eigenvalues.len() });
    }
    let mut e = eigenvalues.to_vec();
    e.sort_by(f64::total_cmp);
    let mut ratios = Vec::with_capacity(e.len());
    let mut skipped = 0;
    for w in e.windows(3) {
        let (a, b) = (w[1] - w[0], w[2] - w[1]);
        if a == 0.0 || b == 0.0 {
            skipped += 1;
            continue;
        }
        ratios.push(b / a);
    }
    let mean = ratios.iter().map(|&r| r.min(1.0 / r)).sum::<f64>() / ratios.len().max(1) as f64;
    Ok(GapRatios { ratios, mean, skipped })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelClass {
    Poisson,
    WignerDyson,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub gap_ratios: Vec<f64>,
    pub mean_ratio: f64,
    pub discarded: usize,
    pub poly_order: usize,
    pub unfolded_spacings: Vec<f64>,
    pub mean_spacing: f64,
    pub bin_width: f64,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub log_likelihood_poisson: f64,
    pub log_likelihood_wigner_dyson: f64,
    pub classification: LevelClass,
}

pub fn poisson_density(s: f64) -> f64 {
    (-s).exp()
}

pub fn wigner_dyson_density(s: f64) -> f64 {
    let pi = std::f64::consts::PI;
    0.5 * pi * s * (-0.25 * pi * s * s).exp()
}

/// Chebyshev values T_0..T_order at x.
fn chebyshev(x: f64, order: usize) -> Vec<f64> {
    let mut t = vec![1.0; order + 1];
    if order >= 1 {
        t[1] = x;
    }
    for k in 2..=order {
        t[k] = 2.0 * x * t[k - 1] - t[k - 2];
    }
    t
}

/// Unfold with a least-squares polynomial fit of the staircase, histogram the
/// spacings, and pick the likelier of Poisson and Wigner–Dyson.
pub fn unfold_and_classify(eigenvalues: &[f64], discard: usize, poly_order: usize, bin_width: f64) -> Result<SpectralReport> {
    let mut e = eigenvalues.to_vec();
    e.sort_by(f64::total_cmp);
    let n = e.len();
    let d = discard.min(n / 10);
    let kept = &e[d..n - d];
    if kept.len() < poly_order + 3 {
        return Err(Error::TooFewLevels { needed: poly_order + 3 + 2 * d, got: n });
    }
    let (lo, hi) = (kept[0], kept[kept.len() - 1]);
    let map = |x: f64| if hi > lo { 2.0 * (x - lo) / (hi - lo) - 1.0 } else { 0.0 };
    let a = Mat::from_fn(kept.len(), poly_order + 1, |i, k| chebyshev(map(kept[i]), poly_order)[k]);
    // staircase N(E_n) = number of levels at or below E_n
    let b = Mat::from_fn(kept.len(), 1, |i, _| (d + i + 1) as f64);
    let coef = a.qr().solve_lstsq(&b);
    let unfold = |x: f64| -> f64 { chebyshev(map(x), poly_order).iter().enumerate().map(|(k, t)| t * coef[(k, 0)]).sum() };
    let u: Vec<f64> = kept.iter().map(|&x| unfold(x)).collect();
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("unfolding fit"));
    }
    let spacings: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    let mean_spacing = spacings.iter().sum::<f64>() / spacings.len() as f64;
    let smax = spacings.iter().fold(0.0f64, |m, &s| m.max(s));
    let nbins = ((smax / bin_width).floor() as usize + 1).max(1);
    let mut counts = vec![0usize; nbins];
    for &s in &spacings {
        let k = ((s.max(0.0) / bin_width).floor() as usize).min(nbins - 1);
        counts[k] += 1;
    }
    let bin_edges: Vec<f64> = (0..=nbins).map(|k| k as f64 * bin_width).collect();
    let ll = |p: fn(f64) -> f64| -> f64 {
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| c as f64 * p((k as f64 + 0.5) * bin_width).max(1e-300).ln())
            .sum()
    };
    let (llp, llw) = (ll(poisson_density), ll(wigner_dyson_density));
    let gr = gap_ratio_statistics(&e)?;
    Ok(SpectralReport {
        eigenvalues: e,
        gap_ratios: gr.ratios,
        mean_ratio: gr.mean,
        discarded: d,
        poly_order,
        unfolded_spacings: spacings,
        mean_spacing,
        bin_width,
        bin_edges,
        counts,
        log_likelihood_poisson: llp,
        log_likelihood_wigner_dyson: llw,
        classification: if llw > llp { LevelClass::WignerDyson } else { LevelClass::Poisson },
    })
}

/// Levels with independent unit-mean exponential spacings.
pub fn poisson_levels(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    (0..count)
        .map(|_| {
            let s: f64 = Exp1.sample(&mut rng);
            x += s;
            x
        })
        .collect()
}

/// Eigenvalues of one real symmetric Gaussian matrix (A + Aᵀ)/2.
pub fn goe_levels(dim: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Mat::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let x: f64 = rng.sample(StandardNormal);
            let v = if i == j { x } else { x / 2f64.sqrt() };
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    eigvalsh_real(&a)
}

/// Pooled ⟨r⟩ over several GOE matrices; the outer 10% of each spectrum is dropped.
pub fn goe_mean_ratio(dim: usize, matrices: usize, seed: u64) -> Result<f64> {
    let mut acc = 0.0;
    let mut cnt = 0usize;
    for k in 0..matrices {
        let e = goe_levels(dim, seed.wrapping_add(k as u64))?;
        let cut = dim / 10;
        let g = gap_ratio_statistics(&e[cut..dim - cut])?;
        acc += g.mean * g.ratios.len() as f64;
        cnt += g.ratios.len();
    }
    Ok(acc / cnt as f64)
}

/// Random localized occupation patterns: M uniform in 1..=m_max, then M
/// distinct sites uniformly.
pub fn random_fock_states(n: usize, m_max: usize, count: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(1..=m_max.min(n));
            sample(&mut rng, n, m).iter().fold(0u64, |o, k| o | 1u64 << (n - 1 - k))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormDiagnostics {
    /// 1 − min over probes of the fidelity
    pub epsilon: f64,
    /// spectral norm of U_exact − U_approx
    pub epsilon_norm: f64,
    /// largest phase when U_exact† U_approx is diagonal, else NaN
    pub phi_max: f64,
}

/// Compare two propagators on probe states. When the error is a diagonal phase,
/// every probe must satisfy 1 − F ≤ 2φ²(1 − Σ|a_n|⁴) + 1e-8.
pub fn infidelity_norm_diagnostics(u_exact: &Mat<C64>, u_approx: &Mat<C64>, probes: &[Vec<C64>]) -> Result<NormDiagnostics> {
    let n = u_exact.nrows();
    if u_approx.nrows() != n || u_approx.ncols() != n || u_exact.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u_approx.nrows() });
    }
    let apply = |u: &Mat<C64>, x: &[C64]| -> Vec<C64> { (0..n).map(|i| (0..n).map(|k| u[(i, k)] * x[k]).sum()).collect() };
    let w = u_exact.adjoint() * u_approx;
    let off = (0..n).flat_map(|i| (0..n).map(move |k| (i, k))).filter(|(i, k)| i != k).map(|(i, k)| w[(i, k)].norm()).fold(0.0, f64::max);
    let phi_max = if off < 1e-12 { (0..n).map(|i| w[(i, i)].arg().abs()).fold(0.0, f64::max) } else { f64::NAN };
    let mut epsilon: f64 = 0.0;
    for p in probes {
        let nrm: f64 = p.iter().map(|x| x.norm_sqr()).sum();
        let (a, b) = (apply(u_exact, p), apply(u_approx, p));
        let f = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr() / (nrm * nrm);
        let inf = (1.0 - f).max(0.0);
        epsilon = epsilon.max(inf);
        if phi_max.is_finite() {
            // amplitudes in the basis where the error is diagonal
            let ea = apply(&u_exact.adjoint().to_owned(), &a);
            let ipr: f64 = ea.iter().map(|x| (x.norm_sqr() / nrm).powi(2)).sum();
            let bound = 2.0 * phi_max * phi_max * (1.0 - ipr) + 1e-8;
            if inf > bound {
                return Err(Error::BoundViolated(format!("infidelity {inf:e} above {bound:e}")));
            }
        }
    }
    let diff = Mat::from_fn(n, n, |i, k| u_exact[(i, k)] - u_approx[(i, k)]);
    Ok(NormDiagnostics { epsilon, epsilon_norm: spectral_norm(&diff)?, phi_max })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub wall_times: Vec<f64>,
    pub state_fidelity: Vec<f64>,
    pub subspace_fidelity: Vec<f64>,
}

impl FidelityTrace {
    pub fn push(&mut self, t: f64, alpha: f64, state: f64, subspace: f64) {
        self.times.push(t);
        self.wall_times.push(alpha * t);
        self.state_fidelity.push(state);
        self.subspace_fidelity.push(subspace);
    }

    pub fn min_state(&self) -> f64 {
        self.state_fidelity.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_subspace(&self) -> f64 {
        self.subspace_fidelity.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// ln C(N, M), the participation-entropy ceiling.
pub fn max_participation_entropy(n: usize, m: usize) -> f64 {
    (binomial(n, m) as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Parity;
    use crate::encoding::{enumerate_m_subspace, parse_qubits, IsingBoundary};
    use proptest::prelude::*;

    fn reg(n: usize) -> BasisTag {
        BasisTag::Register { n_qubits: n }
    }

    #[test]
    fn fidelity_examples() {
        let l = Layout::open(3, Parity::Odd);
        // occupation order is numeric, so "100" is the last of the three states
        let exact = QuantumState::basis_state(2, BasisTag::Occupation { sites: 3, particles: 1 }).unwrap();
        let dw = QuantumState::basis_state(parse_qubits("11").unwrap(), reg(2)).unwrap();
        assert_eq!(state_fidelity(&exact, &dw, &l).unwrap(), 1.0);
        let other = QuantumState::basis_state(parse_qubits("01").unwrap(), reg(2)).unwrap();
        assert_eq!(state_fidelity(&exact, &other, &l).unwrap(), 0.0);
        let mixed = QuantumState::mixed(dw.to_density(), reg(2)).unwrap();
        assert_eq!(state_fidelity(&exact, &mixed, &l).unwrap(), 1.0);
        assert!(state_fidelity(&exact, &QuantumState::basis_state(0, reg(3)).unwrap(), &l).is_err());
    }

    #[test]
    fn subspace_examples() {
        let sub1 = enumerate_m_subspace(3, 1, Parity::Odd, IsingBoundary::Open).unwrap();
        let sub3 = enumerate_m_subspace(3, 3, Parity::Odd, IsingBoundary::Open).unwrap();
        let inside = QuantumState::basis_state(parse_qubits("01").unwrap(), reg(2)).unwrap();
        assert_eq!(subspace_fidelity(&inside, &sub1).unwrap(), 1.0);
        let a = 1.0 / 2f64.sqrt();
        let mut v = vec![C64::new(0.0, 0.0); 4];
        v[parse_qubits("00").unwrap()] = C64::new(a, 0.0);
        v[parse_qubits("10").unwrap()] = C64::new(a, 0.0);
        let s = QuantumState::pure(v, reg(2)).unwrap();
        assert!((subspace_fidelity(&s, &sub1).unwrap() - 0.5).abs() < 1e-15);
        assert!((subspace_fidelity(&s, &sub3).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn participation_entropy_examples() {
        let sub = enumerate_m_subspace(5, 2, Parity::Even, IsingBoundary::Open).unwrap();
        let basis = QuantumState::basis_state(sub.basis[3], reg(4)).unwrap();
        assert_eq!(participation_entropy(&basis, &sub).unwrap().value, 0.0);
        let a = 1.0 / (sub.dim() as f64).sqrt();
        let mut v = vec![C64::new(0.0, 0.0); 16];
        for &i in &sub.basis {
            v[i] = C64::new(a, 0.0);
        }
        let s = QuantumState::pure(v, reg(4)).unwrap();
        assert!((participation_entropy(&s, &sub).unwrap().value - 10f64.ln()).abs() < 1e-12);
        let out = QuantumState::basis_state(0, reg(4)).unwrap();
        assert!(matches!(participation_entropy(&out, &sub), Err(Error::LeftSector(_))));
    }

    #[test]
    fn time_average_examples() {
        let c: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64, 3.0)).collect();
        assert!((time_average(&c, 2.0, 7.5).unwrap() - 3.0).abs() < 1e-15);
        let ramp: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64, k as f64 / 10.0)).collect();
        assert!((time_average(&ramp, 0.0, 10.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(time_average(&ramp, 5.0, 5.0).is_err());
        assert!(time_average(&ramp, 5.0, 11.0).is_err());
    }

    #[test]
    fn rate_examples() {
        let s = QuantumState::basis_state(1, reg(2)).unwrap();
        assert_eq!(rate_function(&s, &s, 3).unwrap(), 0.0);
        let o = QuantumState::basis_state(2, reg(2)).unwrap();
        assert_eq!(rate_function(&s, &o, 3).unwrap(), f64::INFINITY);
    }

    #[test]
    fn equally_spaced_ratios() {
        let e: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let g = gap_ratio_statistics(&e).unwrap();
        assert!(g.ratios.iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert!((g.mean - 1.0).abs() < 1e-12);
        assert!(gap_ratio_statistics(&[1.0, 2.0, 3.0]).is_err());
        let g = gap_ratio_statistics(&[0.0, 1.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(g.skipped, 2);
    }

    #[test]
    fn poisson_sampler_ratio() {
        let g = gap_ratio_statistics(&poisson_levels(1_000_000, 3)).unwrap();
        assert!((g.mean - (2.0 * 2f64.ln() - 1.0)).abs() < 0.005, "{}", g.mean);
    }

    #[test]
    fn unfolding_poisson_and_goe() {
        let p = unfold_and_classify(&poisson_levels(3000, 1), 200, 12, 0.125).unwrap();
        assert_eq!(p.classification, LevelClass::Poisson);
        assert!(p.log_likelihood_poisson > p.log_likelihood_wigner_dyson);
        assert!((p.mean_spacing - 1.0).abs() < 0.05);
        assert_eq!(p.counts.iter().sum::<usize>(), p.unfolded_spacings.len());
        let g = unfold_and_classify(&goe_levels(800, 2).unwrap(), 200, 12, 0.125).unwrap();
        assert_eq!(g.discarded, 80);
        assert_eq!(g.classification, LevelClass::WignerDyson);
        assert!((g.mean_spacing - 1.0).abs() < 0.05);
    }

    #[test]
    fn random_states_are_localized_patterns() {
        let s = random_fock_states(11, 6, 200, 9);
        assert!(s.iter().all(|&o| (1..=6).contains(&o.count_ones()) && o < 1 << 11));
        assert_eq!(s, random_fock_states(11, 6, 200, 9));
    }

    #[test]
    fn norm_diagnostics_two_level() {
        let phi: f64 = 0.3;
        let u = Mat::from_fn(2, 2, |i, k| if i == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let v = Mat::from_fn(2, 2, |i, k| match (i, k) {
            (0, 0) => C64::new(1.0, 0.0),
            (1, 1) => C64::from_polar(1.0, -phi),
            _ => C64::new(0.0, 0.0),
        });
        let a = 1.0 / 2f64.sqrt();
        let d = infidelity_norm_diagnostics(&u, &v, &[vec![C64::new(a, 0.0); 2]]).unwrap();
        assert!((d.epsilon - (phi / 2.0).sin().powi(2)).abs() < 1e-14);
        assert!((d.epsilon_norm - 2.0 * (phi / 2.0).sin()).abs() < 1e-12);
        assert!((d.phi_max - phi).abs() < 1e-14);
        let z = infidelity_norm_diagnostics(&u, &u, &[vec![C64::new(a, 0.0); 2]]).unwrap();
        assert_eq!((z.epsilon, z.epsilon_norm, z.phi_max), (0.0, 0.0, 0.0));
    }

    proptest! {
        #[test]
        fn fidelities_in_unit_interval(re in proptest::collection::vec(-1.0f64..1.0, 8), im in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let v: Vec<C64> = re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect();
            let n = crate::linalg::norm(&v);
            prop_assume!(n > 1e-3);
            let s = QuantumState::pure(v.iter().map(|x| x / n).collect(), reg(3)).unwrap();
            let sub = enumerate_m_subspace(4, 1, Parity::Odd, IsingBoundary::Open).unwrap();
            let f = subspace_fidelity(&s, &sub).unwrap();
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(&f));
            let b = QuantumState::basis_state(sub.basis[0], reg(3)).unwrap();
            let g = fidelity(&b, &s).unwrap();
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(&g));
            if let Ok(pe) = participation_entropy(&s, &sub) {
                prop_assert!(pe.value >= 0.0 && pe.value <= max_participation_entropy(4, 1) + 1e-10);
            }
        }
    }
}

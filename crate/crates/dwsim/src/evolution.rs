//! Time propagation: static unitary, periodically driven, and Lindblad.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::chain::{assemble_fermi, DriveSpec, FermiChainSpec};
use crate::encoding::IsingChainSpec;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{dense::eigvalsh, eigh_csr, expm_multiply, vdot, CsrCombination, CsrMatrix};
use crate::operator::{BasisTag, HermitianOperator, QuantumState, StateData};
use crate::C64;

/// Dimension up to which static propagation diagonalizes exactly.
pub const DENSE_LIMIT: usize = 1024;
/// Largest register for density-matrix propagation.
pub const DENSITY_CAP: usize = 1 << 12;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Density-matrix runs are memory bound; 1e-7 keeps positivity well inside -1e-7.
pub const LINDBLAD_TOLERANCE: f64 = 1e-7;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// σ⁻ = |0⟩⟨1| on every qubit
    Relax,
    /// σᶻ on every qubit
    Dephase,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub channels: Vec<(Channel, f64)>,
}

impl NoiseSpec {
    pub fn new(relax: f64, dephase: f64) -> Self {
        NoiseSpec { channels: vec![(Channel::Relax, relax), (Channel::Dephase, dephase)] }
    }

    pub fn validate(&self) -> Result<()> {
        for &(_, g) in &self.channels {
            if !g.is_finite() {
                return Err(Error::NonFinite("noise rate"));
            }
            if g < 0.0 {
                return Err(Error::NegativeRate(g));
            }
        }
        Ok(())
    }

    pub fn rate(&self, c: Channel) -> f64 {
        self.channels.iter().filter(|(k, _)| *k == c).map(|(_, g)| g).sum()
    }

    pub fn is_silent(&self) -> bool {
        self.channels.iter().all(|&(_, g)| g == 0.0)
    }
}

#[derive(Clone, Debug)]
pub enum Generator {
    Static(HermitianOperator),
    /// domain-wall register with a driven transverse field
    Driven(IsingChainSpec),
    /// fermion block with driven hoppings, no encoding
    DrivenFermi { spec: FermiChainSpec, drive: DriveSpec, m: usize },
}

#[derive(Clone, Debug)]
pub struct EvolutionRequest {
    pub generator: Generator,
    pub initial: QuantumState,
    pub times: Vec<f64>,
    pub tolerance: f64,
    pub noise: Option<NoiseSpec>,
    pub exec: Execution,
}

impl EvolutionRequest {
    pub fn new(generator: Generator, initial: QuantumState, times: Vec<f64>) -> Self {
        EvolutionRequest { generator, initial, times, tolerance: DEFAULT_TOLERANCE, noise: None, exec: Execution::default() }
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn run(&self) -> Result<Vec<QuantumState>> {
        match (&self.generator, &self.noise) {
            (Generator::Static(h), Some(n)) => Ok(evolve_lindblad(h, &self.initial, &self.times, n, self.tolerance, self.exec)?.states),
            (Generator::Static(h), None) => evolve_unitary(h, &self.initial, &self.times, self.tolerance),
            (_, Some(_)) => Err(Error::InvalidSpec("noise is supported for static generators only".into())),
            (Generator::Driven(s), None) => Ok(evolve_driven(s, &self.initial, &self.times, self.tolerance, self.exec)?.states),
            (Generator::DrivenFermi { spec, drive, m }, None) => {
                Ok(evolve_driven_fermi(spec, drive, *m, &self.initial, &self.times, self.tolerance)?.states)
            }
        }
    }
}

pub fn validate_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("sample time"));
    }
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidSpec("sample times must be nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSpec("sample times must be strictly increasing".into()));
    }
    Ok(())
}

fn check_basis(a: &BasisTag, b: &BasisTag) -> Result<()> {
    if a != b {
        return Err(Error::BasisMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// exp(−iTH)|ψ⟩ at every sample time.
pub fn evolve_unitary(h: &HermitianOperator, initial: &QuantumState, times: &[f64], tol: f64) -> Result<Vec<QuantumState>> {
    validate_times(times)?;
    check_basis(h.basis(), initial.basis())?;
    let tag = h.basis().clone();
    match initial.data() {
        StateData::Mixed(rho) => {
            if h.dim() > DENSITY_CAP {
                return Err(Error::DensityCap { dim: h.dim(), cap: DENSITY_CAP });
            }
            let e = h.eigh()?;
            let u = &e.vectors;
            let r0 = u.adjoint() * rho * u;
            times
                .iter()
                .map(|&t| {
                    let n = e.dim();
                    let r = Mat::from_fn(n, n, |i, k| r0[(i, k)] * C64::from_polar(1.0, -(e.values[i] - e.values[k]) * t));
                    QuantumState::mixed_unchecked(u * &r * u.adjoint(), tag.clone())
                })
                .collect()
        }
        StateData::Pure(psi) => {
            let out = if h.dim() <= DENSE_LIMIT {
                let e = eigh_csr(h.matrix())?;
                let c = e.to_eigenbasis(psi);
                times
                    .iter()
                    .map(|&t| {
                        let ct: Vec<C64> = c.iter().zip(&e.values).map(|(c, &l)| c * C64::from_polar(1.0, -l * t)).collect();
                        e.from_eigenbasis(&ct)
                    })
                    .collect::<Vec<_>>()
            } else {
                let total = times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
                let mut v = psi.clone();
                let mut now = 0.0;
                let mut out = Vec::with_capacity(times.len());
                for &t in times {
                    v = expm_multiply(h.matrix(), &v, t - now, tol * (t - now) / total)?;
                    now = t;
                    out.push(v.clone());
                }
                out
            };
            out.into_iter()
                .map(|v| {
                    if initial.is_normalized() {
                        QuantumState::pure(v, tag.clone())
                    } else {
                        QuantumState::pure_unnormalized(v, tag.clone())
                    }
                })
                .collect()
        }
    }
}

/// Outcome of a step-controlled driven run.
#[derive(Clone, Debug)]
pub struct DrivenRun {
    pub states: Vec<QuantumState>,
    /// largest step used in the accepted run
    pub step: f64,
    /// 1 − fidelity between the accepted run and the same run at twice the step
    pub step_change: f64,
}

/// Step target for the halving test derived from the propagation tolerance.
fn step_target(tol: f64) -> f64 {
    (10.0 * tol).min(1e-8)
}

const STEP_FLOOR: f64 = 1e-7;

/// Integrate with step h and h/2 until the sampled states agree.
fn step_controlled<F>(times: &[f64], h0: f64, target: f64, mut run: F) -> Result<(Vec<Vec<C64>>, f64, f64)>
where
    F: FnMut(f64) -> Result<Vec<Vec<C64>>>,
{
    let mut h = h0;
    let mut coarse = run(h)?;
    loop {
        let fine = run(h / 2.0)?;
        let change = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| 1.0 - vdot(a, b).norm_sqr() / (vdot(a, a).re * vdot(b, b).re))
            .fold(0.0, f64::max);
        if change < target {
            return Ok((fine, h / 2.0, change));
        }
        h /= 2.0;
        if h / 2.0 < STEP_FLOOR * times.last().copied().unwrap_or(1.0).max(1.0) {
            return Err(Error::StepFloor(h / 2.0));
        }
        coarse = fine;
    }
}

/// Split every gap between consecutive samples into equal steps no longer than h.
fn segments(times: &[f64], h: f64) -> Vec<(f64, f64, usize)> {
    let mut now = 0.0;
    times
        .iter()
        .map(|&t| {
            let len = t - now;
            let n = if len <= 0.0 { 0 } else { (len / h).ceil().max(1.0) as usize };
            let seg = (now, if n == 0 { 0.0 } else { len / n as f64 }, n);
            now = t;
            seg
        })
        .collect()
}

const YOSHIDA_W1: f64 = 1.351_207_191_959_657_6; // 1/(2 − 2^{1/3})
const YOSHIDA_W0: f64 = 1.0 - 2.0 * YOSHIDA_W1;

struct IsingStepper<'a> {
    spec: &'a IsingChainSpec,
    diag: Vec<f64>,
    exec: Execution,
}

impl IsingStepper<'_> {
    fn phases(&self, dt: f64) -> Vec<C64> {
        self.diag.iter().map(|&e| C64::from_polar(1.0, -e * dt)).collect()
    }

    fn apply_phase(&self, psi: &mut [C64], ph: &[C64]) {
        exec::for_each_chunk(self.exec, psi, 4096, |start, s| {
            for (k, x) in s.iter_mut().enumerate() {
                *x *= ph[start + k];
            }
        });
    }

    /// exp(−i h Σ −t_q X_q) = Π_q (cos(t_q h) + i sin(t_q h) X_q)
    fn rotate(&self, psi: &mut [C64], t: &[f64], h: f64) {
        let n = psi.len();
        for (q, &tq) in t.iter().enumerate() {
            if tq == 0.0 {
                continue;
            }
            let bit = 1usize << q;
            let (s, c) = (tq * h).sin_cos();
            let is = C64::new(0.0, s);
            let chunk = (2 * bit).max(4096).min(n);
            exec::for_each_chunk(self.exec, psi, chunk, |_, sl| {
                for i in 0..sl.len() {
                    if i & bit == 0 {
                        let (a, b) = (sl[i], sl[i | bit]);
                        sl[i] = c * a + is * b;
                        sl[i | bit] = c * b + is * a;
                    }
                }
            });
        }
    }

    fn strang(&self, psi: &mut [C64], ph: &[C64], t0: f64, h: f64) {
        self.apply_phase(psi, ph);
        let t = self.spec.transverse_at(t0 + 0.5 * h);
        self.rotate(psi, &t, h);
        self.apply_phase(psi, ph);
    }

    fn run(&self, psi0: &[C64], times: &[f64], h: f64) -> Vec<Vec<C64>> {
        let mut psi = psi0.to_vec();
        let mut out = Vec::with_capacity(times.len());
        for (start, dt, n) in segments(times, h) {
            if n > 0 {
                let p1 = self.phases(0.5 * YOSHIDA_W1 * dt);
                let p0 = self.phases(0.5 * YOSHIDA_W0 * dt);
                for s in 0..n {
                    let t = start + s as f64 * dt;
                    self.strang(&mut psi, &p1, t, YOSHIDA_W1 * dt);
                    self.strang(&mut psi, &p0, t + YOSHIDA_W1 * dt, YOSHIDA_W0 * dt);
                    self.strang(&mut psi, &p1, t + (YOSHIDA_W1 + YOSHIDA_W0) * dt, YOSHIDA_W1 * dt);
                }
            }
            out.push(psi.clone());
        }
        out
    }
}

fn initial_step(times: &[f64], rate: f64) -> f64 {
    let total = times.last().copied().unwrap_or(0.0);
    (0.5 / rate.max(1e-12)).min(total.max(1e-12))
}

/// Time-ordered evolution of the domain-wall register with its transverse
/// field following the drive (fourth-order split-operator steps).
pub fn evolve_driven(spec: &IsingChainSpec, initial: &QuantumState, times: &[f64], tol: f64, exec: Execution) -> Result<DrivenRun> {
    validate_times(times)?;
    if let crate::encoding::Transverse::Driven(d) = &spec.tx {
        d.validate()?;
    }
    let tag = BasisTag::Register { n_qubits: spec.n_qubits };
    check_basis(&tag, initial.basis())?;
    let psi0 = initial.amplitudes().ok_or_else(|| Error::InvalidSpec("driven evolution needs a pure state".into()))?;
    let stepper = IsingStepper { spec, diag: spec.diagonal_energies(), exec };
    let rate = spec.j.abs().max(spec.energy_scale) * 4.0;
    let (states, step, change) = step_controlled(times, initial_step(times, rate), step_target(tol), |h| Ok(stepper.run(psi0, times, h)))?;
    Ok(DrivenRun { states: states.into_iter().map(|v| QuantumState::pure_unnormalized(v, tag.clone())).collect::<Result<_>>()?, step, step_change: change })
}

/// Driven fermion block propagated with the fourth-order commutator-free Magnus scheme.
pub fn evolve_driven_fermi(
    spec: &FermiChainSpec,
    drive: &DriveSpec,
    m: usize,
    initial: &QuantumState,
    times: &[f64],
    tol: f64,
) -> Result<DrivenRun> {
    validate_times(times)?;
    drive.validate()?;
    if drive.bonds.len() != spec.n_bonds() {
        return Err(Error::InvalidSpec("drive bond count differs from chain".into()));
    }
    let base = assemble_fermi(&FermiChainSpec { t: vec![0.0; spec.n_bonds()], ..spec.clone() }, m)?;
    check_basis(base.basis(), initial.basis())?;
    let psi0 = initial.amplitudes().ok_or_else(|| Error::InvalidSpec("driven evolution needs a pure state".into()))?;
    let mut terms = vec![base.matrix().clone()];
    for b in 0..spec.n_bonds() {
        let mut t = vec![0.0; spec.n_bonds()];
        t[b] = 1.0;
        terms.push(assemble_fermi(&FermiChainSpec { t, eps: vec![0.0; spec.n], v: vec![0.0; spec.n_bonds()], ..spec.clone() }, m)?.matrix().clone());
    }
    let comb = CsrCombination::new(&terms);
    // a·H(t1) + b·H(t2) as coefficients over [base, hop_1, ..]
    let coefs = |t1: &[f64], a: f64, t2: &[f64], b: f64| -> Vec<C64> {
        std::iter::once(a + b).chain(t1.iter().zip(t2).map(|(x, y)| a * x + b * y)).map(|c| C64::new(c, 0.0)).collect()
    };
    let (a1, a2) = ((3.0 - 2.0 * 3f64.sqrt()) / 12.0, (3.0 + 2.0 * 3f64.sqrt()) / 12.0);
    let (c1, c2) = (0.5 - 3f64.sqrt() / 6.0, 0.5 + 3f64.sqrt() / 6.0);
    let run = |h: f64| -> Result<Vec<Vec<C64>>> {
        let mut psi = psi0.to_vec();
        let mut out = Vec::with_capacity(times.len());
        let segs = segments(times, h);
        let nsteps: usize = segs.iter().map(|s| s.2).sum::<usize>().max(1);
        let zero = vec![C64::new(0.0, 0.0); comb.n_terms()];
        let (mut first, mut second) = (comb.combine(&zero), comb.combine(&zero));
        for (start, dt, n) in segs {
            for s in 0..n {
                let t = start + s as f64 * dt;
                let (t1, t2) = (drive.hopping_at(t + c1 * dt), drive.hopping_at(t + c2 * dt));
                comb.combine_into(&coefs(&t1, a2, &t2, a1), &mut first);
                comb.combine_into(&coefs(&t1, a1, &t2, a2), &mut second);
                psi = expm_multiply(&first, &psi, dt, tol / nsteps as f64)?;
                psi = expm_multiply(&second, &psi, dt, tol / nsteps as f64)?;
            }
            out.push(psi.clone());
        }
        Ok(out)
    };
    let rate = drive.amplitude_bound().max(spec.energy_scale()) * 4.0;
    let (states, step, change) = step_controlled(times, initial_step(times, rate), step_target(tol), run)?;
    let tag = base.basis().clone();
    Ok(DrivenRun { states: states.into_iter().map(|v| QuantumState::pure_unnormalized(v, tag.clone())).collect::<Result<_>>()?, step, step_change: change })
}

/// Per-sample integrity record of a density-matrix run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleDiagnostics {
    pub time: f64,
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct LindbladRun {
    pub states: Vec<QuantumState>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub steps: usize,
}

const TILE: usize = 16;

/// ρ is kept in the interaction picture of the diagonal part D of H, so the
/// large wall energies only enter through phases.
struct Liouvillian {
    n: usize,
    n_qubits: usize,
    diag: Vec<f64>,
    off: CsrMatrix,
    relax: f64,
    dephase: f64,
    exec: Execution,
}

impl Liouvillian {
    fn phases(&self, t: f64) -> Vec<C64> {
        self.diag.iter().map(|&d| C64::from_polar(1.0, d * t)).collect()
    }

    fn rhs(&self, t: f64, rho: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        let n = self.n;
        let ph = self.phases(t);
        // scratch = (P X P†) ρ
        exec::for_each_chunk(self.exec, scratch, n * TILE, |start, s| {
            let r0 = start / n;
            for (lr, row) in s.chunks_mut(n).enumerate() {
                let i = r0 + lr;
                row.iter_mut().for_each(|x| *x = ZERO);
                for (k, x) in self.off.row(i) {
                    let w = ph[i] * x * ph[k].conj();
                    let src = &rho[k * n..(k + 1) * n];
                    for (o, r) in row.iter_mut().zip(src) {
                        *o += w * r;
                    }
                }
            }
        });
        let scratch: &[C64] = scratch;
        let (g1, g2) = (self.relax, self.dephase);
        // σ⁻ on qubit q picks up ph[i]·conj(ph[i|b]) in the rotating frame
        let ratios: Vec<Vec<C64>> = if g1 != 0.0 {
            (0..self.n_qubits)
                .map(|q| {
                    let b = 1usize << q;
                    (0..n).map(|i| if i & b == 0 { ph[i] * ph[i | b].conj() } else { ZERO }).collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        exec::for_each_chunk(self.exec, out, n * TILE, |start, s| {
            let r0 = start / n;
            let rows = s.len() / n;
            for jt in (0..n).step_by(TILE) {
                let jend = (jt + TILE).min(n);
                for li in 0..rows {
                    let i = r0 + li;
                    let pi = i.count_ones() as f64;
                    let orow = &mut s[li * n..(li + 1) * n];
                    let brow = &scratch[i * n..(i + 1) * n];
                    for j in jt..jend {
                        let a = brow[j] - scratch[j * n + i].conj();
                        let decay = 0.5 * g1 * (pi + j.count_ones() as f64) + 2.0 * g2 * (i ^ j).count_ones() as f64;
                        orow[j] = C64::new(a.im, -a.re) - rho[i * n + j] * decay;
                    }
                }
            }
            for (q, c) in ratios.iter().enumerate() {
                let b = 1usize << q;
                for li in 0..rows {
                    let i = r0 + li;
                    if i & b != 0 {
                        continue;
                    }
                    let w = g1 * c[i];
                    let src = &rho[(i | b) * n..((i | b) + 1) * n];
                    let orow = &mut s[li * n..(li + 1) * n];
                    for base in (0..n).step_by(2 * b) {
                        for j in base..base + b {
                            orow[j] += w * c[j].conj() * src[j | b];
                        }
                    }
                }
            }
        });
    }

    /// Interaction picture back to the lab frame.
    fn to_lab(&self, rho: &[C64], t: f64) -> Mat<C64> {
        let ph = self.phases(t);
        let n = self.n;
        Mat::from_fn(n, n, |i, j| ph[i].conj() * ph[j] * rho[i * n + j])
    }
}

fn symmetrize(rho: &mut [C64], n: usize) {
    for i in 0..n {
        for j in i..n {
            let a = 0.5 * (rho[i * n + j] + rho[j * n + i].conj());
            rho[i * n + j] = a;
            rho[j * n + i] = a.conj();
        }
    }
}

// Dormand–Prince 5(4)
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Lindblad evolution with per-qubit σ⁻ and σᶻ channels, adaptive Dormand–Prince steps.
pub fn evolve_lindblad(
    h: &HermitianOperator,
    initial: &QuantumState,
    times: &[f64],
    noise: &NoiseSpec,
    tol: f64,
    exec: Execution,
) -> Result<LindbladRun> {
    validate_times(times)?;
    noise.validate()?;
    let n_qubits = match h.basis() {
        BasisTag::Register { n_qubits } => *n_qubits,
        other => return Err(Error::BasisMismatch(format!("qubit channels need a register basis, got {other:?}"))),
    };
    check_basis(h.basis(), initial.basis())?;
    let n = h.dim();
    if n > DENSITY_CAP {
        return Err(Error::DensityCap { dim: n, cap: DENSITY_CAP });
    }
    let diag: Vec<f64> = h.matrix().diagonal().iter().map(|d| d.re).collect();
    let off = h.matrix().lincomb(C64::new(1.0, 0.0), &CsrMatrix::from_diagonal(&diag), C64::new(-1.0, 0.0));
    let lv = Liouvillian { n, n_qubits, diag, off, relax: noise.rate(Channel::Relax), dephase: noise.rate(Channel::Dephase), exec };
    let rho0 = initial.to_density();
    let mut y: Vec<C64> = (0..n * n).map(|p| rho0[(p / n, p % n)]).collect();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![ZERO; n * n]).collect();
    let mut stage = vec![ZERO; n * n];
    let mut scratch = vec![ZERO; n * n];
    let mut ynew = vec![ZERO; n * n];
    let mut t = 0.0;
    let scale = h.matrix().norm_bound().max(noise.rate(Channel::Relax) + noise.rate(Channel::Dephase)).max(1e-12);
    let mut step = 0.05 / scale;
    let mut steps = 0usize;
    let mut states = Vec::with_capacity(times.len());
    let mut diagnostics = Vec::with_capacity(times.len());
    lv.rhs(t, &y, &mut scratch, &mut k[0]);
    for &target in times {
        while t < target {
            let h_try = step.min(target - t);
            let last = h_try >= target - t;
            for s in 1..7 {
                let w: Vec<(usize, f64)> =
                    DP_A[s][..s].iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(q, a)| (q, h_try * a)).collect();
                for (p, x) in stage.iter_mut().enumerate() {
                    *x = w.iter().fold(y[p], |acc, &(q, c)| acc + c * k[q][p]);
                }
                if s == 6 {
                    // the fifth-order solution; evaluating f there gives the next step's first stage
                    symmetrize(&mut stage, n);
                    ynew.copy_from_slice(&stage);
                }
                let (_, rest) = k.split_at_mut(s);
                lv.rhs(t + DP_C[s] * h_try, &stage, &mut scratch, &mut rest[0]);
            }
            let coef: Vec<(usize, f64)> =
                DP_E.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(q, c)| (q, h_try * c)).collect();
            let mut err_sq: f64 = 0.0;
            for p in 0..n * n {
                let e = coef.iter().fold(ZERO, |acc, &(q, c)| acc + c * k[q][p]);
                let sc = tol * (1.0 + y[p].norm_sqr().max(ynew[p].norm_sqr()).sqrt());
                err_sq = err_sq.max(e.norm_sqr() / (sc * sc));
            }
            let err = err_sq.sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite("Lindblad step"));
            }
            if err <= 1.0 {
                t = if last { target } else { t + h_try };
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                steps += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last || err > 1.0 {
                step = h_try * factor;
            }
            if step < 1e-14 * target.max(1.0) {
                return Err(Error::StepFloor(step));
            }
        }
        let rho = lv.to_lab(&y, t);
        let trace: f64 = (0..n).map(|i| rho[(i, i)].re).sum();
        let mut herm: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
            }
        }
        let min_eig = eigvalsh(&rho)?.first().copied().unwrap_or(0.0);
        if min_eig < -1e-7 {
            return Err(Error::Positivity { time: t, min_eig });
        }
        diagnostics.push(SampleDiagnostics { time: t, trace, hermiticity: herm, min_eigenvalue: min_eig });
        states.push(QuantumState::mixed_unchecked(rho, h.basis().clone())?);
    }
    Ok(LindbladRun { states, diagnostics, steps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleRule {
    /// α = max{1, |t_n|, |ε_n|, |v_n|}
    Standard,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RescalePolicy {
    Alpha(f64),
    Rule(RescaleRule),
}

impl Default for RescalePolicy {
    fn default() -> Self {
        RescalePolicy::Alpha(1.0)
    }
}

pub trait Rescale: Sized {
    fn model_energy_scale(&self) -> f64;
    fn rescaled_by(&self, alpha: f64) -> Result<Self>;
}

impl Rescale for FermiChainSpec {
    fn model_energy_scale(&self) -> f64 {
        self.energy_scale()
    }

    fn rescaled_by(&self, alpha: f64) -> Result<Self> {
        Ok(self.scaled(1.0 / alpha))
    }
}

impl Rescale for IsingChainSpec {
    fn model_energy_scale(&self) -> f64 {
        self.energy_scale
    }

    fn rescaled_by(&self, alpha: f64) -> Result<Self> {
        self.rescaled(alpha)
    }
}

impl RescalePolicy {
    pub fn alpha_for<S: Rescale>(&self, spec: &S) -> Result<f64> {
        match *self {
            RescalePolicy::Alpha(a) if a.is_finite() && a >= 1.0 => Ok(a),
            RescalePolicy::Alpha(a) => Err(Error::InvalidSpec(format!("rescale factor {a} must be finite and >= 1"))),
            RescalePolicy::Rule(RescaleRule::Standard) => Ok(spec.model_energy_scale().max(1.0)),
        }
    }
}

/// Model couplings divided by α, sample times multiplied by α.
pub fn rescale<S: Rescale>(spec: &S, times: &[f64], policy: RescalePolicy) -> Result<(S, Vec<f64>, f64)> {
    let alpha = policy.alpha_for(spec)?;
    Ok((spec.rescaled_by(alpha)?, times.iter().map(|t| t * alpha).collect(), alpha))
}

/// Fidelity helper used in tests of this module.
#[cfg(test)]
fn overlap_sq(a: &[C64], b: &[C64]) -> f64 {
    vdot(a, b).norm_sqr() / (crate::linalg::norm(a) * crate::linalg::norm(b)).powi(2)
}

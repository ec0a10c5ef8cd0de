//! Pauli strings, sparse Hermitian operators and states on a qubit register.
//!
//! Basis index `i` stores qubit `k` (1-based) in bit `k-1`; σ^z|0⟩ = +|0⟩.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix, Eigh};
use crate::C64;

pub const DEFAULT_REGISTER_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    /// (1-based qubit, axis)
    pub factors: Vec<(usize, Axis)>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: Vec<(usize, Axis)>) -> Self {
        PauliTerm { coefficient, factors }
    }

    pub fn identity(coefficient: f64) -> Self {
        PauliTerm { coefficient, factors: vec![] }
    }

    pub fn z(coefficient: f64, q: usize) -> Self {
        Self::new(coefficient, vec![(q, Axis::Z)])
    }

    pub fn x(coefficient: f64, q: usize) -> Self {
        Self::new(coefficient, vec![(q, Axis::X)])
    }

    pub fn zz(coefficient: f64, a: usize, b: usize) -> Self {
        Self::new(coefficient, vec![(a, Axis::Z), (b, Axis::Z)])
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !self.coefficient.is_finite() {
            return Err(Error::NonFinite("Pauli coefficient"));
        }
        let mut seen = 0u64;
        for &(q, _) in &self.factors {
            if q == 0 || q > n_qubits {
                return Err(Error::IndexOutOfRange { index: q, n_qubits });
            }
            if seen & (1 << (q - 1)) != 0 {
                return Err(Error::DuplicateQubit(q));
            }
            seen |= 1 << (q - 1);
        }
        Ok(())
    }

    fn flip_mask(&self) -> usize {
        self.factors
            .iter()
            .filter(|(_, a)| *a != Axis::Z)
            .fold(0, |m, &(q, _)| m | (1 << (q - 1)))
    }

    /// ⟨j ^ mask| P |j⟩ without the coefficient.
    fn phase_on(&self, j: usize) -> C64 {
        let mut ph = C64::new(1.0, 0.0);
        for &(q, a) in &self.factors {
            let b = (j >> (q - 1)) & 1;
            ph *= match (a, b) {
                (Axis::X, _) => C64::new(1.0, 0.0),
                (Axis::Y, 0) => C64::new(0.0, 1.0),
                (Axis::Y, _) => C64::new(0.0, -1.0),
                (Axis::Z, 0) => C64::new(1.0, 0.0),
                (Axis::Z, _) => C64::new(-1.0, 0.0),
            };
        }
        ph
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTag {
    /// Full 2^n register.
    Register { n_qubits: usize },
    /// Span of the listed register basis states, in list order.
    Subspace { n_qubits: usize, indices: Vec<usize> },
    /// Fixed particle number block in lexicographic occupation order.
    Occupation { sites: usize, particles: usize },
    Generic { dim: usize },
}

impl BasisTag {
    pub fn dim(&self) -> usize {
        match self {
            BasisTag::Register { n_qubits } => 1usize << n_qubits,
            BasisTag::Subspace { indices, .. } => indices.len(),
            BasisTag::Occupation { sites, particles } => crate::chain::binomial(*sites, *particles),
            BasisTag::Generic { dim } => *dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CsrMatrix,
    basis: BasisTag,
}

impl HermitianOperator {
    pub fn new(matrix: CsrMatrix, basis: BasisTag) -> Result<Self> {
        if matrix.dim() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: matrix.dim() });
        }
        let defect = matrix.hermitian_defect();
        if defect > 1e-12 * matrix.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(HermitianOperator { matrix, basis })
    }

    /// Averages with the adjoint first.
    pub fn from_dense_symmetrized(m: &Mat<C64>, basis: BasisTag) -> Result<Self> {
        let n = m.nrows();
        let s = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
        Self::new(CsrMatrix::from_dense(&s), basis)
    }

    pub fn from_dense_real(m: &Mat<f64>, basis: BasisTag) -> Result<Self> {
        let n = m.nrows();
        let s = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
        Self::new(CsrMatrix::from_dense_real(&s), basis)
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn with_basis(mut self, basis: BasisTag) -> Result<Self> {
        if basis.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: basis.dim() });
        }
        self.basis = basis;
        Ok(self)
    }

    pub fn eigh(&self) -> Result<Eigh> {
        linalg::eigh_csr(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh_csr(&self.matrix)
    }

    pub fn shifted(&self, c: f64) -> Self {
        HermitianOperator { matrix: self.matrix.add_diagonal(c), basis: self.basis.clone() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        HermitianOperator { matrix: self.matrix.scale(C64::new(c, 0.0)), basis: self.basis.clone() }
    }

    /// a·self + b·other, same basis required.
    pub fn lincomb(&self, a: f64, other: &HermitianOperator, b: f64) -> Result<Self> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch("lincomb of operators on different bases".into()));
        }
        Ok(HermitianOperator {
            matrix: self.matrix.lincomb(C64::new(a, 0.0), &other.matrix, C64::new(b, 0.0)),
            basis: self.basis.clone(),
        })
    }

    pub fn to_dense(&self) -> Mat<C64> {
        self.matrix.to_dense()
    }
}

#[derive(Clone, Debug)]
pub enum StateData {
    Pure(Vec<C64>),
    Mixed(Mat<C64>),
}

#[derive(Clone, Debug)]
pub struct QuantumState {
    data: StateData,
    basis: BasisTag,
    normalized: bool,
}

impl QuantumState {
    pub fn pure(amps: Vec<C64>, basis: BasisTag) -> Result<Self> {
        let s = Self::pure_unnormalized(amps, basis)?;
        if !s.normalized {
            return Err(Error::InvalidSpec(format!("state norm² {} differs from 1", s.norm_sqr())));
        }
        Ok(s)
    }

    /// Accepts any norm; `is_normalized` reports whether it is unit.
    pub fn pure_unnormalized(amps: Vec<C64>, basis: BasisTag) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: amps.len() });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        Ok(QuantumState { data: StateData::Pure(amps), basis, normalized: (n2 - 1.0).abs() <= 1e-10 })
    }

    pub fn basis_state(index: usize, basis: BasisTag) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, n_qubits: dim });
        }
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[index] = C64::new(1.0, 0.0);
        Self::pure(v, basis)
    }

    /// Validated density matrix.
    pub fn mixed(rho: Mat<C64>, basis: BasisTag) -> Result<Self> {
        let s = Self::mixed_unchecked(rho, basis)?;
        let tr = s.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidSpec(format!("density trace {tr}")));
        }
        let rho = s.density().unwrap();
        let n = rho.nrows();
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                defect = defect.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
            }
        }
        if defect > 1e-10 {
            return Err(Error::NotHermitian(defect));
        }
        let min = linalg::dense::eigvalsh(rho)?.first().copied().unwrap_or(0.0);
        if min < -1e-8 {
            return Err(Error::Positivity { time: 0.0, min_eig: min });
        }
        Ok(s)
    }

    /// Density matrix without positivity/trace validation (integrator output
    /// carries its own diagnostics).
    pub fn mixed_unchecked(rho: Mat<C64>, basis: BasisTag) -> Result<Self> {
        if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: rho.nrows() });
        }
        let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
        Ok(QuantumState { data: StateData::Mixed(rho), basis, normalized: (tr - 1.0).abs() <= 1e-8 })
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> Option<&Mat<C64>> {
        match &self.data {
            StateData::Mixed(m) => Some(m),
            StateData::Pure(_) => None,
        }
    }

    pub fn to_density(&self) -> Mat<C64> {
        match &self.data {
            StateData::Mixed(m) => m.clone(),
            StateData::Pure(v) => Mat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj()),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.iter().map(|a| a.norm_sqr()).sum(),
            StateData::Mixed(_) => self.trace(),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.iter().map(|a| a.norm_sqr()).sum(),
            StateData::Mixed(m) => (0..m.nrows()).map(|i| m[(i, i)].re).sum(),
        }
    }

    /// Probability of each basis state.
    pub fn populations(&self) -> Vec<f64> {
        match &self.data {
            StateData::Pure(v) => v.iter().map(|a| a.norm_sqr()).collect(),
            StateData::Mixed(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(Error::ZeroOperator);
        }
        let data = match &self.data {
            StateData::Pure(v) => StateData::Pure(v.iter().map(|a| a / n.sqrt()).collect()),
            StateData::Mixed(m) => StateData::Mixed(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / n)),
        };
        Ok(QuantumState { data, basis: self.basis.clone(), normalized: true })
    }
}

pub fn assemble_operator(terms: &[PauliTerm], n_qubits: usize) -> Result<HermitianOperator> {
    assemble_operator_with_cap(terms, n_qubits, DEFAULT_REGISTER_CAP)
}

pub fn assemble_operator_with_cap(terms: &[PauliTerm], n_qubits: usize, cap: usize) -> Result<HermitianOperator> {
    if n_qubits > cap {
        return Err(Error::RegisterCap { requested: n_qubits, cap });
    }
    for t in terms {
        t.validate(n_qubits)?;
    }
    let dim = 1usize << n_qubits;
    // group by flip mask so each row needs one entry per distinct mask
    let mut masks: Vec<usize> = terms.iter().map(|t| t.flip_mask()).collect();
    masks.sort_unstable();
    masks.dedup();
    let groups: Vec<Vec<&PauliTerm>> = masks
        .iter()
        .map(|&m| terms.iter().filter(|t| t.flip_mask() == m).collect())
        .collect();
    let mut trips = Vec::with_capacity(dim * masks.len());
    for i in 0..dim {
        for (&mask, group) in masks.iter().zip(&groups) {
            let j = i ^ mask;
            let v: C64 = group.iter().map(|t| t.coefficient * t.phase_on(j)).sum();
            if v != C64::new(0.0, 0.0) {
                trips.push((i, j, v));
            }
        }
    }
    HermitianOperator::new(CsrMatrix::from_triplets(dim, trips), BasisTag::Register { n_qubits })
}

fn check_basis(op: &HermitianOperator, state: &QuantumState) -> Result<()> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: state.dim() });
    }
    if op.basis() != state.basis() {
        return Err(Error::BasisMismatch(format!("{:?} vs {:?}", op.basis(), state.basis())));
    }
    Ok(())
}

pub fn expectation_value(op: &HermitianOperator, state: &QuantumState) -> Result<f64> {
    check_basis(op, state)?;
    let z = match state.data() {
        StateData::Pure(v) => linalg::vdot(v, &op.matrix().apply(v)),
        StateData::Mixed(rho) => op.matrix().iter().map(|(i, j, o)| o * rho[(j, i)]).sum(),
    };
    if z.im.abs() > 1e-10 * z.re.abs().max(1.0) {
        return Err(Error::NotHermitian(z.im.abs()));
    }
    Ok(z.re)
}

pub fn apply_to_state(op: &HermitianOperator, state: &QuantumState) -> Result<QuantumState> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: state.dim() });
    }
    match state.data() {
        StateData::Pure(v) => QuantumState::pure_unnormalized(op.matrix().apply(v), state.basis().clone()),
        StateData::Mixed(rho) => {
            let mut out = Mat::zeros(rho.nrows(), rho.ncols());
            op.matrix().matmat_into(crate::exec::Execution::default(), rho, &mut out);
            QuantumState::mixed_unchecked(out, state.basis().clone())
        }
    }
}

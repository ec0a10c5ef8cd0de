use faer::Mat;

use crate::exec::{self, Execution};
use crate::C64;

/// Rows per work item in the parallel kernels.
const ROW_CHUNK: usize = 512;

/// Compressed sparse row matrix, square, complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        CsrMatrix { n, indptr: vec![0; n + 1], indices: vec![], data: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let trips = d.iter().enumerate().map(|(i, &x)| (i, i, C64::new(x, 0.0))).collect();
        Self::from_triplets(d.len(), trips)
    }

    /// Duplicates are summed; exact zeros are dropped; columns sorted per row.
    pub fn from_triplets(n: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data: Vec<C64> = Vec::with_capacity(trips.len());
        let mut rows = Vec::with_capacity(trips.len());
        for (i, j, v) in trips {
            assert!(i < n && j < n, "triplet ({i},{j}) outside {n}x{n}");
            if let (Some(&li), Some(&lj)) = (rows.last(), indices.last()) {
                if li == i && lj == j {
                    *data.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(i);
            indices.push(j);
            data.push(v);
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(indices.len());
        for ((&i, &j), &v) in rows.iter().zip(&indices).zip(&data) {
            if v != C64::new(0.0, 0.0) {
                indptr[i + 1] += 1;
                keep_idx.push(j);
                keep_val.push(v);
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { n, indptr, indices: keep_idx, data: keep_val }
    }

    pub fn from_dense(m: &Mat<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        let mut trips = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    trips.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, trips)
    }

    pub fn from_dense_real(m: &Mat<f64>) -> Self {
        Self::from_dense(&Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    /// All stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|v| v.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max_ij |A_ij - conj(A_ji)|
    pub fn hermitian_defect(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Gershgorin-type bound on the spectral radius (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// a·self + b·other
    pub fn lincomb(&self, a: C64, other: &CsrMatrix, b: C64) -> Self {
        assert_eq!(self.n, other.n);
        let mut trips: Vec<_> = self.iter().map(|(i, j, v)| (i, j, a * v)).collect();
        trips.extend(other.iter().map(|(i, j, v)| (i, j, b * v)));
        Self::from_triplets(self.n, trips)
    }

    pub fn add_diagonal(&self, c: f64) -> Self {
        self.lincomb(C64::new(1.0, 0.0), &CsrMatrix::identity(self.n), C64::new(c, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.n, self.iter().map(|(i, j, v)| (j, i, v.conj())).collect())
    }

    /// self * other (sparse product).
    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut trips = Vec::new();
        for i in 0..self.n {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    trips.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.n, trips)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    /// Real part as a dense matrix; caller checks `is_real` when it matters.
    pub fn to_dense_real(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v.re;
        }
        m
    }

    /// Submatrix with the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Mat<C64> {
        let mut col_pos = std::collections::HashMap::with_capacity(cols.len());
        for (k, &c) in cols.iter().enumerate() {
            col_pos.insert(c, k);
        }
        let mut m = Mat::zeros(rows.len(), cols.len());
        for (r, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if let Some(&c) = col_pos.get(&j) {
                    m[(r, c)] = v;
                }
            }
        }
        m
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_with(Execution::default(), x, y)
    }

    pub fn matvec_with(&self, exec: Execution, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let run = |start: usize, out: &mut [C64]| {
            for (k, yi) in out.iter_mut().enumerate() {
                let i = start + k;
                let mut acc = C64::new(0.0, 0.0);
                for p in self.indptr[i]..self.indptr[i + 1] {
                    acc += self.data[p] * x[self.indices[p]];
                }
                *yi = acc;
            }
        };
        if self.n < 4 * ROW_CHUNK {
            run(0, y);
        } else {
            exec::for_each_chunk(exec, y, ROW_CHUNK, run);
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// self · B for a dense B stored column-major (n × ncols), result the same layout.
    pub fn matmat_into(&self, exec: Execution, b: &Mat<C64>, out: &mut Mat<C64>) {
        assert_eq!(b.nrows(), self.n);
        let ncols = b.ncols();
        let idx: Vec<usize> = (0..ncols).collect();
        let res = exec::map(exec, &idx, |&c| {
            let x: Vec<C64> = (0..self.n).map(|i| b[(i, c)]).collect();
            let mut y = vec![C64::new(0.0, 0.0); self.n];
            self.matvec_with(Execution::Sequential, &x, &mut y);
            y
        });
        for (c, col) in res.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                out[(i, c)] = *v;
            }
        }
    }
}

/// Linear combinations Σ c_k A_k of a fixed set of matrices, written into one
/// shared sparsity pattern (entries that cancel stay stored as zeros).
#[derive(Clone, Debug)]
pub struct CsrCombination {
    pattern: CsrMatrix,
    /// per term: (slot in pattern.data, value)
    scatter: Vec<Vec<(usize, C64)>>,
}

impl CsrCombination {
    pub fn new(terms: &[CsrMatrix]) -> Self {
        let n = terms.first().map_or(0, |t| t.n);
        assert!(terms.iter().all(|t| t.n == n), "terms differ in dimension");
        let marks = terms.iter().flat_map(|t| t.iter().map(|(i, j, _)| (i, j, C64::new(1.0, 0.0)))).collect();
        let pattern = CsrMatrix::from_triplets(n, marks);
        let scatter = terms
            .iter()
            .map(|t| {
                t.iter()
                    .map(|(i, j, v)| {
                        let r = pattern.indptr[i]..pattern.indptr[i + 1];
                        let k = pattern.indices[r.clone()].binary_search(&j).expect("entry in union pattern");
                        (r.start + k, v)
                    })
                    .collect()
            })
            .collect();
        CsrCombination { pattern, scatter }
    }

    pub fn n_terms(&self) -> usize {
        self.scatter.len()
    }

    /// Overwrite `out` with Σ c_k A_k; `out` must come from [`Self::combine`].
    pub fn combine_into(&self, coefs: &[C64], out: &mut CsrMatrix) {
        assert_eq!(coefs.len(), self.scatter.len());
        assert_eq!(out.indices.len(), self.pattern.indices.len());
        out.data.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (&c, term) in coefs.iter().zip(&self.scatter) {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for &(k, v) in term {
                out.data[k] += c * v;
            }
        }
    }

    pub fn combine(&self, coefs: &[C64]) -> CsrMatrix {
        let mut out = self.pattern.clone();
        self.combine_into(coefs, &mut out);
        out
    }
}

use faer::{Mat, Side};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::C64;

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending, vectors as columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Coefficients U^† x.
    pub fn to_eigenbasis(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|k| (0..n).map(|i| self.vectors[(i, k)].conj() * x[i]).sum())
            .collect()
    }

    /// U c.
    pub fn from_eigenbasis(&self, c: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (k, &ck) in c.iter().enumerate() {
            if ck == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.vectors[(i, k)] * ck;
            }
        }
        out
    }

    /// exp(-i t H) x
    pub fn propagate(&self, x: &[C64], t: f64) -> Vec<C64> {
        let c: Vec<C64> = self
            .to_eigenbasis(x)
            .into_iter()
            .zip(&self.values)
            .map(|(c, &l)| c * C64::from_polar(1.0, -l * t))
            .collect();
        self.from_eigenbasis(&c)
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.vectors[(i, k)]).collect()
    }
}

pub fn eigh_real(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, e.U().to_owned()))
}

pub fn eigvalsh_real(m: &Mat<f64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

pub fn eigh(m: &Mat<C64>) -> Result<Eigh> {
    let n = m.nrows();
    let real = (0..n).all(|j| (0..n).all(|i| m[(i, j)].im == 0.0));
    if real {
        let (values, u) = eigh_real(&Mat::from_fn(n, n, |i, j| m[(i, j)].re))?;
        return Ok(Eigh { values, vectors: Mat::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0)) });
    }
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = e.S().column_vector();
    Ok(Eigh { values: (0..n).map(|i| s[i].re).collect(), vectors: e.U().to_owned() })
}

pub fn eigvalsh(m: &Mat<C64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

pub fn eigh_csr(h: &CsrMatrix) -> Result<Eigh> {
    if h.is_real() {
        let (values, u) = eigh_real(&h.to_dense_real())?;
        let n = h.dim();
        return Ok(Eigh { values, vectors: Mat::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0)) });
    }
    eigh(&h.to_dense())
}

pub fn eigvalsh_csr(h: &CsrMatrix) -> Result<Vec<f64>> {
    if h.is_real() {
        eigvalsh_real(&h.to_dense_real())
    } else {
        eigvalsh(&h.to_dense())
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat<C64>) -> Result<f64> {
    let s = m.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

pub fn scale(alpha: C64, x: &mut [C64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_x_eigenpairs() {
        let m = Mat::from_fn(2, 2, |i, j| if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let e = eigh(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let t = 0.7;
        let out = e.propagate(&psi, t);
        assert!((out[0] - C64::new(t.cos(), 0.0)).norm() < 1e-14);
        assert!((out[1] - C64::new(0.0, -t.sin())).norm() < 1e-14);
    }

    #[test]
    fn complex_path_pauli_y() {
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        });
        let e = eigh(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        let v = e.column(0);
        let hv = [m[(0, 1)] * v[1], m[(1, 0)] * v[0]];
        assert!((hv[0] + v[0]).norm() < 1e-14 && (hv[1] + v[1]).norm() < 1e-14);
    }
}

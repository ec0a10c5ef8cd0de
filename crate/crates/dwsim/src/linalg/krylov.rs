//! Lanczos-based propagation and extremal eigenpairs for sparse Hermitian matrices.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{axpy, eigh, eigh_real, norm, vdot};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::C64;

const MAX_KRYLOV: usize = 40;

struct LanczosBasis {
    v: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// norm of the residual after the last vector; 0 on breakdown
    tail: f64,
}

/// Grows the basis up to `m` vectors; every few vectors `enough(alpha, beta, tail)`
/// may stop it early.
fn lanczos<F>(h: &CsrMatrix, start: &[C64], m: usize, scale: f64, mut enough: F) -> LanczosBasis
where
    F: FnMut(&[f64], &[f64], f64) -> bool,
{
    let n = h.dim();
    let m = m.min(n);
    let nrm = norm(start);
    let mut v = vec![start.iter().map(|x| x / nrm).collect::<Vec<_>>()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut tail = 0.0;
    for j in 0..m {
        h.matvec(&v[j], &mut w);
        let a = vdot(&v[j], &w).re;
        alpha.push(a);
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for vk in &v {
                let c = vdot(vk, &w);
                axpy(-c, vk, &mut w);
            }
        }
        let b = norm(&w);
        tail = b;
        if b <= 1e-13 * scale.max(1e-300) || j + 1 == m || ((j + 1) % 4 == 0 && enough(&alpha, &beta, b)) {
            break;
        }
        beta.push(b);
        v.push(w.iter().map(|x| x / b).collect());
    }
    if v.len() < m && tail <= 1e-13 * scale.max(1e-300) {
        tail = 0.0;
    }
    LanczosBasis { v, alpha, beta, tail }
}

fn tridiag_eigh(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let k = alpha.len();
    let t = Mat::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    eigh_real(&t)
}

/// U exp(-i t Lam) U^T e1
fn propagated(lam: &[f64], u: &Mat<f64>, t: f64) -> Vec<C64> {
    let k = lam.len();
    (0..k).map(|i| (0..k).map(|q| C64::from_polar(u[(i, q)] * u[(0, q)], -t * lam[q])).sum()).collect()
}

/// exp(-i t H) psi with an adaptive Lanczos propagator.
///
/// `tol` bounds the accumulated a-posteriori error estimate over the whole
/// interval, relative to the norm of `psi`.
pub fn expm_multiply(h: &CsrMatrix, psi: &[C64], t: f64, tol: f64) -> Result<Vec<C64>> {
    let nrm0 = norm(psi);
    if t == 0.0 || nrm0 == 0.0 {
        return Ok(psi.to_vec());
    }
    let sign = t.signum();
    let total = t.abs();
    let hnorm = h.norm_bound().max(1e-300);
    let mut v = psi.to_vec();
    let mut done = 0.0;
    let mut step = (MAX_KRYLOV as f64 / (2.0 * hnorm)).min(total);
    while done < total {
        let vnorm = norm(&v);
        let floor = 1e-14 * total.max(1.0);
        step = step.min(total - done);
        let accept = |tail: f64, c: &[C64], step: f64| tail * c[c.len() - 1].norm() * vnorm <= tol * nrm0 * step / total;
        let basis = lanczos(h, &v, MAX_KRYLOV, hnorm, |alpha, beta, tail| {
            tridiag_eigh(alpha, beta).is_ok_and(|(lam, u)| accept(tail, &propagated(&lam, &u, sign * step), step))
        });
        let (lam, u) = tridiag_eigh(&basis.alpha, &basis.beta)?;
        let coeffs = loop {
            let c = propagated(&lam, &u, sign * step);
            if basis.tail == 0.0 || accept(basis.tail, &c, step) {
                break c;
            }
            step *= 0.5;
            if step < floor {
                return Err(Error::ToleranceUnachievable(tol));
            }
        };
        let mut next = vec![C64::new(0.0, 0.0); v.len()];
        for (ci, vi) in coeffs.iter().zip(&basis.v) {
            axpy(ci * vnorm, vi, &mut next);
        }
        v = next;
        done += step;
        if total - done < 1e-15 * total {
            break;
        }
        step *= 1.5;
    }
    Ok(v)
}

fn columns(buf: &[C64], n: usize, m: usize) -> faer::MatRef<'_, C64> {
    faer::MatRef::from_column_major_slice(&buf[..n * m], n, m)
}

/// Lowest `k` eigenpairs by block Lanczos with full reorthogonalization and
/// thick restarts. Residuals are driven below `tol`.
pub fn lowest_eigenpairs(h: &CsrMatrix, k: usize, tol: f64, seed: u64) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = h.dim();
    if n <= 600 || k * 4 >= n {
        let e = super::dense::eigh_csr(h)?;
        let kk = k.min(n);
        return Ok((e.values[..kk].to_vec(), (0..kk).map(|j| e.column(j)).collect()));
    }
    let block = k + 4;
    let max_basis = (6 * block).clamp(60, 300).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // basis Q and HQ, column-major
    let mut q: Vec<C64> = Vec::with_capacity(n * (max_basis + block));
    let mut hq: Vec<C64> = Vec::with_capacity(n * (max_basis + block));
    let mut m = 0;
    let mut fresh = Mat::<C64>::from_fn(n, block, |_, _| C64::new(rng.random::<f64>() - 0.5, 0.0));
    for _restart in 0..50 {
        loop {
            let scale: Vec<f64> = (0..fresh.ncols()).map(|j| fresh.col(j).norm_l2()).collect();
            let mut w = fresh;
            for _ in 0..2 {
                if m > 0 {
                    let qm = columns(&q, n, m);
                    let c = qm.adjoint() * &w;
                    w -= qm * &c;
                }
            }
            let mut added: Vec<Vec<C64>> = Vec::new();
            for j in 0..w.ncols() {
                let mut x: Vec<C64> = w.col(j).iter().copied().collect();
                for _ in 0..2 {
                    for a in &added {
                        let c = vdot(a, &x);
                        axpy(-c, a, &mut x);
                    }
                }
                let b = norm(&x);
                if b > 1e-8 * scale[j] {
                    x.iter_mut().for_each(|v| *v /= b);
                    added.push(x);
                }
            }
            if added.is_empty() {
                break;
            }
            let mut next = Mat::<C64>::zeros(n, added.len());
            for (j, x) in added.iter().enumerate() {
                let y = h.apply(x);
                for i in 0..n {
                    next[(i, j)] = y[i];
                }
                q.extend_from_slice(x);
                hq.extend_from_slice(&y);
            }
            m += added.len();
            fresh = next;
            if m + block > max_basis {
                break;
            }
        }
        let (qm, hqm) = (columns(&q, n, m), columns(&hq, n, m));
        let t = qm.adjoint() * hqm;
        let t = Mat::from_fn(m, m, |i, j| 0.5 * (t[(i, j)] + t[(j, i)].conj()));
        let e = eigh(&t)?;
        let keep = (k + block).min(m);
        let v = e.vectors.subcols(0, keep);
        let x = qm * v;
        let hx = hqm * v;
        let mut resid = Mat::<C64>::from_fn(n, keep, |i, j| hx[(i, j)] - x[(i, j)] * e.values[j]);
        let worst = (0..k).map(|j| resid.col(j).norm_l2()).fold(0.0, f64::max);
        if worst <= tol || m == n {
            let vecs = (0..k).map(|j| x.col(j).iter().copied().collect()).collect();
            return Ok((e.values[..k].to_vec(), vecs));
        }
        // residual directions seed the next expansion
        resid.truncate(n, block.min(keep));
        fresh = resid;
        // re-orthonormalize and re-apply H, otherwise HQ drifts from H·Q over restarts
        q.clear();
        hq.clear();
        m = 0;
        for j in 0..keep {
            let mut v: Vec<C64> = x.col(j).iter().copied().collect();
            for _ in 0..2 {
                for i in 0..m {
                    let c = vdot(&q[i * n..(i + 1) * n], &v);
                    axpy(-c, &q[i * n..(i + 1) * n], &mut v);
                }
            }
            let b = norm(&v);
            if b > 1e-8 {
                v.iter_mut().for_each(|z| *z /= b);
                hq.extend(h.apply(&v));
                q.extend(v);
                m += 1;
            }
        }
    }
    Err(Error::ToleranceUnachievable(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::eigh_csr;

    fn chain(n: usize) -> CsrMatrix {
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, i, C64::new((i as f64 * 0.37).sin() * 3.0, 0.0)));
            if i + 1 < n {
                trips.push((i, i + 1, C64::new(-1.0, 0.2)));
                trips.push((i + 1, i, C64::new(-1.0, -0.2)));
            }
        }
        CsrMatrix::from_triplets(n, trips)
    }

    #[test]
    fn krylov_matches_dense_propagator() {
        let h = chain(300);
        let mut psi = vec![C64::new(0.0, 0.0); 300];
        psi[150] = C64::new(1.0, 0.0);
        let e = eigh_csr(&h).unwrap();
        for &t in &[0.3, 5.0, 40.0] {
            let a = expm_multiply(&h, &psi, t, 1e-10).unwrap();
            let b = e.propagate(&psi, t);
            let d = norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
            assert!(d < 1e-8, "t={t} diff={d}");
        }
    }

    #[test]
    fn negative_time_inverts() {
        let h = chain(120);
        let psi: Vec<C64> = (0..120).map(|i| C64::new((i as f64).cos(), 0.1)).collect();
        let f = expm_multiply(&h, &psi, 3.0, 1e-11).unwrap();
        let back = expm_multiply(&h, &f, -3.0, 1e-11).unwrap();
        let d = norm(&back.iter().zip(&psi).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(d < 1e-8 * norm(&psi));
    }

    #[test]
    fn block_lanczos_lowest() {
        // a tilt splits the ~50 identical wells of the quasiperiodic potential
        let h = chain(900).lincomb(C64::new(1.0, 0.0), &CsrMatrix::from_diagonal(&(0..900).map(|i| 0.004 * i as f64).collect::<Vec<_>>()), C64::new(1.0, 0.0));
        let (vals, vecs) = lowest_eigenpairs(&h, 6, 1e-8, 1).unwrap();
        let exact = eigh_csr(&h).unwrap();
        for j in 0..6 {
            assert!((vals[j] - exact.values[j]).abs() < 1e-9, "{j}: {} vs {}", vals[j], exact.values[j]);
            let hv = h.apply(&vecs[j]);
            let r = norm(&hv.iter().zip(&vecs[j]).map(|(a, b)| a - vals[j] * b).collect::<Vec<_>>());
            assert!(r < 1e-7);
        }
    }
}

//! Lanczos eigenpairs and Krylov time stepping for real symmetric sparse operators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::CsrMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type C64 = Complex64;

pub fn csr_apply(h: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    for (i, row) in h.row_iter().enumerate() {
        y[i] = row.col_indices().iter().zip(row.values()).map(|(&j, v)| v * x[j]).sum();
    }
}

pub fn csr_apply_complex(h: &CsrMatrix<f64>, x: &[C64], y: &mut [C64]) {
    for (i, row) in h.row_iter().enumerate() {
        let mut s = C64::new(0.0, 0.0);
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            s += x[j] * *v;
        }
        y[i] = s;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    // twice is enough
    for _ in 0..2 {
        for q in against {
            let c = dot(v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub tol: f64,
    pub max_subspace: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            max_subspace: 400,
            seed: 0x5eed,
        }
    }
}

/// Lowest `k` eigenpairs of `h` by Lanczos with full reorthogonalization. Converged
/// vectors are locked one at a time, so degenerate multiplets are resolved.
/// Also returns the largest Ritz value seen, an estimate of the top of the spectrum.
pub fn lowest_eigenpairs(h: &CsrMatrix<f64>, k: usize, opts: &LanczosOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let n = h.nrows();
    if k > n {
        return Err(Error::Parameter(format!("{k} eigenpairs requested from dimension {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut values = Vec::with_capacity(k);
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut top = f64::NEG_INFINITY;
    let mut w = vec![0.0; n];
    while locked.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, &locked);
        let nv = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let mut basis = vec![v];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let limit = opts.max_subspace.min(n - locked.len());
        let found = loop {
            let j = basis.len() - 1;
            csr_apply(h, &basis[j], &mut w);
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            orthogonalize(&mut w, &locked);
            orthogonalize(&mut w, &basis);
            let b = dot(&w, &w).sqrt();
            let m = alpha.len();
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let (lo, _) = eig.eigenvalues.argmin();
            let (_, hi) = eig.eigenvalues.argmax();
            top = top.max(hi);
            let theta = eig.eigenvalues[lo];
            let resid = b * eig.eigenvectors[(m - 1, lo)].abs();
            let scale = theta.abs().max(1.0);
            if resid <= opts.tol * scale || m == limit || b <= 1e-14 * scale {
                if resid > opts.tol.sqrt() * scale {
                    return Err(Error::Numerical(format!(
                        "Lanczos stalled at subspace {m} with residual {resid:e}"
                    )));
                }
                let y = eig.eigenvectors.column(lo);
                let mut x = vec![0.0; n];
                for (q, c) in basis.iter().zip(y.iter()) {
                    x.iter_mut().zip(q).for_each(|(a, b)| *a += c * b);
                }
                orthogonalize(&mut x, &locked);
                let nx = dot(&x, &x).sqrt();
                x.iter_mut().for_each(|a| *a /= nx);
                break (theta, x);
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        };
        values.push(found.0);
        locked.push(found.1);
    }
    // locking can return values slightly out of order inside a multiplet
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = order.iter().map(|&i| values[i]).collect();
    let vecs = order.iter().map(|&i| locked[i].clone()).collect();
    Ok((vals, vecs, top))
}

/// `exp(-i h t) psi` by restarted Krylov steps of dimension `m`, each accepted when the
/// a-posteriori error estimate is below `tol * step / t`.
pub fn expm_apply(h: &CsrMatrix<f64>, psi: &[C64], t: f64, m: usize, tol: f64) -> Result<Vec<C64>> {
    let n = psi.len();
    let mut out = psi.to_vec();
    if t == 0.0 {
        return Ok(out);
    }
    let m = m.min(n).max(1);
    let mut done = 0.0;
    let mut tau = t;
    let mut w = vec![C64::new(0.0, 0.0); n];
    while (t - done).abs() > 1e-15 * t.abs() {
        let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut basis: Vec<Vec<C64>> = vec![out.iter().map(|z| z / norm).collect()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut tail = 0.0;
        for j in 0..m {
            csr_apply_complex(h, &basis[j], &mut w);
            let a: f64 = basis[j].iter().zip(&w).map(|(q, x)| (q.conj() * x).re).sum();
            alpha.push(a);
            for q in &basis {
                let c: C64 = q.iter().zip(&w).map(|(q, x)| q.conj() * x).sum();
                w.iter_mut().zip(q).for_each(|(x, q)| *x -= c * q);
            }
            let b: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            tail = b;
            if j + 1 == m || b < 1e-14 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        let k = alpha.len();
        let tri = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        loop {
            let step = tau.min(t - done);
            let coeffs = DVector::from_fn(k, |r, _| {
                (0..k)
                    .map(|s| {
                        eig.eigenvectors[(r, s)] * eig.eigenvectors[(0, s)] * C64::from_polar(1.0, -eig.eigenvalues[s] * step)
                    })
                    .sum::<C64>()
            });
            let err = norm * tail * coeffs[k - 1].norm();
            if err <= tol * step.abs() / t.abs() || tail < 1e-14 {
                out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for (q, c) in basis.iter().zip(coeffs.iter()) {
                    out.iter_mut().zip(q).for_each(|(o, q)| *o += norm * c * q);
                }
                done += step;
                tau = step * 1.5;
                break;
            }
            tau = step * 0.5;
            if tau.abs() < 1e-12 * t.abs() {
                return Err(Error::Numerical("Krylov step size underflow".into()));
            }
        }
    }
    Ok(out)
}

//! Block Davidson solver for the lowest eigenpairs of a large real symmetric
//! operator given matrix-free, with a diagonal (Jacobi) preconditioner.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::eigh_real_sorted;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DavidsonOptions {
    /// Absolute residual norm required for every wanted pair.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra Ritz vectors carried beyond the wanted count.
    pub buffer: usize,
    /// Subspace size that triggers a thick restart.
    pub max_subspace: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 500,
            buffer: 8,
            max_subspace: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DavidsonResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub max_residual: f64,
    pub iterations: usize,
    pub matvecs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of modified Gram-Schmidt against `basis`; returns the norm left.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let p = dot(q, v);
            axpy(-p, q, v);
        }
    }
    norm(v)
}

/// Lowest `k` eigenpairs of the operator applied by `apply`, whose diagonal is `diag`.
pub fn davidson<F>(apply: F, diag: &[f64], k: usize, opts: &DavidsonOptions) -> Result<DavidsonResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = diag.len();
    assert!(k >= 1 && k <= n, "requested {k} eigenpairs of a dimension-{n} operator");
    let n_track = (k + opts.buffer).min(n);
    let max_sub = if opts.max_subspace > 0 {
        opts.max_subspace.max(2 * n_track)
    } else {
        (3 * n_track).max(n_track + 32)
    }
    .min(n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_sub);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(max_sub);
    let mut matvecs = 0usize;
    for &i in order.iter().take(n_track) {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        let mut av = vec![0.0; n];
        apply(&v, &mut av);
        matvecs += 1;
        basis.push(v);
        images.push(av);
    }
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);

    let mut max_res = f64::INFINITY;
    for iter in 0..opts.max_iter {
        let m = basis.len();
        let mut g = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let x = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
                g[(i, j)] = x;
                g[(j, i)] = x;
            }
        }
        let (theta, y) = eigh_real_sorted(&g);
        let n_ritz = n_track.min(m);

        let ritz_vec = |cols: &[Vec<f64>], idx: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (j, col) in cols.iter().enumerate() {
                axpy(y[(j, idx)], col, &mut out);
            }
            out
        };

        let mut residuals = Vec::with_capacity(n_ritz);
        let mut res_norms = Vec::with_capacity(n_ritz);
        for i in 0..n_ritz {
            let x = ritz_vec(&basis, i);
            let mut r = ritz_vec(&images, i);
            axpy(-theta[i], &x, &mut r);
            res_norms.push(norm(&r));
            residuals.push(r);
        }
        max_res = res_norms[..k].iter().copied().fold(0.0, f64::max);
        if max_res <= opts.tol || m == n {
            let vectors = (0..k).map(|i| ritz_vec(&basis, i)).collect();
            return Ok(DavidsonResult {
                values: theta[..k].to_vec(),
                vectors,
                max_residual: max_res,
                iterations: iter,
                matvecs,
            });
        }

        // Thick restart onto the tracked Ritz vectors.
        let n_new_max = (0..n_ritz).filter(|&i| res_norms[i] > opts.tol).count();
        if m + n_new_max > max_sub {
            let nb: Vec<Vec<f64>> = (0..n_ritz).map(|i| ritz_vec(&basis, i)).collect();
            let ni: Vec<Vec<f64>> = (0..n_ritz).map(|i| ritz_vec(&images, i)).collect();
            basis = nb;
            images = ni;
        }

        let floor = 1e-12 * scale;
        let mut added = 0;
        for i in 0..n_ritz {
            if res_norms[i] <= opts.tol {
                continue;
            }
            let mut t: Vec<f64> = residuals[i]
                .iter()
                .zip(diag)
                .map(|(&r, &d)| {
                    let mut den = theta[i] - d;
                    if den.abs() < floor {
                        den = if den < 0.0 { -floor } else { floor };
                    }
                    r / den
                })
                .collect();
            let t0 = norm(&t);
            if t0 == 0.0 || !t0.is_finite() {
                continue;
            }
            for x in t.iter_mut() {
                *x /= t0;
            }
            let left = orthogonalize(&mut t, &basis);
            if left < 1e-10 {
                continue;
            }
            for x in t.iter_mut() {
                *x /= left;
            }
            let mut at = vec![0.0; n];
            apply(&t, &mut at);
            matvecs += 1;
            basis.push(t);
            images.push(at);
            added += 1;
            if basis.len() >= max_sub {
                break;
            }
        }
        if added == 0 {
            break;
        }
    }
    Err(Error::EigenNoConvergence {
        iterations: opts.max_iter,
        residual: max_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_on_diagonally_dominant_matrix() {
        let n = 300;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = (i as f64) * 0.1 + ((i * 7) % 11) as f64 * 0.01;
            for j in (i + 1)..n {
                let v = 0.01 * (((i * 31 + j * 17) % 13) as f64 - 6.0) / ((j - i) as f64);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        let apply = |v: &[f64], out: &mut [f64]| {
            let r = &a * nalgebra::DVector::from_column_slice(v);
            out.copy_from_slice(r.as_slice());
        };
        let res = davidson(apply, &diag, 6, &DavidsonOptions { tol: 1e-10, ..Default::default() }).unwrap();
        let (vals, _) = eigh_real_sorted(&a);
        for i in 0..6 {
            assert!((res.values[i] - vals[i]).abs() < 1e-12, "{i}: {} vs {}", res.values[i], vals[i]);
        }
    }
}

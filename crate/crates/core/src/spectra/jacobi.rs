//! One-sided (Hestenes) Jacobi SVD.
//!
//! Slower than bidiagonalization but computes small singular values to high
//! relative accuracy and yields both singular vector sets directly. Used
//! wherever vectors are needed and as the second, independent route against
//! [`super::singular_values`].

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(s) Vᵀ` with `s` non-increasing.
///
/// For an `m × n` input with `p = min(m, n)`: `u` is `m × p`, `v` is `n × p`.
/// Columns of `u` paired with a zero singular value are left at zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

pub fn jacobi_svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() >= a.ncols() {
        tall_svd(a)
    } else {
        let t = tall_svd(&a.transpose());
        Svd {
            singular_values: t.singular_values,
            u: t.v,
            v: t.u,
        }
    }
}

/// Singular values only, same algorithm.
pub fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    jacobi_svd(a).singular_values
}

fn tall_svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    // Column-major storage: column j is w[j*m..(j+1)*m].
    let mut w: Vec<f64> = a.as_slice().to_vec();
    let mut v: Vec<f64> = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }
    let tol = f64::EPSILON * (m as f64).sqrt();

    for _ in 0..MAX_SWEEPS {
        let mut norms: Vec<f64> = (0..n).map(|j| dot(col(&w, m, j), col(&w, m, j))).collect();
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let app = norms[p];
                let aqq = norms[q];
                if app == 0.0 || aqq == 0.0 {
                    continue;
                }
                let apq = dot(col(&w, m, p), col(&w, m, q));
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, m, p, q, c, s);
                rotate(&mut v, n, p, q, c, s);
                norms[p] = app - t * apq;
                norms[q] = aqq + t * apq;
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = (0..n).map(|j| dot(col(&w, m, j), col(&w, m, j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal values keep their column order.
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u_out = DMatrix::zeros(m, n);
    let mut v_out = DMatrix::zeros(n, n);
    let mut s_out = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        s_out.push(s);
        if s > 0.0 {
            for i in 0..m {
                u_out[(i, dst)] = w[src * m + i] / s;
            }
        }
        for i in 0..n {
            v_out[(i, dst)] = v[src * n + i];
        }
    }
    Svd {
        singular_values: s_out,
        u: u_out,
        v: v_out,
    }
}

#[inline]
fn col(data: &[f64], rows: usize, j: usize) -> &[f64] {
    &data[j * rows..(j + 1) * rows]
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
fn rotate(data: &mut [f64], rows: usize, p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (lo, hi) = data.split_at_mut(q * rows);
    let cp = &mut lo[p * rows..(p + 1) * rows];
    let cq = &mut hi[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

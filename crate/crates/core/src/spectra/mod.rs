//! Exact spectral computations on a single matrix.

mod jacobi;
mod subspace;

pub use jacobi::{jacobi_singular_values, jacobi_svd, Svd};
pub use subspace::Subspace;

use nalgebra::DMatrix;

use crate::{LabError, Result};

/// `s_min` at or below this multiple of `s_max` counts as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Singular spectrum of a square matrix with the derived scalars.
///
/// `kappa` and `hs_inv_sq` are `+∞` when the matrix is numerically singular.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// `s_1 ≥ … ≥ s_n ≥ 0`.
    pub singular_values: Vec<f64>,
    pub s_min: f64,
    pub s_max: f64,
    pub kappa: f64,
    /// `Σ s_i⁻² = ‖A⁻¹‖²_HS`.
    pub hs_inv_sq: f64,
}

impl SpectralSummary {
    pub fn n(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_singular(&self) -> bool {
        self.kappa.is_infinite()
    }

    /// `s_{n-k+1}`, the k-th smallest singular value (`k` in `1..=n`).
    pub fn kth_smallest(&self, k: usize) -> f64 {
        self.singular_values[self.n() - k]
    }

    /// `n,smin,smax,kappa,hs_inv_sq`
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e}",
            self.n(),
            self.s_min,
            self.s_max,
            self.kappa,
            self.hs_inv_sq
        )
    }

    pub fn from_singular_values(singular_values: Vec<f64>) -> Self {
        let s_max = singular_values.first().copied().unwrap_or(0.0);
        let s_min = singular_values.last().copied().unwrap_or(0.0);
        let (kappa, hs_inv_sq) = if s_min <= RANK_TOL * s_max || s_min == 0.0 {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (
                s_max / s_min,
                singular_values.iter().map(|s| 1.0 / (s * s)).sum(),
            )
        };
        SpectralSummary {
            singular_values,
            s_min,
            s_max,
            kappa,
            hs_inv_sq,
        }
    }
}

/// Singular values in non-increasing order via Householder bidiagonalization
/// and implicit-shift QR. Falls back to Jacobi if QR fails to converge.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let max_iter = 1000 * m.nrows().max(m.ncols()).max(10);
    let mut s: Vec<f64> = match nalgebra::SVD::try_new_unordered(m.clone(), false, false, f64::EPSILON, max_iter) {
        Some(svd) => svd.singular_values.iter().map(|x| x.abs()).collect(),
        None => return jacobi_singular_values(m),
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn require_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(LabError::Dimension(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn spectral_summary(m: &DMatrix<f64>) -> Result<SpectralSummary> {
    require_square(m)?;
    Ok(SpectralSummary::from_singular_values(singular_values(m)))
}

/// Euclidean distance from `x` to the linear span of `basis`.
pub fn distance_to_span(x: &[f64], basis: &[&[f64]]) -> Result<f64> {
    Subspace::spanned_by(x.len(), basis.iter().copied())?.distance(x)
}

/// Entry `i` is `dist(col_i(M), span{col_j(M) : j ≠ i})`.
pub fn leave_one_out_distances(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = require_square(m)?;
    Ok((0..n)
        .map(|i| {
            let others = Subspace::of_columns(m, (0..n).filter(|&j| j != i));
            others
                .distance(m.column(i).as_slice())
                .expect("column length matches")
        })
        .collect())
}

/// Relative gap between the two sides of the negative second moment identity,
/// `Σ dist_i⁻²` (column-to-rest distances) against `Σ s_i(A)⁻²`.
pub fn negative_second_moment_residual(m: &DMatrix<f64>) -> Result<f64> {
    let summary = spectral_summary(m)?;
    if summary.is_singular() {
        return Err(LabError::Precondition(format!(
            "kappa flag is +inf (s_min = {:e}, s_max = {:e}); the identity needs a nonsingular matrix",
            summary.s_min, summary.s_max
        )));
    }
    let lhs: f64 = leave_one_out_distances(m)?.iter().map(|d| d.powi(-2)).sum();
    Ok((lhs - summary.hs_inv_sq).abs() / summary.hs_inv_sq)
}

/// Sum of squared entries.
pub fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

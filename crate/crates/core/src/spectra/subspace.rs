use nalgebra::DMatrix;

use crate::{LabError, Result};

/// A vector is treated as dependent on the current basis when less than this
/// fraction of its norm survives projection.
const DEPENDENCE_TOL: f64 = 1e-12;

/// Orthonormal basis of the span of a list of vectors, built by modified
/// Gram–Schmidt with one full re-orthogonalization pass per vector.
#[derive(Debug, Clone)]
pub struct Subspace {
    dim: usize,
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    /// The zero subspace of `R^dim`.
    pub fn zero(dim: usize) -> Self {
        Subspace { dim, basis: Vec::new() }
    }

    pub fn spanned_by<'a, I>(dim: usize, vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut s = Subspace::zero(dim);
        for v in vectors {
            s.push(v)?;
        }
        Ok(s)
    }

    /// Span of the listed columns of `m`.
    pub fn of_columns(m: &DMatrix<f64>, columns: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Subspace::zero(m.nrows());
        for j in columns {
            let c = m.column(j);
            s.push(c.as_slice()).expect("column length equals row count");
        }
        s
    }

    /// Adds `v` to the spanning set. Returns whether the rank grew.
    pub fn push(&mut self, v: &[f64]) -> Result<bool> {
        self.check_dim(v)?;
        let norm = l2(v);
        if norm == 0.0 {
            return Ok(false);
        }
        let r = self.residual_unchecked(v);
        let rn = l2(&r);
        if rn <= DEPENDENCE_TOL * norm {
            return Ok(false);
        }
        self.basis.push(r.into_iter().map(|x| x / rn).collect());
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Component of `x` orthogonal to the subspace.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.residual_unchecked(x))
    }

    /// Euclidean distance from `x` to the subspace.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        Ok(l2(&self.residual(x)?))
    }

    /// Orthogonal projector onto the orthogonal complement, `I - QQᵀ`.
    pub fn complement_projector(&self) -> DMatrix<f64> {
        let mut p = DMatrix::identity(self.dim, self.dim);
        for q in &self.basis {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    p[(i, j)] -= q[i] * q[j];
                }
            }
        }
        p
    }

    fn residual_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut r = x.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        r
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(LabError::Dimension(format!(
                "vector of length {} in a subspace of R^{}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

//! The bottom singular frame `Z(A, k)` and the deterministic linear-algebra
//! chain that bounds the distances of selected columns to the span of the rest.
//!
//! For a sample `A`, `k` and parameters `γ, c₀`:
//!
//! 1. `Z` is `k × n` with rows `z_i = v_{n-i+1}`, the right singular vectors of
//!    the `k` smallest singular values, so `‖A z_i‖ = s_{n-i+1}`.
//! 2. `B = A Zᵀ`; on the event `s_{n-k+1}(A) ≤ c₀k/√n` every column of `B` is
//!    that small, hence `‖B‖_HS ≤ c₀k^{3/2}/√n`.
//! 3. Restricted invertibility applied to `Z` gives `J`, `|J| = ⌊γ²k⌋`, with
//!    `s_ℓ(Z_J) ≥ (1-γ)√(k/n)`; `M` is the minimum-norm right inverse of
//!    `Z_Jᵀ`, so `‖M‖ = 1/s_ℓ(Z_J)`.
//! 4. With `P` the projector onto `F^⊥`, `F = span{col_i(A) : i ∉ J}`, one has
//!    `PBM = PA_J`, so `‖PBM‖²_HS = Σ_{i∈J} dist²(col_i(A), F)`.
//! 5. On the event, at least `ℓ/2` of those distances are at most
//!    `2c₀√ℓ/((1-γ)γ²)`.

use nalgebra::DMatrix;

use crate::ensembles::{sample_matrix, EntryDistribution};
use crate::exec::{map_trials, Execution};
use crate::rii::{combinations, select_invertible_subset};
use crate::spectra::{jacobi_svd, singular_values, Subspace};
use crate::{LabError, Result};

/// Singular values closer than this (relative to `s_max`) are treated as tied.
pub const TIE_TOL: f64 = 1e-10;
const VERDICT_SLACK: f64 = 1e-9;

pub const DEFAULT_C0: f64 = 0.1;
pub const DEFAULT_GAMMA: f64 = 0.5;

/// Rows `z_1, …, z_k` of `Z(A, k)`.
#[derive(Debug, Clone)]
pub struct BottomFrame {
    pub k: usize,
    /// `k × n`; row `i` is `z_{i+1}`.
    pub rows: DMatrix<f64>,
    /// All `n` singular values of `A`, non-increasing.
    pub source_spectrum: Vec<f64>,
}

/// Measured deviations for the frame invariants.
#[derive(Debug, Clone, Copy)]
pub struct FrameCheck {
    /// `‖Z Zᵀ - I_k‖_max`
    pub orthonormality: f64,
    /// `max_i |‖A z_i‖ - s_{n-i+1}| / (s_{n-i+1} + 1e-5 s_max)`
    pub singular_match: f64,
    /// `|‖Z‖ - 1|`
    pub op_norm: f64,
    /// `|‖Z‖_HS - √k|`
    pub hs_norm: f64,
}

impl FrameCheck {
    pub fn passes(&self) -> bool {
        self.orthonormality <= 1e-10
            && self.singular_match <= 1e-8
            && self.op_norm <= 1e-10
            && self.hs_norm <= 1e-10
    }
}

impl BottomFrame {
    pub fn n(&self) -> usize {
        self.rows.ncols()
    }

    pub fn check(&self, a: &DMatrix<f64>) -> FrameCheck {
        let k = self.k;
        let gram = &self.rows * self.rows.transpose();
        let orthonormality = (gram - DMatrix::<f64>::identity(k, k)).amax();
        let n = self.n();
        let s_max = self.source_spectrum[0];
        let az = a * self.rows.transpose();
        let singular_match = (0..k)
            .map(|i| {
                let s = self.source_spectrum[n - 1 - i];
                // Absolute floor at the roundoff level of ‖A‖.
                (az.column(i).norm() - s).abs() / (s + 1e-5 * s_max)
            })
            .fold(0.0, f64::max);
        let op = singular_values(&self.rows)[0];
        let hs = self.rows.norm();
        FrameCheck {
            orthonormality,
            singular_match,
            op_norm: (op - 1.0).abs(),
            hs_norm: (hs - (k as f64).sqrt()).abs(),
        }
    }
}

/// Builds `Z(A, k)`.
///
/// Tied singular values (within [`TIE_TOL`]·`s_max`) have no canonical
/// singular vectors; for each tied block the basis is rebuilt from the block's
/// projector by pivoted Gram–Schmidt on the standard basis, each vector is
/// signed so its largest-magnitude coordinate is positive, and the block is
/// ordered by the position of that coordinate. This makes `Z` a function of `A`.
pub fn bottom_frame(a: &DMatrix<f64>, k: usize) -> Result<BottomFrame> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(LabError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if k == 0 || k > n {
        return Err(LabError::Parameter(format!("k must lie in 1..={n}, got {k}")));
    }
    let svd = jacobi_svd(a);
    let s = &svd.singular_values;
    let scale = s[0].max(f64::MIN_POSITIVE);

    // Canonical right singular vectors, ordered like `s`, for the bottom part.
    let mut v = svd.v.clone();
    let first_needed = n - k;
    let mut hi = n; // exclusive end of the current block, walking upward
    while hi > first_needed {
        let mut lo = hi - 1;
        while lo > 0 && s[lo - 1] - s[lo] <= TIE_TOL * scale {
            lo -= 1;
        }
        let block = canonical_block_basis(&svd.v.columns(lo, hi - lo).into_owned());
        v.columns_mut(lo, hi - lo).copy_from(&block);
        hi = lo;
    }

    let mut rows = DMatrix::zeros(k, n);
    for i in 0..k {
        rows.row_mut(i).copy_from(&v.column(n - 1 - i).transpose());
    }
    Ok(BottomFrame {
        k,
        rows,
        source_spectrum: s.clone(),
    })
}

fn dominant_coordinate(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    best
}

fn canonical_block_basis(block: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = block.shape();
    let mut vectors: Vec<Vec<f64>> = if d == 1 {
        vec![block.column(0).iter().copied().collect()]
    } else {
        // Columns of the block projector, reduced by pivoted Gram–Schmidt.
        let proj = block * block.transpose();
        let mut cand: Vec<Vec<f64>> = (0..n).map(|j| proj.column(j).iter().copied().collect()).collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
        for _ in 0..d {
            let norms: Vec<f64> = cand.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>()).collect();
            let mut pick = 0;
            for j in 1..n {
                if norms[j] > norms[pick] * (1.0 + 1e-12) {
                    pick = j;
                }
            }
            let nrm = norms[pick].sqrt();
            let q: Vec<f64> = cand[pick].iter().map(|x| x / nrm).collect();
            for c in cand.iter_mut() {
                for _ in 0..2 {
                    let dot: f64 = c.iter().zip(&q).map(|(a, b)| a * b).sum();
                    for (ci, qi) in c.iter_mut().zip(&q) {
                        *ci -= dot * qi;
                    }
                }
            }
            basis.push(q);
        }
        basis
    };
    for vec in vectors.iter_mut() {
        let lead = dominant_coordinate(vec);
        if vec[lead] < 0.0 {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
    }
    vectors.sort_by_key(|vec| dominant_coordinate(vec));
    DMatrix::from_fn(n, d, |i, j| vectors[j][i])
}

/// Everything evaluated along the chain for one sample.
#[derive(Debug, Clone)]
pub struct ProofTrace {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub gamma: f64,
    pub c0: f64,
    pub subset: Vec<usize>,
    /// `‖B‖_HS`
    pub b_hs: f64,
    /// `‖M‖`
    pub m_norm: f64,
    /// `s_ℓ(Z_J)`
    pub s_ell_zj: f64,
    /// `‖PBM‖_HS`
    pub pbm_hs: f64,
    /// `dist(col_i(A), F)` for `i ∈ J`, in the order of `subset`.
    pub distances: Vec<f64>,
    /// How many of `distances` are at most `2c₀√ℓ/((1-γ)γ²)`.
    pub num_small_dist: usize,
    /// `s_{n-k+1}(A) ≤ c₀k/√n`
    pub triggered: bool,
    /// (i) `‖B‖_HS ≤ c₀k^{3/2}/√n` when triggered (vacuously true otherwise).
    /// (ii) `‖M‖ ≤ (1-γ)⁻¹√(n/k)`.
    /// (iii) `‖PBM‖²_HS ≥ Σ_{i∈J} dist²(col_i(A), F)`.
    /// (iv) at least `ℓ/2` small distances when triggered (vacuous otherwise).
    pub verdicts: [bool; 4],
    /// `‖Z_Jᵀ M - I_ℓ‖_max`
    pub m_inverse_err: f64,
    /// `|‖M‖ - 1/s_ℓ(Z_J)| · s_ℓ(Z_J)`
    pub m_norm_err: f64,
    /// `‖P² - P‖_max`
    pub projector_idempotence_err: f64,
    /// `‖P A_{Jᶜ}‖_max`
    pub projector_annihilation_err: f64,
}

impl ProofTrace {
    /// `ℓ/n`, reported because the admissible range of `ℓ` is only known up to constants.
    pub fn ell_ratio(&self) -> f64 {
        self.ell as f64 / self.n as f64
    }

    pub fn unconditional_hold(&self) -> bool {
        self.verdicts[1] && self.verdicts[2]
    }

    /// True unless the event held and some step failed.
    pub fn sound(&self) -> bool {
        !self.triggered || self.verdicts.iter().all(|&v| v)
    }

    pub fn csv_row(&self, seed: u64, trial: u64) -> String {
        let b = |x: bool| if x { "1" } else { "0" };
        format!(
            "{seed},{trial},{},{},{},{},{:e},{:e},{:e},{:e},{},{},{},{},{}",
            self.n,
            self.k,
            self.ell,
            b(self.triggered),
            self.b_hs,
            self.m_norm,
            self.s_ell_zj,
            self.pbm_hs,
            self.num_small_dist,
            b(self.verdicts[0]),
            b(self.verdicts[1]),
            b(self.verdicts[2]),
            b(self.verdicts[3]),
        )
    }
}

pub const TRACE_CSV_HEADER: &str =
    "seed,trial,n,k,ell,triggered,BHS,Mnorm,sellZJ,PBMHS,num_small_dist,v1,v2,v3,v4";

fn leq(x: f64, bound: f64) -> bool {
    x <= bound * (1.0 + VERDICT_SLACK)
}

pub fn trace_chain(a: &DMatrix<f64>, k: usize, gamma: f64, c0: f64) -> Result<ProofTrace> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LabError::Parameter(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(LabError::Parameter(format!("c0 must be positive, got {c0}")));
    }
    let frame = bottom_frame(a, k)?;
    let n = frame.n();
    let kf = k as f64;
    let nf = n as f64;
    let target_ell = crate::rii::required_size(gamma, kf, 1.0);
    if target_ell == 0 {
        return Err(LabError::DegenerateTrace(format!(
            "ell = floor(gamma^2 k) = 0 for gamma = {gamma}, k = {k}"
        )));
    }

    let z = &frame.rows;
    let b = a * z.transpose();
    let b_hs = b.norm();

    let mut padded = DMatrix::zeros(n, n);
    padded.rows_mut(0, k).copy_from(z);
    let cert = select_invertible_subset(&padded, gamma)?;
    if cert.ell != target_ell {
        return Err(LabError::DegenerateTrace(format!(
            "certificate size {} differs from floor(gamma^2 k) = {target_ell}",
            cert.ell
        )));
    }
    let ell = cert.ell;
    let subset = cert.subset.clone();

    // M = pinv(Z_Jᵀ) = U S⁻¹ Vᵀ for Z_J = U S Vᵀ.
    let zj = z.select_columns(&subset);
    let svd = jacobi_svd(&zj);
    let s_ell_zj = *svd.singular_values.last().unwrap();
    let mut us_inv = svd.u.clone();
    for (j, s) in svd.singular_values.iter().enumerate() {
        us_inv.column_mut(j).scale_mut(1.0 / s);
    }
    let m = &us_inv * svd.v.transpose();
    let m_norm = singular_values(&m)[0];
    let m_inverse_err = (zj.transpose() * &m - DMatrix::<f64>::identity(ell, ell)).amax();
    let m_norm_err = (m_norm - 1.0 / s_ell_zj).abs() * s_ell_zj;

    let outside: Vec<usize> = (0..n).filter(|i| !subset.contains(i)).collect();
    let f = Subspace::of_columns(a, outside.iter().copied());
    let p = f.complement_projector();
    let projector_idempotence_err = (&p * &p - &p).amax();
    let projector_annihilation_err = if outside.is_empty() {
        0.0
    } else {
        (&p * a.select_columns(&outside)).amax()
    };

    let pbm = &p * &b * &m;
    let pbm_hs = pbm.norm();
    let distances: Vec<f64> = subset
        .iter()
        .map(|&i| f.distance(a.column(i).as_slice()).expect("column length matches"))
        .collect();
    let dist_sq: f64 = distances.iter().map(|d| d * d).sum();

    let small_threshold = 2.0 * c0 * (ell as f64).sqrt() / ((1.0 - gamma) * gamma * gamma);
    let num_small_dist = distances.iter().filter(|&&d| leq(d, small_threshold)).count();
    let triggered = frame.source_spectrum[n - k] <= c0 * kf / nf.sqrt();

    let v1 = !triggered || leq(b_hs, c0 * kf.powf(1.5) / nf.sqrt());
    let v2 = leq(m_norm, (nf / kf).sqrt() / (1.0 - gamma));
    let pbm_sq = pbm_hs * pbm_hs;
    let v3 = pbm_sq >= dist_sq - VERDICT_SLACK * pbm_sq.max(dist_sq) - 1e-24 * (1.0 + a.norm_squared());
    let v4 = !triggered || 2 * num_small_dist >= ell;

    Ok(ProofTrace {
        n,
        k,
        ell,
        gamma,
        c0,
        subset,
        b_hs,
        m_norm,
        s_ell_zj,
        pbm_hs,
        distances,
        num_small_dist,
        triggered,
        verdicts: [v1, v2, v3, v4],
        m_inverse_err,
        m_norm_err,
        projector_idempotence_err,
        projector_annihilation_err,
    })
}

/// Traces `trials` samples of `dist`; trial `t` uses the stream `(seed, t)`.
#[allow(clippy::too_many_arguments)]
pub fn trace_samples(
    exec: Execution,
    dist: EntryDistribution,
    n: usize,
    k: usize,
    gamma: f64,
    c0: f64,
    trials: u64,
    seed: u64,
) -> Vec<Result<ProofTrace>> {
    map_trials(exec, trials, |t| {
        let a = sample_matrix(dist, n, seed, t);
        trace_chain(&a.entries, k, gamma, c0)
    })
}

/// Largest `n` accepted by [`count_good_subsets`].
pub const COUNT_MAX_N: usize = 30;
/// Largest `⌊k/2⌋` accepted by [`count_good_subsets`].
pub const COUNT_MAX_HALF_K: usize = 4;

/// Number of `J ⊂ [n]`, `|J| = ⌊k/2⌋`, with `s_{⌊k/2⌋}(Z_J) ≥ c₁√(k/n)`.
pub fn count_good_subsets(a: &DMatrix<f64>, k: usize, c1: f64) -> Result<u64> {
    let n = a.nrows();
    let half = k / 2;
    if n > COUNT_MAX_N || half > COUNT_MAX_HALF_K {
        return Err(LabError::SizeGuard(format!(
            "exhaustive count needs n <= {COUNT_MAX_N} and floor(k/2) <= {COUNT_MAX_HALF_K}, got n = {n}, k = {k}"
        )));
    }
    if half == 0 {
        return Err(LabError::SizeGuard(format!("floor(k/2) must be at least 1, got k = {k}")));
    }
    if c1.is_nan() || c1 <= 0.0 {
        return Err(LabError::Parameter(format!("c1 must be positive, got {c1}")));
    }
    let frame = bottom_frame(a, k)?;
    let threshold = c1 * (k as f64 / n as f64).sqrt();
    let subsets = combinations(n, half);
    let hits = crate::exec::count_trials(Execution::default(), subsets.len() as u64, 1, |i| {
        let zj = frame.rows.select_columns(&subsets[i as usize]);
        vec![*jacobi_svd(&zj).singular_values.last().unwrap() >= threshold]
    });
    Ok(hits[0])
}

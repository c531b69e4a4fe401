//! Constructive restricted invertibility.
//!
//! For a matrix `T` with `n` columns and `ε ∈ (0, 1)` there is a column subset
//! `J` with
//!
//! ```text
//! |J| ≥ ⌊ε² ‖T‖²_HS / ‖T‖²⌋   and   s_|J|(T_J) ≥ (1 - ε) ‖T‖_HS / √n.
//! ```
//!
//! [`select_invertible_subset`] finds such a `J` with a lower-barrier potential
//! greedy. With `A = Σ_{i∈J} t_i t_iᵀ` (the `t_i` are columns of `T`) it keeps
//! every nonzero eigenvalue of `A` above a barrier `b` that starts at
//! `(1-ε)‖T‖²_HS/n` and drops by `(1-ε)‖T‖²/(εn)` per added column, ending no
//! lower than `(1-ε)²‖T‖²_HS/n`. The potential is `Tr (A - bI)⁻¹` on the range
//! of `T`. A candidate `t` may be added at the lowered barrier `b'` without
//! raising the potential when
//!
//! ```text
//! -tᵀ(A - b'I)⁻¹t - tᵀ(A - b'I)⁻²t / (Φ_b(A) - Φ_b'(A)) ≥ 1;
//! ```
//!
//! the greedy adds the best-scoring column (lowest index on ties). Whatever the
//! greedy returns is re-checked by an SVD of `T_J`. Small problems that fail the
//! check fall back to exhaustive search; larger ones return
//! [`LabError::NoCertificate`] with the best attempt.

use nalgebra::DMatrix;

use crate::exec::{map_trials, Execution};
use crate::spectra::{jacobi_svd, singular_values, RANK_TOL};
use crate::{LabError, Result};

/// Largest column count handled by [`brute_force_subset_oracle`].
pub const ORACLE_MAX_COLUMNS: usize = 20;
/// Largest column count for the exhaustive fallback inside the selection.
pub const FALLBACK_MAX_COLUMNS: usize = 12;
/// Relative slack on the singular-value bound.
pub const BOUND_SLACK: f64 = 1e-9;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMethod {
    Barrier,
    Exhaustive,
    /// `required_size = 0`: the empty subset satisfies the statement.
    Degenerate,
}

/// A column subset with the bound it witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetCertificate {
    /// Sorted, zero-based column indices.
    pub subset: Vec<usize>,
    pub ell: usize,
    pub eps: f64,
    /// `⌊ε² ‖T‖²_HS / ‖T‖²⌋`
    pub required_size: usize,
    /// `(1 - ε) ‖T‖_HS / √n`
    pub required_bound: f64,
    /// `s_ell(T_J)`; `+∞` for the empty subset.
    pub achieved: f64,
    pub method: SelectionMethod,
}

impl SubsetCertificate {
    pub fn is_degenerate(&self) -> bool {
        self.ell == 0
    }

    /// `eps,ell,required_size,required_bound,achieved,J` with `J` semicolon-separated.
    pub fn csv_line(&self) -> String {
        let j: Vec<String> = self.subset.iter().map(|i| i.to_string()).collect();
        format!(
            "{},{},{},{:e},{:e},{}",
            self.eps,
            self.ell,
            self.required_size,
            self.required_bound,
            self.achieved,
            j.join(";")
        )
    }
}

pub const CSV_HEADER: &str = "eps,ell,required_size,required_bound,achieved,J";

/// `⌊x⌋` with a hair of slack, so that ratios which are integers in exact
/// arithmetic (e.g. `γ² k` for an orthonormal frame) are not rounded down.
fn floor_with_slack(x: f64) -> usize {
    (x + 1e-10 * x.max(1.0)).floor().max(0.0) as usize
}

pub fn required_size(eps: f64, hs_sq: f64, op_sq: f64) -> usize {
    floor_with_slack(eps * eps * hs_sq / op_sq)
}

pub fn required_bound(eps: f64, hs_sq: f64, columns: usize) -> f64 {
    (1.0 - eps) * hs_sq.sqrt() / (columns as f64).sqrt()
}

fn columns(t: &DMatrix<f64>, subset: &[usize]) -> DMatrix<f64> {
    t.select_columns(subset)
}

/// `s_ell(T_J)` by one-sided Jacobi; `+∞` for the empty subset.
pub fn subset_singular_value(t: &DMatrix<f64>, subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return f64::INFINITY;
    }
    *jacobi_svd(&columns(t, subset)).singular_values.last().unwrap()
}

/// Same quantity through bidiagonalization, for independent rechecks.
fn subset_singular_value_bidiag(t: &DMatrix<f64>, subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return f64::INFINITY;
    }
    *singular_values(&columns(t, subset)).last().unwrap()
}

struct Norms {
    hs_sq: f64,
    op_sq: f64,
    rank: usize,
}

fn norms(t: &DMatrix<f64>) -> Result<Norms> {
    if t.ncols() == 0 || t.nrows() == 0 {
        return Err(LabError::Dimension("empty matrix".into()));
    }
    let hs_sq: f64 = t.iter().map(|x| x * x).sum();
    if hs_sq == 0.0 || !hs_sq.is_finite() {
        return Err(LabError::UndefinedRatio(
            "‖T‖_HS²/‖T‖² is undefined for the zero matrix".into(),
        ));
    }
    let s = singular_values(t);
    let rank = s.iter().filter(|&&x| x > RANK_TOL * s[0]).count();
    Ok(Norms {
        hs_sq,
        op_sq: s[0] * s[0],
        rank,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LabError::Parameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Selects and certifies a column subset for `T` and `eps`.
///
/// Any row count is accepted: zero rows do not change column geometry, so a
/// `k × n` matrix behaves exactly like its zero-padded `n × n` version.
pub fn select_invertible_subset(t: &DMatrix<f64>, eps: f64) -> Result<SubsetCertificate> {
    check_eps(eps)?;
    let nm = norms(t)?;
    let n = t.ncols();
    let ell = required_size(eps, nm.hs_sq, nm.op_sq);
    let bound = required_bound(eps, nm.hs_sq, n);
    let cert = |subset: Vec<usize>, achieved: f64, method| SubsetCertificate {
        ell: subset.len(),
        subset,
        eps,
        required_size: ell,
        required_bound: bound,
        achieved,
        method,
    };

    if ell == 0 {
        return Ok(cert(Vec::new(), f64::INFINITY, SelectionMethod::Degenerate));
    }

    let mut best: Option<(Vec<usize>, f64)> = None;
    if let Some(mut subset) = barrier_greedy(t, eps, ell, &nm) {
        subset.sort_unstable();
        let achieved = subset_singular_value(t, &subset);
        if achieved >= bound * (1.0 - BOUND_SLACK) {
            return Ok(cert(subset, achieved, SelectionMethod::Barrier));
        }
        best = Some((subset, achieved));
    }

    if n <= FALLBACK_MAX_COLUMNS {
        let (subset, _) = brute_force_subset_oracle(t, ell)?;
        let achieved = subset_singular_value(t, &subset);
        if achieved >= bound * (1.0 - BOUND_SLACK) {
            return Ok(cert(subset, achieved, SelectionMethod::Exhaustive));
        }
        if best.as_ref().is_none_or(|(_, v)| achieved > *v) {
            best = Some((subset, achieved));
        }
    }

    let (best_subset, best_value) = best.unwrap_or((Vec::new(), 0.0));
    Err(LabError::NoCertificate {
        best_subset,
        best_value,
        required_bound: bound,
    })
}

/// Potential-barrier greedy; returns the chosen columns in selection order, or
/// `None` when the barrier is breached or no column raises the rank.
fn barrier_greedy(t: &DMatrix<f64>, eps: f64, ell: usize, nm: &Norms) -> Option<Vec<usize>> {
    let n = t.ncols();
    let m = t.nrows();
    let b0 = (1.0 - eps) * nm.hs_sq / n as f64;
    let delta = (1.0 - eps) * nm.op_sq / (eps * n as f64);
    let col_sq: Vec<f64> = (0..n).map(|j| t.column(j).norm_squared()).collect();

    let mut chosen: Vec<usize> = Vec::with_capacity(ell);
    let mut in_set = vec![false; n];
    for step in 0..ell {
        let b = b0 - step as f64 * delta;
        let b_next = b - delta;
        if b_next <= 0.0 {
            return None;
        }

        // Nonzero spectrum of A = T_J T_Jᵀ from the thin SVD of T_J.
        let (lambdas, u) = if chosen.is_empty() {
            (Vec::new(), DMatrix::zeros(m, 0))
        } else {
            let svd = jacobi_svd(&columns(t, &chosen));
            let lambdas: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
            (lambdas, svd.u)
        };
        if lambdas.iter().any(|&l| l <= b) {
            return None;
        }

        let zeros_in_range = nm.rank.saturating_sub(chosen.len()) as f64;
        let potential_drop: f64 = lambdas
            .iter()
            .map(|&l| 1.0 / (l - b) - 1.0 / (l - b_next))
            .sum::<f64>()
            + zeros_in_range * (1.0 / b_next - 1.0 / b);

        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !in_set[i]) {
            let col = t.column(i);
            let mut first = 0.0;
            let mut second = 0.0;
            let mut captured = 0.0;
            for (j, &l) in lambdas.iter().enumerate() {
                let c = u.column(j).dot(&col);
                let c2 = c * c;
                captured += c2;
                first += c2 / (l - b_next);
                second += c2 / ((l - b_next) * (l - b_next));
            }
            let residual = (col_sq[i] - captured).max(0.0);
            if residual <= RANK_TOL * col_sq[i].max(f64::MIN_POSITIVE) {
                continue;
            }
            first -= residual / b_next;
            second += residual / (b_next * b_next);
            let score = -first - second / potential_drop;
            match best {
                Some((_, s)) if score <= s + TIE_TOL * s.abs() => {}
                _ => best = Some((i, score)),
            }
        }
        let (pick, _) = best?;
        in_set[pick] = true;
        chosen.push(pick);
    }
    Some(chosen)
}

/// Recomputes every quantity in `cert` from `t` and checks the guarantees.
///
/// `‖T‖` and `s_ell(T_J)` are recomputed through bidiagonalization, a
/// different route from the one used during selection.
pub fn verify_certificate(t: &DMatrix<f64>, cert: &SubsetCertificate) -> Result<bool> {
    let n = t.ncols();
    if let Some(&bad) = cert.subset.iter().find(|&&j| j >= n) {
        return Err(LabError::Dimension(format!(
            "column index {bad} out of range for {n} columns"
        )));
    }
    check_eps(cert.eps)?;
    let nm = norms(t)?;
    let size = required_size(cert.eps, nm.hs_sq, nm.op_sq);
    let bound = required_bound(cert.eps, nm.hs_sq, n);
    let mut sorted = cert.subset.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != cert.subset.len() || cert.ell != cert.subset.len() {
        return Ok(false);
    }
    if cert.required_size != size || !rel_close(cert.required_bound, bound) {
        return Ok(false);
    }
    let achieved = subset_singular_value_bidiag(t, &cert.subset);
    let claimed_ok = if achieved.is_infinite() {
        cert.achieved.is_infinite()
    } else {
        cert.achieved <= achieved * (1.0 + BOUND_SLACK) + f64::MIN_POSITIVE
    };
    Ok(cert.ell >= size && achieved >= bound * (1.0 - BOUND_SLACK) && claimed_ok)
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUND_SLACK * a.abs().max(b.abs())
}

/// Maximizes `s_ell(T_J)` over all `J` with `|J| = ell`.
///
/// Returns the lexicographically smallest maximizer (values within a relative
/// `1e-12` count as ties) and its value.
pub fn brute_force_subset_oracle(t: &DMatrix<f64>, ell: usize) -> Result<(Vec<usize>, f64)> {
    let n = t.ncols();
    if n > ORACLE_MAX_COLUMNS {
        return Err(LabError::SizeGuard(format!(
            "exhaustive search limited to {ORACLE_MAX_COLUMNS} columns, got {n}"
        )));
    }
    if ell == 0 || ell > n {
        return Err(LabError::Parameter(format!("ell must lie in 1..={n}, got {ell}")));
    }
    let subsets = combinations(n, ell);
    let values = map_trials(Execution::default(), subsets.len() as u64, |i| {
        subset_singular_value_bidiag(t, &subsets[i as usize])
    });
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] + TIE_TOL * values[best].abs() {
            best = i;
        }
    }
    Ok((subsets[best].clone(), values[best]))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

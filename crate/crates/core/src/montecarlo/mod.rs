//! Monte Carlo estimation of spectral tail probabilities.
//!
//! Each trial draws one matrix, computes one [`SpectralSummary`], and checks
//! every grid point of every requested statistic against it. Trial `t` always
//! uses the stream `(master_seed, t)` and successes are summed as integers, so
//! estimates are bit-identical under any thread count.

mod distance;
mod fit;
pub mod wilson;

pub use distance::{
    distance_concentration, distance_concentration_with, DistanceSummary, SubspaceMode, DIST_CSV_HEADER, SMALL_BALL_EPS,
};
pub use fit::{fit_points, fit_quadratic_exponent, ExponentFit, FIT_CSV_HEADER};

use std::fmt;
use std::str::FromStr;

use crate::ensembles::{sample_matrix, EntryDistribution};
use crate::exec::{count_trials, Execution};
use crate::spectra::{singular_values, SpectralSummary};
use crate::{LabError, Result};

/// An event over a [`SpectralSummary`], indexed by a grid parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatisticSpec {
    /// `s_min ≥ t/√n`
    SminLd,
    /// `κ ≤ n/t`
    CondSb,
    /// `‖A⁻¹‖_HS ≤ min(n/t, √(n/t))`
    HsinvSb,
    /// `s_{n-k+1} ≤ t·k/√n` with the grid running over `k` at fixed `t`.
    SkOverK { t: f64 },
    /// `s_{n-k+1} ≤ t·k/√n` with the grid running over `t` at fixed `k`.
    SkOverT { k: usize },
    /// `s_max ≤ t·√n`
    Opnorm,
}

impl StatisticSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            StatisticSpec::SminLd => "SMIN_LD",
            StatisticSpec::CondSb => "COND_SB",
            StatisticSpec::HsinvSb => "HSINV_SB",
            StatisticSpec::SkOverK { .. } | StatisticSpec::SkOverT { .. } => "SK_SB",
            StatisticSpec::Opnorm => "OPNORM",
        }
    }

    /// Checks `grid` against the statistic for matrices of order `n`.
    pub fn validate(&self, n: usize, grid: &[f64]) -> Result<()> {
        if grid.is_empty() {
            return Err(LabError::Parameter("grid is empty".into()));
        }
        if let Some(bad) = grid.iter().find(|x| !x.is_finite()) {
            return Err(LabError::Parameter(format!("grid value {bad} is not finite")));
        }
        let positive = |what: &str| match grid.iter().find(|&&x| x <= 0.0) {
            Some(bad) => Err(LabError::Parameter(format!("{what} needs t > 0, got {bad}"))),
            None => Ok(()),
        };
        let nonnegative = |what: &str| match grid.iter().find(|&&x| x < 0.0) {
            Some(bad) => Err(LabError::Parameter(format!("{what} needs t >= 0, got {bad}"))),
            None => Ok(()),
        };
        match *self {
            StatisticSpec::CondSb | StatisticSpec::HsinvSb => positive(self.kind()),
            StatisticSpec::SminLd | StatisticSpec::Opnorm => nonnegative(self.kind()),
            StatisticSpec::SkOverK { t } => {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(LabError::Parameter(format!("SK_SB needs t >= 0, got {t}")));
                }
                match grid.iter().find(|&&k| k.fract() != 0.0 || k < 1.0 || k > n as f64) {
                    Some(bad) => Err(LabError::Parameter(format!(
                        "SK_SB grid over k needs integers in 1..={n}, got {bad}"
                    ))),
                    None => Ok(()),
                }
            }
            StatisticSpec::SkOverT { k } => {
                if k == 0 || k > n {
                    return Err(LabError::Parameter(format!("SK_SB needs k in 1..={n}, got {k}")));
                }
                nonnegative("SK_SB")
            }
        }
    }

    /// Whether the event holds for `s` at grid value `x`.
    pub fn holds(&self, s: &SpectralSummary, x: f64) -> bool {
        let n = s.n() as f64;
        match *self {
            StatisticSpec::SminLd => s.s_min >= x / n.sqrt(),
            StatisticSpec::CondSb => s.kappa <= n / x,
            StatisticSpec::HsinvSb => s.hs_inv_sq.sqrt() <= (n / x).min((n / x).sqrt()),
            StatisticSpec::SkOverK { t } => {
                let k = x as usize;
                s.kth_smallest(k) <= t * x / n.sqrt()
            }
            StatisticSpec::SkOverT { k } => s.kth_smallest(k) <= x * k as f64 / n.sqrt(),
            StatisticSpec::Opnorm => s.s_max <= x * n.sqrt(),
        }
    }
}

impl fmt::Display for StatisticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticSpec::SkOverK { t } => write!(f, "SK_SB(t={t})"),
            StatisticSpec::SkOverT { k } => write!(f, "SK_SB(k={k})"),
            other => f.write_str(other.kind()),
        }
    }
}

/// Where an estimate came from; enough to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub ensemble: EntryDistribution,
    pub n: usize,
    pub master_seed: u64,
    pub statistic: String,
}

impl Provenance {
    pub fn header_line(&self) -> String {
        format!(
            "# provenance ensemble={} n={} seed={} statistic={}",
            self.ensemble, self.n, self.master_seed, self.statistic
        )
    }

    fn parse_header(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# provenance ")?;
        let mut ensemble = None;
        let mut n = None;
        let mut seed = None;
        let mut statistic = None;
        for field in rest.split_whitespace() {
            let (key, value) = field.split_once('=')?;
            match key {
                "ensemble" => ensemble = value.parse().ok(),
                "n" => n = value.parse().ok(),
                "seed" => seed = value.parse().ok(),
                "statistic" => statistic = Some(value.to_string()),
                _ => {}
            }
        }
        Some(Provenance {
            ensemble: ensemble?,
            n: n?,
            master_seed: seed?,
            statistic: statistic?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub grid: Vec<f64>,
    pub trials: u64,
    pub successes: Vec<u64>,
    pub p_hat: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub provenance: Option<Provenance>,
}

pub const TAIL_CSV_HEADER: &str = "param,trials,successes,p_hat,ci_lo,ci_hi";

impl TailEstimate {
    pub fn from_counts(grid: Vec<f64>, trials: u64, successes: Vec<u64>, provenance: Option<Provenance>) -> Self {
        let p_hat = successes.iter().map(|&s| s as f64 / trials as f64).collect();
        let (ci_lo, ci_hi) = successes.iter().map(|&s| wilson::interval(s, trials)).unzip();
        TailEstimate {
            grid,
            trials,
            successes,
            p_hat,
            ci_lo,
            ci_hi,
            provenance,
        }
    }

    /// Column header plus one row per grid point.
    pub fn csv_body(&self) -> String {
        let mut out = String::from(TAIL_CSV_HEADER);
        out.push('\n');
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.grid[i], self.trials, self.successes[i], self.p_hat[i], self.ci_lo[i], self.ci_hi[i]
            ));
        }
        out
    }

    /// Provenance comment (when known) followed by [`csv_body`](Self::csv_body).
    pub fn to_csv(&self) -> String {
        match &self.provenance {
            Some(p) => format!("{}\n{}", p.header_line(), self.csv_body()),
            None => self.csv_body(),
        }
    }

    /// Reads the format written by [`to_csv`](Self::to_csv). Comment lines
    /// other than the provenance line are ignored; intervals are recomputed.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut provenance = None;
        let mut header_seen = false;
        let mut grid = Vec::new();
        let mut successes = Vec::new();
        let mut trials = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                if let Some(p) = Provenance::parse_header(line) {
                    provenance = Some(p);
                }
                continue;
            }
            if !header_seen {
                if line != TAIL_CSV_HEADER {
                    return Err(LabError::Parse(format!(
                        "line {}: expected header \"{TAIL_CSV_HEADER}\"",
                        lineno + 1
                    )));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(LabError::Parse(format!("line {}: expected 6 fields", lineno + 1)));
            }
            let bad = |what: &str| LabError::Parse(format!("line {}: bad {what}", lineno + 1));
            let param: f64 = fields[0].parse().map_err(|_| bad("param"))?;
            let t: u64 = fields[1].parse().map_err(|_| bad("trials"))?;
            let s: u64 = fields[2].parse().map_err(|_| bad("successes"))?;
            if t == 0 || s > t {
                return Err(bad("counts"));
            }
            match trials {
                Some(prev) if prev != t => return Err(bad("trials (must match across rows)")),
                _ => trials = Some(t),
            }
            grid.push(param);
            successes.push(s);
        }
        let trials = trials.ok_or_else(|| LabError::Parse("no data rows".into()))?;
        Ok(TailEstimate::from_counts(grid, trials, successes, provenance))
    }
}

/// Spectral summary of one sampled matrix, via the bidiagonal SVD.
fn sample_summary(dist: EntryDistribution, n: usize, master_seed: u64, trial: u64) -> SpectralSummary {
    let a = sample_matrix(dist, n, master_seed, trial);
    SpectralSummary::from_singular_values(singular_values(&a.entries))
}

/// Estimates several statistics from one shared set of samples.
pub fn estimate_tails_with(
    exec: Execution,
    requests: &[(StatisticSpec, Vec<f64>)],
    dist: EntryDistribution,
    n: usize,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<TailEstimate>> {
    if n == 0 {
        return Err(LabError::Parameter("n must be at least 1".into()));
    }
    if trials == 0 {
        return Err(LabError::Parameter("trials must be at least 1".into()));
    }
    for (spec, grid) in requests {
        spec.validate(n, grid)?;
    }
    let width: usize = requests.iter().map(|(_, g)| g.len()).sum();
    let counts = count_trials(exec, trials, width, |t| {
        let s = sample_summary(dist, n, master_seed, t);
        requests
            .iter()
            .flat_map(|(spec, grid)| grid.iter().map(|&x| spec.holds(&s, x)).collect::<Vec<_>>())
            .collect()
    });
    let mut offset = 0;
    Ok(requests
        .iter()
        .map(|(spec, grid)| {
            let succ = counts[offset..offset + grid.len()].to_vec();
            offset += grid.len();
            let prov = Provenance {
                ensemble: dist,
                n,
                master_seed,
                statistic: spec.to_string(),
            };
            TailEstimate::from_counts(grid.clone(), trials, succ, Some(prov))
        })
        .collect())
}

pub fn estimate_tails(
    requests: &[(StatisticSpec, Vec<f64>)],
    dist: EntryDistribution,
    n: usize,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<TailEstimate>> {
    estimate_tails_with(Execution::default(), requests, dist, n, trials, master_seed)
}

pub fn estimate_tail_with(
    exec: Execution,
    stat: StatisticSpec,
    dist: EntryDistribution,
    n: usize,
    grid: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<TailEstimate> {
    let mut v = estimate_tails_with(exec, &[(stat, grid.to_vec())], dist, n, trials, master_seed)?;
    Ok(v.remove(0))
}

pub fn estimate_tail(
    stat: StatisticSpec,
    dist: EntryDistribution,
    n: usize,
    grid: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<TailEstimate> {
    estimate_tail_with(Execution::default(), stat, dist, n, grid, trials, master_seed)
}

/// Fraction of trials with `s_max ≤ multiple·√n`.
pub fn operator_norm_tail(
    dist: EntryDistribution,
    n: usize,
    trials: u64,
    multiple: f64,
    master_seed: u64,
) -> Result<f64> {
    let est = estimate_tail(StatisticSpec::Opnorm, dist, n, &[multiple], trials, master_seed)?;
    Ok(est.p_hat[0])
}

impl FromStr for StatisticSpec {
    type Err = LabError;

    /// Parses the kind only; SK_SB gets the default sweep over `k` at `t = 0.1`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smin" | "smin_ld" => Ok(StatisticSpec::SminLd),
            "cond" | "cond_sb" => Ok(StatisticSpec::CondSb),
            "hsinv" | "hsinv_sb" => Ok(StatisticSpec::HsinvSb),
            "sk" | "sk_sb" => Ok(StatisticSpec::SkOverK { t: 0.1 }),
            "opnorm" => Ok(StatisticSpec::Opnorm),
            _ => Err(LabError::Parameter(format!(
                "unknown statistic '{s}' (expected smin, cond, hsinv, sk or opnorm)"
            ))),
        }
    }
}

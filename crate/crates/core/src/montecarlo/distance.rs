use std::fmt;
use std::str::FromStr;

use crate::ensembles::{sample_vector, EntryDistribution, SeedTrace};
use crate::exec::{map_trials, Execution};
use crate::spectra::Subspace;
use crate::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceMode {
    /// `F = span(e_1, …, e_{n-ℓ})`
    Fixed,
    /// `F` spanned by `n - ℓ` fresh random vectors each trial.
    Random,
}

impl fmt::Display for SubspaceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubspaceMode::Fixed => "fixed",
            SubspaceMode::Random => "random",
        })
    }
}

impl FromStr for SubspaceMode {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" | "fixed_subspace" => Ok(SubspaceMode::Fixed),
            "random" | "random_subspace" => Ok(SubspaceMode::Random),
            _ => Err(LabError::Parameter(format!("unknown mode '{s}' (expected fixed or random)"))),
        }
    }
}

/// Small-ball levels `ε`; fractions are reported for `dist < ε√ℓ`.
pub const SMALL_BALL_EPS: [f64; 3] = [0.01, 0.1, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSummary {
    pub n: usize,
    pub ell: usize,
    pub mode: SubspaceMode,
    pub mean: f64,
    /// Sample standard deviation (`trials - 1` denominator; 0 for one trial).
    pub stddev: f64,
    /// `(ε, fraction of trials with dist < ε√ℓ)` for each of [`SMALL_BALL_EPS`].
    pub small_ball: Vec<(f64, f64)>,
    /// Per-trial distances in trial order.
    pub distances: Vec<f64>,
}

pub const DIST_CSV_HEADER: &str = "n,ell,mode,trials,mean,stddev,frac_below_0.01sqrt_ell,frac_below_0.1sqrt_ell,frac_below_0.5sqrt_ell";

impl DistanceSummary {
    pub fn trials(&self) -> usize {
        self.distances.len()
    }

    /// Fraction of trials with `|dist - √ℓ| ≥ t`.
    pub fn deviation_fraction(&self, t: f64) -> f64 {
        let center = (self.ell as f64).sqrt();
        let hits = self.distances.iter().filter(|d| (*d - center).abs() >= t).count();
        hits as f64 / self.trials() as f64
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.ell,
            self.mode,
            self.trials(),
            self.mean,
            self.stddev,
            self.small_ball[0].1,
            self.small_ball[1].1,
            self.small_ball[2].1
        )
    }
}

pub fn distance_concentration_with(
    exec: Execution,
    dist: EntryDistribution,
    n: usize,
    ell: usize,
    trials: u64,
    master_seed: u64,
    mode: SubspaceMode,
) -> Result<DistanceSummary> {
    if ell == 0 || ell > n {
        return Err(LabError::Parameter(format!("ell must lie in 1..={n}, got {ell}")));
    }
    if trials == 0 {
        return Err(LabError::Parameter("trials must be at least 1".into()));
    }
    let fixed = (mode == SubspaceMode::Fixed).then(|| {
        let mut f = Subspace::zero(n);
        for i in 0..n - ell {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            f.push(&e).expect("dimension matches");
        }
        f
    });
    let distances = map_trials(exec, trials, |t| {
        let mut rng = SeedTrace {
            master_seed,
            trial_index: t,
        }
        .rng();
        let x = sample_vector(dist, n, &mut rng);
        match &fixed {
            Some(f) => f.distance(&x).expect("dimension matches"),
            None => {
                let mut f = Subspace::zero(n);
                for _ in 0..n - ell {
                    f.push(&sample_vector(dist, n, &mut rng)).expect("dimension matches");
                }
                f.distance(&x).expect("dimension matches")
            }
        }
    });

    let m = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / m;
    let stddev = if distances.len() > 1 {
        (distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let root_ell = (ell as f64).sqrt();
    let small_ball = SMALL_BALL_EPS
        .iter()
        .map(|&eps| {
            let below = distances.iter().filter(|&&d| d < eps * root_ell).count();
            (eps, below as f64 / m)
        })
        .collect();
    Ok(DistanceSummary {
        n,
        ell,
        mode,
        mean,
        stddev,
        small_ball,
        distances,
    })
}

pub fn distance_concentration(
    dist: EntryDistribution,
    n: usize,
    ell: usize,
    trials: u64,
    master_seed: u64,
    mode: SubspaceMode,
) -> Result<DistanceSummary> {
    distance_concentration_with(Execution::default(), dist, n, ell, trials, master_seed, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::{gamma_lr, ln_gamma};

    fn chi_mean(k: f64) -> f64 {
        2f64.sqrt() * (ln_gamma((k + 1.0) / 2.0) - ln_gamma(k / 2.0)).exp()
    }

    #[test]
    fn full_codimension_is_the_norm() {
        let s = distance_concentration(EntryDistribution::Gaussian, 12, 12, 4000, 3, SubspaceMode::Fixed).unwrap();
        // Standard error of the mean is about 0.7/√4000 ≈ 0.011.
        assert!((s.mean - chi_mean(12.0)).abs() < 0.05, "{}", s.mean);
        let s = distance_concentration(EntryDistribution::Rademacher, 7, 7, 10, 3, SubspaceMode::Fixed).unwrap();
        assert!(s.distances.iter().all(|d| (d - 7f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn chi_nine_mean() {
        assert!((chi_mean(9.0) - 2.917_977_822).abs() < 1e-8);
        let s = distance_concentration(EntryDistribution::Gaussian, 100, 9, 10_000, 11, SubspaceMode::Fixed).unwrap();
        assert!((s.mean - 2.918).abs() <= 0.05, "{}", s.mean);
    }

    #[test]
    fn small_ball_chi_five() {
        // P{χ₅ < 0.01√5} = P{χ²₅ < 5e-4}
        let p = gamma_lr(2.5, 5e-4 / 2.0);
        assert!(p < 1e-6, "{p}");
        let s = distance_concentration(EntryDistribution::Gaussian, 30, 5, 5000, 2, SubspaceMode::Fixed).unwrap();
        assert_eq!(s.small_ball[0], (0.01, 0.0));
    }

    #[test]
    fn random_subspace_has_same_law_for_gaussian() {
        let s = distance_concentration(EntryDistribution::Gaussian, 20, 4, 4000, 5, SubspaceMode::Random).unwrap();
        assert!((s.mean - chi_mean(4.0)).abs() < 0.06, "{}", s.mean);
    }

    #[test]
    fn ell_range_and_determinism() {
        for ell in [0, 11] {
            assert!(matches!(
                distance_concentration(EntryDistribution::Uniform, 10, ell, 5, 0, SubspaceMode::Fixed),
                Err(LabError::Parameter(_))
            ));
        }
        let a = distance_concentration_with(Execution::Sequential, EntryDistribution::Uniform, 10, 3, 50, 4, SubspaceMode::Random)
            .unwrap();
        let b = distance_concentration_with(Execution::Parallel, EntryDistribution::Uniform, 10, 3, 50, 4, SubspaceMode::Random)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mode_names() {
        assert_eq!("fixed".parse::<SubspaceMode>().unwrap(), SubspaceMode::Fixed);
        assert_eq!("random_subspace".parse::<SubspaceMode>().unwrap(), SubspaceMode::Random);
        assert!("other".parse::<SubspaceMode>().is_err());
    }
}

//! Seeded sampling of square matrices with i.i.d. centered, unit-variance,
//! subgaussian entries.
//!
//! Every trial owns its own random stream: a ChaCha8 generator seeded from the
//! master seed with the stream number set to the trial index. A trial's matrix
//! therefore depends only on `(master_seed, trial_index)`, never on the order
//! in which trials are executed or on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::LabError;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Law of a single matrix entry. All three laws have mean zero and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryDistribution {
    /// Standard normal.
    Gaussian,
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// Uniform on `[-√3, √3]`.
    Uniform,
}

impl EntryDistribution {
    pub const ALL: [EntryDistribution; 3] = [
        EntryDistribution::Gaussian,
        EntryDistribution::Rademacher,
        EntryDistribution::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntryDistribution::Gaussian => "gaussian",
            EntryDistribution::Rademacher => "rademacher",
            EntryDistribution::Uniform => "uniform",
        }
    }

    /// Smallest `K` with `P{|ξ| ≥ t} ≤ exp(1 - t²/(2K²))` for all `t ≥ 0`.
    pub fn subgaussian_bound(self) -> f64 {
        subgaussian_bound(self)
    }

    /// Draws one entry from the stream.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryDistribution::Gaussian => rng.sample(StandardNormal),
            EntryDistribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDistribution::Uniform => rng.random_range(-SQRT_3..=SQRT_3),
        }
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntryDistribution {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(EntryDistribution::Gaussian),
            "rademacher" => Ok(EntryDistribution::Rademacher),
            "uniform" => Ok(EntryDistribution::Uniform),
            other => Err(LabError::Parameter(format!(
                "unknown ensemble '{other}' (expected gaussian, rademacher or uniform)"
            ))),
        }
    }
}

/// Smallest subgaussian moment `K` of the law.
///
/// * Gaussian: `erfc(t/√2) ≤ e·exp(-t²/2)` for all `t`, and any `K < 1` loses
///   for large `t`, so `K = 1`.
/// * Rademacher: `P{|ξ| ≥ t} = 1` up to `t = 1`, which forces `K² ≥ 1/2`.
/// * Uniform on `[-√3, √3]`: with `u = t/√3` the condition reads
///   `K² ≥ 3u² / (2(1 - ln(1 - u)))`; the right side peaks where
///   `2(1 - u)(1 - ln(1 - u)) = u`, giving `K ≈ 0.61165`.
pub fn subgaussian_bound(dist: EntryDistribution) -> f64 {
    match dist {
        EntryDistribution::Gaussian => 1.0,
        EntryDistribution::Rademacher => std::f64::consts::FRAC_1_SQRT_2,
        EntryDistribution::Uniform => uniform_subgaussian_bound(),
    }
}

fn uniform_subgaussian_bound() -> f64 {
    let stationarity = |u: f64| 2.0 * (1.0 - u) * (1.0 - (-u).ln_1p()) - u;
    // stationarity(0) = 2 > 0 and stationarity(1-) = -1 < 0; the root is unique.
    let (mut lo, mut hi) = (0.0_f64, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if stationarity(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    (1.5 * u * u / (1.0 - (-u).ln_1p())).sqrt()
}

/// Identifies the stream a sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTrace {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedTrace {
    /// The per-trial generator: ChaCha8 keyed by the master seed, stream = trial index.
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trial_index);
        rng
    }
}

/// One sampled `n × n` matrix together with the stream that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    pub n: usize,
    pub entries: DMatrix<f64>,
    pub seed_trace: SeedTrace,
}

impl MatrixSample {
    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            out.extend(self.entries.row(i).iter().copied());
        }
        out
    }
}

/// Samples an `n × n` matrix of i.i.d. draws from `dist`.
///
/// Entries are drawn in row-major order from the stream of
/// `(master_seed, trial_index)`.
pub fn sample_matrix(
    dist: EntryDistribution,
    n: usize,
    master_seed: u64,
    trial_index: u64,
) -> MatrixSample {
    let seed_trace = SeedTrace {
        master_seed,
        trial_index,
    };
    let mut rng = seed_trace.rng();
    let data: Vec<f64> = (0..n * n).map(|_| dist.draw(&mut rng)).collect();
    MatrixSample {
        n,
        entries: DMatrix::from_row_slice(n, n, &data),
        seed_trace,
    }
}

/// Fills a vector of length `n` from the given stream.
pub fn sample_vector<R: Rng + ?Sized>(dist: EntryDistribution, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| dist.draw(rng)).collect()
}

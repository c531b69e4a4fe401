//! Trial scheduling: rayon when the `parallel` feature is enabled, a plain
//! loop otherwise.
//!
//! Every helper returns results in trial order (or reduces them with exact
//! integer arithmetic), so the outcome never depends on the schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Runs on the current rayon pool. Same as `Sequential` without the
    /// `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `f(0), f(1), …, f(trials - 1)`, collected in order.
pub fn map_trials<T, F>(exec: Execution, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..trials).into_par_iter().map(f).collect(),
        _ => (0..trials).map(f).collect(),
    }
}

/// Per-slot sums of the 0/1 indicator vectors `f(trial)`, each of length `width`.
pub fn count_trials<F>(exec: Execution, trials: u64, width: usize, f: F) -> Vec<u64>
where
    F: Fn(u64) -> Vec<bool> + Sync + Send,
{
    let add = |mut acc: Vec<u64>, hits: Vec<bool>| {
        for (a, h) in acc.iter_mut().zip(hits) {
            *a += u64::from(h);
        }
        acc
    };
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..trials)
            .into_par_iter()
            .fold(|| vec![0u64; width], |acc, t| add(acc, f(t)))
            .reduce(
                || vec![0u64; width],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            ),
        _ => (0..trials).fold(vec![0u64; width], |acc, t| add(acc, f(t))),
    }
}

/// Runs `f` on a pool capped at `threads` workers (`None` keeps the global pool).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build() {
            return pool.install(f);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    f()
}

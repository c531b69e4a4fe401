//! Random-matrix spectral laboratory.
//!
//! Samples square matrices with i.i.d. subgaussian entries, computes their
//! singular spectra, and checks the linear-algebra machinery behind small-ball
//! and large-deviation estimates for the smallest singular value:
//!
//! * [`ensembles`]: seeded, order-insensitive matrix sampling.
//! * [`spectra`]: singular values, condition numbers, distances to spans and the
//!   negative second moment identity.
//! * [`rii`]: constructive restricted invertibility with certificates.
//! * [`prooftrace`]: the bottom singular frame `Z(A, k)` and the inequality chain
//!   evaluated on concrete samples.
//! * [`montecarlo`]: tail probabilities, Wilson intervals and exponent fits.
//! * [`cli`]: the batch front-end behind the `spectral-lab` binary.
//!
//! Trials run on rayon when the `parallel` feature is on (default) and
//! sequentially otherwise; results are bit-identical either way.

pub mod cli;
pub mod ensembles;
mod error;
pub mod exec;
pub mod matrix_io;
pub mod montecarlo;
pub mod prooftrace;
pub mod rii;
pub mod spectra;

pub use error::{LabError, Result};

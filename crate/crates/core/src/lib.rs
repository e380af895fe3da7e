//! Classical simulation of vibronic electron transport through
//! single-molecule junctions.
//!
//! The pipeline: molecular vibrational data for two electronic states is
//! turned into squeezing/rotation/displacement gate parameters
//! ([`molparams`]), the resulting Gaussian state yields exact photon-pattern
//! probabilities ([`gaussian`], cross-checked by the brute-force
//! [`fockoracle`]), patterns map to transition energies that are sampled and
//! binned ([`sampler`]), and the binned spectrum drives sequential-tunneling
//! rates, currents, and conductance maps ([`transport`]).

// Validation uses negated comparisons (e.g. `!(x > 0.0)`) so that NaN fails
// the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod error;
pub mod fockoracle;
pub mod gaussian;
pub mod hafnian;
pub(crate) mod linalg;
pub mod molparams;
pub mod sampler;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};

//! Link-level simulation of non-coherent differential PSK over a
//! reflecting-surface-assisted SIMO-OFDM uplink, with a coherent
//! estimate-and-optimize baseline for comparison.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cds;
pub mod channel;
pub mod engine;
pub mod error;
pub mod exec;
pub mod ncds;
pub mod rng;
pub mod surface;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Gradient-free stochastic optimization with q-Gaussian smoothed functionals.
//!
//! * [`rng`]: seeded, stream-splittable generators.
//! * [`qgaussian`]: the multivariate q-Gaussian (density, sampler, moments).
//! * [`smoothing`]: one- and two-simulation gradient terms.
//! * [`optimizer`]: Gq-SF1 / Gq-SF2 two-timescale projected SA.
//! * [`queueing`]: the M/G/1 feedback network benchmark.
//! * [`bench`]: experiment grids, CSV and table output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod optimizer;
pub mod qgaussian;
pub mod queueing;
pub mod rng;
pub mod smoothing;

pub use error::{Error, Result};
pub use optimizer::{
    run_gqsf1, run_gqsf2, BoxConstraint, FnSimulator, RunResult, SaConfig, Simulator, StepSchedule,
};
pub use qgaussian::{MomentSpec, Perturbation, QKernel};
pub use queueing::{make_simulator, Preset, QueueNetwork, QueueNetworkConfig};
pub use rng::RngStream;

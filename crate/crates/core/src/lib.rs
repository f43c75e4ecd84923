//! Bit and power loading for multicarrier links over Rayleigh fading.
//!
//! The allocator trades throughput against transmit power through a single
//! weight `alpha`, solves the relaxed per-subcarrier problem in closed form,
//! rounds to integer loads and enforces a total power budget by bisection on
//! `alpha`. Closed-form ensemble averages, reconstructed comparators, an
//! exhaustive oracle and a KKT checker are provided alongside.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod analytic;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod expint;
pub mod harness;
pub mod kkt;

pub use allocator::{
    allocate, allocate_traced, allocate_unconstrained, continuous_allocation, BerTargets,
    BisectionTrace, ContinuousAllocation, DiscreteAllocation, Loading, LoadingConfig,
};
pub use channel::{generate_rayleigh, ChannelRealization, FadingModel};
pub use error::{LoadingError, Result};

//! Stochastic logistic map `x_{n+1} = λ_{n+1} x_n (1 - x_n)` with i.i.d.
//! uniform growth parameters, studied as a random dynamical system.
//!
//! - [`map`]: deterministic and stochastic steps, reproducible sample paths.
//! - [`analytic`]: fixed points, period-2 orbit, regimes, support intervals
//!   and the comparison functions used for the period-2 regime.
//! - [`measure`]: particle approximation of the Perron-Frobenius operator and
//!   statistics of the resulting empirical measures.
//! - [`experiments`]: bifurcation diagrams, distribution evolution, mean
//!   comparisons, the period-2 verification suite and the flip-flop scan.

// `!(x > 0.0)` style checks are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod map;
pub mod measure;

pub use error::{Error, Result};
pub use map::{ParameterDistribution, SamplePath};
pub use measure::{Ensemble, Histogram};

/// Seed used whenever the caller does not provide one.
pub const DEFAULT_SEED: u64 = 20_200_817;

//! Sensor subset selection and data estimation for a Gaussian sensor field.
//!
//! A fusion center activates a subset of n sensors, reads their values, and
//! estimates the rest by conditional mean. Which subset to activate is a
//! discrete optimization over 2^n configurations; this crate implements the
//! Gibbs-sampling treatment of that problem together with exact enumeration
//! oracles, greedy baselines, a two-timescale scheme that learns the sensor
//! price lambda to hit a target active count, and EM-based estimation when
//! the field mean is unknown.
//!
//! Modules
//! - [`config`], [`model`], [`cost`]: configurations, the covariance model,
//!   and the cost h(B) = mmse(B) + lambda |B|.
//! - [`exact`]: exhaustive optimum, exact Gibbs distribution, transition
//!   matrix, Dobrushin contraction bound.
//! - [`sampler`]: fixed-temperature, annealed, and fixed-cardinality chains.
//! - [`learning`]: joint Gibbs / stochastic-approximation lambda learning.
//! - [`baselines`]: greedy and cardinality-greedy reference selections.
//! - [`em`]: unknown-mean estimation with partial observations.
//! - [`experiment`]: seeded experiment harness with CSV/JSON reports.

pub mod baselines;
pub mod config;
pub mod cost;
pub mod em;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod learning;
pub mod model;
pub mod sampler;

pub use config::Configuration;
pub use cost::{cost, mmse, CostCache, CostParams};
pub use error::{Error, Result};
pub use model::GaussianModel;

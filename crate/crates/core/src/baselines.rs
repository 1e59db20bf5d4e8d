//! Deterministic greedy baselines for the chain-based selectors.
//!
//! `greedy_unconstrained` is a single serial pass over the sensors in
//! index order, keeping an addition only when it strictly lowers the
//! priced cost. `newgreedy_cardinality` is best-first: each round it adds
//! the sensor whose inclusion yields the smallest estimation error, until
//! the requested count is reached. Neither uses randomness.

use rayon::prelude::*;

use crate::config::Configuration;
use crate::cost::{cost, mmse, CostParams};
use crate::error::{Error, Result};
use crate::model::GaussianModel;

/// Outcome of the single-pass priced greedy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyResult {
    pub config: Configuration,
    pub cost: f64,
}

/// Outcome of best-first selection to a fixed cardinality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewGreedyResult {
    pub config: Configuration,
    pub error: f64,
    /// Set when some round had no strictly improving sensor and the
    /// lowest-index candidate was added anyway to reach the requested
    /// count; only exactly-redundant sensors can trigger it.
    pub filled_with_nonimproving: bool,
}

/// Single ascending-index pass; sensor j joins only if that strictly
/// lowers cost (ties leave it out).
pub fn greedy_unconstrained(model: &GaussianModel, lambda: f64) -> Result<GreedyResult> {
    let params = CostParams::new(lambda, 1.0)?;
    let mut current = Configuration::empty(model.n())?;
    let mut current_cost = cost(model, &params, current)?;
    for j in 0..model.n() {
        let candidate = current.with_bit(j, true);
        let candidate_cost = cost(model, &params, candidate)?;
        if candidate_cost < current_cost {
            current = candidate;
            current_cost = candidate_cost;
        }
    }
    Ok(GreedyResult {
        config: current,
        cost: current_cost,
    })
}

/// Best-first addition until exactly `nbar` sensors are active. Each round
/// scores every inactive sensor by the error after adding it and takes the
/// minimum, lowest index on ties.
pub fn newgreedy_cardinality(model: &GaussianModel, nbar: usize) -> Result<NewGreedyResult> {
    if nbar > model.n() {
        return Err(Error::InvalidParameter(format!(
            "nbar {nbar} exceeds sensor count {}",
            model.n()
        )));
    }
    let mut current = Configuration::empty(model.n())?;
    let mut current_error = mmse(model, current)?;
    let mut filled_with_nonimproving = false;
    for _ in 0..nbar {
        let scored: Vec<(usize, f64)> = current
            .inactive_indices()
            .into_par_iter()
            .map(|j| Ok((j, mmse(model, current.with_bit(j, true))?)))
            .collect::<Result<_>>()?;
        // Lowest index wins ties; the scan is in ascending index order.
        let (j, err) = scored
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("nbar <= n leaves a candidate");
        if !(err < current_error) {
            filled_with_nonimproving = true;
        }
        current = current.with_bit(j, true);
        current_error = err;
    }
    Ok(NewGreedyResult {
        config: current,
        error: current_error,
        filled_with_nonimproving,
    })
}

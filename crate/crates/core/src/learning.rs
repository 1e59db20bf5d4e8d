//! Two-timescale learning of the activation price lambda.
//!
//! The chain moves on the fast timescale while lambda follows a projected
//! stochastic-approximation recursion on the slow one:
//!
//! ```text
//! lambda(t+1) = clamp(lambda(t) + a(t) (|B(t-1)| - nbar), low, high)
//! a(t) = step0 / t
//! ```
//!
//! The expected active count under the stationary law is continuous and
//! strictly decreasing in lambda, so when the target is bracketed the
//! recursion settles at the unique root. [`check_feasibility`] verifies the
//! bracket by enumeration and bisects to that root directly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cost::{CostCache, CostParams};
use crate::error::{Error, Result};
use crate::exact::exact_gibbs;
use crate::model::GaussianModel;
use crate::sampler::{gibbs_step, uniform_configuration, ChainState};

/// Bisection width for the feasibility root.
pub const ROOT_TOL: f64 = 1e-6;

/// Targets and stepsizes for a learning run.
#[derive(Clone, Debug, PartialEq)]
pub struct LearningParams {
    /// Expected active-count target; may be fractional.
    pub nbar_target: f64,
    pub beta: f64,
    /// a(t) = step0 / t.
    pub step0: f64,
    pub lambda0: f64,
    pub projection_low: f64,
    pub projection_high: f64,
}

impl LearningParams {
    pub fn new(
        nbar_target: f64,
        beta: f64,
        step0: f64,
        lambda0: f64,
        projection_low: f64,
        projection_high: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("nbar_target", nbar_target),
            ("beta", beta),
            ("step0", step0),
            ("lambda0", lambda0),
            ("projection_low", projection_low),
            ("projection_high", projection_high),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if nbar_target < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nbar_target must be >= 0, got {nbar_target}"
            )));
        }
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        if step0 <= 0.0 {
            return Err(Error::InvalidParameter(format!("step0 must be > 0, got {step0}")));
        }
        if projection_low < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "projection_low must be >= 0, got {projection_low}"
            )));
        }
        if projection_high <= projection_low {
            return Err(Error::InvalidParameter(format!(
                "projection box is empty: [{projection_low}, {projection_high}]"
            )));
        }
        if lambda0 < projection_low || lambda0 > projection_high {
            return Err(Error::InvalidParameter(format!(
                "lambda0 = {lambda0} outside [{projection_low}, {projection_high}]"
            )));
        }
        Ok(Self {
            nbar_target,
            beta,
            step0,
            lambda0,
            projection_low,
            projection_high,
        })
    }

    /// Defaults for a model: beta 5, unit step, box [0, tr(M)] (a price
    /// above the total error budget makes every activation a loss, so the
    /// root cannot sit above it), lambda0 at the box midpoint.
    pub fn for_model(model: &GaussianModel, nbar_target: f64) -> Result<Self> {
        let high = model.trace();
        Self::new(nbar_target, 5.0, 1.0, high / 2.0, 0.0, high)
    }
}

/// Coupled position of the chain and the multiplier.
#[derive(Clone, Debug)]
pub struct LearningState {
    pub chain: ChainState,
    pub lambda: f64,
    /// Slots completed; a(t) uses the 1-based slot number.
    pub t: u64,
}

/// One recorded learning slot. `lambda` is the value in force during the
/// slot, before that slot's update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningRow {
    pub t: u64,
    pub lambda: f64,
    pub popcount: u32,
    pub cost: f64,
}

/// Finished learning run with the tail-averaged multiplier estimate.
#[derive(Clone, Debug)]
pub struct LearningRun {
    pub trace: Vec<LearningRow>,
    pub state: LearningState,
    /// Mean lambda over the tail window; steadier than the last iterate.
    pub lambda_hat: f64,
    pub tail_mean_popcount: f64,
    pub tail_window: usize,
}

/// Advances the coupled process one slot and returns the recorded row.
///
/// The chain takes one site update priced at the current lambda; the
/// multiplier then moves by a(t) times the innovation, which uses the
/// configuration the slot started from.
pub fn learning_step(
    state: &mut LearningState,
    model: &GaussianModel,
    cache: &mut CostCache,
    params: &LearningParams,
) -> Result<LearningRow> {
    let prev_pop = state.chain.config.popcount() as f64;
    let lambda_used = state.lambda;
    let cost = gibbs_step(&mut state.chain, model, cache, lambda_used, params.beta)?;
    state.t += 1;
    let a = params.step0 / state.t as f64;
    state.lambda = (state.lambda + a * (prev_pop - params.nbar_target))
        .clamp(params.projection_low, params.projection_high);
    Ok(LearningRow {
        t: state.t,
        lambda: lambda_used,
        popcount: state.chain.config.popcount(),
        cost,
    })
}

/// Runs the coupled process for `steps` slots from a uniform random start.
///
/// `tail_window` controls how many final slots feed the lambda estimate;
/// None uses 5% of the budget, at least 100, capped at the budget.
pub fn run_gibbs_learning(
    model: &GaussianModel,
    params: &LearningParams,
    steps: u64,
    seed: u64,
    tail_window: Option<usize>,
) -> Result<LearningRun> {
    if steps == 0 {
        return Err(Error::InvalidParameter("learning needs steps >= 1".into()));
    }
    if params.nbar_target > model.n() as f64 {
        return Err(Error::InvalidParameter(format!(
            "nbar_target {} exceeds sensor count {}",
            params.nbar_target,
            model.n()
        )));
    }
    let window = tail_window
        .unwrap_or(((steps / 20).max(100)) as usize)
        .min(steps as usize)
        .max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = uniform_configuration(model.n(), &mut rng)?;
    let mut cache = CostCache::new();
    let init_cost = cache.cost(model, params.lambda0, init)?;
    let mut state = LearningState {
        chain: ChainState::new(init, init_cost, rng),
        lambda: params.lambda0,
        t: 0,
    };
    let mut trace = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        trace.push(learning_step(&mut state, model, &mut cache, params)?);
    }
    let tail = &trace[trace.len() - window..];
    let lambda_hat = tail.iter().map(|r| r.lambda).sum::<f64>() / window as f64;
    let tail_mean_popcount = tail.iter().map(|r| r.popcount as f64).sum::<f64>() / window as f64;
    Ok(LearningRun {
        trace,
        state,
        lambda_hat,
        tail_mean_popcount,
        tail_window: window,
    })
}

/// Outcome of the enumeration-based bracket check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Root of E|B| = nbar within [`ROOT_TOL`], when bracketed.
    pub lambda_star: Option<f64>,
    /// Expected active count at the low end of the box (the maximum).
    pub expected_at_low: f64,
    /// Expected active count at the high end of the box (the minimum).
    pub expected_at_high: f64,
}

/// Checks whether the target active count is reachable inside the
/// projection box and bisects to the pricing root if so.
///
/// The expected active count is evaluated by full enumeration, so the
/// model must fit the enumeration cap.
pub fn check_feasibility(
    model: &GaussianModel,
    beta: f64,
    nbar_target: f64,
    projection_low: f64,
    projection_high: f64,
) -> Result<Feasibility> {
    if !(nbar_target >= 0.0) || nbar_target > model.n() as f64 {
        return Err(Error::InvalidParameter(format!(
            "nbar_target must lie in [0, {}], got {nbar_target}",
            model.n()
        )));
    }
    if projection_low < 0.0 || projection_high <= projection_low {
        return Err(Error::InvalidParameter(format!(
            "projection box is empty: [{projection_low}, {projection_high}]"
        )));
    }
    let f = |lambda: f64| -> Result<f64> {
        let params = CostParams::new(lambda, beta)?;
        Ok(exact_gibbs(model, &params)?.expected_popcount())
    };
    let expected_at_low = f(projection_low)?;
    let expected_at_high = f(projection_high)?;
    let infeasible = Feasibility {
        feasible: false,
        lambda_star: None,
        expected_at_low,
        expected_at_high,
    };
    // The response is decreasing, so the box covers exactly
    // [expected_at_high, expected_at_low].
    if nbar_target > expected_at_low || nbar_target < expected_at_high {
        return Ok(infeasible);
    }
    let root = if nbar_target == expected_at_low {
        projection_low
    } else if nbar_target == expected_at_high {
        projection_high
    } else {
        // Invariant: f(lo) >= nbar >= f(hi).
        let (mut lo, mut hi) = (projection_low, projection_high);
        while hi - lo > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            if f(mid)? >= nbar_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(Feasibility {
        feasible: true,
        lambda_star: Some(root),
        expected_at_low,
        expected_at_high,
    })
}

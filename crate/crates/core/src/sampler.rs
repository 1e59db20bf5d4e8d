//! Gibbs chains over configurations, deterministic given a seed.
//!
//! One step of the basic chain picks a site uniformly at random and
//! resamples its bit from the single-site conditional
//!
//! ```text
//! P(bit = 1 | rest) = e^{-beta h1} / (e^{-beta h1} + e^{-beta h0})
//!                   = sigmoid(-beta (h1 - h0))
//! ```
//!
//! The annealed variant raises beta along a logarithmic schedule; the
//! fixed-cardinality variant replaces the single-site move with an
//! active/inactive swap so the active count never changes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{mask, Configuration};
use crate::cost::CostCache;
use crate::error::{Error, Result};
use crate::model::GaussianModel;

/// Conditional probability of activating, sigmoid(-beta (h_active - h_inactive)).
///
/// Evaluated on the side that keeps the exponential argument nonpositive,
/// so extreme cost gaps saturate cleanly at 0 or 1.
pub fn activation_probability(beta: f64, h_active: f64, h_inactive: f64) -> f64 {
    let x = beta * (h_active - h_inactive);
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Inverse-temperature schedule for a chain run.
#[derive(Clone, Debug, PartialEq)]
pub enum BetaSchedule {
    Fixed { beta: f64 },
    /// beta(t) = beta0 * ln(1 + t); construction checks beta0 * n * delta < 1.
    Logarithmic { beta0: f64 },
}

impl BetaSchedule {
    pub fn fixed(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fixed schedule needs beta > 0, got {beta}"
            )));
        }
        Ok(Self::Fixed { beta })
    }

    /// Logarithmic schedule; `delta_hat` must upper-bound the cost spread
    /// (see [`crate::exact::delta_upper_bound`]). Construction enforces the
    /// slow-annealing witness beta0 * n * delta_hat < 1.
    pub fn logarithmic(beta0: f64, n: usize, delta_hat: f64) -> Result<Self> {
        if !(beta0 > 0.0) || !beta0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "logarithmic schedule needs beta0 > 0, got {beta0}"
            )));
        }
        if !(delta_hat >= 0.0) || !delta_hat.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cost spread bound must be finite and >= 0, got {delta_hat}"
            )));
        }
        let witness = beta0 * n as f64 * delta_hat;
        if witness >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "schedule too fast: beta0 * n * delta = {beta0} * {n} * {delta_hat} = {witness} >= 1"
            )));
        }
        Ok(Self::Logarithmic { beta0 })
    }

    /// Inverse temperature used for the step taken at time `t` (0-based).
    pub fn beta_at(&self, t: u64) -> f64 {
        match self {
            Self::Fixed { beta } => *beta,
            Self::Logarithmic { beta0 } => beta0 * (1.0 + t as f64).ln(),
        }
    }

    pub fn is_logarithmic(&self) -> bool {
        matches!(self, Self::Logarithmic { .. })
    }
}

/// Step budget and trace controls for one chain run.
#[derive(Clone, Debug)]
pub struct RunBudget {
    pub steps: u64,
    pub seed: u64,
    /// Record every stride-th step; trace length is steps/stride.
    pub stride: u64,
    /// Heuristic early stop: quit once best_seen has not improved for this
    /// many steps. None runs the full budget.
    pub no_improve_stop: Option<u64>,
}

impl RunBudget {
    pub fn new(steps: u64, seed: u64) -> Self {
        Self {
            steps,
            seed,
            stride: 1,
            no_improve_stop: None,
        }
    }

    pub fn with_stride(mut self, stride: u64) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter("stride must be >= 1".into()));
        }
        self.stride = stride;
        Ok(self)
    }

    pub fn with_no_improve_stop(mut self, window: u64) -> Self {
        self.no_improve_stop = Some(window);
        self
    }
}

/// Mutable chain position: configuration, step counter, RNG, running best.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: Configuration,
    pub t: u64,
    rng: ChaCha8Rng,
    best: (Configuration, f64),
}

impl ChainState {
    pub(crate) fn new(config: Configuration, cost: f64, rng: ChaCha8Rng) -> Self {
        Self {
            config,
            t: 0,
            rng,
            best: (config, cost),
        }
    }

    /// Lowest-cost configuration seen so far and its cost.
    pub fn best_seen(&self) -> (Configuration, f64) {
        self.best
    }

    fn note(&mut self, config: Configuration, cost: f64) {
        if cost < self.best.1 {
            self.best = (config, cost);
        }
    }
}

/// One recorded chain step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub beta: f64,
    pub lambda: f64,
    pub bits: u64,
    pub popcount: u32,
    pub cost: f64,
}

/// Finished chain run: thinned trace, final state, early-stop flag.
#[derive(Clone, Debug)]
pub struct GibbsRun {
    pub trace: Vec<TraceRow>,
    pub state: ChainState,
    pub stopped_early: bool,
}

/// Uniform random configuration over n sensors.
pub fn uniform_configuration(n: usize, rng: &mut impl Rng) -> Result<Configuration> {
    Configuration::new(rng.random::<u64>() & mask(n), n)
}

/// Uniform random configuration with exactly `k` active sensors.
pub fn uniform_cardinality_configuration(
    n: usize,
    k: usize,
    rng: &mut impl Rng,
) -> Result<Configuration> {
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "cardinality {k} exceeds sensor count {n}"
        )));
    }
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    Configuration::from_indices(&idx[..k], n)
}

/// Advances the chain one single-site update; returns the cost of the
/// configuration the chain occupies afterwards.
pub fn gibbs_step(
    state: &mut ChainState,
    model: &GaussianModel,
    cache: &mut CostCache,
    lambda: f64,
    beta: f64,
) -> Result<f64> {
    let n = model.n();
    let j = state.rng.random_range(0..n);
    let on = state.config.with_bit(j, true);
    let off = state.config.with_bit(j, false);
    let h1 = cache.cost(model, lambda, on)?;
    let h0 = cache.cost(model, lambda, off)?;
    let p = activation_probability(beta, h1, h0);
    let u: f64 = state.rng.random();
    let (next, cost) = if u < p { (on, h1) } else { (off, h0) };
    state.config = next;
    state.t += 1;
    state.note(next, cost);
    Ok(cost)
}

/// Advances the fixed-cardinality chain one swap update; returns the error
/// term of the configuration occupied afterwards. The lambda term is
/// constant on a cardinality slice and cancels from the conditional.
fn swap_step(
    state: &mut ChainState,
    model: &GaussianModel,
    cache: &mut CostCache,
    beta: f64,
) -> Result<f64> {
    let n = model.n();
    let k = state.config.popcount() as usize;
    if k == 0 || k == n {
        // Singleton slice: nothing to resample.
        state.t += 1;
        return cache.error(model, state.config);
    }
    let active = state.config.active_indices();
    let inactive = state.config.inactive_indices();
    let i = active[state.rng.random_range(0..active.len())];
    let j = inactive[state.rng.random_range(0..inactive.len())];
    let swapped = state.config.with_bit(i, false).with_bit(j, true);
    let h_keep = cache.error(model, state.config)?;
    let h_swap = cache.error(model, swapped)?;
    let p = activation_probability(beta, h_swap, h_keep);
    let u: f64 = state.rng.random();
    let (next, err) = if u < p {
        (swapped, h_swap)
    } else {
        (state.config, h_keep)
    };
    debug_assert_eq!(next.popcount() as usize, k, "swap left the slice");
    state.config = next;
    state.t += 1;
    state.note(next, err);
    Ok(err)
}

enum Move {
    SingleSite { lambda: f64 },
    Swap,
}

fn run_chain(
    model: &GaussianModel,
    schedule: &BetaSchedule,
    mv: Move,
    init: Configuration,
    mut rng: ChaCha8Rng,
    budget: &RunBudget,
) -> Result<GibbsRun> {
    let mut cache = CostCache::new();
    let lambda = match mv {
        Move::SingleSite { lambda } => lambda,
        Move::Swap => 0.0,
    };
    let init_cost = cache.cost(model, lambda, init)?;
    // Pre-seed rng draws happen in the caller; the chain owns the rng now.
    let mut state = ChainState::new(init, init_cost, rng.clone());
    std::mem::swap(&mut state.rng, &mut rng);
    let mut trace = Vec::with_capacity((budget.steps / budget.stride) as usize);
    let mut last_improve = 0u64;
    let mut best_cost = init_cost;
    let mut stopped_early = false;
    for _ in 0..budget.steps {
        let beta = schedule.beta_at(state.t);
        let cost = match mv {
            Move::SingleSite { lambda } => gibbs_step(&mut state, model, &mut cache, lambda, beta)?,
            Move::Swap => swap_step(&mut state, model, &mut cache, beta)?,
        };
        if state.best_seen().1 < best_cost {
            best_cost = state.best_seen().1;
            last_improve = state.t;
        }
        if state.t % budget.stride == 0 {
            trace.push(TraceRow {
                t: state.t,
                beta,
                lambda,
                bits: state.config.bits(),
                popcount: state.config.popcount(),
                cost,
            });
        }
        if let Some(window) = budget.no_improve_stop {
            if state.t - last_improve >= window {
                stopped_early = true;
                break;
            }
        }
    }
    Ok(GibbsRun {
        trace,
        state,
        stopped_early,
    })
}

/// Fixed-temperature chain from a uniform random starting configuration.
pub fn run_basic_gibbs(
    model: &GaussianModel,
    lambda: f64,
    beta: f64,
    budget: &RunBudget,
) -> Result<GibbsRun> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let schedule = BetaSchedule::fixed(beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let init = uniform_configuration(model.n(), &mut rng)?;
    run_chain(model, &schedule, Move::SingleSite { lambda }, init, rng, budget)
}

/// Annealed chain; the schedule must be logarithmic (its construction
/// already certified the slow-annealing witness).
pub fn run_modified_gibbs(
    model: &GaussianModel,
    lambda: f64,
    schedule: &BetaSchedule,
    budget: &RunBudget,
) -> Result<GibbsRun> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if !schedule.is_logarithmic() {
        return Err(Error::InvalidParameter(
            "annealed run requires a logarithmic schedule".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let init = uniform_configuration(model.n(), &mut rng)?;
    run_chain(model, schedule, Move::SingleSite { lambda }, init, rng, budget)
}

/// Swap chain on the popcount = nbar slice, from a uniform random
/// starting k-subset. Trace cost column carries the error term.
pub fn run_fixed_cardinality_gibbs(
    model: &GaussianModel,
    nbar: usize,
    beta: f64,
    budget: &RunBudget,
) -> Result<GibbsRun> {
    if nbar > model.n() {
        return Err(Error::InvalidParameter(format!(
            "target cardinality {nbar} exceeds sensor count {}",
            model.n()
        )));
    }
    let schedule = BetaSchedule::fixed(beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let init = uniform_cardinality_configuration(model.n(), nbar, &mut rng)?;
    run_chain(model, &schedule, Move::Swap, init, rng, budget)
}

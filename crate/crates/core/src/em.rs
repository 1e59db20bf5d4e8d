//! EM parameter estimation from partial observations, and the selection
//! loops built on it.
//!
//! The implemented family is a common-mean Gaussian: X ~ Normal(theta g, M)
//! with M known, g a fixed mean basis (all ones by default) and a single
//! unknown scalar theta. One EM pass imputes the hidden coordinates by
//! their conditional mean and re-solves the complete-data mean:
//!
//! ```text
//! theta' = theta + sum_t gS' Mss^-1 (x_S - theta gS) / (T q),   q = g' M^-1 g
//! ```
//!
//! The fixed point is the pooled generalized-least-squares estimate over
//! everything observed, and the observed-data log-likelihood never
//! decreases along the way. Selection interleaves with estimation: the
//! static loop grows one realized snapshot sensor by sensor, the
//! sequential loop picks a fresh subset per time slot. Neither loop
//! carries an optimality guarantee; they are estimation heuristics.

use std::collections::HashMap;

use nalgebra::DVector;

use crate::config::{binomial, Configuration};
use crate::error::{Error, Result};
use crate::exact::exhaustive_optimum_at_cardinality;
use crate::model::{GaussianModel, JitteredCholesky};
use crate::sampler::{run_fixed_cardinality_gibbs, RunBudget};

/// Gaussian family with a scalar unknown scaling a fixed mean basis.
#[derive(Clone, Debug)]
pub struct ParamFamily {
    model: GaussianModel,
    basis: DVector<f64>,
    theta: f64,
}

impl ParamFamily {
    /// The common-mean family: every coordinate has mean theta.
    pub fn common_mean(model: GaussianModel, theta0: f64) -> Result<Self> {
        let n = model.n();
        Self::with_basis(model, DVector::from_element(n, 1.0), theta0)
    }

    /// A custom mean basis; the mean vector is theta * basis.
    pub fn with_basis(model: GaussianModel, basis: DVector<f64>, theta0: f64) -> Result<Self> {
        if basis.len() != model.n() {
            return Err(Error::DimensionMismatch(format!(
                "basis length {} vs model order {}",
                basis.len(),
                model.n()
            )));
        }
        if !theta0.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be finite, got {theta0}")));
        }
        if !basis.iter().all(|v| v.is_finite()) || basis.norm() == 0.0 {
            return Err(Error::InvalidParameter(
                "mean basis must be finite and nonzero".into(),
            ));
        }
        Ok(Self { model, basis, theta: theta0 })
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn basis(&self) -> &DVector<f64> {
        &self.basis
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Mean vector theta * basis.
    pub fn mean(&self) -> DVector<f64> {
        &self.basis * self.theta
    }

    /// Draws one snapshot, mean plus a covariance-shaped disturbance.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> Result<DVector<f64>> {
        Ok(self.mean() + self.model.sample(rng)?)
    }
}

/// Values seen on one subset of coordinates, ascending-index order.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialObservation {
    observed: Configuration,
    values: DVector<f64>,
}

impl PartialObservation {
    pub fn new(observed: Configuration, values: Vec<f64>) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::InvalidParameter(
                "observation must cover at least one coordinate".into(),
            ));
        }
        if values.len() != observed.popcount() as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} observed coordinates",
                values.len(),
                observed.popcount()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("observed values must be finite".into()));
        }
        Ok(Self {
            observed,
            values: DVector::from_vec(values),
        })
    }

    /// Restriction of a full snapshot to the observed coordinates.
    pub fn from_snapshot(observed: Configuration, snapshot: &DVector<f64>) -> Result<Self> {
        if snapshot.len() != observed.n() {
            return Err(Error::DimensionMismatch(format!(
                "snapshot length {} vs sensor count {}",
                snapshot.len(),
                observed.n()
            )));
        }
        let values = observed.active_indices().iter().map(|&i| snapshot[i]).collect();
        Self::new(observed, values)
    }

    pub fn observed(&self) -> Configuration {
        self.observed
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// EM stopping rule.
#[derive(Clone, Copy, Debug)]
pub struct EmOptions {
    pub max_iters: usize,
    /// Stop once one update moves theta by no more than this.
    pub tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-8 }
    }
}

/// Fitted family with the iteration count and likelihood path.
#[derive(Clone, Debug)]
pub struct EmFit {
    pub family: ParamFamily,
    pub iterations: usize,
    /// Observed-data log-likelihood before each update and after the last.
    pub log_likelihood_trace: Vec<f64>,
}

// Sufficient statistics of every snapshot sharing one observed mask.
struct Group {
    factor: JitteredCholesky,
    // Mss^-1 g_S and g_S' Mss^-1 g_S, fixed per mask.
    u: DVector<f64>,
    weight: f64,
    log_det: f64,
    dim: usize,
    count: f64,
    sum: DVector<f64>,
    // Accumulated x' Mss^-1 x, for the likelihood.
    quad: f64,
}

/// Pooled sufficient statistics of partial observations, grouped by mask.
pub struct PooledStats {
    groups: HashMap<u64, Group>,
    snapshots: f64,
    coords: usize,
    // g' M^-1 g over the full order.
    q: f64,
}

impl PooledStats {
    pub fn new(family: &ParamFamily) -> Result<Self> {
        let q = family.basis.dot(&family.model.cholesky_full()?.solve_vec(&family.basis));
        if !(q > 0.0) {
            return Err(Error::InvalidModel(format!(
                "mean basis carries no information: g' M^-1 g = {q}"
            )));
        }
        Ok(Self {
            groups: HashMap::new(),
            snapshots: 0.0,
            coords: 0,
            q,
        })
    }

    pub fn add(&mut self, family: &ParamFamily, obs: &PartialObservation) -> Result<()> {
        if obs.observed.n() != family.model.n() {
            return Err(Error::DimensionMismatch(format!(
                "observation over {} sensors vs model order {}",
                obs.observed.n(),
                family.model.n()
            )));
        }
        let bits = obs.observed.bits();
        if !self.groups.contains_key(&bits) {
            let idx = obs.observed.active_indices();
            let factor = family
                .model
                .cholesky_of(&idx, &format!("observed subset {}", obs.observed.to_hex()))?;
            let g_s = DVector::from_iterator(idx.len(), idx.iter().map(|&i| family.basis[i]));
            let u = factor.solve_vec(&g_s);
            let weight = g_s.dot(&u);
            let log_det = factor.log_det();
            self.groups.insert(
                bits,
                Group {
                    factor,
                    u,
                    weight,
                    log_det,
                    dim: idx.len(),
                    count: 0.0,
                    sum: DVector::zeros(idx.len()),
                    quad: 0.0,
                },
            );
        }
        let group = self.groups.get_mut(&bits).expect("just inserted");
        group.count += 1.0;
        group.sum += &obs.values;
        group.quad += obs.values.dot(&group.factor.solve_vec(&obs.values));
        self.snapshots += 1.0;
        self.coords += group.dim;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.coords == 0
    }

    /// One EM update of theta.
    fn update(&self, theta: f64) -> f64 {
        let innovation: f64 = self
            .groups
            .values()
            .map(|g| g.u.dot(&g.sum) - theta * g.count * g.weight)
            .sum();
        theta + innovation / (self.snapshots * self.q)
    }

    /// Observed-data log-likelihood at theta, summed over all snapshots.
    pub fn log_likelihood(&self, theta: f64) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.groups
            .values()
            .map(|g| {
                let quad = g.quad - 2.0 * theta * g.u.dot(&g.sum) + theta * theta * g.count * g.weight;
                -0.5 * (quad + g.count * (g.log_det + g.dim as f64 * ln_2pi))
            })
            .sum()
    }

    /// Iterates EM from the family's theta until the step falls under tol.
    pub fn fit(&self, family: &ParamFamily, opts: &EmOptions) -> Result<EmFit> {
        if self.is_empty() {
            return Err(Error::InvalidParameter("no observed coordinates to fit".into()));
        }
        if opts.max_iters == 0 || !(opts.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "EM needs max_iters >= 1 and tol > 0, got {} and {}",
                opts.max_iters, opts.tol
            )));
        }
        let mut theta = family.theta;
        let mut trace = vec![self.log_likelihood(theta)];
        let mut iterations = 0;
        for _ in 0..opts.max_iters {
            let next = self.update(theta);
            iterations += 1;
            let moved = (next - theta).abs();
            theta = next;
            let ll = self.log_likelihood(theta);
            debug_assert!(
                ll >= trace[trace.len() - 1] - 1e-9,
                "likelihood fell: {} -> {ll}",
                trace[trace.len() - 1]
            );
            trace.push(ll);
            if moved <= opts.tol {
                break;
            }
        }
        Ok(EmFit {
            family: ParamFamily {
                model: family.model.clone(),
                basis: family.basis.clone(),
                theta,
            },
            iterations,
            log_likelihood_trace: trace,
        })
    }
}

/// Fits theta to one partial snapshot.
pub fn em_fit(family: &ParamFamily, obs: &PartialObservation, opts: &EmOptions) -> Result<EmFit> {
    em_fit_pooled(family, std::slice::from_ref(obs), opts)
}

/// Fits theta to a pool of partial snapshots gathered over time.
pub fn em_fit_pooled(
    family: &ParamFamily,
    observations: &[PartialObservation],
    opts: &EmOptions,
) -> Result<EmFit> {
    let mut stats = PooledStats::new(family)?;
    for obs in observations {
        stats.add(family, obs)?;
    }
    stats.fit(family, opts)
}

/// Conditional mean of the full vector given the observed coordinates,
/// under the family's current theta. Observed coordinates pass through.
pub fn reconstruct(family: &ParamFamily, obs: &PartialObservation) -> Result<DVector<f64>> {
    let idx = obs.observed.active_indices();
    let factor = family
        .model
        .cholesky_of(&idx, &format!("observed subset {}", obs.observed.to_hex()))?;
    let g_s = DVector::from_iterator(idx.len(), idx.iter().map(|&i| family.basis[i]));
    let residual = factor.solve_vec(&(obs.values.clone() - g_s * family.theta));
    let all: Vec<usize> = (0..family.model.n()).collect();
    let cross = family.model.submatrix(&all, &idx);
    Ok(family.mean() + cross * residual)
}

/// Result of growing one realized snapshot sensor by sensor.
#[derive(Clone, Debug)]
pub struct StaticSelection {
    /// Sensors in the order they were sampled.
    pub order: Vec<usize>,
    pub family: ParamFamily,
    /// theta before any observation, then after each refit.
    pub theta_trace: Vec<f64>,
    /// Conditional-mean estimate of the full vector at the final theta.
    pub reconstruction: DVector<f64>,
}

/// Samples `nbar` sensors one at a time from a single hidden realization.
///
/// Each round activates the sensor whose inclusion leaves the smallest
/// conditional error (theta plays no role in that criterion under a fixed
/// known covariance), reads its value through `observe`, and refits theta
/// on everything seen so far.
pub fn em_static_select(
    family0: &ParamFamily,
    mut observe: impl FnMut(usize) -> f64,
    nbar: usize,
    opts: &EmOptions,
) -> Result<StaticSelection> {
    let n = family0.model.n();
    if nbar == 0 || nbar > n {
        return Err(Error::InvalidParameter(format!(
            "nbar must lie in [1, {n}], got {nbar}"
        )));
    }
    let mut family = family0.clone();
    let mut selected = Configuration::empty(n)?;
    let mut order = Vec::with_capacity(nbar);
    let mut theta_trace = vec![family.theta];
    for _ in 0..nbar {
        let mut best: Option<(usize, f64)> = None;
        for j in selected.inactive_indices() {
            let err = crate::cost::mmse(&family.model, selected.with_bit(j, true))?;
            // Strict inequality keeps the lowest index on ties.
            if best.map_or(true, |(_, e)| err < e) {
                best = Some((j, err));
            }
        }
        let (j, _) = best.expect("nbar <= n leaves a candidate");
        selected = selected.with_bit(j, true);
        order.push(j);
        let values = order
            .iter()
            .map(|&k| (k, observe(k)))
            .collect::<Vec<_>>();
        // Only the newest sensor is actually new; re-reading the others
        // must be consistent, and keeps the observe contract simple.
        let mut sorted = values;
        sorted.sort_by_key(|&(k, _)| k);
        let obs = PartialObservation::new(selected, sorted.into_iter().map(|(_, v)| v).collect())?;
        family = em_fit(&family, &obs, opts)?.family;
        theta_trace.push(family.theta);
        if order.len() == nbar {
            let reconstruction = reconstruct(&family, &obs)?;
            return Ok(StaticSelection {
                order,
                family,
                theta_trace,
                reconstruction,
            });
        }
    }
    unreachable!("loop returns on the last round")
}

/// Controls for the per-slot subset search in the sequential loop.
#[derive(Clone, Copy, Debug)]
pub struct SequentialOptions {
    pub em: EmOptions,
    /// Slices with at most this many subsets are searched exactly.
    pub enumeration_cap: u128,
    /// Chain settings when the slice is too large to enumerate.
    pub gibbs_beta: f64,
    pub gibbs_steps: u64,
    pub gibbs_seed: u64,
}

impl Default for SequentialOptions {
    fn default() -> Self {
        Self {
            em: EmOptions::default(),
            enumeration_cap: 1_000_000,
            gibbs_beta: 5.0,
            gibbs_steps: 5000,
            gibbs_seed: 0,
        }
    }
}

/// Result of the slotted selection loop.
#[derive(Clone, Debug)]
pub struct SequentialSelection {
    /// Subset observed in each slot.
    pub selections: Vec<Configuration>,
    /// theta before any slot, then after each slot's refit.
    pub theta_trace: Vec<f64>,
    pub family: ParamFamily,
}

/// Runs `slots` rounds of subset selection against a stream of fresh
/// snapshots; `snapshot(t)` must return the full slot-t realization, of
/// which only the selected coordinates are read.
///
/// The per-slot subset minimizes conditional error on the cardinality
/// slice, found exactly when the slice is small enough to enumerate and by
/// a fixed-cardinality chain otherwise. Estimation pools every coordinate
/// observed so far and refits theta once per slot, warm-started.
pub fn em_sequential_select(
    family0: &ParamFamily,
    mut snapshot: impl FnMut(usize) -> DVector<f64>,
    nbar: usize,
    slots: usize,
    opts: &SequentialOptions,
) -> Result<SequentialSelection> {
    let n = family0.model.n();
    if nbar == 0 || nbar > n {
        return Err(Error::InvalidParameter(format!(
            "nbar must lie in [1, {n}], got {nbar}"
        )));
    }
    if slots == 0 {
        return Err(Error::InvalidParameter("sequential run needs slots >= 1".into()));
    }
    let mut family = family0.clone();
    let mut stats = PooledStats::new(&family)?;
    let mut selections = Vec::with_capacity(slots);
    let mut theta_trace = vec![family.theta];
    for t in 0..slots {
        let choice = if binomial(n, nbar) <= opts.enumeration_cap {
            exhaustive_optimum_at_cardinality(&family.model, nbar)?.0
        } else {
            let seed = opts
                .gibbs_seed
                .wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let budget = RunBudget::new(opts.gibbs_steps, seed);
            run_fixed_cardinality_gibbs(&family.model, nbar, opts.gibbs_beta, &budget)?
                .state
                .best_seen()
                .0
        };
        let obs = PartialObservation::from_snapshot(choice, &snapshot(t))?;
        stats.add(&family, &obs)?;
        family = stats.fit(&family, &opts.em)?.family;
        selections.push(choice);
        theta_trace.push(family.theta);
    }
    Ok(SequentialSelection {
        selections,
        theta_trace,
        family,
    })
}

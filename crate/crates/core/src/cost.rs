//! Estimation error and activation cost of a configuration.
//!
//! With active set S and sleeping set C, the fusion center estimates the
//! sleeping coordinates by their conditional mean given the active ones.
//! The resulting mean squared error is the Schur complement trace
//!
//! ```text
//! mmse(B) = tr( M(C,C) - M(C,S) M(S,S)^-1 M(S,C) )
//! ```
//!
//! and the operating cost adds a per-active-sensor price:
//!
//! ```text
//! h(B) = mmse(B) + lambda * |B|
//! ```

use std::collections::HashMap;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::model::GaussianModel;

/// Price per active sensor and inverse temperature of the Gibbs measure.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CostParams {
    /// Per-sensor activation price, nonnegative.
    pub lambda: f64,
    /// Inverse temperature, positive for sampling use.
    pub beta: f64,
}

impl CostParams {
    /// Validates `lambda >= 0` and `beta > 0`.
    pub fn new(lambda: f64, beta: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and > 0, got {beta}"
            )));
        }
        Ok(Self { lambda, beta })
    }
}

/// Scalar error measure d_B of a configuration. Conditional-mean MMSE is the
/// default; alternative measures plug in through [`CostCache::with_metric`].
pub trait ErrorMetric: Send + Sync {
    fn error(&self, model: &GaussianModel, config: Configuration) -> Result<f64>;
}

/// Conditional-mean mean squared error (the default metric).
#[derive(Clone, Copy, Debug, Default)]
pub struct Mmse;

impl ErrorMetric for Mmse {
    fn error(&self, model: &GaussianModel, config: Configuration) -> Result<f64> {
        mmse(model, config)
    }
}

/// MMSE of estimating the sleeping coordinates from the active ones.
///
/// Exact at the boundaries: the empty set returns tr(M), the full set 0.
pub fn mmse(model: &GaussianModel, config: Configuration) -> Result<f64> {
    if config.n() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "configuration over {} sensors, model has {}",
            config.n(),
            model.n()
        )));
    }
    if config.is_empty() {
        return Ok(model.trace());
    }
    if config.is_full() {
        return Ok(0.0);
    }
    let active = config.active_indices();
    let sleeping = config.inactive_indices();
    let chol = model
        .cholesky_of(&active, &format!("active subset {:x}", config.bits()))?;
    let cross = model.submatrix(&active, &sleeping);
    let solved = chol.solve(&cross);
    // tr(M(C,C)) - tr(M(C,S) M(S,S)^-1 M(S,C)), column by column.
    let mut err = 0.0;
    for (j, &c) in sleeping.iter().enumerate() {
        let mut reduction = 0.0;
        for i in 0..active.len() {
            reduction += cross[(i, j)] * solved[(i, j)];
        }
        err += model.covariance()[(c, c)] - reduction;
    }
    // Rounding can push an exactly-determined coordinate slightly negative.
    Ok(err.max(0.0))
}

/// Activation cost h(B) = mmse(B) + lambda * |B|.
pub fn cost(model: &GaussianModel, params: &CostParams, config: Configuration) -> Result<f64> {
    Ok(mmse(model, config)? + params.lambda * config.popcount() as f64)
}

/// Memoizes the error term by bitmask so repeated sweeps and chains skip
/// refactorization. The lambda term is recomputed on every call, which keeps
/// cached entries valid when lambda changes mid-run.
///
/// The map is not synchronized; give each worker its own cache.
pub struct CostCache {
    metric: Box<dyn ErrorMetric>,
    errors: HashMap<u64, f64>,
    hits: u64,
    misses: u64,
}

impl Default for CostCache {
    fn default() -> Self {
        Self::new()
    }
}

impl CostCache {
    /// Cache evaluating the default MMSE metric.
    pub fn new() -> Self {
        Self::with_metric(Box::new(Mmse))
    }

    /// Cache evaluating a custom error metric.
    pub fn with_metric(metric: Box<dyn ErrorMetric>) -> Self {
        Self {
            metric,
            errors: HashMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    /// Error term d_B, computed once per bitmask.
    pub fn error(&mut self, model: &GaussianModel, config: Configuration) -> Result<f64> {
        if let Some(&e) = self.errors.get(&config.bits()) {
            self.hits += 1;
            return Ok(e);
        }
        let e = self.metric.error(model, config)?;
        self.errors.insert(config.bits(), e);
        self.misses += 1;
        Ok(e)
    }

    /// Cost under the given lambda; equals a fresh [`cost`] call bit for bit.
    pub fn cost(&mut self, model: &GaussianModel, lambda: f64, config: Configuration) -> Result<f64> {
        Ok(self.error(model, config)? + lambda * config.popcount() as f64)
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn identity_model(n: usize) -> GaussianModel {
        GaussianModel::new(DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn independent_sensors_reduce_error_one_for_one() {
        // M = I3, sensor 0 active: sleeping coordinates keep unit variance.
        let g = identity_model(3);
        let c = Configuration::from_indices(&[0], 3).unwrap();
        assert!((mmse(&g, c).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn correlated_pair_discounts_by_squared_correlation() {
        let g = GaussianModel::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap();
        let c = Configuration::from_indices(&[0], 2).unwrap();
        // 1 - 0.5^2 / 1 = 0.75.
        assert!((mmse(&g, c).unwrap() - 0.75).abs() < 1e-9);
    }

    #[test]
    fn boundary_sets_are_exact() {
        let g = GaussianModel::generate(6, 2).unwrap();
        let params = CostParams::new(1.3, 1.0).unwrap();
        let empty = Configuration::empty(6).unwrap();
        let full = Configuration::full(6).unwrap();
        assert!((cost(&g, &params, empty).unwrap() - g.trace()).abs() <= 1e-12);
        assert!((cost(&g, &params, full).unwrap() - 1.3 * 6.0).abs() <= 1e-12);
    }

    #[test]
    fn cost_adds_lambda_per_active_sensor() {
        let g = identity_model(3);
        let params = CostParams::new(2.0, 1.0).unwrap();
        let c = Configuration::from_indices(&[0], 3).unwrap();
        assert!((cost(&g, &params, c).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn mmse_is_monotone_under_inclusion() {
        // Every superset estimates at least as well; checked over all pairs.
        let g = GaussianModel::generate(8, 17).unwrap();
        let mut errs = vec![0.0; 1 << 8];
        for bits in 0..(1u64 << 8) {
            errs[bits as usize] = mmse(&g, Configuration::new(bits, 8).unwrap()).unwrap();
        }
        for bits in 0..(1u64 << 8) {
            for j in 0..8 {
                if bits >> j & 1 == 0 {
                    let sup = bits | 1 << j;
                    assert!(
                        errs[sup as usize] <= errs[bits as usize] + 1e-9,
                        "adding sensor {j} to {bits:#x} raised the error"
                    );
                }
            }
        }
    }

    #[test]
    fn mmse_is_permutation_invariant() {
        let g = GaussianModel::generate(6, 23).unwrap();
        // Relabel sensors by p, permute the covariance rows/cols to match.
        let p = [3usize, 0, 5, 1, 4, 2];
        let n = 6;
        let pm = DMatrix::from_fn(n, n, |i, j| g.covariance()[(p[i], p[j])]);
        let gp = GaussianModel::new(pm).unwrap();
        for bits in 0..(1u64 << n) {
            let c = Configuration::new(bits, n).unwrap();
            let mapped: Vec<usize> = (0..n).filter(|&i| c.get(p[i])).collect();
            let cp = Configuration::from_indices(&mapped, n).unwrap();
            let a = mmse(&g, c).unwrap();
            let b = mmse(&gp, cp).unwrap();
            assert!((a - b).abs() < 1e-8, "bits {bits:#x}: {a} vs {b}");
        }
    }

    #[test]
    fn schur_route_matches_precision_route() {
        // Independent check: invert M, take the sleeping block of the
        // precision matrix, invert that block, sum its diagonal.
        for seed in [1u64, 2, 3] {
            let n = 7;
            let g = GaussianModel::generate(n, seed).unwrap();
            let minv = g.covariance().clone().try_inverse().unwrap();
            for bits in 1..((1u64 << n) - 1) {
                let c = Configuration::new(bits, n).unwrap();
                let sleeping = c.inactive_indices();
                let block = DMatrix::from_fn(sleeping.len(), sleeping.len(), |i, j| {
                    minv[(sleeping[i], sleeping[j])]
                });
                let cond = block.try_inverse().unwrap();
                let oracle: f64 = (0..sleeping.len()).map(|i| cond[(i, i)]).sum();
                let got = mmse(&g, c).unwrap();
                assert!(
                    (got - oracle).abs() < 1e-8,
                    "seed {seed} bits {bits:#x}: {got} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(CostParams::new(-0.1, 1.0).is_err());
        assert!(CostParams::new(0.0, 0.0).is_err());
        assert!(CostParams::new(0.0, -2.0).is_err());
        assert!(CostParams::new(f64::NAN, 1.0).is_err());
        assert!(CostParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn cache_matches_fresh_evaluation_bit_for_bit() {
        let g = GaussianModel::generate(6, 8).unwrap();
        let params = CostParams::new(0.7, 1.0).unwrap();
        let mut cache = CostCache::new();
        for bits in 0..(1u64 << 6) {
            let c = Configuration::new(bits, 6).unwrap();
            let fresh = cost(&g, &params, c).unwrap();
            let cached = cache.cost(&g, params.lambda, c).unwrap();
            assert_eq!(fresh, cached, "first evaluation, bits {bits:#x}");
            let again = cache.cost(&g, params.lambda, c).unwrap();
            assert_eq!(fresh, again, "cached evaluation, bits {bits:#x}");
        }
    }

    #[test]
    fn cache_survives_lambda_change() {
        // The error term is reused; only the lambda term is recomputed.
        let g = GaussianModel::generate(5, 4).unwrap();
        let mut cache = CostCache::new();
        let c = Configuration::new(0b01101, 5).unwrap();
        cache.cost(&g, 0.5, c).unwrap();
        let misses_before = cache.misses();
        let under_new_lambda = cache.cost(&g, 2.0, c).unwrap();
        let fresh = cost(&g, &CostParams::new(2.0, 1.0).unwrap(), c).unwrap();
        assert_eq!(under_new_lambda, fresh);
        assert_eq!(cache.misses(), misses_before, "no recomputation after lambda change");
    }

    #[test]
    fn warm_cache_does_no_factorization_work() {
        let g = GaussianModel::generate(10, 12).unwrap();
        let mut cache = CostCache::new();
        for bits in 0..(1u64 << 10) {
            cache.error(&g, Configuration::new(bits, 10).unwrap()).unwrap();
        }
        assert_eq!(cache.len(), 1 << 10);
        let misses = cache.misses();
        for bits in 0..(1u64 << 10) {
            cache.cost(&g, 1.0, Configuration::new(bits, 10).unwrap()).unwrap();
        }
        assert_eq!(cache.misses(), misses, "warm sweep must be all hits");
        assert_eq!(cache.hits(), 1 << 10);
    }

    #[test]
    fn custom_metric_flows_through_cache() {
        struct ActiveCount;
        impl ErrorMetric for ActiveCount {
            fn error(&self, _: &GaussianModel, c: Configuration) -> Result<f64> {
                Ok(c.popcount() as f64)
            }
        }
        let g = identity_model(4);
        let mut cache = CostCache::with_metric(Box::new(ActiveCount));
        let c = Configuration::from_indices(&[1, 2], 4).unwrap();
        assert_eq!(cache.cost(&g, 1.5, c).unwrap(), 2.0 + 3.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = identity_model(4);
        let c = Configuration::empty(5).unwrap();
        assert!(matches!(mmse(&g, c), Err(Error::DimensionMismatch(_))));
    }
}

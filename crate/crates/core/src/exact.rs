//! Exhaustive-enumeration ground truth for small sensor counts.
//!
//! Everything here walks all 2^n configurations: the optimal configuration,
//! the exact Gibbs distribution
//!
//! ```text
//! pi_beta(B) = exp(-beta h(B)) / Z_beta
//! ```
//!
//! the transition matrix of the random-scan single-site chain, and the
//! Dobrushin contraction factor that bounds its convergence rate. The
//! samplers and the learning loop are validated against these oracles.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::config::{cardinality_masks, Configuration};
use crate::cost::{mmse, CostParams, ErrorMetric, Mmse};
use crate::error::{Error, Result};
use crate::model::GaussianModel;

/// Enumeration cap for optimum/distribution sweeps.
pub const ENUMERATION_CAP: usize = 30;
/// Enumeration cap for the dense transition matrix (4^n entries).
pub const MATRIX_CAP: usize = 12;
/// Cap up to which the cost spread Delta is computed exactly.
pub const DELTA_EXACT_CAP: usize = 22;

fn check_cap(n: usize, cap: usize, what: &str) -> Result<()> {
    if n > cap {
        return Err(Error::CapacityExceeded(format!(
            "{what} enumerates 2^n configurations and is capped at n <= {cap}, got n = {n}"
        )));
    }
    Ok(())
}

/// Error term d_B for every bitmask, indexed by bitmask.
pub fn error_table(model: &GaussianModel) -> Result<Vec<f64>> {
    error_table_with_metric(model, &Mmse)
}

/// [`error_table`] under a caller-supplied metric.
pub fn error_table_with_metric(model: &GaussianModel, metric: &dyn ErrorMetric) -> Result<Vec<f64>> {
    let n = model.n();
    check_cap(n, ENUMERATION_CAP, "error table")?;
    (0u64..1 << n)
        .into_par_iter()
        .map(|bits| metric.error(model, Configuration::new(bits, n)?))
        .collect()
}

/// Cost h(B) for every bitmask, indexed by bitmask.
pub fn cost_table(model: &GaussianModel, lambda: f64) -> Result<Vec<f64>> {
    let errs = error_table(model)?;
    Ok(add_lambda_term(&errs, lambda))
}

/// errors[b] + lambda * popcount(b) for each bitmask index.
pub fn add_lambda_term(errors: &[f64], lambda: f64) -> Vec<f64> {
    errors
        .iter()
        .enumerate()
        .map(|(bits, &e)| e + lambda * (bits as u64).count_ones() as f64)
        .collect()
}

/// Minimum of h over all configurations; ties go to the smallest bitmask.
pub fn exhaustive_optimum(model: &GaussianModel, lambda: f64) -> Result<(Configuration, f64)> {
    let n = model.n();
    check_cap(n, ENUMERATION_CAP, "exhaustive optimum")?;
    let costs = cost_table(model, lambda)?;
    let (bits, cost) = argmin_by_bits(costs.iter().copied().enumerate().map(|(b, c)| (b as u64, c)));
    Ok((Configuration::new(bits, n)?, cost))
}

/// Minimum error over configurations with exactly `nbar` active sensors.
pub fn exhaustive_optimum_at_cardinality(
    model: &GaussianModel,
    nbar: usize,
) -> Result<(Configuration, f64)> {
    let n = model.n();
    check_cap(n, ENUMERATION_CAP, "cardinality-constrained optimum")?;
    if nbar > n {
        return Err(Error::InvalidParameter(format!(
            "target cardinality {nbar} exceeds sensor count {n}"
        )));
    }
    let masks: Vec<u64> = cardinality_masks(n, nbar).collect();
    let pairs = masks
        .into_par_iter()
        .map(|bits| Ok((bits, mmse(model, Configuration::new(bits, n)?)?)))
        .collect::<Result<Vec<(u64, f64)>>>()?;
    let (bits, err) = argmin_by_bits(pairs.into_iter());
    Ok((Configuration::new(bits, n)?, err))
}

// Lexicographic min over (cost, bits); deterministic for any visit order.
fn argmin_by_bits(pairs: impl Iterator<Item = (u64, f64)>) -> (u64, f64) {
    let mut best: Option<(u64, f64)> = None;
    for (bits, c) in pairs {
        best = Some(match best {
            None => (bits, c),
            Some((bb, bc)) => {
                if c < bc || (c == bc && bits < bb) {
                    (bits, c)
                } else {
                    (bb, bc)
                }
            }
        });
    }
    best.expect("non-empty enumeration")
}

/// Probability vector over all 2^n configurations plus log Z.
#[derive(Clone, Debug)]
pub struct GibbsDistribution {
    probs: Vec<f64>,
    log_partition: f64,
}

impl GibbsDistribution {
    /// Normalizes exp(-beta h(b)) over a dense cost table via log-sum-exp.
    ///
    /// `beta = 0` is accepted and yields the uniform distribution, useful
    /// as a diagnostic reference; sampling-facing APIs require beta > 0.
    pub fn from_costs(costs: &[f64], beta: f64) -> Self {
        let logw: Vec<f64> = costs.iter().map(|&h| -beta * h).collect();
        let (probs, log_partition) = normalize_log_weights(&logw);
        Self { probs, log_partition }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob_of(&self, bits: u64) -> f64 {
        self.probs[bits as usize]
    }

    /// Expectation of a dense bitmask-indexed table under this distribution.
    pub fn expectation(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "table of {} values against {} states",
                values.len(),
                self.probs.len()
            )));
        }
        Ok(self
            .probs
            .iter()
            .zip(values)
            .map(|(p, v)| p * v)
            .sum())
    }

    /// Mean number of active sensors.
    pub fn expected_popcount(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(bits, p)| p * (bits as u64).count_ones() as f64)
            .sum()
    }

    /// The `k` most probable states as (bits, prob), descending.
    pub fn top_k(&self, k: usize) -> Vec<(u64, f64)> {
        let mut idx: Vec<(u64, f64)> = self
            .probs
            .iter()
            .enumerate()
            .map(|(b, &p)| (b as u64, p))
            .collect();
        // Descending by prob, ascending bits among exact ties.
        idx.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        idx.truncate(k);
        idx
    }
}

fn normalize_log_weights(logw: &[f64]) -> (Vec<f64>, f64) {
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logw.iter().map(|&w| (w - m).exp()).sum();
    let log_z = m + sum.ln();
    let mut probs: Vec<f64> = logw.iter().map(|&w| (w - log_z).exp()).collect();
    // One closing normalization squeezes out exp rounding so the vector
    // sums to 1 at machine precision even for wild cost scales.
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    (probs, log_z)
}

/// Exact Gibbs distribution pi_beta over all configurations.
pub fn exact_gibbs(model: &GaussianModel, params: &CostParams) -> Result<GibbsDistribution> {
    check_cap(model.n(), DELTA_EXACT_CAP, "exact Gibbs distribution")?;
    let costs = cost_table(model, params.lambda)?;
    Ok(GibbsDistribution::from_costs(&costs, params.beta))
}

/// Gibbs distribution restricted to configurations with `nbar` active
/// sensors, weighted by the error term alone (the lambda term is constant
/// on the slice and cancels). Off-slice states get probability zero.
pub fn exact_gibbs_restricted(
    model: &GaussianModel,
    beta: f64,
    nbar: usize,
) -> Result<GibbsDistribution> {
    let n = model.n();
    check_cap(n, DELTA_EXACT_CAP, "restricted Gibbs distribution")?;
    if nbar > n {
        return Err(Error::InvalidParameter(format!(
            "target cardinality {nbar} exceeds sensor count {n}"
        )));
    }
    let masks: Vec<u64> = cardinality_masks(n, nbar).collect();
    let logw = masks
        .par_iter()
        .map(|&bits| Ok(-beta * mmse(model, Configuration::new(bits, n)?)?))
        .collect::<Result<Vec<f64>>>()?;
    let (slice_probs, log_partition) = normalize_log_weights(&logw);
    let mut probs = vec![0.0; 1 << n];
    for (m, p) in masks.iter().zip(slice_probs) {
        probs[*m as usize] = p;
    }
    Ok(GibbsDistribution { probs, log_partition })
}

/// Dense transition matrix of the random-scan single-site Gibbs chain.
#[derive(Clone, Debug)]
pub struct ChainMatrix {
    p: DMatrix<f64>,
    n: usize,
}

impl ChainMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn prob(&self, from: u64, to: u64) -> f64 {
        self.p[(from as usize, to as usize)]
    }

    /// One exact distribution step mu -> mu P.
    pub fn step_distribution(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let size = 1usize << self.n;
        if mu.len() != size {
            return Err(Error::DimensionMismatch(format!(
                "distribution of {} states against 2^{} matrix",
                mu.len(),
                self.n
            )));
        }
        let mut out = vec![0.0; size];
        for (i, &w) in mu.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for j in 0..size {
                out[j] += w * self.p[(i, j)];
            }
        }
        Ok(out)
    }

    /// Stationary distribution via the linear system pi (P - I) = 0 with one
    /// equation replaced by normalization.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        let size = 1usize << self.n;
        // Solve Aᵀ x = e_last where A is (P - I) with its last column set to 1.
        let mut a = self.p.transpose();
        for i in 0..size {
            a[(i, i)] -= 1.0;
        }
        for j in 0..size {
            a[(size - 1, j)] = 1.0;
        }
        let mut b = nalgebra::DVector::zeros(size);
        b[size - 1] = 1.0;
        let lu = a.lu();
        let x = lu
            .solve(&b)
            .ok_or_else(|| Error::NumericalDegeneracy("stationary solve failed".into()))?;
        Ok(x.iter().cloned().collect())
    }
}

/// Builds the exact transition matrix at fixed beta and lambda.
///
/// One step picks a site uniformly and resamples its bit from the two-point
/// conditional; self-transition mass aggregates over all sites.
pub fn exact_tpm(model: &GaussianModel, params: &CostParams) -> Result<ChainMatrix> {
    let n = model.n();
    check_cap(n, MATRIX_CAP, "transition matrix")?;
    let costs = cost_table(model, params.lambda)?;
    let size = 1usize << n;
    let mut p = DMatrix::zeros(size, size);
    let site_weight = 1.0 / n as f64;
    for b in 0..size {
        for j in 0..n {
            let b1 = b | 1 << j;
            let b0 = b & !(1 << j);
            let p1 = crate::sampler::activation_probability(params.beta, costs[b1], costs[b0]);
            p[(b, b1)] += site_weight * p1;
            p[(b, b0)] += site_weight * (1.0 - p1);
        }
    }
    Ok(ChainMatrix { p, n })
}

/// Dobrushin contraction factor (1 - e^{-beta n delta} / n^n)^l after `l`
/// sweeps of `n` single-site steps.
pub fn dobrushin_bound(beta: f64, n: usize, delta: f64, l: u32) -> f64 {
    let base = 1.0 - (-beta * n as f64 * delta).exp() / (n as f64).powi(n as i32);
    base.clamp(0.0, 1.0).powi(l as i32)
}

/// Total variation distance between two equal-length distributions.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Certified upper bound on the cost spread max |h(B) - h(A)|.
///
/// Exact by enumeration up to [`DELTA_EXACT_CAP`] sensors, otherwise the
/// safe bound tr(M) + lambda n (the error term lives in [0, tr(M)]).
pub fn delta_upper_bound(model: &GaussianModel, lambda: f64) -> Result<f64> {
    let n = model.n();
    if n <= DELTA_EXACT_CAP {
        let costs = cost_table(model, lambda)?;
        let max = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(max - min)
    } else {
        Ok(model.trace() + lambda * n as f64)
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
    fn optimum_of_independent_sensors_follows_the_price() {
        let g = identity_model(4);
        // Each sensor trades 1.0 error for lambda cost.
        let (b, c) = exhaustive_optimum(&g, 0.5).unwrap();
        assert!(b.is_full());
        assert!((c - 2.0).abs() < 1e-12);
        let (b, c) = exhaustive_optimum(&g, 1.5).unwrap();
        assert!(b.is_empty());
        assert!((c - 4.0).abs() < 1e-12);
        // Exact indifference: every config costs 4; smallest bitmask wins.
        let (b, c) = exhaustive_optimum(&g, 1.0).unwrap();
        assert_eq!(b.bits(), 0);
        assert!((c - 4.0).abs() < 1e-12);
    }

    #[test]
    fn optimum_matches_independent_brute_force() {
        // Naive loop, no cache, no shared code path with exhaustive_optimum.
        let g = GaussianModel::generate(12, 7).unwrap();
        let lambda = 2.3;
        let mut best_bits = 0u64;
        let mut best_cost = f64::INFINITY;
        for bits in 0..(1u64 << 12) {
            let c = Configuration::new(bits, 12).unwrap();
            let h = crate::cost::mmse(&g, c).unwrap() + lambda * c.popcount() as f64;
            if h < best_cost {
                best_cost = h;
                best_bits = bits;
            }
        }
        let (b, c) = exhaustive_optimum(&g, lambda).unwrap();
        assert_eq!(b.bits(), best_bits);
        assert!((c - best_cost).abs() < 1e-12);
    }

    #[test]
    fn cardinality_optimum_scans_only_the_slice() {
        let g = GaussianModel::generate(8, 5).unwrap();
        let (b, e) = exhaustive_optimum_at_cardinality(&g, 3).unwrap();
        assert_eq!(b.popcount(), 3);
        for bits in cardinality_masks(8, 3) {
            let err = mmse(&g, Configuration::new(bits, 8).unwrap()).unwrap();
            assert!(e <= err + 1e-12);
        }
    }

    #[test]
    fn single_site_distribution_is_symmetric_when_costs_tie() {
        let d = GibbsDistribution::from_costs(&[3.0, 3.0], 7.7);
        assert!((d.prob_of(0) - 0.5).abs() < 1e-12);
        assert!((d.prob_of(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn beta_zero_gives_uniform() {
        let costs = vec![0.0, 5.0, 100.0, -3.0];
        let d = GibbsDistribution::from_costs(&costs, 0.0);
        for b in 0..4 {
            assert!((d.prob_of(b) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_costs_give_geometric_weights() {
        // h = {0, 1, 2, 3} at beta = ln 2 weights states 1, 1/2, 1/4, 1/8.
        let d = GibbsDistribution::from_costs(&[0.0, 1.0, 2.0, 3.0], 2f64.ln());
        let expect = [8.0 / 15.0, 4.0 / 15.0, 2.0 / 15.0, 1.0 / 15.0];
        for (b, e) in expect.iter().enumerate() {
            assert!((d.prob_of(b as u64) - e).abs() < 1e-12, "state {b}");
        }
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((d.log_partition() - (15.0f64 / 8.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn large_beta_survives_log_domain() {
        let d = GibbsDistribution::from_costs(&[10.0, 40.0], 50.0);
        assert!(d.prob_of(0) > 1.0 - 1e-12);
        assert!(d.log_partition().is_finite());
    }

    #[test]
    fn gibbs_mass_concentrates_on_the_optimum() {
        // The mass on the minimizer is 1 / (1 + sum e^{-beta gap}), so the
        // temperature needed depends on the runner-up gap; pick beta so that
        // beta * gap = 25 and the bound 1 / (1 + 255 e^{-25}) > 0.999 applies.
        for seed in 0..20u64 {
            let g = GaussianModel::generate(8, seed).unwrap();
            let costs = cost_table(&g, 1.0).unwrap();
            let (b, best) = exhaustive_optimum(&g, 1.0).unwrap();
            let gap = costs
                .iter()
                .enumerate()
                .filter(|(bits, _)| *bits as u64 != b.bits())
                .map(|(_, c)| c - best)
                .fold(f64::INFINITY, f64::min);
            assert!(gap > 0.0, "seed {seed}: degenerate optimum");
            let params = CostParams::new(1.0, 25.0 / gap).unwrap();
            let d = exact_gibbs(&g, &params).unwrap();
            assert!(
                d.prob_of(b.bits()) >= 0.999,
                "seed {seed}: mass {} on optimum at beta {}",
                d.prob_of(b.bits()),
                params.beta
            );
        }
    }

    #[test]
    fn restricted_distribution_lives_on_its_slice() {
        let g = GaussianModel::generate(7, 9).unwrap();
        let d = exact_gibbs_restricted(&g, 2.0, 3).unwrap();
        let mut on_slice = 0.0;
        for bits in 0..(1u64 << 7) {
            if bits.count_ones() == 3 {
                on_slice += d.prob_of(bits);
            } else {
                assert_eq!(d.prob_of(bits), 0.0, "off-slice state {bits:#x}");
            }
        }
        assert!((on_slice - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_site_tpm_rows_equal_the_conditional() {
        let g = GaussianModel::new(DMatrix::from_row_slice(1, 1, &[2.0])).unwrap();
        let params = CostParams::new(0.5, 1.3).unwrap();
        // h(0) = 2, h(1) = 0.5.
        let p1 = (-(1.3) * 0.5f64).exp() / ((-(1.3) * 2.0f64).exp() + (-(1.3) * 0.5f64).exp());
        let m = exact_tpm(&g, &params).unwrap();
        for from in 0..2 {
            assert!((m.prob(from, 1) - p1).abs() < 1e-12);
            assert!((m.prob(from, 0) - (1.0 - p1)).abs() < 1e-12);
        }
    }

    #[test]
    fn near_zero_beta_tpm_splits_mass_evenly() {
        let g = GaussianModel::generate(4, 2).unwrap();
        let params = CostParams {
            lambda: 1.0,
            beta: 0.0,
        };
        let m = exact_tpm(&g, &params).unwrap();
        // Each one-flip neighbor gets 1/(2n), the rest stays on self.
        for b in 0..(1u64 << 4) {
            for j in 0..4 {
                let nb = b ^ (1 << j);
                assert!((m.prob(b, nb) - 1.0 / 8.0).abs() < 1e-12);
            }
            assert!((m.prob(b, b) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn tpm_rows_sum_to_one_and_balance_in_detail() {
        let g = GaussianModel::generate(5, 13).unwrap();
        let params = CostParams::new(0.8, 1.7).unwrap();
        let m = exact_tpm(&g, &params).unwrap();
        let d = exact_gibbs(&g, &params).unwrap();
        let size = 1usize << 5;
        for i in 0..size {
            let row: f64 = (0..size).map(|j| m.matrix()[(i, j)]).sum();
            assert!((row - 1.0).abs() < 1e-10, "row {i} sums to {row}");
        }
        for i in 0..size {
            for j in 0..size {
                let lhs = d.probs()[i] * m.matrix()[(i, j)];
                let rhs = d.probs()[j] * m.matrix()[(j, i)];
                assert!(
                    (lhs - rhs).abs() < 1e-9,
                    "detailed balance violated at ({i},{j}): {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn stationary_vector_matches_exact_gibbs() {
        for seed in [3u64, 4, 5] {
            let g = GaussianModel::generate(3, seed).unwrap();
            let params = CostParams::new(1.1, 2.0).unwrap();
            let m = exact_tpm(&g, &params).unwrap();
            let pi = m.stationary_distribution().unwrap();
            let d = exact_gibbs(&g, &params).unwrap();
            for (a, b) in pi.iter().zip(d.probs()) {
                assert!((a - b).abs() <= 1e-9, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn gibbs_measure_is_stationary_under_one_step() {
        let g = GaussianModel::generate(6, 21).unwrap();
        let params = CostParams::new(0.9, 1.5).unwrap();
        let m = exact_tpm(&g, &params).unwrap();
        let d = exact_gibbs(&g, &params).unwrap();
        let stepped = m.step_distribution(d.probs()).unwrap();
        for (a, b) in stepped.iter().zip(d.probs()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn dobrushin_bound_evaluates() {
        assert_eq!(dobrushin_bound(3.0, 1, 0.0, 1), 0.0);
        assert_eq!(dobrushin_bound(2.0, 5, 1.0, 0), 1.0);
        let b = dobrushin_bound(1.0, 2, 1.0, 1);
        assert!((b - (1.0 - (-2.0f64).exp() / 4.0)).abs() < 1e-12);
        assert!((b - 0.96617).abs() < 5e-6);
    }

    #[test]
    fn tv_distance_basics() {
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((tv_distance(&[0.5, 0.5], &[0.75, 0.25]).unwrap() - 0.25).abs() < 1e-12);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn delta_is_exact_when_enumeration_is_feasible() {
        let g = identity_model(2);
        // lambda = 1 makes h constant: {2, 2, 2, 2}.
        assert!(delta_upper_bound(&g, 1.0).unwrap().abs() < 1e-12);
        // lambda = 0.25: h in {2, 1.25, 1.25, 0.5}.
        assert!((delta_upper_bound(&g, 0.25).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn delta_bound_dominates_sampled_spreads_beyond_the_cap() {
        use rand::{Rng, SeedableRng};
        let g = GaussianModel::generate(25, 6).unwrap();
        let lambda = 1.2;
        let bound = delta_upper_bound(&g, lambda).unwrap();
        assert_eq!(bound, g.trace() + lambda * 25.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..200 {
            let bits = rng.random::<u64>() & ((1u64 << 25) - 1);
            let c = Configuration::new(bits, 25).unwrap();
            let h = mmse(&g, c).unwrap() + lambda * c.popcount() as f64;
            lo = lo.min(h);
            hi = hi.max(h);
        }
        assert!(hi - lo <= bound, "sampled spread {} above bound {bound}", hi - lo);
    }

    #[test]
    fn caps_are_enforced() {
        let g = GaussianModel::generate(13, 1).unwrap();
        let params = CostParams::new(1.0, 1.0).unwrap();
        assert!(matches!(
            exact_tpm(&g, &params),
            Err(Error::CapacityExceeded(_))
        ));
        let g = GaussianModel::generate(23, 1).unwrap();
        assert!(matches!(
            exact_gibbs(&g, &params),
            Err(Error::CapacityExceeded(_))
        ));
    }

    #[test]
    fn top_k_orders_by_probability() {
        let d = GibbsDistribution::from_costs(&[1.0, 0.0, 3.0, 2.0], 1.0);
        let top = d.top_k(2);
        assert_eq!(top[0].0, 1);
        assert_eq!(top[1].0, 0);
        assert!(top[0].1 > top[1].1);
    }
}

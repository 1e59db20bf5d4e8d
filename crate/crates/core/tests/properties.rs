//! Randomized structural properties over the whole public surface.

use actsense_core::config::{binomial, cardinality_masks, Configuration};
use actsense_core::cost::{cost, mmse, CostParams};
use actsense_core::exact::{tv_distance, GibbsDistribution};
use actsense_core::sampler::{activation_probability, run_basic_gibbs, RunBudget};
use actsense_core::GaussianModel;
use proptest::prelude::*;

fn config_strategy() -> impl Strategy<Value = Configuration> {
    (1usize..=16).prop_flat_map(|n| {
        (0u64..(1u64 << n)).prop_map(move |bits| Configuration::new(bits, n).unwrap())
    })
}

proptest! {
    #[test]
    fn flipping_twice_is_identity(config in config_strategy(), j in 0usize..16) {
        let j = j % config.n();
        prop_assert_eq!(config.flipped(j).flipped(j), config);
        prop_assert_eq!(config.hamming(&config.flipped(j)), 1);
    }

    #[test]
    fn forcing_the_current_bit_changes_nothing(config in config_strategy(), j in 0usize..16) {
        let j = j % config.n();
        prop_assert_eq!(config.with_bit(j, config.get(j)), config);
    }

    #[test]
    fn hex_and_serde_round_trip(config in config_strategy()) {
        let hex = config.to_hex();
        prop_assert_eq!(Configuration::from_hex(&hex, config.n()).unwrap(), config);
        let json = serde_json::to_string(&config).unwrap();
        let back: Configuration = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, config);
    }

    #[test]
    fn activation_probability_is_a_probability(
        beta in 0.0f64..200.0,
        h1 in -1e6f64..1e6,
        h0 in -1e6f64..1e6,
    ) {
        let p = activation_probability(beta, h1, h0);
        prop_assert!((0.0..=1.0).contains(&p), "p = {p}");
        // Swapping the two costs must give the complementary probability.
        let q = activation_probability(beta, h0, h1);
        prop_assert!((p + q - 1.0).abs() < 1e-12, "p {p} + q {q} != 1");
        if h1 > h0 && beta > 0.0 {
            prop_assert!(p <= 0.5, "dearer activation cannot be favored");
        }
    }

    #[test]
    fn gibbs_weights_are_a_distribution_at_any_scale(
        n in 1usize..=6,
        beta in 0.0f64..100.0,
        offset in -1e6f64..1e6,
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let costs: Vec<f64> = (0..(1usize << n))
            .map(|_| offset + rng.random::<f64>() * 10.0)
            .collect();
        let d = GibbsDistribution::from_costs(&costs, beta);
        prop_assert!(d.probs().iter().all(|p| *p >= 0.0));
        let total: f64 = d.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "total {total}");
        prop_assert!(d.log_partition().is_finite());
        // A constant shift must not move the distribution. The slack
        // covers rounding of the shifted costs themselves, which beta
        // amplifies: one ulp of a 1e6-scale cost times beta = 100.
        let shifted: Vec<f64> = costs.iter().map(|c| c + 123.456).collect();
        let d2 = GibbsDistribution::from_costs(&shifted, beta);
        for (a, b) in d.probs().iter().zip(d2.probs()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn counting_masks_agrees_with_binomial(n in 1usize..=18, k_raw in 0usize..=18) {
        let k = k_raw.min(n);
        let count = cardinality_masks(n, k).count() as u128;
        prop_assert_eq!(count, binomial(n, k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn activating_more_sensors_never_hurts(
        n in 2usize..=6,
        seed in 0u64..64,
        bits in 0u64..64,
        extra in 0u64..64,
    ) {
        let g = GaussianModel::generate(n, seed).unwrap();
        let mask = (1u64 << n) - 1;
        let a = Configuration::new(bits & mask, n).unwrap();
        let b = Configuration::new((bits | extra) & mask, n).unwrap();
        let ea = mmse(&g, a).unwrap();
        let eb = mmse(&g, b).unwrap();
        prop_assert!(eb <= ea + 1e-9, "superset error {eb} above subset error {ea}");
        prop_assert!(ea >= 0.0 && eb >= 0.0);
    }

    #[test]
    fn relabeling_sensors_relabels_costs(
        seed in 0u64..64,
        bits in 0u64..32,
        swap in (0usize..5, 0usize..5),
    ) {
        // Conjugating the covariance by a transposition must carry the
        // cost of every configuration along with it.
        let n = 5;
        let g = GaussianModel::generate(n, seed).unwrap();
        let (i, j) = swap;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(i, j);
        let mut pm = nalgebra::DMatrix::zeros(n, n);
        for (row, &p) in perm.iter().enumerate() {
            pm[(row, p)] = 1.0;
        }
        let permuted = GaussianModel::new(&pm * g.covariance() * pm.transpose()).unwrap();
        let config = Configuration::new(bits, n).unwrap();
        let mapped_bits = (0..n).fold(0u64, |acc, row| {
            if config.get(perm[row]) { acc | 1 << row } else { acc }
        });
        let mapped = Configuration::new(mapped_bits, n).unwrap();
        let params = CostParams::new(0.7, 1.0).unwrap();
        let a = cost(&g, &params, config).unwrap();
        let b = cost(&permuted, &params, mapped).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "cost {a} moved to {b} under relabeling");
    }

    #[test]
    fn chains_are_reproducible(
        n in 2usize..=5,
        seed in 0u64..500,
        beta in 0.1f64..20.0,
        lambda in 0.0f64..3.0,
    ) {
        let g = GaussianModel::generate(n, seed).unwrap();
        let budget = RunBudget::new(200, seed ^ 0xABCD);
        let a = run_basic_gibbs(&g, lambda, beta, &budget).unwrap();
        let b = run_basic_gibbs(&g, lambda, beta, &budget).unwrap();
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(a.state.config, b.state.config);
    }

    #[test]
    fn tv_distance_is_a_bounded_metric(
        seed in 0u64..1000,
        len in 1usize..64,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-12).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect::<Vec<f64>>()
        };
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let d = tv_distance(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((tv_distance(&q, &p).unwrap() - d).abs() < 1e-15);
        prop_assert!(tv_distance(&p, &p).unwrap() == 0.0);
    }
}

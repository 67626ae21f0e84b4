//! Property tests for the structural invariants of the pipeline.

use proptest::prelude::*;

use restless_core::exact::{binomial_min_mean, binomial_pmf};
use restless_core::fixtures;
use restless_core::meanfield::build_map;
use restless_core::model::zone_of;
use restless_core::Instance;

fn simplex_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..1.0, d).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    })
}

proptest! {
    #[test]
    fn zone_satisfies_the_sandwich(
        m in (2usize..6).prop_flat_map(simplex_point),
        alpha in 1e-6f64..0.999999,
    ) {
        let s = zone_of(&m, alpha);
        let before: f64 = m[..s].iter().sum();
        let through = before + m[s];
        prop_assert!(before <= alpha + 1e-12);
        prop_assert!(alpha < through + 1e-12);
    }

    #[test]
    fn map_preserves_simplex_and_lipschitz_bound(
        m in simplex_point(3),
        m2 in simplex_point(3),
        alpha in 0.05f64..0.95,
    ) {
        let inst = Instance::new(fixtures::three_state_attracting(), alpha).unwrap();
        let map = build_map(&inst).unwrap();
        let img = map.apply(&m);
        prop_assert!((img.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(img.iter().all(|&v| v >= -1e-12));
        let img2 = map.apply(&m2);
        let dist_in = m.iter().zip(&m2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dist_out = img.iter().zip(&img2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(dist_out <= map.lipschitz_bound() * dist_in + 1e-12);
    }

    #[test]
    fn binomial_pmf_is_a_distribution(n in 0u64..200, p in 1e-9f64..1.0) {
        let pmf = binomial_pmf(n, p);
        prop_assert_eq!(pmf.len(), n as usize + 1);
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pmf.iter().all(|&v| v >= 0.0));
        let mean = n as f64 * p;
        let capped = binomial_min_mean(n, p, 0.5 * n as f64);
        prop_assert!(capped <= mean.min(0.5 * n as f64) + 1e-9);
        prop_assert!(capped <= binomial_min_mean(n, p, n as f64) + 1e-12);
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereo_core::stats::{weighted_kappa, ConfusionMatrix, WeightScheme};

/// Kappa through disagreement weights: 1 - sum(v * p_obs) / sum(v * p_row * p_col).
fn direct_kappa(n: usize, counts: &[u64], scheme: WeightScheme) -> f64 {
    let total: u64 = counts.iter().sum();
    let t = total as f64;
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            rows[i] += counts[i * n + j] as f64 / t;
            cols[j] += counts[i * n + j] as f64 / t;
        }
    }
    let v = |i: usize, j: usize| {
        let d = (i as f64 - j as f64).abs() / (n - 1) as f64;
        match scheme {
            WeightScheme::Linear => d,
            WeightScheme::Quadratic => d * d,
        }
    };
    let (mut observed, mut chance) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            observed += v(i, j) * counts[i * n + j] as f64 / t;
            chance += v(i, j) * rows[i] * cols[j];
        }
    }
    1.0 - observed / chance
}

#[test]
fn three_by_three_example() {
    let counts = vec![6, 1, 0, 2, 8, 1, 0, 2, 10];
    let m = ConfusionMatrix::new(3, counts.clone()).unwrap();
    let quad = weighted_kappa(&m, WeightScheme::Quadratic).unwrap().kappa;
    let lin = weighted_kappa(&m, WeightScheme::Linear).unwrap().kappa;
    // Exact rationals: 31/37 and 146/191.
    assert!((quad - 31.0 / 37.0).abs() < 1e-12);
    assert!((lin - 146.0 / 191.0).abs() < 1e-12);
    assert!((quad - direct_kappa(3, &counts, WeightScheme::Quadratic)).abs() < 1e-12);
}

#[test]
fn random_matrices_match_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b61_7070_61);
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.random_range(2..=11);
        let counts: Vec<u64> = (0..n * n).map(|_| rng.random_range(0..12)).collect();
        let m = ConfusionMatrix::new(n, counts.clone()).unwrap();
        for scheme in [WeightScheme::Linear, WeightScheme::Quadratic] {
            let Ok(r) = weighted_kappa(&m, scheme) else { continue };
            let oracle = direct_kappa(n, &counts, scheme);
            assert!((r.kappa - oracle).abs() < 1e-12, "n={n} {scheme:?}: {} vs {oracle}", r.kappa);
        }
        checked += 1;
    }
}

#[test]
fn published_interval_is_clipped() {
    // Small near-perfect tables push the upper bound past 1.
    let m = ConfusionMatrix::new(3, vec![5, 1, 0, 0, 4, 0, 0, 0, 3]).unwrap();
    let r = weighted_kappa(&m, WeightScheme::Quadratic).unwrap();
    assert_eq!(r.ci95_high, 1.0);
    assert!(r.ci95_low < r.kappa);
}

fn matrix() -> impl Strategy<Value = (usize, Vec<u64>)> {
    (2usize..=8).prop_flat_map(|n| (Just(n), prop::collection::vec(0u64..20, n * n)))
}

proptest! {
    #[test]
    fn transpose_leaves_kappa_unchanged((n, counts) in matrix()) {
        let m = ConfusionMatrix::new(n, counts).unwrap();
        for scheme in [WeightScheme::Linear, WeightScheme::Quadratic] {
            if let Ok(a) = weighted_kappa(&m, scheme) {
                let b = weighted_kappa(&m.transpose(), scheme).unwrap();
                prop_assert!((a.kappa - b.kappa).abs() < 1e-12);
                prop_assert!((a.se - b.se).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_categories_schemes_coincide(counts in prop::collection::vec(0u64..50, 4)) {
        let m = ConfusionMatrix::new(2, counts).unwrap();
        match (weighted_kappa(&m, WeightScheme::Linear), weighted_kappa(&m, WeightScheme::Quadratic)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.kappa, b.kappa),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn diagonal_is_perfect(diag in prop::collection::vec(1u64..30, 2..8)) {
        let n = diag.len();
        let mut counts = vec![0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            counts[i * n + i] = d;
        }
        let m = ConfusionMatrix::new(n, counts).unwrap();
        for scheme in [WeightScheme::Linear, WeightScheme::Quadratic] {
            prop_assert!((weighted_kappa(&m, scheme).unwrap().kappa - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn independence_is_zero(rows in prop::collection::vec(1u64..10, 3), cols in prop::collection::vec(1u64..10, 3)) {
        let counts = rows.iter().flat_map(|r| cols.iter().map(move |c| r * c)).collect();
        let m = ConfusionMatrix::new(3, counts).unwrap();
        for scheme in [WeightScheme::Linear, WeightScheme::Quadratic] {
            prop_assert!(weighted_kappa(&m, scheme).unwrap().kappa.abs() < 1e-12);
        }
    }
}

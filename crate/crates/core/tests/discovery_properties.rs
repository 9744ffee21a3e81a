use mdpu::discovery::{
    certificate_points, classify, exploration_threshold, psi, sample_discovery, DiscoveryKind, DiscoveryModel,
    PsiClass, Tail,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model_strategy() -> impl Strategy<Value = DiscoveryModel> {
    prop_oneof![
        (0.001f64..=1.0).prop_map(DiscoveryModel::constant),
        (0.001f64..=1.0, 0.0f64..3.0).prop_map(|(c, p)| DiscoveryModel::power_law(c, p)),
        (1u64..500).prop_flat_map(|total| (Just(total), 1..=total)).prop_map(|(total, useful)| {
            DiscoveryModel::new(DiscoveryKind::BruteForceRandom { total, useful }).unwrap()
        }),
        proptest::collection::vec(0.0f64..=1.0, 1..20).prop_map(|values| {
            DiscoveryModel::new(DiscoveryKind::Table { values, tail: Some(Tail::Constant { beta: 0.2 }) }).unwrap()
        }),
    ]
}

/// `D(1, t)` summed term by term.
fn direct_sum(model: &DiscoveryModel, from: u64, to: u64) -> f64 {
    (from..=to).map(|t| model.probability(1, t)).sum()
}

proptest! {
    #[test]
    fn psi_is_monotone_and_additive(model in model_strategy(), t1 in 0u64..300, t2 in 0u64..300) {
        let a = psi(&model, t1);
        let b = psi(&model, t1 + t2);
        prop_assert!(b >= a - 1e-12);
        let tail = direct_sum(&model, t1 + 1, t1 + t2);
        prop_assert!((b - (a + tail)).abs() <= 1e-9 * b.max(1.0));
    }

    #[test]
    fn classes_are_consistent(model in model_strategy()) {
        match classify(&model) {
            PsiClass::Impossible { psi_bound } => {
                prop_assert!(psi(&model, 1_000_000) < psi_bound + 1e-12);
            }
            PsiClass::PolynomialTime { m1, m2 } => {
                for t in certificate_points() {
                    prop_assert!(psi(&model, t) >= m1 * (t as f64).ln() + m2 - 1e-9, "T = {t}");
                }
            }
            PsiClass::PossibleNotPoly { .. } | PsiClass::UnknownBeyondHorizon { .. } => {}
        }
    }

    #[test]
    fn threshold_is_the_least_crossing(beta in 0.01f64..=1.0, n in 1u64..1000, delta in 0.01f64..0.99) {
        let model = DiscoveryModel::constant(beta);
        let t = exploration_threshold(&model, n, delta).unwrap();
        let target = (4.0 * n as f64 / delta).ln();
        prop_assert!(direct_sum(&model, 1, t) >= target - 1e-9);
        prop_assert!(t == 1 || direct_sum(&model, 1, t - 1) < target);
    }

    #[test]
    fn larger_j_never_lowers_discovery(model in model_strategy(), j in 1u64..20, t in 1u64..100) {
        prop_assert!(model.probability(j + 1, t) >= model.probability(j, t) - 1e-15);
    }
}

#[test]
fn first_success_time_is_geometric() {
    for beta in [0.1, 0.3, 0.5] {
        let model = DiscoveryModel::constant(beta);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let runs = 10_000;
        let mut total = 0u64;
        for _ in 0..runs {
            let mut t = 1;
            while !sample_discovery(&model, 1, t, &mut rng) {
                t += 1;
            }
            total += t;
        }
        let mean = total as f64 / runs as f64;
        assert!((mean - 1.0 / beta).abs() <= 0.05 / beta, "beta {beta}: mean {mean}");
    }
}

#[test]
fn half_probability_frequency() {
    let model = DiscoveryModel::constant(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let hits = (0..100_000).filter(|_| sample_discovery(&model, 1, 1, &mut rng)).count();
    assert!((hits as f64 / 1e5 - 0.5).abs() <= 0.01, "{hits}");
    assert!((0..1000).all(|t| !sample_discovery(&model, 0, t + 1, &mut rng)));
}

#[test]
fn systematic_scan_hits_exactly_the_useful_positions() {
    let model =
        DiscoveryModel::new(DiscoveryKind::BruteForceSystematic { total: 6, useful: 2, positions: Some(vec![3, 5]) })
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let hits: Vec<u64> = (1..=6).filter(|&t| sample_discovery(&model, 2, t, &mut rng)).collect();
    assert_eq!(hits, vec![3, 5]);
}

#[test]
fn systematic_coverage_in_exactly_total_steps() {
    for (total, useful) in [(10u64, 3u64), (340, 116), (7, 7), (50, 1)] {
        let model =
            DiscoveryModel::new(DiscoveryKind::BruteForceSystematic { total, useful, positions: None }).unwrap();
        let positions = model.useful_positions().unwrap();
        assert_eq!(positions.len() as u64, useful);
        assert!(positions.iter().all(|&p| (1..=total).contains(&p)));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut hidden = useful;
        let mut last = 0;
        for t in 1..=total {
            if hidden > 0 && sample_discovery(&model, hidden, t, &mut rng) {
                hidden -= 1;
                last = t;
            }
        }
        assert_eq!(hidden, 0);
        assert_eq!(last, *positions.last().unwrap());
    }
}

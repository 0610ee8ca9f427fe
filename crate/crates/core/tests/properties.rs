use factorial_gsa::divergence::Contrast;
use factorial_gsa::effects::{
    dual_effect_table, effect_coefficients, effect_table, generic_table, weighted_effect,
    weighted_effect_linear,
};
use factorial_gsa::input::{InputDistribution, Marginal};
use factorial_gsa::lattice::{delta, dual, mobius_inverse, mobius_transform, LatticeMap, SubsetMask};
use factorial_gsa::models::{exact_tau, ModelSpec, Term};
use factorial_gsa::weights::{parse_weight_table, WeightFamily};
use factorial_gsa::Divergence;
use proptest::prelude::*;

fn close(x: f64, y: f64, scale: f64) -> bool {
    (x - y).abs() <= 1e-10 * scale.max(1.0)
}

/// A map on `d` inputs with `τ(∅) = 0`.
fn map_strategy(max_dim: usize) -> impl Strategy<Value = LatticeMap> {
    (1..=max_dim).prop_flat_map(|d| {
        prop::collection::vec(0.0..10.0f64, 1usize << d).prop_map(move |mut v| {
            v[0] = 0.0;
            LatticeMap::new(d, v).unwrap()
        })
    })
}

fn map_and_subset(max_dim: usize) -> impl Strategy<Value = (LatticeMap, SubsetMask)> {
    map_strategy(max_dim).prop_flat_map(|tau| {
        let d = tau.dim();
        (Just(tau), 0..1u32 << d).prop_map(move |(tau, bits)| {
            let idx: Vec<usize> = (1..=d).filter(|i| bits & (1 << (i - 1)) != 0).collect();
            (tau, SubsetMask::from_indices(&idx, d).unwrap())
        })
    })
}

fn permuted(mask: SubsetMask, perm: &[usize]) -> SubsetMask {
    let idx: Vec<usize> = mask.indices().map(|i| perm[i - 1]).collect();
    SubsetMask::from_indices(&idx, mask.dim()).unwrap()
}

fn named_families(d: usize) -> Vec<WeightFamily> {
    vec![
        WeightFamily::uniform(d).unwrap(),
        WeightFamily::mobius(d).unwrap(),
        WeightFamily::shapley(d).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_commutes_with_relabelling(
        (tau, b) in map_and_subset(6),
        perm_seed in any::<u64>(),
        a_bits in any::<u32>(),
    ) {
        let d = tau.dim();
        let mut perm: Vec<usize> = (1..=d).collect();
        // deterministic Fisher-Yates from the seed
        let mut s = perm_seed;
        for i in (1..d).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a_idx: Vec<usize> = b.complement().indices().filter(|i| a_bits & (1 << (i - 1)) != 0).collect();
        let a = SubsetMask::from_indices(&a_idx, d).unwrap();
        let relabelled = tau.relabel(&perm).unwrap();
        let lhs = delta(&relabelled, permuted(b, &perm), permuted(a, &perm)).unwrap();
        let rhs = delta(&tau, b, a).unwrap();
        prop_assert!(close(lhs, rhs, tau.max_abs() * (1 << d) as f64));
    }

    #[test]
    fn symmetric_families_commute_with_relabelling((tau, b) in map_and_subset(5)) {
        let d = tau.dim();
        let perm: Vec<usize> = (1..=d).rev().collect();
        let relabelled = tau.relabel(&perm).unwrap();
        for w in named_families(d) {
            let lhs = weighted_effect_linear(&relabelled, permuted(b, &perm), &w).unwrap();
            let rhs = weighted_effect_linear(&tau, b, &w).unwrap();
            prop_assert!(close(lhs, rhs, tau.max_abs()), "{}", w.id());
        }
    }

    #[test]
    fn mobius_roundtrip(values in (1usize..=10).prop_flat_map(|d| prop::collection::vec(-1e3..1e3f64, 1usize << d))) {
        let d = values.len().trailing_zeros() as usize;
        let tau = LatticeMap::new(d, values).unwrap();
        let back = mobius_inverse(&mobius_transform(&tau));
        prop_assert!(back.max_abs_diff(&tau).unwrap().0 <= 1e-12 * tau.max_abs().max(1.0) * (1 << d) as f64);
        let forward = mobius_transform(&mobius_inverse(&tau));
        prop_assert!(forward.max_abs_diff(&tau).unwrap().0 <= 1e-12 * tau.max_abs().max(1.0) * (1 << d) as f64);
    }

    #[test]
    fn duality_is_an_involution(tau in map_strategy(8)) {
        let twice = dual(&dual(&tau));
        prop_assert!(twice.max_abs_diff(&tau).unwrap().0 <= 1e-12 * tau.max_abs().max(1.0));
        let once = dual(&tau);
        prop_assert_eq!(once.empty_value(), 0.0);
        prop_assert_eq!(once.full_value(), tau.full_value());
    }

    #[test]
    fn recursive_and_linear_forms_agree((tau, b) in map_and_subset(7)) {
        let d = tau.dim();
        let mut families = named_families(d);
        families.push(WeightFamily::ordered_marginal(&(1..=d).collect::<Vec<_>>()).unwrap());
        for w in families {
            let r = weighted_effect(&tau, b, &w).unwrap();
            let l = weighted_effect_linear(&tau, b, &w).unwrap();
            prop_assert!(close(r, l, tau.max_abs()), "{} {r} {l}", w.id());
        }
    }

    #[test]
    fn fast_tables_match_generic(tau in map_strategy(7)) {
        let d = tau.dim();
        for w in named_families(d) {
            let fast = effect_table(&tau, &w).unwrap().effects;
            let slow = generic_table(&tau, &w);
            prop_assert!(fast.max_abs_diff(&slow).unwrap().0 <= 1e-10 * tau.max_abs().max(1.0), "{}", w.id());
        }
        let mobius = effect_table(&tau, &WeightFamily::mobius(d).unwrap()).unwrap().effects;
        prop_assert!(mobius.max_abs_diff(&mobius_transform(&tau)).unwrap().0 == 0.0);
    }

    #[test]
    fn dual_coefficients_match_dual_table((tau, b) in map_and_subset(6)) {
        let d = tau.dim();
        for w in named_families(d) {
            let c = effect_coefficients(&w, b, true);
            let via_coeffs: f64 = c.iter().zip(tau.values()).map(|(x, t)| x * t).sum();
            let table = dual_effect_table(&tau, &w).unwrap();
            prop_assert!(close(via_coeffs, table.get(b), tau.max_abs()));
        }
    }

    #[test]
    fn shapley_effects_sum_to_total(tau in map_strategy(8)) {
        let d = tau.dim();
        let w = WeightFamily::shapley(d).unwrap();
        let sum: f64 = effect_table(&tau, &w).unwrap().singletons().iter().sum();
        prop_assert!(close(sum, tau.full_value(), tau.max_abs()));
    }

    #[test]
    fn named_families_are_valid(d in 1usize..=9) {
        for w in named_families(d) {
            prop_assert!(w.validate().passed, "{}", w.id());
        }
        prop_assert!(WeightFamily::shapley(d).unwrap().check_shapley_condition().passed);
    }

    #[test]
    fn weight_table_roundtrip(d in 1usize..=4, order_seed in any::<u8>()) {
        let mut order: Vec<usize> = (1..=d).collect();
        order.rotate_left(order_seed as usize % d);
        for w in [WeightFamily::shapley(d).unwrap(), WeightFamily::ordered_marginal(&order).unwrap()] {
            let text = w.to_weight_table();
            let back = WeightFamily::custom(d, parse_weight_table(&text, d).unwrap()).unwrap();
            for ((b1, a1, x), (b2, a2, y)) in w.entries().into_iter().zip(back.entries()) {
                prop_assert_eq!((b1, a1), (b2, a2));
                prop_assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn mask_literals_roundtrip(d in 1usize..=12, bits in any::<u32>()) {
        let idx: Vec<usize> = (1..=d).filter(|i| bits & (1 << (i - 1)) != 0).collect();
        let m = SubsetMask::from_indices(&idx, d).unwrap();
        prop_assert_eq!(SubsetMask::parse(&m.to_string(), d).unwrap(), m);
        prop_assert_eq!(SubsetMask::from_design_index(m.design_index(), d).unwrap(), m);
    }

    #[test]
    fn exact_tau_is_monotone_under_nesting(
        coeffs in prop::collection::vec(-3.0..3.0f64, 1..=5),
        squares in prop::collection::vec(-2.0..2.0f64, 1..=5),
    ) {
        let d = coeffs.len();
        let mut terms: Vec<Term> = coeffs.iter().enumerate().map(|(i, &c)| {
            let mut e = vec![0; d];
            e[i] = 1;
            Term { coefficient: c, exponents: e }
        }).collect();
        for (i, &s) in squares.iter().enumerate().take(d) {
            let mut e = vec![0; d];
            e[i] = 2;
            e[(i + 1) % d] += 1;
            terms.push(Term { coefficient: s, exponents: e });
        }
        let model = ModelSpec::Polynomial { dim: d, terms };
        let dist = InputDistribution::independent(
            (0..d).map(|i| if i % 2 == 0 { Marginal::uniform(-1.0, 2.0) } else { Marginal::normal(0.5, 1.5) }).collect(),
        ).unwrap();
        let tau: Vec<f64> = SubsetMask::all(d).unwrap()
            .map(|a| exact_tau(&model, &dist, Divergence::SquaredHalf, a).unwrap())
            .collect();
        for a in SubsetMask::all(d).unwrap() {
            prop_assert!(tau[a.index()] >= -1e-9 * tau[tau.len() - 1].abs().max(1.0));
            for b in SubsetMask::all(d).unwrap().filter(|b| a.is_subset_of(*b)) {
                prop_assert!(tau[a.index()] <= tau[b.index()] + 1e-9 * tau[b.index()].abs().max(1.0));
            }
        }
    }

    #[test]
    fn empirical_minimizers_are_optimal(
        sample in prop::collection::vec(-100.0..100.0f64, 1..60),
        theta in -120.0..120.0f64,
        alpha in 0.01..0.99f64,
    ) {
        for c in [Contrast::Mean, Contrast::Median, Contrast::quantile(alpha).unwrap()] {
            let best = c.empirical_minimizer(&sample).unwrap();
            let at_best = c.empirical_contrast_value(&sample, best).unwrap();
            let elsewhere = c.empirical_contrast_value(&sample, theta).unwrap();
            prop_assert!(at_best <= elsewhere + 1e-9 * elsewhere.abs().max(1.0), "{c:?}");
        }
    }
}

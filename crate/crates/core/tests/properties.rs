//! Property tests across module boundaries, checked against brute force.

use std::collections::HashMap;

use helson::circuits::{expected_trace_rademacher_with, solution_count_with, SolveMode};
use helson::numtheory::{distinct_products, mult_multiplicity, MultiplicityTable};
use helson::pattern::{check_coordinatewise_injectivity, check_symmetry, level_set_summary_with, InjectivityCheck, SymmetryCheck};
use helson::sampler::{build_matrix_with, build_truncated_pair};
use helson::spectra::{eigenvalues, Esd};
use helson::words::{enumerate_partition_words, is_catalan, reduce, reduce_with};
use helson::{Alpha, EntryDistribution, Execution, PatternMap, Word};
use proptest::prelude::*;

fn any_map() -> impl Strategy<Value = PatternMap> {
    prop_oneof![
        Just(PatternMap::Mul),
        Just(PatternMap::Additive),
        (0u64..6, 1u64..4).prop_map(|(a, b)| PatternMap::SAlpha(Alpha::rational(a, b).unwrap())),
        (0.0f64..5.0).prop_map(|a| PatternMap::SAlpha(Alpha::irrational(a).unwrap())),
    ]
}

fn any_dist() -> impl Strategy<Value = EntryDistribution> {
    prop_oneof![
        Just(EntryDistribution::Gaussian),
        Just(EntryDistribution::Rademacher),
        Just(EntryDistribution::Uniform),
        (0.1f64..1.0).prop_map(|eps0| EntryDistribution::HeavyTail { eps0 }),
    ]
}

fn partition_word() -> impl Strategy<Value = Word> {
    (0usize..=3).prop_flat_map(|k| {
        let words = enumerate_partition_words(k).unwrap();
        proptest::sample::select(words)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn maps_satisfy_symmetry_and_injectivity(map in any_map(), n in 1u64..30) {
        prop_assert_eq!(check_symmetry(&map, n).unwrap(), SymmetryCheck::Pass);
        prop_assert_eq!(check_coordinatewise_injectivity(&map, n).unwrap(), InjectivityCheck::Pass);
        for x in 1..=n.min(5) {
            prop_assert_eq!(map.evaluate(x, n).unwrap(), map.evaluate(x, n).unwrap());
        }
    }

    #[test]
    fn level_sets_match_quadruple_enumeration(map in any_map(), n in 1u64..9) {
        let s = level_set_summary_with(&map, n, Execution::Parallel).unwrap();
        prop_assert_eq!(&s, &level_set_summary_with(&map, n, Execution::Sequential).unwrap());
        prop_assert_eq!(s.sizes.iter().sum::<u64>(), n * n);
        let mut by_label = HashMap::new();
        for x in 1..=n {
            for y in 1..=n {
                *by_label.entry(map.evaluate(x, y).unwrap()).or_insert(0u128) += 1;
            }
        }
        let brute: u128 = by_label.values().map(|c| c * c).sum();
        prop_assert_eq!(s.quadruple_count, brute);
    }

    #[test]
    fn reduction_result_is_order_independent(w in partition_word(), picks in proptest::collection::vec(any::<usize>(), 8)) {
        let mut it = picks.into_iter().cycle();
        let other = reduce_with(&w, |c| it.next().unwrap() % c.len());
        let leftmost = reduce(&w);
        prop_assert_eq!(&other.final_word, &leftmost.final_word);
        prop_assert!(leftmost.final_word.double_letter_positions().is_empty());
        prop_assert_eq!(reduce(&leftmost.final_word).final_word, leftmost.final_word.clone());
        prop_assert_eq!(is_catalan(&w).unwrap().counts_as_catalan(), leftmost.final_word.is_empty());
    }

    #[test]
    fn solver_matches_brute_force(w in partition_word(), map in any_map(), n in 1u64..6) {
        let s = solution_count_with(&w, &map, n, SolveMode::Solver, Execution::Parallel).unwrap();
        let b = solution_count_with(&w, &map, n, SolveMode::Brute, Execution::Sequential).unwrap();
        prop_assert_eq!(s.count, b.count);
        if is_catalan(&w).unwrap().counts_as_catalan() {
            prop_assert_eq!(s.count, (n as u128).pow(w.len() as u32 / 2 + 1));
        }
    }

    #[test]
    fn rademacher_trace_counts_even_circuits(map in any_map(), n in 1u64..5, r in 1usize..5) {
        let par = expected_trace_rademacher_with(&map, n, r, Execution::Parallel).unwrap();
        prop_assert_eq!(par, expected_trace_rademacher_with(&map, n, r, Execution::Sequential).unwrap());
        if r % 2 == 1 {
            prop_assert_eq!(par, 0);
        }
        if r == 2 {
            prop_assert_eq!(par, n * n);
        }
    }

    #[test]
    fn multiplicities_sum_to_table_size(n in 1u64..80) {
        let t = MultiplicityTable::new(n).unwrap();
        let a = distinct_products(n).unwrap();
        prop_assert_eq!(t.total(), n * n);
        prop_assert_eq!(t.cardinality(), a.cardinality);
        for k in [1, n, n * n, n * n + 1] {
            prop_assert_eq!(t.get(k), mult_multiplicity(k, n));
            prop_assert_eq!(a.contains(k), mult_multiplicity(k, n) > 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn matrices_are_symmetric_label_constant_and_reproducible(
        map in any_map(), dist in any_dist(), n in 1u64..25, seed in any::<u64>()
    ) {
        let a = build_matrix_with(&map, n, &dist, seed, Execution::Parallel).unwrap();
        let b = build_matrix_with(&map, n, &dist, seed, Execution::Sequential).unwrap();
        prop_assert_eq!(&a.matrix, &b.matrix);
        let mut seen = HashMap::new();
        for i in 1..=n as usize {
            for j in 1..=n as usize {
                prop_assert_eq!(a.entry(i, j).to_bits(), a.entry(j, i).to_bits());
                let v = *seen.entry(map.evaluate(i as u64, j as u64).unwrap()).or_insert(a.entry(i, j));
                prop_assert_eq!(v.to_bits(), a.entry(i, j).to_bits());
            }
        }
    }

    #[test]
    fn truncated_entries_are_bounded(dist in any_dist(), n in 2u64..20, seed in any::<u64>(), u in 1.5f64..6.0) {
        let (_, hat) = build_truncated_pair(&PatternMap::Mul, n, &dist, u, seed).unwrap();
        let t = helson::sampler::truncation_params(&dist, u).unwrap();
        let bound = t.hat_bound() + 1e-12;
        prop_assert!(hat.matrix.iter().all(|x| x.abs() <= bound));
    }

    #[test]
    fn esd_moments_are_normalized_traces(map in any_map(), n in 1u64..20, seed in any::<u64>()) {
        let m = build_matrix_with(&map, n, &EntryDistribution::Gaussian, seed, Execution::Sequential).unwrap();
        let e = Esd::from_matrix(&m.matrix).unwrap();
        let lam = eigenvalues(&m.matrix).unwrap();
        prop_assert!(lam.windows(2).all(|w| w[0] <= w[1]));
        let squares: f64 = m.matrix.iter().map(|x| x * x).sum();
        let m2 = squares / (n as f64).powi(2);
        prop_assert!((e.moment(2) - m2).abs() <= 1e-9 * m2.max(1.0));
        prop_assert_eq!(e.cdf(f64::INFINITY), 1.0);
        prop_assert_eq!(e.cdf(f64::NEG_INFINITY), 0.0);
        for x in e.values() {
            prop_assert!(e.cdf_left(*x) < e.cdf(*x));
        }
    }
}

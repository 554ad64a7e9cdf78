//! Cross-module invariants over randomized inputs: graph round-trips,
//! edit-distance metric properties, candidate-set losses, and clustering
//! distortion.

mod common;

use std::collections::BTreeSet;

use cookir_core::graph::{
    from_graph, is_valid_sequence, linear_extensions, to_graph, FunctionDag, DEFAULT_ENUM_CAP,
};
use cookir_core::ir::{tokenize_program, validate_program, SymbolTable};
use cookir_core::losses::{cross_entropy, min_ce_over_candidates, PredictedSequence};
use cookir_core::metrics::{graph_edit_distance, EditCostModel, GedMode};
use cookir_core::taxonomy::{kmeans_with_trace, FeatureTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn from_graph_to_graph_is_isomorphic_identity() {
    let vocab = common::small_vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..50 {
        let p = common::random_program(&mut rng, &vocab, 6, true);
        let g = to_graph(&p).unwrap();
        g.validate()
            .unwrap_or_else(|e| panic!("round {round}: connected program lowers cleanly: {e}"));
        let q = from_graph(&g).unwrap();
        assert!(validate_program(&q).is_valid(), "round {round}");
        let g2 = to_graph(&q).unwrap();
        assert!(
            common::graphs_isomorphic(&g, &g2),
            "round {round}: graphs differ\n{g:?}\n{g2:?}"
        );
    }
}

#[test]
fn all_orders_partition_into_valid_and_invalid() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dag = common::random_dag(&mut rng, 6, 0.3);
    let valid = common::oracle_linear_extensions(&dag);
    let enumerated: BTreeSet<Vec<usize>> = linear_extensions(&dag, 50_000)
        .unwrap()
        .orderings
        .into_iter()
        .collect();
    assert_eq!(enumerated, valid);
    // 6! orders split exactly into members and non-members.
    let mut total = 0usize;
    let mut perm: Vec<usize> = (0..6).collect();
    loop {
        let ok = is_valid_sequence(&dag, &perm).unwrap();
        assert_eq!(ok, enumerated.contains(&perm));
        total += 1;
        let mut i = 5usize;
        while i > 0 && perm[i - 1] >= perm[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = 5;
        while perm[j] <= perm[i - 1] {
            j -= 1;
        }
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    assert_eq!(total, 720);
}

#[test]
fn ged_triangle_inequality_on_sampled_triples() {
    let costs = EditCostModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for round in 0..40 {
        let a = common::random_cooking_graph(&mut rng, 5);
        let b = common::random_cooking_graph(&mut rng, 5);
        let c = common::random_cooking_graph(&mut rng, 5);
        let ab = graph_edit_distance(&a, &b, &costs, GedMode::Exact).unwrap();
        let bc = graph_edit_distance(&b, &c, &costs, GedMode::Exact).unwrap();
        let ac = graph_edit_distance(&a, &c, &costs, GedMode::Exact).unwrap();
        assert!(ac <= ab + bc + 1e-9, "round {round}: {ac} > {ab} + {bc}");
    }
}

#[test]
fn beam_upper_bounds_exact_and_converges() {
    let costs = EditCostModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for round in 0..25 {
        let a = common::random_cooking_graph(&mut rng, 6);
        let b = common::random_cooking_graph(&mut rng, 6);
        let exact = graph_edit_distance(&a, &b, &costs, GedMode::Exact).unwrap();
        for width in [1usize, 4, 16] {
            let beam = graph_edit_distance(&a, &b, &costs, GedMode::Beam(width)).unwrap();
            assert!(beam >= exact - 1e-9, "round {round} width {width}");
        }
        // A width covering every matching makes the beam exhaustive.
        let saturated = graph_edit_distance(&a, &b, &costs, GedMode::Beam(1_000_000)).unwrap();
        assert!(
            (saturated - exact).abs() <= 1e-9,
            "round {round}: saturated beam should be exact"
        );
    }
}

#[test]
fn exact_ged_matches_oracle_under_random_cost_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for round in 0..40 {
        let ins = rng.random_range(0.1..2.0);
        let del = rng.random_range(0.1..2.0);
        let costs = EditCostModel {
            node_insert: ins,
            node_delete: del,
            node_substitute: rng.random_range(0.0..(ins + del)),
            edge_insert: rng.random_range(0.1..2.0),
            edge_delete: rng.random_range(0.1..2.0),
        };
        let a = common::random_cooking_graph(&mut rng, 5);
        let b = common::random_cooking_graph(&mut rng, 5);
        let exact = graph_edit_distance(&a, &b, &costs, GedMode::Exact).unwrap();
        let oracle = common::oracle_ged(&a, &b, &costs);
        assert!(
            (exact - oracle).abs() <= 1e-9,
            "round {round}: exact {exact} vs oracle {oracle} under {costs:?}"
        );
    }
}

#[test]
fn candidate_sets_tokenize_to_equal_lengths_and_min_ce_behaves() {
    let vocab = common::small_vocab();
    let table = SymbolTable::new(&vocab, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for round in 0..30 {
        let p = common::random_program(&mut rng, &vocab, 6, false);
        let dag = FunctionDag::from_program(&p);
        let set = linear_extensions(&dag, DEFAULT_ENUM_CAP).unwrap();
        let sequences = set.tokenize_all(&p, &table).unwrap();
        let len = sequences[0].ids.len();
        assert!(
            sequences.iter().all(|s| s.ids.len() == len),
            "round {round}"
        );
        assert_eq!(
            sequences[0],
            tokenize_program(&p, &table).unwrap(),
            "round {round}: original order first"
        );

        // A uniform prediction is indifferent across candidates; min equals
        // the cross-entropy of each and argmin is 0.
        let v = table.size();
        let uniform = PredictedSequence::new(vec![vec![1.0 / v as f64; v]; len]).unwrap();
        let (min_ce, argmin) = min_ce_over_candidates(&uniform, &sequences).unwrap();
        assert_eq!(argmin, 0, "round {round}");
        let first = cross_entropy(&uniform, &sequences[0]).unwrap();
        assert!((min_ce - first).abs() <= 1e-12);

        // Min over a union is the min of the mins.
        if sequences.len() >= 2 {
            let split = sequences.len() / 2;
            let (left, _) = min_ce_over_candidates(&uniform, &sequences[..split]).unwrap();
            let (right, _) = min_ce_over_candidates(&uniform, &sequences[split..]).unwrap();
            assert!((min_ce - left.min(right)).abs() <= 1e-12, "round {round}");
        }
    }
}

#[test]
fn kmeans_distortion_is_non_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for round in 0..20 {
        let n = rng.random_range(3..=20usize);
        let d = rng.random_range(1..=4usize);
        let terms: Vec<String> = (0..n).map(|i| format!("term{i}")).collect();
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let table = FeatureTable::new(terms, vectors).unwrap();
        let k = rng.random_range(1..=n);
        let (_, trace) = kmeans_with_trace(&table, k, round).unwrap();
        for pair in trace.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "round {round}: distortion rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }
}

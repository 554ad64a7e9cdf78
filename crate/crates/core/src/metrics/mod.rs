//! Evaluation machinery: graph edit distance, node-set F1, and retrieval
//! medR / recall@K.

mod ged;
mod retrieval;

pub use ged::{graph_edit_distance, EditCostModel, GedError, GedMode};
pub use retrieval::{retrieval_metrics, RetrievalError, RetrievalReport};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ir::{ArgRef, EntityKind, Program};

/// Precision, recall, and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRF {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PRF {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PRF {
            precision,
            recall,
            f1,
        }
    }
}

/// The deduplicated canonical values of the requested kind. Actions come
/// from the action slot; every other kind from input and parameter
/// literals. Output tags are metadata and never counted.
pub fn entity_value_set(p: &Program, kind: EntityKind) -> BTreeSet<String> {
    let mut set = BTreeSet::new();
    for cmd in &p.commands {
        if kind == EntityKind::Action {
            set.insert(cmd.action.value.clone());
            continue;
        }
        for arg in cmd.inputs.iter().chain(cmd.params.values().flatten()) {
            if let ArgRef::Literal(e) = arg {
                if e.kind == kind {
                    set.insert(e.value.clone());
                }
            }
        }
    }
    set
}

/// Set-level F1 between the `kind` entities of a predicted and a
/// ground-truth program. Programs should be canonicalized first so that
/// values compare exactly. Both sets empty scores 1.0; exactly one empty
/// scores 0.0.
pub fn node_set_f1(pred: &Program, gt: &Program, kind: EntityKind) -> PRF {
    let p_set = entity_value_set(pred, kind);
    let g_set = entity_value_set(gt, kind);
    match (p_set.is_empty(), g_set.is_empty()) {
        (true, true) => return PRF::new(1.0, 1.0),
        (true, false) | (false, true) => return PRF::new(0.0, 0.0),
        _ => {}
    }
    let hits = p_set.intersection(&g_set).count() as f64;
    PRF::new(hits / p_set.len() as f64, hits / g_set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;

    #[test]
    fn identical_programs_score_one() {
        let p = parse_program("h1 = Chop(onion, tool=knife);\nout = Fry(h1, oil);").unwrap();
        let prf = node_set_f1(&p, &p, EntityKind::Ingredient);
        assert_eq!(prf.f1, 1.0);
        let prf = node_set_f1(&p, &p, EntityKind::Action);
        assert_eq!(prf.f1, 1.0);
        let prf = node_set_f1(&p, &p, EntityKind::Tool);
        assert_eq!(prf.f1, 1.0);
    }

    #[test]
    fn two_of_three_overlap() {
        let pred = parse_program("out = Mix(a, b, c);").unwrap();
        let gt = parse_program("out = Mix(b, c, d);").unwrap();
        let prf = node_set_f1(&pred, &gt, EntityKind::Ingredient);
        assert!((prf.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((prf.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((prf.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_sets_score_zero() {
        let pred = parse_program("out = Mix(a, b);").unwrap();
        let gt = parse_program("out = Mix(c, d);").unwrap();
        assert_eq!(node_set_f1(&pred, &gt, EntityKind::Ingredient).f1, 0.0);
    }

    #[test]
    fn empty_set_conventions() {
        let none = parse_program("out = Simmer();").unwrap();
        let some = parse_program("out = Mix(a);").unwrap();
        let both = node_set_f1(&none, &none, EntityKind::Ingredient);
        assert_eq!((both.precision, both.recall, both.f1), (1.0, 1.0, 1.0));
        let one = node_set_f1(&none, &some, EntityKind::Ingredient);
        assert_eq!((one.precision, one.recall, one.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn duplicates_are_deduplicated() {
        let pred = parse_program("h1 = Chop(onion);\nout = Fry(h1, onion);").unwrap();
        let gt = parse_program("out = Saute(onion);").unwrap();
        let prf = node_set_f1(&pred, &gt, EntityKind::Ingredient);
        assert_eq!(prf.f1, 1.0);
    }

    #[test]
    fn f1_swaps_precision_and_recall_under_argument_swap() {
        let a = parse_program("out = Mix(x, y, z);").unwrap();
        let b = parse_program("out = Mix(y);").unwrap();
        let ab = node_set_f1(&a, &b, EntityKind::Ingredient);
        let ba = node_set_f1(&b, &a, EntityKind::Ingredient);
        assert_eq!(ab.precision, ba.recall);
        assert_eq!(ab.recall, ba.precision);
        assert_eq!(ab.f1, ba.f1);
    }
}

//! Generators and independent oracles shared by the integration suites.
//!
//! The oracles here deliberately avoid the implementation paths they check:
//! linear extensions are recomputed by filtering all L! permutations, graph
//! edit distance by exhaustive enumeration of node matchings with the cost
//! recomputed from scratch, and graph equivalence by backtracking
//! isomorphism search.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cookir_core::graph::{is_valid_sequence, CookingGraph, FunctionDag, GraphNode, NodeKind};
use cookir_core::ir::{ArgRef, Command, Entity, EntityKind, Program, Role, Vocabulary};
use cookir_core::metrics::EditCostModel;
use rand::prelude::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).expect("fixture readable")
}

pub fn small_vocab() -> Vocabulary {
    Vocabulary::from_json_str(&read_fixture("vocab_small.json")).expect("fixture vocabulary loads")
}

/// JSON vocabulary at the full taxonomy's per-category sizes.
pub fn full_taxonomy_vocab_json() -> String {
    let counts: [(EntityKind, usize); 9] = [
        (EntityKind::Ingredient, 514),
        (EntityKind::Action, 60),
        (EntityKind::Tool, 55),
        (EntityKind::Quantity, 130),
        (EntityKind::Temperature, 60),
        (EntityKind::Time, 152),
        (EntityKind::How, 105),
        (EntityKind::Why, 112),
        (EntityKind::Output, 220),
    ];
    let docs: Vec<serde_json::Value> = counts
        .iter()
        .map(|(kind, n)| {
            let canonical: Vec<String> = (0..*n)
                .map(|i| format!("{}_{i:04}", kind.name().to_lowercase()))
                .collect();
            serde_json::json!({
                "category": kind.name(),
                "canonical": canonical,
                "synonyms": {},
            })
        })
        .collect();
    serde_json::to_string(&docs).unwrap()
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [String]) -> &'a str {
    items.choose(rng).expect("non-empty vocabulary category")
}

/// A random valid program drawn from `vocab`. Commands consume earlier
/// outputs with 50% probability, take up to three distinct ingredient
/// literals, and fill each role with up to two values 30% of the time.
/// With `connected`, every intermediate output is consumed by some later
/// command, so the lowered graph has a single structural sink.
pub fn random_program(
    rng: &mut ChaCha8Rng,
    vocab: &Vocabulary,
    max_len: usize,
    connected: bool,
) -> Program {
    let len = rng.random_range(1..=max_len);
    let actions = vocab.canonical_terms(EntityKind::Action);
    let ingredients = vocab.canonical_terms(EntityKind::Ingredient);
    let mut commands: Vec<Command> = Vec::with_capacity(len);
    for i in 0..len {
        let mut cmd = Command::new(
            Entity::new(EntityKind::Action, pick(rng, actions)),
            Vec::new(),
        );
        let mut vars: BTreeSet<usize> = BTreeSet::new();
        if i > 0 && rng.random_bool(0.5) {
            for _ in 0..rng.random_range(1..=2usize.min(i)) {
                vars.insert(rng.random_range(0..i));
            }
        }
        cmd.inputs = vars.iter().map(|&j| ArgRef::Var(j)).collect();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for _ in 0..rng.random_range(0..=3usize) {
            let term = pick(rng, ingredients);
            if seen.insert(term) {
                cmd.inputs
                    .push(ArgRef::Literal(Entity::new(EntityKind::Ingredient, term)));
            }
        }
        for role in Role::ALL {
            if !rng.random_bool(0.3) {
                continue;
            }
            let terms = vocab.canonical_terms(role.kind());
            if terms.is_empty() {
                continue;
            }
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            for _ in 0..rng.random_range(1..=2usize) {
                let term = pick(rng, terms);
                if seen.insert(term) {
                    cmd.push_param(role, ArgRef::Literal(Entity::new(role.kind(), term)));
                }
            }
        }
        commands.push(cmd);
    }
    if connected {
        // Give every unconsumed intermediate output a consumer.
        for producer in 0..len.saturating_sub(1) {
            let consumed = commands[producer + 1..]
                .iter()
                .any(|c| c.var_refs().contains(&producer));
            if !consumed {
                let consumer = rng.random_range(producer + 1..len);
                let mut inputs = vec![ArgRef::Var(producer)];
                inputs.append(&mut commands[consumer].inputs);
                // Keep var inputs first and ascending, as the assembler does.
                inputs.sort_by_key(|a| match a {
                    ArgRef::Var(j) => (0, *j, String::new()),
                    ArgRef::Literal(e) => (1, 0, e.value.clone()),
                });
                commands[consumer].inputs = inputs;
            }
        }
    }
    Program::normalized(commands)
}

/// A random DAG whose edges all point from smaller to larger indices.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, edge_prob: f64) -> FunctionDag {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(edge_prob) {
                edges.push((a, b));
            }
        }
    }
    FunctionDag::new(n, edges).unwrap()
}

/// A small random labeled graph in cooking shape (entity nodes feed
/// function nodes, function edges point forward), capped at `max_nodes`.
pub fn random_cooking_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> CookingGraph {
    const ACTIONS: [&str; 4] = ["Mix", "Bake", "Chop", "Boil"];
    const INGREDIENTS: [&str; 4] = ["salt", "onion", "water", "rice"];
    const TOOLS: [&str; 2] = ["pan", "oven"];
    let n_fun = rng.random_range(1..=3usize.min(max_nodes));
    let mut nodes: Vec<GraphNode> = (0..n_fun)
        .map(|id| GraphNode {
            id,
            kind: NodeKind::Function,
            label: ACTIONS.choose(rng).unwrap().to_string(),
            role: EntityKind::Action,
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..n_fun {
        for b in (a + 1)..n_fun {
            if rng.random_bool(0.5) {
                edges.push((a, b));
            }
        }
    }
    while nodes.len() < max_nodes && rng.random_bool(0.7) {
        let id = nodes.len();
        let (role, label) = if rng.random_bool(0.7) {
            (
                EntityKind::Ingredient,
                INGREDIENTS.choose(rng).unwrap().to_string(),
            )
        } else {
            (EntityKind::Tool, TOOLS.choose(rng).unwrap().to_string())
        };
        nodes.push(GraphNode {
            id,
            kind: NodeKind::Entity,
            label,
            role,
        });
        edges.push((id, rng.random_range(0..n_fun)));
    }
    CookingGraph {
        nodes,
        edges,
        sink: n_fun - 1,
    }
}

fn next_permutation(arr: &mut [usize]) -> bool {
    if arr.len() < 2 {
        return false;
    }
    let mut i = arr.len() - 1;
    while i > 0 && arr[i - 1] >= arr[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = arr.len() - 1;
    while arr[j] <= arr[i - 1] {
        j -= 1;
    }
    arr.swap(i - 1, j);
    arr[i..].reverse();
    true
}

/// Brute-force linear extensions: filter all n! permutations through
/// `is_valid_sequence`.
pub fn oracle_linear_extensions(dag: &FunctionDag) -> BTreeSet<Vec<usize>> {
    let n = dag.node_count();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut valid = BTreeSet::new();
    loop {
        if is_valid_sequence(dag, &perm).unwrap() {
            valid.insert(perm.clone());
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    valid
}

fn label_of(g: &CookingGraph, id: usize) -> (NodeKind, EntityKind, &str) {
    let n = &g.nodes[id];
    (n.kind, n.role, n.label.as_str())
}

/// Full cost of one node matching, recomputed from the cost-model
/// definition with no shared code with the search.
fn mapping_cost(
    g1: &CookingGraph,
    g2: &CookingGraph,
    mapping: &[Option<usize>],
    c: &EditCostModel,
) -> f64 {
    let mut cost = 0.0;
    let mut image = vec![None; g2.nodes.len()];
    for (u, v_opt) in mapping.iter().enumerate() {
        match v_opt {
            Some(v) => {
                image[*v] = Some(u);
                if label_of(g1, u) != label_of(g2, *v) {
                    cost += c.node_substitute;
                }
            }
            None => cost += c.node_delete,
        }
    }
    for slot in &image {
        if slot.is_none() {
            cost += c.node_insert;
        }
    }
    let e2: BTreeSet<(usize, usize)> = g2.edges.iter().copied().collect();
    let e1: BTreeSet<(usize, usize)> = g1.edges.iter().copied().collect();
    for &(a, b) in &e1 {
        let survives = match (mapping[a], mapping[b]) {
            (Some(x), Some(y)) => e2.contains(&(x, y)),
            _ => false,
        };
        if !survives {
            cost += c.edge_delete;
        }
    }
    for &(x, y) in &e2 {
        let covered = match (image[x], image[y]) {
            (Some(a), Some(b)) => e1.contains(&(a, b)),
            _ => false,
        };
        if !covered {
            cost += c.edge_insert;
        }
    }
    cost
}

/// Exhaustive GED: enumerate every injective matching (substitutions only
/// between nodes of equal kind and role) and take the cheapest.
pub fn oracle_ged(g1: &CookingGraph, g2: &CookingGraph, c: &EditCostModel) -> f64 {
    fn recurse(
        g1: &CookingGraph,
        g2: &CookingGraph,
        c: &EditCostModel,
        mapping: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut f64,
    ) {
        if mapping.len() == g1.nodes.len() {
            let cost = mapping_cost(g1, g2, mapping, c);
            if cost < *best {
                *best = cost;
            }
            return;
        }
        let u = mapping.len();
        let (k1, r1, _) = label_of(g1, u);
        for v in 0..g2.nodes.len() {
            let (k2, r2, _) = label_of(g2, v);
            if used[v] || k1 != k2 || r1 != r2 {
                continue;
            }
            used[v] = true;
            mapping.push(Some(v));
            recurse(g1, g2, c, mapping, used, best);
            mapping.pop();
            used[v] = false;
        }
        mapping.push(None);
        recurse(g1, g2, c, mapping, used, best);
        mapping.pop();
    }
    let mut best = f64::INFINITY;
    recurse(
        g1,
        g2,
        c,
        &mut Vec::new(),
        &mut vec![false; g2.nodes.len()],
        &mut best,
    );
    best
}

/// Label-preserving isomorphism by backtracking over node bijections.
pub fn graphs_isomorphic(a: &CookingGraph, b: &CookingGraph) -> bool {
    if a.nodes.len() != b.nodes.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let ea: BTreeSet<(usize, usize)> = a.edges.iter().copied().collect();
    let eb: BTreeSet<(usize, usize)> = b.edges.iter().copied().collect();
    if ea.len() != eb.len() {
        return false;
    }

    fn recurse(
        a: &CookingGraph,
        b: &CookingGraph,
        ea: &BTreeSet<(usize, usize)>,
        eb: &BTreeSet<(usize, usize)>,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let u = map.len();
        if u == a.nodes.len() {
            return true;
        }
        'candidates: for v in 0..b.nodes.len() {
            if used[v] || label_of(a, u) != label_of(b, v) {
                continue;
            }
            for (x, &y) in map.iter().enumerate() {
                let forward = (ea.contains(&(u, x)), eb.contains(&(v, y)));
                let backward = (ea.contains(&(x, u)), eb.contains(&(y, v)));
                if forward.0 != forward.1 || backward.0 != backward.1 {
                    continue 'candidates;
                }
            }
            if ea.contains(&(u, u)) != eb.contains(&(v, v)) {
                continue;
            }
            used[v] = true;
            map.push(v);
            if recurse(a, b, ea, eb, map, used) {
                return true;
            }
            map.pop();
            used[v] = false;
        }
        false
    }

    recurse(
        a,
        b,
        &ea,
        &eb,
        &mut Vec::new(),
        &mut vec![false; b.nodes.len()],
    )
}

/// Straightforward second implementation of mean token cross-entropy.
pub fn oracle_cross_entropy(rows: &[Vec<f64>], target: &[u32]) -> f64 {
    assert_eq!(rows.len(), target.len());
    let mut total = 0.0;
    for t in 0..rows.len() {
        let p = rows[t][target[t] as usize];
        let floored = if p < 1e-12 { 1e-12 } else { p };
        total += -floored.ln();
    }
    total / rows.len() as f64
}

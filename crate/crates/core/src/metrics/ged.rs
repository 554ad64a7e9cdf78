//! Graph edit distance between cooking graphs.
//!
//! Exact mode runs best-first search over partial node matchings with an
//! admissible label-multiset lower bound, so the first complete matching
//! popped is optimal. Beam mode expands the same states level by level but
//! keeps only the best `width` per level, yielding an upper bound on the
//! exact distance.
//!
//! Nodes compare by `(node kind, role, canonical value)`. Substituting one
//! node for another is allowed only when node kind and role agree; a value
//! mismatch then costs `node_substitute`, an exact label match costs
//! nothing. Edges are unlabeled: an edge present on one side only costs
//! `edge_delete`/`edge_insert`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CookingGraph, NodeKind};
use crate::ir::EntityKind;

/// Maximum node count (per graph) accepted by exact mode.
pub const MAX_EXACT_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EditCostModel {
    pub node_insert: f64,
    pub node_delete: f64,
    pub node_substitute: f64,
    pub edge_insert: f64,
    pub edge_delete: f64,
}

impl Default for EditCostModel {
    fn default() -> Self {
        EditCostModel {
            node_insert: 1.0,
            node_delete: 1.0,
            node_substitute: 1.0,
            edge_insert: 1.0,
            edge_delete: 1.0,
        }
    }
}

impl EditCostModel {
    pub fn validate(&self) -> Result<(), GedError> {
        let all = [
            self.node_insert,
            self.node_delete,
            self.node_substitute,
            self.edge_insert,
            self.edge_delete,
        ];
        if all.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(GedError::InvalidCostModel(
                "costs must be finite and non-negative".into(),
            ));
        }
        if self.node_substitute > self.node_insert + self.node_delete {
            return Err(GedError::InvalidCostModel(
                "node_substitute must not exceed node_insert + node_delete".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GedMode {
    Exact,
    Beam(usize),
}

#[derive(Debug, Error)]
pub enum GedError {
    #[error("exact mode supports at most {MAX_EXACT_NODES} nodes per graph, got {0}")]
    TooLargeForExact(usize),
    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),
    #[error("beam width must be at least 1")]
    BeamWidthZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Label<'a> {
    kind: NodeKind,
    role: EntityKind,
    value: &'a str,
}

impl<'a> Label<'a> {
    fn group(&self) -> (NodeKind, EntityKind) {
        (self.kind, self.role)
    }
}

struct Prep<'a> {
    labels1: Vec<Label<'a>>,
    labels2: Vec<Label<'a>>,
    e1: HashSet<(usize, usize)>,
    e2: HashSet<(usize, usize)>,
}

fn prep<'a>(g1: &'a CookingGraph, g2: &'a CookingGraph) -> Prep<'a> {
    let labels = |g: &'a CookingGraph| -> Vec<Label<'a>> {
        g.nodes
            .iter()
            .map(|n| Label {
                kind: n.kind,
                role: n.role,
                value: &n.label,
            })
            .collect()
    };
    Prep {
        labels1: labels(g1),
        labels2: labels(g2),
        e1: g1.edges.iter().copied().collect(),
        e2: g2.edges.iter().copied().collect(),
    }
}

/// Growable bitset over g2 node ids, so beam mode works at any size.
#[derive(Debug, Clone, PartialEq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
}

#[derive(Debug, Clone, PartialEq)]
struct State {
    /// Assignment of g1 nodes `0..assigned.len()`; `None` means deleted.
    assigned: Vec<Option<usize>>,
    used: Bits,
    g: f64,
    h: f64,
}

impl State {
    fn f(&self) -> f64 {
        self.g + self.h
    }
}

/// Min-order on (f, assignment) for the priority queue; the assignment
/// tie-break keeps exploration deterministic.
#[derive(Debug, PartialEq)]
struct Ordered(State);

impl Eq for Ordered {}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .f()
            .total_cmp(&self.0.f())
            .then_with(|| other.0.assigned.len().cmp(&self.0.assigned.len()))
            .then_with(|| other.0.assigned.cmp(&self.0.assigned))
    }
}

/// Incremental edge cost of assigning g1 node `u` to `v_opt`, against the
/// already-decided prefix.
fn edge_delta(
    p: &Prep<'_>,
    state: &State,
    u: usize,
    v_opt: Option<usize>,
    c: &EditCostModel,
) -> f64 {
    let mut cost = 0.0;
    if p.e1.contains(&(u, u)) {
        let matched = v_opt.is_some_and(|v| p.e2.contains(&(v, v)));
        if !matched {
            cost += c.edge_delete;
        }
    }
    if let Some(v) = v_opt {
        if p.e2.contains(&(v, v)) && !p.e1.contains(&(u, u)) {
            cost += c.edge_insert;
        }
    }
    for (u2, v2_opt) in state.assigned.iter().enumerate() {
        for (a, b, ia, ib) in [(u, u2, v_opt, *v2_opt), (u2, u, *v2_opt, v_opt)] {
            if p.e1.contains(&(a, b)) {
                let matched = match (ia, ib) {
                    (Some(x), Some(y)) => p.e2.contains(&(x, y)),
                    _ => false,
                };
                if !matched {
                    cost += c.edge_delete;
                }
            }
        }
        if let (Some(v), Some(w)) = (v_opt, *v2_opt) {
            if p.e2.contains(&(v, w)) && !p.e1.contains(&(u, u2)) {
                cost += c.edge_insert;
            }
            if p.e2.contains(&(w, v)) && !p.e1.contains(&(u2, u)) {
                cost += c.edge_insert;
            }
        }
    }
    cost
}

/// Cost of the forced completion once every g1 node is decided: insert the
/// unused g2 nodes and every g2 edge not already accounted for by a
/// matched-matched pair.
fn completion_cost(p: &Prep<'_>, state: &State, c: &EditCostModel) -> f64 {
    let n2 = p.labels2.len();
    let mut cost = 0.0;
    for w in 0..n2 {
        if !state.used.get(w) {
            cost += c.node_insert;
        }
    }
    for &(a, b) in &p.e2 {
        let both_used = state.used.get(a) && state.used.get(b);
        if !both_used {
            cost += c.edge_insert;
        }
    }
    cost
}

/// Admissible lower bound on the remaining cost: an optimal label-multiset
/// matching of the undecided g1 nodes against the unused g2 nodes,
/// ignoring edges.
fn lower_bound(p: &Prep<'_>, state: &State, c: &EditCostModel) -> f64 {
    let depth = state.assigned.len();
    let mut groups: HashMap<(NodeKind, EntityKind), (usize, usize)> = HashMap::new();
    let mut exact: HashMap<Label<'_>, (usize, usize)> = HashMap::new();
    for l in &p.labels1[depth..] {
        groups.entry(l.group()).or_default().0 += 1;
        exact.entry(*l).or_default().0 += 1;
    }
    for (w, l) in p.labels2.iter().enumerate() {
        if !state.used.get(w) {
            groups.entry(l.group()).or_default().1 += 1;
            exact.entry(*l).or_default().1 += 1;
        }
    }
    let mut free: HashMap<(NodeKind, EntityKind), usize> = HashMap::new();
    for (label, (c1, c2)) in &exact {
        *free.entry(label.group()).or_default() += c1.min(c2);
    }
    let mut bound = 0.0;
    for (group, (c1, c2)) in &groups {
        let matched = c1.min(c2);
        let exact_pairs = free.get(group).copied().unwrap_or(0).min(*matched);
        bound += (matched - exact_pairs) as f64 * c.node_substitute;
        bound += (c1 - matched) as f64 * c.node_delete;
        bound += (c2 - matched) as f64 * c.node_insert;
    }
    bound
}

/// Children of `state`: substitute g1 node `depth` with each compatible
/// unused g2 node, or delete it. States that reach full depth absorb the
/// completion cost and carry a zero bound.
fn expand(p: &Prep<'_>, state: &State, c: &EditCostModel) -> Vec<State> {
    let n1 = p.labels1.len();
    let u = state.assigned.len();
    debug_assert!(u < n1);
    let l1 = p.labels1[u];
    let mut children = Vec::new();
    let mut push = |v_opt: Option<usize>, node_cost: f64| {
        let mut assigned = state.assigned.clone();
        assigned.push(v_opt);
        let mut used = state.used.clone();
        if let Some(v) = v_opt {
            used.set(v);
        }
        let g = state.g + node_cost + edge_delta(p, state, u, v_opt, c);
        let mut child = State {
            assigned,
            used,
            g,
            h: 0.0,
        };
        if child.assigned.len() == n1 {
            child.g += completion_cost(p, &child, c);
        } else {
            child.h = lower_bound(p, &child, c);
        }
        children.push(child);
    };
    for (v, l2) in p.labels2.iter().enumerate() {
        if state.used.get(v) || l1.group() != l2.group() {
            continue;
        }
        let node_cost = if l1 == *l2 { 0.0 } else { c.node_substitute };
        push(Some(v), node_cost);
    }
    push(None, c.node_delete);
    children
}

fn start_state(p: &Prep<'_>, c: &EditCostModel) -> State {
    let mut s = State {
        assigned: Vec::new(),
        used: Bits::new(p.labels2.len()),
        g: 0.0,
        h: 0.0,
    };
    if p.labels1.is_empty() {
        s.g = completion_cost(p, &s, c);
    } else {
        s.h = lower_bound(p, &s, c);
    }
    s
}

fn exact_ged(p: &Prep<'_>, c: &EditCostModel) -> f64 {
    let n1 = p.labels1.len();
    let mut heap: BinaryHeap<Ordered> = BinaryHeap::new();
    heap.push(Ordered(start_state(p, c)));
    while let Some(Ordered(state)) = heap.pop() {
        if state.assigned.len() == n1 {
            return state.g;
        }
        for child in expand(p, &state, c) {
            heap.push(Ordered(child));
        }
    }
    unreachable!("deletion is always available, so a complete matching exists")
}

fn beam_ged(p: &Prep<'_>, c: &EditCostModel, width: usize) -> f64 {
    let n1 = p.labels1.len();
    let mut frontier = vec![start_state(p, c)];
    for _ in 0..n1 {
        let mut next: Vec<State> = frontier.iter().flat_map(|s| expand(p, s, c)).collect();
        next.sort_by(|a, b| {
            a.f()
                .total_cmp(&b.f())
                .then_with(|| a.assigned.cmp(&b.assigned))
        });
        next.truncate(width);
        frontier = next;
    }
    frontier.iter().map(|s| s.g).fold(f64::INFINITY, f64::min)
}

/// Minimum-cost edit path between two cooking graphs under `costs`.
///
/// Exact mode requires both graphs to have at most [`MAX_EXACT_NODES`]
/// nodes; beam mode accepts any size and returns an upper bound that
/// reaches the exact value once the width covers all matchings.
pub fn graph_edit_distance(
    g1: &CookingGraph,
    g2: &CookingGraph,
    costs: &EditCostModel,
    mode: GedMode,
) -> Result<f64, GedError> {
    costs.validate()?;
    let p = prep(g1, g2);
    match mode {
        GedMode::Exact => {
            let largest = p.labels1.len().max(p.labels2.len());
            if largest > MAX_EXACT_NODES {
                return Err(GedError::TooLargeForExact(largest));
            }
            Ok(exact_ged(&p, costs))
        }
        GedMode::Beam(width) => {
            if width == 0 {
                return Err(GedError::BeamWidthZero);
            }
            Ok(beam_ged(&p, costs, width))
        }
    }
}

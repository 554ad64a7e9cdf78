//! Valid-permutation machinery: enumeration and exact counting of the
//! linear extensions of a program's function DAG.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{is_permutation, Program, SymbolTable, TokenSeq, TokenizeError};

use super::{CookingGraph, NodeKind};

/// Default enumeration cap. Real recipes stay far below it; pathological
/// inputs fail loudly instead of exhausting memory.
pub const DEFAULT_ENUM_CAP: usize = 10_000;

/// Exact counting uses a table indexed by node subsets, so it is limited to
/// this many nodes.
const MAX_COUNT_NODES: usize = 20;

/// The projection of a cooking graph onto its function nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDag {
    n: usize,
    /// Edges (producer, consumer) over `0..n`, deduplicated and sorted.
    edges: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("order is not a permutation of the {expected_len} commands")]
    NotAPermutation { expected_len: usize },
    #[error("edge ({0}, {1}) references a missing node")]
    BadEdge(usize, usize),
    #[error("graph has a cycle; it admits no valid sequence")]
    Cyclic,
    #[error("more than {cap} valid permutations (exact total: {total:?})")]
    CapExceeded { cap: usize, total: Option<u64> },
    #[error("exact counting supports at most {MAX_COUNT_NODES} nodes or 64-bit totals")]
    TooLarge,
}

impl FunctionDag {
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self, PermError> {
        edges.sort_unstable();
        edges.dedup();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(PermError::BadEdge(a, b));
            }
            preds[b].push(a);
            succs[a].push(b);
        }
        Ok(FunctionDag {
            n,
            edges,
            preds,
            succs,
        })
    }

    /// Dependency DAG of a program: node `i` is command `i`, with an edge
    /// `(j, i)` for every `Var(j)` consumed by command `i`.
    pub fn from_program(p: &Program) -> Self {
        let n = p.commands.len();
        let mut edges = Vec::new();
        for (i, cmd) in p.commands.iter().enumerate() {
            for j in cmd.var_refs() {
                if j < n {
                    edges.push((j, i));
                }
            }
        }
        FunctionDag::new(n, edges).expect("indices bounded by construction")
    }

    /// Projection of a cooking graph onto its function nodes, renumbered to
    /// `0..L` in ascending node-id order.
    pub fn from_cooking_graph(g: &CookingGraph) -> Self {
        let fids: Vec<usize> = g
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Function)
            .map(|n| n.id)
            .collect();
        let index_of = |id: usize| fids.binary_search(&id).ok();
        let mut edges = Vec::new();
        for &(a, b) in &g.edges {
            if let (Some(x), Some(y)) = (index_of(a), index_of(b)) {
                edges.push((x, y));
            }
        }
        FunctionDag::new(fids.len(), edges).expect("indices bounded by construction")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Kahn topological order with a smallest-index tie-break, or `None` on
    /// a cycle. This is the canonical linear extension.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..self.n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &w in &self.succs[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_order().is_some()
    }
}

/// The set of all valid permutations of one program, original order first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub orderings: Vec<Vec<usize>>,
}

impl CandidateSet {
    /// Number of candidates minus one, matching the `P^0..P^beta` indexing.
    pub fn beta(&self) -> usize {
        self.orderings.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.orderings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orderings.is_empty()
    }

    /// Tokenize every candidate permutation of `p`. All sequences share one
    /// length, as required by the min-cross-entropy loss.
    pub fn tokenize_all(
        &self,
        p: &Program,
        table: &SymbolTable,
    ) -> Result<Vec<TokenSeq>, TokenizeError> {
        self.orderings
            .iter()
            .map(|order| {
                let permuted = p
                    .permuted(order)
                    .expect("candidate orderings are permutations");
                crate::ir::tokenize_program(&permuted, table)
            })
            .collect()
    }
}

/// True iff every edge's producer is placed before its consumer.
pub fn is_valid_sequence(dag: &FunctionDag, order: &[usize]) -> Result<bool, PermError> {
    if !is_permutation(order, dag.node_count()) {
        return Err(PermError::NotAPermutation {
            expected_len: dag.node_count(),
        });
    }
    let mut pos = vec![0usize; dag.node_count()];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    Ok(dag.edges().iter().all(|&(a, b)| pos[a] < pos[b]))
}

/// Enumerate every linear extension in lexicographic order of original
/// command indices, so the original order of a valid program is always at
/// position 0. Aborts with [`PermError::CapExceeded`] when more than `cap`
/// extensions exist; the error still carries the exact total whenever the
/// counting DP can produce one.
pub fn linear_extensions(dag: &FunctionDag, cap: usize) -> Result<CandidateSet, PermError> {
    assert!(cap >= 1, "cap must be at least 1");
    if !dag.is_acyclic() {
        return Err(PermError::Cyclic);
    }
    let n = dag.node_count();
    let mut indeg = vec![0usize; n];
    for &(_, b) in dag.edges() {
        indeg[b] += 1;
    }
    let mut orderings: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut overflow = false;

    fn walk(
        dag: &FunctionDag,
        indeg: &mut Vec<usize>,
        placed: &mut Vec<bool>,
        current: &mut Vec<usize>,
        orderings: &mut Vec<Vec<usize>>,
        cap: usize,
        overflow: &mut bool,
    ) {
        if *overflow {
            return;
        }
        if current.len() == dag.node_count() {
            if orderings.len() == cap {
                *overflow = true;
            } else {
                orderings.push(current.clone());
            }
            return;
        }
        for v in 0..dag.node_count() {
            if placed[v] || indeg[v] != 0 {
                continue;
            }
            placed[v] = true;
            current.push(v);
            for &w in &dag.succs[v] {
                indeg[w] -= 1;
            }
            walk(dag, indeg, placed, current, orderings, cap, overflow);
            for &w in &dag.succs[v] {
                indeg[w] += 1;
            }
            current.pop();
            placed[v] = false;
            if *overflow {
                return;
            }
        }
    }

    walk(
        dag,
        &mut indeg,
        &mut placed,
        &mut current,
        &mut orderings,
        cap,
        &mut overflow,
    );
    if overflow {
        return Err(PermError::CapExceeded {
            cap,
            total: count_linear_extensions(dag).ok(),
        });
    }
    Ok(CandidateSet { orderings })
}

/// Exact number of linear extensions via dynamic programming over downsets
/// (predecessor-closed node subsets), for up to 20 nodes and 64-bit totals.
pub fn count_linear_extensions(dag: &FunctionDag) -> Result<u64, PermError> {
    let n = dag.node_count();
    if n > MAX_COUNT_NODES {
        return Err(PermError::TooLarge);
    }
    if !dag.is_acyclic() {
        return Err(PermError::Cyclic);
    }
    if n == 0 {
        return Ok(1);
    }
    let mut pred_mask = vec![0u32; n];
    for &(a, b) in dag.edges() {
        pred_mask[b] |= 1 << a;
    }
    // counts[s] = number of orderings of the downset s.
    let mut counts = vec![0u64; 1 << n];
    counts[0] = 1;
    for mask in 1u32..(1 << n) {
        let mut total: u64 = 0;
        // v can be placed last iff every other member precedes it legally,
        // i.e. v's predecessors all lie inside mask \ {v}.
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let without = mask & !(1 << v);
            if pred_mask[v] & !without == 0 {
                total = total
                    .checked_add(counts[without as usize])
                    .ok_or(PermError::TooLarge)?;
            }
        }
        counts[mask as usize] = total;
    }
    Ok(counts[(1usize << n) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> FunctionDag {
        FunctionDag::new(n, (1..n).map(|i| (i - 1, i)).collect()).unwrap()
    }

    #[test]
    fn path_has_one_extension() {
        let set = linear_extensions(&chain(5), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(set.orderings, vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(count_linear_extensions(&chain(8)).unwrap(), 1);
    }

    #[test]
    fn edgeless_three_nodes_have_six() {
        let dag = FunctionDag::new(3, vec![]).unwrap();
        let set = linear_extensions(&dag, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(set.len(), 6);
        assert_eq!(set.orderings[0], vec![0, 1, 2]);
        let mut sorted = set.orderings.clone();
        sorted.sort();
        assert_eq!(sorted, set.orderings, "enumeration is lexicographic");
        assert_eq!(count_linear_extensions(&dag).unwrap(), 6);
    }

    #[test]
    fn two_chains_joined_at_sink() {
        // Chains 0->1 and 2->3 both feeding 4: C(4,2) = 6 interleavings.
        let dag = FunctionDag::new(5, vec![(0, 1), (2, 3), (1, 4), (3, 4)]).unwrap();
        assert_eq!(count_linear_extensions(&dag).unwrap(), 6);
        let set = linear_extensions(&dag, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn empty_dag_counts_one() {
        let dag = FunctionDag::new(0, vec![]).unwrap();
        assert_eq!(count_linear_extensions(&dag).unwrap(), 1);
        let set = linear_extensions(&dag, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(set.orderings, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn cap_exceeded_carries_exact_total() {
        let dag = FunctionDag::new(8, vec![]).unwrap();
        let err = linear_extensions(&dag, 100).unwrap_err();
        assert_eq!(
            err,
            PermError::CapExceeded {
                cap: 100,
                total: Some(40320)
            }
        );
    }

    #[test]
    fn counting_rejects_oversized_graphs() {
        let dag = FunctionDag::new(21, vec![]).unwrap();
        assert_eq!(count_linear_extensions(&dag), Err(PermError::TooLarge));
    }

    #[test]
    fn validity_checks() {
        let dag = chain(2);
        assert!(is_valid_sequence(&dag, &[0, 1]).unwrap());
        assert!(!is_valid_sequence(&dag, &[1, 0]).unwrap());
        assert!(matches!(
            is_valid_sequence(&dag, &[0, 0]),
            Err(PermError::NotAPermutation { expected_len: 2 })
        ));
        assert!(matches!(
            is_valid_sequence(&dag, &[0]),
            Err(PermError::NotAPermutation { .. })
        ));
    }

    #[test]
    fn cyclic_graph_is_reported() {
        let dag = FunctionDag::new(2, vec![(0, 1), (1, 0)]).unwrap();
        assert_eq!(
            linear_extensions(&dag, DEFAULT_ENUM_CAP),
            Err(PermError::Cyclic)
        );
        assert_eq!(count_linear_extensions(&dag), Err(PermError::Cyclic));
    }
}

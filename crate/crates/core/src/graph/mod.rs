//! The graph view of programs: function nodes joined by output-consumption
//! edges, fed by entity nodes.
//!
//! Serialized form: `{"nodes": [{"id", "kind", "label", "role"}],
//! "edges": [[src, dst]], "sink": id}`. DOT export colors function nodes
//! green and entity nodes cyan.

mod perms;

pub use perms::{
    count_linear_extensions, is_valid_sequence, linear_extensions, CandidateSet, FunctionDag,
    PermError, DEFAULT_ENUM_CAP,
};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{
    validate_program, ArgRef, Command, Entity, EntityKind, Program, Role, ValidationReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Function,
    Entity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    pub kind: NodeKind,
    pub label: String,
    /// `Action` for function nodes, the entity category otherwise.
    pub role: EntityKind,
}

/// A cooking graph. Node ids are dense: `nodes[i].id == i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CookingGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize)>,
    /// The function node producing `out`.
    pub sink: usize,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("program is invalid:\n{0}")]
    InvalidProgram(ValidationReport),
    #[error("function nodes form a cycle")]
    CyclicGraph,
    #[error("multiple sink functions: {0:?}")]
    MultipleSinks(Vec<usize>),
    #[error("graph has no function node")]
    NoFunctions,
    #[error("node ids must be dense and in order (node {0} is out of place)")]
    BadNodeIds(usize),
    #[error("edge ({0}, {1}) references a missing node")]
    BadEdge(usize, usize),
    #[error("designated sink {0} is not a sink function node")]
    BadSink(usize),
    #[error("entity node {0} must have in-degree 0 and out-degree >= 1")]
    EntityDegree(usize),
    #[error("function node {0} must have role Action")]
    BadFunctionRole(usize),
    #[error("entity node {id} has role {role}, which has no program slot")]
    UnsupportedEntityRole { id: usize, role: EntityKind },
    #[error("edge ({0}, {1}) points into an entity node")]
    EdgeIntoEntity(usize, usize),
}

impl CookingGraph {
    pub fn function_ids(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Function)
            .map(|n| n.id)
            .collect()
    }

    /// Function-to-function edges only.
    pub fn function_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| {
                self.nodes[a].kind == NodeKind::Function && self.nodes[b].kind == NodeKind::Function
            })
            .collect()
    }

    /// Check the structural invariants. Programs whose intermediate outputs
    /// are never consumed lower to graphs with more than one structural
    /// sink; those graphs fail this check and cannot be inverted by
    /// [`from_graph`], though every other operation still accepts them.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(GraphError::BadNodeIds(n.id));
            }
            match n.kind {
                NodeKind::Function if n.role != EntityKind::Action => {
                    return Err(GraphError::BadFunctionRole(n.id))
                }
                _ => {}
            }
        }
        for &(a, b) in &self.edges {
            if a >= self.nodes.len() || b >= self.nodes.len() {
                return Err(GraphError::BadEdge(a, b));
            }
            if self.nodes[b].kind == NodeKind::Entity {
                return Err(GraphError::EdgeIntoEntity(a, b));
            }
        }
        let mut out_deg = vec![0usize; self.nodes.len()];
        for &(a, _) in &self.edges {
            out_deg[a] += 1;
        }
        for n in &self.nodes {
            if n.kind == NodeKind::Entity && out_deg[n.id] == 0 {
                return Err(GraphError::EntityDegree(n.id));
            }
        }

        let dag = FunctionDag::from_cooking_graph(self);
        if dag.node_count() == 0 {
            return Err(GraphError::NoFunctions);
        }
        if dag.topo_order().is_none() {
            return Err(GraphError::CyclicGraph);
        }
        let fids = self.function_ids();
        let fedges: HashSet<(usize, usize)> = self.function_edges().into_iter().collect();
        let sinks: Vec<usize> = fids
            .iter()
            .copied()
            .filter(|&f| !fedges.iter().any(|&(a, _)| a == f))
            .collect();
        if sinks.len() > 1 {
            return Err(GraphError::MultipleSinks(sinks));
        }
        if self.sink >= self.nodes.len()
            || self.nodes[self.sink].kind != NodeKind::Function
            || sinks != [self.sink]
        {
            return Err(GraphError::BadSink(self.sink));
        }
        Ok(())
    }
}

/// Lower a valid program to its graph: one function node per command, one
/// entity node per distinct `(kind, value)` literal per consuming command,
/// and a function edge `(i, j)` iff command `j` consumes `Var(i)`.
/// Output tags are command metadata, not nodes.
pub fn to_graph(p: &Program) -> Result<CookingGraph, GraphError> {
    let report = validate_program(p);
    if !report.is_valid() {
        return Err(GraphError::InvalidProgram(report));
    }
    let len = p.commands.len();
    let mut nodes: Vec<GraphNode> = p
        .commands
        .iter()
        .enumerate()
        .map(|(i, cmd)| GraphNode {
            id: i,
            kind: NodeKind::Function,
            label: cmd.action.value.clone(),
            role: EntityKind::Action,
        })
        .collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, cmd) in p.commands.iter().enumerate() {
        for j in cmd.var_refs() {
            edges.push((j, i));
        }
        let mut seen: HashSet<(EntityKind, &str)> = HashSet::new();
        for e in cmd.literals() {
            if seen.insert((e.kind, e.value.as_str())) {
                let id = nodes.len();
                nodes.push(GraphNode {
                    id,
                    kind: NodeKind::Entity,
                    label: e.value.clone(),
                    role: e.kind,
                });
                edges.push((id, i));
            }
        }
    }
    Ok(CookingGraph {
        nodes,
        edges,
        sink: len - 1,
    })
}

/// Invert [`to_graph`]: rebuild a program whose command order is the
/// canonical linear extension (Kahn's algorithm, smallest original id
/// first). `to_graph(from_graph(g)?)` is label-preserving isomorphic to `g`.
pub fn from_graph(g: &CookingGraph) -> Result<Program, GraphError> {
    g.validate()?;
    for n in &g.nodes {
        if n.kind == NodeKind::Entity && matches!(n.role, EntityKind::Action | EntityKind::Output) {
            return Err(GraphError::UnsupportedEntityRole {
                id: n.id,
                role: n.role,
            });
        }
    }
    let fids = g.function_ids();
    let dag = FunctionDag::from_cooking_graph(g);
    let order = dag.topo_order().ok_or(GraphError::CyclicGraph)?;
    // Position of each function node (by original id) in the rebuilt program.
    let mut pos: HashMap<usize, usize> = HashMap::new();
    for (p, &k) in order.iter().enumerate() {
        pos.insert(fids[k], p);
    }

    let mut feeders: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut producers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in &g.edges {
        match g.nodes[a].kind {
            NodeKind::Entity => feeders.entry(b).or_default().push(a),
            NodeKind::Function => producers.entry(b).or_default().push(a),
        }
    }

    let mut commands: Vec<Command> = Vec::with_capacity(order.len());
    for &k in &order {
        let fid = fids[k];
        let node = &g.nodes[fid];
        let mut cmd = Command::new(Entity::new(EntityKind::Action, node.label.clone()), vec![]);
        let mut vars: Vec<usize> = producers
            .get(&fid)
            .map(|v| v.iter().map(|p| pos[p]).collect())
            .unwrap_or_default();
        vars.sort_unstable();
        vars.dedup();
        cmd.inputs = vars.into_iter().map(ArgRef::Var).collect();
        if let Some(ents) = feeders.get_mut(&fid) {
            ents.sort_unstable();
            for &eid in ents.iter() {
                let en = &g.nodes[eid];
                let arg = ArgRef::Literal(Entity::new(en.role, en.label.clone()));
                match en.role {
                    EntityKind::Ingredient => cmd.inputs.push(arg),
                    EntityKind::Tool => cmd.push_param(Role::Tool, arg),
                    EntityKind::Quantity => cmd.push_param(Role::Quantity, arg),
                    EntityKind::Time => cmd.push_param(Role::Time, arg),
                    EntityKind::Temperature => cmd.push_param(Role::Temp, arg),
                    EntityKind::How => cmd.push_param(Role::How, arg),
                    EntityKind::Why => cmd.push_param(Role::Why, arg),
                    EntityKind::Action | EntityKind::Output => unreachable!("rejected above"),
                }
            }
        }
        commands.push(cmd);
    }
    Ok(Program::normalized(commands))
}

/// Restrict to function nodes and function-to-function edges, renumbering
/// ids densely. Used when edit distance should ignore entity nodes.
pub fn function_subgraph(g: &CookingGraph) -> CookingGraph {
    let fids = g.function_ids();
    let index_of = |id: usize| fids.binary_search(&id).ok();
    let nodes: Vec<GraphNode> = fids
        .iter()
        .enumerate()
        .map(|(new_id, &old)| GraphNode {
            id: new_id,
            ..g.nodes[old].clone()
        })
        .collect();
    let edges: Vec<(usize, usize)> = g
        .edges
        .iter()
        .filter_map(|&(a, b)| Some((index_of(a)?, index_of(b)?)))
        .collect();
    CookingGraph {
        nodes,
        edges,
        sink: index_of(g.sink).unwrap_or(0),
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render to Graphviz DOT. With `merge_entities`, identical `(role, label)`
/// entity nodes are collapsed into one node for readability; the underlying
/// graph is unchanged.
pub fn to_dot(g: &CookingGraph, merge_entities: bool) -> String {
    let mut rep: HashMap<usize, usize> = HashMap::new();
    if merge_entities {
        let mut first: HashMap<(EntityKind, &str), usize> = HashMap::new();
        for n in &g.nodes {
            if n.kind == NodeKind::Entity {
                let key = (n.role, n.label.as_str());
                let r = *first.entry(key).or_insert(n.id);
                rep.insert(n.id, r);
            }
        }
    }
    let resolve = |id: usize| rep.get(&id).copied().unwrap_or(id);

    let mut out = String::from("digraph cooking_program {\n  rankdir=LR;\n");
    for n in &g.nodes {
        if merge_entities && n.kind == NodeKind::Entity && resolve(n.id) != n.id {
            continue;
        }
        let (shape, color) = match n.kind {
            NodeKind::Function => ("box", "palegreen"),
            NodeKind::Entity => ("ellipse", "paleturquoise"),
        };
        let peripheries = if n.id == g.sink { 2 } else { 1 };
        out.push_str(&format!(
            "  n{} [label=\"{}\", shape={}, style=filled, fillcolor={}, peripheries={}];\n",
            n.id,
            dot_escape(&n.label),
            shape,
            color,
            peripheries
        ));
    }
    let mut emitted: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(a, b) in &g.edges {
        let e = (resolve(a), resolve(b));
        if emitted.insert(e) {
            out.push_str(&format!("  n{} -> n{};\n", e.0, e.1));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;

    fn pasta() -> Program {
        parse_program(concat!(
            "h1 = Cook(pasta, tool=pot, time='10 minutes');\n",
            "h2 = Drain(h1);\n",
            "h3 = Heat('olive oil', tool=pan);\n",
            "h4 = Saute(h3, garlic);\n",
            "h5 = Add(h4, 'tomato sauce');\n",
            "out = Mix(h2, h5);"
        ))
        .unwrap()
    }

    #[test]
    fn single_command_graph() {
        let p = parse_program("out = Boil(water);").unwrap();
        let g = to_graph(&p).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges, vec![(1, 0)]);
        assert_eq!(g.sink, 0);
        g.validate().unwrap();
    }

    #[test]
    fn two_chains_merge_at_mix() {
        let g = to_graph(&pasta()).unwrap();
        let fedges: BTreeSet<(usize, usize)> = g.function_edges().into_iter().collect();
        let expected: BTreeSet<(usize, usize)> = [(0, 1), (2, 3), (3, 4), (1, 5), (4, 5)]
            .into_iter()
            .collect();
        assert_eq!(fedges, expected);
        assert_eq!(g.sink, 5);
        g.validate().unwrap();
    }

    #[test]
    fn chain_becomes_path() {
        let p = parse_program("h1 = Boil(water);\nh2 = Drain(h1);\nout = Serve(h2);").unwrap();
        let g = to_graph(&p).unwrap();
        let fedges: BTreeSet<(usize, usize)> = g.function_edges().into_iter().collect();
        assert_eq!(fedges, [(0, 1), (1, 2)].into_iter().collect());
    }

    #[test]
    fn node_and_edge_counts() {
        let p = pasta();
        let g = to_graph(&p).unwrap();
        let functions = g.function_ids().len();
        assert_eq!(functions, p.commands.len());
        let var_refs: usize = p.commands.iter().map(|c| c.var_refs().len()).sum();
        assert_eq!(g.function_edges().len(), var_refs);
    }

    #[test]
    fn invalid_program_is_rejected() {
        let p = parse_program("out = Mix(h1);").unwrap();
        assert!(matches!(to_graph(&p), Err(GraphError::InvalidProgram(_))));
    }

    #[test]
    fn from_graph_restores_pasta() {
        let p = pasta();
        let g = to_graph(&p).unwrap();
        let q = from_graph(&g).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn cycle_is_rejected() {
        let node = |id: usize, label: &str| GraphNode {
            id,
            kind: NodeKind::Function,
            label: label.to_string(),
            role: EntityKind::Action,
        };
        let g = CookingGraph {
            nodes: vec![node(0, "Stir"), node(1, "Fold")],
            edges: vec![(0, 1), (1, 0)],
            sink: 1,
        };
        assert!(matches!(from_graph(&g), Err(GraphError::CyclicGraph)));
    }

    #[test]
    fn two_sinks_are_rejected() {
        let node = |id: usize, label: &str| GraphNode {
            id,
            kind: NodeKind::Function,
            label: label.to_string(),
            role: EntityKind::Action,
        };
        let g = CookingGraph {
            nodes: vec![node(0, "Boil"), node(1, "Chop"), node(2, "Mix")],
            edges: vec![(0, 1)],
            sink: 2,
        };
        assert!(matches!(from_graph(&g), Err(GraphError::MultipleSinks(_))));
    }

    #[test]
    fn dot_output_is_stable() {
        let p = parse_program("out = Boil(water, tool=pot);").unwrap();
        let g = to_graph(&p).unwrap();
        let dot = to_dot(&g, false);
        assert!(dot.contains("palegreen"));
        assert!(dot.contains("paleturquoise"));
        assert!(dot.contains("n1 -> n0;"));
        assert_eq!(dot, to_dot(&g, false));
    }

    #[test]
    fn dot_merge_collapses_repeated_entities() {
        let p = parse_program("h1 = Chop(onion);\nout = Fry(h1, onion);").unwrap();
        let g = to_graph(&p).unwrap();
        let merged = to_dot(&g, true);
        let unmerged = to_dot(&g, false);
        assert!(merged.matches("label=\"onion\"").count() == 1);
        assert!(unmerged.matches("label=\"onion\"").count() == 2);
    }

    #[test]
    fn json_roundtrip() {
        let g = to_graph(&pasta()).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: CookingGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn dot_escapes_quotes_and_backslashes() {
        let p = parse_program("out = Boil('a \"quoted\" \\\\ label');").unwrap();
        let dot = to_dot(&to_graph(&p).unwrap(), false);
        assert!(dot.contains(r#"label="a \"quoted\" \\ label""#));
    }

    #[test]
    fn function_subgraph_drops_entities() {
        let g = to_graph(&pasta()).unwrap();
        let f = function_subgraph(&g);
        assert_eq!(f.nodes.len(), 6);
        assert!(f.nodes.iter().all(|n| n.kind == NodeKind::Function));
        assert_eq!(f.edges.len(), g.function_edges().len());
        assert_eq!(f.sink, 5);
        f.validate().unwrap();
    }
}

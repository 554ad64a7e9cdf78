//! Core library for representing cooking recipes as programs.
//!
//! A cooking program is an ordered list of commands. Each command applies a
//! cooking action to a list of inputs (ingredient literals or references to
//! the outputs of earlier commands) under role-tagged parameters such as
//! tools, quantities, times, or temperatures:
//!
//! ```text
//! h1 = Bake(chicken, tool=oven, time='10 minutes', temp='400 degrees F');
//! out = Serve(h1);
//! ```
//!
//! The same program can be viewed as a directed acyclic graph whose function
//! nodes are connected by output-consumption edges and fed by entity nodes.
//! On top of these two views the crate provides:
//!
//! - [`dsl`]: concrete-syntax parser and canonical pretty-printer,
//! - [`graph`]: program-to-graph lowering, DAG validation, and enumeration
//!   and counting of all valid permutations (linear extensions),
//! - [`annotate`]: ingestion of word-level tagged recipes (split-and-merge
//!   parsing, entity merging, taxonomy canonicalization, program assembly),
//! - [`taxonomy`]: K-means clustering and iterative cluster merging used to
//!   build the fixed program vocabulary,
//! - [`metrics`]: graph edit distance, node-set F1, and retrieval
//!   medR / recall@K,
//! - [`losses`]: bidirectional triplet ranking loss, token cross-entropy,
//!   and minimum cross-entropy over candidate permutation sets.
//!
//! All values are immutable after construction and all operations are pure
//! functions, safe to call concurrently on shared inputs.

pub mod annotate;
pub mod dsl;
pub mod graph;
pub mod ir;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod taxonomy;

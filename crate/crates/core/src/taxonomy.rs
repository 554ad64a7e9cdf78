//! Building the fixed program vocabulary from term feature vectors:
//! seeded K-means, iterative nearest-cluster merging, and vocabulary
//! fragment extraction.
//!
//! Feature tables are supplied, not computed; the on-disk format is either
//! text (`D N` header, then `term<TAB>f1 f2 ... fD` records) or binary
//! (magic `CFTB`, little-endian u32 `d` and `n`, then length-prefixed UTF-8
//! terms each followed by `d` little-endian f32 values), auto-detected by
//! magic bytes. Distances are Euclidean; pre-normalize vectors for cosine
//! behavior.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ir::{CategoryDoc, EntityKind};

pub const FEATURE_MAGIC: &[u8; 4] = b"CFTB";

/// Unique terms with one fixed-dimension vector each.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    terms: Vec<String>,
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("feature table must contain at least one term")]
    Empty,
    #[error("term {0}: expected dimension {1}, found {2}")]
    DimensionMismatch(usize, usize, usize),
    #[error("duplicate term `{0}`")]
    DuplicateTerm(String),
    #[error("k must satisfy 1 <= k <= {n_terms}, got {k}")]
    InvalidK { k: usize, n_terms: usize },
    #[error("feature table is malformed: {0}")]
    Malformed(String),
}

impl FeatureTable {
    pub fn new(terms: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self, TaxonomyError> {
        if terms.is_empty() || terms.len() != vectors.len() {
            return Err(TaxonomyError::Empty);
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(TaxonomyError::DimensionMismatch(0, 1, 0));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(TaxonomyError::DimensionMismatch(i, dim, v.len()));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for t in &terms {
            if !seen.insert(t.as_str()) {
                return Err(TaxonomyError::DuplicateTerm(t.clone()));
            }
        }
        Ok(FeatureTable {
            terms,
            vectors,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn from_text(text: &str) -> Result<Self, TaxonomyError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| TaxonomyError::Malformed("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| TaxonomyError::Malformed(format!("bad header token `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        let [d, n] = dims.as_slice() else {
            return Err(TaxonomyError::Malformed("header must be `D N`".into()));
        };
        let mut terms = Vec::with_capacity(*n);
        let mut vectors = Vec::with_capacity(*n);
        for (lineno, line) in lines {
            let (term, rest) = line.split_once('\t').ok_or_else(|| {
                TaxonomyError::Malformed(format!("line {}: expected `term<TAB>floats`", lineno + 1))
            })?;
            let vec: Vec<f64> = rest
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        TaxonomyError::Malformed(format!("line {}: bad float `{t}`", lineno + 1))
                    })
                })
                .collect::<Result<_, _>>()?;
            if vec.len() != *d {
                return Err(TaxonomyError::DimensionMismatch(terms.len(), *d, vec.len()));
            }
            terms.push(term.to_string());
            vectors.push(vec);
        }
        if terms.len() != *n {
            return Err(TaxonomyError::Malformed(format!(
                "header promised {n} records, found {}",
                terms.len()
            )));
        }
        FeatureTable::new(terms, vectors)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim, self.terms.len());
        for (term, vec) in self.terms.iter().zip(&self.vectors) {
            let floats: Vec<String> = vec.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("{term}\t{}\n", floats.join(" ")));
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self, TaxonomyError> {
        let err = || TaxonomyError::Malformed("truncated binary feature table".into());
        if bytes.len() < 12 || &bytes[0..4] != FEATURE_MAGIC {
            return Err(err());
        }
        let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut pos = 12usize;
        let mut terms = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n);
        for _ in 0..n {
            if pos + 4 > bytes.len() {
                return Err(err());
            }
            let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
            pos += 4;
            if pos + len + d * 4 > bytes.len() {
                return Err(err());
            }
            let term = std::str::from_utf8(&bytes[pos..pos + len])
                .map_err(|_| TaxonomyError::Malformed("term is not UTF-8".into()))?
                .to_string();
            pos += len;
            let vec: Vec<f64> = bytes[pos..pos + d * 4]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                .collect();
            pos += d * 4;
            terms.push(term);
            vectors.push(vec);
        }
        FeatureTable::new(terms, vectors)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.terms.len() as u32).to_le_bytes());
        for (term, vec) in self.terms.iter().zip(&self.vectors) {
            out.extend_from_slice(&(term.len() as u32).to_le_bytes());
            out.extend_from_slice(term.as_bytes());
            for &v in vec {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TaxonomyError> {
        if bytes.starts_with(FEATURE_MAGIC) {
            FeatureTable::from_binary(bytes)
        } else {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| TaxonomyError::Malformed("not UTF-8 text".into()))?;
            FeatureTable::from_text(text)
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean(vectors: &[Vec<f64>], members: &[usize], dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for &i in members {
        for (acc, v) in m.iter_mut().zip(&vectors[i]) {
            *acc += v;
        }
    }
    for acc in &mut m {
        *acc /= members.len() as f64;
    }
    m
}

/// A clustering of the feature table's terms. Every cluster is non-empty,
/// its centroid is the mean of its members' vectors, and its name is the
/// member closest to the centroid (distance ties broken lexicographically).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    terms: Vec<String>,
    vectors: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    sizes: Vec<usize>,
    names: Vec<String>,
}

impl ClusterSet {
    fn finalize(
        terms: Vec<String>,
        vectors: Vec<Vec<f64>>,
        assignment: Vec<usize>,
        centroids: Vec<Vec<f64>>,
    ) -> Self {
        let k = centroids.len();
        let mut sizes = vec![0usize; k];
        for &c in &assignment {
            sizes[c] += 1;
        }
        let mut names = vec![String::new(); k];
        let mut best = vec![f64::INFINITY; k];
        for (i, term) in terms.iter().enumerate() {
            let c = assignment[i];
            let d = dist2(&vectors[i], &centroids[c]);
            let better = d < best[c] || (d == best[c] && (names[c].is_empty() || *term < names[c]));
            if better {
                best[c] = d;
                names[c] = term.clone();
            }
        }
        ClusterSet {
            terms,
            vectors,
            assignment,
            centroids,
            sizes,
            names,
        }
    }

    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<&str> {
        self.terms
            .iter()
            .enumerate()
            .filter(|(i, _)| self.assignment[*i] == cluster)
            .map(|(_, t)| t.as_str())
            .collect()
    }

    /// Sum of squared distances from each term to its assigned centroid.
    pub fn distortion(&self) -> f64 {
        self.assignment
            .iter()
            .enumerate()
            .map(|(i, &c)| dist2(&self.vectors[i], &self.centroids[c]))
            .sum()
    }
}

/// Deterministic K-means: the seed picks the first center, the rest follow
/// by farthest-first traversal (ties to the smallest index), then Lloyd
/// iterations run until assignments are stable or 100 rounds. A cluster
/// emptied by reassignment is re-seeded from the point farthest from its
/// own centroid; clusters that still cannot be filled (fewer distinct
/// points than `k`) are dropped in the result.
pub fn kmeans(table: &FeatureTable, k: usize, seed: u64) -> Result<ClusterSet, TaxonomyError> {
    kmeans_with_trace(table, k, seed).map(|(cs, _)| cs)
}

/// [`kmeans`] plus the distortion measured after each assignment step; the
/// sequence is non-increasing.
pub fn kmeans_with_trace(
    table: &FeatureTable,
    k: usize,
    seed: u64,
) -> Result<(ClusterSet, Vec<f64>), TaxonomyError> {
    let n = table.len();
    if k < 1 || k > n {
        return Err(TaxonomyError::InvalidK { k, n_terms: n });
    }
    let vectors = table.vectors();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut min_d2: Vec<f64> = (0..n)
        .map(|i| dist2(&vectors[i], &vectors[first]))
        .collect();
    while chosen.len() < k {
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &d) in min_d2.iter().enumerate() {
            if !chosen.contains(&i) && d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(next) = far else { break };
        chosen.push(next);
        for (i, slot) in min_d2.iter_mut().enumerate() {
            let d = dist2(&vectors[i], &vectors[next]);
            if d < *slot {
                *slot = d;
            }
        }
    }
    let mut centroids: Vec<Vec<f64>> = chosen.iter().map(|&i| vectors[i].clone()).collect();
    let k = centroids.len();

    let assign = |centroids: &[Vec<f64>]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (c, centroid) in centroids.iter().enumerate() {
                    let d = dist2(&vectors[i], centroid);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };

    let measure = |assignment: &[usize], centroids: &[Vec<f64>]| -> f64 {
        assignment
            .iter()
            .enumerate()
            .map(|(i, &c)| dist2(&vectors[i], &centroids[c]))
            .sum()
    };

    let mut assignment = assign(&centroids);
    let mut trace = vec![measure(&assignment, &centroids)];
    for _ in 0..100 {
        // Re-seed empty clusters from the farthest point of a multi-member
        // cluster; singletons stay put so no cluster is emptied in turn.
        loop {
            let mut sizes = vec![0usize; k];
            for &c in &assignment {
                sizes[c] += 1;
            }
            let Some(empty) = sizes.iter().position(|&s| s == 0) else {
                break;
            };
            let mut far: Option<usize> = None;
            let mut far_d = -1.0;
            for i in 0..n {
                if sizes[assignment[i]] < 2 {
                    continue;
                }
                let d = dist2(&vectors[i], &centroids[assignment[i]]);
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
            let Some(point) = far else { break };
            assignment[point] = empty;
            centroids[empty] = vectors[point].clone();
        }

        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if !members.is_empty() {
                *centroid = mean(vectors, &members, table.dim());
            }
        }
        let next = assign(&centroids);
        trace.push(measure(&next, &centroids));
        if next == assignment {
            break;
        }
        assignment = next;
    }

    // Drop clusters that stayed empty and renumber.
    let mut sizes = vec![0usize; k];
    for &c in &assignment {
        sizes[c] += 1;
    }
    let keep: Vec<usize> = (0..k).filter(|&c| sizes[c] > 0).collect();
    let remap: std::collections::HashMap<usize, usize> = keep
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let centroids: Vec<Vec<f64>> = keep.iter().map(|&c| centroids[c].clone()).collect();
    let assignment: Vec<usize> = assignment.into_iter().map(|c| remap[&c]).collect();

    Ok((
        ClusterSet::finalize(
            table.terms().to_vec(),
            vectors.to_vec(),
            assignment,
            centroids,
        ),
        trace,
    ))
}

/// A merge the interactive mode asks about.
#[derive(Debug, Clone)]
pub struct MergeProposal<'a> {
    pub a_name: &'a str,
    pub b_name: &'a str,
    pub a_size: usize,
    pub b_size: usize,
    pub distance: f64,
}

/// [`iterative_merge_with`] accepting every proposal.
pub fn iterative_merge(c: &ClusterSet, threshold: f64) -> ClusterSet {
    iterative_merge_with(c, threshold, |_| true)
}

/// Repeatedly merge the globally closest pair of centroids while their
/// distance is strictly below `threshold`, recomputing the merged centroid
/// as the size-weighted mean. Ties break toward the smaller cluster-id
/// pair. `confirm` stands in for the manual nearest-neighbor check: a
/// declined pair is never offered again. On return no un-rejected pair is
/// closer than `threshold`.
pub fn iterative_merge_with(
    c: &ClusterSet,
    threshold: f64,
    mut confirm: impl FnMut(&MergeProposal<'_>) -> bool,
) -> ClusterSet {
    let k = c.cluster_count();
    let mut centroids: Vec<Option<Vec<f64>>> = c.centroids.iter().cloned().map(Some).collect();
    let mut sizes: Vec<usize> = c.sizes.clone();
    // Where each original cluster ended up.
    let mut target: Vec<usize> = (0..k).collect();
    let mut rejected: std::collections::HashSet<(usize, usize)> = Default::default();

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, ci_slot) in centroids.iter().enumerate() {
            let Some(ci) = ci_slot else { continue };
            for (j, cj_slot) in centroids.iter().enumerate().skip(i + 1) {
                let Some(cj) = cj_slot else { continue };
                if rejected.contains(&(i, j)) {
                    continue;
                }
                let d = dist2(ci, cj).sqrt();
                if d < threshold {
                    let better = match best {
                        None => true,
                        Some((bd, bi, bj)) => d < bd || (d == bd && (i, j) < (bi, bj)),
                    };
                    if better {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        let Some((d, i, j)) = best else { break };
        // Prompt with the original representatives of the two slots; good
        // enough to identify the clusters being merged.
        let proposal = MergeProposal {
            a_name: &c.names[i],
            b_name: &c.names[j],
            a_size: sizes[i],
            b_size: sizes[j],
            distance: d,
        };
        if !confirm(&proposal) {
            rejected.insert((i, j));
            continue;
        }
        let (wi, wj) = (sizes[i] as f64, sizes[j] as f64);
        let merged: Vec<f64> = centroids[i]
            .as_ref()
            .unwrap()
            .iter()
            .zip(centroids[j].as_ref().unwrap())
            .map(|(a, b)| (a * wi + b * wj) / (wi + wj))
            .collect();
        centroids[i] = Some(merged);
        centroids[j] = None;
        sizes[i] += sizes[j];
        sizes[j] = 0;
        for t in target.iter_mut() {
            if *t == j {
                *t = i;
            }
        }
        // Pairs involving the merged cluster are fresh proposals again.
        rejected.retain(|&(a, b)| a != i && b != i);
    }

    let live: Vec<usize> = (0..k).filter(|&i| centroids[i].is_some()).collect();
    let remap: std::collections::HashMap<usize, usize> = live
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let assignment: Vec<usize> = c
        .assignment
        .iter()
        .map(|&orig| remap[&target[orig]])
        .collect();
    let centroids: Vec<Vec<f64>> = live
        .iter()
        .map(|&i| centroids[i].clone().unwrap())
        .collect();
    ClusterSet::finalize(c.terms.clone(), c.vectors.clone(), assignment, centroids)
}

/// Turn a clustering into one vocabulary category: each cluster's
/// representative becomes a canonical term and its other members become
/// synonyms of it.
pub fn build_vocabulary(c: &ClusterSet, kind: EntityKind) -> CategoryDoc {
    let canonical: Vec<String> = c.names.to_vec();
    let mut synonyms = std::collections::BTreeMap::new();
    for (i, term) in c.terms.iter().enumerate() {
        let rep = &c.names[c.assignment[i]];
        if term != rep {
            synonyms.insert(term.clone(), rep.clone());
        }
    }
    CategoryDoc {
        category: kind.name().to_string(),
        canonical,
        synonyms,
    }
}

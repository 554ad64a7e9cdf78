//! Cross-modal retrieval evaluation: median rank and recall@K over sampled
//! pools of query/candidate pairs.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

/// Averaged retrieval metrics. `med_r` can be fractional: the median of an
/// even-sized pool is the mean of the two middle ranks, and trials are
/// averaged. Recalls are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub med_r: f64,
    pub recall_at: BTreeMap<usize, f64>,
    pub trials: usize,
    pub pool: usize,
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("similarity matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("pool size {pool} exceeds the number of pairs {n}")]
    PoolTooLarge { pool: usize, n: usize },
    #[error("pool and trials must be at least 1")]
    InvalidParams,
}

/// 1-based rank of each pool member's true match when its row is sorted by
/// descending similarity, ties broken by candidate index.
fn ranks_for_pool(sim: &Matrix, pool: &[usize]) -> Vec<usize> {
    pool.iter()
        .map(|&q| {
            let own = sim.get(q, q);
            let ahead = pool
                .iter()
                .filter(|&&c| {
                    c != q && {
                        let s = sim.get(q, c);
                        s > own || (s == own && c < q)
                    }
                })
                .count();
            ahead + 1
        })
        .collect()
}

fn median(ranks: &mut [usize]) -> f64 {
    ranks.sort_unstable();
    let n = ranks.len();
    if n % 2 == 1 {
        ranks[n / 2] as f64
    } else {
        (ranks[n / 2 - 1] + ranks[n / 2]) as f64 / 2.0
    }
}

/// Evaluate the retrieval protocol on a square similarity matrix whose rows
/// are queries and whose diagonal holds the true matches: for each trial,
/// sample `pool` pairs with the seeded generator, rank every query's true
/// match inside the pool, and report medR and recall@K averaged over
/// trials. Transpose `sim` to evaluate the opposite direction. Results
/// depend only on the similarity ordering, never on the similarity values
/// themselves.
pub fn retrieval_metrics(
    sim: &Matrix,
    trials: usize,
    pool: usize,
    ks: &[usize],
    seed: u64,
) -> Result<RetrievalReport, RetrievalError> {
    let n = sim.rows();
    if sim.cols() != n {
        return Err(RetrievalError::NotSquare(sim.rows(), sim.cols()));
    }
    if pool == 0 || trials == 0 {
        return Err(RetrievalError::InvalidParams);
    }
    if pool > n {
        return Err(RetrievalError::PoolTooLarge { pool, n });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut med_sum = 0.0;
    let mut recall_sums: BTreeMap<usize, f64> = ks.iter().map(|&k| (k, 0.0)).collect();
    for _ in 0..trials {
        let indices = rand::seq::index::sample(&mut rng, n, pool).into_vec();
        let mut ranks = ranks_for_pool(sim, &indices);
        for (&k, sum) in recall_sums.iter_mut() {
            let hits = ranks.iter().filter(|&&r| r <= k).count();
            *sum += 100.0 * hits as f64 / pool as f64;
        }
        med_sum += median(&mut ranks);
    }
    Ok(RetrievalReport {
        med_r: med_sum / trials as f64,
        recall_at: recall_sums
            .into_iter()
            .map(|(k, sum)| (k, sum / trials as f64))
            .collect(),
        trials,
        pool,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[test]
    fn identity_matrix_is_perfect() {
        let report = retrieval_metrics(&identity(10), 3, 10, &[1, 5, 10], 0).unwrap();
        assert_eq!(report.med_r, 1.0);
        assert_eq!(report.recall_at[&1], 100.0);
        assert_eq!(report.recall_at[&5], 100.0);
        assert_eq!(report.recall_at[&10], 100.0);
    }

    #[test]
    fn true_match_ranked_last() {
        // Every off-diagonal similarity beats the diagonal, so the true
        // match ranks 10th of 10 for every query.
        let n = 10;
        let mut m = Matrix::zeros(n, n);
        for q in 0..n {
            for c in 0..n {
                m.set(q, c, if q == c { 0.0 } else { 1.0 });
            }
        }
        let report = retrieval_metrics(&m, 1, n, &[1, 5, 10], 7).unwrap();
        assert_eq!(report.med_r, 10.0);
        assert_eq!(report.recall_at[&10], 100.0);
        assert_eq!(report.recall_at[&5], 0.0);
    }

    #[test]
    fn rank_ties_break_by_index() {
        // All similarities equal: for query q, candidates with smaller
        // index rank ahead, so rank(q) = q + 1 within a full pool.
        let n = 4;
        let mut m = Matrix::zeros(n, n);
        for q in 0..n {
            for c in 0..n {
                m.set(q, c, 0.5);
            }
        }
        let pool: Vec<usize> = (0..n).collect();
        assert_eq!(ranks_for_pool(&m, &pool), vec![1, 2, 3, 4]);
    }

    #[test]
    fn pool_sampling_order_does_not_matter() {
        let n = 9;
        let mut m = Matrix::zeros(n, n);
        for q in 0..n {
            for c in 0..n {
                m.set(q, c, ((q * 5 + c * 11) % 7) as f64);
            }
        }
        let pool = vec![7, 2, 5, 0, 8];
        let mut shuffled = pool.clone();
        shuffled.reverse();
        let mut a = ranks_for_pool(&m, &pool);
        let mut b = ranks_for_pool(&m, &shuffled);
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_transform_invariance() {
        let n = 8;
        let mut m = Matrix::zeros(n, n);
        for q in 0..n {
            for c in 0..n {
                m.set(q, c, ((q * 31 + c * 17) % 13) as f64 / 13.0);
            }
        }
        let mut t = Matrix::zeros(n, n);
        for q in 0..n {
            for c in 0..n {
                t.set(q, c, (3.0 * m.get(q, c)).exp());
            }
        }
        let a = retrieval_metrics(&m, 4, 5, &[1, 5], 11).unwrap();
        let b = retrieval_metrics(&t, 4, 5, &[1, 5], 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pool_too_large_is_an_error() {
        assert!(matches!(
            retrieval_metrics(&identity(4), 1, 5, &[1], 0),
            Err(RetrievalError::PoolTooLarge { pool: 5, n: 4 })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let n = 12;
        let mut m = Matrix::zeros(n, n);
        for q in 0..n {
            for c in 0..n {
                m.set(q, c, ((q * 7 + c * 3) % 11) as f64);
            }
        }
        let a = retrieval_metrics(&m, 5, 6, &[1, 5, 10], 42).unwrap();
        let b = retrieval_metrics(&m, 5, 6, &[1, 5, 10], 42).unwrap();
        assert_eq!(a, b);
        let c = retrieval_metrics(&m, 5, 6, &[1, 5, 10], 43).unwrap();
        assert!(a != c || a.med_r == c.med_r);
    }
}

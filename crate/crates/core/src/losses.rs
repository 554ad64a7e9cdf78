//! Pure numeric kernels for the training objectives: the bidirectional
//! triplet ranking loss over cosine similarities, token-sequence
//! cross-entropy, its minimum over a candidate permutation set, and the
//! weighted total. No gradients, no model code; inputs are plain arrays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::TokenSeq;
use crate::matrix::Matrix;

/// Probability floor applied before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Tolerance for validating that probability rows sum to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("image and text sides must have the same shape (N x d), both non-degenerate")]
    ShapeMismatch,
    #[error("{side} vector {index} has zero norm; cosine similarity is undefined")]
    ZeroVector { side: &'static str, index: usize },
    #[error("batch must contain at least two pairs")]
    BatchTooSmall,
    #[error("prediction row {row} is not a probability distribution")]
    InvalidDistribution { row: usize },
    #[error("expected a sequence of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("token {token} at step {step} is outside the {vocab}-token table")]
    TokenOutOfRange {
        step: usize,
        token: u32,
        vocab: usize,
    },
    #[error("candidate set is empty")]
    EmptyCandidateSet,
}

/// Index-aligned image/text embedding pairs: row `i` on each side belongs
/// to the same recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    images: Vec<Vec<f64>>,
    texts: Vec<Vec<f64>>,
}

impl EmbeddingBatch {
    pub fn new(images: Vec<Vec<f64>>, texts: Vec<Vec<f64>>) -> Result<Self, LossError> {
        if images.is_empty() || images.len() != texts.len() {
            return Err(LossError::ShapeMismatch);
        }
        let d = images[0].len();
        if d == 0 || images.iter().any(|v| v.len() != d) || texts.iter().any(|v| v.len() != d) {
            return Err(LossError::ShapeMismatch);
        }
        Ok(EmbeddingBatch { images, texts })
    }

    pub fn from_matrices(images: &Matrix, texts: &Matrix) -> Result<Self, LossError> {
        EmbeddingBatch::new(images.to_rows(), texts.to_rows())
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Which positive similarity anchors the second hinge term.
///
/// The loss sums, over ordered pairs `(i, j)` with `j != i`, two hinge
/// terms whose positive term is `s(i,i)` in both directions. Reading the
/// second direction against `s(j,j)` instead is a defensible alternative;
/// [`TripletFormulation::PerDirectionPositive`] selects it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TripletFormulation {
    /// Both hinge terms compare against `s(i,i)`, as written.
    #[default]
    SharedPositive,
    /// The reversed term compares against `s(j,j)`.
    PerDirectionPositive,
}

fn cosine_table(batch: &EmbeddingBatch) -> Result<Vec<Vec<f64>>, LossError> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n = batch.len();
    let img_norms: Vec<f64> = batch.images.iter().map(|v| norm(v)).collect();
    let txt_norms: Vec<f64> = batch.texts.iter().map(|v| norm(v)).collect();
    if let Some(index) = img_norms.iter().position(|&n| n == 0.0) {
        return Err(LossError::ZeroVector {
            side: "image",
            index,
        });
    }
    if let Some(index) = txt_norms.iter().position(|&n| n == 0.0) {
        return Err(LossError::ZeroVector {
            side: "text",
            index,
        });
    }
    let mut sims = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = batch.images[i]
                .iter()
                .zip(&batch.texts[j])
                .map(|(a, b)| a * b)
                .sum();
            sims[i][j] = dot / (img_norms[i] * txt_norms[j]);
        }
    }
    Ok(sims)
}

/// Bidirectional max-margin triplet loss over a batch:
/// `(1/N) * sum_{i, j != i} [max(0, s(i,j) - s(i,i) + m)
///                         + max(0, s(j,i) - s(i,i) + m)]`
/// with `s` the cosine similarity between image `i` and text `j`. Scaling
/// any embedding by a positive constant leaves the loss unchanged.
pub fn triplet_bidirectional_loss(batch: &EmbeddingBatch, margin: f64) -> Result<f64, LossError> {
    triplet_loss_with(batch, margin, TripletFormulation::SharedPositive)
}

pub fn triplet_loss_with(
    batch: &EmbeddingBatch,
    margin: f64,
    formulation: TripletFormulation,
) -> Result<f64, LossError> {
    let n = batch.len();
    if n < 2 {
        return Err(LossError::BatchTooSmall);
    }
    let s = cosine_table(batch)?;
    let hinge = |x: f64| x.max(0.0);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let reverse_positive = match formulation {
                TripletFormulation::SharedPositive => s[i][i],
                TripletFormulation::PerDirectionPositive => s[j][j],
            };
            total += hinge(s[i][j] - s[i][i] + margin);
            total += hinge(s[j][i] - reverse_positive + margin);
        }
    }
    Ok(total / n as f64)
}

/// Per-step probability distributions over the token table: a `T x V`
/// matrix whose rows are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedSequence {
    rows: Vec<Vec<f64>>,
}

impl PredictedSequence {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, LossError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(LossError::InvalidDistribution { row: 0 });
        }
        let v = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != v
                || row
                    .iter()
                    .any(|&p| !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&p))
                || (sum - 1.0).abs() > ROW_SUM_TOLERANCE
            {
                return Err(LossError::InvalidDistribution { row: i });
            }
        }
        Ok(PredictedSequence { rows })
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self, LossError> {
        PredictedSequence::new(m.to_rows())
    }

    /// Convert raw scores to probabilities row by row (softmax with
    /// max-subtraction).
    pub fn from_logits(logits: &[Vec<f64>]) -> Result<Self, LossError> {
        if logits.is_empty() || logits[0].is_empty() {
            return Err(LossError::InvalidDistribution { row: 0 });
        }
        let rows = logits
            .iter()
            .map(|row| {
                let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let exps: Vec<f64> = row.iter().map(|&x| (x - max).exp()).collect();
                let z: f64 = exps.iter().sum();
                exps.into_iter().map(|e| e / z).collect()
            })
            .collect();
        PredictedSequence::new(rows)
    }

    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.rows[0].len()
    }
}

/// Mean over steps of `-ln(pred[t][target_t])`, with probabilities floored
/// at [`PROB_FLOOR`] before the log.
pub fn cross_entropy(pred: &PredictedSequence, target: &TokenSeq) -> Result<f64, LossError> {
    if target.ids.len() != pred.steps() {
        return Err(LossError::LengthMismatch {
            expected: pred.steps(),
            got: target.ids.len(),
        });
    }
    let v = pred.vocab_size();
    let mut total = 0.0;
    for (step, (&token, row)) in target.ids.iter().zip(&pred.rows).enumerate() {
        let t = token as usize;
        if t >= v {
            return Err(LossError::TokenOutOfRange {
                step,
                token,
                vocab: v,
            });
        }
        // Clamp into (0, 1]: rows may carry values a hair above 1 within
        // the validation tolerance, and the loss must stay non-negative.
        total -= row[t].clamp(PROB_FLOOR, 1.0).ln();
    }
    Ok(total / pred.steps() as f64)
}

/// Minimum cross-entropy over a candidate set and the index achieving it
/// (smallest index on ties). With a single candidate this is exactly
/// [`cross_entropy`].
pub fn min_ce_over_candidates(
    pred: &PredictedSequence,
    candidates: &[TokenSeq],
) -> Result<(f64, usize), LossError> {
    if candidates.is_empty() {
        return Err(LossError::EmptyCandidateSet);
    }
    let mut best: Option<(f64, usize)> = None;
    for (j, cand) in candidates.iter().enumerate() {
        let ce = cross_entropy(pred, cand)?;
        if best.is_none_or(|(b, _)| ce < b) {
            best = Some((ce, j));
        }
    }
    Ok(best.expect("candidates checked non-empty"))
}

/// Relative weights of the loss components and the triplet margin, with the
/// standard defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_ss: f64,
    pub lambda_pv: f64,
    pub lambda_pt: f64,
    pub margin: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_ss: 1.0,
            lambda_pv: 0.1,
            lambda_pt: 0.1,
            margin: 0.3,
        }
    }
}

/// `lambda_ss * l_ss + lambda_pv * l_pv + lambda_pt * l_pt`.
pub fn total_loss(l_ss: f64, l_pv: f64, l_pt: f64, w: &LossWeights) -> f64 {
    w.lambda_ss * l_ss + w.lambda_pv * l_pv + w.lambda_pt * l_pt
}

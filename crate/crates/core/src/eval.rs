//! Common-object-pair evaluation: cross-pair enumeration, top-K selection,
//! greedy true-positive classification, recall/precision/AP, and the
//! hard/soft matching baselines over per-category probability vectors.

use crate::detection::{combined_score, cosine, pair_similarity, Detection, ScoredPair};
use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

/// A ground-truth box with its category.
#[derive(Debug, Clone)]
pub struct GroundTruthBox {
    pub bbox: BBox,
    pub category: usize,
}

/// Pair score formula used during enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreForm {
    /// s₁ · s₂ · cos(x₁, x₂).
    Eq2,
    /// s₁ · s₂ · √max(cos, 0).
    CombinedSqrt,
}

/// Evaluation protocol parameters.
#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    /// Number of highest-scoring pairs kept. Default 100.
    pub top_k: usize,
    /// A box matches a ground-truth box when IoU exceeds this. Default 0.5.
    pub iou_threshold: f64,
    /// Pairs must score strictly above this to be kept. The default of
    /// negative infinity keeps everything.
    pub similarity_threshold: f64,
    pub score_form: ScoreForm,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            top_k: 100,
            iou_threshold: 0.5,
            similarity_threshold: f64::NEG_INFINITY,
            score_form: ScoreForm::Eq2,
        }
    }
}

/// Evaluation outcome for one image pair at one IoU threshold.
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub recall: f64,
    pub precision: f64,
    pub average_precision: f64,
    /// Per-prediction true-positive flags, in score order.
    pub tp_flags: Vec<bool>,
}

/// Sorts descending by score, breaking ties by lower `index_a` then lower
/// `index_b`, and truncates to `top_k`.
fn rank_and_truncate(mut pairs: Vec<ScoredPair>, cfg: &EvalConfig) -> Vec<ScoredPair> {
    pairs.retain(|p| p.score > cfg.similarity_threshold);
    pairs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.index_a.cmp(&b.index_a))
            .then(a.index_b.cmp(&b.index_b))
    });
    pairs.truncate(cfg.top_k);
    pairs
}

/// Scores every cross pair of the two detection sets and keeps the top K.
pub fn enumerate_top_pairs(
    dets_a: &[Detection],
    dets_b: &[Detection],
    cfg: &EvalConfig,
) -> Result<Vec<ScoredPair>> {
    let mut pairs = Vec::with_capacity(dets_a.len() * dets_b.len());
    for (ia, a) in dets_a.iter().enumerate() {
        for (ib, b) in dets_b.iter().enumerate() {
            let score = match cfg.score_form {
                ScoreForm::Eq2 => pair_similarity(a, b)?,
                ScoreForm::CombinedSqrt => {
                    combined_score(a.score(), b.score(), cosine(&a.embedding, &b.embedding)?)
                }
            };
            pairs.push(ScoredPair { index_a: ia, index_b: ib, score });
        }
    }
    Ok(rank_and_truncate(pairs, cfg))
}

/// Matches a box to the ground-truth box with the highest IoU above the
/// threshold; ties go to the lowest ground-truth index.
fn match_box(bbox: &BBox, gts: &[GroundTruthBox], threshold: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (g, gt) in gts.iter().enumerate() {
        let overlap = iou(bbox, &gt.bbox).unwrap_or(0.0);
        if overlap > threshold {
            let better = match best {
                None => true,
                Some((_, best_iou)) => overlap > best_iou,
            };
            if better {
                best = Some((g, overlap));
            }
        }
    }
    best.map(|(g, _)| g)
}

/// Classifies ranked pairs as true or false positives.
///
/// In score order, a pair is a true positive iff each box matches a
/// ground-truth box in its image above the IoU threshold, the two matched
/// ground-truth boxes share a category, and that matched ground-truth pair
/// has not been consumed by an earlier true positive.
pub fn classify_pairs(
    pairs: &[ScoredPair],
    boxes_a: &[BBox],
    boxes_b: &[BBox],
    gts_a: &[GroundTruthBox],
    gts_b: &[GroundTruthBox],
    cfg: &EvalConfig,
) -> Vec<bool> {
    let mut consumed: Vec<(usize, usize)> = Vec::new();
    let mut flags = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let tp = (|| {
            let ga = match_box(&boxes_a[pair.index_a], gts_a, cfg.iou_threshold)?;
            let gb = match_box(&boxes_b[pair.index_b], gts_b, cfg.iou_threshold)?;
            if gts_a[ga].category != gts_b[gb].category {
                return None;
            }
            if consumed.contains(&(ga, gb)) {
                return None;
            }
            consumed.push((ga, gb));
            Some(())
        })()
        .is_some();
        flags.push(tp);
    }
    flags
}

/// Recall = TP / n_gt_pairs and precision = TP / (TP + FP), each 0 when its
/// denominator is 0. Recall is capped at 1 when the matched ground-truth
/// pair universe is larger than the sampled denominator.
pub fn recall_precision(tp_flags: &[bool], n_gt_pairs: usize) -> (f64, f64) {
    let tp = tp_flags.iter().filter(|&&f| f).count();
    let recall = if n_gt_pairs == 0 {
        0.0
    } else {
        (tp as f64 / n_gt_pairs as f64).min(1.0)
    };
    let precision = if tp_flags.is_empty() {
        0.0
    } else {
        tp as f64 / tp_flags.len() as f64
    };
    (recall, precision)
}

/// Area under the precision-recall curve with the monotone-decreasing
/// precision envelope (continuous integration, no point interpolation).
pub fn average_precision(tp_flags: &[bool], n_gt_pairs: usize) -> f64 {
    if n_gt_pairs == 0 || tp_flags.is_empty() {
        return 0.0;
    }
    let mut recalls = Vec::with_capacity(tp_flags.len());
    let mut precisions = Vec::with_capacity(tp_flags.len());
    let mut tp = 0usize;
    for (rank, &flag) in tp_flags.iter().enumerate() {
        if flag {
            tp += 1;
        }
        recalls.push((tp as f64 / n_gt_pairs as f64).min(1.0));
        precisions.push(tp as f64 / (rank + 1) as f64);
    }
    // Monotone envelope from the right.
    for k in (0..precisions.len().saturating_sub(1)).rev() {
        precisions[k] = precisions[k].max(precisions[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recalls.iter().zip(&precisions) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    ap
}

/// Convenience wrapper: classify, then reduce to recall/precision/AP.
pub fn evaluate_pairs(
    pairs: &[ScoredPair],
    boxes_a: &[BBox],
    boxes_b: &[BBox],
    gts_a: &[GroundTruthBox],
    gts_b: &[GroundTruthBox],
    n_gt_pairs: usize,
    cfg: &EvalConfig,
) -> EvalResult {
    let tp_flags = classify_pairs(pairs, boxes_a, boxes_b, gts_a, gts_b, cfg);
    let (recall, precision) = recall_precision(&tp_flags, n_gt_pairs);
    let average_precision = average_precision(&tp_flags, n_gt_pairs);
    EvalResult { recall, precision, average_precision, tp_flags }
}

/// A detection described by per-category probabilities, as produced by a
/// standard closed-set detector.
#[derive(Debug, Clone)]
pub struct ClassProbBox {
    pub bbox: BBox,
    pub probs: Vec<f64>,
}

impl ClassProbBox {
    /// Highest-probability category; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0usize;
        for (j, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = j;
            }
        }
        best
    }
}

fn check_prob_dims(dets_a: &[ClassProbBox], dets_b: &[ClassProbBox]) -> Result<()> {
    let dims: Vec<usize> = dets_a.iter().chain(dets_b).map(|d| d.probs.len()).collect();
    if let (Some(&first), rest) = (dims.first(), &dims[dims.len().min(1)..]) {
        for &d in rest {
            if d != first {
                return Err(Error::DimensionMismatch { expected: first, got: d });
            }
        }
    }
    Ok(())
}

/// Hard-matching baseline: boxes pair when their argmax categories agree,
/// scored by the product of the two max probabilities.
pub fn hard_match(
    dets_a: &[ClassProbBox],
    dets_b: &[ClassProbBox],
    cfg: &EvalConfig,
) -> Result<Vec<ScoredPair>> {
    check_prob_dims(dets_a, dets_b)?;
    let mut pairs = Vec::new();
    for (ia, a) in dets_a.iter().enumerate() {
        for (ib, b) in dets_b.iter().enumerate() {
            let ca = a.argmax();
            if ca == b.argmax() {
                pairs.push(ScoredPair {
                    index_a: ia,
                    index_b: ib,
                    score: a.probs[ca] * b.probs[ca],
                });
            }
        }
    }
    Ok(rank_and_truncate(pairs, cfg))
}

/// Soft-matching baseline: every cross pair scored by the cosine of the
/// probability vectors. A zero probability vector has no direction and is
/// rejected.
pub fn soft_match(
    dets_a: &[ClassProbBox],
    dets_b: &[ClassProbBox],
    cfg: &EvalConfig,
) -> Result<Vec<ScoredPair>> {
    check_prob_dims(dets_a, dets_b)?;
    let norms = |dets: &[ClassProbBox]| -> Result<Vec<f64>> {
        dets.iter()
            .map(|d| {
                let n: f64 = d.probs.iter().map(|p| p * p).sum::<f64>().sqrt();
                if n == 0.0 {
                    Err(Error::ZeroVector)
                } else {
                    Ok(n)
                }
            })
            .collect()
    };
    let norms_a = norms(dets_a)?;
    let norms_b = norms(dets_b)?;
    let mut pairs = Vec::new();
    for (ia, a) in dets_a.iter().enumerate() {
        for (ib, b) in dets_b.iter().enumerate() {
            let dot: f64 = a.probs.iter().zip(&b.probs).map(|(x, y)| x * y).sum();
            pairs.push(ScoredPair {
                index_a: ia,
                index_b: ib,
                score: (dot / (norms_a[ia] * norms_b[ib])).clamp(-1.0, 1.0),
            });
        }
    }
    Ok(rank_and_truncate(pairs, cfg))
}

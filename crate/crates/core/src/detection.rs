//! Detection tuples and the pair-matching score formulas.

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Unit-norm representation vector of a detected object.
///
/// The constructor normalizes its input; a zero (or non-finite) vector is
/// rejected because it has no direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let norm_sq: f64 = values.iter().map(|v| v * v).sum();
        if norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(Error::ZeroVector);
        }
        let norm = norm_sq.sqrt();
        Ok(Self {
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Cosine similarity of two unit embeddings: their dot product, clamped to
/// [-1, 1] against rounding overshoot.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// A predicted box bundle: location, objectness, centeredness and embedding.
/// The detection score is computed, not stored.
#[derive(Debug, Clone)]
pub struct Detection {
    pub bbox: BBox,
    pub objectness: f64,
    pub centeredness: f64,
    pub embedding: Embedding,
}

impl Detection {
    pub fn new(bbox: BBox, objectness: f64, centeredness: f64, embedding: Embedding) -> Result<Self> {
        if !(0.0..=1.0).contains(&objectness) {
            return Err(Error::OutOfRange {
                name: "objectness",
                value: objectness,
                range: "[0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&centeredness) {
            return Err(Error::OutOfRange {
                name: "centeredness",
                value: centeredness,
                range: "[0, 1]",
            });
        }
        Ok(Self {
            bbox,
            objectness,
            centeredness,
            embedding,
        })
    }

    /// Detection score p_o · p_c.
    pub fn score(&self) -> f64 {
        self.objectness * self.centeredness
    }
}

/// Detection score of `d`: objectness times centeredness.
pub fn detection_score(d: &Detection) -> f64 {
    d.score()
}

/// Matching similarity of two detections: s₁ · s₂ · cos(x₁, x₂).
pub fn pair_similarity(a: &Detection, b: &Detection) -> Result<f64> {
    Ok(a.score() * b.score() * cosine(&a.embedding, &b.embedding)?)
}

/// Combined pair score p₁ · p₂ · √sim. A non-positive similarity clamps to
/// zero before the root: a pair with negative cosine carries no evidence of
/// a common object.
pub fn combined_score(p1: f64, p2: f64, sim: f64) -> f64 {
    p1 * p2 * sim.max(0.0).sqrt()
}

/// A cross-image detection pair with its matching score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub index_a: usize,
    pub index_b: usize,
    pub score: f64,
}

//! Numerical core for common-object pair detection: box geometry, detection
//! scoring and cosine pair matching, class-wise and pair-wise metric-learning
//! losses with analytic gradients, deterministic pair sampling, the
//! pair-evaluation protocol, and a desk-scale trainer for verifying that the
//! losses separate classes.

pub mod detection;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod losses;
pub mod numerics;
pub mod sampling;
pub mod trainer;

pub use detection::{combined_score, cosine, detection_score, pair_similarity, Detection, Embedding, ScoredPair};
pub use error::{Error, Result};
pub use geometry::{giou, giou_loss, iou, BBox};
pub use losses::{
    evaluate_loss, update_t, ClassWeights, ClasswiseParams, CurriculumState, DenominatorMode,
    Distance, EmbeddingBatch, LossConfig, LossKind, LossValueGrad, Modulation, PairwiseParams,
};
pub use numerics::Rng;

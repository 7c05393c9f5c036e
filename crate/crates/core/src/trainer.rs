//! Desk-scale gradient descent on free embedding parameters (and class
//! weights) under any implemented loss, on synthetic labeled data. Used to
//! verify that the losses actually produce intra-class compactness and
//! inter-class separability.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::losses::{
    classwise::positive_cosines, evaluate_loss, pairwise::build_pair_sets,
    pairwise::curcon_update_t, update_t, ClassWeights, CurriculumState, EmbeddingBatch,
    LossConfig, LossKind,
};
use crate::numerics::{exact_sum, Rng};

/// Synthetic cluster specification: seeded random unit centers with Gaussian
/// angular noise.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub points_per_class: usize,
    pub dim: usize,
    /// Noise scale in radians; 0 collapses every point onto its center.
    pub cluster_spread: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The spec used throughout the separability checks: 3 classes times 20
    /// points in 8 dimensions, spread 0.3, seed 0.
    pub fn standard() -> Self {
        Self {
            n_classes: 3,
            points_per_class: 20,
            dim: 8,
            cluster_spread: 0.3,
            seed: 0,
        }
    }
}

/// Deterministic synthetic batch: per class a random unit center, each point
/// the center plus Gaussian noise of scale `cluster_spread`, renormalized.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<EmbeddingBatch> {
    if spec.n_classes < 2 {
        return Err(Error::TooFewClasses { needed: 2, got: spec.n_classes });
    }
    if spec.dim < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: spec.dim });
    }
    let mut rng = Rng::new(spec.seed);
    let n = spec.n_classes * spec.points_per_class;
    let mut points = Array2::<f64>::zeros((n, spec.dim));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0usize;
    for class in 0..spec.n_classes {
        let center = random_unit(&mut rng, spec.dim);
        for _ in 0..spec.points_per_class {
            if spec.cluster_spread == 0.0 {
                for k in 0..spec.dim {
                    points[[row, k]] = center[k];
                }
            } else {
                let mut v: Vec<f64> = (0..spec.dim)
                    .map(|k| center[k] + spec.cluster_spread * rng.next_gaussian())
                    .collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                for x in &mut v {
                    *x /= norm;
                }
                for k in 0..spec.dim {
                    points[[row, k]] = v[k];
                }
            }
            labels.push(class);
            row += 1;
        }
    }
    EmbeddingBatch::new(points, labels)
}

fn random_unit(rng: &mut Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Random class weights for class-wise training, one unit column per class.
pub fn random_weights(dim: usize, n_classes: usize, seed: u64) -> Result<ClassWeights> {
    let mut rng = Rng::new(seed);
    let mut cols = Array2::<f64>::zeros((dim, n_classes));
    for j in 0..n_classes {
        let col = random_unit(&mut rng, dim);
        for k in 0..dim {
            cols[[k, j]] = col[k];
        }
    }
    ClassWeights::new(cols)
}

/// Training run parameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub steps: usize,
    pub learning_rate: f64,
    pub log_every: usize,
    /// Seed for the class-weight initialization of class-wise losses.
    pub weight_seed: u64,
}

impl TrainConfig {
    pub fn new(loss: LossConfig) -> Self {
        Self {
            loss,
            steps: 500,
            learning_rate: 0.1,
            log_every: 10,
            weight_seed: 0,
        }
    }
}

/// One trace record: loss and curriculum t at the step's evaluation, plus
/// embedding metrics after the parameter update.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    pub t: f64,
    pub mean_intra_cosine: f64,
    pub mean_inter_cosine: f64,
}

/// Output of a training run.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub batch: EmbeddingBatch,
    pub weights: Option<ClassWeights>,
    pub trace: Vec<TraceRow>,
    pub final_state: Option<CurriculumState>,
}

/// Intra/inter cosine statistics of a labeled batch.
#[derive(Debug, Clone)]
pub struct EmbeddingMetrics {
    /// Mean cosine over same-label pairs; absent when no such pair exists.
    pub mean_intra_cosine: Option<f64>,
    /// Mean cosine over cross-label pairs; absent when no such pair exists.
    pub mean_inter_cosine: Option<f64>,
    /// Pairwise cosines between per-class mean directions, over class pairs
    /// (a < b) in ascending order.
    pub center_cosines: Vec<f64>,
}

/// Mean same-label and cross-label cosines plus class-center cosines.
pub fn embedding_metrics(batch: &EmbeddingBatch) -> Result<EmbeddingMetrics> {
    let x = crate::losses::normalize_rows(batch.points())?;
    let n = batch.len();
    let d = batch.dim();
    let labels = batch.labels();
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    if n_classes < 2 {
        return Err(Error::TooFewClasses { needed: 2, got: n_classes });
    }

    let mut intra = Vec::new();
    let mut inter = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let c: f64 = (0..d).map(|k| x.unit[[i, k]] * x.unit[[j, k]]).sum();
            if labels[i] == labels[j] {
                intra.push(c);
            } else {
                inter.push(c);
            }
        }
    }

    let mut centers = vec![vec![0.0; d]; n_classes];
    let mut counts = vec![0usize; n_classes];
    for i in 0..n {
        counts[labels[i]] += 1;
        for k in 0..d {
            centers[labels[i]][k] += x.unit[[i, k]];
        }
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::EmptyInput("a class has no points"));
    }
    for center in &mut centers {
        let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in center.iter_mut() {
                *v /= norm;
            }
        }
    }
    let mut center_cosines = Vec::new();
    for a in 0..n_classes {
        for b in (a + 1)..n_classes {
            center_cosines.push((0..d).map(|k| centers[a][k] * centers[b][k]).sum());
        }
    }

    let mean = |v: &[f64]| {
        if v.is_empty() {
            None
        } else {
            Some(exact_sum(v.iter().cloned()) / v.len() as f64)
        }
    };
    Ok(EmbeddingMetrics {
        mean_intra_cosine: mean(&intra),
        mean_inter_cosine: mean(&inter),
        center_cosines,
    })
}

/// Full-batch gradient descent on the raw parameters, with normalization
/// inside the loss. The curriculum state is read by the loss at its current
/// value and updated once per step, after the loss evaluation. Class-wise
/// losses train randomly initialized weights; see [`train_from`] to supply
/// them.
pub fn train(batch: &EmbeddingBatch, cfg: &TrainConfig) -> Result<TrainResult> {
    train_from(batch, cfg, None)
}

/// [`train`] with explicit initial class weights.
pub fn train_from(
    batch: &EmbeddingBatch,
    cfg: &TrainConfig,
    initial_weights: Option<ClassWeights>,
) -> Result<TrainResult> {
    let mut batch = batch.clone();
    let kind = cfg.loss.kind;
    let n_classes = batch.labels().iter().copied().max().map_or(0, |m| m + 1);
    let mut weights = if !kind.is_classwise() {
        None
    } else if initial_weights.is_some() {
        initial_weights
    } else {
        Some(random_weights(batch.dim(), n_classes.max(2), cfg.weight_seed)?)
    };
    let mut state = if kind.needs_state() {
        Some(CurriculumState::new(cfg.loss.ema_decay)?)
    } else {
        None
    };

    let mut trace = Vec::new();
    for step in 1..=cfg.steps {
        let out = evaluate_loss(&cfg.loss, &batch, weights.as_ref(), state.as_ref())?;
        if !out.value.is_finite() {
            return Err(Error::TrainingDiverged { step, value: out.value });
        }

        // Curriculum statistic measured at the pre-step parameters.
        if let Some(s) = state {
            let next = match kind {
                LossKind::Curcon => {
                    let sets = build_pair_sets(batch.labels())?;
                    curcon_update_t(&batch, &sets, &s)?
                }
                _ => {
                    let cosines = positive_cosines(&batch, weights.as_ref().unwrap())?;
                    update_t(&cosines, &s)?
                }
            };
            state = Some(next);
        }

        let lr = cfg.learning_rate;
        {
            let points = batch.points_mut();
            for (p, g) in points.iter_mut().zip(out.grad_points.iter()) {
                *p -= lr * g;
            }
        }
        if let (Some(w), Some(gw)) = (weights.as_mut(), out.grad_weights.as_ref()) {
            for (p, g) in w.columns_mut().iter_mut().zip(gw.iter()) {
                *p -= lr * g;
            }
        }

        if step % cfg.log_every == 0 || step == cfg.steps {
            let metrics = embedding_metrics(&batch)?;
            trace.push(TraceRow {
                step,
                loss: out.value,
                t: state.map_or(0.0, |s| s.t()),
                mean_intra_cosine: metrics.mean_intra_cosine.unwrap_or(f64::NAN),
                mean_inter_cosine: metrics.mean_inter_cosine.unwrap_or(f64::NAN),
            });
        }
    }

    Ok(TrainResult { batch, weights, trace, final_state: state })
}

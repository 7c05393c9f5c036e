//! Metric-learning losses over labeled embedding batches.
//!
//! Class-wise losses compare each embedding against learned per-class weight
//! columns; pair-wise losses compare embeddings against each other. All
//! losses return their value together with analytic gradients with respect
//! to the raw (unnormalized) inputs: normalization is part of the loss
//! computation graph, so callers can optimize free parameters directly.
//!
//! Loss values are accumulated with correctly rounded summation, which makes
//! them exactly invariant under permutations of the batch.

pub mod classwise;
pub mod pairwise;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::exact_sum;

/// N labeled d-dimensional points. Rows are samples; they are not required
/// to be pre-normalized.
#[derive(Debug, Clone)]
pub struct EmbeddingBatch {
    points: Array2<f64>,
    labels: Vec<usize>,
}

impl EmbeddingBatch {
    pub fn new(points: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 {
            return Err(Error::EmptyInput("embedding batch"));
        }
        if d < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: d });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    /// Mutable access to the raw points; used by gradient-descent drivers.
    pub fn points_mut(&mut self) -> &mut Array2<f64> {
        &mut self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Class-center parameters: column j of the d × n matrix is the center of
/// class j. Columns are normalized inside the loss graph.
#[derive(Debug, Clone)]
pub struct ClassWeights {
    columns: Array2<f64>,
}

impl ClassWeights {
    pub fn new(columns: Array2<f64>) -> Result<Self> {
        if columns.ncols() < 2 {
            return Err(Error::TooFewClasses {
                needed: 2,
                got: columns.ncols(),
            });
        }
        Ok(Self { columns })
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &Array2<f64> {
        &self.columns
    }

    pub fn columns_mut(&mut self) -> &mut Array2<f64> {
        &mut self.columns
    }
}

/// Logit modulation applied to positive/negative cosines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    /// T(θ) = cos θ, N(θ) = cos θ.
    None,
    /// T(θ) = cos(θ + m), N(θ) = cos θ.
    Arcface,
    /// T(θ) = cos(θ + m); N(θ) = cos θ for easy negatives, else
    /// cos θ · (t + cos θ).
    Curriculum,
}

/// Denominator scope of the modulated contrastive loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenominatorMode {
    /// Sum over every other sample k ≠ i, k ≠ j.
    AllOthers,
    /// Sum over the anchor's negatives only.
    NegativesOnly,
}

/// Distance between normalized embeddings used by the triplet and N-pair
/// forms: the negated dot product, or the squared Euclidean norm 2 − 2cos.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Cosine,
    Euclidean,
}

impl Distance {
    /// Distance value and its derivative with respect to the cosine.
    pub(crate) fn from_cosine(self, c: f64) -> (f64, f64) {
        match self {
            Distance::Cosine => (-c, -1.0),
            Distance::Euclidean => (2.0 - 2.0 * c, -2.0),
        }
    }
}

/// Scale and margin of the class-wise loss family. Defaults are s=4, m=0.5.
#[derive(Debug, Clone, Copy)]
pub struct ClasswiseParams {
    pub scale: f64,
    pub margin: f64,
}

impl Default for ClasswiseParams {
    fn default() -> Self {
        Self { scale: 4.0, margin: 0.5 }
    }
}

/// Parameters of the pair-wise loss family. Defaults are s=1, m=0.5.
#[derive(Debug, Clone, Copy)]
pub struct PairwiseParams {
    pub scale: f64,
    pub margin: f64,
    pub denominator_mode: DenominatorMode,
    pub modulation: Modulation,
}

impl Default for PairwiseParams {
    fn default() -> Self {
        Self {
            scale: 1.0,
            margin: 0.5,
            denominator_mode: DenominatorMode::AllOthers,
            modulation: Modulation::Curriculum,
        }
    }
}

/// The adaptive curriculum scalar t with its EMA bookkeeping.
///
/// t starts at 0 and is clamped to [0, 1] after every update. The decay is
/// configurable; 0 degenerates the EMA to the instantaneous batch mean.
#[derive(Debug, Clone, Copy)]
pub struct CurriculumState {
    t: f64,
    ema_decay: f64,
}

/// Default EMA decay for the curriculum statistic.
pub const DEFAULT_EMA_DECAY: f64 = 0.99;

impl CurriculumState {
    pub fn new(ema_decay: f64) -> Result<Self> {
        Self::with_t(0.0, ema_decay)
    }

    pub fn with_t(t: f64, ema_decay: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&ema_decay) {
            return Err(Error::OutOfRange {
                name: "ema_decay",
                value: ema_decay,
                range: "[0, 1)",
            });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange {
                name: "t",
                value: t,
                range: "[0, 1]",
            });
        }
        Ok(Self { t, ema_decay })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn ema_decay(&self) -> f64 {
        self.ema_decay
    }

    /// EMA step toward the batch statistic r, clamped back into [0, 1].
    pub(crate) fn stepped(&self, r: f64) -> Self {
        let t = ((1.0 - self.ema_decay) * r + self.ema_decay * self.t).clamp(0.0, 1.0);
        Self { t, ema_decay: self.ema_decay }
    }
}

impl Default for CurriculumState {
    fn default() -> Self {
        Self { t: 0.0, ema_decay: DEFAULT_EMA_DECAY }
    }
}

/// EMA update of the curriculum scalar from a batch of positive cosines.
pub fn update_t(positive_cosines: &[f64], state: &CurriculumState) -> Result<CurriculumState> {
    if positive_cosines.is_empty() {
        return Err(Error::EmptyInput("update_t"));
    }
    let r = exact_sum(positive_cosines.iter().cloned()) / positive_cosines.len() as f64;
    Ok(state.stepped(r))
}

/// A loss value with gradients matching the raw input shapes. Pair-wise
/// losses have no class weights, so `grad_weights` is absent for them.
#[derive(Debug, Clone)]
pub struct LossValueGrad {
    pub value: f64,
    pub grad_points: Array2<f64>,
    pub grad_weights: Option<Array2<f64>>,
}

/// Unit rows (or columns) with the original norms, for backpropagating
/// through the normalization.
pub(crate) struct Normalized {
    pub unit: Array2<f64>,
    pub norms: Vec<f64>,
}

pub(crate) fn normalize_rows(m: &Array2<f64>) -> Result<Normalized> {
    let (n, d) = m.dim();
    let mut unit = m.clone();
    let mut norms = Vec::with_capacity(n);
    for i in 0..n {
        let norm_sq: f64 = (0..d).map(|k| m[[i, k]] * m[[i, k]]).sum();
        if norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(Error::ZeroVector);
        }
        let norm = norm_sq.sqrt();
        for k in 0..d {
            unit[[i, k]] /= norm;
        }
        norms.push(norm);
    }
    Ok(Normalized { unit, norms })
}

pub(crate) fn normalize_cols(m: &Array2<f64>) -> Result<Normalized> {
    let (d, n) = m.dim();
    let mut unit = m.clone();
    let mut norms = Vec::with_capacity(n);
    for j in 0..n {
        let norm_sq: f64 = (0..d).map(|k| m[[k, j]] * m[[k, j]]).sum();
        if norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(Error::ZeroVector);
        }
        let norm = norm_sq.sqrt();
        for k in 0..d {
            unit[[k, j]] /= norm;
        }
        norms.push(norm);
    }
    Ok(Normalized { unit, norms })
}

/// Projects a gradient with respect to a unit vector back onto the raw
/// vector: g ↦ (g − (g·û)û) / ‖x‖.
pub(crate) fn project_row_grad(
    grad_unit: &Array2<f64>,
    normalized: &Normalized,
) -> Array2<f64> {
    let (n, d) = grad_unit.dim();
    let mut out = grad_unit.clone();
    for i in 0..n {
        let dot: f64 = (0..d).map(|k| grad_unit[[i, k]] * normalized.unit[[i, k]]).sum();
        for k in 0..d {
            out[[i, k]] = (grad_unit[[i, k]] - dot * normalized.unit[[i, k]]) / normalized.norms[i];
        }
    }
    out
}

pub(crate) fn project_col_grad(
    grad_unit: &Array2<f64>,
    normalized: &Normalized,
) -> Array2<f64> {
    let (d, n) = grad_unit.dim();
    let mut out = grad_unit.clone();
    for j in 0..n {
        let dot: f64 = (0..d).map(|k| grad_unit[[k, j]] * normalized.unit[[k, j]]).sum();
        for k in 0..d {
            out[[k, j]] = (grad_unit[[k, j]] - dot * normalized.unit[[k, j]]) / normalized.norms[j];
        }
    }
    out
}

/// Every loss exposed by the crate, in one namespace for dispatch by the
/// gradient checker, the toy trainer, and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Normalized softmax, no modulation.
    Softmax,
    /// Class-wise with additive angular margin on positives.
    Arcface,
    /// Class-wise with margin on positives and adaptive negative weighting.
    Curriculum,
    /// Curriculum softmax with the focal term.
    FocalCurriculum,
    /// Batch-hard triplet.
    Triplet,
    /// Single-positive softmax over negatives.
    Npair,
    /// Supervised contrastive, cosine form.
    Supcon,
    /// Modulated contrastive, margin on positives, all-others denominator.
    Arccon,
    /// Modulated contrastive, margin on positives, negatives-only denominator.
    ArcconNeg,
    /// Modulated contrastive with curriculum weighting, all-others denominator.
    Curcon,
}

impl LossKind {
    pub const ALL: [LossKind; 10] = [
        LossKind::Softmax,
        LossKind::Arcface,
        LossKind::Curriculum,
        LossKind::FocalCurriculum,
        LossKind::Triplet,
        LossKind::Npair,
        LossKind::Supcon,
        LossKind::Arccon,
        LossKind::ArcconNeg,
        LossKind::Curcon,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Softmax => "softmax",
            LossKind::Arcface => "arcface",
            LossKind::Curriculum => "curriculum",
            LossKind::FocalCurriculum => "focal_curriculum",
            LossKind::Triplet => "triplet",
            LossKind::Npair => "npair",
            LossKind::Supcon => "supcon",
            LossKind::Arccon => "arccon",
            LossKind::ArcconNeg => "arccon_neg",
            LossKind::Curcon => "curcon",
        }
    }

    pub fn parse(name: &str) -> Option<LossKind> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Class-wise losses optimize class weights in addition to the points.
    pub fn is_classwise(&self) -> bool {
        matches!(
            self,
            LossKind::Softmax | LossKind::Arcface | LossKind::Curriculum | LossKind::FocalCurriculum
        )
    }

    /// Curriculum-family losses need a [`CurriculumState`].
    pub fn needs_state(&self) -> bool {
        matches!(
            self,
            LossKind::Curriculum | LossKind::FocalCurriculum | LossKind::Curcon
        )
    }

    /// Kind-appropriate default scale: s=4 class-wise, s=1 pair-wise.
    pub fn default_scale(&self) -> f64 {
        if self.is_classwise() {
            4.0
        } else {
            1.0
        }
    }
}

/// A fully resolved loss selection, as used by the trainer and the CLI.
#[derive(Debug, Clone, Copy)]
pub struct LossConfig {
    pub kind: LossKind,
    pub scale: f64,
    pub margin: f64,
    pub ema_decay: f64,
    pub triplet_distance: Distance,
}

impl LossConfig {
    pub fn new(kind: LossKind) -> Self {
        Self {
            kind,
            scale: kind.default_scale(),
            margin: 0.5,
            ema_decay: DEFAULT_EMA_DECAY,
            triplet_distance: Distance::Cosine,
        }
    }
}

/// Evaluates any loss kind on a batch. Class-wise kinds require `weights`;
/// curriculum-family kinds require `state`.
pub fn evaluate_loss(
    cfg: &LossConfig,
    batch: &EmbeddingBatch,
    weights: Option<&ClassWeights>,
    state: Option<&CurriculumState>,
) -> Result<LossValueGrad> {
    let classwise_params = ClasswiseParams { scale: cfg.scale, margin: cfg.margin };
    let need_weights = || weights.ok_or(Error::MissingClassWeights);
    match cfg.kind {
        LossKind::Softmax => {
            classwise::classwise_loss(batch, need_weights()?, &classwise_params, Modulation::None, None)
        }
        LossKind::Arcface => classwise::classwise_loss(
            batch,
            need_weights()?,
            &classwise_params,
            Modulation::Arcface,
            None,
        ),
        LossKind::Curriculum => classwise::classwise_loss(
            batch,
            need_weights()?,
            &classwise_params,
            Modulation::Curriculum,
            state,
        ),
        LossKind::FocalCurriculum => classwise::focal_curriculum_loss(
            batch,
            need_weights()?,
            &classwise_params,
            state.ok_or(Error::MissingCurriculumState)?,
        ),
        LossKind::Triplet => pairwise::triplet_loss(batch, cfg.margin, cfg.triplet_distance),
        LossKind::Npair => pairwise::npair_loss(batch, cfg.triplet_distance),
        LossKind::Supcon => pairwise::supcon_loss(batch, cfg.scale),
        LossKind::Arccon => pairwise::mod_supcon_loss(
            batch,
            &PairwiseParams {
                scale: cfg.scale,
                margin: cfg.margin,
                denominator_mode: DenominatorMode::AllOthers,
                modulation: Modulation::Arcface,
            },
            None,
        ),
        LossKind::ArcconNeg => pairwise::mod_supcon_loss(
            batch,
            &PairwiseParams {
                scale: cfg.scale,
                margin: cfg.margin,
                denominator_mode: DenominatorMode::NegativesOnly,
                modulation: Modulation::Arcface,
            },
            None,
        ),
        LossKind::Curcon => pairwise::mod_supcon_loss(
            batch,
            &PairwiseParams {
                scale: cfg.scale,
                margin: cfg.margin,
                denominator_mode: DenominatorMode::AllOthers,
                modulation: Modulation::Curriculum,
            },
            state,
        ),
    }
}

/// Builds a seeded random instance for `cfg` and returns the flattened
/// analytic and central-difference gradients over all free parameters
/// (points, then weight columns for class-wise losses). The single-positive
/// loss gets two-point classes; every other kind draws labels uniformly
/// over `classes`. Curriculum kinds run at a seeded t, held constant across
/// the differencing.
pub fn gradient_check_instance(
    cfg: &LossConfig,
    n: usize,
    dim: usize,
    classes: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    use crate::numerics::{finite_difference_gradient, Rng, DEFAULT_FD_STEP};

    let mut rng = Rng::new(seed);
    let t = rng.next_f64();
    let state = CurriculumState::with_t(t, cfg.ema_decay)?;

    let labels: Vec<usize> = if cfg.kind == LossKind::Npair {
        (0..n).map(|i| i / 2).collect()
    } else {
        (0..n).map(|_| rng.next_below(classes as u64) as usize).collect()
    };
    let mut points = Array2::<f64>::zeros((n, dim));
    for v in points.iter_mut() {
        *v = rng.next_gaussian();
    }
    let weights = if cfg.kind.is_classwise() {
        let mut cols = Array2::<f64>::zeros((dim, classes));
        for v in cols.iter_mut() {
            *v = rng.next_gaussian();
        }
        Some(cols)
    } else {
        None
    };

    let batch = EmbeddingBatch::new(points.clone(), labels.clone())?;
    let out = evaluate_loss(
        cfg,
        &batch,
        weights.clone().map(ClassWeights::new).transpose()?.as_ref(),
        Some(&state),
    )?;

    let mut flat: Vec<f64> = points.iter().cloned().collect();
    if let Some(w) = &weights {
        flat.extend(w.iter().cloned());
    }
    let mut analytic: Vec<f64> = out.grad_points.iter().cloned().collect();
    if let Some(gw) = &out.grad_weights {
        analytic.extend(gw.iter().cloned());
    }

    let point_len = n * dim;
    let f = |v: &[f64]| -> f64 {
        let p = Array2::from_shape_vec((n, dim), v[..point_len].to_vec()).unwrap();
        let b = EmbeddingBatch::new(p, labels.clone()).unwrap();
        let w = weights.as_ref().map(|_| {
            ClassWeights::new(Array2::from_shape_vec((dim, classes), v[point_len..].to_vec()).unwrap())
                .unwrap()
        });
        evaluate_loss(cfg, &b, w.as_ref(), Some(&state)).unwrap().value
    };
    let numeric = finite_difference_gradient(f, &flat, DEFAULT_FD_STEP)?;
    Ok((analytic, numeric))
}

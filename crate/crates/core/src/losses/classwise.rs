//! Class-wise angular-margin losses: normalized softmax with optional
//! margin/curriculum modulation, and its focal variant.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::{exact_sum, log_sum_exp};

use super::{
    normalize_cols, normalize_rows, project_col_grad, project_row_grad, ClassWeights,
    ClasswiseParams, CurriculumState, EmbeddingBatch, LossValueGrad, Modulation,
};

/// How a negative sample's angle relates to the positive angle and margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeKind {
    Hard,
    SemiHard,
    Easy,
}

/// Taxonomy of a negative: hard if θ_neg < θ_pos, semi-hard if
/// θ_pos ≤ θ_neg < θ_pos + m, easy otherwise.
pub fn classify_negative(theta_pos: f64, theta_neg: f64, m: f64) -> NegativeKind {
    if theta_neg < theta_pos {
        NegativeKind::Hard
    } else if theta_neg < theta_pos + m {
        NegativeKind::SemiHard
    } else {
        NegativeKind::Easy
    }
}

/// Margin modulation: T = cos(θ_pos + m), N = cos(θ_neg).
pub fn arcface_modulation(theta_pos: f64, theta_neg: f64, m: f64) -> (f64, f64) {
    ((theta_pos + m).cos(), theta_neg.cos())
}

/// Curriculum modulation: T = cos(θ_pos + m); easy negatives keep N = cos θ,
/// hard and semi-hard ones are reweighted to cos θ · (t + cos θ).
pub fn curriculum_modulation(theta_pos: f64, theta_neg: f64, m: f64, t: f64) -> (f64, f64) {
    let tv = (theta_pos + m).cos();
    let c = theta_neg.cos();
    let nv = if theta_pos + m <= theta_neg { c } else { c * (t + c) };
    (tv, nv)
}

/// Focal exponent schedule γ(t) = −log(max(t, 1e−5)).
pub fn focal_gamma(t: f64) -> f64 {
    -t.max(1e-5).ln()
}

/// Guard for sin θ in margin derivatives; θ_pos = 0 exactly is a cusp of the
/// margin term and gets a zero tangential direction anyway.
const MIN_SIN: f64 = 1e-12;

/// Positive-logit modulation value and d/d(cos θ).
fn positive_term(c: f64, modulation: Modulation, m: f64) -> (f64, f64) {
    match modulation {
        Modulation::None => (c, 1.0),
        Modulation::Arcface | Modulation::Curriculum => {
            let theta = c.clamp(-1.0, 1.0).acos();
            let value = (theta + m).cos();
            let deriv = (theta + m).sin() / theta.sin().max(MIN_SIN);
            (value, deriv)
        }
    }
}

/// Negative-logit modulation value and d/d(cos θ). `theta_pos` is the
/// anchor's own positive angle, which fixes the curriculum branch.
fn negative_term(c: f64, modulation: Modulation, m: f64, theta_pos: f64, t: f64) -> (f64, f64) {
    match modulation {
        Modulation::None | Modulation::Arcface => (c, 1.0),
        Modulation::Curriculum => {
            let theta = c.clamp(-1.0, 1.0).acos();
            if theta_pos + m <= theta {
                (c, 1.0)
            } else {
                (c * (t + c), t + 2.0 * c)
            }
        }
    }
}

/// The positive-class cosines cos(θ_{y_i}) of a batch against normalized
/// weight columns; the batch statistic behind the curriculum update.
pub fn positive_cosines(batch: &EmbeddingBatch, weights: &ClassWeights) -> Result<Vec<f64>> {
    check_shapes(batch, weights)?;
    let x = normalize_rows(batch.points())?;
    let w = normalize_cols(weights.columns())?;
    let d = batch.dim();
    Ok(batch
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| (0..d).map(|k| x.unit[[i, k]] * w.unit[[k, y]]).sum())
        .collect())
}

fn check_shapes(batch: &EmbeddingBatch, weights: &ClassWeights) -> Result<()> {
    if weights.dim() != batch.dim() {
        return Err(Error::DimensionMismatch {
            expected: batch.dim(),
            got: weights.dim(),
        });
    }
    let n_classes = weights.n_classes();
    for &label in batch.labels() {
        if label >= n_classes {
            return Err(Error::LabelOutOfRange {
                label,
                classes: n_classes,
            });
        }
    }
    Ok(())
}

/// Modulated normalized-softmax loss, averaged over the batch, with
/// gradients through the internal normalization of points and weights.
pub fn classwise_loss(
    batch: &EmbeddingBatch,
    weights: &ClassWeights,
    params: &ClasswiseParams,
    modulation: Modulation,
    state: Option<&CurriculumState>,
) -> Result<LossValueGrad> {
    let focal = None;
    classwise_core(batch, weights, params, modulation, state, focal)
}

/// Focal curriculum loss: −(1 − pᵢ)^γ(t) · log pᵢ under curriculum
/// modulation, γ from the EMA statistic. γ and t are treated as constants
/// within a step; the schedule is not differentiated.
pub fn focal_curriculum_loss(
    batch: &EmbeddingBatch,
    weights: &ClassWeights,
    params: &ClasswiseParams,
    state: &CurriculumState,
) -> Result<LossValueGrad> {
    let gamma = focal_gamma(state.t());
    classwise_core(batch, weights, params, Modulation::Curriculum, Some(state), Some(gamma))
}

fn classwise_core(
    batch: &EmbeddingBatch,
    weights: &ClassWeights,
    params: &ClasswiseParams,
    modulation: Modulation,
    state: Option<&CurriculumState>,
    focal: Option<f64>,
) -> Result<LossValueGrad> {
    check_shapes(batch, weights)?;
    let t = match (modulation, state) {
        (Modulation::Curriculum, Some(s)) => s.t(),
        (Modulation::Curriculum, None) => return Err(Error::MissingCurriculumState),
        _ => 0.0,
    };

    let x = normalize_rows(batch.points())?;
    let w = normalize_cols(weights.columns())?;
    let (n, d) = batch.points().dim();
    let n_classes = weights.n_classes();
    let s = params.scale;
    let m = params.margin;

    let mut grad_unit_x = Array2::<f64>::zeros((n, d));
    let mut grad_unit_w = Array2::<f64>::zeros((d, n_classes));
    let mut per_sample = Vec::with_capacity(n);

    let mut logits = vec![0.0; n_classes];
    let mut dlogit_dcos = vec![0.0; n_classes];
    let mut cosines = vec![0.0; n_classes];

    for (i, &y) in batch.labels().iter().enumerate() {
        for j in 0..n_classes {
            cosines[j] = (0..d).map(|k| x.unit[[i, k]] * w.unit[[k, j]]).sum();
        }
        let theta_pos = cosines[y].clamp(-1.0, 1.0).acos();
        for j in 0..n_classes {
            let (value, deriv) = if j == y {
                positive_term(cosines[j], modulation, m)
            } else {
                negative_term(cosines[j], modulation, m, theta_pos, t)
            };
            logits[j] = s * value;
            dlogit_dcos[j] = s * deriv;
        }

        let lse = log_sum_exp(&logits)?;
        let log_p = logits[y] - lse;
        // dL_i/dlogit_j, before the 1/N batch reduction.
        let mut dz = vec![0.0; n_classes];
        let value_i = match focal {
            None => {
                for j in 0..n_classes {
                    let p_j = (logits[j] - lse).exp();
                    dz[j] = p_j - if j == y { 1.0 } else { 0.0 };
                }
                -log_p
            }
            Some(gamma) => {
                // q = 1 − p accumulated from the other classes, which stays
                // accurate when p is close to 1.
                let p = log_p.exp();
                let q = exact_sum(
                    (0..n_classes).filter(|&j| j != y).map(|j| (logits[j] - lse).exp()),
                );
                // g = q^γ (γ p log(p)/q − 1); log(p)/q → −1 as q → 0.
                let ratio = if q > 0.0 { log_p / q } else { -1.0 };
                let g = q.powf(gamma) * (gamma * p * ratio - 1.0);
                for j in 0..n_classes {
                    let p_j = (logits[j] - lse).exp();
                    dz[j] = if j == y { q * g } else { -p_j * g };
                }
                -q.powf(gamma) * log_p
            }
        };
        per_sample.push(value_i);

        let inv_n = 1.0 / n as f64;
        for j in 0..n_classes {
            let dcos = dz[j] * dlogit_dcos[j] * inv_n;
            if dcos == 0.0 {
                continue;
            }
            for k in 0..d {
                grad_unit_x[[i, k]] += dcos * w.unit[[k, j]];
                grad_unit_w[[k, j]] += dcos * x.unit[[i, k]];
            }
        }
    }

    let value = exact_sum(per_sample) / n as f64;
    Ok(LossValueGrad {
        value,
        grad_points: project_row_grad(&grad_unit_x, &x),
        grad_weights: Some(project_col_grad(&grad_unit_w, &w)),
    })
}

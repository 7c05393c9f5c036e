//! Pair-wise losses over positive/negative sample pairs: batch-hard triplet,
//! the single-positive softmax form, supervised contrastive, and the
//! modulated contrastive family.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::{exact_sum, log_sum_exp};

use super::{
    normalize_rows, project_row_grad, CurriculumState, Distance, EmbeddingBatch, LossValueGrad,
    Modulation, Normalized, PairwiseParams,
};

/// Per-anchor positive and negative index sets. For anchor i, positives are
/// the other samples with the same label and negatives are everything else;
/// the two sets and {i} partition the batch.
#[derive(Debug, Clone)]
pub struct PairSets {
    positives: Vec<Vec<usize>>,
    negatives: Vec<Vec<usize>>,
}

impl PairSets {
    pub fn positives(&self, anchor: usize) -> &[usize] {
        &self.positives[anchor]
    }

    pub fn negatives(&self, anchor: usize) -> &[usize] {
        &self.negatives[anchor]
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }
}

/// Builds U_i = {j ≠ i : label_j = label_i} and V_i = the complement, in
/// ascending index order.
pub fn build_pair_sets(labels: &[usize]) -> Result<PairSets> {
    if labels.len() < 2 {
        return Err(Error::EmptyInput("build_pair_sets requires at least two samples"));
    }
    let n = labels.len();
    let mut positives = vec![Vec::new(); n];
    let mut negatives = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if labels[i] == labels[j] {
                positives[i].push(j);
            } else {
                negatives[i].push(j);
            }
        }
    }
    Ok(PairSets { positives, negatives })
}

/// Cosine matrix of the normalized batch, with explicit summation so entries
/// depend only on the two rows involved.
fn cosine_matrix(x: &Normalized) -> Array2<f64> {
    let (n, d) = x.unit.dim();
    let mut g = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            g[[i, j]] = (0..d).map(|k| x.unit[[i, k]] * x.unit[[j, k]]).sum();
        }
    }
    g
}

/// Backpropagates a gradient over the cosine matrix (rows indexed by anchor)
/// to the raw points.
fn grad_from_cosines(
    dg: &Array2<f64>,
    x: &Normalized,
) -> Array2<f64> {
    let (n, d) = x.unit.dim();
    let mut grad_unit = Array2::<f64>::zeros((n, d));
    for a in 0..n {
        for k in 0..n {
            let w = dg[[a, k]];
            if w != 0.0 {
                for c in 0..d {
                    grad_unit[[a, c]] += w * x.unit[[k, c]];
                    grad_unit[[k, c]] += w * x.unit[[a, c]];
                }
            }
        }
    }
    project_row_grad(&grad_unit, x)
}

/// Batch-hard triplet loss: per anchor, the hinge of the hardest positive
/// against the hardest negative, averaged over anchors that have both.
pub fn triplet_loss(
    batch: &EmbeddingBatch,
    margin: f64,
    distance: Distance,
) -> Result<LossValueGrad> {
    let sets = build_pair_sets(batch.labels())?;
    let x = normalize_rows(batch.points())?;
    let g = cosine_matrix(&x);
    let n = batch.len();

    struct Active {
        anchor: usize,
        hardest_pos: usize,
        hardest_neg: usize,
    }

    let mut survivors = 0usize;
    let mut active = Vec::new();
    let mut terms = Vec::new();
    for i in 0..n {
        if sets.positives(i).is_empty() || sets.negatives(i).is_empty() {
            continue;
        }
        survivors += 1;
        // First index attaining the extremum wins; ties are broken by the
        // ascending order of the pair sets.
        let (hardest_pos, max_pos) = sets
            .positives(i)
            .iter()
            .map(|&j| (j, distance.from_cosine(g[[i, j]]).0))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (j, d)| {
                if d > acc.1 {
                    (j, d)
                } else {
                    acc
                }
            });
        let (hardest_neg, min_neg) = sets
            .negatives(i)
            .iter()
            .map(|&k| (k, distance.from_cosine(g[[i, k]]).0))
            .fold((usize::MAX, f64::INFINITY), |acc, (k, d)| {
                if d < acc.1 {
                    (k, d)
                } else {
                    acc
                }
            });
        let hinge = margin + max_pos - min_neg;
        if hinge > 0.0 {
            terms.push(hinge);
            active.push(Active { anchor: i, hardest_pos, hardest_neg });
        } else {
            terms.push(0.0);
        }
    }
    if survivors == 0 {
        return Err(Error::NoUsableAnchor(
            "triplet needs an anchor with at least one positive and one negative",
        ));
    }

    let inv = 1.0 / survivors as f64;
    let mut dg = Array2::<f64>::zeros((n, n));
    for a in &active {
        let ddc_pos = distance.from_cosine(g[[a.anchor, a.hardest_pos]]).1;
        let ddc_neg = distance.from_cosine(g[[a.anchor, a.hardest_neg]]).1;
        dg[[a.anchor, a.hardest_pos]] += inv * ddc_pos;
        dg[[a.anchor, a.hardest_neg]] -= inv * ddc_neg;
    }

    Ok(LossValueGrad {
        value: exact_sum(terms) * inv,
        grad_points: grad_from_cosines(&dg, &x),
        grad_weights: None,
    })
}

/// Single-positive softmax over negatives: log(1 + Σₖ exp(d⁺ − d⁻ₖ)),
/// averaged over anchors. Every anchor must have exactly one positive.
pub fn npair_loss(batch: &EmbeddingBatch, distance: Distance) -> Result<LossValueGrad> {
    let sets = build_pair_sets(batch.labels())?;
    let x = normalize_rows(batch.points())?;
    let g = cosine_matrix(&x);
    let n = batch.len();

    for i in 0..n {
        if sets.positives(i).len() != 1 {
            return Err(Error::SinglePositiveRequired {
                anchor: i,
                positives: sets.positives(i).len(),
            });
        }
    }

    let inv = 1.0 / n as f64;
    let mut dg = Array2::<f64>::zeros((n, n));
    let mut terms = Vec::with_capacity(n);
    let mut logits = Vec::new();
    for i in 0..n {
        let pos = sets.positives(i)[0];
        let (d_pos, ddc_pos) = distance.from_cosine(g[[i, pos]]);
        logits.clear();
        logits.push(0.0);
        for &k in sets.negatives(i) {
            logits.push(d_pos - distance.from_cosine(g[[i, k]]).0);
        }
        let lse = log_sum_exp(&logits)?;
        terms.push(lse);

        // Softmax over {0} ∪ {d⁺ − d⁻ₖ}; the zero logit absorbs the rest.
        let mut sigma_sum = 0.0;
        for (slot, &k) in sets.negatives(i).iter().enumerate() {
            let sigma = (logits[slot + 1] - lse).exp();
            sigma_sum += sigma;
            let ddc_neg = distance.from_cosine(g[[i, k]]).1;
            dg[[i, k]] -= inv * sigma * ddc_neg;
        }
        dg[[i, pos]] += inv * sigma_sum * ddc_pos;
    }

    Ok(LossValueGrad {
        value: exact_sum(terms) * inv,
        grad_points: grad_from_cosines(&dg, &x),
        grad_weights: None,
    })
}

/// Supervised contrastive loss in cosine form: for each anchor, every
/// positive is scored against all other samples; anchors with no positives
/// are skipped.
pub fn supcon_loss(batch: &EmbeddingBatch, scale: f64) -> Result<LossValueGrad> {
    let sets = build_pair_sets(batch.labels())?;
    let x = normalize_rows(batch.points())?;
    let g = cosine_matrix(&x);
    let n = batch.len();

    let survivors: Vec<usize> = (0..n).filter(|&i| !sets.positives(i).is_empty()).collect();
    if survivors.is_empty() {
        return Err(Error::NoUsableAnchor("supcon needs an anchor with a positive"));
    }

    let inv_anchor = 1.0 / survivors.len() as f64;
    let mut dg = Array2::<f64>::zeros((n, n));
    let mut anchor_terms = Vec::with_capacity(survivors.len());
    let mut logits = Vec::new();
    let mut others = Vec::new();
    for &i in &survivors {
        logits.clear();
        others.clear();
        for k in 0..n {
            if k != i {
                others.push(k);
                logits.push(scale * g[[i, k]]);
            }
        }
        let lse = log_sum_exp(&logits)?;
        let n_pos = sets.positives(i).len() as f64;
        let per_positive: Vec<f64> =
            sets.positives(i).iter().map(|&j| lse - scale * g[[i, j]]).collect();
        anchor_terms.push(exact_sum(per_positive) / n_pos);

        let w = inv_anchor;
        for (slot, &k) in others.iter().enumerate() {
            let p = (logits[slot] - lse).exp();
            dg[[i, k]] += w * scale * p;
        }
        for &j in sets.positives(i) {
            dg[[i, j]] -= w * scale / n_pos;
        }
    }

    Ok(LossValueGrad {
        value: exact_sum(anchor_terms) * inv_anchor,
        grad_points: grad_from_cosines(&dg, &x),
        grad_weights: None,
    })
}

/// Positive-logit modulation in cosine space (value, d/dcos).
fn modulated_positive(c: f64, modulation: Modulation, m: f64) -> (f64, f64) {
    match modulation {
        Modulation::None => (c, 1.0),
        Modulation::Arcface | Modulation::Curriculum => {
            let theta = c.clamp(-1.0, 1.0).acos();
            ((theta + m).cos(), (theta + m).sin() / theta.sin().max(1e-12))
        }
    }
}

/// Negative-logit modulation; `theta_pos` is the angle of the positive term
/// currently in the numerator, which fixes the curriculum branch.
fn modulated_negative(c: f64, modulation: Modulation, m: f64, theta_pos: f64, t: f64) -> (f64, f64) {
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

/// Modulated contrastive loss. The margin/curriculum modulation of the
/// class-wise family is applied to pair logits; the denominator covers
/// either the anchor's negatives only or every other sample.
///
/// With the all-others denominator, competing positives enter the sum with
/// their plain cosine (never modulated), so the zero-margin case reduces
/// exactly to the supervised contrastive loss.
pub fn mod_supcon_loss(
    batch: &EmbeddingBatch,
    params: &PairwiseParams,
    state: Option<&CurriculumState>,
) -> Result<LossValueGrad> {
    let t = match (params.modulation, state) {
        (Modulation::Curriculum, Some(s)) => s.t(),
        (Modulation::Curriculum, None) => return Err(Error::MissingCurriculumState),
        _ => 0.0,
    };
    let sets = build_pair_sets(batch.labels())?;
    let x = normalize_rows(batch.points())?;
    let g = cosine_matrix(&x);
    let n = batch.len();
    let s = params.scale;
    let m = params.margin;

    let survivors: Vec<usize> = (0..n).filter(|&i| !sets.positives(i).is_empty()).collect();
    if survivors.is_empty() {
        return Err(Error::NoUsableAnchor("modulated contrastive needs an anchor with a positive"));
    }

    let inv_anchor = 1.0 / survivors.len() as f64;
    let mut dg = Array2::<f64>::zeros((n, n));
    let mut anchor_terms = Vec::with_capacity(survivors.len());
    // (index, dlogit/dcos) per denominator entry of the current positive.
    let mut denom: Vec<(usize, f64)> = Vec::new();
    let mut logits: Vec<f64> = Vec::new();
    for &i in &survivors {
        let n_pos = sets.positives(i).len() as f64;
        let w = inv_anchor / n_pos;
        let mut per_positive = Vec::with_capacity(sets.positives(i).len());
        for &j in sets.positives(i) {
            let c_pos = g[[i, j]];
            let theta_pos = c_pos.clamp(-1.0, 1.0).acos();
            let (t_val, t_deriv) = modulated_positive(c_pos, params.modulation, m);

            denom.clear();
            logits.clear();
            logits.push(s * t_val);
            for &k in sets.negatives(i) {
                let (n_val, n_deriv) =
                    modulated_negative(g[[i, k]], params.modulation, m, theta_pos, t);
                logits.push(s * n_val);
                denom.push((k, n_deriv));
            }
            if params.denominator_mode == super::DenominatorMode::AllOthers {
                for &k in sets.positives(i) {
                    if k != j {
                        logits.push(s * g[[i, k]]);
                        denom.push((k, 1.0));
                    }
                }
            }

            let lse = log_sum_exp(&logits)?;
            per_positive.push(lse - logits[0]);

            let sigma_pos = (logits[0] - lse).exp();
            dg[[i, j]] += w * (sigma_pos - 1.0) * s * t_deriv;
            for (slot, &(k, deriv)) in denom.iter().enumerate() {
                let sigma = (logits[slot + 1] - lse).exp();
                dg[[i, k]] += w * sigma * s * deriv;
            }
        }
        anchor_terms.push(exact_sum(per_positive) / n_pos);
    }

    Ok(LossValueGrad {
        value: exact_sum(anchor_terms) * inv_anchor,
        grad_points: grad_from_cosines(&dg, &x),
        grad_weights: None,
    })
}

/// Curriculum statistic for the pair-wise family: the batch mean over
/// anchors (with positives) of the minimum positive cosine, folded into the
/// EMA exactly like the class-wise update.
pub fn curcon_update_t(
    batch: &EmbeddingBatch,
    sets: &PairSets,
    state: &CurriculumState,
) -> Result<CurriculumState> {
    let x = normalize_rows(batch.points())?;
    let g = cosine_matrix(&x);
    let mins: Vec<f64> = (0..batch.len())
        .filter(|&i| !sets.positives(i).is_empty())
        .map(|i| {
            sets.positives(i)
                .iter()
                .map(|&j| g[[i, j]])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    if mins.is_empty() {
        return Err(Error::NoUsableAnchor("no anchor has a positive"));
    }
    let r = exact_sum(mins.iter().cloned()) / mins.len() as f64;
    Ok(state.stepped(r))
}

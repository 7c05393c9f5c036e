//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.
//!
//! The brute-force evaluation oracle and the scalar loss oracles in this
//! file are written independently of the library internals they check.

use ndarray::Array2;

use copair_core::detection::{Detection, Embedding};
use copair_core::eval::{
    average_precision, classify_pairs, enumerate_top_pairs, recall_precision, EvalConfig,
    GroundTruthBox,
};
use copair_core::geometry::{giou, iou, BBox};
use copair_core::losses::{
    classwise::{classwise_loss, focal_curriculum_loss, focal_gamma},
    evaluate_loss, gradient_check_instance,
    pairwise::{mod_supcon_loss, npair_loss, supcon_loss},
    ClassWeights, ClasswiseParams, CurriculumState, DenominatorMode, Distance, EmbeddingBatch,
    LossConfig, LossKind, Modulation, PairwiseParams,
};
use copair_core::numerics::{check_gradient, Rng};
use copair_core::sampling::{sample_gt_pairs, AnnotatedImage, Annotation};
use copair_core::trainer::{generate_synthetic, train, SyntheticSpec, TrainConfig};
use copair_core::ScoredPair;

fn pass(line: &str) {
    println!("[PASS] {line}");
}

fn random_batch(rng: &mut Rng, n: usize, d: usize, classes: usize) -> EmbeddingBatch {
    let mut points = Array2::<f64>::zeros((n, d));
    for v in points.iter_mut() {
        *v = rng.next_gaussian();
    }
    let labels = (0..n).map(|_| rng.next_below(classes as u64) as usize).collect();
    EmbeddingBatch::new(points, labels).unwrap()
}

fn paired_batch(rng: &mut Rng, pairs: usize, d: usize) -> EmbeddingBatch {
    let n = pairs * 2;
    let mut points = Array2::<f64>::zeros((n, d));
    for v in points.iter_mut() {
        *v = rng.next_gaussian();
    }
    let labels = (0..n).map(|i| i / 2).collect();
    EmbeddingBatch::new(points, labels).unwrap()
}

/// Normalized rows of a batch, for the scalar oracles.
fn unit_rows(batch: &EmbeddingBatch) -> Vec<Vec<f64>> {
    let (n, d) = batch.points().dim();
    (0..n)
        .map(|i| {
            let row: Vec<f64> = (0..d).map(|k| batch.points()[[i, k]]).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.into_iter().map(|v| v / norm).collect()
        })
        .collect()
}

fn cosine_of(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------
// Criterion 1: gradient correctness for every loss.
// ---------------------------------------------------------------------

#[test]
fn criterion_1_gradient_correctness() {
    let start = std::time::Instant::now();
    const TOL: f64 = 1e-5;
    for kind in LossKind::ALL {
        let cfg = LossConfig::new(kind);
        let mut seed_rng = Rng::new(1234);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let seed = seed_rng.next_u64();
            let (analytic, numeric) = gradient_check_instance(&cfg, 16, 8, 4, seed).unwrap();
            let report = check_gradient(&analytic, &numeric, TOL).unwrap();
            worst = worst.max(report.max_rel_error);
        }
        assert!(
            worst < TOL,
            "{}: max relative gradient error {worst} >= {TOL}",
            kind.name()
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "gradient checks took {elapsed:?}");
    pass(&format!(
        "criterion 1: analytic gradients of all {} losses match finite differences (< 1e-5, 20 instances each, {elapsed:?})",
        LossKind::ALL.len()
    ));
}

// ---------------------------------------------------------------------
// Criterion 2: reduction identities within 1e-12.
// ---------------------------------------------------------------------

#[test]
fn criterion_2_reduction_identities() {
    let mut rng = Rng::new(99);

    // ArcCon with zero margin equals SupCon at the same scale.
    for i in 0..50 {
        let batch = random_batch(&mut rng, 10, 5, 4);
        let has_pos = batch
            .labels()
            .iter()
            .enumerate()
            .any(|(i, &l)| batch.labels().iter().enumerate().any(|(j, &m)| i != j && l == m));
        if !has_pos {
            continue;
        }
        let s = 0.5 + rng.next_f64() * 3.0;
        let arccon = mod_supcon_loss(
            &batch,
            &PairwiseParams {
                scale: s,
                margin: 0.0,
                denominator_mode: DenominatorMode::AllOthers,
                modulation: Modulation::Arcface,
            },
            None,
        )
        .unwrap();
        let supcon = supcon_loss(&batch, s).unwrap();
        assert!(
            (arccon.value - supcon.value).abs() < 1e-12,
            "instance {i}: {} vs {}",
            arccon.value,
            supcon.value
        );
    }

    // ArcCon-Neg with zero margin and single positives equals the
    // single-positive softmax over s-scaled distances (scalar oracle), and
    // the library form at s = 1.
    for _ in 0..50 {
        let batch = paired_batch(&mut rng, 5, 4);
        let s = 0.5 + rng.next_f64() * 3.0;
        let arccon_neg = mod_supcon_loss(
            &batch,
            &PairwiseParams {
                scale: s,
                margin: 0.0,
                denominator_mode: DenominatorMode::NegativesOnly,
                modulation: Modulation::Arcface,
            },
            None,
        )
        .unwrap();
        let rows = unit_rows(&batch);
        let labels = batch.labels();
        let mut total = 0.0;
        for i in 0..rows.len() {
            let pos = (0..rows.len()).find(|&j| j != i && labels[j] == labels[i]).unwrap();
            let d_pos = -s * cosine_of(&rows[i], &rows[pos]);
            let mut sum = 0.0;
            for k in 0..rows.len() {
                if k != i && labels[k] != labels[i] {
                    let d_neg = -s * cosine_of(&rows[i], &rows[k]);
                    sum += (d_pos - d_neg).exp();
                }
            }
            total += (1.0 + sum).ln();
        }
        let oracle = total / rows.len() as f64;
        assert!((arccon_neg.value - oracle).abs() < 1e-12);
    }
    let batch = paired_batch(&mut rng, 6, 5);
    let lib_npair = npair_loss(&batch, Distance::Cosine).unwrap();
    let arccon_neg_s1 = mod_supcon_loss(
        &batch,
        &PairwiseParams {
            scale: 1.0,
            margin: 0.0,
            denominator_mode: DenominatorMode::NegativesOnly,
            modulation: Modulation::Arcface,
        },
        None,
    )
    .unwrap();
    assert!((lib_npair.value - arccon_neg_s1.value).abs() < 1e-12);

    // Focal curriculum at t = 1 (gamma = 0) equals the curriculum softmax.
    let state_one = CurriculumState::with_t(1.0, 0.99).unwrap();
    for _ in 0..50 {
        let batch = random_batch(&mut rng, 8, 4, 4);
        let weights = random_class_weights(&mut rng, 4, 4);
        let params = ClasswiseParams { scale: 4.0, margin: 0.5 };
        let focal = focal_curriculum_loss(&batch, &weights, &params, &state_one).unwrap();
        let plain =
            classwise_loss(&batch, &weights, &params, Modulation::Curriculum, Some(&state_one))
                .unwrap();
        assert!((focal.value - plain.value).abs() < 1e-12);
    }

    // Zero-margin angular modulation equals no modulation.
    for _ in 0..50 {
        let batch = random_batch(&mut rng, 8, 4, 4);
        let weights = random_class_weights(&mut rng, 4, 4);
        let params = ClasswiseParams { scale: 4.0, margin: 0.0 };
        let arc = classwise_loss(&batch, &weights, &params, Modulation::Arcface, None).unwrap();
        let plain = classwise_loss(&batch, &weights, &params, Modulation::None, None).unwrap();
        assert!((arc.value - plain.value).abs() < 1e-12);
    }

    pass("criterion 2: reduction identities hold within 1e-12 (50 instances each)");
}

fn random_class_weights(rng: &mut Rng, d: usize, n: usize) -> ClassWeights {
    let mut cols = Array2::<f64>::zeros((d, n));
    for v in cols.iter_mut() {
        *v = rng.next_gaussian();
    }
    ClassWeights::new(cols).unwrap()
}

// ---------------------------------------------------------------------
// Criterion 3: closed-form spot values.
// ---------------------------------------------------------------------

#[test]
fn criterion_3_closed_form_spot_values() {
    // Positive cosine 1, negative cosine -1, two classes.
    let batch = EmbeddingBatch::new(Array2::from_shape_vec((1, 2), vec![1.0, 0.0]).unwrap(), vec![0])
        .unwrap();
    let weights =
        ClassWeights::new(Array2::from_shape_vec((2, 2), vec![1.0, -1.0, 0.0, 0.0]).unwrap())
            .unwrap();
    let params = ClasswiseParams { scale: 1.0, margin: 0.5 };
    let out = classwise_loss(&batch, &weights, &params, Modulation::None, None).unwrap();
    let expected = (1.0 + (-2.0f64).exp()).ln();
    assert!((out.value - expected).abs() < 1e-12);

    // Symmetric logits: loss = log(n).
    let batch = EmbeddingBatch::new(Array2::from_shape_vec((1, 2), vec![0.0, 1.0]).unwrap(), vec![0])
        .unwrap();
    for n in [2usize, 3, 5] {
        let mut cols = Array2::<f64>::zeros((2, n));
        for j in 0..n {
            cols[[0, j]] = 1.0;
        }
        let weights = ClassWeights::new(cols).unwrap();
        let out = classwise_loss(
            &batch,
            &weights,
            &ClasswiseParams { scale: 4.0, margin: 0.5 },
            Modulation::None,
            None,
        )
        .unwrap();
        assert!((out.value - (n as f64).ln()).abs() < 1e-12, "n = {n}");
    }

    // Focal exponent clamp.
    assert!((focal_gamma(1e-5) - (-(1e-5f64).ln())).abs() < 1e-12);
    assert_eq!(focal_gamma(1e-5), focal_gamma(1e-9));

    pass("criterion 3: closed-form spot values reproduce within 1e-12");
}

// ---------------------------------------------------------------------
// Criterion 4: toy separability.
// ---------------------------------------------------------------------

#[test]
fn criterion_4_toy_separability() {
    let start = std::time::Instant::now();
    let batch = generate_synthetic(&SyntheticSpec::standard()).unwrap();

    let mut results = Vec::new();
    for kind in [LossKind::Curcon, LossKind::FocalCurriculum] {
        let mut loss = LossConfig::new(kind); // s=1 pair-wise, s=4 class-wise
        loss.margin = 0.5;
        let cfg = TrainConfig { loss, steps: 500, learning_rate: 0.1, log_every: 10, weight_seed: 0 };
        let result = train(&batch, &cfg).unwrap();
        let t10 = result.trace.iter().find(|r| r.step == 10).unwrap().t;
        let t500 = result.trace.iter().find(|r| r.step == 500).unwrap().t;
        let last = result.trace.last().unwrap();
        let gap = last.mean_intra_cosine - last.mean_inter_cosine;
        assert!(gap >= 0.5, "{}: intra-inter gap {gap} < 0.5", kind.name());
        assert!(t500 > t10, "{}: t(500) = {t500} <= t(10) = {t10}", kind.name());
        results.push(format!("{} gap {:.3}", kind.name(), gap));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "separability runs took {elapsed:?}");
    pass(&format!(
        "criterion 4: toy separability >= 0.5 and rising t ({}; {elapsed:?})",
        results.join(", ")
    ));
}

// ---------------------------------------------------------------------
// Criterion 5: evaluation matches a brute-force oracle exactly.
// ---------------------------------------------------------------------

/// Independent IoU for the oracle path.
fn oracle_iou(a: &BBox, b: &BBox) -> f64 {
    let lx = if a.x > b.x { a.x } else { b.x };
    let rx = {
        let ar = a.x + a.w;
        let br = b.x + b.w;
        if ar < br {
            ar
        } else {
            br
        }
    };
    let ty = if a.y > b.y { a.y } else { b.y };
    let by = {
        let ab = a.y + a.h;
        let bb = b.y + b.h;
        if ab < bb {
            ab
        } else {
            bb
        }
    };
    let iw = if rx - lx > 0.0 { rx - lx } else { 0.0 };
    let ih = if by - ty > 0.0 { by - ty } else { 0.0 };
    let inter = iw * ih;
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// Greedy classification re-derived from scratch.
fn oracle_classify(
    pairs: &[ScoredPair],
    boxes_a: &[BBox],
    boxes_b: &[BBox],
    gts_a: &[GroundTruthBox],
    gts_b: &[GroundTruthBox],
    threshold: f64,
) -> Vec<bool> {
    let best_gt = |bbox: &BBox, gts: &[GroundTruthBox]| -> Option<usize> {
        let mut best: Option<usize> = None;
        for g in 0..gts.len() {
            let v = oracle_iou(bbox, &gts[g].bbox);
            if v > threshold {
                best = match best {
                    None => Some(g),
                    Some(prev) => {
                        if oracle_iou(bbox, &gts[prev].bbox) >= v {
                            Some(prev)
                        } else {
                            Some(g)
                        }
                    }
                };
            }
        }
        best
    };
    let mut used: Vec<(usize, usize)> = Vec::new();
    let mut flags = Vec::new();
    for p in pairs {
        let ma = best_gt(&boxes_a[p.index_a], gts_a);
        let mb = best_gt(&boxes_b[p.index_b], gts_b);
        let tp = match (ma, mb) {
            (Some(ga), Some(gb)) => {
                gts_a[ga].category == gts_b[gb].category && !used.contains(&(ga, gb)) && {
                    used.push((ga, gb));
                    true
                }
            }
            _ => false,
        };
        flags.push(tp);
    }
    flags
}

/// Recall, precision and AP re-derived from scratch (quadratic envelope).
fn oracle_metrics(flags: &[bool], n_gt: usize) -> (f64, f64, f64) {
    let tp_total = flags.iter().filter(|&&f| f).count();
    let recall = if n_gt == 0 {
        0.0
    } else {
        let r = tp_total as f64 / n_gt as f64;
        if r > 1.0 {
            1.0
        } else {
            r
        }
    };
    let precision = if flags.is_empty() {
        0.0
    } else {
        tp_total as f64 / flags.len() as f64
    };

    if n_gt == 0 || flags.is_empty() {
        return (recall, precision, 0.0);
    }
    let n = flags.len();
    let mut tps = vec![0usize; n];
    let mut count = 0usize;
    for (i, &f) in flags.iter().enumerate() {
        if f {
            count += 1;
        }
        tps[i] = count;
    }
    let rec = |i: usize| {
        let r = tps[i] as f64 / n_gt as f64;
        if r > 1.0 {
            1.0
        } else {
            r
        }
    };
    let prec = |i: usize| tps[i] as f64 / (i + 1) as f64;
    let mut ap = 0.0;
    let mut prev = 0.0;
    for i in 0..n {
        let mut envelope = 0.0f64;
        for j in i..n {
            if prec(j) > envelope {
                envelope = prec(j);
            }
        }
        ap += (rec(i) - prev) * envelope;
        prev = rec(i);
    }
    (recall, precision, ap)
}

#[test]
fn criterion_5_evaluation_oracle_equivalence() {
    let mut rng = Rng::new(2024);
    let mut checked = 0usize;
    for fixture in 0..200 {
        let n_dets_a = 1 + rng.next_below(5) as usize;
        let n_dets_b = 1 + rng.next_below(5) as usize;
        let n_gts_a = 1 + rng.next_below(4) as usize;
        let n_gts_b = 1 + rng.next_below(4) as usize;

        let random_box = |rng: &mut Rng| {
            BBox::new(
                rng.next_f64() * 10.0,
                rng.next_f64() * 10.0,
                0.5 + rng.next_f64() * 4.0,
                0.5 + rng.next_f64() * 4.0,
            )
            .unwrap()
        };
        let random_det = |rng: &mut Rng| {
            let bbox = BBox::new(
                rng.next_f64() * 10.0,
                rng.next_f64() * 10.0,
                0.5 + rng.next_f64() * 4.0,
                0.5 + rng.next_f64() * 4.0,
            )
            .unwrap();
            let emb = vec![rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()];
            Detection::new(
                bbox,
                0.05 + 0.9 * rng.next_f64(),
                0.05 + 0.9 * rng.next_f64(),
                Embedding::new(emb).unwrap(),
            )
            .unwrap()
        };

        let dets_a: Vec<Detection> = (0..n_dets_a).map(|_| random_det(&mut rng)).collect();
        let dets_b: Vec<Detection> = (0..n_dets_b).map(|_| random_det(&mut rng)).collect();
        let gts_a: Vec<GroundTruthBox> = (0..n_gts_a)
            .map(|_| GroundTruthBox { bbox: random_box(&mut rng), category: rng.next_below(4) as usize })
            .collect();
        let gts_b: Vec<GroundTruthBox> = (0..n_gts_b)
            .map(|_| GroundTruthBox { bbox: random_box(&mut rng), category: rng.next_below(4) as usize })
            .collect();

        // Recall denominator from the seeded ground-truth pair protocol.
        let image_a = AnnotatedImage {
            image_id: "a".into(),
            annotations: gts_a
                .iter()
                .map(|g| Annotation { category: g.category, bbox: g.bbox })
                .collect(),
        };
        let image_b = AnnotatedImage {
            image_id: "b".into(),
            annotations: gts_b
                .iter()
                .map(|g| Annotation { category: g.category, bbox: g.bbox })
                .collect(),
        };
        let n_gt_pairs = sample_gt_pairs(&image_a, &image_b, 6, &mut Rng::new(0)).len();

        // Exercise a permissive and the default threshold.
        let threshold = if fixture % 2 == 0 { 0.5 } else { 0.2 };
        let cfg = EvalConfig { iou_threshold: threshold, ..EvalConfig::default() };
        let pairs = enumerate_top_pairs(&dets_a, &dets_b, &cfg).unwrap();
        let boxes_a: Vec<BBox> = dets_a.iter().map(|d| d.bbox).collect();
        let boxes_b: Vec<BBox> = dets_b.iter().map(|d| d.bbox).collect();

        let flags = classify_pairs(&pairs, &boxes_a, &boxes_b, &gts_a, &gts_b, &cfg);
        let oracle_flags = oracle_classify(&pairs, &boxes_a, &boxes_b, &gts_a, &gts_b, threshold);
        assert_eq!(flags, oracle_flags, "fixture {fixture}: flags diverge");

        let (recall, precision) = recall_precision(&flags, n_gt_pairs);
        let ap = average_precision(&flags, n_gt_pairs);
        let (o_recall, o_precision, o_ap) = oracle_metrics(&oracle_flags, n_gt_pairs);
        assert_eq!(recall, o_recall, "fixture {fixture}: recall");
        assert_eq!(precision, o_precision, "fixture {fixture}: precision");
        assert_eq!(ap, o_ap, "fixture {fixture}: ap");
        checked += 1;
    }
    assert_eq!(checked, 200);
    pass("criterion 5: classification and recall/precision/AP equal the brute-force oracle exactly on 200 fixtures");
}

// ---------------------------------------------------------------------
// Criterion 6 (library side): the pinned generator sequence. Byte-identical
// CLI outputs are asserted in the CLI crate's acceptance tests.
// ---------------------------------------------------------------------

#[test]
fn criterion_6_pinned_generator_sequence() {
    let mut rng = Rng::new(0);
    let golden: [u64; 5] = [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
        0xF88BB8A8724C81EC,
        0x1B39896A51A8749B,
    ];
    for (i, &expected) in golden.iter().enumerate() {
        let got = rng.next_u64();
        assert_eq!(got, expected, "seed-0 output {i}");
    }
    pass("criterion 6 (library): seed-0 generator sequence matches the pinned golden values");
}

// ---------------------------------------------------------------------
// Criterion 7: geometry properties and worked values.
// ---------------------------------------------------------------------

#[test]
fn criterion_7_geometry() {
    let mut rng = Rng::new(7);
    for _ in 0..1000 {
        let random_box = |rng: &mut Rng| {
            BBox::new(
                rng.next_f64() * 40.0 - 20.0,
                rng.next_f64() * 40.0 - 20.0,
                0.1 + rng.next_f64() * 10.0,
                0.1 + rng.next_f64() * 10.0,
            )
            .unwrap()
        };
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        let i_ab = iou(&a, &b).unwrap();
        let i_ba = iou(&b, &a).unwrap();
        let g_ab = giou(&a, &b).unwrap();
        let g_ba = giou(&b, &a).unwrap();
        assert!(g_ab <= i_ab + 1e-12);
        assert!((i_ab - i_ba).abs() < 1e-12);
        assert!((g_ab - g_ba).abs() < 1e-12);

        let dx = rng.next_f64() * 10.0 - 5.0;
        let dy = rng.next_f64() * 10.0 - 5.0;
        let shift = |c: &BBox| BBox::new(c.x + dx, c.y + dy, c.w, c.h).unwrap();
        assert!((i_ab - iou(&shift(&a), &shift(&b)).unwrap()).abs() < 1e-12);
        assert!((g_ab - giou(&shift(&a), &shift(&b)).unwrap()).abs() < 1e-12);
    }

    let unit = |x, y| BBox::new(x, y, 1.0, 1.0).unwrap();
    let two = |x, y| BBox::new(x, y, 2.0, 2.0).unwrap();
    assert_eq!(iou(&two(0.0, 0.0), &two(1.0, 1.0)).unwrap(), 1.0 / 7.0);
    assert_eq!(giou(&unit(0.0, 0.0), &unit(2.0, 0.0)).unwrap(), -(1.0 / 3.0));
    assert_eq!(giou(&two(0.0, 0.0), &two(1.0, 1.0)).unwrap(), 1.0 / 7.0 - 2.0 / 9.0);

    pass("criterion 7: 1000 random box pairs satisfy ordering/symmetry/translation within 1e-12; worked values exact");
}

// ---------------------------------------------------------------------
// Criterion 8: rotation and permutation invariance.
// ---------------------------------------------------------------------

/// Random orthogonal matrix via Gram-Schmidt on Gaussian columns.
fn random_rotation(rng: &mut Rng, d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.next_gaussian()).collect();
        for u in &basis {
            let proj = cosine_of(&v, u);
            for k in 0..d {
                v[k] -= proj * u[k];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

fn rotate_batch(batch: &EmbeddingBatch, rotation: &[Vec<f64>]) -> EmbeddingBatch {
    let (n, d) = batch.points().dim();
    let mut out = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        for r in 0..d {
            out[[i, r]] = (0..d).map(|k| rotation[r][k] * batch.points()[[i, k]]).sum();
        }
    }
    EmbeddingBatch::new(out, batch.labels().to_vec()).unwrap()
}

fn permute_batch(batch: &EmbeddingBatch, perm: &[usize]) -> EmbeddingBatch {
    let (n, d) = batch.points().dim();
    let mut points = Array2::<f64>::zeros((n, d));
    let mut labels = vec![0usize; n];
    for (new_i, &old_i) in perm.iter().enumerate() {
        for k in 0..d {
            points[[new_i, k]] = batch.points()[[old_i, k]];
        }
        labels[new_i] = batch.labels()[old_i];
    }
    EmbeddingBatch::new(points, labels).unwrap()
}

fn pairwise_value(kind: LossKind, batch: &EmbeddingBatch, state: &CurriculumState) -> f64 {
    let cfg = LossConfig::new(kind);
    evaluate_loss(&cfg, batch, None, Some(state)).unwrap().value
}

#[test]
fn criterion_8_invariances() {
    let mut rng = Rng::new(11);
    let state = CurriculumState::with_t(0.4, 0.99).unwrap();
    let pairwise = [
        LossKind::Triplet,
        LossKind::Npair,
        LossKind::Supcon,
        LossKind::Arccon,
        LossKind::ArcconNeg,
        LossKind::Curcon,
    ];

    // Rigid rotations leave pair-wise losses unchanged within 1e-10.
    for _ in 0..10 {
        let batch = random_batch(&mut rng, 10, 6, 3);
        let paired = paired_batch(&mut rng, 5, 6);
        let rotation = random_rotation(&mut rng, 6);
        for kind in pairwise {
            let b = if kind == LossKind::Npair { &paired } else { &batch };
            let rotated = rotate_batch(b, &rotation);
            let base = pairwise_value(kind, b, &state);
            let turned = pairwise_value(kind, &rotated, &state);
            assert!(
                (base - turned).abs() < 1e-10,
                "{}: rotation moved the value by {}",
                kind.name(),
                (base - turned).abs()
            );
        }
    }

    // Batch permutations leave every loss value exactly unchanged.
    for trial in 0..10 {
        let batch = random_batch(&mut rng, 12, 5, 4);
        let paired = paired_batch(&mut rng, 6, 5);
        let weights = random_class_weights(&mut rng, 5, 4);
        // Deterministic shuffle of 0..n.
        let mut perm: Vec<usize> = (0..12).collect();
        for i in 0..12 {
            let j = i + rng.next_below((12 - i) as u64) as usize;
            perm.swap(i, j);
        }
        for kind in LossKind::ALL {
            let b = if kind == LossKind::Npair { &paired } else { &batch };
            let permuted = permute_batch(b, &perm);
            let cfg = LossConfig::new(kind);
            let w = if kind.is_classwise() { Some(&weights) } else { None };
            let base = evaluate_loss(&cfg, b, w, Some(&state)).unwrap().value;
            let shuffled = evaluate_loss(&cfg, &permuted, w, Some(&state)).unwrap().value;
            assert_eq!(
                base,
                shuffled,
                "{}: trial {trial} permutation changed the value",
                kind.name()
            );
        }
    }

    pass("criterion 8: rotation invariance within 1e-10 and exact permutation invariance for all losses");
}

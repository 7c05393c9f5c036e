//! Evaluation command: scores one image pair's detection dumps against
//! ground truth and reports recall/precision/AP per IoU threshold.

use std::path::Path;

use anyhow::{bail, Context, Result};

use copair_core::eval::{
    enumerate_top_pairs, evaluate_pairs, hard_match, soft_match, EvalConfig, EvalResult,
};
use copair_core::geometry::BBox;
use copair_core::io::{ground_truth_of, read_annotations, read_class_prob_boxes, read_detections};
use copair_core::numerics::Rng;
use copair_core::sampling::sample_gt_pairs;
use copair_core::ScoredPair;

use crate::config::{EvalMode, RunConfig};

pub struct EvalInputs {
    pub dets_a: std::path::PathBuf,
    pub dets_b: std::path::PathBuf,
    pub gt: std::path::PathBuf,
}

pub fn run(cfg: &RunConfig, inputs: &EvalInputs, out: &Path) -> Result<String> {
    let gt_images = read_annotations(&inputs.gt)?;
    if gt_images.len() != 2 {
        bail!(
            "ground truth file {} must hold exactly two image records (got {})",
            inputs.gt.display(),
            gt_images.len()
        );
    }
    let gts_a = ground_truth_of(&gt_images[0]);
    let gts_b = ground_truth_of(&gt_images[1]);

    // Sampled ground-truth pair protocol fixes the recall denominator.
    let mut gt_rng = Rng::new(cfg.seed);
    let n_gt_pairs = sample_gt_pairs(&gt_images[0], &gt_images[1], cfg.gt_pairs, &mut gt_rng).len();

    let eval_cfg = EvalConfig {
        top_k: cfg.top_k,
        iou_threshold: cfg.iou_thresholds.first().copied().unwrap_or(0.5),
        similarity_threshold: cfg.similarity_threshold,
        score_form: cfg.score_form,
    };

    // Ranked pairs and the predicted boxes backing them, per mode.
    let (pairs, boxes_a, boxes_b): (Vec<ScoredPair>, Vec<BBox>, Vec<BBox>) = match cfg.mode {
        EvalMode::Sscod => {
            let dets_a = read_detections(&inputs.dets_a)?;
            let dets_b = read_detections(&inputs.dets_b)?;
            if let (Some(a), Some(b)) = (dets_a.first(), dets_b.first()) {
                if a.embedding.dim() != b.embedding.dim() {
                    bail!(
                        "embedding dimension mismatch between dumps: {} vs {}",
                        a.embedding.dim(),
                        b.embedding.dim()
                    );
                }
            }
            let pairs = enumerate_top_pairs(&dets_a, &dets_b, &eval_cfg)?;
            (
                pairs,
                dets_a.iter().map(|d| d.bbox).collect(),
                dets_b.iter().map(|d| d.bbox).collect(),
            )
        }
        EvalMode::HardMatch | EvalMode::SoftMatch => {
            let dets_a = read_class_prob_boxes(&inputs.dets_a)?;
            let dets_b = read_class_prob_boxes(&inputs.dets_b)?;
            let pairs = match cfg.mode {
                EvalMode::HardMatch => hard_match(&dets_a, &dets_b, &eval_cfg)?,
                _ => soft_match(&dets_a, &dets_b, &eval_cfg)?,
            };
            (
                pairs,
                dets_a.iter().map(|d| d.bbox).collect(),
                dets_b.iter().map(|d| d.bbox).collect(),
            )
        }
    };

    // Per-threshold evaluation, optionally fanned out over threads; results
    // are merged by threshold index so the report order is deterministic.
    let thresholds = cfg.iou_thresholds.clone();
    let results: Vec<EvalResult> = if cfg.jobs > 1 && thresholds.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = thresholds
                .iter()
                .map(|&iou| {
                    let pairs = &pairs;
                    let boxes_a = &boxes_a;
                    let boxes_b = &boxes_b;
                    let gts_a = &gts_a;
                    let gts_b = &gts_b;
                    scope.spawn(move || {
                        let cfg_t = EvalConfig { iou_threshold: iou, ..eval_cfg };
                        evaluate_pairs(pairs, boxes_a, boxes_b, gts_a, gts_b, n_gt_pairs, &cfg_t)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("evaluation thread")).collect()
        })
    } else {
        thresholds
            .iter()
            .map(|&iou| {
                let cfg_t = EvalConfig { iou_threshold: iou, ..eval_cfg };
                evaluate_pairs(&pairs, &boxes_a, &boxes_b, &gts_a, &gts_b, n_gt_pairs, &cfg_t)
            })
            .collect()
    };

    let mut report = String::new();
    report.push_str(&cfg.header());
    report.push('\n');
    report.push_str(&format!(
        "# mode={} pairs={} n_gt_pairs={n_gt_pairs}\n",
        cfg.mode.name(),
        pairs.len()
    ));
    report.push_str("# columns: iou_threshold recall precision ap\n");
    for (iou, r) in thresholds.iter().zip(&results) {
        report.push_str(&format!(
            "{iou}\t{}\t{}\t{}\n",
            r.recall, r.precision, r.average_precision
        ));
    }
    std::fs::write(out, &report).with_context(|| format!("cannot write {}", out.display()))?;

    let headline = &results[0];
    Ok(format!(
        "mode={} iou={} recall={} precision={} ap={}",
        cfg.mode.name(),
        thresholds[0],
        headline.recall,
        headline.precision,
        headline.average_precision
    ))
}

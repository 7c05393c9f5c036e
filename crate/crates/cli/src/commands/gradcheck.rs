//! Gradient verification command: analytic gradients of every selected loss
//! against central finite differences on seeded random instances.

use anyhow::{Context, Result};

use copair_core::losses::{gradient_check_instance, LossConfig, LossKind};
use copair_core::numerics::{check_gradient, Rng};

use crate::config::RunConfig;

/// Instance shape used for the checks.
const BATCH: usize = 16;
const DIM: usize = 8;
const CLASSES: usize = 4;

pub struct GradcheckOutcome {
    pub failures: usize,
    pub report: String,
}

/// Runs the check for `losses` (all kinds when empty). When `corrupt` is
/// set, the first analytic coordinate is perturbed before comparison; this
/// is a test hook for the failure path.
pub fn run(cfg: &RunConfig, losses: &[LossKind], corrupt: bool) -> Result<GradcheckOutcome> {
    let selected: Vec<LossKind> = if losses.is_empty() {
        LossKind::ALL.to_vec()
    } else {
        losses.to_vec()
    };

    let mut report = String::new();
    report.push_str(&cfg.header());
    report.push('\n');
    report.push_str("# columns: loss max_rel_error status\n");

    let mut failures = 0usize;
    for kind in selected {
        let mut loss_cfg = LossConfig::new(kind);
        if let Some(scale) = cfg.scale {
            loss_cfg.scale = scale;
        }
        loss_cfg.margin = cfg.margin;
        loss_cfg.ema_decay = cfg.ema_decay;
        loss_cfg.triplet_distance = cfg.triplet_distance;

        let mut seed_rng = Rng::new(cfg.seed);
        let mut worst = 0.0f64;
        for _ in 0..cfg.grad_instances {
            let seed = seed_rng.next_u64();
            let (mut analytic, numeric) =
                gradient_check_instance(&loss_cfg, BATCH, DIM, CLASSES, seed)
                    .with_context(|| format!("gradient check instance for {}", kind.name()))?;
            if corrupt {
                analytic[0] += 1e-3;
            }
            let check = check_gradient(&analytic, &numeric, cfg.grad_tol)?;
            worst = worst.max(check.max_rel_error);
        }
        let pass = worst <= cfg.grad_tol;
        if !pass {
            failures += 1;
        }
        report.push_str(&format!(
            "{}\t{:e}\t{}\n",
            kind.name(),
            worst,
            if pass { "pass" } else { "FAIL" }
        ));
    }
    Ok(GradcheckOutcome { failures, report })
}

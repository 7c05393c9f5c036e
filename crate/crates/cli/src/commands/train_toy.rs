//! Toy training command: gradient descent on a synthetic batch, with a
//! plot-ready trace file.

use std::path::Path;

use anyhow::{Context, Result};

use copair_core::trainer::{embedding_metrics, generate_synthetic, train};

use crate::config::RunConfig;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<String> {
    let batch = generate_synthetic(&cfg.synthetic_spec())?;
    let result = train(&batch, &cfg.train_config())?;

    let mut trace = String::new();
    trace.push_str(&cfg.header());
    trace.push('\n');
    trace.push_str("# columns: step loss t intra inter\n");
    for row in &result.trace {
        trace.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            row.step, row.loss, row.t, row.mean_intra_cosine, row.mean_inter_cosine
        ));
    }
    std::fs::write(out, trace).with_context(|| format!("cannot write {}", out.display()))?;

    let metrics = embedding_metrics(&result.batch)?;
    let last = result.trace.last().expect("at least one trace row");
    Ok(format!(
        "loss={} t={} intra={} inter={} separation={}",
        last.loss,
        last.t,
        metrics.mean_intra_cosine.unwrap_or(f64::NAN),
        metrics.mean_inter_cosine.unwrap_or(f64::NAN),
        metrics.mean_intra_cosine.unwrap_or(f64::NAN) - metrics.mean_inter_cosine.unwrap_or(f64::NAN),
    ))
}

//! Pair-sampling command: offline pair list, per-class index dump, or the
//! base-class batch sampler, all deterministic per seed.

use std::path::Path;

use anyhow::{Context, Result};

use copair_core::numerics::Rng;
use copair_core::sampling::{build_class_index, build_pair_list, sample_batch};

use crate::config::{RunConfig, SampleAlgorithm};

pub fn run(cfg: &RunConfig, annotations: &Path, out: &Path) -> Result<String> {
    let dataset = copair_core::io::read_annotations(annotations)?;
    let mut body = String::new();
    body.push_str(&cfg.header());
    body.push('\n');

    let summary = match cfg.algorithm {
        SampleAlgorithm::PairList => {
            body.push_str("# columns: image_a image_b\n");
            let pairs = build_pair_list(&dataset);
            for (a, b) in &pairs {
                body.push_str(&format!("{a}\t{b}\n"));
            }
            format!("{} images, {} pairs", dataset.len(), pairs.len())
        }
        SampleAlgorithm::ClassIndex => {
            body.push_str("# columns: category image_ids\n");
            let index = build_class_index(&dataset);
            let mut categories = 0usize;
            for category in index.categories() {
                categories += 1;
                body.push_str(&format!(
                    "{category}\t{}\n",
                    index.images_of(category).join(",")
                ));
            }
            format!("{} images, {categories} categories", dataset.len())
        }
        SampleAlgorithm::Batch => {
            body.push_str("# columns: image_a image_b\n");
            if dataset.is_empty() {
                "0 images, empty batch".to_string()
            } else {
                let index = build_class_index(&dataset);
                let base = match cfg.base_class {
                    Some(base) => base,
                    None => index
                        .largest_category()
                        .context("dataset has no categories to pick a base class from")?,
                };
                let mut rng = Rng::new(cfg.seed);
                let batch = sample_batch(&index, &dataset, base, cfg.batch_size, &mut rng)?;
                if batch.is_empty() {
                    eprintln!(
                        "warning: base class {base} produced no pairs (no image carries a second category)"
                    );
                }
                for (a, b) in &batch {
                    body.push_str(&format!("{a}\t{b}\n"));
                }
                format!("base class {base}: {} of {} slots filled", batch.len(), cfg.batch_size)
            }
        }
    };

    std::fs::write(out, body).with_context(|| format!("cannot write {}", out.display()))?;
    Ok(summary)
}

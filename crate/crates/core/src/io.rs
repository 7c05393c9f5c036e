//! File schemas: JSON-lines readers for annotations and detection dumps.
//!
//! Every input format is one JSON object per line; blank lines and lines
//! starting with `#` are ignored. Parse failures report the file path and
//! 1-based line number. The exact field layouts are documented with worked
//! examples in `SCHEMAS.md` at the repository root.

use std::path::Path;

use serde::Deserialize;

use crate::detection::{Detection, Embedding};
use crate::error::{Error, Result};
use crate::eval::{ClassProbBox, GroundTruthBox};
use crate::geometry::BBox;
use crate::sampling::{AnnotatedImage, Annotation};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationRecord {
    category: usize,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageRecord {
    image_id: String,
    annotations: Vec<AnnotationRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionRecord {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    objectness: f64,
    centeredness: f64,
    embedding: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassProbRecord {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    probs: Vec<f64>,
}

fn parse_error(path: &Path, line: usize, message: impl ToString) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.to_string(),
    }
}

/// Applies `f` to every non-comment line with its 1-based line number.
fn parse_lines<T>(
    path: &Path,
    content: &str,
    mut f: impl FnMut(usize, &str) -> Result<T>,
) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(f(idx + 1, trimmed)?);
    }
    let _ = path;
    Ok(out)
}

/// Reads an annotation file: one image record per line.
pub fn read_annotations(path: &Path) -> Result<Vec<AnnotatedImage>> {
    let content = std::fs::read_to_string(path)?;
    parse_lines(path, &content, |line, text| {
        let record: ImageRecord =
            serde_json::from_str(text).map_err(|e| parse_error(path, line, e))?;
        let annotations = record
            .annotations
            .into_iter()
            .map(|a| {
                Ok(Annotation {
                    category: a.category,
                    bbox: BBox::new(a.x, a.y, a.w, a.h)
                        .map_err(|e| parse_error(path, line, e))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnnotatedImage { image_id: record.image_id, annotations })
    })
}

/// Reads a detection dump with objectness, centeredness and embedding
/// (embedding-similarity evaluation mode).
pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    let content = std::fs::read_to_string(path)?;
    let dets = parse_lines(path, &content, |line, text| {
        let r: DetectionRecord =
            serde_json::from_str(text).map_err(|e| parse_error(path, line, e))?;
        let bbox = BBox::new(r.x, r.y, r.w, r.h).map_err(|e| parse_error(path, line, e))?;
        let embedding = Embedding::new(r.embedding).map_err(|e| parse_error(path, line, e))?;
        Detection::new(bbox, r.objectness, r.centeredness, embedding)
            .map_err(|e| parse_error(path, line, e))
    })?;
    if let Some(first) = dets.first() {
        for d in &dets {
            if d.embedding.dim() != first.embedding.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.embedding.dim(),
                    got: d.embedding.dim(),
                });
            }
        }
    }
    Ok(dets)
}

/// Reads a detection dump with per-category probabilities (baseline modes).
pub fn read_class_prob_boxes(path: &Path) -> Result<Vec<ClassProbBox>> {
    let content = std::fs::read_to_string(path)?;
    parse_lines(path, &content, |line, text| {
        let r: ClassProbRecord =
            serde_json::from_str(text).map_err(|e| parse_error(path, line, e))?;
        for &p in &r.probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(parse_error(path, line, format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(ClassProbBox {
            bbox: BBox::new(r.x, r.y, r.w, r.h).map_err(|e| parse_error(path, line, e))?,
            probs: r.probs,
        })
    })
}

/// Ground-truth boxes of one annotated image, in annotation order.
pub fn ground_truth_of(image: &AnnotatedImage) -> Vec<GroundTruthBox> {
    image
        .annotations
        .iter()
        .map(|a| GroundTruthBox { bbox: a.bbox, category: a.category })
        .collect()
}

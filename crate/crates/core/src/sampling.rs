//! Deterministic dataset pairing and batch sampling: the offline
//! common-class pair list, the per-class image index, and the base-class
//! batch sampler, plus ground-truth pair sampling for evaluation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::numerics::Rng;

/// One ground-truth annotation: a category index with its box.
#[derive(Debug, Clone)]
pub struct Annotation {
    pub category: usize,
    pub bbox: BBox,
}

/// An image identified by id, with its ground-truth annotations.
#[derive(Debug, Clone)]
pub struct AnnotatedImage {
    pub image_id: String,
    pub annotations: Vec<Annotation>,
}

impl AnnotatedImage {
    /// Distinct categories present in the image, ascending.
    pub fn category_set(&self) -> Vec<usize> {
        let mut cats: Vec<usize> = self.annotations.iter().map(|a| a.category).collect();
        cats.sort_unstable();
        cats.dedup();
        cats
    }
}

/// Per-category list of the image ids containing it, in dataset order.
/// Each id appears at most once per category.
#[derive(Debug, Clone, Default)]
pub struct ClassIndex {
    by_category: BTreeMap<usize, Vec<String>>,
}

impl ClassIndex {
    pub fn images_of(&self, category: usize) -> &[String] {
        self.by_category.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn categories(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_category.keys().copied()
    }

    /// The category with the most images; ties go to the lowest index.
    pub fn largest_category(&self) -> Option<usize> {
        self.by_category
            .iter()
            .max_by(|(ca, va), (cb, vb)| va.len().cmp(&vb.len()).then(cb.cmp(ca)))
            .map(|(&c, _)| c)
    }
}

/// All unordered image pairs (i < j in dataset order) whose category sets
/// intersect, as id pairs. The outer loop runs over i, the inner over j, so
/// the output order is deterministic.
pub fn build_pair_list(dataset: &[AnnotatedImage]) -> Vec<(String, String)> {
    let sets: Vec<Vec<usize>> = dataset.iter().map(|img| img.category_set()).collect();
    let mut pairs = Vec::new();
    for i in 0..dataset.len() {
        for j in (i + 1)..dataset.len() {
            let shares = sets[i].iter().any(|c| sets[j].binary_search(c).is_ok());
            if shares {
                pairs.push((dataset[i].image_id.clone(), dataset[j].image_id.clone()));
            }
        }
    }
    pairs
}

/// Index from each category to the images containing it.
pub fn build_class_index(dataset: &[AnnotatedImage]) -> ClassIndex {
    let mut by_category: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for img in dataset {
        for category in img.category_set() {
            by_category.entry(category).or_default().push(img.image_id.clone());
        }
    }
    ClassIndex { by_category }
}

/// Attempts per batch slot before it is skipped.
const RETRY_BUDGET: usize = 100;

/// Base-class batch sampler: each slot draws an image from the base class,
/// then one of its other categories, then a partner image of that category;
/// the pair is kept only when the two images differ. Slots that exhaust the
/// retry budget (for example when no image carries a second category) are
/// skipped, so the result may be shorter than `batch_size`.
pub fn sample_batch(
    index: &ClassIndex,
    dataset: &[AnnotatedImage],
    base_class: usize,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<Vec<(String, String)>> {
    let base_images = index.images_of(base_class);
    if base_images.is_empty() {
        return Err(Error::BaseClassAbsent(base_class));
    }
    let by_id: BTreeMap<&str, &AnnotatedImage> =
        dataset.iter().map(|img| (img.image_id.as_str(), img)).collect();

    let mut batch = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        for _attempt in 0..RETRY_BUDGET {
            let first = &base_images[rng.next_below(base_images.len() as u64) as usize];
            let Some(img) = by_id.get(first.as_str()) else {
                break;
            };
            let mut other_cats = img.category_set();
            other_cats.retain(|&c| c != base_class);
            if other_cats.is_empty() {
                continue;
            }
            let cat = other_cats[rng.next_below(other_cats.len() as u64) as usize];
            let partners = index.images_of(cat);
            if partners.is_empty() {
                continue;
            }
            let second = &partners[rng.next_below(partners.len() as u64) as usize];
            if first != second {
                batch.push((first.clone(), second.clone()));
                break;
            }
        }
    }
    Ok(batch)
}

/// Up to `p` cross-image ground-truth box pairs sharing a category, drawn
/// uniformly without replacement from the enumerated valid pairs. When fewer
/// than `p` valid pairs exist, all of them are returned in enumeration order.
pub fn sample_gt_pairs(
    image_a: &AnnotatedImage,
    image_b: &AnnotatedImage,
    p: usize,
    rng: &mut Rng,
) -> Vec<(usize, usize)> {
    let mut valid = Vec::new();
    for (ia, a) in image_a.annotations.iter().enumerate() {
        for (ib, b) in image_b.annotations.iter().enumerate() {
            if a.category == b.category {
                valid.push((ia, ib));
            }
        }
    }
    if valid.len() <= p {
        return valid;
    }
    rng.sample_without_replacement(&valid, p)
}

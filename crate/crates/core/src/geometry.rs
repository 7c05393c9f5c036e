//! Axis-aligned box arithmetic: IoU, generalized IoU, and the GIoU
//! regression loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned bounding box in (x, y, w, h) form. `x`/`y` is the top-left
/// corner in image units; width and height are non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(w >= 0.0 && h >= 0.0 && x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite())
        {
            return Err(Error::InvalidBox { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    fn right(&self) -> f64 {
        self.x + self.w
    }

    fn bottom(&self) -> f64 {
        self.y + self.h
    }
}

fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    iw * ih
}

/// Intersection over union in [0, 1].
///
/// A zero-area box against a positive-area box yields 0; only the doubly
/// degenerate case is an error, since the ratio is then undefined.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64> {
    if a.area() == 0.0 && b.area() == 0.0 {
        return Err(Error::UndefinedOverlap);
    }
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    Ok(inter / union)
}

/// Generalized IoU in [-1, 1]: IoU minus the fraction of the smallest
/// enclosing box not covered by the union.
pub fn giou(a: &BBox, b: &BBox) -> Result<f64> {
    if a.area() == 0.0 && b.area() == 0.0 {
        return Err(Error::UndefinedOverlap);
    }
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    let hull_w = a.right().max(b.right()) - a.x.min(b.x);
    let hull_h = a.bottom().max(b.bottom()) - a.y.min(b.y);
    let hull = hull_w * hull_h;
    Ok(inter / union - (hull - union) / hull)
}

/// Regression loss 1 − GIoU, in [0, 2].
pub fn giou_loss(a: &BBox, b: &BBox) -> Result<f64> {
    Ok(1.0 - giou(a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn iou_identical_box_is_one() {
        let b = bb(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&b, &b).unwrap(), 1.0);
    }

    #[test]
    fn iou_disjoint_boxes_is_zero() {
        assert_eq!(iou(&bb(0.0, 0.0, 1.0, 1.0), &bb(2.0, 0.0, 1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn iou_worked_overlap() {
        // intersection 1, union 4 + 4 - 1 = 7
        let v = iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 1.0, 2.0, 2.0)).unwrap();
        assert_eq!(v, 1.0 / 7.0);
    }

    #[test]
    fn iou_zero_area_against_positive_is_zero() {
        let thin = bb(0.5, 0.5, 0.0, 1.0);
        let fat = bb(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&thin, &fat).unwrap(), 0.0);
    }

    #[test]
    fn iou_both_degenerate_errors() {
        let a = bb(0.0, 0.0, 0.0, 1.0);
        let b = bb(1.0, 1.0, 2.0, 0.0);
        assert!(iou(&a, &b).is_err());
        assert!(giou(&a, &b).is_err());
    }

    #[test]
    fn giou_identical_box_is_one() {
        let b = bb(3.0, -1.0, 4.0, 5.0);
        assert_eq!(giou(&b, &b).unwrap(), 1.0);
    }

    #[test]
    fn giou_disjoint_worked_value() {
        // hull area 3, union 2, iou 0 -> 0 - 1/3
        let v = giou(&bb(0.0, 0.0, 1.0, 1.0), &bb(2.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(v, -(1.0 / 3.0));
    }

    #[test]
    fn giou_overlap_worked_value() {
        // hull (0,0)-(3,3) area 9, union 7 -> 1/7 - 2/9
        let v = giou(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 1.0, 2.0, 2.0)).unwrap();
        assert_eq!(v, 1.0 / 7.0 - 2.0 / 9.0);
    }

    #[test]
    fn giou_loss_values() {
        let b = bb(0.0, 0.0, 2.0, 2.0);
        assert_eq!(giou_loss(&b, &b).unwrap(), 0.0);
        let v = giou_loss(&bb(0.0, 0.0, 1.0, 1.0), &bb(2.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(v, 1.0 + 1.0 / 3.0);
    }

    #[test]
    fn giou_loss_approaches_two_for_distant_boxes() {
        let v = giou_loss(&bb(0.0, 0.0, 1.0, 1.0), &bb(1e9, 0.0, 1.0, 1.0)).unwrap();
        assert!(v > 1.999_999);
        assert!(v <= 2.0);
    }

    #[test]
    fn bbox_rejects_negative_sides() {
        assert!(BBox::new(0.0, 0.0, -1.0, 1.0).is_err());
        assert!(BBox::new(0.0, 0.0, 1.0, f64::NAN).is_err());
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.01..20.0f64, 0.01..20.0f64)
            .prop_map(|(x, y, w, h)| bb(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_is_symmetric(a in arb_box(), b in arb_box()) {
            prop_assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
        }

        #[test]
        fn giou_never_exceeds_iou(a in arb_box(), b in arb_box()) {
            let i = iou(&a, &b).unwrap();
            let g = giou(&a, &b).unwrap();
            prop_assert!(g <= i + 1e-15);
            prop_assert!((-1.0..=1.0).contains(&g));
            prop_assert!((0.0..=1.0).contains(&i));
        }

        #[test]
        fn translation_leaves_overlap_unchanged(
            a in arb_box(), b in arb_box(),
            dx in -20.0..20.0f64, dy in -20.0..20.0f64,
        ) {
            let shift = |c: &BBox| bb(c.x + dx, c.y + dy, c.w, c.h);
            prop_assert!((iou(&a, &b).unwrap() - iou(&shift(&a), &shift(&b)).unwrap()).abs() < 1e-12);
            prop_assert!((giou(&a, &b).unwrap() - giou(&shift(&a), &shift(&b)).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn giou_of_box_with_itself_is_one(a in arb_box()) {
            // (x + w) - x reassociates, so identity holds to rounding only.
            prop_assert!((giou(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

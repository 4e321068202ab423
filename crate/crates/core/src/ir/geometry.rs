use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A point in abstract layout units, serialized as `[x, y]`.
pub type Point = (i64, i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl Rect {
    pub fn new(x: i64, y: i64, w: i64, h: i64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> i64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.h
    }

    /// True when the interiors intersect with positive area.
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x < o.right() && o.x < self.right() && self.y < o.bottom() && o.y < self.bottom()
    }

    /// True when `o` lies inside `self` without touching its boundary.
    pub fn strictly_contains(&self, o: &Rect) -> bool {
        self.x < o.x && self.y < o.y && o.right() < self.right() && o.bottom() < self.bottom()
    }

    pub fn union(&self, o: &Rect) -> Rect {
        let (x, y) = (self.x.min(o.x), self.y.min(o.y));
        Rect::new(x, y, self.right().max(o.right()) - x, self.bottom().max(o.bottom()) - y)
    }

    pub fn inflate(&self, m: i64) -> Rect {
        Rect::new(self.x - m, self.y - m, self.w + 2 * m, self.h + 2 * m)
    }

    /// True when the axis-parallel segment `a`-`b` enters the interior.
    pub fn segment_enters(&self, a: Point, b: Point) -> bool {
        let (x0, x1) = (a.0.min(b.0), a.0.max(b.0));
        let (y0, y1) = (a.1.min(b.1), a.1.max(b.1));
        if a.1 == b.1 {
            self.y < a.1 && a.1 < self.bottom() && x0 < self.right() && self.x < x1
        } else {
            self.x < a.0 && a.0 < self.right() && y0 < self.bottom() && self.y < y1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StnAnchors {
    pub inputs: Vec<Point>,
    pub outputs: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub width: i64,
    pub height: i64,
    pub boxes: BTreeMap<String, Rect>,
    pub anchors: BTreeMap<String, StnAnchors>,
    /// Lwc id to one orthogonal polyline per sink, each running from the
    /// source anchor to that sink's anchor. Polylines share their trunk.
    pub routes: BTreeMap<String, Vec<Vec<Point>>>,
    pub regions: BTreeMap<String, Rect>,
    pub layers: BTreeMap<String, u32>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_and_containment() {
        let a = Rect::new(0, 0, 10, 10);
        assert!(a.overlaps(&Rect::new(5, 5, 10, 10)));
        assert!(!a.overlaps(&Rect::new(10, 0, 5, 5)));
        assert!(a.strictly_contains(&Rect::new(1, 1, 8, 8)));
        assert!(!a.strictly_contains(&Rect::new(0, 1, 8, 8)));
        assert_eq!(a.union(&Rect::new(20, -5, 1, 1)), Rect::new(0, -5, 21, 15));
    }

    #[test]
    fn segment_entry() {
        let r = Rect::new(10, 10, 10, 10);
        assert!(r.segment_enters((0, 15), (30, 15)));
        assert!(!r.segment_enters((0, 10), (30, 10)));
        assert!(!r.segment_enters((0, 15), (10, 15)));
        assert!(r.segment_enters((15, 0), (15, 12)));
    }
}

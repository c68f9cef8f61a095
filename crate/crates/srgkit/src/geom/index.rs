//! R-tree over polyline segments: nearest-distance and ray-crossing queries.

use rstar::primitives::{GeomWithData, Line};
use rstar::{RTree, AABB};

use super::Curve;
use crate::C64;

type Seg = GeomWithData<Line<[f64; 2]>, ()>;

#[derive(Debug)]
pub(crate) struct SegmentIndex {
    tree: RTree<Seg>,
    /// Isolated vertices (single-point curves) are stored as zero-length segments.
    len: usize,
}

fn p(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

impl SegmentIndex {
    pub fn new(curves: &[Curve]) -> Self {
        let mut segs = Vec::new();
        for c in curves {
            let pts = &c.points;
            match pts.len() {
                0 => {}
                1 => segs.push(Seg::new(Line::new(p(pts[0]), p(pts[0])), ())),
                n => {
                    for w in pts.windows(2) {
                        segs.push(Seg::new(Line::new(p(w[0]), p(w[1])), ()));
                    }
                    if c.closed && pts[0] != pts[n - 1] {
                        segs.push(Seg::new(Line::new(p(pts[n - 1]), p(pts[0])), ()));
                    }
                }
            }
        }
        let len = segs.len();
        SegmentIndex { tree: RTree::bulk_load(segs), len }
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Distance to the nearest segment and that segment's length.
    pub fn nearest(&self, z: C64) -> Option<(f64, f64)> {
        let s = self.tree.nearest_neighbor(&p(z))?;
        let l = s.geom();
        let len = (l.from[0] - l.to[0]).hypot(l.from[1] - l.to[1]);
        Some((seg_dist(z, l), len))
    }

    pub fn distance(&self, z: C64) -> f64 {
        self.nearest(z).map_or(f64::INFINITY, |(d, _)| d)
    }

    /// Signed crossings of the rightward horizontal ray from `z`:
    /// +1 for each upward crossing, -1 for each downward one. The sum is the
    /// counterclockwise winding number of the closed curves around `z`.
    pub fn signed_crossings(&self, z: C64) -> i64 {
        let env = AABB::from_corners([z.re, z.im], [f64::MAX, z.im]);
        let mut total = 0;
        for s in self.tree.locate_in_envelope_intersecting(&env) {
            let l = s.geom();
            let (a, b) = (l.from, l.to);
            let up = a[1] <= z.im && b[1] > z.im;
            let down = b[1] <= z.im && a[1] > z.im;
            if !(up || down) {
                continue;
            }
            let t = (z.im - a[1]) / (b[1] - a[1]);
            let x = a[0] + t * (b[0] - a[0]);
            if x > z.re {
                total += if up { 1 } else { -1 };
            }
        }
        total
    }

    /// Even-odd parity of ray crossings.
    pub fn odd_crossings(&self, z: C64) -> bool {
        self.signed_crossings(z).rem_euclid(2) == 1
    }
}

pub(crate) fn seg_dist(z: C64, l: &Line<[f64; 2]>) -> f64 {
    let (ax, ay, bx, by) = (l.from[0], l.from[1], l.to[0], l.to[1]);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((z.re - ax) * dx + (z.im - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (z.re - ax - t * dx).hypot(z.im - ay - t * dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Curve {
        Curve::closed(vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 1.0),
            C64::new(0.0, 1.0),
        ])
    }

    #[test]
    fn winding_of_square() {
        let idx = SegmentIndex::new(&[square()]);
        assert_eq!(idx.signed_crossings(C64::new(0.5, 0.5)), 1);
        assert_eq!(idx.signed_crossings(C64::new(1.5, 0.5)), 0);
        assert_eq!(idx.signed_crossings(C64::new(-0.5, 0.5)), 0);
        assert!(idx.odd_crossings(C64::new(0.2, 0.7)));
    }

    #[test]
    fn nearest_distance() {
        let idx = SegmentIndex::new(&[square()]);
        let (d, len) = idx.nearest(C64::new(0.5, -2.0)).unwrap();
        assert!((d - 2.0).abs() < 1e-15 && (len - 1.0).abs() < 1e-15);
        assert_eq!(SegmentIndex::new(&[]).distance(C64::new(0.0, 0.0)), f64::INFINITY);
    }
}

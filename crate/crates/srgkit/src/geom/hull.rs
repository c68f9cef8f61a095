//! Hyperbolic (h-convex) hulls through the Klein model, and Euclidean hulls.

use super::region::{Curve, Region, Structure};
use super::shape::{Geodesic, Shape};
use super::GeomError;
use crate::C64;

const LIFT: f64 = 1e-12;
const ARC_STEP: f64 = std::f64::consts::PI / 128.0;

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Indices of the convex hull of `pts`, counterclockwise, collinear points dropped.
pub(crate) fn convex_hull_indices(pts: &[C64], eps: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].re.is_finite() && pts[i].im.is_finite()).collect();
    idx.sort_by(|&a, &b| {
        pts[a].re.partial_cmp(&pts[b].re).unwrap().then(pts[a].im.partial_cmp(&pts[b].im).unwrap())
    });
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross(pts[lower[lower.len() - 2]], pts[lower[lower.len() - 1]], pts[i]) <= eps {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross(pts[upper[upper.len() - 2]], pts[upper[upper.len() - 1]], pts[i]) <= eps {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Euclidean convex hull vertices.
pub(crate) fn convex_hull(pts: &[C64]) -> Vec<C64> {
    let scale = pts.iter().map(|z| z.norm()).filter(|n| n.is_finite()).fold(0.0, f64::max);
    convex_hull_indices(pts, 1e-15 * scale * scale).into_iter().map(|i| pts[i]).collect()
}

fn to_klein(z: C64) -> C64 {
    let j = C64::new(0.0, 1.0);
    let w = (z - j) / (z + j);
    w * 2.0 / (1.0 + w.norm_sqr())
}

fn from_klein(k: C64) -> C64 {
    let j = C64::new(0.0, 1.0);
    let w = k / (1.0 + (1.0 - k.norm_sqr()).max(0.0).sqrt());
    j * (1.0 + w) / (1.0 - w)
}

/// The geodesic through two upper half-plane points.
fn geodesic(z1: C64, z2: C64) -> Geodesic {
    let scale = 1.0 + z1.norm() + z2.norm();
    let dx = z2.re - z1.re;
    if dx.abs() <= 1e-9 * scale {
        return Geodesic::Vertical { x: 0.5 * (z1.re + z2.re), sign: 0.0 };
    }
    let c = (z2.norm_sqr() - z1.norm_sqr()) / (2.0 * dx);
    let r = (z1 - c).norm();
    if r > 1e9 * scale {
        return Geodesic::Vertical { x: 0.5 * (z1.re + z2.re), sign: 0.0 };
    }
    Geodesic::Circle { c, r, sign: 0.0 }
}

/// Samples of the geodesic arc from `z1` to `z2` (both in `Im >= 0`),
/// endpoints included, with angular step at most `step`.
fn arc_points(z1: C64, z2: C64, step: f64) -> Vec<C64> {
    if z1 == z2 {
        return vec![z1];
    }
    match geodesic(z1, z2) {
        Geodesic::Vertical { .. } => {
            let n = 16;
            (0..=n).map(|k| z1 + (z2 - z1) * (k as f64 / n as f64)).collect()
        }
        Geodesic::Circle { c, r, .. } => {
            let t1 = (z1 - c).im.max(0.0).atan2((z1 - c).re);
            let t2 = (z2 - c).im.max(0.0).atan2((z2 - c).re);
            let n = (((t2 - t1).abs() / step).ceil() as usize).clamp(1, 256);
            let mut out: Vec<C64> = (0..=n)
                .map(|k| {
                    let t = t1 + (t2 - t1) * k as f64 / n as f64;
                    C64::new(c + r * t.cos(), r * t.sin())
                })
                .collect();
            out[0] = z1;
            out[n] = z2;
            out
        }
    }
}

/// Sampled `Arc_min(z1, z2)`: the arc of the circle centered on the real axis
/// through both points, between their real parts. Equal real parts give the
/// vertical segment.
pub fn arc_min(z1: C64, z2: C64) -> Vec<C64> {
    arc_points(z1, z2, std::f64::consts::PI / 64.0)
}

/// The h-convex hull of a point set, mirrored into the lower half-plane.
///
/// Points are folded into the upper half-plane first. When every point is
/// real the result is the degenerate interval between the extreme points.
pub fn hconvex_hull(points: &[C64]) -> Result<Region, GeomError> {
    let upper: Vec<C64> = points
        .iter()
        .filter(|z| z.re.is_finite() && z.im.is_finite())
        .map(|z| C64::new(z.re, z.im.abs()))
        .collect();
    if upper.is_empty() {
        return Err(GeomError::EmptyRegion);
    }
    if upper.iter().all(|z| z.im <= 1e-12 * (1.0 + z.norm())) {
        return Ok(real_interval(&upper));
    }
    let klein: Vec<C64> = upper.iter().map(|&z| to_klein(C64::new(z.re, z.im + LIFT))).collect();
    let hull = convex_hull_indices(&klein, 1e-13);
    match hull.len() {
        0 => Err(GeomError::EmptyRegion),
        1 => Ok(Region::point_set(&[upper[hull[0]]])?),
        2 => Ok(geodesic_segment(upper[hull[0]], upper[hull[1]])),
        _ => Ok(polygon(&upper, &klein, &hull)),
    }
}

fn real_interval(upper: &[C64]) -> Region {
    let lo = upper.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let hi = upper.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Region::point(lo);
    }
    let n = 256;
    let pts = (0..=n).map(|k| C64::new(lo + (hi - lo) * k as f64 / n as f64, 0.0)).collect();
    Region::build(vec![Curve::open(pts)], Shape::Empty, false, Structure::HconvexHull).set_zero_area(true)
}

fn geodesic_segment(a: C64, b: C64) -> Region {
    let (a, b) = if a.re <= b.re { (a, b) } else { (b, a) };
    let up = arc_points(a, b, ARC_STEP);
    let down: Vec<C64> = up.iter().map(|z| z.conj()).collect();
    Region::build(
        vec![Curve::open(up), Curve::open(down)],
        Shape::Empty,
        false,
        Structure::HconvexHull,
    )
    .set_zero_area(true)
}

fn polygon(upper: &[C64], klein: &[C64], hull: &[usize]) -> Region {
    let centroid = hull.iter().map(|&i| klein[i]).sum::<C64>() / hull.len() as f64;
    let reference = from_klein(centroid);
    let n = hull.len();
    let mut edges = Vec::with_capacity(n);
    let mut loop_pts: Vec<C64> = Vec::new();
    let mut degenerate = false;
    for e in 0..n {
        let (a, b) = (upper[hull[e]], upper[hull[(e + 1) % n]]);
        let g = match geodesic(C64::new(a.re, a.im + LIFT), C64::new(b.re, b.im + LIFT)) {
            Geodesic::Circle { c, r, .. } => {
                let s = (reference - c).norm() - r;
                degenerate |= s.abs() <= 1e-14 * r;
                Geodesic::Circle { c, r, sign: s.signum() }
            }
            Geodesic::Vertical { x, .. } => {
                let s = reference.re - x;
                degenerate |= s == 0.0;
                Geodesic::Vertical { x, sign: s.signum() }
            }
        };
        edges.push(g);
        let pts = arc_points(a, b, ARC_STEP);
        loop_pts.extend_from_slice(&pts[..pts.len() - 1]);
    }
    if degenerate {
        edges.clear();
    }
    let mirror: Vec<C64> = loop_pts.iter().rev().map(|z| z.conj()).collect();
    let zero_area = edges.is_empty();
    let mut r = Region::build(
        vec![Curve::closed(loop_pts), Curve::closed(mirror)],
        Shape::Hull { edges },
        false,
        Structure::HconvexHull,
    );
    if zero_area {
        r = r.set_zero_area(true);
    }
    r
}

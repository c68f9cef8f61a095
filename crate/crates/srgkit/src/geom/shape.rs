//! Exact membership predicates. A region's samples approximate its boundary;
//! its shape answers "is z in the set" without sampling error wherever the
//! construction allows it.

use std::sync::Arc;

use super::index::SegmentIndex;
use crate::C64;

/// A geodesic of the upper half-plane bounding a hyperbolic polygon.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Geodesic {
    /// Circle centered on the real axis; `sign` is +1 when the polygon lies
    /// outside the circle.
    Circle { c: f64, r: f64, sign: f64 },
    /// Vertical line `Re z = x`; `sign` is +1 when the polygon lies to its right.
    Vertical { x: f64, sign: f64 },
}

impl Geodesic {
    fn inside(&self, z: C64, tol: f64) -> bool {
        match *self {
            Geodesic::Circle { c, r, sign } => {
                let d = (z.re - c).hypot(z.im);
                sign * (d - r) >= -tol * (1.0 + z.norm())
            }
            Geodesic::Vertical { x, sign } => sign * (z.re - x) >= -tol * (1.0 + x.abs()),
        }
    }
}

/// Raster classification of a generic sum or product.
#[derive(Debug)]
pub(crate) struct Raster {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    pub bits: Vec<bool>,
    /// Predicate used outside the rasterized window.
    pub outside: Arc<Shape>,
}

impl Raster {
    pub fn cell(&self, z: C64) -> Option<(usize, usize)> {
        let i = ((z.re - self.x0) / self.dx).floor();
        let j = ((z.im - self.y0) / self.dy).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.nx + i]
    }
}

#[derive(Debug)]
pub(crate) enum Shape {
    Empty,
    Plane,
    /// Closed disk centered on the real axis.
    Disk { c: f64, r: f64 },
    /// `Re z >= 0` when `right`, else `Re z <= 0`.
    HalfPlane { right: bool },
    Intersect(Vec<Arc<Shape>>),
    Union(Vec<Arc<Shape>>),
    /// Even-odd rule over closed loops, complemented when `inf`.
    Polygon { index: Arc<SegmentIndex>, inf: bool },
    /// Hyperbolic polygon in the upper half-plane, mirrored.
    Hull { edges: Vec<Geodesic> },
    /// Points with clockwise winding plus `n_p` positive.
    Winding { index: Arc<SegmentIndex>, n_p: i64 },
    /// Star-shaped about the origin, radial function sampled on a uniform grid.
    Star { rho: Arc<Vec<f64>> },
    /// Moebius inversion `z -> 1 / conj(z)` of the inner shape.
    Inverse { inner: Arc<Shape>, inner_inf: bool },
    /// `a * inner + b` with real `a != 0` and `b`.
    Affine { a: f64, b: f64, inner: Arc<Shape> },
    /// Minkowski sum of the inner set with the closed disk `D(c, r)`.
    Dilate { inner: Arc<Shape>, boundary: Arc<SegmentIndex>, c: f64, r: f64 },
    /// `A * D` with `0` interior to `D`; `1/D` is the exterior of `D(c, r)`.
    /// `far` holds the convex hull vertices of `A`.
    ProdDiskIn { far: Arc<Vec<C64>>, c: f64, r: f64 },
    /// `A * D` with `0` outside `D`; `1/D` is the disk `D(c, r)`.
    ProdDiskOut { inner: Arc<Shape>, boundary: Arc<SegmentIndex>, c: f64, r: f64, zero_in: bool },
    Raster(Raster),
}

const TOL: f64 = 1e-9;

impl Shape {
    pub fn member(&self, z: C64) -> bool {
        match self {
            Shape::Empty => false,
            Shape::Plane => true,
            Shape::Disk { c, r } => (z - C64::new(*c, 0.0)).norm() <= r * (1.0 + 1e-12) + TOL,
            Shape::HalfPlane { right } => {
                if *right {
                    z.re >= -TOL
                } else {
                    z.re <= TOL
                }
            }
            Shape::Intersect(v) => v.iter().all(|s| s.member(z)),
            Shape::Union(v) => v.iter().any(|s| s.member(z)),
            Shape::Polygon { index, inf } => index.odd_crossings(z) != *inf,
            Shape::Hull { edges } => {
                if edges.is_empty() {
                    return false;
                }
                let w = C64::new(z.re, z.im.abs() + 1e-12);
                edges.iter().all(|e| e.inside(w, TOL))
            }
            Shape::Winding { index, n_p } => -index.signed_crossings(z) + n_p > 0,
            Shape::Star { rho } => {
                let r = z.norm();
                if r == 0.0 {
                    return rho.iter().any(|&x| x >= 0.0);
                }
                r <= star_radius(rho, z.arg()) * (1.0 + 1e-12) + TOL
            }
            Shape::Inverse { inner, inner_inf } => {
                let n2 = z.norm_sqr();
                if n2 == 0.0 {
                    return *inner_inf;
                }
                inner.member(z / n2)
            }
            Shape::Affine { a, b, inner } => inner.member((z - b) / a),
            Shape::Dilate { inner, boundary, c, r } => {
                let w = z - c;
                inner.member(w) || boundary.distance(w) <= r * (1.0 + 1e-12) + TOL
            }
            Shape::ProdDiskIn { far, c, r } => {
                let n = z.norm();
                if n == 0.0 {
                    return true;
                }
                let q = z * *c;
                let f = far.iter().map(|a| (a - q).norm()).fold(0.0, f64::max);
                f >= n * r * (1.0 - 1e-12) - TOL
            }
            Shape::ProdDiskOut { inner, boundary, c, r, zero_in } => {
                let n = z.norm();
                if n == 0.0 {
                    return *zero_in;
                }
                let q = z * *c;
                inner.member(q) || boundary.distance(q) <= n * r * (1.0 + 1e-12) + TOL
            }
            Shape::Raster(ras) => match ras.cell(z) {
                Some((i, j)) => ras.get(i, j),
                None => ras.outside.member(z),
            },
        }
    }
}

/// Linear interpolation of a periodic radial function; an infinite neighbour
/// makes the whole cell infinite.
pub(crate) fn star_radius(rho: &[f64], theta: f64) -> f64 {
    let n = rho.len();
    let t = theta.rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU * n as f64;
    let i = (t.floor() as usize) % n;
    let j = (i + 1) % n;
    let f = t - t.floor();
    let (a, b) = (rho[i], rho[j]);
    if a.is_infinite() || b.is_infinite() {
        return f64::INFINITY;
    }
    (a * (1.0 - f) + b * f).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_and_inverse() {
        let d = Arc::new(Shape::Disk { c: 1.5, r: 0.5 });
        assert!(d.member(C64::new(1.5, 0.49)));
        assert!(!d.member(C64::new(0.9, 0.0)));
        let inv = Shape::Inverse { inner: d, inner_inf: false };
        // 1/D[1,2] = D[1/2, 1]
        assert!(inv.member(C64::new(0.75, 0.2)));
        assert!(!inv.member(C64::new(1.1, 0.0)));
        assert!(!inv.member(C64::new(0.0, 0.0)));
    }

    #[test]
    fn hull_vertical_and_circle_edges() {
        // Inside the unit circle, mirrored.
        let edges = vec![Geodesic::Circle { c: 0.0, r: 1.0, sign: -1.0 }];
        let s = Shape::Hull { edges };
        assert!(s.member(C64::new(0.2, -0.3)));
        assert!(!s.member(C64::new(0.9, 0.9)));
        let v = Shape::Hull { edges: vec![Geodesic::Vertical { x: 2.0, sign: 1.0 }] };
        assert!(v.member(C64::new(3.0, 5.0)) && !v.member(C64::new(1.0, 5.0)));
    }

    #[test]
    fn star_interpolation() {
        let rho = vec![1.0; 8];
        assert!((star_radius(&rho, 0.3) - 1.0).abs() < 1e-15);
        let mut rho2 = rho.clone();
        rho2[2] = f64::INFINITY;
        assert!(star_radius(&rho2, std::f64::consts::FRAC_PI_2 - 0.01).is_infinite());
    }
}

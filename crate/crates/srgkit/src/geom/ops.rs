//! Set operations on regions: Moebius inversion, real affine maps, Minkowski
//! sums and set products.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use super::contour::contour;
use super::hull::convex_hull;
use super::region::{circle_points, disk_region, Curve, Flag, Region, Structure};
use super::shape::{Raster, Shape};
use super::GeomError;
use crate::settings::{Settings, FAR, GEOM_TOL};
use crate::C64;

const STAR_GRID: usize = 4096;
/// Relative image spacing targeted when inverting boundary samples.
const INV_SPACING: f64 = 0.05;
const INV_MAX_DEPTH: u32 = 48;

fn inv(z: C64) -> C64 {
    z / z.norm_sqr()
}

/// Pushes the images of interior bisection points of `[z0, z1]` until the
/// image spacing is below [`INV_SPACING`] relative to the image modulus.
fn subdivide_inv(z0: C64, z1: C64, depth: u32, out: &mut Vec<C64>) {
    let (w0, w1) = (inv(z0), inv(z1));
    if depth >= INV_MAX_DEPTH || (w1 - w0).norm() <= INV_SPACING * w0.norm().min(w1.norm()) {
        return;
    }
    let m = (z0 + z1) * 0.5;
    subdivide_inv(z0, m, depth + 1, out);
    out.push(inv(m));
    subdivide_inv(m, z1, depth + 1, out);
}

/// Inverts a polyline. Stretches passing within `1/FAR` of the origin map
/// beyond `FAR` and are cut out, splitting the curve.
fn invert_curve(c: &Curve) -> Vec<Curve> {
    let eps = 1.0 / FAR;
    let pts = &c.points;
    if pts.len() == 1 {
        return if pts[0].norm() > eps { vec![Curve::open(vec![inv(pts[0])])] } else { Vec::new() };
    }
    let mut pieces: Vec<Vec<C64>> = Vec::new();
    let mut cur: Vec<C64> = Vec::new();
    let mut broken = false;
    for (z0, z1) in c.segments() {
        let d = z1 - z0;
        let len = d.norm();
        let (t_star, d_star) = if len > 0.0 {
            let t = (-(z0.re * d.re + z0.im * d.im) / (len * len)).clamp(0.0, 1.0);
            (t, (z0 + d * t).norm())
        } else {
            (0.0, z0.norm())
        };
        if d_star > eps {
            if cur.is_empty() {
                cur.push(inv(z0));
            }
            subdivide_inv(z0, z1, 0, &mut cur);
            cur.push(inv(z1));
            continue;
        }
        // The segment passes through the small disk around the origin.
        let half = if len > 0.0 { (eps * eps - d_star * d_star).max(0.0).sqrt() / len } else { 1.0 };
        let (tm, tp) = (t_star - half, t_star + half);
        if tm > 0.0 {
            let a = z0 + d * tm;
            if cur.is_empty() {
                cur.push(inv(z0));
            }
            subdivide_inv(z0, a, 0, &mut cur);
            cur.push(inv(a));
        }
        if !cur.is_empty() {
            pieces.push(std::mem::take(&mut cur));
        }
        broken = true;
        if tp < 1.0 {
            let b = z0 + d * tp;
            cur.push(inv(b));
            subdivide_inv(b, z1, 0, &mut cur);
            cur.push(inv(z1));
        }
    }
    if !broken {
        if c.closed {
            cur.pop();
        }
        return vec![Curve { points: cur, closed: c.closed }];
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    pieces.into_iter().map(Curve::open).collect()
}

/// The Moebius inversion `r e^{jw} -> (1/r) e^{jw}`.
pub fn mobius_inverse(a: &Region) -> Region {
    if a.is_plane() {
        return Region::plane();
    }
    if let Some((alpha, beta)) = a.as_disk() {
        if alpha > 0.0 || beta < 0.0 {
            return disk_region(1.0 / beta, 1.0 / alpha).expect("ordered");
        }
    }
    if a.sample_count() == 0 && a.contains_infinity() && matches!(*a.shape, Shape::Empty) {
        return Region::point(0.0);
    }
    let zero = C64::new(0.0, 0.0);
    let contains_infinity = a.shape.member(zero) || a.index.distance(zero) <= GEOM_TOL;
    let curves: Vec<Curve> = a.curves().iter().flat_map(invert_curve).collect();
    let shape = match &*a.shape {
        Shape::Inverse { inner, .. } => inner.clone(),
        _ => Arc::new(Shape::Inverse { inner: a.shape.clone(), inner_inf: a.contains_infinity() }),
    };
    let structure = match a.structure() {
        Structure::HconvexHull => Structure::HconvexHull,
        _ => Structure::Generic,
    };
    if curves.is_empty() && !contains_infinity {
        // Only the point at infinity was sampled: the image is {0}.
        return Region::point(0.0);
    }
    Region::with_shape_arc(curves, shape, contains_infinity, structure).set_zero_area(a.is_zero_area())
}

/// The image `s * A + b` for real `s != 0` and real `b`.
pub fn affine_region(a: &Region, s: f64, b: f64) -> Result<Region, GeomError> {
    if s == 0.0 || !s.is_finite() || !b.is_finite() {
        return Err(GeomError::DegenerateScale);
    }
    if a.is_plane() {
        return Ok(Region::plane());
    }
    if let (Some((alpha, beta)), false) = (a.as_disk(), a.contains_infinity()) {
        let (p, q) = (s * alpha + b, s * beta + b);
        return disk_region(p.min(q), p.max(q));
    }
    let curves: Vec<Curve> = a
        .curves()
        .iter()
        .map(|c| Curve { points: c.points.iter().map(|&z| z * s + b).collect(), closed: c.closed })
        .collect();
    let shape = match &*a.shape {
        Shape::HalfPlane { right } if b == 0.0 => Arc::new(Shape::HalfPlane { right: *right == (s > 0.0) }),
        Shape::Affine { a: s1, b: b1, inner } => {
            Arc::new(Shape::Affine { a: s * s1, b: s * b1 + b, inner: inner.clone() })
        }
        _ => Arc::new(Shape::Affine { a: s, b, inner: a.shape.clone() }),
    };
    let mut r = Region::raw(curves, shape, a.contains_infinity(), a.structure()).set_zero_area(a.is_zero_area());
    let (chord, left, right) = (a.chord_flag(), a.left_arc_flag(), a.right_arc_flag());
    if b == 0.0 {
        if s > 0.0 {
            r.set_flags(chord, left, right);
        } else {
            r.set_flags(chord, right, left);
        }
    } else {
        r.refresh_flags();
        // Real affine maps send vertical chords to vertical chords.
        if chord.holds() {
            r.set_flags(chord, r.left_arc_flag(), r.right_arc_flag());
        }
    }
    Ok(r)
}

/// `alpha * A`.
pub fn scale_region(alpha: f64, a: &Region) -> Result<Region, GeomError> {
    affine_region(a, alpha, 0.0)
}

/// `1 + A`.
pub fn shift_region(a: &Region) -> Region {
    affine_region(a, 1.0, 1.0).expect("unit scale")
}

fn weaker(a: Flag, b: Flag) -> Flag {
    match (a, b) {
        (Flag::Unknown, _) | (_, Flag::Unknown) => Flag::Unknown,
        (Flag::Guaranteed, Flag::Guaranteed) => Flag::Guaranteed,
        _ => Flag::VerifiedNumerically,
    }
}

/// The Minkowski sum `A + B` with default settings.
pub fn minkowski_sum(a: &Region, b: &Region) -> Region {
    minkowski_sum_with(a, b, &Settings::default())
}

pub fn minkowski_sum_with(a: &Region, b: &Region, settings: &Settings) -> Region {
    if a.is_plane() || b.is_plane() {
        return Region::plane();
    }
    if let Some(x) = b.as_point() {
        return affine_region(a, 1.0, x).expect("unit scale");
    }
    if let Some(x) = a.as_point() {
        return affine_region(b, 1.0, x).expect("unit scale");
    }
    let inf = a.contains_infinity() || b.contains_infinity();
    let bounded_disk = |r: &Region| if r.contains_infinity() { None } else { r.as_disk() };
    let mut out = match (bounded_disk(a), bounded_disk(b)) {
        (Some((a1, b1)), Some((a2, b2))) => return disk_region(a1 + a2, b1 + b2).expect("ordered"),
        (_, Some((alpha, beta))) => dilate(a, 0.5 * (alpha + beta), 0.5 * (beta - alpha)),
        (Some((alpha, beta)), _) => dilate(b, 0.5 * (alpha + beta), 0.5 * (beta - alpha)),
        _ if a.contains_infinity() && b.contains_infinity() => return Region::plane(),
        // A raster window cannot hold an unbounded operand; cover the bounded
        // one by a disk instead (an outer bound of the exact sum).
        _ if a.contains_infinity() => {
            let (c, r) = enclosing_real_disk(b);
            dilate(a, c, r)
        }
        _ if b.contains_infinity() => {
            let (c, r) = enclosing_real_disk(a);
            dilate(b, c, r)
        }
        _ => raster_combine(a, b, Combine::Sum, settings),
    };
    debug_assert_eq!(out.contains_infinity(), inf);
    // Chord closure survives sums: (a + b) with both vertical chords inside.
    let chord = weaker(a.chord_flag(), b.chord_flag());
    if chord.holds() && !out.chord_flag().holds() {
        out.set_flags(Flag::VerifiedNumerically, out.left_arc_flag(), out.right_arc_flag());
    } else if chord == Flag::Guaranteed {
        out.set_flags(chord, out.left_arc_flag(), out.right_arc_flag());
    }
    out
}

/// Smallest disk centered on the real axis containing the bounded region
/// `b`, as `(center, radius)`.
fn enclosing_real_disk(b: &Region) -> (f64, f64) {
    let pts: Vec<C64> = b.samples().collect();
    let reach = |c: f64| pts.iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
    let (mut lo, mut hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), z| (l.min(z.re), h.max(z.re)));
    // `reach` is convex in `c`.
    for _ in 0..100 {
        let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if reach(m1) <= reach(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let c = 0.5 * (lo + hi);
    // Boundary samples can undershoot curved edges by the sagitta.
    (c, reach(c) * (1.0 + 1e-3) + GEOM_TOL)
}

/// `A + D(c, r)` for a generic `A` and a closed disk centered on the real axis.
fn dilate(a: &Region, c: f64, r: f64) -> Region {
    if r == 0.0 {
        return affine_region(a, 1.0, c).expect("unit scale");
    }
    let inner = a.shape.clone();
    let boundary = a.index.clone();
    // Vertex offsets along one segment's normal sit slightly closer than `r`
    // to the neighbouring segment; anything this close is still in the sum.
    let keep = |q: C64| {
        let w = q - c;
        !inner.member(w) && boundary.distance(w) >= r * (1.0 - 2e-2)
    };
    let shift = C64::new(c, 0.0);
    let mut curves: Vec<Curve> = Vec::new();
    let emit = |cands: Vec<C64>, closed: bool, curves: &mut Vec<Curve>| {
        let flags: Vec<bool> = cands.iter().map(|&q| keep(q)).collect();
        if closed && flags.iter().all(|&f| f) {
            curves.push(Curve::closed(cands));
            return;
        }
        let mut run = Vec::new();
        for (q, f) in cands.into_iter().zip(flags) {
            if f {
                run.push(q);
            } else if !run.is_empty() {
                curves.push(Curve::open(std::mem::take(&mut run)));
            }
        }
        if !run.is_empty() {
            curves.push(Curve::open(run));
        }
    };
    let ring = |p: C64| -> Vec<C64> { circle_points(0.0, r, 64).into_iter().map(|z| z + p + shift).collect() };
    for curve in a.curves() {
        let pts = &curve.points;
        if pts.len() == 1 {
            emit(ring(pts[0]), true, &mut curves);
            continue;
        }
        let segs: Vec<(C64, C64)> = curve.segments().filter(|(p, q)| p != q).collect();
        if segs.is_empty() {
            emit(ring(pts[0]), true, &mut curves);
            continue;
        }
        for side in [1.0, -1.0] {
            let normal = |(p, q): (C64, C64)| {
                let d = q - p;
                C64::new(d.im, -d.re) / d.norm() * side
            };
            let mut cands = Vec::with_capacity(segs.len() * 3);
            for (k, &seg) in segs.iter().enumerate() {
                let n = normal(seg);
                cands.push(seg.0 + n * r + shift);
                cands.push(seg.1 + n * r + shift);
                let next = if k + 1 < segs.len() {
                    Some(segs[k + 1])
                } else if curve.closed {
                    Some(segs[0])
                } else {
                    None
                };
                if let Some(ns) = next {
                    let n2 = normal(ns);
                    let t1 = n.arg();
                    let dt = (n2.arg() - t1 + PI).rem_euclid(TAU) - PI;
                    let m = ((dt.abs() / (PI / 16.0)).ceil() as usize).max(1);
                    for j in 1..m {
                        let t = t1 + dt * j as f64 / m as f64;
                        cands.push(seg.1 + C64::from_polar(r, t) + shift);
                    }
                }
            }
            emit(cands, curve.closed, &mut curves);
        }
        if !curve.closed {
            emit(ring(pts[0]), true, &mut curves);
            emit(ring(pts[pts.len() - 1]), true, &mut curves);
        }
    }
    let shape = Shape::Dilate { inner: a.shape.clone(), boundary: a.index.clone(), c, r };
    Region::with_shape_arc(curves, Arc::new(shape), a.contains_infinity(), Structure::Generic)
}

fn contains_zero(a: &Region) -> bool {
    let z = C64::new(0.0, 0.0);
    a.contains_strict(z) || a.index.distance(z) <= GEOM_TOL
}

/// The set product `A B` with default settings.
pub fn set_product(a: &Region, b: &Region) -> Result<Region, GeomError> {
    set_product_with(a, b, &Settings::default())
}

pub fn set_product_with(a: &Region, b: &Region, settings: &Settings) -> Result<Region, GeomError> {
    for (p, q) in [(a, b), (b, a)] {
        if let Some(x) = p.as_point() {
            if x == 0.0 {
                if q.contains_infinity() {
                    return Err(GeomError::IndeterminateProduct);
                }
                return Ok(Region::point(0.0));
            }
            return affine_region(q, x, 0.0);
        }
    }
    if (contains_zero(a) && b.contains_infinity()) || (contains_zero(b) && a.contains_infinity()) {
        return Err(GeomError::IndeterminateProduct);
    }
    if a.is_plane() || b.is_plane() {
        return Ok(Region::plane());
    }
    let rank = |r: &Region| match r.as_disk() {
        Some(_) if r.contains_infinity() => None,
        Some((alpha, beta)) if alpha == -beta => Some(0),
        Some((alpha, beta)) if alpha == 0.0 || beta == 0.0 => Some(1),
        Some(_) => Some(2),
        None => None,
    };
    let (disk, other) = match (rank(a), rank(b)) {
        (Some(ra), Some(rb)) if ra < rb => (a, b),
        (_, Some(_)) => (b, a),
        (Some(_), None) => (a, b),
        (None, None) => return Ok(raster_combine(a, b, Combine::Product, settings)),
    };
    let (alpha, beta) = disk.as_disk().expect("disk operand");
    Ok(disk_product(other, alpha, beta, settings))
}

/// `A * D_[alpha, beta]` for a nondegenerate disk.
fn disk_product(a: &Region, alpha: f64, beta: f64, settings: &Settings) -> Region {
    if alpha == 0.0 {
        return star_product(a, beta);
    }
    if beta == 0.0 {
        let pos = star_product(a, -alpha);
        return affine_region(&pos, -1.0, 0.0).expect("unit scale");
    }
    if alpha < 0.0 && beta > 0.0 {
        if alpha == -beta {
            let r = beta * a.radius();
            return disk_region(-r, r).expect("ordered");
        }
        let c = 0.5 * (1.0 / alpha + 1.0 / beta);
        let r = 0.5 * (1.0 / beta - 1.0 / alpha);
        let far = Arc::new(convex_hull(&a.samples().collect::<Vec<_>>()));
        let shape = Arc::new(Shape::ProdDiskIn { far, c, r });
        let extent = 1.02 * a.radius() * alpha.abs().max(beta.abs()) + GEOM_TOL;
        let s = shape.clone();
        let pred = move |z: C64| s.member(z);
        let curves = contour(&pred, C64::new(-extent, -extent), C64::new(extent, extent), settings.contour_grid);
        return Region::with_shape_arc(curves, shape, false, Structure::Generic);
    }
    // 0 outside D: 1/D is the disk D(c, r).
    let c = 0.5 * (1.0 / alpha + 1.0 / beta);
    let r = 0.5 * (1.0 / alpha - 1.0 / beta).abs();
    let shape = Arc::new(Shape::ProdDiskOut {
        inner: a.shape.clone(),
        boundary: a.index.clone(),
        c,
        r,
        zero_in: contains_zero(a),
    });
    let dc = 0.5 * (alpha + beta);
    let dr = 0.5 * (beta - alpha);
    let rim: Vec<C64> = circle_points(dc, dr, 64);
    let cloud: Vec<C64> = strided(a, 512).flat_map(|x| rim.iter().map(move |&d| x * d)).collect();
    let (lo, hi) = window(&cloud, 0.05);
    let s = shape.clone();
    let pred = move |z: C64| s.member(z);
    let curves = contour(&pred, lo, hi, settings.contour_grid);
    Region::with_shape_arc(curves, shape, a.contains_infinity(), Structure::Generic)
}

/// `A * D_[0, beta]`: star-shaped about 0 with radial function
/// `max(0, beta * h_A(theta))`, `h_A` the support function of `A`.
fn star_product(a: &Region, beta: f64) -> Region {
    let hull = convex_hull(&a.samples().collect::<Vec<_>>());
    let rho: Vec<f64> = (0..STAR_GRID)
        .map(|k| {
            let u = C64::from_polar(1.0, TAU * k as f64 / STAR_GRID as f64);
            let h = hull.iter().map(|v| v.re * u.re + v.im * u.im).fold(f64::NEG_INFINITY, f64::max);
            (beta * h).max(0.0)
        })
        .collect();
    let pts: Vec<C64> = rho
        .iter()
        .enumerate()
        .map(|(k, &r)| C64::from_polar(r, TAU * k as f64 / STAR_GRID as f64))
        .collect();
    let shape = Shape::Star { rho: Arc::new(rho) };
    Region::with_shape_arc(vec![Curve::closed(pts)], Arc::new(shape), false, Structure::Generic)
}

fn strided(a: &Region, n: usize) -> impl Iterator<Item = C64> + '_ {
    let step = (a.sample_count() / n.max(1)).max(1);
    a.samples().step_by(step).filter(|z| z.re.is_finite() && z.im.is_finite())
}

/// Bounding box of a point cloud, symmetrized about the real axis, padded by
/// `pad` of its size and clipped to `FAR`.
fn window(cloud: &[C64], pad: f64) -> (C64, C64) {
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y = 0.0f64;
    for z in cloud {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y = y.max(z.im.abs());
    }
    if !x0.is_finite() {
        return (C64::new(-1.0, -1.0), C64::new(1.0, 1.0));
    }
    let size = (x1 - x0).max(2.0 * y).max(1e-9);
    let m = pad * size + GEOM_TOL;
    let y = (y + m).min(FAR);
    (C64::new((x0 - m).max(-FAR), -y), C64::new((x1 + m).min(FAR), y))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Combine {
    Sum,
    Product,
}

impl Combine {
    fn apply(self, a: C64, b: C64) -> C64 {
        match self {
            Combine::Sum => a + b,
            Combine::Product => a * b,
        }
    }
}

/// Drops samples closer than `min_step` to the previously kept one.
fn decimate(c: &Curve, min_step: f64) -> Curve {
    let mut out: Vec<C64> = Vec::with_capacity(c.points.len());
    for (i, &z) in c.points.iter().enumerate() {
        let last = i + 1 == c.points.len();
        match out.last() {
            Some(&p) if (z - p).norm() < min_step && !last => {}
            _ => out.push(z),
        }
    }
    Curve { points: out, closed: c.closed }
}

/// Generic sum or product on a raster: images of boundary-by-vertex pairs
/// are marked, then each unmarked component is classified once.
fn raster_combine(a: &Region, b: &Region, op: Combine, settings: &Settings) -> Region {
    let cloud: Vec<C64> = strided(a, 256).flat_map(|x| strided(b, 256).map(move |y| op.apply(x, y))).collect();
    let (lo, hi) = window(&cloud, 0.03);
    let n = settings.contour_grid.max(16);
    let dx = (hi.re - lo.re) / n as f64;
    let dy = (hi.im - lo.im) / n as f64;
    let cell = dx.min(dy);
    let ca: Vec<Curve> = a.curves().iter().map(|c| decimate(c, 0.5 * cell)).collect();
    let cb: Vec<Curve> = b.curves().iter().map(|c| decimate(c, 0.5 * cell)).collect();
    let mut marked = vec![false; n * n];
    let mut mark = |z: C64| {
        let i = ((z.re - lo.re) / dx).floor();
        let j = ((z.im - lo.im) / dy).floor();
        if i >= 0.0 && j >= 0.0 && (i as usize) < n && (j as usize) < n {
            marked[j as usize * n + i as usize] = true;
        }
    };
    for (curves, others, flip) in [(&ca, &cb, false), (&cb, &ca, true)] {
        let verts: Vec<C64> = others.iter().flat_map(|c| c.points.iter().copied()).collect();
        for c in curves.iter() {
            for &v in &verts {
                let f = |z: C64| if flip { op.apply(v, z) } else { op.apply(z, v) };
                if c.points.len() == 1 {
                    mark(f(c.points[0]));
                }
                for (p, q) in c.segments() {
                    let (fp, fq) = (f(p), f(q));
                    let steps = ((fq - fp).norm() / (0.5 * cell)).ceil().min(4096.0) as usize;
                    for k in 0..=steps {
                        mark(fp + (fq - fp) * (k as f64 / steps.max(1) as f64));
                    }
                }
            }
        }
    }
    let mut bits = marked.clone();
    for j in 0..n {
        for i in 0..n {
            if !marked[j * n + i] {
                continue;
            }
            for (di, dj) in [(-1i64, -1i64), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii >= 0 && jj >= 0 && (ii as usize) < n && (jj as usize) < n {
                    bits[jj as usize * n + ii as usize] = true;
                }
            }
        }
    }
    // Probe sets for the slow membership test.
    let probes = |r: &Region| -> Vec<C64> {
        let mut v: Vec<C64> = strided(r, 1024).collect();
        v.extend(r.interior_samples(40));
        v
    };
    let (pa, pb) = (probes(a), probes(b));
    let slow = |z: C64| -> bool {
        match op {
            Combine::Sum => pb.iter().any(|&y| a.contains_strict(z - y)) || pa.iter().any(|&x| b.contains_strict(z - x)),
            Combine::Product => {
                pb.iter().any(|&y| y.norm() > 0.0 && a.contains_strict(z / y))
                    || pa.iter().any(|&x| x.norm() > 0.0 && b.contains_strict(z / x))
            }
        }
    };
    let center = |i: usize, j: usize| C64::new(lo.re + (i as f64 + 0.5) * dx, lo.im + (j as f64 + 0.5) * dy);
    let mut seen = bits.clone();
    for start in 0..n * n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(k) = queue.pop_front() {
            comp.push(k);
            let (i, j) = (k % n, k / n);
            let nb = [
                (i > 0).then(|| k - 1),
                (i + 1 < n).then(|| k + 1),
                (j > 0).then(|| k - n),
                (j + 1 < n).then(|| k + n),
            ];
            for m in nb.into_iter().flatten() {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        if slow(center(start % n, start / n)) {
            for k in comp {
                bits[k] = true;
            }
        }
    }
    let inf = a.contains_infinity() || b.contains_infinity();
    let outside = Arc::new(if inf { Shape::Plane } else { Shape::Empty });
    let raster = Raster { x0: lo.re, y0: lo.im, dx, dy, nx: n, ny: n, bits, outside };
    let shape = Arc::new(Shape::Raster(raster));
    let s = shape.clone();
    let pred = move |z: C64| s.member(z);
    let half = C64::new(0.5 * dx, 0.5 * dy);
    let curves = contour(&pred, lo + half, hi - half, n - 1);
    Region::with_shape_arc(curves, shape, inf, Structure::Generic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn inverse_of_disks() {
        let d = mobius_inverse(&disk_region(1.0, 2.0).unwrap());
        assert_eq!(d.as_disk(), Some((0.5, 1.0)));
        let e = mobius_inverse(&disk_region(-1.0, 1.0).unwrap());
        assert!(e.contains_infinity());
        assert!(e.contains(C64::new(3.0, 0.0)) && e.contains(C64::new(1.0, 0.0)));
        assert!(!e.contains(C64::new(0.3, 0.1)));
        let back = mobius_inverse(&e);
        assert!(!back.contains_infinity());
        assert!(back.contains(C64::new(0.2, 0.3)) && !back.contains(C64::new(1.2, 0.0)));
    }

    #[test]
    fn inverse_of_half_plane_keeps_far_boundary() {
        let h = mobius_inverse(&Region::half_plane(true));
        assert!(h.contains_infinity() && h.contains(C64::new(0.0, 0.0)));
        let p = disk_region(-2.0, -1.0).unwrap();
        // dist(D_[-2,-1], Re >= 0) = 1, and must not depend on far samples.
        assert!(close(h.distance(&p), 1.0, 1e-3));
        let q = Region::point_set(&[C64::new(-1.0, 5.0)]).unwrap();
        assert!(close(h.distance(&q), 1.0, 1e-3));
    }

    #[test]
    fn affine_maps() {
        let d = disk_region(0.0, 1.0).unwrap();
        assert_eq!(scale_region(2.0, &d).unwrap().as_disk(), Some((0.0, 2.0)));
        assert_eq!(shift_region(&disk_region(-1.0, 1.0).unwrap()).as_disk(), Some((0.0, 2.0)));
        assert_eq!(scale_region(-1.0, &disk_region(1.0, 2.0).unwrap()).unwrap().as_disk(), Some((-2.0, -1.0)));
        assert_eq!(scale_region(0.0, &d).unwrap_err(), GeomError::DegenerateScale);
        let h = scale_region(-1.0, &Region::half_disk(1.0, true).unwrap()).unwrap();
        assert!(h.contains(C64::new(-0.5, 0.2)) && !h.contains(C64::new(0.5, 0.2)));
        assert!(h.left_arc_flag().holds());
    }

    #[test]
    fn disk_sums() {
        let s = minkowski_sum(&disk_region(0.0, 1.0).unwrap(), &disk_region(1.0, 2.0).unwrap());
        assert_eq!(s.as_disk(), Some((1.0, 3.0)));
        let h = Region::half_disk(1.0, true).unwrap();
        let z = minkowski_sum(&h, &Region::point(0.0));
        assert!(z.contains(C64::new(0.5, 0.5)) && !z.contains(C64::new(-0.5, 0.0)));
    }

    #[test]
    fn dilated_half_disk() {
        let h = Region::half_disk(1.0, true).unwrap();
        let s = minkowski_sum(&h, &disk_region(-0.5, 0.5).unwrap());
        assert!(s.contains(C64::new(-0.45, 0.0)));
        assert!(!s.contains(C64::new(-0.6, 0.0)));
        assert!(close(s.radius(), 1.5, 1e-3));
        for z in s.samples() {
            let inside_h = h.contains_strict(z);
            assert!(!inside_h || z.re < 0.5, "boundary sample {z} deep inside");
        }
    }

    #[test]
    fn star_product_of_disk() {
        // D_[1,2] * D_[0,1]: radial function max(0, h(theta)) of D_[1,2].
        let p = set_product(&disk_region(1.0, 2.0).unwrap(), &disk_region(0.0, 1.0).unwrap()).unwrap();
        assert!(close(p.radius(), 2.0, 1e-6));
        assert!(p.contains(C64::new(1.0, 0.0)) && p.contains(C64::new(0.0, 0.0)));
        assert!(!p.contains(C64::new(-0.1, 0.0)));
    }

    #[test]
    fn centered_disk_product_is_exact() {
        let h = Region::half_disk(2.0, true).unwrap();
        let p = set_product(&h, &disk_region(-1.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.as_disk(), Some((-2.0, 2.0)));
    }

    #[test]
    fn product_with_off_center_disks_matches_pairwise_cloud() {
        let a = disk_region(-1.0, 2.0).unwrap();
        let b = disk_region(1.0, 3.0).unwrap();
        let p = set_product(&a, &b).unwrap();
        // Oracle: products of dense disk samples.
        let fill = |x0: f64, x1: f64| -> Vec<C64> {
            let (c, r) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
            let mut v = Vec::new();
            for i in 0..=12 {
                for k in 0..48 {
                    let rr = r * i as f64 / 12.0;
                    v.push(C64::new(c, 0.0) + C64::from_polar(rr, TAU * k as f64 / 48.0));
                }
            }
            v
        };
        for x in fill(-1.0, 2.0) {
            for y in fill(1.0, 3.0).into_iter().step_by(7) {
                assert!(p.contains(x * y), "{} missing", x * y);
            }
        }
        assert!(!p.contains(C64::new(6.5, 0.0)));
        assert!(!p.contains(C64::new(-3.5, 0.0)));
    }

    #[test]
    fn indeterminate_product() {
        let err = set_product(&disk_region(-1.0, 1.0).unwrap(), &Region::half_plane(true)).unwrap_err();
        assert_eq!(err, GeomError::IndeterminateProduct);
        let one = Region::point(1.0);
        let h = Region::half_plane(true);
        assert!(set_product(&one, &h).unwrap().contains_infinity());
    }

    #[test]
    fn raster_sum_of_polygons() {
        let tri = Region::polygon(vec![vec![C64::new(1.0, 0.0), C64::new(2.0, 1.0), C64::new(2.0, -1.0)]], false)
            .unwrap();
        let sq = Region::polygon(
            vec![vec![C64::new(-0.5, -0.5), C64::new(0.5, -0.5), C64::new(0.5, 0.5), C64::new(-0.5, 0.5)]],
            false,
        )
        .unwrap();
        let s = minkowski_sum(&tri, &sq);
        assert!(s.contains(C64::new(1.5, 0.0)));
        assert!(s.contains(C64::new(2.4, 1.4)));
        assert!(!s.contains(C64::new(0.0, 0.0)));
        assert!(!s.contains(C64::new(3.0, 0.0)));
    }
}

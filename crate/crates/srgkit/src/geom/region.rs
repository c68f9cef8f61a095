use std::fmt;
use std::sync::Arc;

use super::flags;
use super::index::SegmentIndex;
use super::shape::Shape;
use super::GeomError;
use crate::settings::{FAR, GEOM_TOL};
use crate::C64;

/// A boundary polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub points: Vec<C64>,
    pub closed: bool,
}

impl Curve {
    pub fn closed(points: Vec<C64>) -> Self {
        Curve { points, closed: true }
    }

    pub fn open(points: Vec<C64>) -> Self {
        Curve { points, closed: false }
    }

    /// Consecutive point pairs, including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        let n = self.points.len();
        let extra = if self.closed && n > 1 { 1 } else { 0 };
        (0..n.saturating_sub(1) + extra).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }
}

/// Three-valued property flag. Sampling can confirm a property but never refute it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flag {
    Guaranteed,
    VerifiedNumerically,
    Unknown,
}

impl Flag {
    pub fn holds(self) -> bool {
        self != Flag::Unknown
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Guaranteed => "GUARANTEED",
            Flag::VerifiedNumerically => "VERIFIED_NUMERICALLY",
            Flag::Unknown => "UNKNOWN",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Structure {
    /// The closed disk centered on the real axis meeting it in `[alpha, beta]`.
    ExactDisk { alpha: f64, beta: f64 },
    HconvexHull,
    Generic,
}

/// A conjugate-symmetric subset of the extended complex plane.
///
/// Boundary polylines satisfy `boundary ⊆ samples ⊆ region`: every boundary
/// point is (up to sample spacing) on a curve, and every curve point belongs
/// to the region. Curves may therefore run through the interior, which does
/// not affect radius or distance queries.
#[derive(Clone)]
pub struct Region {
    curves: Arc<Vec<Curve>>,
    contains_infinity: bool,
    structure: Structure,
    chord: Flag,
    left_arc: Flag,
    right_arc: Flag,
    zero_area: bool,
    pub(crate) shape: Arc<Shape>,
    pub(crate) index: Arc<SegmentIndex>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("structure", &self.structure)
            .field("contains_infinity", &self.contains_infinity)
            .field("curves", &self.curves.len())
            .field("points", &self.curves.iter().map(|c| c.points.len()).sum::<usize>())
            .field("chord", &self.chord)
            .field("left_arc", &self.left_arc)
            .field("right_arc", &self.right_arc)
            .finish()
    }
}

/// Disk flags: the chord property always holds; the right arc through
/// `z, conj z` stays inside when the center is right of the origin, the left
/// arc when it is left of it.
fn disk_flags(alpha: f64, beta: f64) -> (Flag, Flag, Flag) {
    let s = alpha + beta;
    let right = if s >= 0.0 { Flag::Guaranteed } else { Flag::Unknown };
    let left = if s <= 0.0 { Flag::Guaranteed } else { Flag::Unknown };
    (Flag::Guaranteed, left, right)
}

pub(crate) fn circle_points(c: f64, r: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            C64::new(c + r * t.cos(), r * t.sin())
        })
        .collect()
}

/// The disk centered on the real axis meeting it in `[alpha, beta]`.
pub fn disk_region(alpha: f64, beta: f64) -> Result<Region, GeomError> {
    if !(alpha <= beta) || !alpha.is_finite() || !beta.is_finite() {
        return Err(GeomError::InvalidInterval { alpha, beta });
    }
    let c = 0.5 * (alpha + beta);
    let r = 0.5 * (beta - alpha);
    let pts = if r == 0.0 { vec![C64::new(c, 0.0)] } else { circle_points(c, r, 512) };
    let (chord, left, right) = disk_flags(alpha, beta);
    let curves = vec![Curve::closed(pts)];
    Ok(Region {
        index: Arc::new(SegmentIndex::new(&curves)),
        curves: Arc::new(curves),
        contains_infinity: false,
        structure: Structure::ExactDisk { alpha, beta },
        chord,
        left_arc: left,
        right_arc: right,
        zero_area: r == 0.0,
        shape: Arc::new(Shape::Disk { c, r }),
    })
}

impl Region {
    /// Assembles a region and derives its property flags numerically.
    pub(crate) fn build(
        curves: Vec<Curve>,
        shape: Shape,
        contains_infinity: bool,
        structure: Structure,
    ) -> Region {
        if let Structure::ExactDisk { alpha, beta } = structure {
            if !contains_infinity {
                return disk_region(alpha, beta).expect("ordered interval");
            }
        }
        let mut r = Region {
            index: Arc::new(SegmentIndex::new(&curves)),
            curves: Arc::new(curves),
            contains_infinity,
            structure,
            chord: Flag::Unknown,
            left_arc: Flag::Unknown,
            right_arc: Flag::Unknown,
            zero_area: false,
            shape: Arc::new(shape),
        };
        r.refresh_flags();
        r
    }

    pub(crate) fn with_shape_arc(
        curves: Vec<Curve>,
        shape: Arc<Shape>,
        contains_infinity: bool,
        structure: Structure,
    ) -> Region {
        let mut r = Region::raw(curves, shape, contains_infinity, structure);
        r.refresh_flags();
        r
    }

    /// Assembles a region with all flags `Unknown`; the caller sets them.
    pub(crate) fn raw(
        curves: Vec<Curve>,
        shape: Arc<Shape>,
        contains_infinity: bool,
        structure: Structure,
    ) -> Region {
        Region {
            index: Arc::new(SegmentIndex::new(&curves)),
            curves: Arc::new(curves),
            contains_infinity,
            structure,
            chord: Flag::Unknown,
            left_arc: Flag::Unknown,
            right_arc: Flag::Unknown,
            zero_area: false,
            shape,
        }
    }

    pub(crate) fn refresh_flags(&mut self) {
        self.chord = flags::chord_property_check(self);
        self.left_arc = flags::arc_property_check(self, flags::ArcSide::Left);
        self.right_arc = flags::arc_property_check(self, flags::ArcSide::Right);
    }

    pub(crate) fn set_flags(&mut self, chord: Flag, left: Flag, right: Flag) {
        self.chord = chord;
        self.left_arc = left;
        self.right_arc = right;
    }

    pub(crate) fn set_zero_area(mut self, z: bool) -> Self {
        self.zero_area = z;
        self
    }

    /// The single point `{x}`.
    pub fn point(x: f64) -> Region {
        disk_region(x, x).expect("finite point")
    }

    /// The whole extended plane.
    pub fn plane() -> Region {
        let mut r = Region::build(Vec::new(), Shape::Plane, true, Structure::Generic);
        r.set_flags(Flag::Guaranteed, Flag::Guaranteed, Flag::Guaranteed);
        r
    }

    /// The closed right (or left) half-plane, including the point at infinity.
    pub fn half_plane(right: bool) -> Region {
        let edge = Curve::open(vec![C64::new(0.0, -FAR), C64::new(0.0, 0.0), C64::new(0.0, FAR)]);
        let mut r = Region::build(vec![edge], Shape::HalfPlane { right }, true, Structure::Generic);
        let g = Flag::Guaranteed;
        if right {
            r.set_flags(g, Flag::Unknown, g);
        } else {
            r.set_flags(g, g, Flag::Unknown);
        }
        r
    }

    /// `D_r(0)` intersected with the closed right (or left) half-plane.
    pub fn half_disk(radius: f64, right: bool) -> Result<Region, GeomError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeomError::InvalidInterval { alpha: -radius, beta: radius });
        }
        let n = 256;
        let sign = if right { 1.0 } else { -1.0 };
        let mut pts: Vec<C64> = (0..=n)
            .map(|k| {
                let t = std::f64::consts::PI * (k as f64 / n as f64 - 0.5);
                C64::new(sign * radius * t.cos(), radius * t.sin())
            })
            .collect();
        pts.extend((1..n).map(|k| C64::new(0.0, radius * (1.0 - 2.0 * k as f64 / n as f64))));
        let shape = Shape::Intersect(vec![
            Arc::new(Shape::Disk { c: 0.0, r: radius }),
            Arc::new(Shape::HalfPlane { right }),
        ]);
        let mut r = Region::build(vec![Curve::closed(pts)], shape, false, Structure::Generic);
        let g = Flag::Guaranteed;
        if right {
            r.set_flags(g, Flag::Unknown, g);
        } else {
            r.set_flags(g, g, Flag::Unknown);
        }
        Ok(r)
    }

    /// A polygonal region from closed loops (even-odd rule), complemented
    /// when `contains_infinity`. Loops are mirrored if they are not already
    /// conjugate-symmetric.
    pub fn polygon(loops: Vec<Vec<C64>>, contains_infinity: bool) -> Result<Region, GeomError> {
        if loops.iter().all(|l| l.is_empty()) {
            return Err(GeomError::EmptyRegion);
        }
        let mut curves: Vec<Curve> = loops.into_iter().filter(|l| !l.is_empty()).map(Curve::closed).collect();
        let probe = SegmentIndex::new(&curves);
        let symmetric = curves
            .iter()
            .flat_map(|c| c.points.iter())
            .all(|z| probe.distance(z.conj()) <= 1e-6 * (1.0 + z.norm()));
        if !symmetric {
            let mirrored: Vec<Curve> = curves
                .iter()
                .map(|c| Curve::closed(c.points.iter().rev().map(|z| z.conj()).collect()))
                .collect();
            curves.extend(mirrored);
        }
        let index = Arc::new(SegmentIndex::new(&curves));
        let shape = Shape::Polygon { index, inf: contains_infinity };
        Ok(Region::build(curves, shape, contains_infinity, Structure::Generic))
    }

    /// A finite point set, mirrored to be conjugate-symmetric.
    pub fn point_set(points: &[C64]) -> Result<Region, GeomError> {
        if points.is_empty() {
            return Err(GeomError::EmptyRegion);
        }
        let mut curves: Vec<Curve> = Vec::new();
        for &z in points {
            curves.push(Curve::open(vec![z]));
            if z.im != 0.0 {
                curves.push(Curve::open(vec![z.conj()]));
            }
        }
        Ok(Region::build(curves, Shape::Empty, false, Structure::Generic).set_zero_area(true))
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    /// All boundary sample points.
    pub fn samples(&self) -> impl Iterator<Item = C64> + '_ {
        self.curves.iter().flat_map(|c| c.points.iter().copied())
    }

    pub fn sample_count(&self) -> usize {
        self.curves.iter().map(|c| c.points.len()).sum()
    }

    pub fn contains_infinity(&self) -> bool {
        self.contains_infinity
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// `(alpha, beta)` for exact disks.
    pub fn as_disk(&self) -> Option<(f64, f64)> {
        match self.structure {
            Structure::ExactDisk { alpha, beta } => Some((alpha, beta)),
            _ => None,
        }
    }

    /// `Some(x)` when the region is the single real point `x`.
    pub fn as_point(&self) -> Option<f64> {
        match self.structure {
            Structure::ExactDisk { alpha, beta } if alpha == beta => Some(alpha),
            _ => None,
        }
    }

    pub fn chord_flag(&self) -> Flag {
        self.chord
    }

    pub fn left_arc_flag(&self) -> Flag {
        self.left_arc
    }

    pub fn right_arc_flag(&self) -> Flag {
        self.right_arc
    }

    /// True for regions with no interior (points, arcs, segments).
    pub fn is_zero_area(&self) -> bool {
        self.zero_area
    }

    pub fn is_plane(&self) -> bool {
        matches!(*self.shape, Shape::Plane)
    }

    /// Membership with a tolerance band of one boundary-sample spacing.
    pub fn contains(&self, z: C64) -> bool {
        if !z.re.is_finite() || !z.im.is_finite() {
            return self.contains_infinity;
        }
        if self.shape.member(z) {
            return true;
        }
        match self.index.nearest(z) {
            Some((d, len)) => {
                let band = len.min(0.01 * (1.0 + z.norm())).max(GEOM_TOL * (1.0 + z.norm()));
                d <= band
            }
            None => false,
        }
    }

    /// Membership without the tolerance band.
    pub fn contains_strict(&self, z: C64) -> bool {
        self.shape.member(z)
    }

    /// `rmin`: the smallest origin-centered disk radius containing the region.
    pub fn radius(&self) -> f64 {
        if self.contains_infinity {
            return f64::INFINITY;
        }
        if let Structure::ExactDisk { alpha, beta } = self.structure {
            return alpha.abs().max(beta.abs());
        }
        self.samples().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Infimum distance between the two sets; `0` when they overlap or both
    /// contain infinity.
    pub fn distance(&self, other: &Region) -> f64 {
        if self.contains_infinity && other.contains_infinity {
            return 0.0;
        }
        if self.is_plane() || other.is_plane() {
            return 0.0;
        }
        if let (Some((a1, b1)), Some((a2, b2))) = (self.as_disk(), other.as_disk()) {
            let (c1, r1) = (0.5 * (a1 + b1), 0.5 * (b1 - a1));
            let (c2, r2) = (0.5 * (a2 + b2), 0.5 * (b2 - a2));
            return ((c1 - c2).abs() - r1 - r2).max(0.0);
        }
        if self.index.is_empty() || other.index.is_empty() {
            return f64::INFINITY;
        }
        if self.overlaps_by_probe(other) || other.overlaps_by_probe(self) {
            return 0.0;
        }
        let d1 = self.samples().map(|z| other.index.distance(z)).fold(f64::INFINITY, f64::min);
        let d2 = other.samples().map(|z| self.index.distance(z)).fold(f64::INFINITY, f64::min);
        d1.min(d2)
    }

    /// True if a strided subset of this region's samples lies in `other`.
    fn overlaps_by_probe(&self, other: &Region) -> bool {
        self.curves.iter().any(|c| {
            let step = (c.points.len() / 64).max(1);
            c.points.iter().step_by(step).any(|&z| other.contains_strict(z))
        })
    }

    /// Bounding box `(min, max)` of the samples; `None` when there are none.
    pub fn bbox(&self) -> Option<(C64, C64)> {
        let mut it = self.samples().filter(|z| z.re.is_finite() && z.im.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), z| {
            (C64::new(lo.re.min(z.re), lo.im.min(z.im)), C64::new(hi.re.max(z.re), hi.im.max(z.im)))
        }))
    }

    /// Grid points of the bounding box (clipped to `FAR`) that lie in the region.
    pub fn interior_samples(&self, n: usize) -> Vec<C64> {
        let Some((lo, hi)) = self.bbox() else {
            return Vec::new();
        };
        let lo = C64::new(lo.re.max(-FAR), lo.im.max(-FAR));
        let hi = C64::new(hi.re.min(FAR), hi.im.min(FAR));
        let n = n.max(2);
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let z = C64::new(
                    lo.re + (hi.re - lo.re) * (i as f64 + 0.5) / n as f64,
                    lo.im + (hi.im - lo.im) * (j as f64 + 0.5) / n as f64,
                );
                if self.shape.member(z) {
                    out.push(z);
                }
            }
        }
        out
    }
}

/// Membership in the winding set `{z : N(z) + n_p > 0}` of a closed curve,
/// `N` counting clockwise encirclements.
pub(crate) fn winding_member(curve: &Curve, n_p: i64) -> impl Fn(C64) -> bool {
    let index = SegmentIndex::new(std::slice::from_ref(curve));
    move |z| -index.signed_crossings(z) + n_p > 0
}

/// `hull ∪ {z : N(z) + n_p > 0}` for the closed curve `loop_curve`.
pub(crate) fn union_with_winding(
    curves: Vec<Curve>,
    hull: &Region,
    loop_curve: &Curve,
    n_p: i64,
    contains_infinity: bool,
    structure: Structure,
) -> Region {
    let index = Arc::new(SegmentIndex::new(std::slice::from_ref(loop_curve)));
    let shape = Shape::Union(vec![hull.shape.clone(), Arc::new(Shape::Winding { index, n_p })]);
    Region::with_shape_arc(curves, Arc::new(shape), contains_infinity, structure)
}

/// Free-function form of [`Region::radius`].
pub fn region_radius(a: &Region) -> f64 {
    a.radius()
}

/// Free-function form of [`Region::distance`].
pub fn region_distance(a: &Region, b: &Region) -> f64 {
    a.distance(b)
}

/// Free-function form of [`Region::contains`].
pub fn contains(a: &Region, z: C64) -> bool {
    a.contains(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_basics() {
        let d = disk_region(0.0, 2.0).unwrap();
        assert!(d.contains(C64::new(1.0, 0.0)));
        assert!(!d.contains(C64::new(3.0, 0.0)));
        assert_eq!(d.radius(), 2.0);
        assert_eq!(disk_region(-1.0, 1.0).unwrap().radius(), 1.0);
        assert!(disk_region(1.0, 0.0).is_err());
        let p = disk_region(1.0, 1.0).unwrap();
        assert!(p.is_zero_area() && p.contains(C64::new(1.0, 0.0)));
    }

    #[test]
    fn disk_distances() {
        let a = disk_region(0.0, 1.0).unwrap();
        let b = disk_region(3.0, 4.0).unwrap();
        assert_eq!(a.distance(&b), 2.0);
        assert_eq!(a.distance(&disk_region(0.5, 5.0).unwrap()), 0.0);
    }

    #[test]
    fn disk_flags_follow_center() {
        let d = disk_region(1.0, 2.0).unwrap();
        assert_eq!(d.chord_flag(), Flag::Guaranteed);
        assert_eq!(d.right_arc_flag(), Flag::Guaranteed);
        assert_eq!(d.left_arc_flag(), Flag::Unknown);
        let d = disk_region(-1.0, 1.0).unwrap();
        assert!(d.left_arc_flag().holds() && d.right_arc_flag().holds());
    }

    #[test]
    fn half_disk_membership() {
        let h = Region::half_disk(0.25, true).unwrap();
        assert!(h.contains(C64::new(0.1, 0.1)));
        assert!(!h.contains(C64::new(-0.1, 0.0)));
        assert!((h.radius() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn point_set_fails_chord() {
        let r = Region::point_set(&[C64::new(0.0, 1.0)]).unwrap();
        assert_eq!(r.chord_flag(), Flag::Unknown);
        assert!(r.contains(C64::new(0.0, -1.0)));
    }
}

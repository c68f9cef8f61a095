//! Sampled checks of the chord and arc properties.

use super::region::{Flag, Region, Structure};
use crate::settings::FAR;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcSide {
    Left,
    Right,
}

const PROBES: usize = 64;
const STEPS: usize = 9;

/// Boundary points used as chord/arc anchors, strided over all curves.
fn anchors(a: &Region) -> Vec<C64> {
    let n = a.sample_count();
    let step = (n / PROBES).max(1);
    a.samples()
        .step_by(step)
        .filter(|z| z.norm() < FAR && z.im.abs() > 1e-12)
        .collect()
}

/// Points `re^{j(1-2t)phi}` of the right-hand arc through `z` and `conj z`.
fn right_arc(z: C64) -> impl Iterator<Item = C64> {
    let (r, phi) = z.to_polar();
    (1..STEPS).map(move |k| {
        let t = k as f64 / STEPS as f64;
        C64::from_polar(r, (1.0 - 2.0 * t) * phi)
    })
}

/// For every sampled `z`, is `[z, conj z]` inside the region?
pub fn chord_property_check(a: &Region) -> Flag {
    if let Structure::ExactDisk { .. } = a.structure() {
        return Flag::Guaranteed;
    }
    if a.is_plane() {
        return Flag::Guaranteed;
    }
    let ok = anchors(a).into_iter().all(|z| {
        (1..STEPS).all(|k| {
            let t = k as f64 / STEPS as f64;
            a.contains(C64::new(z.re, z.im * (1.0 - 2.0 * t)))
        })
    });
    if ok {
        Flag::VerifiedNumerically
    } else {
        Flag::Unknown
    }
}

/// For every sampled `z`, is the left (or right) arc through `z, conj z`,
/// centered at the origin, inside the region?
pub fn arc_property_check(a: &Region, side: ArcSide) -> Flag {
    if let Structure::ExactDisk { alpha, beta } = a.structure() {
        let s = alpha + beta;
        let holds = match side {
            ArcSide::Right => s >= 0.0,
            ArcSide::Left => s <= 0.0,
        };
        return if holds { Flag::Guaranteed } else { Flag::Unknown };
    }
    if a.is_plane() {
        return Flag::Guaranteed;
    }
    let ok = anchors(a).into_iter().all(|z| match side {
        ArcSide::Right => right_arc(z).all(|w| a.contains(w)),
        ArcSide::Left => right_arc(-z).all(|w| a.contains(-w)),
    });
    if ok {
        Flag::VerifiedNumerically
    } else {
        Flag::Unknown
    }
}

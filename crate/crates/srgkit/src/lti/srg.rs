//! SRGs of LTI operators: the h-convex hull of the Nyquist curve for stable
//! transfer functions, and the extended SRG (hull plus the winding set) for
//! arbitrary ones.

use std::collections::VecDeque;

use super::nyquist::{nyquist_curve, FrequencyGrid, NyquistCurve};
use super::LtiError;
use crate::geom::{
    disk_region, hconvex_hull, mobius_inverse, union_with_winding, winding_member, Curve, Region, Structure,
};
use crate::settings::{Settings, FAR};
use crate::{Tf, C64};

/// Extended SRG together with the data it was built from.
#[derive(Clone, Debug)]
pub struct ExtendedSrg {
    pub region: Region,
    pub curve: NyquistCurve,
    pub n_p: usize,
    pub warnings: Vec<String>,
}

fn label(f: &Tf) -> String {
    if f.label().is_empty() {
        f.to_string()
    } else {
        f.label().to_string()
    }
}

/// The extended SRG with default settings.
pub fn extended_srg(f: &Tf) -> Result<Region, LtiError> {
    Ok(extended_srg_with(f, &Settings::default())?.region)
}

pub fn extended_srg_with(f: &Tf, settings: &Settings) -> Result<ExtendedSrg, LtiError> {
    let grid = FrequencyGrid::from_settings(settings);
    if let Some(c) = f.as_constant() {
        return Ok(ExtendedSrg {
            region: Region::point(c),
            curve: nyquist_curve(f, &grid)?,
            n_p: 0,
            warnings: Vec::new(),
        });
    }
    if !f.is_proper() {
        // SRG'(f) = SRG'(1/f)^-1.
        let inner = extended_srg_with(&f.inverse()?, settings)?;
        return Ok(ExtendedSrg {
            region: mobius_inverse(&inner.region),
            curve: nyquist_curve(f, &grid)?,
            n_p: f.n_p()?,
            warnings: inner.warnings,
        });
    }
    let curve = nyquist_curve(f, &grid)?;
    let n_p = f.n_p()?;
    let has_axis_poles = !curve.indentations.is_empty();
    let clip = if has_axis_poles { FAR * 1e3 } else { f64::INFINITY };
    let mut finite: Vec<C64> = curve
        .samples
        .iter()
        .copied()
        .filter(|z| z.re.is_finite() && z.im.is_finite() && z.norm() <= clip)
        .collect();
    finite.extend(f.value_at_infinity().map(|v| C64::new(v, 0.0)));
    let hull = hconvex_hull(&finite)?;
    let contains_infinity = n_p > 0 || has_axis_poles;
    let loop_curve = Curve::closed(curve.samples.iter().copied().filter(|z| z.re.is_finite() && z.im.is_finite()).collect());

    if !contains_infinity {
        if let Some((alpha, beta)) = circle_fit(&finite) {
            let winding = winding_member(&loop_curve, n_p as i64);
            if winding(C64::new(0.5 * (alpha + beta), 0.0)) || hull.contains(C64::new(0.5 * (alpha + beta), 0.0)) {
                return Ok(ExtendedSrg { region: disk_region(alpha, beta)?, curve, n_p, warnings: Vec::new() });
            }
        }
    }

    let scan = scan_faces(&finite, &loop_curve, n_p as i64, &hull, settings.face_grid);
    let mut warnings = Vec::new();
    if scan.detached_component {
        warnings.push(format!(
            "the winding set of {} has a component disjoint from the real axis",
            label(f)
        ));
    }
    let structure = if scan.outside_hull || contains_infinity { Structure::Generic } else { Structure::HconvexHull };
    let mut curves = hull.curves().to_vec();
    curves.push(loop_curve.clone());
    let region = union_with_winding(curves, &hull, &loop_curve, n_p as i64, contains_infinity, structure);
    Ok(ExtendedSrg { region, curve, n_p, warnings })
}

/// `(alpha, beta)` when the samples trace a full circle centered on the real axis.
fn circle_fit(pts: &[C64]) -> Option<(f64, f64)> {
    if pts.len() < 16 {
        return None;
    }
    let x0 = pts.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let x1 = pts.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let (c, r) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
    if !(r > 0.0) {
        return None;
    }
    let tol = 1e-7 * (r + c.abs());
    if pts.iter().any(|z| ((z - c).norm() - r).abs() > tol) {
        return None;
    }
    let mut angles: Vec<f64> = pts.iter().map(|z| (z - c).arg()).collect();
    angles.sort_by(f64::total_cmp);
    let wrap = angles[0] + std::f64::consts::TAU - angles[angles.len() - 1];
    let max_gap = angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
    (max_gap < 0.1).then_some((x0, x1))
}

struct FaceScan {
    outside_hull: bool,
    detached_component: bool,
}

/// Classifies a grid over 1.5x the curve's bounding box: does the winding
/// set reach outside the hull, and does it have a component that never
/// touches the real axis?
fn scan_faces(pts: &[C64], loop_curve: &Curve, n_p: i64, hull: &Region, n: usize) -> FaceScan {
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for z in pts.iter().filter(|z| z.norm() <= FAR) {
        lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    if !lo.re.is_finite() {
        return FaceScan { outside_hull: false, detached_component: false };
    }
    let c = (lo + hi) * 0.5;
    let half = (hi - lo) * 0.75 + C64::new(1e-9, 1e-9);
    let n = n.max(8);
    let winding = winding_member(loop_curve, n_p);
    let at = |i: usize, j: usize| {
        C64::new(
            c.re - half.re + 2.0 * half.re * (i as f64 + 0.5) / n as f64,
            c.im - half.im + 2.0 * half.im * (j as f64 + 0.5) / n as f64,
        )
    };
    let mut cells = vec![false; n * n];
    let mut outside_hull = false;
    for j in 0..n {
        for i in 0..n {
            let z = at(i, j);
            if winding(z) {
                cells[j * n + i] = true;
                if !hull.contains(z) {
                    outside_hull = true;
                }
            }
        }
    }
    // Components of the winding set; a component touches the real axis when
    // it has cells on both sides of it or a cell within one row of it.
    let dy = 2.0 * half.im / n as f64;
    let mut seen = vec![false; n * n];
    let mut detached = false;
    for start in 0..n * n {
        if !cells[start] || seen[start] {
            continue;
        }
        let mut touches = false;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % n, k / n);
            if at(i, j).im.abs() <= dy {
                touches = true;
            }
            let nb = [
                (i > 0).then(|| k - 1),
                (i + 1 < n).then(|| k + 1),
                (j > 0).then(|| k - n),
                (j + 1 < n).then(|| k + n),
            ];
            for m in nb.into_iter().flatten() {
                if cells[m] && !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        detached |= !touches;
    }
    FaceScan { outside_hull, detached_component: detached }
}

/// The SRG of a stable LTI operator with default settings.
pub fn srg_lti(f: &Tf) -> Result<Region, LtiError> {
    srg_lti_with(f, &Settings::default())
}

pub fn srg_lti_with(f: &Tf, settings: &Settings) -> Result<Region, LtiError> {
    if let Some(c) = f.as_constant() {
        return Ok(Region::point(c));
    }
    if f.n_p()? > 0 || !f.imaginary_axis_poles()?.is_empty() {
        return Err(LtiError::NotStable(label(f)));
    }
    if !f.is_proper() {
        let inner = srg_lti_with(&f.inverse()?, settings)?;
        return Ok(mobius_inverse(&inner));
    }
    let curve = nyquist_curve(f, &FrequencyGrid::from_settings(settings))?;
    let mut pts = curve.samples;
    pts.extend(f.value_at_infinity().map(|v| C64::new(v, 0.0)));
    if let Some((alpha, beta)) = circle_fit(&pts) {
        return Ok(disk_region(alpha, beta)?);
    }
    Ok(hconvex_hull(&pts)?)
}

/// Peak gain `sup |f(jw)|` of a stable transfer function.
pub fn hinf_norm(f: &Tf) -> Result<f64, LtiError> {
    if let Some(c) = f.as_constant() {
        return Ok(c.abs());
    }
    if !f.is_stable()? {
        return Err(LtiError::NotStable(label(f)));
    }
    let Some(at_inf) = f.value_at_infinity() else {
        return Ok(f64::INFINITY);
    };
    let curve = nyquist_curve(f, &FrequencyGrid::default())?;
    let axis: Vec<(f64, f64)> = curve.axis_samples().filter(|(w, _)| *w >= 0.0).map(|(w, z)| (w, z.norm())).collect();
    let k = (0..axis.len()).max_by(|&a, &b| axis[a].1.total_cmp(&axis[b].1)).ok_or(LtiError::EmptyCurve)?;
    let mut a = axis[k.saturating_sub(1)].0;
    let mut b = axis[(k + 1).min(axis.len() - 1)].0;
    let g = |w: f64| f.freq(w).norm();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-12 * (1.0 + b.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = g(x1);
        }
    }
    Ok(axis[k].1.max(f1).max(f2).max(at_inf.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(s: &str) -> Tf {
        s.parse().unwrap()
    }

    #[test]
    fn first_order_lag_is_exact_disk() {
        let r = extended_srg(&tf("1/(s+1)")).unwrap();
        assert_eq!(r.structure(), Structure::ExactDisk { alpha: 0.0, beta: 1.0 });
        let r = srg_lti(&tf("1/(s+1)")).unwrap();
        assert!(r.as_disk().is_some());
    }

    #[test]
    fn pitfall_hull_and_hole() {
        let l = tf("-2/(s^2+s+1)");
        let plain = srg_lti(&l).unwrap();
        // The resonant peak at w^2 = 1/2 exceeds |L(0)| = 2.
        let peak = 2.0 / 0.75f64.sqrt();
        assert!((plain.radius() - peak).abs() < 1e-4, "{}", plain.radius());
        assert!(!plain.contains(C64::new(-1.0, 0.0)));
        let ext = extended_srg(&l).unwrap();
        assert!(ext.contains(C64::new(-1.0, 0.0)));
        assert!((ext.radius() - peak).abs() < 1e-4);
    }

    #[test]
    fn unstable_plant_contains_infinity() {
        let g = tf("(3)/((s-2)*(s/10+1))");
        let e = extended_srg(&g).unwrap();
        assert!(e.contains_infinity());
        assert!(srg_lti(&g).is_err());
    }

    #[test]
    fn integrator_is_right_half_plane() {
        let e = extended_srg(&tf("1/s")).unwrap();
        assert!(e.contains_infinity());
        assert!(e.contains(C64::new(3.0, -2.0)));
        assert!(!e.contains(C64::new(-0.5, 0.1)));
    }

    #[test]
    fn hinf_values() {
        assert!((hinf_norm(&tf("1/(s+1)")).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(hinf_norm(&Tf::constant(-3.0)).unwrap(), 3.0);
        // 2/(s^2+s+1): peak 2/sqrt(1 - 1/4) at w^2 = 1/2.
        let peak = 2.0 / (0.75f64).sqrt();
        assert!((hinf_norm(&tf("2/(s^2+s+1)")).unwrap() - peak).abs() < 1e-9);
        assert!((srg_lti(&tf("2/(s^2+s+1)")).unwrap().radius() - peak).abs() < 1e-3 * peak);
    }

    #[test]
    fn improper_inverse_round_trip() {
        let e = extended_srg(&tf("s+1")).unwrap();
        // 1/(s+1) is D_[0,1], so s+1 is its inverse: Re z >= 1, unbounded.
        assert!(e.contains_infinity());
        assert!(e.contains(C64::new(1.5, 4.0)));
        assert!(!e.contains(C64::new(0.5, 0.0)));
    }
}

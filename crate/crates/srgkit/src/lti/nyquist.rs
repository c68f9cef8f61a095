//! Nyquist curves along the indented D-contour and winding numbers.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write;

use super::LtiError;
use crate::settings::{Settings, POLE_CLASS_TOL};
use crate::{Tf, C64};

/// A point of the D-contour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContourPoint {
    /// `s = j w`.
    Axis(f64),
    /// `s = j center + rho e^{j theta}`, `theta` in `[-pi/2, pi/2]`.
    Indent { center: f64, theta: f64 },
    /// `s = R e^{j phi}`, `phi` running from `pi/2` down to `-pi/2`.
    Arc(f64),
}

/// Frequency grid and contour parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub indent_radius: f64,
    pub contour_radius: f64,
    pub refine_fraction: f64,
    pub max_points: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self::from_settings(&Settings::default())
    }
}

impl FrequencyGrid {
    pub fn from_settings(s: &Settings) -> Self {
        FrequencyGrid {
            omega_min: s.omega_min,
            omega_max: s.omega_max,
            points: s.omega_points,
            indent_radius: s.indent_radius,
            contour_radius: s.contour_radius,
            refine_fraction: s.refine_fraction,
            max_points: s.max_curve_points,
        }
    }

    fn s(&self, p: ContourPoint) -> C64 {
        match p {
            ContourPoint::Axis(w) => C64::new(0.0, w),
            ContourPoint::Indent { center, theta } => {
                C64::new(0.0, center) + C64::from_polar(self.indent_radius, theta)
            }
            ContourPoint::Arc(phi) => C64::from_polar(self.contour_radius, phi),
        }
    }
}

/// Image of the D-contour under a transfer function.
#[derive(Clone, Debug, PartialEq)]
pub struct NyquistCurve {
    pub samples: Vec<C64>,
    /// `Im s` of each contour point.
    pub frequencies: Vec<f64>,
    pub contour: Vec<ContourPoint>,
    /// Imaginary parts of the imaginary-axis poles indented around.
    pub indentations: Vec<f64>,
    pub closed: bool,
}

impl NyquistCurve {
    /// `omega,re,im` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,re,im\n");
        for (w, z) in self.frequencies.iter().zip(&self.samples) {
            let _ = writeln!(s, "{w:.12e},{:.12e},{:.12e}", z.re, z.im);
        }
        s
    }

    /// Samples on the imaginary axis only (`Axis` contour points).
    pub fn axis_samples(&self) -> impl Iterator<Item = (f64, C64)> + '_ {
        self.contour.iter().zip(&self.samples).filter_map(|(p, &z)| match p {
            ContourPoint::Axis(w) => Some((*w, z)),
            _ => None,
        })
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |k| (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp())
}

/// Sorted, deduplicated imaginary parts of imaginary-axis poles.
fn axis_pole_freqs(f: &Tf) -> Result<Vec<f64>, LtiError> {
    let mut v: Vec<f64> = f.imaginary_axis_poles()?.iter().map(|p| p.im).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= POLE_CLASS_TOL * (1.0 + b.abs()));
    Ok(v)
}

/// Nyquist curve of `f` along the D-contour, traversed from `-jR` to `jR`
/// and back along the right half-plane arc.
pub fn nyquist_curve(f: &Tf, grid: &FrequencyGrid) -> Result<NyquistCurve, LtiError> {
    if let Some(c) = f.as_constant() {
        return Ok(NyquistCurve {
            samples: vec![C64::new(c, 0.0)],
            frequencies: vec![0.0],
            contour: vec![ContourPoint::Axis(0.0)],
            indentations: Vec::new(),
            closed: true,
        });
    }
    let poles = f.poles()?;
    let zeros = f.zeros()?;
    let axis = axis_pole_freqs(f)?;
    let rho = grid.indent_radius;
    let big = grid.contour_radius;
    let mags: Vec<f64> = poles.iter().chain(&zeros).map(|z| z.norm()).filter(|&m| m > 0.0).collect();
    let lo = mags.iter().fold(grid.omega_min, |a, &m| a.min(0.1 * m));
    let hi = mags.iter().fold(grid.omega_max, |a, &m| a.max(10.0 * m)).min(big);
    let mut pos: Vec<f64> = logspace(lo, hi, grid.points).collect();
    if hi < big {
        pos.extend(logspace(hi, big, 60));
    }
    pos.extend(poles.iter().chain(&zeros).flat_map(|z| [z.im.abs(), z.norm()]));
    let mut ws: Vec<f64> = pos.iter().flat_map(|&w| [w, -w]).filter(|w| w.abs() <= big).collect();
    ws.push(0.0);
    ws.push(big);
    ws.push(-big);
    // Offsets approaching each indentation.
    for &w0 in &axis {
        for d in logspace(rho * 1.5, (0.1 * lo).max(rho * 10.0), 40) {
            ws.push(w0 - d);
            ws.push(w0 + d);
        }
    }
    ws.retain(|w| axis.iter().all(|&w0| (w - w0).abs() > rho * 1.0001));
    ws.sort_by(f64::total_cmp);
    ws.dedup();

    let mut contour: Vec<ContourPoint> = Vec::with_capacity(ws.len() + 64 + 33 * axis.len());
    let mut next_pole = 0;
    for &w in &ws {
        while next_pole < axis.len() && axis[next_pole] < w {
            push_indent(&mut contour, axis[next_pole]);
            next_pole += 1;
        }
        contour.push(ContourPoint::Axis(w));
    }
    while next_pole < axis.len() {
        push_indent(&mut contour, axis[next_pole]);
        next_pole += 1;
    }
    let n_arc = 64;
    for k in 1..n_arc {
        contour.push(ContourPoint::Arc(FRAC_PI_2 - PI * k as f64 / n_arc as f64));
    }

    let mut samples: Vec<C64> = contour.iter().map(|&p| f.eval(grid.s(p))).collect();
    refine(f, grid, &axis, &mut contour, &mut samples);
    let frequencies = contour.iter().map(|&p| grid.s(p).im).collect();
    Ok(NyquistCurve { samples, frequencies, contour, indentations: axis, closed: true })
}

fn push_indent(contour: &mut Vec<ContourPoint>, center: f64) {
    let n = 33;
    for k in 0..n {
        let theta = -FRAC_PI_2 + PI * k as f64 / (n - 1) as f64;
        contour.push(ContourPoint::Indent { center, theta });
    }
}

/// Contour parameter between two neighbouring points of the same kind.
fn midpoint(a: ContourPoint, b: ContourPoint, axis: &[f64]) -> Option<ContourPoint> {
    match (a, b) {
        (ContourPoint::Axis(x), ContourPoint::Axis(y)) => {
            let m = 0.5 * (x + y);
            let reference = axis
                .iter()
                .copied()
                .chain(std::iter::once(0.0))
                .min_by(|p, q| (p - m).abs().total_cmp(&(q - m).abs()))
                .unwrap_or(0.0);
            let (dx, dy) = (x - reference, y - reference);
            if dx * dy > 0.0 {
                Some(ContourPoint::Axis(reference + dx.signum() * (dx * dy).sqrt()))
            } else {
                Some(ContourPoint::Axis(m))
            }
        }
        (ContourPoint::Indent { center: c1, theta: t1 }, ContourPoint::Indent { center: c2, theta: t2 }) if c1 == c2 => {
            Some(ContourPoint::Indent { center: c1, theta: 0.5 * (t1 + t2) })
        }
        (ContourPoint::Arc(p1), ContourPoint::Arc(p2)) => Some(ContourPoint::Arc(0.5 * (p1 + p2))),
        _ => None,
    }
}

/// Bisects contour intervals whose images are far apart.
fn refine(f: &Tf, grid: &FrequencyGrid, axis: &[f64], contour: &mut Vec<ContourPoint>, samples: &mut Vec<C64>) {
    for _pass in 0..16 {
        let mut mags: Vec<f64> = samples.iter().map(|z| z.norm()).filter(|m| m.is_finite()).collect();
        if mags.is_empty() {
            return;
        }
        mags.sort_by(f64::total_cmp);
        let median = mags[mags.len() / 2];
        let core_cap = 10.0 * median.max(1e-300);
        let core = |z: C64| z.norm() <= core_cap;
        let (mut lo, mut hi) = (C64::new(f64::INFINITY, f64::INFINITY), C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for &z in samples.iter().filter(|&&z| core(z)) {
            lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let diam = (hi - lo).norm();
        let thr = grid.refine_fraction * diam.max(1e-12 * (1.0 + median));
        let n = samples.len();
        let mut new_contour = Vec::with_capacity(n * 2);
        let mut new_samples = Vec::with_capacity(n * 2);
        let mut added = 0;
        for i in 0..n {
            new_contour.push(contour[i]);
            new_samples.push(samples[i]);
            if i + 1 == n || n + added >= grid.max_points {
                continue;
            }
            let (za, zb) = (samples[i], samples[i + 1]);
            let gap = (zb - za).norm();
            let need = if core(za) && core(zb) { gap > thr } else { gap > 0.1 * za.norm().min(zb.norm()) };
            if !need {
                continue;
            }
            if let Some(m) = midpoint(contour[i], contour[i + 1], axis) {
                if m != contour[i] && m != contour[i + 1] {
                    new_contour.push(m);
                    new_samples.push(f.eval(grid.s(m)));
                    added += 1;
                }
            }
        }
        *contour = new_contour;
        *samples = new_samples;
        if added == 0 {
            return;
        }
    }
}

/// Clockwise winding number of the closed curve around `z`.
pub fn winding_number(c: &NyquistCurve, z: C64) -> Result<i64, LtiError> {
    winding_number_with(c, z, Settings::default().winding_frac_tol)
}

pub fn winding_number_with(c: &NyquistCurve, z: C64, frac_tol: f64) -> Result<i64, LtiError> {
    let n = c.samples.len();
    if n == 0 {
        return Err(LtiError::EmptyCurve);
    }
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (c.samples[i] - z, c.samples[(i + 1) % n] - z);
        if a == C64::new(0.0, 0.0) {
            return Err(LtiError::IllConditionedWinding { point: fmt_c(z), frac: 0.5 });
        }
        if !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
            continue;
        }
        total += (b / a).arg();
    }
    let w = -total / TAU;
    let frac = (w - w.round()).abs();
    if frac > frac_tol {
        return Err(LtiError::IllConditionedWinding { point: fmt_c(z), frac });
    }
    Ok(w.round() as i64)
}

fn fmt_c(z: C64) -> String {
    format!("{}{:+}j", z.re, z.im)
}

/// Distance from `z` to the closed polyline of samples.
pub(crate) fn curve_distance(c: &NyquistCurve, z: C64) -> f64 {
    let n = c.samples.len();
    (0..n)
        .map(|i| {
            let (a, b) = (c.samples[i], c.samples[(i + 1) % n]);
            let d = b - a;
            let l2 = d.norm_sqr();
            let t = if l2 > 0.0 { (((z - a) * d.conj()).re / l2).clamp(0.0, 1.0) } else { 0.0 };
            (a + d * t - z).norm()
        })
        .filter(|d| d.is_finite())
        .fold(f64::INFINITY, f64::min)
}

/// Nyquist criterion data: `n_z = n_n + n_p` closed-loop unstable poles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NyquistCriterion {
    pub n_p: i64,
    pub n_n: i64,
    pub n_z: i64,
    pub stable: bool,
}

/// Applies the Nyquist criterion to the loop `L` in negative unity feedback.
pub fn nyquist_criterion(l: &Tf) -> Result<NyquistCriterion, LtiError> {
    nyquist_criterion_with(l, &Settings::default())
}

pub fn nyquist_criterion_with(l: &Tf, settings: &Settings) -> Result<NyquistCriterion, LtiError> {
    let curve = nyquist_curve(l, &FrequencyGrid::from_settings(settings))?;
    let minus_one = C64::new(-1.0, 0.0);
    if curve_distance(&curve, minus_one) <= 1e-9 {
        return Err(LtiError::MarginalStability);
    }
    let n_p = l.n_p()? as i64;
    let n_n = winding_number_with(&curve, minus_one, settings.winding_frac_tol)?;
    let n_z = n_n + n_p;
    Ok(NyquistCriterion { n_p, n_n, n_z, stable: n_z == 0 })
}

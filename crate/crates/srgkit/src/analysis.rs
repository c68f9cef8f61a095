//! Closed-form analyses of Lur'e-type loops, circle criteria, the gain search
//! for linearization, and the Duffing amplitude bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{self, CalculusError, Mode, SrgValue};
use crate::geom::{affine_region, mobius_inverse, scale_region, shift_region, GeomError, Region};
use crate::lti::{extended_srg_with, nyquist_curve, winding_number_with, FrequencyGrid, LtiError};
use crate::nonlin::{admissible_kappa, srg_static, NonlinError, Nonlinearity};
use crate::{Settings, Tf, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    StableBounded,
    NoBound,
    Inconclusive,
    InconclusiveUnstableLinearization,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::StableBounded => "STABLE_BOUNDED",
            Verdict::NoBound => "NO_BOUND",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::InconclusiveUnstableLinearization => "INCONCLUSIVE_UNSTABLE_LINEARIZATION",
        }
    }

    /// Process exit status used by the command line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::StableBounded => 0,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether a bound holds for all inputs or only on the operator's domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DomainQualifier {
    Full,
    DomOnly,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{what}: {source}")]
    Lti { what: String, source: LtiError },
    #[error(transparent)]
    Nonlin(#[from] NonlinError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("gain {0} is outside the real slice of the nonlinearity's bound")]
    KappaOutside(f64),
    #[error("need k1 < k2, got [{0}, {1}]")]
    BadSector(f64, f64),
    #[error("the controller is zero and cannot be inverted")]
    ZeroController,
    #[error("neither operand of the feedback condition has the chord property")]
    NotChordAdmissible,
    #[error("the bound on `{0}` is unbounded")]
    UnboundedComposite(String),
    #[error("no admissible gain in the grid")]
    EmptyGrid,
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("no sign change of the turning-point residual on [0, {0}]")]
    NoSignChange(f64),
    #[error("the trajectory did not reach a turning point")]
    NonConvergence,
}

fn lti(what: &str) -> impl FnOnce(LtiError) -> AnalysisError + '_ {
    move |source| AnalysisError::Lti { what: what.to_string(), source }
}

/// Result of one of the closed-form feedback conditions.
#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    /// Separation of the two regions in the feedback condition.
    pub r_m: f64,
    /// `1 / r_m`, infinite when there is no separation.
    pub gain_bound: f64,
    pub mode: Mode,
    pub verdict: Verdict,
    pub qualifier: DomainQualifier,
    #[serde(skip)]
    pub regions: Vec<(String, Region)>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    fn from_margin(r_m: f64, mode: Mode, regions: Vec<(String, Region)>, notes: Vec<String>) -> Self {
        let bounded = r_m > 0.0 && r_m.is_finite();
        AnalysisReport {
            r_m,
            gain_bound: if bounded { 1.0 / r_m } else { f64::INFINITY },
            mode,
            verdict: if bounded { Verdict::StableBounded } else { Verdict::NoBound },
            qualifier: DomainQualifier::Full,
            regions,
            notes,
        }
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }
}

fn ext(f: &Tf, what: &str, settings: &Settings) -> Result<Region, AnalysisError> {
    Ok(extended_srg_with(f, settings).map_err(lti(what))?.region)
}

fn negate(r: &Region) -> Region {
    scale_region(-1.0, r).expect("nonzero scale")
}

/// Lur'e loop `y = G(r - phi(y))`: separation of `SRG'(G)^-1` from `-SRG(phi)`.
pub fn lure(g: &Tf, phi: &Nonlinearity, mode: Mode) -> Result<AnalysisReport, AnalysisError> {
    lure_with(g, phi, mode, &Settings::default())
}

pub fn lure_with(g: &Tf, phi: &Nonlinearity, mode: Mode, settings: &Settings) -> Result<AnalysisReport, AnalysisError> {
    let g_inv = mobius_inverse(&ext(g, "G", settings)?);
    let nl = srg_static(phi, mode)?;
    if !nl.chord_flag().holds() && !g_inv.chord_flag().holds() {
        return Err(AnalysisError::NotChordAdmissible);
    }
    let neg = negate(&nl);
    let r_m = g_inv.distance(&neg);
    Ok(AnalysisReport::from_margin(r_m, mode, vec![("SRG'(G)^-1".into(), g_inv), ("-SRG(phi)".into(), neg)], Vec::new()))
}

/// Which of the two single-nonlinearity controlled loops to analyse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalCase {
    /// Plant `(G^-1 + phi)^-1` in unity feedback with the controller `K`.
    ControlledLure,
    /// Controller `(K^-1 + phi)^-1` in unity feedback with the plant `G`.
    LureController,
}

/// Lur'e plant `(G^-1 + phi)^-1` under the controller `K`, with the
/// nonlinearity written as `kappa + (phi - kappa)`.
pub fn controlled_lure(g: &Tf, k: &Tf, phi: &Nonlinearity, kappa: f64, mode: Mode) -> Result<AnalysisReport, AnalysisError> {
    canonical(CanonicalCase::ControlledLure, g, k, phi, kappa, mode, &Settings::default())
}

/// Lur'e controller `(K^-1 + phi)^-1` driving the plant `G`; the mirror of
/// [`controlled_lure`].
pub fn lure_controller(g: &Tf, k: &Tf, phi: &Nonlinearity, kappa: f64, mode: Mode) -> Result<AnalysisReport, AnalysisError> {
    canonical(CanonicalCase::LureController, g, k, phi, kappa, mode, &Settings::default())
}

pub fn canonical(
    case: CanonicalCase,
    g: &Tf,
    k: &Tf,
    phi: &Nonlinearity,
    kappa: f64,
    mode: Mode,
    settings: &Settings,
) -> Result<AnalysisReport, AnalysisError> {
    if !admissible_kappa(phi, mode, kappa) {
        return Err(AnalysisError::KappaOutside(kappa));
    }
    // `inner` is the block whose inverse multiplies the nonlinearity, `outer`
    // the one closed around the gain `kappa`.
    let (inner, outer, name, composite) = match case {
        CanonicalCase::ControlledLure => (k, g, "K", "K^-1 (phi - kappa)"),
        CanonicalCase::LureController => (g, k, "G", "(phi - kappa) G^-1"),
    };
    if inner.is_zero() {
        return Err(AnalysisError::ZeroController);
    }
    let loop_tf = g.mul(k).map_err(lti("G K"))?;
    let damped = outer.scale(kappa).add_constant(1.0).map_err(lti("1 + kappa"))?;
    let l0 = loop_tf.div(&damped).map_err(lti("L0"))?;

    let l0_inv = mobius_inverse(&ext(&l0, "L0", settings)?);
    let lhs = shift_region(&l0_inv);
    let inner_inv = SrgValue::lti(mobius_inverse(&ext(inner, name, settings)?), mode, format!("{name}^-1"));
    let shifted = SrgValue::new(affine_region(&srg_static(phi, mode)?, 1.0, -kappa)?, mode, "phi - kappa");
    let b = if shifted.region.as_point() == Some(0.0) {
        // The linear part absorbed all of phi; the composite maps everything to 0.
        SrgValue::new(Region::point(0.0), mode, composite)
    } else {
        let prod = match case {
            CanonicalCase::ControlledLure => calculus::srg_prod_with(&inner_inv, &shifted, settings),
            CanonicalCase::LureController => calculus::srg_prod_with(&shifted, &inner_inv, settings),
        };
        match prod {
            Err(CalculusError::Geom { source: GeomError::IndeterminateProduct, .. }) => {
                return Err(AnalysisError::UnboundedComposite(composite.into()))
            }
            r => r?,
        }
    };
    if !b.radius().is_finite() {
        return Err(AnalysisError::UnboundedComposite(composite.into()));
    }
    let neg_b = negate(&b.region);
    let r_m = lhs.distance(&neg_b);

    let mut notes = vec![format!("kappa = {kappa}")];
    let mut regions = vec![
        ("1 + SRG'(L0)^-1".to_string(), lhs),
        (format!("-SRG({composite})"), neg_b),
    ];
    let sensitivity = calculus::srg_sum_with(&SrgValue::lti(l0_inv, mode, "L0^-1"), &b, settings)
        .and_then(|v| calculus::srg_inv(&v))
        .map(|v| calculus::srg_shift(&v))
        .and_then(|v| calculus::srg_inv(&v));
    match sensitivity {
        Ok(v) => {
            notes.push(format!("sensitivity gain bound {}", v.radius()));
            regions.push(("sensitivity".into(), v.region));
        }
        Err(e) => notes.push(format!("sensitivity bound unavailable: {e}")),
    }
    Ok(AnalysisReport::from_margin(r_m, mode, regions, notes))
}

/// Controlled Lur'e plant checked as a plain feedback of `G K` with
/// `K^-1 phi`, without splitting off a linear part: separation of
/// `-SRG(K^-1 phi)` from `SRG'((G K)^-1)`.
pub fn feedback_margin(g: &Tf, k: &Tf, phi: &Nonlinearity, mode: Mode, settings: &Settings) -> Result<AnalysisReport, AnalysisError> {
    if k.is_zero() {
        return Err(AnalysisError::ZeroController);
    }
    let gk_inv = mobius_inverse(&ext(&g.mul(k).map_err(lti("G K"))?, "G K", settings)?);
    let k_inv = SrgValue::lti(mobius_inverse(&ext(k, "K", settings)?), mode, "K^-1");
    let nl = SrgValue::new(srg_static(phi, mode)?, mode, "phi");
    let b = calculus::srg_prod_with(&k_inv, &nl, settings)?;
    let neg_b = negate(&b.region);
    let r_m = neg_b.distance(&gk_inv);
    Ok(AnalysisReport::from_margin(r_m, mode, vec![("SRG'((GK)^-1)".into(), gk_inv), ("-SRG(K^-1 phi)".into(), neg_b)], Vec::new()))
}

/// SRG form of the circle criterion. The verdict uses the separation of
/// `SRG'(G)` from `-SG(phi)^-1`; the margin comes from the inverse picture.
pub fn generalized_circle(g: &Tf, phi: &Nonlinearity, mode: Mode) -> Result<AnalysisReport, AnalysisError> {
    generalized_circle_with(g, phi, mode, &Settings::default())
}

pub fn generalized_circle_with(g: &Tf, phi: &Nonlinearity, mode: Mode, settings: &Settings) -> Result<AnalysisReport, AnalysisError> {
    let g_ext = ext(g, "G", settings)?;
    let nl = srg_static(phi, mode)?;
    let g_inv = mobius_inverse(&g_ext);
    if !nl.chord_flag().holds() && !g_inv.chord_flag().holds() {
        return Err(AnalysisError::NotChordAdmissible);
    }
    let neg_nl_inv = negate(&mobius_inverse(&nl));
    let separated = g_ext.distance(&neg_nl_inv) > 0.0;
    let neg_nl = negate(&nl);
    let r_m = g_inv.distance(&neg_nl);
    let mut notes = Vec::new();
    if separated != (r_m > 0.0) {
        notes.push(format!("inverse form says {separated}, distance form gives r_m = {r_m}"));
    }
    let mut report = AnalysisReport::from_margin(r_m, mode, vec![("SRG'(G)".into(), g_ext), ("-SRG(phi)^-1".into(), neg_nl_inv)], notes);
    report.verdict = if separated { Verdict::StableBounded } else { Verdict::NoBound };
    if separated && !(r_m > 0.0) {
        report.verdict = Verdict::Inconclusive;
    }
    Ok(report)
}

/// Outcome of the classical circle criterion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleVerdict {
    pub stable: bool,
    /// 1: `0 < k1 < k2`, 2: `k1 = 0`, 3: `k1 < 0 < k2` (after mirroring negative sectors).
    pub case: u8,
    pub detail: String,
}

/// Classical circle criterion for the sector `[k1, k2]`.
pub fn classical_circle(g: &Tf, k1: f64, k2: f64) -> Result<CircleVerdict, AnalysisError> {
    classical_circle_with(g, k1, k2, &Settings::default())
}

pub fn classical_circle_with(g: &Tf, k1: f64, k2: f64, settings: &Settings) -> Result<CircleVerdict, AnalysisError> {
    if !(k1 < k2) {
        return Err(AnalysisError::BadSector(k1, k2));
    }
    // A sector in the left half-line is the right one for -G.
    if k2 <= 0.0 {
        return classical_circle_with(&g.scale(-1.0), -k2, -k1, settings);
    }
    let curve = nyquist_curve(g, &FrequencyGrid::from_settings(settings)).map_err(lti("G"))?;
    let n_p = g.n_p().map_err(lti("G"))? as i64;
    let axis_poles = !g.imaginary_axis_poles().map_err(lti("G"))?.is_empty();
    let pts = || curve.samples.iter().copied().filter(|z| z.re.is_finite() && z.im.is_finite());
    let done = |stable: bool, case: u8, detail: String| Ok(CircleVerdict { stable, case, detail });

    if k1 > 0.0 {
        let (a, b) = (-1.0 / k1, -1.0 / k2);
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let clearance = pts().map(|z| (z - c).norm() - r).fold(f64::INFINITY, f64::min);
        if !(clearance > 0.0) || axis_poles {
            return done(false, 1, format!("curve meets the critical disk (clearance {clearance:.3e})"));
        }
        let w = winding_number_with(&curve, C64::new(c, 0.0), settings.winding_frac_tol).map_err(lti("G"))?;
        return done(w == -n_p, 1, format!("{} counterclockwise encirclements, {n_p} unstable poles", -w));
    }
    if n_p > 0 || axis_poles {
        return done(false, if k1 == 0.0 { 2 } else { 3 }, format!("G is not Hurwitz ({n_p} unstable poles)"));
    }
    if k1 == 0.0 {
        let min_re = pts().map(|z| z.re).fold(f64::INFINITY, f64::min);
        return done(min_re > -1.0 / k2, 2, format!("min Re G = {min_re:.6}"));
    }
    let (a, b) = (-1.0 / k2, -1.0 / k1);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let reach = pts().map(|z| (z - c).norm()).fold(0.0, f64::max);
    done(reach < r, 3, format!("curve reaches {reach:.6} from the disk center, radius {r:.6}"))
}

/// Best linearization gain on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaSearch {
    pub kappa: f64,
    pub r_m: f64,
    /// Every admissible grid point with its margin.
    pub evaluated: Vec<(f64, f64)>,
}

/// Maximizes the margin of `case` over `n` gains in `[lo, hi]` (plus the
/// sector center), skipping gains outside the nonlinearity's bound. Ties go
/// to the gain closest to the center.
#[allow(clippy::too_many_arguments)]
pub fn kappa_search(
    case: CanonicalCase,
    g: &Tf,
    k: &Tf,
    phi: &Nonlinearity,
    mode: Mode,
    grid: (f64, f64, usize),
    settings: &Settings,
) -> Result<KappaSearch, AnalysisError> {
    let (lo, hi, n) = grid;
    let center = phi.default_kappa(mode);
    let mut candidates: Vec<f64> = (0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect();
    candidates.push(center);
    candidates.retain(|&kp| admissible_kappa(phi, mode, kp));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    if candidates.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    let mut evaluated = Vec::with_capacity(candidates.len());
    for kp in candidates {
        let r = match canonical(case, g, k, phi, kp, mode, settings) {
            Ok(rep) => rep.r_m,
            Err(AnalysisError::UnboundedComposite(_) | AnalysisError::Lti { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        evaluated.push((kp, r));
    }
    let &(kappa, r_m) = evaluated
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| (b.0 - center).abs().total_cmp(&(a.0 - center).abs())))
        .expect("non-empty");
    Ok(KappaSearch { kappa, r_m, evaluated })
}

/// Controlled Duffing oscillator `y'' + (delta + kd) y' + (alpha + kp) y + beta y^3 = d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub kp: f64,
    pub kd: f64,
    pub d_max: f64,
}

impl DuffingParams {
    fn stiffness(&self) -> f64 {
        self.alpha + self.kp
    }

    fn damping(&self) -> f64 {
        self.delta + self.kd
    }

    fn accel(&self, y: f64, v: f64) -> f64 {
        -self.stiffness() * y - self.beta * y.powi(3) - self.damping() * v + self.d_max
    }

    /// `H = v^2/2 + a y^2/2 + beta y^4/4` with the closed-loop stiffness `a`.
    pub fn energy(&self, y: f64, v: f64) -> f64 {
        0.5 * v * v + 0.5 * self.stiffness() * y * y + 0.25 * self.beta * y.powi(4)
    }
}

const DUFFING_STEP: f64 = 1e-4;
const DUFFING_BRACKET: f64 = 10.0;
const DUFFING_TOL: f64 = 1e-4;
const DUFFING_T_MAX: f64 = 1e3;

/// One swing from rest at `(-m, 0)` under constant forcing `d_max`, up to
/// the next turning point. Returns the turning position and the sampled
/// `(t, y, v)` path when `record` is set.
pub(crate) fn half_swing(p: &DuffingParams, m: f64, record: bool) -> Result<(f64, Vec<[f64; 3]>), AnalysisError> {
    let h = DUFFING_STEP;
    let f = |y: f64, v: f64| (v, p.accel(y, v));
    let (mut y, mut v, mut t) = (-m, 0.0, 0.0);
    let mut path = Vec::new();
    if record {
        path.push([t, y, v]);
    }
    if p.accel(y, v) <= 0.0 {
        return Ok((y, path));
    }
    let mut moving = false;
    while t < DUFFING_T_MAX {
        let (k1y, k1v) = f(y, v);
        let (k2y, k2v) = f(y + 0.5 * h * k1y, v + 0.5 * h * k1v);
        let (k3y, k3v) = f(y + 0.5 * h * k2y, v + 0.5 * h * k2v);
        let (k4y, k4v) = f(y + h * k3y, v + h * k3v);
        let ny = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        let nv = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t += h;
        if record {
            path.push([t, ny, nv]);
        }
        if nv > 0.0 {
            moving = true;
        }
        if moving && nv <= 0.0 {
            let s = v / (v - nv);
            return Ok((y + s * (ny - y), path));
        }
        if moving && nv.abs() < 1e-9 {
            return Ok((ny, path));
        }
        y = ny;
        v = nv;
    }
    Err(AnalysisError::NonConvergence)
}

/// Largest amplitude `M` such that a swing from `-M` at rest turns at `M`:
/// an upper bound on `sup |y|` for disturbances bounded by `d_max`.
pub fn duffing_amplitude_bound(alpha: f64, beta: f64, delta: f64, kp: f64, kd: f64, d_max: f64) -> Result<f64, AnalysisError> {
    let p = DuffingParams { alpha, beta, delta, kp, kd, d_max };
    if !(p.stiffness() > 0.0 && p.damping() > 0.0 && beta > 0.0 && d_max >= 0.0) {
        return Err(AnalysisError::InvalidParameters(format!(
            "need alpha + kp > 0, delta + kd > 0, beta > 0, d_max >= 0; got {p:?}"
        )));
    }
    let residual = |m: f64| half_swing(&p, m, false).map(|(turn, _)| turn - m);
    let f0 = residual(0.0)?;
    if f0 <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, DUFFING_BRACKET);
    if residual(hi)? > 0.0 {
        return Err(AnalysisError::NoSignChange(hi));
    }
    while hi - lo > DUFFING_TOL {
        let mid = 0.5 * (lo + hi);
        if residual(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(s: &str) -> Tf {
        s.parse().unwrap()
    }

    #[test]
    fn zero_nonlinearity_gives_hinf_reciprocal() {
        let g = tf("2/(s^2+s+1)");
        let rep = lure(&g, &Nonlinearity::linear(0.0), Mode::Incremental).unwrap();
        let h = crate::lti::hinf_norm(&g).unwrap();
        assert!((rep.r_m - 1.0 / h).abs() < 2e-3 / h, "{} vs {}", rep.r_m, 1.0 / h);
        assert_eq!(rep.verdict, Verdict::StableBounded);
        assert!((rep.gain_bound * rep.r_m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duffing_lure_margin() {
        let g = tf("1/(s^2+0.3s-1)");
        let k = tf("5 + 5s/(s/100+1)");
        let gt = g.div(&g.mul(&k).unwrap().add_constant(1.0).unwrap()).unwrap();
        let phi = Nonlinearity::cubic(1.0, Some(0.25)).unwrap();
        let rep = lure(&gt, &phi, Mode::NonIncremental).unwrap();
        assert!((rep.r_m - 4.0).abs() < 0.2, "{}", rep.r_m);
        let wide = Nonlinearity::sector_class(0.0, 2.0).unwrap();
        let rep = lure(&gt, &wide, Mode::NonIncremental).unwrap();
        assert!((rep.gain_bound - 0.25).abs() < 0.0125, "{}", rep.gain_bound);
    }

    #[test]
    fn linear_phi_collapses_composite() {
        let g = tf("1/(s+1)");
        let k = tf("2");
        let rep = controlled_lure(&g, &k, &Nonlinearity::linear(0.5), 0.5, Mode::Incremental).unwrap();
        let b = rep.region("-SRG(K^-1 (phi - kappa))").unwrap();
        assert_eq!(b.as_point(), Some(0.0));
        // L0 = 2/(s + 1.5), so 1 + L0^-1 has real part >= 1.75.
        assert!((rep.r_m - 1.75).abs() < 1e-3, "{}", rep.r_m);
    }

    #[test]
    fn kappa_closes_around_the_plant() {
        // phi = kappa exactly: the loop is G K / (1 + kappa G) in negative feedback.
        let g = tf("1/(s-1)");
        let k = tf("(s+4)/(s+2)");
        let rep = controlled_lure(&g, &k, &Nonlinearity::linear(2.0), 2.0, Mode::Incremental).unwrap();
        let l0 = g.mul(&k).unwrap().div(&g.scale(2.0).add_constant(1.0).unwrap()).unwrap();
        let cl = l0.div(&l0.add_constant(1.0).unwrap()).unwrap();
        assert_eq!(rep.verdict == Verdict::StableBounded, cl.is_stable().unwrap());
        assert_eq!(rep.verdict, Verdict::StableBounded);
    }

    #[test]
    fn mirrored_cases_agree() {
        let g = tf("1/(s+1)");
        let k = tf("(s+3)/(s+2)");
        let phi = Nonlinearity::saturation(1.0);
        let a = controlled_lure(&g, &k, &phi, 0.5, Mode::Incremental).unwrap();
        let b = lure_controller(&k, &g, &phi, 0.5, Mode::Incremental).unwrap();
        assert!((a.r_m - b.r_m).abs() < 1e-9 * (1.0 + a.r_m), "{} vs {}", a.r_m, b.r_m);
    }

    #[test]
    fn controller_case_linear_loop_matches_nyquist() {
        let g = tf("1/(s+1)");
        let k = tf("4/(s+2)");
        let rep = lure_controller(&g, &k, &Nonlinearity::linear(0.0), 0.0, Mode::Incremental).unwrap();
        let ny = crate::lti::nyquist_criterion(&g.mul(&k).unwrap()).unwrap();
        assert_eq!(rep.verdict == Verdict::StableBounded, ny.stable);
    }

    #[test]
    fn kappa_outside_rejected() {
        let g = tf("1/(s+1)");
        let phi = Nonlinearity::saturation(1.0);
        assert!(matches!(controlled_lure(&g, &g, &phi, 2.0, Mode::Incremental), Err(AnalysisError::KappaOutside(_))));
        let e = kappa_search(CanonicalCase::ControlledLure, &g, &g, &Nonlinearity::linear(3.0), Mode::Incremental, (0.0, 1.0, 5), &Settings::default());
        assert!(e.is_ok(), "the center is always a candidate");
    }

    #[test]
    fn kappa_search_dominates_default() {
        let g = tf("1/(s+1)");
        let k = tf("(s+3)/(s+2)");
        let phi = Nonlinearity::saturation(1.0);
        let s = Settings::default();
        let best = kappa_search(CanonicalCase::ControlledLure, &g, &k, &phi, Mode::Incremental, (0.0, 1.0, 5), &s).unwrap();
        let default = controlled_lure(&g, &k, &phi, 0.5, Mode::Incremental).unwrap();
        assert!(best.r_m >= default.r_m - 1e-12);
        assert!(best.evaluated.iter().all(|&(kp, _)| (0.0..=1.0).contains(&kp)));

        let lin = Nonlinearity::linear(0.7);
        let best = kappa_search(CanonicalCase::ControlledLure, &g, &k, &lin, Mode::Incremental, (-1.0, 1.0, 9), &s).unwrap();
        assert_eq!(best.kappa, 0.7);
    }

    #[test]
    fn classical_cases() {
        let lag = tf("1/(s+1)");
        let v = classical_circle(&lag, 0.0, 1.0).unwrap();
        assert!(v.stable && v.case == 2);
        assert!(classical_circle(&lag, 1.0, 1.0).is_err());
        let v = classical_circle(&lag, -0.5, 0.5).unwrap();
        assert!(v.stable && v.case == 3);

        // Unstable plant stabilized by any gain in [1, 2]: the curve
        // encircles D[-1, -1/2] once counterclockwise.
        let g = tf("3/((s-2)(s/10+1))");
        let v = classical_circle(&g, 1.0, 2.0).unwrap();
        assert!(v.stable, "{}", v.detail);
        let cl = g.div(&g.scale(1.5).add_constant(1.0).unwrap()).unwrap();
        assert!(cl.is_stable().unwrap());

        let v = classical_circle(&tf("-2/(s^2+s+1)"), 0.0, 1.0).unwrap();
        assert!(!v.stable);
    }

    #[test]
    fn generalized_matches_classical_on_pitfall_plant() {
        let g = tf("-2/(s^2+s+1)");
        let phi = Nonlinearity::sector_class(0.0, 1.0).unwrap();
        let rep = generalized_circle(&g, &phi, Mode::NonIncremental).unwrap();
        assert_eq!(rep.verdict, Verdict::NoBound);
        let g = tf("1/(s+1)");
        let rep = generalized_circle(&g, &phi, Mode::NonIncremental).unwrap();
        assert_eq!(rep.verdict, Verdict::StableBounded);
    }

    #[test]
    fn constant_phi_reduces_to_nyquist() {
        for (g, stable) in [("1/(s+1)", true), ("-2/(s^2+s+1)", false), ("3/((s-2)(s/10+1))", true)] {
            let g = tf(g);
            let rep = generalized_circle(&g, &Nonlinearity::linear(1.0), Mode::Incremental).unwrap();
            assert_eq!(rep.verdict == Verdict::StableBounded, stable, "{g}");
        }
    }

    #[test]
    fn duffing_bound_value() {
        let m = duffing_amplitude_bound(-1.0, 1.0, 0.3, 5.0, 5.0, 1.0).unwrap();
        assert!((m - 0.25).abs() < 0.0125, "{m}");
        assert_eq!(duffing_amplitude_bound(-1.0, 1.0, 0.3, 5.0, 5.0, 0.0).unwrap(), 0.0);
        assert!(duffing_amplitude_bound(-6.0, 1.0, 0.3, 5.0, 5.0, 1.0).is_err());
    }

    #[test]
    fn duffing_bound_monotone() {
        let ms: Vec<f64> = [0.0, 0.25, 0.5, 1.0, 2.0]
            .iter()
            .map(|&d| duffing_amplitude_bound(-1.0, 1.0, 0.3, 5.0, 5.0, d).unwrap())
            .collect();
        assert!(ms.windows(2).all(|w| w[1] >= w[0] - 2.0 * DUFFING_TOL), "{ms:?}");
    }

    #[test]
    fn duffing_energy_balance() {
        let p = DuffingParams { alpha: -1.0, beta: 1.0, delta: 0.3, kp: 5.0, kd: 5.0, d_max: 1.0 };
        let m = 0.2;
        let (turn, path) = half_swing(&p, m, true).unwrap();
        let rate = |s: &[f64; 3]| -p.damping() * s[2] * s[2] + s[2] * p.d_max;
        let work: f64 = path.windows(2).map(|w| 0.5 * (w[1][0] - w[0][0]) * (rate(&w[0]) + rate(&w[1]))).sum();
        let dh = p.energy(turn, 0.0) - p.energy(-m, 0.0);
        assert!((work - dh).abs() < 0.01 * dh.abs(), "{work} vs {dh}");
    }
}

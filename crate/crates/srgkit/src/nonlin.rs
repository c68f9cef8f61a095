//! Static nonlinearities: sector data, disk bounds on their SRG / SG at zero,
//! inflation lifts and a small built-in library.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::calculus::Mode;
use crate::geom::{affine_region, disk_region, scale_region, GeomError, Region};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinError {
    #[error("{label}: no {which} sector declared")]
    MissingSector { label: String, which: &'static str },
    #[error("invalid sector [{lo}, {hi}]")]
    InvalidSector { lo: f64, hi: f64 },
    #[error("{0} is not inflatable")]
    NotInflatable(String),
    #[error("lift parameter {0} outside [0, 1]")]
    TauOutOfRange(f64),
    #[error("amplitude must be positive, got {0}")]
    InvalidAmplitude(f64),
    #[error("{label}: {msg}")]
    Invariant { label: String, msg: String },
    #[error("tabulated map needs at least two strictly increasing abscissae")]
    BadTable,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// A closed real interval `[lo, hi]` of slopes.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Sector {
    pub lo: f64,
    pub hi: f64,
}

impl Sector {
    pub fn new(lo: f64, hi: f64) -> Result<Self, NonlinError> {
        if lo <= hi && lo.is_finite() && hi.is_finite() {
            Ok(Sector { lo, hi })
        } else {
            Err(NonlinError::InvalidSector { lo, hi })
        }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, k: f64) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn within(&self, outer: &Sector) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }

    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// `D_[lo, hi]`.
    pub fn disk(&self) -> Region {
        disk_region(self.lo, self.hi).expect("validated sector")
    }

    /// Image under `k -> kappa + tau (k - kappa)`.
    fn lifted(&self, kappa: f64, tau: f64) -> Sector {
        Sector { lo: kappa + tau * (self.lo - kappa), hi: kappa + tau * (self.hi - kappa) }
    }
}

/// How a nonlinearity is deformed into a real gain.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiftKind {
    /// `x -> kappa x + tau (phi(x) - kappa x)`.
    Affine { kappa: f64 },
    /// `x -> tau phi(x)`.
    Scaling,
    /// User-supplied lift with no known formula; `lift_at` refuses it.
    Custom,
}

impl LiftKind {
    fn kappa(self) -> Option<f64> {
        match self {
            LiftKind::Affine { kappa } => Some(kappa),
            LiftKind::Scaling => Some(0.0),
            LiftKind::Custom => None,
        }
    }
}

type Map = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A memoryless SISO map `y(t) = phi(u(t))` with the metadata the SRG
/// calculus needs.
#[derive(Clone)]
pub struct Nonlinearity {
    map: Map,
    pub sector: Option<Sector>,
    pub incr_sector: Option<Sector>,
    pub lipschitz: f64,
    pub inflatable: bool,
    pub lift: LiftKind,
    pub label: String,
    /// Region overriding the sector disk for the SG at zero.
    pub sg0_region: Option<Region>,
    /// Region overriding the sector disk for the SRG.
    pub srg_region: Option<Region>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("label", &self.label)
            .field("sector", &self.sector)
            .field("incr_sector", &self.incr_sector)
            .field("lipschitz", &self.lipschitz)
            .field("inflatable", &self.inflatable)
            .field("lift", &self.lift)
            .finish()
    }
}

/// min over x of sin(x)/x, attained at the first positive root of tan x = x.
const SINC_MIN: f64 = -0.217_233_628_211_221_7;

impl Nonlinearity {
    /// A bare map with no sector data, not inflatable.
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Nonlinearity {
            map: Arc::new(f),
            sector: None,
            incr_sector: None,
            lipschitz: f64::INFINITY,
            inflatable: false,
            lift: LiftKind::Custom,
            label: label.into(),
            sg0_region: None,
            srg_region: None,
        }
    }

    /// Declares the non-incremental sector.
    pub fn with_sector(mut self, lo: f64, hi: f64) -> Result<Self, NonlinError> {
        self.sector = Some(Sector::new(lo, hi)?);
        Ok(self)
    }

    /// Declares the incremental sector; also tightens the Lipschitz constant.
    pub fn with_incr_sector(mut self, lo: f64, hi: f64) -> Result<Self, NonlinError> {
        let s = Sector::new(lo, hi)?;
        self.lipschitz = self.lipschitz.min(s.max_abs());
        self.incr_sector = Some(s);
        Ok(self)
    }

    pub fn with_lift(mut self, lift: LiftKind) -> Self {
        self.inflatable = lift != LiftKind::Custom;
        self.lift = lift;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Replaces the sector disks by explicit regions.
    pub fn with_regions(mut self, sg0: Option<Region>, srg: Option<Region>) -> Self {
        self.sg0_region = sg0;
        self.srg_region = srg;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.map)(x)
    }

    /// The sector governing `mode`.
    pub fn sector_for(&self, mode: Mode) -> Option<Sector> {
        match mode {
            Mode::Incremental => self.incr_sector,
            Mode::NonIncremental => self.sector.or(self.incr_sector),
        }
    }

    /// Real center of the governing sector disk, the default linearization gain.
    pub fn default_kappa(&self, mode: Mode) -> f64 {
        if let Some(s) = self.sector_for(mode) {
            return s.center();
        }
        let region = match mode {
            Mode::Incremental => self.srg_region.as_ref(),
            Mode::NonIncremental => self.sg0_region.as_ref().or(self.srg_region.as_ref()),
        };
        region
            .and_then(|r| r.bbox())
            .map(|(lo, hi)| 0.5 * (lo.re + hi.re))
            .filter(|k| k.is_finite())
            .unwrap_or(0.0)
    }

    /// Checks the standing assumptions: `phi(0) = 0`, sector inside the
    /// incremental sector, Lipschitz constant dominating the incremental slopes.
    pub fn check(&self) -> Result<(), NonlinError> {
        let bad = |msg: String| Err(NonlinError::Invariant { label: self.label.clone(), msg });
        let y0 = self.eval(0.0);
        if y0.abs() > 1e-12 {
            return bad(format!("phi(0) = {y0}, expected 0"));
        }
        if let (Some(s), Some(i)) = (self.sector, self.incr_sector) {
            if !s.within(&i) {
                return bad(format!("sector [{}, {}] not inside incremental sector [{}, {}]", s.lo, s.hi, i.lo, i.hi));
            }
        }
        if let Some(i) = self.incr_sector {
            if self.lipschitz < i.max_abs() * (1.0 - 1e-12) {
                return bad(format!("Lipschitz constant {} below {}", self.lipschitz, i.max_abs()));
            }
        }
        Ok(())
    }

    /// `x -> k x`.
    pub fn linear(k: f64) -> Self {
        Nonlinearity::new(format!("{k}*x"), move |x| k * x)
            .with_sector(k, k)
            .and_then(|n| n.with_incr_sector(k, k))
            .expect("finite gain")
            .with_lift(LiftKind::Affine { kappa: k })
    }

    /// A representative of the sector class `[lo, hi]` (the center gain),
    /// carrying both sectors. Useful when only the bound matters.
    pub fn sector_class(lo: f64, hi: f64) -> Result<Self, NonlinError> {
        let s = Sector::new(lo, hi)?;
        let c = s.center();
        Ok(Nonlinearity::new(format!("sector[{lo},{hi}]"), move |x| c * x)
            .with_sector(lo, hi)?
            .with_incr_sector(lo, hi)?
            .with_lift(LiftKind::Affine { kappa: c }))
    }

    /// Symmetric saturation at `level`: slope one inside, flat outside.
    pub fn saturation(level: f64) -> Self {
        Nonlinearity::new("saturation", move |x: f64| x.clamp(-level, level))
            .with_sector(0.0, 1.0)
            .and_then(|n| n.with_incr_sector(0.0, 1.0))
            .expect("constant sector")
            .with_lift(LiftKind::Scaling)
    }

    /// Dead zone of half-width `width`.
    pub fn deadzone(width: f64) -> Self {
        Nonlinearity::new("deadzone", move |x: f64| x - x.clamp(-width, width))
            .with_sector(0.0, 1.0)
            .and_then(|n| n.with_incr_sector(0.0, 1.0))
            .expect("constant sector")
            .with_lift(LiftKind::Affine { kappa: 0.5 })
    }

    /// `x -> gain sin x`.
    pub fn sin(gain: f64) -> Self {
        let (a, b) = if gain >= 0.0 { (gain * SINC_MIN, gain) } else { (gain, gain * SINC_MIN) };
        let g = gain.abs();
        Nonlinearity::new("sin", move |x: f64| gain * x.sin())
            .with_sector(a, b)
            .and_then(|n| n.with_incr_sector(-g, g))
            .expect("finite gain")
            .with_lift(LiftKind::Affine { kappa: 0.0 })
    }

    /// `x -> beta x^3`, with bounds restricted to inputs of amplitude at
    /// most `amplitude` (unrestricted when `None`: right half-plane bounds).
    pub fn cubic(beta: f64, amplitude: Option<f64>) -> Result<Self, NonlinError> {
        if !(beta > 0.0) {
            return Err(NonlinError::Invariant { label: "cubic".into(), msg: format!("beta = {beta} must be positive") });
        }
        let a = amplitude.unwrap_or(f64::INFINITY);
        let bounds = cubic_bounds(a)?;
        let mut n = Nonlinearity::new("cubic", move |x: f64| beta * x * x * x).with_lift(LiftKind::Scaling);
        n.sg0_region = Some(scale_region(beta, &bounds.sg0)?);
        n.srg_region = Some(scale_region(beta, &bounds.srg)?);
        if a.is_finite() {
            n = n.with_sector(0.0, beta * a * a)?.with_incr_sector(0.0, 3.0 * beta * a * a)?;
        }
        Ok(n)
    }

    /// Identity inside `[-1, 1]`, slope two outside: `2x - sign(x)`.
    pub fn steep_saturation() -> Self {
        Nonlinearity::new("phi2", |x: f64| if x.abs() <= 1.0 { x } else { 2.0 * x - x.signum() })
            .with_sector(1.0, 2.0)
            .and_then(|n| n.with_incr_sector(1.0, 2.0))
            .expect("constant sector")
            .with_lift(LiftKind::Affine { kappa: 1.0 })
    }

    /// Piecewise-linear interpolation of `(x, y)` breakpoints, extended
    /// linearly beyond the ends. Sectors are computed exactly.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self, NonlinError> {
        if points.len() < 2 || points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(NonlinError::BadTable);
        }
        let pts: Arc<[(f64, f64)]> = points.into();
        let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        let (ilo, ihi) = min_max(slopes.iter().copied());
        // y/x is monotone on every segment, so its extremes sit at breakpoints,
        // at x -> 0 (slope through the origin) and at x -> +-inf (end slopes).
        let at_zero = {
            let k = pts.partition_point(|p| p.0 <= 0.0).clamp(1, pts.len() - 1);
            slopes[k - 1]
        };
        let ratios = pts
            .iter()
            .filter(|p| p.0 != 0.0)
            .map(|p| p.1 / p.0)
            .chain([at_zero, slopes[0], slopes[slopes.len() - 1]]);
        let (slo, shi) = min_max(ratios);
        let table = Arc::clone(&pts);
        let f = move |x: f64| {
            let k = table.partition_point(|p| p.0 <= x).clamp(1, table.len() - 1);
            let (x0, y0) = table[k - 1];
            let (x1, y1) = table[k];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        };
        Ok(Nonlinearity::new("tabulated", f)
            .with_sector(slo, shi)?
            .with_incr_sector(ilo, ihi)?
            .with_lift(LiftKind::Affine { kappa: 0.5 * (slo + shi) }))
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

/// Disk bound `D_[k1, k2]` from the sector matching `mode`, or the declared
/// override region. The SG at zero falls back to the SRG bound, which
/// contains it since `phi(0) = 0`.
pub fn srg_static(phi: &Nonlinearity, mode: Mode) -> Result<Region, NonlinError> {
    let declared = match mode {
        Mode::Incremental => phi.srg_region.as_ref(),
        Mode::NonIncremental => phi.sg0_region.as_ref().or(phi.srg_region.as_ref()),
    };
    if let Some(r) = declared {
        return Ok(r.clone());
    }
    phi.sector_for(mode).map(|s| s.disk()).ok_or_else(|| NonlinError::MissingSector {
        label: phi.label.clone(),
        which: match mode {
            Mode::Incremental => "incremental",
            Mode::NonIncremental => "non-incremental",
        },
    })
}

/// Numerically estimated sectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorEstimate {
    pub sector: Sector,
    pub incr_sector: Sector,
}

/// Sampled sectors of `phi` on `[a, b]` with `n` grid points. The
/// non-incremental ratio near 0 is replaced by the central-difference slope.
/// Difference quotients of arbitrary grid pairs are convex combinations of
/// consecutive ones, so consecutive pairs give the exact grid extremes.
pub fn sector_estimate(phi: &Nonlinearity, domain: (f64, f64), n: usize) -> Result<SectorEstimate, NonlinError> {
    let (a, b) = domain;
    if !(a < 0.0 && 0.0 < b) || n < 3 {
        return Err(NonlinError::InvalidSector { lo: a, hi: b });
    }
    let xs: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| phi.eval(x)).collect();
    let gap = 1e-6 * (b - a);
    let slope0 = (phi.eval(gap) - phi.eval(-gap)) / (2.0 * gap);
    let ratios = xs.iter().zip(&ys).filter(|(x, _)| x.abs() > gap).map(|(x, y)| y / x).chain([slope0]);
    let (slo, shi) = min_max(ratios);
    let quotients = xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]));
    let (ilo, ihi) = min_max(quotients);
    Ok(SectorEstimate { sector: Sector::new(slo, shi)?, incr_sector: Sector::new(ilo, ihi)? })
}

/// Bounds for `x -> x^3` on inputs with sup-norm at most `amplitude`.
#[derive(Clone, Debug)]
pub struct CubicBounds {
    pub sg0: Region,
    pub srg: Region,
}

/// Half-disks of radius `A^2` (SG at zero) and `3 A^2` (SRG) in the closed
/// right half-plane; both are the right half-plane when `A` is infinite.
pub fn cubic_bounds(amplitude: f64) -> Result<CubicBounds, NonlinError> {
    if !(amplitude > 0.0) {
        return Err(NonlinError::InvalidAmplitude(amplitude));
    }
    if amplitude.is_infinite() {
        let h = Region::half_plane(true);
        return Ok(CubicBounds { sg0: h.clone(), srg: h });
    }
    let a2 = amplitude * amplitude;
    Ok(CubicBounds { sg0: Region::half_disk(a2, true)?, srg: Region::half_disk(3.0 * a2, true)? })
}

/// The inflation lift of `phi` at `tau`; `tau = 1` returns `phi` itself.
pub fn lift_at(phi: &Nonlinearity, tau: f64) -> Result<Nonlinearity, NonlinError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(NonlinError::TauOutOfRange(tau));
    }
    if !phi.inflatable {
        return Err(NonlinError::NotInflatable(phi.label.clone()));
    }
    let kappa = phi.lift.kappa().ok_or_else(|| NonlinError::NotInflatable(phi.label.clone()))?;
    Ok(deform(phi, kappa, tau))
}

/// `x -> kappa x + tau (phi(x) - kappa x)` with every bound mapped alongside,
/// regardless of the declared lift. Used by the tau-sweep for maps that are
/// not declared inflatable.
pub(crate) fn deform(phi: &Nonlinearity, kappa: f64, tau: f64) -> Nonlinearity {
    if tau == 1.0 {
        return phi.clone();
    }
    let inner = Arc::clone(&phi.map);
    let map: Map = Arc::new(move |x| kappa * x + tau * (inner(x) - kappa * x));
    let region = |r: &Option<Region>| {
        r.as_ref().map(|r| {
            if tau == 0.0 {
                Region::point(kappa)
            } else {
                affine_region(r, tau, (1.0 - tau) * kappa).expect("nonzero scale")
            }
        })
    };
    Nonlinearity {
        map,
        sector: phi.sector.map(|s| s.lifted(kappa, tau)),
        incr_sector: phi.incr_sector.map(|s| s.lifted(kappa, tau)),
        lipschitz: (1.0 - tau) * kappa.abs() + tau * phi.lipschitz,
        inflatable: phi.inflatable,
        lift: phi.lift,
        label: format!("{}@{tau}", phi.label),
        sg0_region: region(&phi.sg0_region),
        srg_region: region(&phi.srg_region),
    }
}

/// True when `kappa` lies in the real slice of the governing bound of `phi`.
pub fn admissible_kappa(phi: &Nonlinearity, mode: Mode, kappa: f64) -> bool {
    srg_static(phi, mode).map(|r| r.contains(C64::new(kappa, 0.0))).unwrap_or(false)
}

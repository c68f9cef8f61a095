//! SRG calculus on tagged regions.
//!
//! Sums and products of SRGs are only outer bounds when one operand has the
//! chord (sum) or an arc (product) property; both LTI operands lift that
//! requirement when their extended SRGs are used. Every operation here checks
//! those preconditions and the incremental / non-incremental mode.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, GeomError, Region};
use crate::Settings;

/// Which graph a bound describes: the SRG (incremental gain) or the SG at
/// zero (non-incremental gain).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Incremental,
    NonIncremental,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Incremental => "incremental",
            Mode::NonIncremental => "non-incremental",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "incremental" => Ok(Mode::Incremental),
            "non-incremental" | "nonincremental" => Ok(Mode::NonIncremental),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error("mode mismatch: `{left}` is {left_mode}, `{right}` is {right_mode}")]
    ModeMismatch { left: String, left_mode: &'static str, right: String, right_mode: &'static str },
    #[error("sum needs the chord property on one operand; unverified for `{left}` and `{right}`")]
    ChordUnverified { left: String, right: String },
    #[error("product needs an arc property on one operand; unverified for `{left}` and `{right}`")]
    ArcUnverified { left: String, right: String },
    #[error("`{0}` is empty")]
    Empty(String),
    #[error("`{what}`: {source}")]
    Geom { what: String, source: GeomError },
}

/// A region together with how it was obtained.
#[derive(Clone, Debug)]
pub struct SrgValue {
    pub region: Region,
    /// Built from an extended SRG, or a composition involving one.
    pub extended: bool,
    pub mode: Mode,
    /// The subword this value bounds.
    pub provenance: String,
    /// The value is the SRG of an LTI operator (possibly composed of several).
    pub lti: bool,
}

impl SrgValue {
    pub fn new(region: Region, mode: Mode, provenance: impl Into<String>) -> Self {
        SrgValue { region, extended: false, mode, provenance: provenance.into(), lti: false }
    }

    /// The extended SRG of an LTI operator.
    pub fn lti(region: Region, mode: Mode, provenance: impl Into<String>) -> Self {
        SrgValue { region, extended: true, mode, provenance: provenance.into(), lti: true }
    }

    /// The plain (hull-only) SRG of a stable LTI operator.
    pub fn lti_plain(region: Region, mode: Mode, provenance: impl Into<String>) -> Self {
        SrgValue { region, extended: false, mode, provenance: provenance.into(), lti: true }
    }

    pub fn radius(&self) -> f64 {
        self.region.radius()
    }

    fn is_empty(&self) -> bool {
        self.region.sample_count() == 0 && !self.region.contains_infinity()
    }
}

fn same_mode(a: &SrgValue, b: &SrgValue) -> Result<(), CalculusError> {
    if a.mode == b.mode {
        return Ok(());
    }
    Err(CalculusError::ModeMismatch {
        left: a.provenance.clone(),
        left_mode: a.mode.as_str(),
        right: b.provenance.clone(),
        right_mode: b.mode.as_str(),
    })
}

fn non_empty(a: &SrgValue) -> Result<(), CalculusError> {
    if a.is_empty() {
        Err(CalculusError::Empty(a.provenance.clone()))
    } else {
        Ok(())
    }
}

fn wrap(what: &str) -> impl FnOnce(GeomError) -> CalculusError + '_ {
    move |source| CalculusError::Geom { what: what.to_string(), source }
}

/// Extended LTI pairs compose without property checks.
fn lti_pair(a: &SrgValue, b: &SrgValue) -> bool {
    a.lti && b.lti && (a.extended || a.region.as_point().is_some()) && (b.extended || b.region.as_point().is_some())
}

/// Bound on the SRG of `R + S`.
pub fn srg_sum(a: &SrgValue, b: &SrgValue) -> Result<SrgValue, CalculusError> {
    srg_sum_with(a, b, &Settings::default())
}

pub fn srg_sum_with(a: &SrgValue, b: &SrgValue, settings: &Settings) -> Result<SrgValue, CalculusError> {
    same_mode(a, b)?;
    non_empty(a)?;
    non_empty(b)?;
    if !lti_pair(a, b) && !a.region.chord_flag().holds() && !b.region.chord_flag().holds() {
        return Err(CalculusError::ChordUnverified { left: a.provenance.clone(), right: b.provenance.clone() });
    }
    Ok(SrgValue {
        region: geom::minkowski_sum_with(&a.region, &b.region, settings),
        extended: a.extended || b.extended,
        mode: a.mode,
        provenance: format!("{} + {}", a.provenance, b.provenance),
        lti: a.lti && b.lti,
    })
}

fn has_arc(r: &Region) -> bool {
    r.left_arc_flag().holds() || r.right_arc_flag().holds()
}

/// Bound on the SRG of the composition `R S`.
pub fn srg_prod(a: &SrgValue, b: &SrgValue) -> Result<SrgValue, CalculusError> {
    srg_prod_with(a, b, &Settings::default())
}

pub fn srg_prod_with(a: &SrgValue, b: &SrgValue, settings: &Settings) -> Result<SrgValue, CalculusError> {
    same_mode(a, b)?;
    non_empty(a)?;
    non_empty(b)?;
    if !lti_pair(a, b) && !has_arc(&a.region) && !has_arc(&b.region) {
        return Err(CalculusError::ArcUnverified { left: a.provenance.clone(), right: b.provenance.clone() });
    }
    let provenance = format!("({}) ({})", a.provenance, b.provenance);
    let region = geom::set_product_with(&a.region, &b.region, settings).map_err(wrap(&provenance))?;
    Ok(SrgValue { region, extended: a.extended || b.extended, mode: a.mode, provenance, lti: a.lti && b.lti })
}

/// The SRG of the relational inverse.
pub fn srg_inv(a: &SrgValue) -> Result<SrgValue, CalculusError> {
    non_empty(a)?;
    Ok(SrgValue {
        region: geom::mobius_inverse(&a.region),
        provenance: format!("({})^-1", a.provenance),
        ..a.clone()
    })
}

pub fn srg_scale(alpha: f64, a: &SrgValue) -> Result<SrgValue, CalculusError> {
    let provenance = format!("{alpha} ({})", a.provenance);
    let region = geom::scale_region(alpha, &a.region).map_err(wrap(&provenance))?;
    Ok(SrgValue { region, provenance, ..a.clone() })
}

/// `1 + a`.
pub fn srg_shift(a: &SrgValue) -> SrgValue {
    SrgValue { region: geom::shift_region(&a.region), provenance: format!("1 + {}", a.provenance), ..a.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{disk_region, Structure};
    use crate::C64;

    fn disk(a: f64, b: f64) -> SrgValue {
        SrgValue::new(disk_region(a, b).unwrap(), Mode::Incremental, format!("D[{a},{b}]"))
    }

    #[test]
    fn disk_sum_and_identity() {
        let s = srg_sum(&disk(0.0, 1.0), &disk(1.0, 2.0)).unwrap();
        assert_eq!(s.region.structure(), Structure::ExactDisk { alpha: 1.0, beta: 3.0 });
        let z = srg_sum(&disk(0.0, 1.0), &disk(0.0, 0.0)).unwrap();
        assert_eq!(z.region.as_disk(), Some((0.0, 1.0)));
        let p = srg_prod(&disk(1.0, 1.0), &disk(-1.0, 2.0)).unwrap();
        assert_eq!(p.region.as_disk(), Some((-1.0, 2.0)));
    }

    #[test]
    fn modes_must_match() {
        let a = disk(0.0, 1.0);
        let mut b = disk(0.0, 1.0);
        b.mode = Mode::NonIncremental;
        assert!(matches!(srg_sum(&a, &b), Err(CalculusError::ModeMismatch { .. })));
        assert!(matches!(srg_prod(&a, &b), Err(CalculusError::ModeMismatch { .. })));
    }

    #[test]
    fn chord_precondition() {
        let two = Region::point_set(&[C64::new(0.0, 1.0)]).unwrap();
        let a = SrgValue::new(two.clone(), Mode::Incremental, "A");
        let b = SrgValue::new(two, Mode::Incremental, "B");
        assert!(matches!(srg_sum(&a, &b), Err(CalculusError::ChordUnverified { .. })));
        assert!(matches!(srg_prod(&a, &b), Err(CalculusError::ArcUnverified { .. })));
        let (mut a, mut b) = (a, b);
        a.lti = true;
        a.extended = true;
        b.lti = true;
        b.extended = true;
        assert!(srg_sum(&a, &b).is_ok());
    }

    #[test]
    fn inversion_and_scaling() {
        let d = disk(1.0, 2.0);
        let i = srg_inv(&d).unwrap();
        let (a, b) = i.region.as_disk().unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let back = srg_inv(&i).unwrap();
        let (a, b) = back.region.as_disk().unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        let m = srg_scale(-1.0, &d).unwrap();
        assert_eq!(m.region.as_disk(), Some((-2.0, -1.0)));
        let r = srg_scale(0.25, &srg_scale(4.0, &d).unwrap()).unwrap();
        assert_eq!(r.region.as_disk(), Some((1.0, 2.0)));
        assert!(srg_scale(0.0, &d).is_err());
        assert_eq!(srg_shift(&disk(-1.0, 1.0)).region.as_disk(), Some((0.0, 2.0)));
    }
}

//! Transfer functions, Nyquist curves and the (extended) SRG of LTI operators.

mod nyquist;
mod parse;
mod poly;
pub mod roots;
mod srg;
mod tf;

use thiserror::Error;

pub use nyquist::{
    nyquist_criterion, nyquist_criterion_with, nyquist_curve, winding_number, winding_number_with,
    ContourPoint, FrequencyGrid,
    NyquistCriterion, NyquistCurve,
};
pub use parse::parse_tf;
pub use poly::Polynomial;
pub use srg::{extended_srg, extended_srg_with, hinf_norm, srg_lti, srg_lti_with, ExtendedSrg};
pub use tf::{NearCancellation, TransferFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error("transfer function has a zero denominator")]
    ZeroDenominator,
    #[error("the zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("cannot invert the zero transfer function")]
    InverseOfZero,
    #[error("polynomial degree {degree} exceeds the cap of {cap}")]
    DegreeOverflow { degree: usize, cap: usize },
    #[error("root finding did not converge for a degree-{degree} polynomial")]
    RootsNotConverged { degree: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("winding number is ill-conditioned at {point} (fractional part {frac:.3})")]
    IllConditionedWinding { point: String, frac: f64 },
    #[error("-1 lies on the Nyquist curve: the loop is marginally stable")]
    MarginalStability,
    #[error("{0} is not stable: use the extended SRG")]
    NotStable(String),
    #[error("the curve has no samples")]
    EmptyCurve,
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
}

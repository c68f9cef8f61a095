//! The interconnection language: words over named LTI blocks and
//! nonlinearities, their SRG bound and the linearization-based stability
//! pipeline.

mod eval;
mod expr;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::calculus::CalculusError;
use crate::geom::Region;
use crate::lti::LtiError;
use crate::nonlin::{NonlinError, Nonlinearity};
use crate::Tf;

pub use eval::{
    analyze_interconnection, collapse_lti, linearize, srg_bound, AnalysisOptions, BoundOptions, InterconnectionReport,
    LinearizationDoc, BoundDoc, TauPoint,
};
pub use expr::{parse_expr, Expr, IDENTITY};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LangError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown operator `{0}`")]
    Unknown(String),
    #[error("`{0}` is reserved for the identity")]
    Reserved(String),
    #[error("in `{what}`: {source}")]
    Lti { what: String, source: LtiError },
    #[error("in `{what}`: {source}")]
    Nonlin { what: String, source: NonlinError },
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("`{0}` is only known through a declared region and cannot be linearized")]
    NotLinearizable(String),
    #[error("gain {kappa} for `{name}` is outside the real slice of its bound")]
    KappaOutside { name: String, kappa: f64 },
    #[error(
        "stability checks disagree for the linearization: poles say {poles}, extended SRG radius says {srg} \
         (geometry resolution too coarse?)"
    )]
    StabilityDisagreement { poles: bool, srg: bool },
}

/// What a name in a word stands for.
#[derive(Clone, Debug)]
pub enum Operator {
    Lti(Tf),
    Nl(Nonlinearity),
    /// An operator known only through a bound on its SRG / SG at zero.
    Region(Region),
}

/// Named operators available to a word.
#[derive(Clone, Debug, Default)]
pub struct OperatorTable {
    entries: BTreeMap<String, Operator>,
}

impl OperatorTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces `name`.
    pub fn insert(&mut self, name: impl Into<String>, op: Operator) -> Result<(), LangError> {
        let name = name.into();
        if name == IDENTITY {
            return Err(LangError::Reserved(name));
        }
        self.entries.insert(name, op);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, op: Operator) -> Result<Self, LangError> {
        self.insert(name, op)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&Operator, LangError> {
        self.entries.get(name).ok_or_else(|| LangError::Unknown(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Operator)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Errors on the first name in `e` without an entry.
    pub fn resolve(&self, e: &Expr) -> Result<(), LangError> {
        e.names().into_iter().try_for_each(|n| self.get(n).map(|_| ()))
    }
}

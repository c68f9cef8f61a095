//! Folding words into transfer functions and SRG bounds.

use std::collections::BTreeMap;

use serde::Serialize;

use super::expr::{Expr, IDENTITY};
use super::{LangError, Operator, OperatorTable};
use crate::analysis::{DomainQualifier, Verdict};
use crate::calculus::{self, Mode, SrgValue};
use crate::geom::{scale_region, Region};
use crate::lti::{extended_srg_with, srg_lti_with};
use crate::nonlin::{admissible_kappa, deform, srg_static};
use crate::{Settings, Tf};

fn lti_err(what: &Expr) -> impl FnOnce(crate::lti::LtiError) -> LangError + '_ {
    move |source| LangError::Lti { what: what.to_string(), source }
}

fn is_pure_lti(e: &Expr, t: &OperatorTable) -> Result<bool, LangError> {
    Ok(match e {
        Expr::Var(n) if n == IDENTITY => true,
        Expr::Var(n) => matches!(t.get(n)?, Operator::Lti(_)),
        Expr::Scale(_, c) | Expr::Inv(c) => is_pure_lti(c, t)?,
        Expr::Sum(a, b) | Expr::Prod(a, b) => is_pure_lti(a, t)? && is_pure_lti(b, t)?,
    })
}

/// Rational fold of `e`, with `leaf` giving the transfer function of each name.
fn fold_tf(e: &Expr, leaf: &mut impl FnMut(&str) -> Result<Tf, LangError>) -> Result<Tf, LangError> {
    match e {
        Expr::Var(n) if n == IDENTITY => Ok(Tf::one()),
        Expr::Var(n) => leaf(n),
        Expr::Scale(a, c) => Ok(fold_tf(c, leaf)?.scale(*a)),
        Expr::Inv(c) => fold_tf(c, leaf)?.inverse().map_err(lti_err(e)),
        Expr::Sum(a, b) => fold_tf(a, leaf)?.add(&fold_tf(b, leaf)?).map_err(lti_err(e)),
        Expr::Prod(a, b) => fold_tf(a, leaf)?.mul(&fold_tf(b, leaf)?).map_err(lti_err(e)),
    }
}

fn lti_leaf(t: &OperatorTable) -> impl FnMut(&str) -> Result<Tf, LangError> + '_ {
    move |n| match t.get(n)? {
        Operator::Lti(f) => Ok(f.clone()),
        _ => unreachable!("pure LTI subtree"),
    }
}

/// Folds every maximal LTI-only subtree (other than a bare name) into one
/// synthetic LTI entry named `{subword}`.
pub fn collapse_lti(e: &Expr, t: &OperatorTable) -> Result<(Expr, OperatorTable), LangError> {
    t.resolve(e)?;
    let mut table = t.clone();
    let out = collapse_rec(e, t, &mut table)?;
    Ok((out, table))
}

fn collapse_rec(e: &Expr, t: &OperatorTable, out: &mut OperatorTable) -> Result<Expr, LangError> {
    if !matches!(e, Expr::Var(_)) && is_pure_lti(e, t)? {
        let f = fold_tf(e, &mut lti_leaf(t))?;
        let name = format!("{{{e}}}");
        out.insert(name.clone(), Operator::Lti(f.with_label(e.to_string())))?;
        return Ok(Expr::Var(name));
    }
    Ok(match e {
        Expr::Var(_) => e.clone(),
        Expr::Scale(a, c) => Expr::scale(*a, collapse_rec(c, t, out)?),
        Expr::Inv(c) => Expr::inv(collapse_rec(c, t, out)?),
        Expr::Sum(a, b) => Expr::sum(collapse_rec(a, t, out)?, collapse_rec(b, t, out)?),
        Expr::Prod(a, b) => Expr::prod(collapse_rec(a, t, out)?, collapse_rec(b, t, out)?),
    })
}

/// Gains used for each nonlinearity: overrides first, sector centers otherwise.
fn kappas(e: &Expr, t: &OperatorTable, mode: Mode, overrides: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, LangError> {
    let mut out = BTreeMap::new();
    for n in e.names() {
        if let Operator::Nl(phi) = t.get(n)? {
            let k = overrides.get(n).copied().unwrap_or_else(|| phi.default_kappa(mode));
            if !admissible_kappa(phi, mode, k) {
                return Err(LangError::KappaOutside { name: n.to_string(), kappa: k });
            }
            out.insert(n.to_string(), k);
        }
    }
    Ok(out)
}

/// The transfer function obtained by replacing every nonlinearity with a real
/// gain from its bound (missing entries default to the sector center).
pub fn linearize(e: &Expr, t: &OperatorTable, kappa: &BTreeMap<String, f64>, mode: Mode) -> Result<Tf, LangError> {
    t.resolve(e)?;
    let ks = kappas(e, t, mode, kappa)?;
    fold_tf(e, &mut |n| match t.get(n)? {
        Operator::Lti(f) => Ok(f.clone()),
        Operator::Nl(_) => Ok(Tf::constant(ks[n])),
        Operator::Region(_) => Err(LangError::NotLinearizable(n.to_string())),
    })
}

/// How leaves are turned into regions.
#[derive(Clone, Debug)]
pub struct BoundOptions {
    pub mode: Mode,
    /// Use extended SRGs for LTI leaves (plain hull SRGs otherwise).
    pub extended: bool,
    /// Fold LTI-only subtrees before evaluating.
    pub collapse: bool,
    pub settings: Settings,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions { mode: Mode::Incremental, extended: true, collapse: true, settings: Settings::default() }
    }
}

struct Evaluator<'a> {
    table: &'a OperatorTable,
    opts: &'a BoundOptions,
    diagnostics: Vec<String>,
}

impl Evaluator<'_> {
    fn leaf(&mut self, n: &str) -> Result<SrgValue, LangError> {
        let mode = self.opts.mode;
        if n == IDENTITY {
            return Ok(SrgValue::lti(Region::point(1.0), mode, IDENTITY));
        }
        match self.table.get(n)? {
            Operator::Lti(f) => {
                let what = Expr::var(n);
                if self.opts.extended {
                    let ext = extended_srg_with(f, &self.opts.settings).map_err(lti_err(&what))?;
                    self.diagnostics.extend(ext.warnings.iter().map(|w| format!("{n}: {w}")));
                    Ok(SrgValue::lti(ext.region, mode, n))
                } else {
                    let r = srg_lti_with(f, &self.opts.settings).map_err(lti_err(&what))?;
                    Ok(SrgValue::lti_plain(r, mode, n))
                }
            }
            Operator::Nl(phi) => {
                let r = srg_static(phi, mode).map_err(|source| LangError::Nonlin { what: n.to_string(), source })?;
                Ok(SrgValue::new(r, mode, n))
            }
            Operator::Region(r) => Ok(SrgValue::new(r.clone(), mode, n)),
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<SrgValue, LangError> {
        let s = &self.opts.settings;
        let mut v = match e {
            Expr::Var(n) => return self.leaf(n),
            Expr::Scale(a, c) => calculus::srg_scale(*a, &self.eval(c)?)?,
            Expr::Inv(c) => calculus::srg_inv(&self.eval(c)?)?,
            Expr::Sum(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                calculus::srg_sum_with(&a, &b, s)?
            }
            Expr::Prod(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                calculus::srg_prod_with(&a, &b, s)?
            }
        };
        v.provenance = e.to_string();
        Ok(v)
    }
}

fn bound_with_diagnostics(e: &Expr, t: &OperatorTable, opts: &BoundOptions) -> Result<(SrgValue, Vec<String>), LangError> {
    t.resolve(e)?;
    let (word, table) = if opts.collapse { collapse_lti(e, t)? } else { (e.clone(), t.clone()) };
    let mut ev = Evaluator { table: &table, opts, diagnostics: Vec::new() };
    let mut v = ev.eval(&word)?;
    v.provenance = e.to_string();
    Ok((v, ev.diagnostics))
}

/// The SRG bound of a word: LTI leaves by their (extended) SRG, nonlinear
/// leaves by their sector disk or declared region, composed bottom-up.
pub fn srg_bound(e: &Expr, t: &OperatorTable, opts: &BoundOptions) -> Result<SrgValue, LangError> {
    Ok(bound_with_diagnostics(e, t, opts)?.0)
}

/// Options of the full stability pipeline.
#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub bound: BoundOptions,
    /// Per-name linearization gains; sector centers by default.
    pub kappa: BTreeMap<String, f64>,
    /// The user asserts continuity of the homotopy in its parameter.
    pub tau_continuous: bool,
    /// Number of points of the homotopy sweep run when some nonlinearity is
    /// not inflatable.
    pub tau_steps: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { bound: BoundOptions::default(), kappa: BTreeMap::new(), tau_continuous: false, tau_steps: 11 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearizationDoc {
    pub tf: String,
    pub poles: Vec<[f64; 2]>,
    pub stable: bool,
    /// Finite radius of the extended SRG of the linearization.
    pub bounded_srg: bool,
    pub kappa: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundDoc {
    /// `None` when the bound is unbounded.
    pub rmin: Option<f64>,
    pub region_ref: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TauPoint {
    pub tau: f64,
    pub rmin: Option<f64>,
}

/// Outcome of the linearize / bound / compare pipeline on one word.
#[derive(Clone, Debug, Serialize)]
pub struct InterconnectionReport {
    pub word: String,
    pub mode: Mode,
    pub linearization: LinearizationDoc,
    pub bound: BoundDoc,
    pub verdict: Verdict,
    pub domain_qualifier: DomainQualifier,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_sweep: Option<Vec<TauPoint>>,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub region: Region,
}

impl InterconnectionReport {
    /// The gain bound, infinite when there is none.
    pub fn gain_bound(&self) -> f64 {
        self.bound.rmin.unwrap_or(f64::INFINITY)
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Runs the full pipeline: linearize at the chosen gains and check the
/// result by poles and by the radius of its extended SRG, evaluate the SRG
/// bound of the word, and combine the two into a verdict.
pub fn analyze_interconnection(e: &Expr, t: &OperatorTable, opts: &AnalysisOptions) -> Result<InterconnectionReport, LangError> {
    let mode = opts.bound.mode;
    let settings = &opts.bound.settings;
    let mut diagnostics = Vec::new();

    let ks = kappas(e, t, mode, &opts.kappa)?;
    let lin = linearize(e, t, &ks, mode)?;
    let what = Expr::var("linearization");
    let poles = lin.poles().map_err(lti_err(&what))?;
    let stable = lin.is_proper() && lin.is_stable().map_err(lti_err(&what))?;
    let bounded_srg = extended_srg_with(&lin, settings).map_err(lti_err(&what))?.region.radius().is_finite();
    if stable != bounded_srg {
        return Err(LangError::StabilityDisagreement { poles: stable, srg: bounded_srg });
    }
    if !stable {
        let unstable: Vec<String> = poles.iter().filter(|p| p.re >= 0.0).map(|p| format!("{:.4}{:+.4}j", p.re, p.im)).collect();
        diagnostics.push(format!("linearization has {} closed right half-plane poles: {}", unstable.len(), unstable.join(", ")));
    }

    let (value, warnings) = bound_with_diagnostics(e, t, &opts.bound)?;
    diagnostics.extend(warnings);
    let rmin = value.radius();

    let non_inflatable: Vec<&str> = e
        .names()
        .into_iter()
        .filter(|n| match t.get(n) {
            Ok(Operator::Nl(phi)) => !phi.inflatable,
            Ok(Operator::Region(_)) => true,
            _ => false,
        })
        .collect();
    let tau_sweep = if non_inflatable.is_empty() || opts.tau_steps < 2 {
        None
    } else {
        diagnostics.push(format!("not inflatable: {}; sweeping phi -> tau phi", non_inflatable.join(", ")));
        Some(tau_sweep(e, t, &opts.bound, opts.tau_steps, &mut diagnostics))
    };
    let homotopy_ok = tau_sweep.as_ref().is_none_or(|s| s.iter().all(|p| p.rmin.is_some()));

    let verdict = if !rmin.is_finite() {
        Verdict::NoBound
    } else if !stable {
        Verdict::InconclusiveUnstableLinearization
    } else {
        Verdict::StableBounded
    };
    let domain_qualifier = if opts.tau_continuous && homotopy_ok { DomainQualifier::Full } else { DomainQualifier::DomOnly };
    if verdict == Verdict::StableBounded && !opts.tau_continuous {
        diagnostics.push("continuity in tau not asserted: the bound holds on the domain of the operator".into());
    }

    Ok(InterconnectionReport {
        word: e.to_string(),
        mode,
        linearization: LinearizationDoc {
            tf: lin.to_string(),
            poles: poles.iter().map(|p| [p.re, p.im]).collect(),
            stable,
            bounded_srg,
            kappa: ks,
        },
        bound: BoundDoc { rmin: finite(rmin), region_ref: "bound".into() },
        verdict,
        domain_qualifier,
        tau_sweep,
        diagnostics,
        region: value.region,
    })
}

/// Radii of the bounds of `R_tau`, where every nonlinearity and declared
/// region is scaled by `tau`.
fn tau_sweep(e: &Expr, t: &OperatorTable, opts: &BoundOptions, steps: usize, diagnostics: &mut Vec<String>) -> Vec<TauPoint> {
    (0..steps)
        .map(|k| {
            let tau = k as f64 / (steps - 1) as f64;
            let mut scaled = OperatorTable::new();
            for (n, op) in t.iter() {
                let op = match op {
                    Operator::Nl(phi) => Operator::Nl(deform(phi, 0.0, tau)),
                    Operator::Region(r) if tau == 0.0 => Operator::Region(Region::point(0.0)),
                    Operator::Region(r) => Operator::Region(scale_region(tau, r).expect("tau > 0")),
                    op => op.clone(),
                };
                scaled.insert(n, op).expect("names come from a table");
            }
            let rmin = match srg_bound(e, &scaled, opts) {
                Ok(v) => finite(v.radius()),
                Err(err) => {
                    diagnostics.push(format!("tau = {tau}: {err}"));
                    None
                }
            };
            TauPoint { tau, rmin }
        })
        .collect()
}

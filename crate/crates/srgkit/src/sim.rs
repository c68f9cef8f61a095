//! Fixed-step time-domain simulation: state-space realizations, Lur'e-type
//! loops, word-defined systems, empirical SRG samples and gain estimates.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::Mode;
use crate::lang::{linearize, Expr, LangError, Operator, OperatorTable, IDENTITY};
use crate::nonlin::Nonlinearity;
use crate::{Tf, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("`{0}` is improper and has no state-space realization")]
    Improper(String),
    #[error("state norm exceeded {limit:e} at t = {t}")]
    Diverged { t: f64, limit: f64 },
    #[error("algebraic loop could not be solved at t = {0}")]
    AlgebraicLoop(f64),
    #[error("cannot simulate `{0}`: {1}")]
    Unsupported(String, String),
    #[error("need at least {0} trajectories")]
    TooFewTrajectories(usize),
    #[error("step {h} and horizon {t_end} are inconsistent")]
    BadGrid { h: f64, t_end: f64 },
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// Abort threshold on the state norm.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// `x' = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.b.len()
    }

    /// `C (jw I - A)^-1 B + D`.
    pub fn freq(&self, w: f64) -> C64 {
        let n = self.order();
        if n == 0 {
            return C64::new(self.d, 0.0);
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { C64::new(0.0, w) } else { C64::new(0.0, 0.0) };
            diag - C64::new(self.a[(i, j)], 0.0)
        });
        let b = self.b.map(|v| C64::new(v, 0.0));
        match m.lu().solve(&b) {
            Some(x) => self.c.iter().zip(x.iter()).map(|(c, x)| x * *c).sum::<C64>() + self.d,
            None => C64::new(f64::INFINITY, 0.0),
        }
    }

    fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }

    fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        for (i, d) in dx.iter_mut().enumerate() {
            *d = (0..x.len()).map(|j| self.a[(i, j)] * x[j]).sum::<f64>() + self.b[i] * u;
        }
    }

    fn has_feedthrough(&self) -> bool {
        self.d != 0.0
    }
}

/// Controllable canonical realization, with the feedthrough split off by
/// polynomial division.
pub fn realize_state_space(f: &Tf) -> Result<StateSpace, SimError> {
    if !f.is_proper() {
        return Err(SimError::Improper(f.to_string()));
    }
    let den = f.den();
    let n = den.degree().unwrap_or(0);
    let lead = den.leading();
    let (q, r) = f.num().div_rem(den);
    let d = q.coeff(0);
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j {
            1.0
        } else if i + 1 == n {
            -den.coeff(j) / lead
        } else {
            0.0
        }
    });
    let mut b = DVector::zeros(n);
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let c = RowDVector::from_fn(n, |_, j| r.coeff(j) / lead);
    Ok(StateSpace { a, b, c, d })
}

/// Solves `g(y) = 0` by damped Newton steps with a numerical slope; `NaN`
/// when it fails.
fn solve_scalar(g: impl Fn(f64) -> f64, guess: f64) -> f64 {
    let mut y = guess;
    for _ in 0..80 {
        let gy = g(y);
        if !gy.is_finite() {
            return f64::NAN;
        }
        if gy.abs() <= 1e-13 * (1.0 + y.abs()) {
            return y;
        }
        let h = 1e-7 * (1.0 + y.abs());
        let slope = (g(y + h) - g(y - h)) / (2.0 * h);
        if slope == 0.0 || !slope.is_finite() {
            return f64::NAN;
        }
        let step = gy / slope;
        y -= step;
        if step.abs() <= 1e-14 * (1.0 + y.abs()) {
            return y;
        }
    }
    if g(y).abs() <= 1e-8 * (1.0 + y.abs()) {
        y
    } else {
        f64::NAN
    }
}

/// A causal SISO system built from realizations, static maps, gains and the
/// word connectives.
#[derive(Clone, Debug)]
enum Node {
    Gain(f64),
    Static(Nonlinearity),
    Lti(StateSpace),
    /// `then(first(u))`; state `[first | then]`.
    Series { first: Box<Node>, then: Box<Node>, split: usize },
    Parallel { a: Box<Node>, b: Box<Node>, split: usize },
    /// `y = forward(u - back(y))`.
    Feedback { forward: Box<Node>, back: Box<Node>, split: usize },
    /// `y` with `inner(y) = u`.
    Inverse(Box<Node>),
}

impl Node {
    fn states(&self) -> usize {
        match self {
            Node::Gain(_) | Node::Static(_) => 0,
            Node::Lti(ss) => ss.order(),
            Node::Series { first: a, then: b, .. } | Node::Parallel { a, b, .. } | Node::Feedback { forward: a, back: b, .. } => {
                a.states() + b.states()
            }
            Node::Inverse(n) => n.states(),
        }
    }

    fn feedthrough(&self) -> bool {
        match self {
            Node::Gain(k) => *k != 0.0,
            Node::Static(_) | Node::Inverse(_) => true,
            Node::Lti(ss) => ss.has_feedthrough(),
            Node::Series { first, then, .. } => first.feedthrough() && then.feedthrough(),
            Node::Parallel { a, b, .. } => a.feedthrough() || b.feedthrough(),
            Node::Feedback { forward, .. } => forward.feedthrough(),
        }
    }

    /// Output for state `x` and input `u`; fills `dx` when given.
    fn eval(&self, x: &[f64], u: f64, dx: Option<&mut [f64]>) -> f64 {
        match self {
            Node::Gain(k) => k * u,
            Node::Static(phi) => phi.eval(u),
            Node::Lti(ss) => {
                if let Some(dx) = dx {
                    ss.derivative(x, u, dx);
                }
                ss.output(x, u)
            }
            Node::Series { first, then, split } => {
                let (xa, xb) = x.split_at(*split);
                match dx {
                    Some(dx) => {
                        let (da, db) = dx.split_at_mut(*split);
                        let v = first.eval(xa, u, Some(da));
                        then.eval(xb, v, Some(db))
                    }
                    None => then.eval(xb, first.eval(xa, u, None), None),
                }
            }
            Node::Parallel { a, b, split } => {
                let (xa, xb) = x.split_at(*split);
                match dx {
                    Some(dx) => {
                        let (da, db) = dx.split_at_mut(*split);
                        a.eval(xa, u, Some(da)) + b.eval(xb, u, Some(db))
                    }
                    None => a.eval(xa, u, None) + b.eval(xb, u, None),
                }
            }
            Node::Feedback { forward, back, split } => {
                let (xf, xb) = x.split_at(*split);
                let y = if !forward.feedthrough() {
                    forward.eval(xf, 0.0, None)
                } else if !back.feedthrough() {
                    forward.eval(xf, u - back.eval(xb, 0.0, None), None)
                } else {
                    solve_scalar(|y| y - forward.eval(xf, u - back.eval(xb, y, None), None), 0.0)
                };
                if let Some(dx) = dx {
                    let (df, db) = dx.split_at_mut(*split);
                    let e = u - back.eval(xb, y, Some(db));
                    forward.eval(xf, e, Some(df));
                }
                y
            }
            Node::Inverse(inner) => {
                let y = solve_scalar(|y| inner.eval(x, y, None) - u, u);
                if let Some(dx) = dx {
                    inner.eval(x, y, Some(dx));
                }
                y
            }
        }
    }
}

/// A simulable operator `u -> y`.
#[derive(Clone, Debug)]
pub struct System {
    root: Node,
    label: String,
}

fn series(first: Node, then: Node) -> Node {
    Node::Series { split: first.states(), first: Box::new(first), then: Box::new(then) }
}

fn parallel(a: Node, b: Node) -> Node {
    Node::Parallel { split: a.states(), a: Box::new(a), b: Box::new(b) }
}

fn feedback(forward: Node, back: Node) -> Node {
    Node::Feedback { split: forward.states(), forward: Box::new(forward), back: Box::new(back) }
}

fn lti_only(e: &Expr, t: &OperatorTable) -> bool {
    e.names().into_iter().all(|n| n == IDENTITY || matches!(t.get(n), Ok(Operator::Lti(_))))
}

fn fold(e: &Expr, t: &OperatorTable) -> Result<Tf, SimError> {
    Ok(linearize(e, t, &BTreeMap::new(), Mode::Incremental)?)
}

/// The proper realization of `e^-1` when `e` is LTI-only, or the operand
/// of an explicit inverse.
fn proper_inverse(e: &Expr, t: &OperatorTable) -> Result<Option<Node>, SimError> {
    if let Expr::Inv(x) = e {
        return build(x, t).map(Some);
    }
    if lti_only(e, t) {
        let f = fold(e, t)?;
        if !f.is_proper() || f.is_zero() {
            return Ok(None);
        }
        let inv = f.inverse().map_err(|err| SimError::Unsupported(e.to_string(), err.to_string()))?;
        if inv.is_proper() {
            return Ok(Some(Node::Lti(realize_state_space(&inv)?)));
        }
    }
    Ok(None)
}

fn build(e: &Expr, t: &OperatorTable) -> Result<Node, SimError> {
    if lti_only(e, t) {
        let f = fold(e, t)?;
        if f.is_proper() {
            return Ok(Node::Lti(realize_state_space(&f)?));
        }
        if !matches!(e, Expr::Inv(_) | Expr::Var(_)) {
            return Err(SimError::Improper(e.to_string()));
        }
    }
    Ok(match e {
        Expr::Var(n) if n == IDENTITY => Node::Gain(1.0),
        Expr::Var(n) => match t.get(n)? {
            Operator::Lti(f) => return Err(SimError::Improper(format!("{n} = {f}"))),
            Operator::Nl(phi) => Node::Static(phi.clone()),
            Operator::Region(_) => return Err(SimError::Unsupported(n.clone(), "only a region is known".into())),
        },
        Expr::Scale(a, c) => series(build(c, t)?, Node::Gain(*a)),
        Expr::Sum(a, b) => parallel(build(a, t)?, build(b, t)?),
        // `a b` applies `b` first.
        Expr::Prod(a, b) => series(build(b, t)?, build(a, t)?),
        Expr::Inv(c) => {
            if let Some(n) = proper_inverse(c, t)? {
                return Ok(n);
            }
            if let Expr::Sum(p, q) = c.as_ref() {
                // `(p + q)^-1 = q^-1 (1 + p q^-1)^-1`: feedback with forward
                // `q^-1` and return path `p`. Explicit inverses go forward first.
                let mut sides = [(p, q), (q, p)];
                sides.sort_by_key(|(fwd, _)| !matches!(fwd.as_ref(), Expr::Inv(_)));
                for (fwd, back) in sides {
                    if let Some(f) = proper_inverse(fwd, t)? {
                        return Ok(feedback(f, build(back, t)?));
                    }
                }
            }
            let inner = build(c, t)?;
            if !inner.feedthrough() {
                return Err(SimError::Unsupported(e.to_string(), "inverse of an operator without feedthrough".into()));
            }
            Node::Inverse(Box::new(inner))
        }
    })
}

impl System {
    pub fn from_word(e: &Expr, t: &OperatorTable) -> Result<System, SimError> {
        t.resolve(e)?;
        Ok(System { root: build(e, t)?, label: e.to_string() })
    }

    pub fn lti(f: &Tf) -> Result<System, SimError> {
        Ok(System { root: Node::Lti(realize_state_space(f)?), label: f.to_string() })
    }

    pub fn static_map(phi: &Nonlinearity) -> System {
        System { root: Node::Static(phi.clone()), label: phi.label.clone() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn states(&self) -> usize {
        self.root.states()
    }

    /// RK4 from rest; records `u` and `y` on the grid `0, h, ..., t_end`.
    pub fn simulate(&self, u: &dyn Fn(f64) -> f64, t_end: f64, h: f64) -> Result<Trajectory, SimError> {
        let n = self.states();
        let steps = grid_steps(t_end, h)?;
        let mut x = vec![0.0; n];
        let mut tr = Trajectory::with_signals(&["u", "y"], steps + 1);
        let rhs = |t: f64, x: &[f64], dx: &mut [f64]| {
            self.root.eval(x, u(t), Some(dx));
        };
        for k in 0..=steps {
            let t = k as f64 * h;
            let ut = u(t);
            let y = self.root.eval(&x, ut, None);
            if !y.is_finite() {
                return Err(SimError::AlgebraicLoop(t));
            }
            tr.push(t, &[ut, y]);
            if k < steps {
                rk4_step(&rhs, t, &mut x, h);
                check_state(&x, t + h)?;
            }
        }
        Ok(tr)
    }
}

fn grid_steps(t_end: f64, h: f64) -> Result<usize, SimError> {
    if !(h > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(SimError::BadGrid { h, t_end });
    }
    Ok((t_end / h).round() as usize)
}

fn check_state(x: &[f64], t: f64) -> Result<(), SimError> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm.is_nan() {
        return Err(SimError::AlgebraicLoop(t));
    }
    if norm > DIVERGENCE_LIMIT {
        return Err(SimError::Diverged { t, limit: DIVERGENCE_LIMIT });
    }
    Ok(())
}

/// One classical Runge-Kutta step of `x' = f(t, x)`.
fn rk4_step(f: &impl Fn(f64, &[f64], &mut [f64]), t: f64, x: &mut [f64], h: f64) {
    let n = x.len();
    if n == 0 {
        return;
    }
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t, x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    f(t + h, &tmp, &mut k4);
    for i in 0..n {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Named signals on a uniform time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub signals: BTreeMap<String, Vec<f64>>,
}

impl Trajectory {
    fn with_signals(names: &[&str], cap: usize) -> Self {
        Trajectory {
            t: Vec::with_capacity(cap),
            signals: names.iter().map(|n| (n.to_string(), Vec::with_capacity(cap))).collect(),
        }
    }

    /// Appends one sample; `values` follow the sorted signal names.
    fn push(&mut self, t: f64, values: &[f64]) {
        self.t.push(t);
        for (s, v) in self.signals.values_mut().zip(values) {
            s.push(*v);
        }
    }

    pub fn signal(&self, name: &str) -> Option<&[f64]> {
        self.signals.get(name).map(Vec::as_slice)
    }

    pub fn step(&self) -> f64 {
        if self.t.len() < 2 {
            0.0
        } else {
            self.t[1] - self.t[0]
        }
    }

    /// Value of `name` at the grid point nearest to `t`.
    pub fn at(&self, name: &str, t: f64) -> Option<f64> {
        let h = self.step();
        let k = if h > 0.0 { ((t - self.t[0]) / h).round().max(0.0) as usize } else { 0 };
        self.signal(name)?.get(k.min(self.t.len().saturating_sub(1))).copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for name in self.signals.keys() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, t) in self.t.iter().enumerate() {
            let _ = write!(out, "{t:.6e}");
            for s in self.signals.values() {
                let _ = write!(out, ",{:.9e}", s[k]);
            }
            out.push('\n');
        }
        out
    }
}

/// Deterministic test signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    Zero,
    Step { at: f64, amplitude: f64 },
    Pulse { from: f64, to: f64, amplitude: f64 },
    Sine { amplitude: f64, omega: f64, #[serde(default)] phase: f64 },
    Sum { terms: Vec<Signal> },
    /// Sum of tones under a Tukey window on `[0, window]`, zero afterwards.
    Tones { tones: Vec<(f64, f64, f64)>, window: f64 },
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Step { at, amplitude } => {
                if t >= *at {
                    *amplitude
                } else {
                    0.0
                }
            }
            Signal::Pulse { from, to, amplitude } => {
                if t >= *from && t < *to {
                    *amplitude
                } else {
                    0.0
                }
            }
            Signal::Sine { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            Signal::Sum { terms } => terms.iter().map(|s| s.eval(t)).sum(),
            Signal::Tones { tones, window } => {
                let w = tukey(t, *window, TUKEY_TAPER);
                if w == 0.0 {
                    return 0.0;
                }
                w * tones.iter().map(|(a, om, ph)| a * (om * t + ph).sin()).sum::<f64>()
            }
        }
    }
}

const TUKEY_TAPER: f64 = 0.2;

/// Tukey window on `[0, len]` with tapered fraction `alpha`.
fn tukey(t: f64, len: f64, alpha: f64) -> f64 {
    if !(0.0..=len).contains(&t) {
        return 0.0;
    }
    let edge = 0.5 * alpha * len;
    let x = t.min(len - t);
    if x >= edge {
        1.0
    } else {
        0.5 * (1.0 - (PI * x / edge).cos())
    }
}

/// Random input ensemble for empirical SRG sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputEnsemble {
    /// Tukey window length (s).
    pub window: f64,
    /// Zero-input tail appended so outputs decay inside the horizon (s).
    pub tail: f64,
    pub h: f64,
    pub max_tones: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub amplitude: f64,
}

impl Default for InputEnsemble {
    fn default() -> Self {
        InputEnsemble { window: 100.0, tail: 50.0, h: 1e-3, max_tones: 5, omega_min: 1e-2, omega_max: 1e2, amplitude: 1.0 }
    }
}

impl InputEnsemble {
    pub fn horizon(&self) -> f64 {
        self.window + self.tail
    }

    /// A windowed sum of 1 to `max_tones` sinusoids with log-uniform frequencies.
    pub fn draw(&self, rng: &mut impl Rng) -> Signal {
        let count = rng.random_range(1..=self.max_tones.max(1));
        let (lo, hi) = (self.omega_min.ln(), self.omega_max.ln());
        let tones = (0..count)
            .map(|_| {
                let a = self.amplitude * rng.random_range(-1.0..=1.0);
                let om = rng.random_range(lo..=hi).exp();
                (a, om, rng.random_range(0.0..TAU))
            })
            .collect();
        Signal::Tones { tones, window: self.window }
    }
}

/// Trapezoidal `<a, b>` on a uniform grid.
fn inner(a: &[f64], b: &[f64], h: f64) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let s: f64 = a[..n].iter().zip(&b[..n]).map(|(x, y)| x * y).sum();
    h * (s - 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// The two conjugate SRG points of an input/output difference pair, or
/// `None` when the input difference vanishes.
fn srg_point(du: &[f64], dy: &[f64], h: f64) -> Option<[C64; 2]> {
    let nu = inner(du, du, h).sqrt();
    if nu < 1e-12 {
        return None;
    }
    // Real part <du, dy>/|du|^2; imaginary part from the component of dy
    // orthogonal to du, which avoids cancellation near the real axis.
    let re = inner(du, dy, h) / (nu * nu);
    let perp: Vec<f64> = dy.iter().zip(du).map(|(y, u)| y - re * u).collect();
    let z = C64::new(re, inner(&perp, &perp, h).max(0.0).sqrt() / nu);
    Some([z, z.conj()])
}

/// Sample points of the SRG (or the SG at zero) of `sys` from `n_pairs`
/// random input pairs. The non-incremental mode pairs each input with zero.
pub fn empirical_srg_samples(sys: &System, n_pairs: usize, mode: Mode, ens: &InputEnsemble, seed: u64) -> Result<Vec<C64>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_end = ens.horizon();
    let zero = match mode {
        Mode::NonIncremental => Some(sys.simulate(&|_| 0.0, t_end, ens.h)?),
        Mode::Incremental => None,
    };
    let mut out = Vec::with_capacity(2 * n_pairs);
    for _ in 0..n_pairs {
        let s1 = ens.draw(&mut rng);
        let a = sys.simulate(&|t| s1.eval(t), t_end, ens.h)?;
        let b = match &zero {
            Some(z) => z.clone(),
            None => {
                let s2 = ens.draw(&mut rng);
                sys.simulate(&|t| s2.eval(t), t_end, ens.h)?
            }
        };
        let du = diff(a.signal("u").expect("u"), b.signal("u").expect("u"));
        let dy = diff(a.signal("y").expect("y"), b.signal("y").expect("y"));
        out.extend(srg_point(&du, &dy, ens.h).into_iter().flatten());
    }
    Ok(out)
}

/// Largest truncated gain `||P_T dy|| / ||P_T du||` over trajectory pairs
/// (incremental) or single trajectories against zero (non-incremental).
/// Truncation times where `||P_T du||` is below 1e-3 of its final value are
/// skipped, since the ratio is dominated by round-off there.
pub fn gain_estimate(trajectories: &[Trajectory], mode: Mode) -> Result<f64, SimError> {
    let sig = |t: &Trajectory, n: &str| t.signal(n).map(<[f64]>::to_vec).unwrap_or_default();
    let pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = match mode {
        Mode::Incremental => {
            if trajectories.len() < 2 {
                return Err(SimError::TooFewTrajectories(2));
            }
            let mut v = Vec::new();
            for i in 0..trajectories.len() {
                for j in i + 1..trajectories.len() {
                    let (a, b) = (&trajectories[i], &trajectories[j]);
                    v.push((diff(&sig(a, "u"), &sig(b, "u")), diff(&sig(a, "y"), &sig(b, "y")), a.step()));
                }
            }
            v
        }
        Mode::NonIncremental => {
            if trajectories.is_empty() {
                return Err(SimError::TooFewTrajectories(1));
            }
            trajectories.iter().map(|t| (sig(t, "u"), sig(t, "y"), t.step())).collect()
        }
    };
    let mut best: f64 = 0.0;
    let mut any = false;
    for (du, dy, h) in pairs {
        let total = inner(&du, &du, h);
        if total.sqrt() < 1e-12 {
            continue;
        }
        any = true;
        let (mut eu, mut ey) = (0.0, 0.0);
        for k in 1..du.len().min(dy.len()) {
            eu += 0.5 * h * (du[k - 1] * du[k - 1] + du[k] * du[k]);
            ey += 0.5 * h * (dy[k - 1] * dy[k - 1] + dy[k] * dy[k]);
            if eu.sqrt() >= 1e-3 * total.sqrt() {
                best = best.max((ey / eu).sqrt());
            }
        }
    }
    if !any {
        return Err(SimError::TooFewTrajectories(1));
    }
    Ok(best)
}

/// Single-nonlinearity loops with reference `r` and a disturbance `d`
/// entering at the plant input.
#[derive(Clone, Debug)]
pub enum Topology {
    /// `y = G(r + d - phi(y))`.
    Lure { g: Tf, phi: Nonlinearity },
    /// Plant `y = G(u + d - phi(y))` under `u = K(r - y)`.
    ControlledLure { g: Tf, k: Tf, phi: Nonlinearity },
    /// Controller `u = K(r - y - phi(u))` driving `y = G(u + d)`.
    LureController { g: Tf, k: Tf, phi: Nonlinearity },
    /// Saturated actuator on a Lur'e plant: `u = phi_in(K(r - y))`,
    /// `y = G(u + d - phi_fb(y))`.
    SaturatedLure { g: Tf, k: Tf, phi_in: Nonlinearity, phi_fb: Nonlinearity },
}

struct Blocks {
    g: StateSpace,
    k: Option<StateSpace>,
}

impl Blocks {
    fn split(&self) -> usize {
        self.g.order()
    }
}

/// RK4 simulation of `top` from rest on `[0, t_end]`. Records `r`, `d`,
/// `e = r - y`, `u` (the plant input before `d`) and `y`.
pub fn simulate_lure(top: &Topology, r: &Signal, d: &Signal, t_end: f64, h: f64) -> Result<Trajectory, SimError> {
    let (g, k) = match top {
        Topology::Lure { g, .. } => (g, None),
        Topology::ControlledLure { g, k, .. } | Topology::LureController { g, k, .. } | Topology::SaturatedLure { g, k, .. } => {
            (g, Some(k))
        }
    };
    let blocks = Blocks { g: realize_state_space(g)?, k: k.map(realize_state_space).transpose()? };
    let n = blocks.g.order() + blocks.k.as_ref().map_or(0, StateSpace::order);
    let steps = grid_steps(t_end, h)?;

    // Loop signals (u, y) for state x at time t; derivatives when asked.
    let eval = |t: f64, x: &[f64], dx: Option<&mut [f64]>| -> (f64, f64) {
        let (xg, xk) = x.split_at(blocks.split());
        let (rt, dt) = (r.eval(t), d.eval(t));
        let g = &blocks.g;
        let (u, y) = match top {
            Topology::Lure { phi, .. } => {
                let y = solve_scalar(|y| y - g.output(xg, rt + dt - phi.eval(y)), 0.0);
                (rt - phi.eval(y), y)
            }
            Topology::ControlledLure { phi, .. } => {
                let kk = blocks.k.as_ref().expect("controller");
                let u_of = |y: f64| kk.output(xk, rt - y);
                let y = solve_scalar(|y| y - g.output(xg, u_of(y) + dt - phi.eval(y)), 0.0);
                (u_of(y), y)
            }
            Topology::LureController { phi, .. } => {
                let kk = blocks.k.as_ref().expect("controller");
                let u_of = |y: f64| solve_scalar(|u| u - kk.output(xk, rt - y - phi.eval(u)), 0.0);
                let y = solve_scalar(|y| y - g.output(xg, u_of(y) + dt), 0.0);
                (u_of(y), y)
            }
            Topology::SaturatedLure { phi_in, phi_fb, .. } => {
                let kk = blocks.k.as_ref().expect("controller");
                let u_of = |y: f64| phi_in.eval(kk.output(xk, rt - y));
                let y = solve_scalar(|y| y - g.output(xg, u_of(y) + dt - phi_fb.eval(y)), 0.0);
                (u_of(y), y)
            }
        };
        if let Some(dx) = dx {
            let (dg, dk) = dx.split_at_mut(blocks.split());
            let plant_in = match top {
                Topology::Lure { phi, .. } => rt + dt - phi.eval(y),
                Topology::ControlledLure { phi, .. } => u + dt - phi.eval(y),
                Topology::LureController { .. } => u + dt,
                Topology::SaturatedLure { phi_fb, .. } => u + dt - phi_fb.eval(y),
            };
            g.derivative(xg, plant_in, dg);
            if let Some(kk) = &blocks.k {
                let ctrl_in = match top {
                    Topology::LureController { phi, .. } => rt - y - phi.eval(u),
                    _ => rt - y,
                };
                kk.derivative(xk, ctrl_in, dk);
            }
        }
        (u, y)
    };

    let mut x = vec![0.0; n];
    let mut tr = Trajectory::with_signals(&["d", "e", "r", "u", "y"], steps + 1);
    let rhs = |t: f64, x: &[f64], dx: &mut [f64]| {
        eval(t, x, Some(dx));
    };
    for step in 0..=steps {
        let t = step as f64 * h;
        let (u, y) = eval(t, &x, None);
        if !(u.is_finite() && y.is_finite()) {
            return Err(SimError::AlgebraicLoop(t));
        }
        let rt = r.eval(t);
        tr.push(t, &[d.eval(t), rt - y, rt, u, y]);
        if step < steps {
            rk4_step(&rhs, t, &mut x, h);
            check_state(&x, t + h)?;
        }
    }
    Ok(tr)
}

fn sigma_max(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Lipschitz constant of the right-hand side of the saturated Lur'e loop in
/// the state `(x_K, x_G)`, for nonlinearities with Lipschitz constants
/// `l_in` (actuator) and `l_fb` (plant feedback) and strictly proper blocks:
/// `sigma(diag(A_K, A_G)) (1 + sigma(B_K C_G)) + sigma(B_G) (l_in sigma(C_K) + l_fb sigma(C_G))`.
pub fn lure_lipschitz_bound(g: &StateSpace, k: &StateSpace, l_in: f64, l_fb: f64) -> f64 {
    let (ng, nk) = (g.order(), k.order());
    let mut diag = DMatrix::zeros(ng + nk, ng + nk);
    diag.view_mut((0, 0), (nk, nk)).copy_from(&k.a);
    diag.view_mut((nk, nk), (ng, ng)).copy_from(&g.a);
    let bk_cg = &k.b * &g.c;
    sigma_max(&diag) * (1.0 + sigma_max(&bk_cg)) + g.b.norm() * (l_in * k.c.norm() + l_fb * g.c.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Region;
    use crate::lang::parse_expr;

    fn tf(s: &str) -> Tf {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_realizations() {
        let ss = realize_state_space(&tf("1/(s+1)")).unwrap();
        assert_eq!(ss.a, DMatrix::from_element(1, 1, -1.0));
        assert_eq!(ss.b[0], 1.0);
        assert_eq!(ss.c[0], 1.0);
        assert_eq!(ss.d, 0.0);
        let ss = realize_state_space(&tf("(s+2)/(s+1)")).unwrap();
        assert_eq!(ss.d, 1.0);
        assert_eq!((ss.a[(0, 0)], ss.c[0]), (-1.0, 1.0));
        assert!(matches!(realize_state_space(&tf("s+1")), Err(SimError::Improper(_))));
        let ss = realize_state_space(&tf("3")).unwrap();
        assert_eq!((ss.order(), ss.d), (0, 3.0));
    }

    #[test]
    fn realization_frequency_match() {
        for f in ["1/(s+1)", "(s+2)/(s+1)", "3/((s-2)(s/10+1))", "(2s^2+s+5)/(s^3+2s^2+3s+1)", "5 + 5s/(s/100+1)"] {
            let f = tf(f);
            let ss = realize_state_space(&f).unwrap();
            for k in 0..50 {
                let w = 10f64.powf(-2.0 + 4.0 * k as f64 / 49.0);
                let (a, b) = (f.freq(w), ss.freq(w));
                assert!((a - b).norm() <= 1e-6 * a.norm().max(1e-12), "{f} at {w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_input_zero_output() {
        let top = Topology::ControlledLure {
            g: tf("1/(s^2+0.3s-1)"),
            k: tf("5 + 5s/(s/100+1)"),
            phi: Nonlinearity::cubic(1.0, None).unwrap(),
        };
        let tr = simulate_lure(&top, &Signal::Zero, &Signal::Zero, 5.0, 1e-3).unwrap();
        assert!(tr.signal("y").unwrap().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn duffing_disturbance_rejection() {
        let top = Topology::ControlledLure {
            g: tf("1/(s^2+0.3s-1)"),
            k: tf("5 + 5s/(s/100+1)"),
            phi: Nonlinearity::cubic(1.0, None).unwrap(),
        };
        let d = Signal::Sum {
            terms: vec![
                Signal::Pulse { from: 5.0, to: 6.0, amplitude: 1.0 },
                Signal::Pulse { from: 15.0, to: 20.0, amplitude: -1.0 },
            ],
        };
        let tr = simulate_lure(&top, &Signal::Zero, &d, 25.0, 1e-3).unwrap();
        let y20 = tr.at("y", 20.0).unwrap();
        assert!(y20.abs() <= 0.25 * 1.05, "{y20}");
        assert!(tr.at("y", 25.0).unwrap().abs() < 0.05);
    }

    #[test]
    fn rk4_fourth_order() {
        let sys = System::lti(&tf("1/(s^2+0.5s+2)")).unwrap();
        let input = |t: f64| (1.3 * t).sin();
        let end = |h: f64| *sys.simulate(&input, 4.0, h).unwrap().signal("y").unwrap().last().unwrap();
        let (a, b, c) = (end(0.1), end(0.05), end(0.025));
        let ratio = (a - b).abs() / (b - c).abs();
        assert!(ratio >= 12.0, "{ratio}");
    }

    #[test]
    fn divergence_is_reported() {
        let sys = System::lti(&tf("1/(s-5)")).unwrap();
        assert!(matches!(sys.simulate(&|_| 1.0, 10.0, 1e-2), Err(SimError::Diverged { .. })));
    }

    #[test]
    fn word_feedback_matches_closed_loop() {
        let t = OperatorTable::new().with("G", Operator::Lti(tf("1/(s-1)"))).unwrap().with("phi", Operator::Nl(Nonlinearity::linear(3.0))).unwrap();
        let sys = System::from_word(&parse_expr("(G^-1 + phi)^-1").unwrap(), &t).unwrap();
        let cl = System::lti(&tf("1/(s+2)")).unwrap();
        let u = |t: f64| (0.7 * t).cos();
        let a = sys.simulate(&u, 5.0, 1e-3).unwrap();
        let b = cl.simulate(&u, 5.0, 1e-3).unwrap();
        let err = a.signal("y").unwrap().iter().zip(b.signal("y").unwrap()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn saturated_word_matches_topology() {
        let g = tf("3/((s-2)(s/10+1))");
        let k = tf("1/(s+1)");
        let (p1, p2) = (Nonlinearity::saturation(1.0), Nonlinearity::steep_saturation());
        let t = OperatorTable::new()
            .with("G", Operator::Lti(g.clone()))
            .unwrap()
            .with("K", Operator::Lti(k.clone()))
            .unwrap()
            .with("phi1", Operator::Nl(p1.clone()))
            .unwrap()
            .with("phi2", Operator::Nl(p2.clone()))
            .unwrap();
        let sys = System::from_word(&parse_expr("(1+((G^-1+phi2)^-1 phi1 K)^-1)^-1").unwrap(), &t).unwrap();
        let r = Signal::Sine { amplitude: 2.0, omega: 0.8, phase: 0.0 };
        let a = sys.simulate(&|t| r.eval(t), 20.0, 1e-3).unwrap();
        let b = simulate_lure(&Topology::SaturatedLure { g, k, phi_in: p1, phi_fb: p2 }, &r, &Signal::Zero, 20.0, 1e-3).unwrap();
        let err = a.signal("y").unwrap().iter().zip(b.signal("y").unwrap()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn empirical_identity_and_saturation() {
        let ens = InputEnsemble { window: 10.0, tail: 0.0, h: 1e-2, ..Default::default() };
        let id = System::static_map(&Nonlinearity::linear(1.0));
        let pts = empirical_srg_samples(&id, 20, Mode::Incremental, &ens, 1).unwrap();
        assert!(pts.iter().all(|z| (z - 1.0).norm() < 1e-9), "{pts:?}");
        let sat = System::static_map(&Nonlinearity::saturation(1.0));
        let ens = InputEnsemble { amplitude: 3.0, ..ens };
        let disk = crate::geom::disk_region(0.0, 1.0).unwrap();
        for mode in [Mode::Incremental, Mode::NonIncremental] {
            let pts = empirical_srg_samples(&sat, 40, mode, &ens, 7).unwrap();
            assert!(pts.iter().all(|&z| disk.contains(z)), "{mode:?}");
            assert!(pts.iter().any(|z| z.re < 0.9), "saturation should be active");
        }
    }

    #[test]
    fn empirical_lti_inside_srg() {
        let f = tf("2/(s^2+s+1)");
        let region: Region = crate::lti::srg_lti(&f).unwrap();
        let ens = InputEnsemble { window: 40.0, tail: 30.0, h: 5e-3, omega_max: 10.0, ..Default::default() };
        let pts = empirical_srg_samples(&System::lti(&f).unwrap(), 20, Mode::Incremental, &ens, 3).unwrap();
        for z in pts {
            assert!(region.contains(z) || region.distance(&Region::point_set(&[z]).unwrap()) < 1e-2, "{z}");
        }
    }

    #[test]
    fn gain_estimate_first_order_lag() {
        let sys = System::lti(&tf("1/(s+1)")).unwrap();
        let slow = sys.simulate(&|t| (0.01 * t).sin(), 300.0, 1e-2).unwrap();
        let g = gain_estimate(std::slice::from_ref(&slow), Mode::NonIncremental).unwrap();
        assert!(g <= 1.0 + 1e-6 && g > 0.95, "{g}");
        let doubled = sys.simulate(&|t| 2.0 * (0.01 * t).sin(), 300.0, 1e-2).unwrap();
        let g2 = gain_estimate(&[doubled], Mode::NonIncremental).unwrap();
        assert!((g - g2).abs() < 1e-9);
        assert!(gain_estimate(&[slow], Mode::Incremental).is_err());
    }

    #[test]
    fn lipschitz_structure() {
        let g = realize_state_space(&tf("3/((s-2)(s/10+1))")).unwrap();
        let k = realize_state_space(&tf("1/(s+1)")).unwrap();
        let l = lure_lipschitz_bound(&g, &k, 1.0, 2.0);
        let l_lin = lure_lipschitz_bound(&g, &k, 0.0, 0.0);
        // Only the nonlinear term depends on the Lipschitz constants, linearly.
        let extra = g.b.norm() * (k.c.norm() + 2.0 * g.c.norm());
        assert!((l - l_lin - extra).abs() < 1e-9 * l);
        assert!(l.is_finite() && l > 0.0);
    }
}

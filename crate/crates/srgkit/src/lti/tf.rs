use std::fmt;

use num_complex::Complex;

use super::roots::roots;
use super::{LtiError, Polynomial};
use crate::scalar::Scalar;
use crate::settings::{CANCEL_TOL, DEGREE_CAP, NEAR_CANCEL_TOL, POLE_CLASS_TOL};

/// Real rational function `num(s) / den(s)` with a monic denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction<T: Scalar> {
    num: Polynomial<T>,
    den: Polynomial<T>,
    label: String,
}

/// A zero/pole pair that was close but not cancelled during reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearCancellation {
    pub zero: Complex<f64>,
    pub pole: Complex<f64>,
    pub distance: f64,
}

impl fmt::Display for NearCancellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "near-cancellation: zero {:.6}{:+.6}j vs pole {:.6}{:+.6}j (distance {:.2e})",
            self.zero.re, self.zero.im, self.pole.re, self.pole.im, self.distance
        )
    }
}

impl<T: Scalar> TransferFunction<T> {
    /// Builds and reduces `num / den` at the default cancellation tolerance.
    pub fn new(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self, LtiError> {
        Ok(Self::with_report(num, den, CANCEL_TOL)?.0)
    }

    /// Builds and reduces, also returning near-cancellations that were kept.
    pub fn with_report(
        num: Polynomial<T>,
        den: Polynomial<T>,
        cancel_tol: f64,
    ) -> Result<(Self, Vec<NearCancellation>), LtiError> {
        Self::unreduced(num, den)?.reduce(cancel_tol)
    }

    /// Normalizes the denominator to be monic without cancelling anything.
    pub fn unreduced(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self, LtiError> {
        if den.is_zero() {
            return Err(LtiError::ZeroDenominator);
        }
        let lead = den.leading();
        if num.is_zero() {
            return Ok(Self::zero());
        }
        Ok(TransferFunction {
            num: num.scale(T::one() / lead),
            den: den.monic(),
            label: String::new(),
        })
    }

    pub fn constant(c: T) -> Self {
        TransferFunction {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
            label: String::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    /// The differentiator `s`.
    pub fn s() -> Self {
        TransferFunction {
            num: Polynomial::s(),
            den: Polynomial::one(),
            label: String::new(),
        }
    }

    pub fn num(&self) -> &Polynomial<T> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<T> {
        &self.den
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// `Some(c)` when the function is the constant `c`.
    pub fn as_constant(&self) -> Option<T> {
        match (self.num.degree(), self.den.degree()) {
            (None, _) => Some(T::zero()),
            (Some(0), Some(0)) => Some(self.num.coeff(0)),
            _ => None,
        }
    }

    fn num_degree(&self) -> usize {
        self.num.degree().unwrap_or(0)
    }

    fn den_degree(&self) -> usize {
        self.den.degree().unwrap_or(0)
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num_degree() <= self.den_degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num_degree() < self.den_degree()
    }

    /// Limit as `|s| -> inf`, or `None` for improper functions.
    pub fn value_at_infinity(&self) -> Option<T> {
        if self.is_strictly_proper() {
            Some(T::zero())
        } else if self.is_proper() {
            Some(self.num.leading() / self.den.leading())
        } else {
            None
        }
    }

    /// Removes common root pairs closer than `cancel_tol * (1 + |r|)`.
    ///
    /// For a root that is clustered in both polynomials (a repeated root), the
    /// tolerance is widened to `cancel_tol^(1/m)` to match the conditioning of a
    /// root of multiplicity `m`.
    pub fn reduce(&self, cancel_tol: f64) -> Result<(Self, Vec<NearCancellation>), LtiError> {
        if self.num.is_zero() {
            return Ok((Self::zero().with_label(self.label.clone()), Vec::new()));
        }
        if self.num_degree() == 0 || self.den_degree() == 0 {
            return Ok((self.clone(), Vec::new()));
        }
        let zs = roots(&self.num)?;
        let ps = roots(&self.den)?;
        let upper = |v: &[Complex<T>]| -> Vec<usize> {
            (0..v.len()).filter(|&i| v[i].im >= T::zero()).collect()
        };
        let (zu, pu) = (upper(&zs), upper(&ps));
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for &i in &zu {
            for &j in &pu {
                let (z, p) = (zs[i], ps[j]);
                if (z.im == T::zero()) != (p.im == T::zero()) {
                    continue;
                }
                pairs.push(((z - p).norm().to_f64_lossy(), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mult = |v: &[Complex<T>], i: usize| -> usize {
            let r = v[i];
            let band = T::of(1e-4) * (T::one() + r.norm());
            v.iter().filter(|&&w| (w - r).norm() <= band).count()
        };
        let (mut zused, mut pused) = (vec![false; zs.len()], vec![false; ps.len()]);
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        let mut near = Vec::new();
        for (d, i, j) in pairs {
            if zused[i] || pused[j] {
                continue;
            }
            let (z, p) = (zs[i], ps[j]);
            let scale = 1.0 + z.norm().to_f64_lossy();
            let m = mult(&zs, i).min(mult(&ps, j));
            let tol = T::floor_tol(cancel_tol).to_f64_lossy().powf(1.0 / m as f64);
            if d <= tol * scale {
                num = deflate(&num, z);
                den = deflate(&den, p);
                zused[i] = true;
                pused[j] = true;
            } else if d <= NEAR_CANCEL_TOL * scale {
                near.push(NearCancellation {
                    zero: Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy()),
                    pole: Complex::new(p.re.to_f64_lossy(), p.im.to_f64_lossy()),
                    distance: d,
                });
            }
        }
        let mut out = Self::unreduced(num, den)?;
        out.label = self.label.clone();
        Ok((out, near))
    }

    fn check_cap(n: Option<usize>, d: Option<usize>) -> Result<(), LtiError> {
        let degree = n.unwrap_or(0).max(d.unwrap_or(0));
        if degree > DEGREE_CAP {
            return Err(LtiError::DegreeOverflow { degree, cap: DEGREE_CAP });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, LtiError> {
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        let den = &self.den * &other.den;
        Self::check_cap(num.degree(), den.degree())?;
        if self.den == other.den {
            // Shared denominator: skip the squared factor entirely.
            let num = &self.num + &other.num;
            return Self::new(num, self.den.clone());
        }
        Self::new(num, den)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LtiError> {
        self.add(&other.scale(-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LtiError> {
        let num = &self.num * &other.num;
        let den = &self.den * &other.den;
        Self::check_cap(num.degree(), den.degree())?;
        Self::new(num, den)
    }

    pub fn div(&self, other: &Self) -> Result<Self, LtiError> {
        self.mul(&other.inverse()?)
    }

    pub fn inverse(&self) -> Result<Self, LtiError> {
        if self.num.is_zero() {
            return Err(LtiError::InverseOfZero);
        }
        Self::unreduced(self.den.clone(), self.num.clone())
    }

    pub fn scale(&self, a: T) -> Self {
        if a == T::zero() {
            return Self::zero();
        }
        TransferFunction {
            num: self.num.scale(a),
            den: self.den.clone(),
            label: String::new(),
        }
    }

    pub fn add_constant(&self, c: T) -> Result<Self, LtiError> {
        self.add(&Self::constant(c))
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        self.num.eval_c(s) / self.den.eval_c(s)
    }

    /// Frequency response `f(jw)`.
    pub fn freq(&self, w: T) -> Complex<T> {
        self.eval(Complex::new(T::zero(), w))
    }

    pub fn poles(&self) -> Result<Vec<Complex<T>>, LtiError> {
        if self.den_degree() == 0 {
            return Ok(Vec::new());
        }
        roots(&self.den)
    }

    pub fn zeros(&self) -> Result<Vec<Complex<T>>, LtiError> {
        if self.num.is_zero() || self.num_degree() == 0 {
            return Ok(Vec::new());
        }
        roots(&self.num)
    }

    /// Number of poles with `Re p > POLE_CLASS_TOL`.
    pub fn n_p(&self) -> Result<usize, LtiError> {
        let tol = T::floor_tol(POLE_CLASS_TOL);
        Ok(self.poles()?.iter().filter(|p| p.re > tol).count())
    }

    /// Poles with `|Re p| <= POLE_CLASS_TOL`.
    pub fn imaginary_axis_poles(&self) -> Result<Vec<Complex<T>>, LtiError> {
        let tol = T::floor_tol(POLE_CLASS_TOL);
        Ok(self.poles()?.into_iter().filter(|p| p.re.abs() <= tol).collect())
    }

    /// All poles strictly in the open left half-plane.
    pub fn is_stable(&self) -> Result<bool, LtiError> {
        let tol = T::floor_tol(POLE_CLASS_TOL);
        Ok(self.poles()?.iter().all(|p| p.re < -tol))
    }

    pub fn cast<U: Scalar>(&self) -> TransferFunction<U> {
        TransferFunction {
            num: self.num.cast(),
            den: self.den.cast(),
            label: self.label.clone(),
        }
    }
}

/// Divides out the linear (real root) or quadratic (conjugate pair) factor of `r`.
fn deflate<T: Scalar>(p: &Polynomial<T>, r: Complex<T>) -> Polynomial<T> {
    let factor = if r.im == T::zero() {
        Polynomial::new(vec![-r.re, T::one()])
    } else {
        Polynomial::new(vec![r.norm_sqr(), -(r.re + r.re), T::one()])
    };
    p.div_rem(&factor).0
}

impl<T: Scalar> fmt::Display for TransferFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tf;
    use approx::assert_abs_diff_eq;

    fn tf(s: &str) -> Tf {
        s.parse().unwrap()
    }

    #[test]
    fn add_constant_to_lag() {
        let f = tf("1/(s+1)").add(&Tf::one()).unwrap();
        assert_eq!(f.num().coeffs(), &[2.0, 1.0]);
        assert_eq!(f.den().coeffs(), &[1.0, 1.0]);
    }

    #[test]
    fn product_with_inverse_is_one() {
        for text in ["-2/(s^2+s+1)", "3/((s-2)*(s/10+1))", "(s+3)^2/(s*(s+1)^2)"] {
            let g = tf(text);
            let one = g.mul(&g.inverse().unwrap()).unwrap();
            assert_eq!(one.as_constant(), Some(1.0), "{text}");
        }
    }

    #[test]
    fn cancellation_reports_near_pairs() {
        let num = Polynomial::new(vec![1.0 + 1e-6, 1.0]);
        let den = Polynomial::new(vec![2.0, 3.0, 1.0]);
        let (f, near) = Tf::with_report(num, den, CANCEL_TOL).unwrap();
        assert_eq!(f.den().degree(), Some(2));
        assert_eq!(near.len(), 1);
        assert_abs_diff_eq!(near[0].distance, 1e-6, epsilon = 1e-9);
    }

    #[test]
    fn pole_classification() {
        assert_eq!(tf("-2/(s^2+s+1)").n_p().unwrap(), 0);
        assert_eq!(tf("3/((s-2)*(s/10+1))").n_p().unwrap(), 1);
        let f = tf("1/(s*(s+1))");
        assert_eq!(f.n_p().unwrap(), 0);
        assert_eq!(f.imaginary_axis_poles().unwrap().len(), 1);
        assert!(!f.is_stable().unwrap());
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert!(matches!(Tf::zero().inverse(), Err(LtiError::InverseOfZero)));
    }

    #[test]
    fn display_round_trips() {
        let g = tf("3/((s-2)*(s/10+1))");
        let back: Tf = g.to_string().parse().unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn degree_cap() {
        let g = tf("1/(s+1)^40");
        assert!(matches!(g.mul(&g), Err(LtiError::DegreeOverflow { degree: 80, .. })));
    }
}

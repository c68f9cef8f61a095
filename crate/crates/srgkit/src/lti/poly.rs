use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::scalar::Scalar;

/// Real polynomial in `s`, coefficients in ascending powers.
///
/// The zero polynomial is stored as an empty coefficient list.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T: Scalar> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs; imaginary round-off in the product is discarded.
    pub fn from_roots(roots: &[Complex<T>]) -> Self {
        let mut acc: Vec<Complex<T>> = vec![Complex::new(T::one(), T::zero())];
        for &r in roots {
            let mut next = vec![Complex::new(T::zero(), T::zero()); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if *c == T::zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().copied().unwrap_or_else(T::zero)
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
    }

    pub fn eval_c(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
    }

    /// Sum of `|c_k| |z|^k`, the natural scale for residual tests at `z`.
    pub fn eval_abs(&self, r: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * r + c.abs())
    }

    pub fn scale(&self, a: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * a).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * T::of(k as f64))
                .collect(),
        )
    }

    /// Divides so that the leading coefficient becomes one. Zero stays zero.
    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(T::one() / self.leading())
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Polynomial long division, `self = q * d + r` with `deg r < deg d`.
    ///
    /// # Panics
    /// Panics if `d` is the zero polynomial.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let Some(nd) = self.degree() else {
            return (Self::zero(), Self::zero());
        };
        if nd < dd {
            return (Self::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut q = vec![T::zero(); nd - dd + 1];
        let lead = d.leading();
        for k in (0..=nd - dd).rev() {
            let c = rem[k + dd] / lead;
            q[k] = c;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= c * dc;
            }
            rem[k + dd] = T::zero();
        }
        rem.truncate(dd);
        (Self::new(q), Self::new(rem))
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    /// Casts coefficients to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Polynomial<U> {
        Polynomial::new(self.coeffs.iter().map(|c| U::of(c.to_f64_lossy())).collect())
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    /// Descending powers of `s`, parseable by the transfer-function reader.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == T::zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c < T::zero() {
                    write!(f, "-")?;
                }
            } else if c < T::zero() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            let unit = mag == T::one();
            match k {
                0 => write!(f, "{mag}")?,
                1 if unit => write!(f, "s")?,
                1 => write!(f, "{mag}*s")?,
                _ if unit => write!(f, "s^{k}")?,
                _ => write!(f, "{mag}*s^{k}")?,
            }
        }
        Ok(())
    }
}

//! Durand-Kerner (Weierstrass) simultaneous root iteration.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LtiError, Polynomial};
use crate::scalar::Scalar;
use crate::settings::{ROOT_MAX_ITER, ROOT_TOL};

/// Stopping rule and restart budget for [`roots_with`].
#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            tol: ROOT_TOL,
            max_iter: ROOT_MAX_ITER,
            restarts: 6,
            seed: 0x5eed,
        }
    }
}

/// All complex roots of `p` with default options.
pub fn roots<T: Scalar>(p: &Polynomial<T>) -> Result<Vec<Complex<T>>, LtiError> {
    roots_with(p, &RootOptions::default())
}

/// All complex roots of `p`, sorted by real then imaginary part.
///
/// Exact zero roots are deflated before iterating; complex roots are returned in
/// exact conjugate pairs and near-real roots are snapped to the real axis.
pub fn roots_with<T: Scalar>(
    p: &Polynomial<T>,
    opts: &RootOptions,
) -> Result<Vec<Complex<T>>, LtiError> {
    let Some(deg) = p.degree() else {
        return Err(LtiError::ZeroPolynomial);
    };
    let zero = Complex::new(T::zero(), T::zero());
    let c = p.coeffs();
    let nzero = c.iter().take_while(|&&x| x == T::zero()).count();
    let mut out = vec![zero; nzero];
    let reduced: Vec<T> = c[nzero..].iter().map(|&x| x / p.leading()).collect();
    let n = deg - nzero;
    match n {
        0 => {}
        1 => out.push(Complex::new(-reduced[0], T::zero())),
        2 => out.extend(quadratic(reduced[1], reduced[0])),
        _ => out.extend(durand_kerner(&Polynomial::new(reduced), opts)?),
    }
    Ok(finish(out))
}

/// Roots of `s^2 + b s + c` without cancellation.
fn quadratic<T: Scalar>(b: T, c: T) -> [Complex<T>; 2] {
    let two = T::of(2.0);
    let disc = b * b - T::of(4.0) * c;
    if disc >= T::zero() {
        let q = -(b + b.signum() * disc.sqrt()) / two;
        if q == T::zero() {
            return [Complex::new(T::zero(), T::zero()); 2];
        }
        [Complex::new(q, T::zero()), Complex::new(c / q, T::zero())]
    } else {
        let im = (-disc).sqrt() / two;
        let re = -b / two;
        [Complex::new(re, im), Complex::new(re, -im)]
    }
}

fn durand_kerner<T: Scalar>(
    monic: &Polynomial<T>,
    opts: &RootOptions,
) -> Result<Vec<Complex<T>>, LtiError> {
    let n = monic.degree().unwrap_or(0);
    let tol = T::floor_tol(opts.tol);
    // Fujiwara-style bound on root moduli.
    let radius = monic.coeffs()[..n]
        .iter()
        .enumerate()
        .map(|(k, a)| a.abs().powf(T::one() / T::of((n - k) as f64)))
        .fold(T::zero(), T::max)
        * T::of(2.0);
    let radius = radius.max(T::of(1e-3));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(T, Vec<Complex<T>>)> = None;
    for attempt in 0..=opts.restarts {
        let phase = if attempt == 0 { 0.4 } else { rng.random::<f64>() * std::f64::consts::TAU };
        let scale = if attempt == 0 { 1.0 } else { 0.5 + rng.random::<f64>() };
        let mut z: Vec<Complex<T>> = (0..n)
            .map(|k| {
                let ang = T::of(phase + std::f64::consts::TAU * k as f64 / n as f64 + 0.25);
                Complex::from_polar(radius * T::of(scale), ang)
            })
            .collect();
        let converged = iterate(monic, &mut z, tol, opts.max_iter);
        let res = residual(monic, &z);
        if converged {
            return Ok(polish(monic, z));
        }
        if best.as_ref().is_none_or(|(r, _)| res < *r) {
            best = Some((res, z));
        }
    }
    // Accept a non-converged run only when its residual is tiny; multiple
    // roots converge linearly and may stall just above the update tolerance.
    match best {
        Some((res, z)) if res <= T::floor_tol(1e-6) => Ok(polish(monic, z)),
        _ => Err(LtiError::RootsNotConverged { degree: n }),
    }
}

fn iterate<T: Scalar>(p: &Polynomial<T>, z: &mut [Complex<T>], tol: T, max_iter: usize) -> bool {
    let n = z.len();
    for _ in 0..max_iter {
        let mut worst = T::zero();
        for i in 0..n {
            let zi = z[i];
            let mut denom = Complex::new(T::one(), T::zero());
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let d = zi - zj;
                    denom *= if d.norm() == T::zero() { Complex::new(tol, tol) } else { d };
                }
            }
            let step = p.eval_c(zi) / denom;
            if !step.re.is_finite() || !step.im.is_finite() {
                return false;
            }
            z[i] = zi - step;
            worst = worst.max(step.norm() / (T::one() + z[i].norm()));
        }
        if worst <= tol {
            return true;
        }
    }
    false
}

/// Largest residual `|p(z)|` scaled by `sum |a_k| |z|^k`.
fn residual<T: Scalar>(p: &Polynomial<T>, z: &[Complex<T>]) -> T {
    z.iter()
        .map(|&zi| p.eval_c(zi).norm() / p.eval_abs(zi.norm()).max(T::min_positive_value()))
        .fold(T::zero(), T::max)
}

/// Two Newton steps per root, kept only when they reduce the residual.
fn polish<T: Scalar>(p: &Polynomial<T>, z: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let dp = p.derivative();
    z.into_iter()
        .map(|mut zi| {
            for _ in 0..2 {
                let d = dp.eval_c(zi);
                if d.norm() == T::zero() {
                    break;
                }
                let cand = zi - p.eval_c(zi) / d;
                if cand.re.is_finite() && p.eval_c(cand).norm() < p.eval_c(zi).norm() {
                    zi = cand;
                } else {
                    break;
                }
            }
            zi
        })
        .collect()
}

/// Snaps near-real roots, pairs conjugates exactly, and sorts.
fn finish<T: Scalar>(mut r: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let snap = T::floor_tol(1e-9);
    for z in r.iter_mut() {
        if z.im.abs() <= snap * (T::one() + z.re.abs()) {
            z.im = T::zero();
        }
    }
    let mut used = vec![false; r.len()];
    for i in 0..r.len() {
        if used[i] || r[i].im <= T::zero() {
            continue;
        }
        let target = r[i].conj();
        let partner = (0..r.len())
            .filter(|&j| !used[j] && j != i && r[j].im < T::zero())
            .min_by(|&a, &b| {
                (r[a] - target).norm().partial_cmp(&(r[b] - target).norm()).unwrap()
            });
        if let Some(j) = partner {
            let re = (r[i].re + r[j].re) / T::of(2.0);
            let im = (r[i].im - r[j].im) / T::of(2.0);
            r[i] = Complex::new(re, im);
            r[j] = Complex::new(re, -im);
            used[i] = true;
            used[j] = true;
        }
    }
    r.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(c: &[f64]) -> Polynomial<f64> {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn underdamped_pair() {
        let r = roots(&p(&[1.0, 1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(r[0].re, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r[0].im, -(0.75f64.sqrt()), epsilon = 1e-14);
        assert_eq!(r[1], r[0].conj());
    }

    #[test]
    fn zero_roots_are_exact() {
        // s^2 (s + 1) (s - 2)
        let q = p(&[0.0, 0.0, -2.0, -1.0, 1.0]);
        let r = roots(&q).unwrap();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert_abs_diff_eq!(r[0].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[3].re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn cubic_and_quintic_residuals() {
        let q = p(&[6.0, -5.0, -2.0, 1.0]); // (s-1)(s+2)(s-3)
        let r = roots(&q).unwrap();
        let want = [-2.0, 1.0, 3.0];
        for (z, w) in r.iter().zip(want) {
            assert_abs_diff_eq!(z.re, w, epsilon = 1e-10);
            assert_eq!(z.im, 0.0);
        }
        let q = p(&[1.0, 3.0, -2.0, 0.5, 4.0, 1.0]);
        for z in roots(&q).unwrap() {
            assert!(q.eval_c(z).norm() < 1e-9 * q.eval_abs(z.norm()));
        }
    }

    #[test]
    fn double_root_converges() {
        let q = p(&[1.0, 2.0, 1.0]); // quadratic path
        assert!(roots(&q).unwrap().iter().all(|z| (z.re + 1.0).abs() < 1e-7));
        let q = p(&[-2.0, -3.0, 0.0, 1.0]); // (s+1)^2 (s-2)
        let r = roots(&q).unwrap();
        assert!((r[0].re + 1.0).abs() < 1e-6 && (r[1].re + 1.0).abs() < 1e-6);
        assert_abs_diff_eq!(r[2].re, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn f32_roots() {
        let q = Polynomial::<f32>::new(vec![2.0, 3.0, 1.0]);
        let r = roots(&q).unwrap();
        assert!((r[0].re + 2.0).abs() < 1e-5 && (r[1].re + 1.0).abs() < 1e-5);
    }
}

//! Scaled relative graph (SRG) analysis of SISO feedback interconnections.
//!
//! The crate computes stability verdicts and (incremental) L2-gain bounds for
//! interconnections of LTI transfer functions and static nonlinearities. Regions
//! of the complex plane are manipulated with a small set calculus ([`calculus`]),
//! LTI blocks contribute their Nyquist-aware extended SRG ([`lti`]), and words of
//! the interconnection language ([`lang`]) are folded into a single bound.
//!
//! ```
//! use srgkit::{Tf, lti};
//!
//! let l: Tf = "-2/(s^2+s+1)".parse().unwrap();
//! let verdict = lti::nyquist_criterion(&l).unwrap();
//! assert_eq!((verdict.n_p, verdict.n_n, verdict.n_z), (0, 1, 1));
//! ```

pub mod analysis;
pub mod calculus;
pub mod geom;
pub mod lang;
pub mod lti;
pub mod nonlin;
pub mod scalar;
pub mod settings;
pub mod sim;

pub use num_complex::Complex;

/// Double-precision complex number used throughout the geometry layer.
pub type C64 = Complex<f64>;
/// Real-coefficient polynomial in `s` over `f64`.
pub type Poly = lti::Polynomial<f64>;
/// Transfer function over `f64`.
pub type Tf = lti::TransferFunction<f64>;
/// Transfer function over `f32`, for callers that only need rational arithmetic.
pub type Tf32 = lti::TransferFunction<f32>;

pub use geom::Region;
pub use settings::Settings;

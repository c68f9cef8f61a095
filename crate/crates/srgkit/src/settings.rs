//! Numerical defaults. Every value can be overridden through [`Settings`].

use serde::{Deserialize, Serialize};

/// Geometric tolerance for exact shapes.
pub const GEOM_TOL: f64 = 1e-9;
/// Root-pair cancellation tolerance in rational reduction.
pub const CANCEL_TOL: f64 = 1e-8;
/// Pairs closer than this but not cancelled are reported as near-cancellations.
pub const NEAR_CANCEL_TOL: f64 = 1e-4;
/// Durand-Kerner stopping tolerance.
pub const ROOT_TOL: f64 = 1e-12;
/// Durand-Kerner iteration budget per attempt.
pub const ROOT_MAX_ITER: usize = 1000;
/// Real parts within this band count as imaginary-axis roots.
pub const POLE_CLASS_TOL: f64 = 1e-9;
/// Maximum polynomial degree produced by rational arithmetic.
pub const DEGREE_CAP: usize = 64;
/// Radius of the right semicircles around imaginary-axis poles.
pub const INDENT_RADIUS: f64 = 1e-6;
/// Radius of the closing arc of the D-contour.
pub const CONTOUR_RADIUS: f64 = 1e7;
/// Magnitudes beyond this are treated as the point at infinity.
pub const FAR: f64 = 1e6;

/// Tunable numerical parameters shared by the LTI and geometry layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub geom_tol: f64,
    pub boundary_samples: usize,
    pub contour_grid: usize,
    pub face_grid: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
    pub refine_fraction: f64,
    pub max_curve_points: usize,
    pub indent_radius: f64,
    pub contour_radius: f64,
    pub cancel_tol: f64,
    pub degree_cap: usize,
    pub winding_frac_tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            geom_tol: GEOM_TOL,
            boundary_samples: 2048,
            contour_grid: 512,
            face_grid: 400,
            omega_min: 1e-3,
            omega_max: 1e4,
            omega_points: 600,
            refine_fraction: 0.01,
            max_curve_points: 40_000,
            indent_radius: INDENT_RADIUS,
            contour_radius: CONTOUR_RADIUS,
            cancel_tol: CANCEL_TOL,
            degree_cap: DEGREE_CAP,
            winding_frac_tol: 0.1,
        }
    }
}

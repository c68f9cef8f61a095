//! Conjugate-symmetric regions of the extended complex plane.
//!
//! A [`Region`] carries sampled boundary polylines for metric queries and an
//! exact membership predicate built up alongside every operation. Disks
//! centered on the real axis are tracked structurally so that inversion,
//! scaling, sums and radii stay exact for them.

mod contour;
mod flags;
mod hull;
mod index;
mod io;
mod ops;
mod region;
mod shape;

use thiserror::Error;

pub use flags::{arc_property_check, chord_property_check, ArcSide};
pub use hull::{arc_min, hconvex_hull};
pub use io::{region_json, region_svg, FlagsDoc, RegionDoc};
pub use ops::{
    affine_region, minkowski_sum, minkowski_sum_with, mobius_inverse, scale_region, set_product,
    set_product_with, shift_region,
};
pub use region::{contains, disk_region, region_distance, region_radius, Curve, Flag, Region, Structure};
pub(crate) use region::{union_with_winding, winding_member};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("invalid interval [{alpha}, {beta}]: need alpha <= beta")]
    InvalidInterval { alpha: f64, beta: f64 },
    #[error("scaling by zero collapses the region")]
    DegenerateScale,
    #[error("product of a region containing 0 with an unbounded region is indeterminate")]
    IndeterminateProduct,
    #[error("empty region")]
    EmptyRegion,
}

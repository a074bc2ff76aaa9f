//! Smocked metric spaces: a plane with a periodic family of disjoint
//! compact "stitches", each collapsed to a point, metrized by minimal
//! segment-chain length.
//!
//! The crate provides:
//! - pattern construction, parsing and window enumeration ([`pattern`]);
//! - the exact quotient pseudometric with witness paths ([`metric`]),
//!   plus a batch evaluator for large experiments ([`field`]);
//! - smocking constants: separation factor, stitch lengths and the
//!   certified depth bracket ([`constants`]);
//! - ball preimage rasters, frontier stitch sets and ball-growth
//!   verification ([`raster`], [`balls`]);
//! - the closed-form stitch distances and limit norms with deviation
//!   bounds ([`norms`]);
//! - Gromov-Hausdorff machinery: correspondences, Hausdorff distance and
//!   the rescaling experiments that witness tangent cones at infinity
//!   ([`gh`]);
//! - SVG / PGM emission for ball figures ([`render`]).

pub mod balls;
pub mod constants;
pub mod error;
pub mod field;
pub mod geom;
pub mod gh;
pub mod metric;
pub mod norms;
pub mod pattern;
pub mod raster;
pub mod render;

pub use error::{Error, Result};
pub use geom::{BoundingBox, Point2, Segment};
pub use pattern::{builtin_pattern, load_pattern, parse_pattern, SmockingPattern, Stitch, StitchId};

/// Default tolerance for geometric comparisons (lengths).
pub const GEOM_TOL: f64 = 1e-9;

/// Tolerance for values that should be exact up to f64 rounding.
pub const EXACT_TOL: f64 = 1e-12;

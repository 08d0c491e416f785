//! Intrinsic (arc-length) metric on the unit sphere of a planar norm.
//!
//! For a norm `‖·‖_X` on `R²` the distance between two points of its unit
//! sphere `S_X` is the length, measured in `‖·‖_X`, of the shorter boundary arc
//! joining them. It is always within a factor 2 of `‖x − y‖_X`, with `π/2` for
//! the Euclidean circle. This crate computes these distances with certified
//! brackets, computes the maximal-area ellipse inside a symmetric convex body
//! (its John ellipse), and checks the surrounding inequalities numerically.
//!
//! ```
//! use intrinsic_sphere::{intrinsic_distance, NormSpec, Vec2};
//!
//! let square = NormSpec::linf();
//! let d = intrinsic_distance(&square, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), 1e-9).unwrap();
//! assert!((d.value - 2.0).abs() < 1e-12);
//! ```

pub mod cli;
pub mod error;
pub mod geometry;
pub mod john;
pub mod metric;
pub mod norms;
pub mod optimize;
pub mod sampling;
pub mod vec2;
pub mod verify;

pub use error::{Error, Result};
pub use john::{
    change_of_basis, inner_john_ellipse, verify_john, Ellipse, JohnCertificate,
};
pub use metric::{
    arc_length, circumference, distance_ratio, intrinsic_distance, polyline_length, DistanceResult,
    PolylinePath,
};
pub use norms::{
    normalize_norm, sandwich_constants, section_norm, validate_norm, NormSpec, NormSpecN,
    SandwichConstants,
};
pub use sampling::NormFamily;
pub use vec2::{Mat2, Vec2};
pub use verify::{ratio_search, CheckReport, MainTheoremReport, RatioSearchResult};

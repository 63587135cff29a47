//! Certified computations on attractors of the two-map systems
//! `T_m(v) = Mv - u`, `T_p(v) = Mv + u` in the plane.

pub mod affine;
pub mod bounds;
pub mod error;
pub mod expansion;
pub mod geom;
pub mod hull;
pub mod membership;
pub mod polygon;
pub mod project;
pub mod render;
pub mod system;
pub mod uniqueness;
pub mod word;

/// Default absolute tolerance for comparisons and tie detection.
pub const TAU: f64 = 1e-9;

pub use affine::{affine_of_word, AffineMap};
pub use bounds::{bounding_set, BoundingSet};
pub use error::{Error, Result};
pub use geom::{Mat2, Vec2};
pub use polygon::ConvexPolygon;
pub use project::{project, project_prefix};
pub use system::{normalize_system, Case, SystemSpec};
pub use word::{EventualAddress, Symbol, Word};

//! Guaranteed outer bounds for the attractor.

use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::polygon::ConvexPolygon;
use crate::system::{Case, SystemSpec};

/// Sides of the polygon used when a disc has to take part in polygon geometry.
pub const DISC_SIDES: usize = 64;

// Relative padding absorbing rounding in the closed-form radii.
const PAD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundingSet {
    /// `adapted` is set when the polygon came from a norm adapted to a Jordan block.
    Polygon { polygon: ConvexPolygon, adapted: bool },
    Disc { center: Vec2, radius: f64 },
}

impl BoundingSet {
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        match self {
            BoundingSet::Polygon { polygon, .. } => polygon.contains(p, tol),
            BoundingSet::Disc { center, radius } => p.dist(*center) <= radius + tol,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            BoundingSet::Polygon { polygon, .. } => polygon.diameter(),
            BoundingSet::Disc { radius, .. } => 2.0 * radius,
        }
    }

    /// Diameter of the image under `f`.
    pub fn image_diameter(&self, f: &AffineMap) -> f64 {
        match self {
            BoundingSet::Polygon { polygon, .. } => polygon.transformed(f).diameter(),
            BoundingSet::Disc { radius, .. } => 2.0 * radius * f.linear.spectral_norm(),
        }
    }

    /// `max <x, d>` over the set.
    pub fn support(&self, d: Vec2) -> f64 {
        match self {
            BoundingSet::Polygon { polygon, .. } => polygon.support(d),
            BoundingSet::Disc { center, radius } => center.dot(d) + radius * d.norm(),
        }
    }

    /// `max |L x|` over the set.
    pub fn support_norm_bound(&self, linear: Mat2) -> f64 {
        match self {
            BoundingSet::Polygon { polygon, .. } => polygon
                .vertices
                .iter()
                .map(|v| linear.apply(*v).norm())
                .fold(0.0, f64::max),
            BoundingSet::Disc { center, radius } => {
                linear.apply(*center).norm() + radius * linear.spectral_norm()
            }
        }
    }

    /// A polygon containing the set (discs are circumscribed).
    pub fn to_polygon(&self) -> ConvexPolygon {
        match self {
            BoundingSet::Polygon { polygon, .. } => polygon.clone(),
            BoundingSet::Disc { center, radius } => {
                ConvexPolygon::circumscribed(*center, *radius, DISC_SIDES)
            }
        }
    }
}

/// A set containing the whole attractor, from closed-form geometric series.
///
/// Real cases get the coordinatewise box, the complex case the disc of radius
/// `1/(1-|κ|)`. A Jordan block has operator norm above one, so the series is
/// summed in coordinates where the off-diagonal entry is `ε = (1-ν)/2`; the
/// resulting disc is returned as its bounding box in the original coordinates.
pub fn bounding_set(spec: &SystemSpec) -> BoundingSet {
    match spec.case() {
        Case::PositiveReal { lambda, mu } | Case::MixedReal { lambda, mu } => {
            let rx = (1.0 + PAD) / (1.0 - lambda);
            let ry = (1.0 + PAD) / (1.0 - mu);
            BoundingSet::Polygon {
                polygon: ConvexPolygon::rect(-rx, rx, -ry, ry),
                adapted: false,
            }
        }
        Case::Complex { re, im } => BoundingSet::Disc {
            center: Vec2::ZERO,
            radius: (1.0 + PAD) / (1.0 - re.hypot(im)),
        },
        Case::Jordan { nu } => {
            let r = adapted_jordan_radius(nu.abs()).expect("valid spec has |nu| < 1");
            let eps = (1.0 - nu.abs()) / 2.0;
            let (rx, ry) = (r * (1.0 + PAD), eps * r * (1.0 + PAD));
            BoundingSet::Polygon {
                polygon: ConvexPolygon::rect(-rx, rx, -ry, ry),
                adapted: true,
            }
        }
    }
}

/// Radius of the attractor in the norm `‖(x, y/ε)‖₂`, `ε = (1-ν)/2`, in which the
/// block `[[ν, 1], [0, ν]]` has norm at most `ν + ε < 1`.
pub fn adapted_jordan_radius(nu: f64) -> Result<f64> {
    let eps = (1.0 - nu) / 2.0;
    let contraction = nu + eps;
    if !(0.0..1.0).contains(&contraction) {
        return Err(Error::NotContracting(contraction));
    }
    // ‖u'‖ = 1/ε for u = (0, 1)
    Ok(1.0 / (eps * (1.0 - contraction)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::affine_of_word;

    #[test]
    fn complex_disc_radius() {
        let spec = SystemSpec::complex(0.3, 0.4).unwrap();
        match bounding_set(&spec) {
            BoundingSet::Disc { radius, .. } => assert!((radius - 2.0).abs() < 1e-11),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn positive_real_box() {
        let spec = SystemSpec::positive_real(0.5, 0.75).unwrap();
        let b = bounding_set(&spec);
        assert!((b.support(Vec2::new(1.0, 0.0)) - 2.0).abs() < 1e-11);
        assert!((b.support(Vec2::new(0.0, -1.0)) - 4.0).abs() < 1e-11);
    }

    #[test]
    fn maps_send_bound_into_itself_for_box_and_disc() {
        for spec in [
            SystemSpec::mixed_real(0.6, 0.9).unwrap(),
            SystemSpec::complex(-0.4, 0.6).unwrap(),
        ] {
            let b = bounding_set(&spec);
            let poly = b.to_polygon();
            for w in ["m", "p"] {
                let f = affine_of_word(&spec, &w.parse().unwrap());
                for v in poly.transformed(&f).vertices {
                    // circumscribed polygon of a disc is only nested up to its own slack
                    let slack = if matches!(b, BoundingSet::Disc { .. }) { 0.01 * b.diameter() } else { 1e-12 };
                    assert!(poly.contains(v, slack), "{spec} {w}");
                }
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::geom::{Mat2, Vec2};
use crate::system::SystemSpec;
use crate::word::{Symbol, Word};

/// `x ↦ linear · x + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: Mat2,
    pub offset: Vec2,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        linear: Mat2::IDENTITY,
        offset: Vec2::ZERO,
    };

    pub fn new(linear: Mat2, offset: Vec2) -> Self {
        AffineMap { linear, offset }
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        self.linear.apply(v) + self.offset
    }

    /// `self ∘ inner`, i.e. `inner` is applied first.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            linear: self.linear * inner.linear,
            offset: self.linear.apply(inner.offset) + self.offset,
        }
    }

    /// The unique fixed point, if `I - linear` is invertible.
    pub fn fixed_point(&self) -> Option<Vec2> {
        (Mat2::IDENTITY - self.linear)
            .inverse()
            .map(|inv| inv.apply(self.offset))
    }

    pub fn max_abs_diff(&self, other: &AffineMap) -> f64 {
        self.linear
            .max_abs_diff(other.linear)
            .max((self.offset - other.offset).norm_inf())
    }
}

/// `T_s` for a single symbol.
pub fn symbol_map(spec: &SystemSpec, s: Symbol) -> AffineMap {
    AffineMap::new(spec.matrix(), spec.translation() * s.value())
}

/// `T_{w_0} ∘ T_{w_1} ∘ … ∘ T_{w_{k-1}}`, so that `π(w·t) = map(π(t))`.
pub fn affine_of_word(spec: &SystemSpec, w: &Word) -> AffineMap {
    let m = spec.matrix();
    let u = spec.translation();
    let mut linear = Mat2::IDENTITY;
    let mut offset = Vec2::ZERO;
    for s in w.iter() {
        offset += linear.apply(u) * s.value();
        linear = linear * m;
    }
    AffineMap { linear, offset }
}

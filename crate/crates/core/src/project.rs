//! The projection `π(a_0 a_1 …) = Σ a_i M^i u` from addresses to the attractor.

use crate::affine::{affine_of_word, AffineMap};
use crate::bounds::bounding_set;
use crate::geom::{Mat2, Vec2};
use crate::system::SystemSpec;
use crate::word::{EventualAddress, Word};

/// Exact value of an eventually periodic address: the period's affine map has a
/// unique fixed point, which is `π(period^∞)`; the preperiod maps it into place.
pub fn project(spec: &SystemSpec, addr: &EventualAddress) -> Vec2 {
    let cycle = affine_of_word(spec, &addr.period);
    let tail = cycle
        .fixed_point()
        .expect("contracting period map always has a fixed point");
    affine_of_word(spec, &addr.preperiod).apply(tail)
}

/// `π(w·t)` for unknown `t`: the image of the origin under the word map, and a
/// radius bounding its distance to every point of the cylinder `[w]`.
pub fn project_prefix(spec: &SystemSpec, w: &Word) -> (Vec2, f64) {
    let f = affine_of_word(spec, w);
    let bound = bounding_set(spec);
    (f.offset, bound.image_diameter(&f))
}

/// Partial sum `Σ_{i<|w|} a_i M^i u`, the same point as `project_prefix`.
pub fn project_finite(spec: &SystemSpec, w: &Word) -> Vec2 {
    affine_of_word(spec, w).offset
}

/// Precomputed `M^i u` for fast evaluation of many prefixes of a fixed length.
#[derive(Clone, Debug)]
pub struct PowerTable {
    terms: Vec<Vec2>,
    tail: Mat2,
}

impl PowerTable {
    pub fn new(spec: &SystemSpec, len: usize) -> Self {
        let m = spec.matrix();
        let mut v = spec.translation();
        let mut terms = Vec::with_capacity(len);
        let mut tail = Mat2::IDENTITY;
        for _ in 0..len {
            terms.push(v);
            v = m.apply(v);
            tail = tail * m;
        }
        PowerTable { terms, tail }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Vec2] {
        &self.terms
    }

    /// `M^len`
    pub fn tail_linear(&self) -> Mat2 {
        self.tail
    }

    /// Sum over the digits given as bits (bit i set means `p` at position i).
    pub fn eval_bits(&self, bits: u64) -> Vec2 {
        let mut acc = Vec2::ZERO;
        for (i, t) in self.terms.iter().enumerate().take(64) {
            if bits >> i & 1 == 1 {
                acc += *t;
            } else {
                acc += -*t;
            }
        }
        acc
    }

    pub fn eval_signs(&self, signs: &[f64]) -> Vec2 {
        self.terms
            .iter()
            .zip(signs)
            .fold(Vec2::ZERO, |acc, (t, s)| acc + *t * *s)
    }

    /// The map of the prefix given by `signs`, for cylinder geometry.
    pub fn map_of_signs(&self, signs: &[f64]) -> AffineMap {
        AffineMap::new(self.tail, self.eval_signs(signs))
    }
}

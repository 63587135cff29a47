//! Lower bounds on the set of points with a unique address.
//!
//! Words `u = a_1…a_l`, `v = b_1…b_k`, `w = c_1…c_n` certify that every infinite
//! concatenation of `uv` and `uw` has a unique address when, for every `i`
//! and `j`,
//!
//! * `π[a_i…a_l v u]` misses `π[ā_i]`,
//! * `π[b_j…b_k u]` misses `π[b̄_j]`,
//!
//! and likewise with `w` in place of `v`. Each cylinder image is
//! over-approximated by the word map applied to a convex set containing `A`,
//! so a positive separating-axis margin between the two bounds is a proof of
//! disjointness. Overlapping bounds are split, the larger first, down to a
//! fixed depth; failure to separate is inconclusive, never a disproof.

pub mod classify;
pub mod code;
pub mod thue_morse;

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use classify::{
    classify_beta, classify_mixed_equal, classify_rational, golden_ratio, EqualGeometry,
    MixedEqualClassification, RationalClassification, Threshold, UniquenessClass,
};
pub use code::{code_entropy, code_growth_root, is_unambiguous};
pub use thue_morse::{komornik_loreti, thue_morse, thue_morse_bit};

use crate::affine::affine_of_word;
use crate::bounds::bounding_set;
use crate::error::{Error, Result};
use crate::hull::{extreme_sequence, outer_hull};
use crate::polygon::ConvexPolygon;
use crate::system::{Case, SystemSpec};
use crate::word::{Symbol, Word};
use crate::TAU;

/// Relative truncation used for the convex set seeding all cylinder bounds.
pub const START_EPS: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub max_l: usize,
    pub max_k: usize,
    /// Length of the extreme sequence scanned in the complex case.
    pub window: usize,
    /// Extra depth allowed when splitting overlapping bounds.
    pub max_refine: usize,
    /// Bound splits allowed per condition.
    pub node_budget: usize,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_l: 24,
            max_k: 12,
            window: 512,
            max_refine: 10,
            node_budget: 4096,
        }
    }
}

/// Cylinder bounds `F_w(K0)` for one system.
#[derive(Clone, Debug)]
pub struct CylinderBounds {
    spec: SystemSpec,
    k0: ConvexPolygon,
    k0_diameter: f64,
    scale: f64,
}

impl CylinderBounds {
    pub fn new(spec: &SystemSpec) -> Self {
        let eps = START_EPS * bounding_set(spec).diameter();
        Self::with_start(spec, outer_hull(spec, eps))
    }

    pub fn with_start(spec: &SystemSpec, k0: ConvexPolygon) -> Self {
        let d = k0.diameter();
        CylinderBounds {
            spec: *spec,
            k0,
            k0_diameter: d,
            scale: d.max(1.0),
        }
    }

    pub fn start(&self) -> &ConvexPolygon {
        &self.k0
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    /// Margin below which two bounds count as touching.
    pub fn threshold(&self) -> f64 {
        TAU * self.scale
    }

    pub fn bound(&self, w: &Word) -> ConvexPolygon {
        self.k0.transformed(&affine_of_word(&self.spec, w))
    }

    fn diameter_bound(&self, w: &Word) -> f64 {
        self.k0_diameter * affine_of_word(&self.spec, w).linear.spectral_norm()
    }

    /// Smallest separation over a splitting of `[x]` and `[y]` into subcylinders
    /// whose bounds are pairwise disjoint. `Err` carries the depth at which
    /// bounds still overlapped.
    pub fn separate(&self, x: &Word, y: &Word, limits: &SearchBounds) -> std::result::Result<f64, usize> {
        let mut budget = limits.node_budget;
        let base = x.len().max(y.len());
        self.separate_rec(x, y, base + limits.max_refine, &mut budget)
    }

    fn separate_rec(&self, x: &Word, y: &Word, max_len: usize, budget: &mut usize) -> std::result::Result<f64, usize> {
        let sep = self.bound(x).separation(&self.bound(y));
        if sep > self.threshold() {
            return Ok(sep);
        }
        let split_x = self.diameter_bound(x) >= self.diameter_bound(y);
        let target = if split_x { x } else { y };
        if target.len() >= max_len || *budget == 0 {
            return Err(x.len().max(y.len()));
        }
        *budget -= 1;
        let mut worst = f64::INFINITY;
        for s in [Symbol::M, Symbol::P] {
            let child = target.pushed(s);
            let r = if split_x {
                self.separate_rec(&child, y, max_len, budget)
            } else {
                self.separate_rec(x, &child, max_len, budget)
            };
            worst = worst.min(r?);
        }
        Ok(worst)
    }
}

/// Which of the four families a failing condition belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionKind {
    PrefixThroughV,
    InsideV,
    PrefixThroughW,
    InsideW,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionFailure {
    pub kind: ConditionKind,
    pub position: usize,
    pub overlap_depth: usize,
}

fn family(
    bounds: &CylinderBounds,
    head: &Word,
    tail: &Word,
    limits: &SearchBounds,
    kind: ConditionKind,
) -> std::result::Result<f64, ConditionFailure> {
    let full = head.concat(tail);
    let mut worst = f64::INFINITY;
    for i in 0..head.len() {
        let x = full.suffix(i);
        let y = Word::repeat(head.symbols()[i].flip(), 1);
        match bounds.separate(&x, &y, limits) {
            Ok(m) => worst = worst.min(m),
            Err(depth) => {
                return Err(ConditionFailure {
                    kind,
                    position: i,
                    overlap_depth: depth,
                })
            }
        }
    }
    Ok(worst)
}

/// The four minimal margins, or the first condition whose bounds overlap.
pub fn separation_margins(
    bounds: &CylinderBounds,
    u: &Word,
    v: &Word,
    w: &Word,
    limits: &SearchBounds,
) -> std::result::Result<[f64; 4], ConditionFailure> {
    let vu = v.concat(u);
    let wu = w.concat(u);
    Ok([
        family(bounds, u, &vu, limits, ConditionKind::PrefixThroughV)?,
        family(bounds, v, u, limits, ConditionKind::InsideV)?,
        family(bounds, u, &wu, limits, ConditionKind::PrefixThroughW)?,
        family(bounds, w, u, limits, ConditionKind::InsideW)?,
    ])
}

pub fn check_separation_conditions(spec: &SystemSpec, u: &Word, v: &Word, w: &Word) -> Result<[f64; 4]> {
    if u.is_empty() || v.is_empty() || w.is_empty() {
        return Err(Error::InvalidParameter("u, v and w must be nonempty".into()));
    }
    if v == w {
        return Err(Error::InvalidParameter("uv and uw must differ".into()));
    }
    let bounds = CylinderBounds::new(spec);
    separation_margins(&bounds, u, v, w, &SearchBounds::default()).map_err(|f| {
        Error::CannotSeparate(format!(
            "{:?} at position {} still overlapping at depth {}",
            f.kind, f.position, f.overlap_depth
        ))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessCertificate {
    pub spec: SystemSpec,
    pub u: Word,
    pub v: Word,
    pub w: Word,
    pub margins: [f64; 4],
    pub entropy: f64,
    pub dim_lower_bound: Option<f64>,
    pub bounds: SearchBounds,
}

impl UniquenessCertificate {
    pub fn uv(&self) -> Word {
        self.u.concat(&self.v)
    }

    pub fn uw(&self) -> Word {
        self.u.concat(&self.w)
    }

    /// Re-checks the conditions, the code and the entropy from the words alone.
    pub fn verify(&self) -> Result<()> {
        let bounds = CylinderBounds::new(&self.spec);
        let margins = separation_margins(&bounds, &self.u, &self.v, &self.w, &self.bounds).map_err(|f| {
            Error::CannotSeparate(format!("{:?} at position {}", f.kind, f.position))
        })?;
        if margins.iter().any(|m| *m <= bounds.threshold()) {
            return Err(Error::CannotSeparate("margin below tolerance".into()));
        }
        if !is_unambiguous(&self.uv(), &self.uw()) {
            return Err(Error::InvalidParameter("{uv, uw} is ambiguous".into()));
        }
        let h = code_entropy(self.uv().len(), self.uw().len());
        if (h - self.entropy).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("entropy {} != {h}", self.entropy)));
        }
        Ok(())
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "system      {}", self.spec);
        let _ = writeln!(s, "u           {}", self.u);
        let _ = writeln!(s, "v           {}", self.v);
        let _ = writeln!(s, "w           {}", self.w);
        for (name, m) in ["u-v prefix", "v suffix", "u-w prefix", "w suffix"].iter().zip(self.margins) {
            let _ = writeln!(s, "margin      {name:<11} {m:.6e}");
        }
        let _ = writeln!(s, "entropy     {:.12}", self.entropy);
        match self.dim_lower_bound {
            Some(d) => {
                let _ = writeln!(s, "dimension  >= {d:.12}");
            }
            None => {
                let _ = writeln!(s, "dimension   > 0 (no similarity ratio)");
            }
        }
        s
    }
}

/// Contraction ratio of a similarity, when the linear part is one.
fn similarity_ratio(spec: &SystemSpec) -> Option<f64> {
    match spec.case() {
        Case::Complex { re, im } => Some(re.hypot(im)),
        Case::MixedReal { lambda, mu } if (lambda - mu).abs() <= TAU => Some(lambda),
        _ => None,
    }
}

fn power_templates(first: Symbol, long_prefix: bool, limits: &SearchBounds) -> Vec<(Word, Word, Word)> {
    let mut out = Vec::new();
    let other = first.flip();
    for l in 1..=limits.max_l {
        let u = if long_prefix {
            Word::repeat(first, l)
        } else {
            Word::repeat(first, 1).concat(&Word::repeat(other, l))
        };
        for k1 in 1..=limits.max_k {
            for k2 in k1 + 1..=limits.max_k {
                out.push((u.clone(), Word::repeat(other, k1), Word::repeat(other, k2)));
            }
        }
    }
    out
}

/// `(u, v, w)` read off extreme sequences: `u` of length `L` is followed by
/// both symbols somewhere, `v` (resp. `w`) runs from the symbol after one such
/// occurrence up to the next occurrence of `u`.
pub fn extreme_templates(kappa: Complex64, limits: &SearchBounds) -> Vec<(Word, Word, Word)> {
    const DIRECTIONS: usize = 8;
    let offset = (5f64.sqrt() - 1.0) / 2.0;
    let mut out = Vec::new();
    for l in 1..=limits.max_l {
        for d in 0..DIRECTIONS {
            let phi = 2.0 * std::f64::consts::PI * (d as f64 + offset) / DIRECTIONS as f64;
            let seq = extreme_sequence(kappa, phi, limits.window);
            if !seq.tie_positions.is_empty() {
                continue;
            }
            let s = seq.digits.symbols();
            let mut seen: Vec<&[Symbol]> = Vec::new();
            for i in 0..s.len().saturating_sub(l) {
                let u = &s[i..i + l];
                if seen.contains(&u) {
                    continue;
                }
                seen.push(u);
                let ret_m = return_word(s, u, Symbol::M);
                let ret_p = return_word(s, u, Symbol::P);
                if let (Some(v), Some(w)) = (ret_m, ret_p) {
                    out.push((Word::new(u.to_vec()), v, w));
                }
            }
        }
    }
    out
}

fn return_word(s: &[Symbol], u: &[Symbol], next: Symbol) -> Option<Word> {
    let l = u.len();
    let start = (0..s.len().saturating_sub(l)).find(|&i| &s[i..i + l] == u && s[i + l] == next)?;
    let back = (start + l + 1..=s.len() - l).find(|&j| &s[j..j + l] == u)?;
    Some(Word::new(s[start + l..back].to_vec()))
}

pub fn candidate_templates(spec: &SystemSpec, limits: &SearchBounds) -> Vec<(Word, Word, Word)> {
    match spec.case() {
        Case::MixedReal { .. } => power_templates(Symbol::M, false, limits),
        Case::Jordan { .. } => power_templates(Symbol::M, true, limits),
        Case::PositiveReal { .. } => {
            let mut t = power_templates(Symbol::M, false, limits);
            t.extend(power_templates(Symbol::M, true, limits));
            t
        }
        Case::Complex { re, im } => extreme_templates(Complex64::new(re, im), limits),
    }
}

/// First template, in a fixed order, whose words pass the conditions and form
/// an unambiguous code.
pub fn certify_uniqueness(spec: &SystemSpec, limits: &SearchBounds) -> Result<UniquenessCertificate> {
    let bounds = CylinderBounds::new(spec);
    let candidates = candidate_templates(spec, limits);
    let found = candidates.par_iter().find_map_first(|(u, v, w)| {
        let uv = u.concat(v);
        let uw = u.concat(w);
        if !is_unambiguous(&uv, &uw) {
            return None;
        }
        separation_margins(&bounds, u, v, w, limits)
            .ok()
            .map(|m| (u.clone(), v.clone(), w.clone(), m))
    });
    let (u, v, w, margins) = found.ok_or(Error::SearchExhausted)?;
    let entropy = code_entropy(u.len() + v.len(), u.len() + w.len());
    let dim_lower_bound = similarity_ratio(spec).map(|r| entropy / -r.ln());
    Ok(UniquenessCertificate {
        spec: *spec,
        u,
        v,
        w,
        margins,
        entropy,
        dim_lower_bound,
        bounds: limits.clone(),
    })
}

/// All concatenations of `uv` and `uw` of total length at most `max_len`.
pub fn language_words(cert: &UniquenessCertificate, max_len: usize) -> Vec<Word> {
    let blocks = [cert.uv(), cert.uw()];
    let mut out = Vec::new();
    let mut frontier = vec![Word::empty()];
    while let Some(w) = frontier.pop() {
        for b in &blocks {
            if w.len() + b.len() <= max_len {
                let next = w.concat(b);
                out.push(next.clone());
                frontier.push(next);
            }
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.to_string().cmp(&b.to_string())));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heavy_overlap_is_inconclusive() {
        let spec = SystemSpec::complex(0.95, 0.1).unwrap();
        let r = check_separation_conditions(&spec, &"m".parse().unwrap(), &"p".parse().unwrap(), &"pp".parse().unwrap());
        assert!(matches!(r, Err(Error::CannotSeparate(_))));
    }

    #[test]
    fn return_words() {
        let s: Word = "mmpmmppmmp".parse().unwrap();
        let u: Word = "mm".parse().unwrap();
        let v = return_word(s.symbols(), u.symbols(), Symbol::P).unwrap();
        assert_eq!(v.to_string(), "p");
        assert!(return_word(s.symbols(), u.symbols(), Symbol::M).is_none());
    }
}

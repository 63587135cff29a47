//! Convex hulls of attractors.
//!
//! For a direction `d` the support function of the attractor is
//! `h(d) = Σ_i |<M^i u, d>|`, attained by the address `a_i = sign <M^i u, d>`.
//! The closed-form vertex families for the mixed real, Jordan and rational
//! complex cases are built directly from their addresses; every other case is
//! handled by refining support directions until each edge is a support line to
//! within the requested tolerance.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bounding_set, BoundingSet};
use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::polygon::ConvexPolygon;
use crate::project::project;
use crate::system::{Case, SystemSpec};
use crate::word::{EventualAddress, Symbol, Word};
use crate::TAU;

/// A hull vertex together with the address that generates it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullVertex {
    pub address: EventualAddress,
    pub point: Vec2,
}

/// Digits maximising `Im(κ^j e^{iφ})`, i.e. the extreme address in the
/// direction `(sin φ, cos φ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeSequence {
    pub phi: f64,
    pub digits: Word,
    pub tie_positions: Vec<usize>,
}

/// Evaluates support values and extreme points for one system.
#[derive(Clone, Debug)]
pub struct SupportOracle {
    terms: Vec<Vec2>,
    tail: Mat2,
    bound: BoundingSet,
    scale: f64,
}

impl SupportOracle {
    pub fn new(spec: &SystemSpec) -> Self {
        let bound = bounding_set(spec);
        let m = spec.matrix();
        let mut v = spec.translation();
        let mut terms = Vec::new();
        let mut tail = Mat2::IDENTITY;
        // Stop once M^L shrinks the bounding set below rounding level.
        while terms.len() < 20_000 && (terms.len() < 8 || tail.spectral_norm() > 1e-17) {
            terms.push(v);
            v = m.apply(v);
            tail = tail * m;
        }
        let scale = bound.diameter();
        SupportOracle {
            terms,
            tail,
            bound,
            scale,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Rigorous upper bound on `max_{x ∈ A} <x, d>`.
    pub fn support_upper(&self, d: Vec2) -> f64 {
        let head: f64 = self.terms.iter().map(|t| t.dot(d).abs()).sum();
        let tail = self.bound.support(self.tail.transpose().apply(d));
        head + tail
    }

    /// Truncated extreme point in direction `d`; ties resolve to `p`.
    pub fn extreme_point(&self, d: Vec2) -> Vec2 {
        self.terms.iter().fold(Vec2::ZERO, |acc, t| {
            if t.dot(d) < 0.0 {
                acc + -*t
            } else {
                acc + *t
            }
        })
    }

    pub fn extreme_word(&self, d: Vec2, len: usize) -> Word {
        self.terms
            .iter()
            .take(len)
            .map(|t| Symbol::from_sign(t.dot(d)))
            .collect()
    }
}

/// Hull by adaptive refinement of support directions.
///
/// Every returned edge satisfies `h(n) <= offset + eps` for its outward normal.
pub fn support_hull(spec: &SystemSpec, eps: f64) -> ConvexPolygon {
    let oracle = SupportOracle::new(spec);
    support_hull_with(&oracle, eps)
}

fn support_hull_with(oracle: &SupportOracle, eps: f64) -> ConvexPolygon {
    const START: usize = 16;
    let seeds: Vec<(f64, Vec2)> = (0..START)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / START as f64;
            (a, oracle.extreme_point(Vec2::from_angle(a)))
        })
        .collect();
    let chunks: Vec<Vec<Vec2>> = (0..START)
        .into_par_iter()
        .map(|k| {
            let (a1, v1) = seeds[k];
            let (mut a2, v2) = seeds[(k + 1) % START];
            if k + 1 == START {
                a2 += 2.0 * PI;
            }
            let mut out = vec![v1];
            refine(oracle, (a1, v1), (a2, v2), eps, 0, &mut out);
            out
        })
        .collect();
    let pts: Vec<Vec2> = chunks.into_iter().flatten().collect();
    let mut poly = ConvexPolygon::hull_of(&pts, eps * 1e-3);
    poly.closed = false;
    poly
}

fn refine(oracle: &SupportOracle, lo: (f64, Vec2), hi: (f64, Vec2), eps: f64, depth: usize, out: &mut Vec<Vec2>) {
    let (a1, v1) = lo;
    let (a2, v2) = hi;
    if depth > 60 || v1.dist(v2) <= eps || out.len() > 200_000 {
        return;
    }
    let n = (v2 - v1).perp_cw().normalized();
    let mut an = n.angle();
    while an < a1 {
        an += 2.0 * PI;
    }
    while an > a2 {
        an -= 2.0 * PI;
    }
    if an <= a1 || an >= a2 {
        return;
    }
    let v = oracle.extreme_point(n);
    if (v - v1).dot(n) <= eps {
        return;
    }
    refine(oracle, (a1, v1), (an, v), eps, depth + 1, out);
    out.push(v);
    refine(oracle, (an, v), (a2, v2), eps, depth + 1, out);
}

/// Matches polygon vertices back to the candidate that produced them.
fn attach_addresses(poly: &ConvexPolygon, candidates: &[HullVertex]) -> Vec<HullVertex> {
    poly.vertices
        .iter()
        .filter_map(|v| candidates.iter().find(|c| c.point == *v).cloned())
        .collect()
}

fn geometric_family(
    spec: &SystemSpec,
    block: &Word,
    tail: Symbol,
    eps: f64,
    out: &mut Vec<HullVertex>,
) {
    let mut pre = Word::empty();
    let mut prev: Option<Vec2> = None;
    for _ in 0..10_000 {
        let address = EventualAddress::with_tail(pre.clone(), tail);
        let point = project(spec, &address);
        let done = prev.is_some_and(|p| p.dist(point) <= eps);
        out.push(HullVertex { address, point });
        if done {
            break;
        }
        prev = Some(point);
        pre = pre.concat(block);
    }
}

/// Vertices `π((pm)^k p^∞)`, `π((mp)^k p^∞)`, `π((pm)^k m^∞)`, `π((mp)^k m^∞)`
/// with their limit points `π((pm)^∞)`, `π((mp)^∞)`, truncated once consecutive
/// vertices are within `eps`.
pub fn hull_mixed_real_vertices(lambda: f64, mu: f64, eps: f64) -> Result<Vec<HullVertex>> {
    if (lambda - mu).abs() <= TAU {
        return Err(Error::Degenerate(
            "lambda = mu: the hull is the parallelogram of hull_mixed_equal".into(),
        ));
    }
    if lambda > mu {
        return Err(Error::InvalidParameter(format!(
            "closed-form mixed real hull needs lambda < mu, got {lambda} > {mu}"
        )));
    }
    let spec = SystemSpec::mixed_real(lambda, mu)?;
    let pm: Word = "pm".parse()?;
    let mp: Word = "mp".parse()?;
    let mut cand = Vec::new();
    for block in [&pm, &mp] {
        for tail in [Symbol::P, Symbol::M] {
            geometric_family(&spec, block, tail, eps, &mut cand);
        }
        let address = EventualAddress::periodic(block.clone())?;
        let point = project(&spec, &address);
        cand.push(HullVertex { address, point });
    }
    Ok(ordered_vertices(&cand))
}

fn ordered_vertices(cand: &[HullVertex]) -> Vec<HullVertex> {
    let pts: Vec<Vec2> = cand.iter().map(|c| c.point).collect();
    let poly = ConvexPolygon::hull_of(&pts, 0.0);
    attach_addresses(&poly, cand)
}

pub fn hull_mixed_real(lambda: f64, mu: f64, eps: f64) -> Result<ConvexPolygon> {
    let verts = hull_mixed_real_vertices(lambda, mu, eps)?;
    Ok(ConvexPolygon::from_ccw(verts.into_iter().map(|v| v.point).collect(), false))
}

/// Vertices `π(m^k p^∞)` and `π(p^k m^∞)`.
pub fn hull_jordan_vertices(nu: f64, eps: f64) -> Result<Vec<HullVertex>> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!("nu = {nu} must lie in (0, 1)")));
    }
    let spec = SystemSpec::jordan(nu)?;
    let mut cand = Vec::new();
    geometric_family(&spec, &Word::repeat(Symbol::M, 1), Symbol::P, eps, &mut cand);
    geometric_family(&spec, &Word::repeat(Symbol::P, 1), Symbol::M, eps, &mut cand);
    Ok(ordered_vertices(&cand))
}

pub fn hull_jordan(nu: f64, eps: f64) -> Result<ConvexPolygon> {
    let verts = hull_jordan_vertices(nu, eps)?;
    Ok(ConvexPolygon::from_ccw(verts.into_iter().map(|v| v.point).collect(), false))
}

/// `a_j = p` if `Im(κ^j e^{iφ}) > τ|κ|^j`, `m` if below `-τ|κ|^j`; positions in
/// between are ties, resolved to `p` and reported.
pub fn extreme_sequence(kappa: Complex64, phi: f64, length: usize) -> ExtremeSequence {
    let rot = Complex64::from_polar(1.0, phi);
    let mut z = Complex64::new(1.0, 0.0);
    let mut digits = Vec::with_capacity(length);
    let mut ties = Vec::new();
    let modulus = kappa.norm();
    let mut scale = 1.0;
    for j in 0..length {
        let im = (z * rot).im;
        if im.abs() <= TAU * scale {
            ties.push(j);
            digits.push(Symbol::P);
        } else {
            digits.push(Symbol::from_sign(im));
        }
        z *= kappa;
        scale *= modulus;
        // renormalise to keep the sign test meaningful far down the sequence
        if scale < 1e-200 {
            z /= scale;
            scale = 1.0;
        }
    }
    ExtremeSequence {
        phi,
        digits: Word::new(digits),
        tie_positions: ties,
    }
}

/// `q' = q` for odd `q`, `q/2` for even `q`.
pub fn q_prime(q: i64) -> i64 {
    if q % 2 == 0 {
        q / 2
    } else {
        q
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Vertices of the `2q'`-gon for `κ = ρ e^{2πi p/q}`.
///
/// Ties occur on the lattice of angles `φ ∈ (π/q') Z`; between two ties the
/// extreme sequence is constant and periodic with period `q`, so each vertex is
/// the exact projection of a purely periodic address.
pub fn hull_complex_rational_vertices(rho: f64, p: i64, q: i64) -> Result<Vec<HullVertex>> {
    if q < 1 || gcd(p, q) != 1 {
        return Err(Error::InvalidParameter(format!("need gcd(p, q) = 1 with q >= 1, got {p}/{q}")));
    }
    let spec = SystemSpec::complex_polar(rho, p, q)?;
    let kappa = spec.kappa().expect("complex spec");
    let qp = q_prime(q);
    let mut cand = Vec::new();
    for k in 0..2 * qp {
        let phi = (k as f64 + 0.5) * PI / qp as f64;
        let seq = extreme_sequence(kappa, phi, q as usize);
        debug_assert!(seq.tie_positions.is_empty());
        let address = EventualAddress::periodic(seq.digits)?;
        let point = project(&spec, &address);
        cand.push(HullVertex { address, point });
    }
    Ok(ordered_vertices(&cand))
}

pub fn hull_complex_rational(rho: f64, p: i64, q: i64, _eps: f64) -> Result<ConvexPolygon> {
    let verts = hull_complex_rational_vertices(rho, p, q)?;
    Ok(ConvexPolygon::from_ccw(verts.into_iter().map(|v| v.point).collect(), true))
}

/// Hull from a fixed grid of `max_directions` support directions. The caller
/// declares `arg κ / π` irrational; the result is a truncation of an infinite
/// polygon.
pub fn hull_complex_irrational(kappa: Complex64, eps: f64, max_directions: usize) -> Result<ConvexPolygon> {
    let spec = SystemSpec::complex(kappa.re, kappa.im)?;
    let modulus = kappa.norm();
    // prefix long enough that the dropped tail is far below eps
    let tail_target = (eps * 1e-3).max(1e-300);
    let mut len = 1usize;
    while modulus.powi(len as i32) / (1.0 - modulus) > tail_target && len < 5000 {
        len += 1;
    }
    let pts: Vec<Vec2> = (0..max_directions.max(3))
        .into_par_iter()
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / max_directions.max(3) as f64;
            let seq = extreme_sequence(kappa, phi, len);
            crate::project::project_finite(&spec, &seq.digits)
        })
        .collect();
    let mut poly = ConvexPolygon::hull_of(&pts, eps);
    poly.closed = false;
    Ok(poly)
}

/// Corners of the parallelogram hull of `A_{-λ,λ}`: in the coordinates
/// `((x+y)/2, (y-x)/2)` the attractor spans the box
/// `[-1/(1-λ²), 1/(1-λ²)] × [-λ/(1-λ²), λ/(1-λ²)]`.
pub fn hull_mixed_equal_vertices(lambda: f64) -> Result<Vec<HullVertex>> {
    let spec = SystemSpec::mixed_real(lambda, lambda)?;
    let even = 1.0 / (1.0 - lambda * lambda);
    let odd = lambda / (1.0 - lambda * lambda);
    let corners = [
        ("p", even, odd),
        ("pm", even, -odd),
        ("mp", -even, odd),
        ("m", -even, -odd),
    ];
    let cand: Vec<HullVertex> = corners
        .iter()
        .map(|&(period, e, o)| {
            let address = EventualAddress::periodic(period.parse().expect("literal word"))
                .expect("nonempty period");
            // x = e - o, y = e + o
            let point = Vec2::new(e - o, e + o);
            debug_assert!(point.dist(project(&spec, &address)) < 1e-9);
            HullVertex { address, point }
        })
        .collect();
    Ok(ordered_vertices(&cand))
}

pub fn hull_mixed_equal(lambda: f64) -> Result<ConvexPolygon> {
    let verts = hull_mixed_equal_vertices(lambda)?;
    Ok(ConvexPolygon::from_ccw(verts.into_iter().map(|v| v.point).collect(), true))
}

/// Best available inner hull for any system.
pub fn hull_of(spec: &SystemSpec, eps: f64) -> ConvexPolygon {
    match spec.case() {
        Case::MixedReal { lambda, mu } if (lambda - mu).abs() <= TAU => {
            hull_mixed_equal(lambda).expect("valid spec")
        }
        Case::MixedReal { lambda, mu } if lambda < mu => {
            hull_mixed_real(lambda, mu, eps).expect("valid spec")
        }
        Case::Jordan { nu } if nu > 0.0 => hull_jordan(nu, eps).expect("valid spec"),
        _ => support_hull(spec, eps),
    }
}

/// A polygon guaranteed to contain the attractor: the half-planes
/// `<x, n> <= h(n)` over the edge normals of an inner hull, with `h` the
/// rigorous support bound.
pub fn outer_hull(spec: &SystemSpec, eps: f64) -> ConvexPolygon {
    let oracle = SupportOracle::new(spec);
    let inner = match spec.case() {
        Case::MixedReal { .. } | Case::Jordan { .. } => hull_of(spec, eps),
        _ => support_hull_with(&oracle, eps),
    };
    let normals = inner.edge_normals();
    let pad = 1e-12 * oracle.scale();
    let offsets: Vec<f64> = normals.iter().map(|n| oracle.support_upper(*n) + pad).collect();
    ConvexPolygon::from_halfplanes(&normals, &offsets, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_mixed_vertex_is_fixed_point_of_p() {
        let verts = hull_mixed_real_vertices(0.55, 0.8, 1e-9).unwrap();
        let top = verts
            .iter()
            .find(|v| v.address == EventualAddress::with_tail(Word::empty(), Symbol::P))
            .unwrap();
        assert!((top.point.x - 1.0 / 1.55).abs() < 1e-15);
        assert!((top.point.y - 5.0).abs() < 1e-13);
    }

    #[test]
    fn jordan_slopes_between_consecutive_vertices() {
        let nu = 0.7;
        let spec = SystemSpec::jordan(nu).unwrap();
        for k in 1..12 {
            let a = project(&spec, &EventualAddress::with_tail(Word::repeat(Symbol::P, k), Symbol::M));
            let b = project(&spec, &EventualAddress::with_tail(Word::repeat(Symbol::P, k + 1), Symbol::M));
            let slope = (b.y - a.y) / (b.x - a.x);
            assert!((slope - nu / k as f64).abs() < 1e-12, "k = {k}: {slope}");
        }
    }

    #[test]
    fn tie_at_origin_for_phi_zero() {
        let seq = extreme_sequence(Complex64::new(0.3, 0.6), 0.0, 10);
        assert_eq!(seq.tie_positions, vec![0]);
        assert_eq!(seq.digits.symbols()[0], Symbol::P);
    }

    #[test]
    fn rational_vertex_counts() {
        assert_eq!(hull_complex_rational(0.7, 1, 4, 0.0).unwrap().len(), 4);
        assert_eq!(hull_complex_rational(0.7, 1, 5, 0.0).unwrap().len(), 10);
        assert_eq!(hull_complex_rational(0.7, 1, 6, 0.0).unwrap().len(), 6);
        assert!(hull_complex_rational(0.7, 2, 4, 0.0).is_err());
    }

    #[test]
    fn mixed_equal_parallelogram() {
        let h = hull_mixed_equal(0.75).unwrap();
        assert_eq!(h.len(), 4);
        for v in &h.vertices {
            assert!(h.contains(-*v, 1e-12));
        }
        assert!(hull_mixed_equal(std::f64::consts::FRAC_1_SQRT_2).is_ok());
    }

    #[test]
    fn outer_hull_contains_inner() {
        for spec in [
            SystemSpec::positive_real(0.5, 0.8).unwrap(),
            SystemSpec::jordan(0.8).unwrap(),
            SystemSpec::complex(0.4, 0.5).unwrap(),
        ] {
            let inner = hull_of(&spec, 1e-9);
            let outer = outer_hull(&spec, 1e-6);
            for v in &inner.vertices {
                assert!(outer.contains(*v, 1e-9), "{spec}");
            }
        }
    }
}

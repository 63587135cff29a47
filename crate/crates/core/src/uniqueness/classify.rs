//! Size of the set of uniqueness when `arg κ / π` is rational, and for the
//! mixed system with equal eigenvalues.

use serde::{Deserialize, Serialize};

use super::thue_morse::komornik_loreti;
use crate::error::{Error, Result};
use crate::hull::{gcd, q_prime};
use crate::TAU;

pub fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UniquenessClass {
    FiniteNonEmpty,
    CountablyInfinite,
    UncountableZeroDim,
    PositiveDim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Threshold {
    Golden,
    KomornikLoreti,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalClassification {
    pub rho: f64,
    pub p: i64,
    pub q: i64,
    pub q_prime: i64,
    pub beta: f64,
    pub class: UniquenessClass,
    /// Set when `beta` lies within `TAU` of a threshold; `class` is then the
    /// one the threshold value itself belongs to.
    pub boundary: Option<Threshold>,
    /// Number of points of uniqueness in the finite class (`2q'`).
    pub finite_count: Option<i64>,
}

/// Class of a base `beta > 1` together with the boundary flag.
pub fn classify_beta(beta: f64) -> Result<(UniquenessClass, Option<Threshold>)> {
    if beta <= 1.0 || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta} must exceed 1")));
    }
    let g = golden_ratio();
    let ks = komornik_loreti();
    if (beta - g).abs() <= TAU {
        return Ok((UniquenessClass::FiniteNonEmpty, Some(Threshold::Golden)));
    }
    if (beta - ks).abs() <= TAU {
        return Ok((UniquenessClass::UncountableZeroDim, Some(Threshold::KomornikLoreti)));
    }
    let class = if beta < g {
        UniquenessClass::FiniteNonEmpty
    } else if beta < ks {
        UniquenessClass::CountablyInfinite
    } else {
        UniquenessClass::PositiveDim
    };
    Ok((class, None))
}

/// `κ = ρ e^{2πi p/q}`, `β = ρ^{-q'}`.
pub fn classify_rational(rho: f64, p: i64, q: i64) -> Result<RationalClassification> {
    if q < 1 || gcd(p, q) != 1 {
        return Err(Error::InvalidParameter(format!("need gcd(p, q) = 1, got {p}/{q}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must lie in (0, 1)")));
    }
    let qp = q_prime(q);
    let beta = rho.powi(-(qp as i32));
    let (class, boundary) = classify_beta(beta)?;
    Ok(RationalClassification {
        rho,
        p,
        q,
        q_prime: qp,
        beta,
        class,
        boundary,
        finite_count: (class == UniquenessClass::FiniteNonEmpty).then_some(2 * qp),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EqualGeometry {
    TotallyDisconnected,
    Parallelogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedEqualClassification {
    pub lambda: f64,
    pub beta: f64,
    pub class: UniquenessClass,
    pub boundary: Option<Threshold>,
    pub geometry: EqualGeometry,
}

/// `A_{-λ,λ}` with `β = λ^{-2}`.
pub fn classify_mixed_equal(lambda: f64) -> Result<MixedEqualClassification> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    let beta = lambda.powi(-2);
    let (class, boundary) = classify_beta(beta)?;
    // λ >= 1/√2 exactly when λ² >= 1/2; compare squares to keep 1/√2 itself on the closed side
    let geometry = if 2.0 * lambda * lambda >= 1.0 - 1e-15 {
        EqualGeometry::Parallelogram
    } else {
        EqualGeometry::TotallyDisconnected
    };
    Ok(MixedEqualClassification {
        lambda,
        beta,
        class,
        boundary,
        geometry,
    })
}

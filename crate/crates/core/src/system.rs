//! Normal forms of the two-map system `T_m(v) = Mv - u`, `T_p(v) = Mv + u`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::TAU;

/// Conjugacy class of the linear part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Case {
    /// `M = diag(lambda, mu)`.
    PositiveReal { lambda: f64, mu: f64 },
    /// `M = diag(-lambda, mu)`.
    MixedReal { lambda: f64, mu: f64 },
    /// `M = [[nu, 1], [0, nu]]`.
    Jordan { nu: f64 },
    /// Multiplication by `kappa = re + i im` on the complex plane.
    Complex { re: f64, im: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSpec {
    case: Case,
}

impl SystemSpec {
    pub fn new(case: Case) -> Result<Self> {
        validate(&case)?;
        Ok(SystemSpec { case })
    }

    pub fn positive_real(lambda: f64, mu: f64) -> Result<Self> {
        Self::new(Case::PositiveReal { lambda, mu })
    }

    pub fn mixed_real(lambda: f64, mu: f64) -> Result<Self> {
        Self::new(Case::MixedReal { lambda, mu })
    }

    pub fn jordan(nu: f64) -> Result<Self> {
        Self::new(Case::Jordan { nu })
    }

    pub fn complex(re: f64, im: f64) -> Result<Self> {
        Self::new(Case::Complex { re, im })
    }

    /// `kappa = rho * exp(2 pi i p / q)`.
    pub fn complex_polar(rho: f64, p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("q must be nonzero".into()));
        }
        let theta = 2.0 * std::f64::consts::PI * p as f64 / q as f64;
        Self::complex(rho * theta.cos(), rho * theta.sin())
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn matrix(&self) -> Mat2 {
        match self.case {
            Case::PositiveReal { lambda, mu } => Mat2::diag(lambda, mu),
            Case::MixedReal { lambda, mu } => Mat2::diag(-lambda, mu),
            Case::Jordan { nu } => Mat2::new(nu, 1.0, 0.0, nu),
            Case::Complex { re, im } => Mat2::new(re, -im, im, re),
        }
    }

    pub fn translation(&self) -> Vec2 {
        match self.case {
            Case::PositiveReal { .. } | Case::MixedReal { .. } => Vec2::new(1.0, 1.0),
            Case::Jordan { .. } => Vec2::new(0.0, 1.0),
            Case::Complex { .. } => Vec2::new(1.0, 0.0),
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        match self.case {
            Case::PositiveReal { lambda, mu } | Case::MixedReal { lambda, mu } => lambda.max(mu),
            Case::Jordan { nu } => nu.abs(),
            Case::Complex { re, im } => re.hypot(im),
        }
    }

    pub fn kappa(&self) -> Option<Complex64> {
        match self.case {
            Case::Complex { re, im } => Some(Complex64::new(re, im)),
            _ => None,
        }
    }

    /// Real eigenvalues with their Jordan block sizes, ordered as the coordinates
    /// of the projection map. `None` for the complex case.
    pub fn eigen_blocks(&self) -> Option<Vec<(f64, usize)>> {
        match self.case {
            Case::PositiveReal { lambda, mu } => Some(vec![(lambda, 1), (mu, 1)]),
            Case::MixedReal { lambda, mu } => Some(vec![(-lambda, 1), (mu, 1)]),
            Case::Jordan { nu } => Some(vec![(nu, 2)]),
            Case::Complex { .. } => None,
        }
    }

    /// True when the linear part is a similarity, so dimension follows from entropy.
    pub fn is_conformal(&self) -> bool {
        match self.case {
            Case::Complex { .. } => true,
            Case::MixedReal { lambda, mu } => (lambda - mu).abs() <= TAU,
            _ => false,
        }
    }

    pub fn case_name(&self) -> &'static str {
        match self.case {
            Case::PositiveReal { .. } => "positive_real",
            Case::MixedReal { .. } => "mixed_real",
            Case::Jordan { .. } => "jordan",
            Case::Complex { .. } => "complex",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self.case {
            Case::PositiveReal { lambda, mu } | Case::MixedReal { lambda, mu } => vec![lambda, mu],
            Case::Jordan { nu } => vec![nu],
            Case::Complex { re, im } => vec![re, im],
        }
    }

    pub fn from_parts(case: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "case {case} expects {n} parameters, got {}",
                    params.len()
                )))
            }
        };
        match case {
            "positive_real" | "positive" => {
                want(2)?;
                Self::positive_real(params[0], params[1])
            }
            "mixed_real" | "mixed" => {
                want(2)?;
                Self::mixed_real(params[0], params[1])
            }
            "jordan" => {
                want(1)?;
                Self::jordan(params[0])
            }
            "complex" => {
                want(2)?;
                Self::complex(params[0], params[1])
            }
            other => Err(Error::Parse(format!("unknown case {other:?}"))),
        }
    }
}

fn validate(case: &Case) -> Result<()> {
    let in_unit = |name: &str, v: f64| {
        if !v.is_finite() {
            Err(Error::InvalidParameter(format!("{name} is not finite")))
        } else if v <= 0.0 {
            Err(Error::Degenerate(format!("{name} = {v} must be positive")))
        } else if v >= 1.0 {
            Err(Error::NotContracting(v))
        } else {
            Ok(())
        }
    };
    match *case {
        Case::PositiveReal { lambda, mu } => {
            in_unit("lambda", lambda)?;
            in_unit("mu", mu)?;
            if (lambda - mu).abs() <= TAU {
                return Err(Error::Degenerate(
                    "equal eigenvalues restrict the attractor to a line".into(),
                ));
            }
        }
        Case::MixedReal { lambda, mu } => {
            in_unit("lambda", lambda)?;
            in_unit("mu", mu)?;
        }
        Case::Jordan { nu } => in_unit("|nu|", nu.abs())?,
        Case::Complex { re, im } => {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::InvalidParameter("kappa is not finite".into()));
            }
            if im.abs() <= TAU {
                return Err(Error::Degenerate("real kappa restricts the attractor to a line".into()));
            }
            in_unit("|kappa|", re.hypot(im))?;
        }
    }
    Ok(())
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.case {
            Case::PositiveReal { lambda, mu } => write!(f, "PositiveReal({lambda}, {mu})"),
            Case::MixedReal { lambda, mu } => write!(f, "MixedReal({lambda}, {mu})"),
            Case::Jordan { nu } => write!(f, "Jordan({nu})"),
            Case::Complex { re, im } => write!(f, "Complex({re}, {im})"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    case: String,
    params: Vec<f64>,
    translation: [f64; 2],
}

impl Serialize for SystemSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpecRepr {
            case: self.case_name().to_string(),
            params: self.params(),
            translation: self.translation().into(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SpecRepr::deserialize(deserializer)?;
        let spec = SystemSpec::from_parts(&repr.case, &repr.params).map_err(serde::de::Error::custom)?;
        if Vec2::from(repr.translation) != spec.translation() {
            return Err(serde::de::Error::custom(format!(
                "translation {:?} does not match the canonical one for {}",
                repr.translation,
                spec.case_name()
            )));
        }
        Ok(spec)
    }
}

/// Reduces an arbitrary contracting `(M, u)` to its normal form.
///
/// Eigenvalue coincidences, zero eigenvalues and real complex pairs are tested
/// against `TAU` relative to the matrix scale and rejected as degenerate.
pub fn normalize_system(matrix: Mat2, u: Vec2) -> Result<SystemSpec> {
    let entries = [matrix.a, matrix.b, matrix.c, matrix.d, u.x, u.y];
    if entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite input".into()));
    }
    if u.norm() <= TAU {
        return Err(Error::Degenerate("translation vector is zero".into()));
    }
    let scale = matrix.frobenius().max(1.0);
    let mu_vec = matrix.apply(u);
    if u.cross(mu_vec).abs() <= TAU * scale * u.norm() * u.norm() {
        return Err(Error::Degenerate(
            "translation is an eigenvector, so the attractor lies on a line".into(),
        ));
    }
    let half_tr = matrix.trace() / 2.0;
    let det = matrix.det();
    let disc = half_tr * half_tr - det;
    let tol = TAU * scale * scale;

    if disc < -tol {
        let re = half_tr;
        let im = (-disc).sqrt();
        let modulus = re.hypot(im);
        if modulus >= 1.0 {
            return Err(Error::NotContracting(modulus));
        }
        return SystemSpec::complex(re, im);
    }
    if disc.abs() <= tol {
        let nu = half_tr;
        if nu.abs() >= 1.0 {
            return Err(Error::NotContracting(nu.abs()));
        }
        if nu.abs() <= TAU * scale {
            return Err(Error::Degenerate("zero eigenvalue".into()));
        }
        let residual = (matrix - Mat2::diag(nu, nu)).frobenius();
        if residual <= TAU.sqrt() * scale {
            return Err(Error::Degenerate(
                "repeated eigenvalue with diagonalizable matrix".into(),
            ));
        }
        return SystemSpec::jordan(nu);
    }
    let (e1, e2) = if matrix.b == 0.0 || matrix.c == 0.0 {
        // triangular: the eigenvalues are the diagonal, exactly
        (matrix.a.min(matrix.d), matrix.a.max(matrix.d))
    } else {
        let root = disc.sqrt();
        (half_tr - root, half_tr + root)
    };
    let radius = e1.abs().max(e2.abs());
    if radius >= 1.0 {
        return Err(Error::NotContracting(radius));
    }
    if e1.abs() <= TAU * scale || e2.abs() <= TAU * scale {
        return Err(Error::Degenerate("zero eigenvalue".into()));
    }
    match (e1 < 0.0, e2 < 0.0) {
        // diag(-l, -m) is conjugate to diag(l, m) through the alternating digit flip.
        (false, false) | (true, true) => {
            let (a, b) = (e1.abs(), e2.abs());
            SystemSpec::positive_real(a.min(b), a.max(b))
        }
        (true, false) => SystemSpec::mixed_real(-e1, e2),
        (false, true) => SystemSpec::mixed_real(-e2, e1),
    }
}

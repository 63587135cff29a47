//! Explicit addresses for points near the origin.
//!
//! Given a monic `P(x) = x^n + b_{n-1}x^{n-1} + … + b_0` vanishing to the right
//! order at the reciprocal eigenvalues with `Σ|b_j| <= 2`, the residuals
//! `u_j = a_j - Σ_k b_k u_{j+k-n}` can be kept in `[-1, 1]` forever by a
//! greedy choice of `a_j`, and the digits `a_j` then project onto the target
//! whose coordinates are `B (u_{-n}, …, u_{-1})`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::bounding_set;
use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::project::project_finite;
use crate::system::SystemSpec;
use crate::word::{Symbol, Word};

/// Slack on `Σ|b_j| <= 2` and on `|u_j| <= 1` absorbing rounding.
pub const SUM_SLACK: f64 = 1e-12;
pub const RESIDUAL_SLACK: f64 = 1e-12;

/// Relative tolerance on the root conditions.
const ROOT_TOL: f64 = 1e-9;

/// Monic polynomial stored by its lower coefficients `b_0 … b_{n-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolPolynomial {
    pub coeffs: Vec<f64>,
}

impl ToolPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        ToolPolynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.coeffs.iter().map(|b| b.abs()).sum()
    }

    /// All coefficients including the leading 1, lowest degree first.
    fn full(&self) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        c.push(1.0);
        c
    }

    /// `P^{(s)}(x) / s!` together with the same sum taken in absolute values,
    /// which sets the scale for judging a root.
    pub fn scaled_derivative(&self, s: usize, x: f64) -> (f64, f64) {
        let c = self.full();
        let mut val = 0.0;
        let mut mag = 0.0;
        for (k, ck) in c.iter().enumerate().skip(s) {
            let term = ck * binomial(k, s) * x.powi((k - s) as i32);
            val += term;
            mag += term.abs();
        }
        (val, mag)
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `x² + (1/λ - 1/μ)x - 1/(λμ)`, with roots `-1/λ` and `1/μ`.
pub fn mixed_real_poly(lambda: f64, mu: f64) -> Result<ToolPolynomial> {
    check_unit("lambda", lambda)?;
    check_unit("mu", mu)?;
    let poly = ToolPolynomial::new(vec![-1.0 / (lambda * mu), 1.0 / lambda - 1.0 / mu]);
    accept_sum(poly)
}

/// `x⁸ - (8/(7ν))x⁷ + 1/(7ν⁸)`, with a double root at `1/ν`.
pub fn jordan_poly(nu: f64) -> Result<ToolPolynomial> {
    check_unit("nu", nu)?;
    let mut coeffs = vec![0.0; 8];
    coeffs[0] = 1.0 / (7.0 * nu.powi(8));
    coeffs[7] = -8.0 / (7.0 * nu);
    accept_sum(ToolPolynomial::new(coeffs))
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1)")));
    }
    Ok(())
}

fn accept_sum(poly: ToolPolynomial) -> Result<ToolPolynomial> {
    let sum = poly.coefficient_sum();
    if sum > 2.0 + SUM_SLACK {
        return Err(Error::CoefficientSumExceeded { sum });
    }
    Ok(poly)
}

/// The `N × n` matrix with rows `B_t^{(s)}(λ_i)`, highest derivative first
/// within each Jordan block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
}

impl BMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.entries)
    }

    pub fn submatrix(&self, columns: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, columns.len(), |r, c| self.get(r, columns[c]))
    }
}

/// `B_t^{(s)}(y) = Σ_{k<=t} b_k C(t-k, s) y^{t-k-s}`.
pub fn b_entry(poly: &ToolPolynomial, t: usize, s: usize, y: f64) -> f64 {
    (0..=t)
        .filter(|k| t - k >= s)
        .map(|k| poly.coeffs[k] * binomial(t - k, s) * y.powi((t - k - s) as i32))
        .sum()
}

fn real_blocks(spec: &SystemSpec) -> Result<Vec<(f64, usize)>> {
    spec.eigen_blocks().ok_or_else(|| {
        Error::InvalidParameter("interior certificates need a real spectrum".into())
    })
}

pub fn build_b_matrix(spec: &SystemSpec, poly: &ToolPolynomial) -> Result<BMatrix> {
    let blocks = real_blocks(spec)?;
    let n = poly.degree();
    let mut entries = Vec::new();
    let mut rows = 0;
    for &(lam, k) in &blocks {
        for s in (0..k).rev() {
            for t in 0..n {
                entries.push(b_entry(poly, t, s, lam));
            }
            rows += 1;
        }
    }
    Ok(BMatrix {
        rows,
        cols: n,
        entries,
    })
}

/// Greedy column pivoting: repeatedly take the column with the largest norm
/// orthogonal to the span of those already taken.
pub fn pivot_columns(b: &BMatrix) -> Vec<usize> {
    let m = b.to_dmatrix();
    let mut resid: Vec<DVector<f64>> = (0..b.cols).map(|c| m.column(c).into_owned()).collect();
    let mut chosen = Vec::new();
    for _ in 0..b.rows.min(b.cols) {
        let (best, _) = resid
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, v)| (i, v.norm()))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX {
            break;
        }
        let q = resid[best].clone();
        let qn = q.norm();
        chosen.push(best);
        if qn == 0.0 {
            continue;
        }
        let q = q / qn;
        for v in resid.iter_mut() {
            let proj = q.dot(v);
            *v -= &q * proj;
        }
    }
    chosen.sort_unstable();
    chosen
}

fn sigma_min(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn sigma_max(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Largest relative `|P^{(s)}(1/λ_i)/s!|` over the required `(i, s)`.
    pub root_residual: f64,
    pub coefficient_sum: f64,
    pub columns: Vec<usize>,
    pub submatrix: Vec<f64>,
    pub sigma_min: f64,
    pub condition_number: f64,
    pub roots_ok: bool,
    pub sum_ok: bool,
    pub rank_ok: bool,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.roots_ok && self.sum_ok && self.rank_ok
    }

    fn failures(&self) -> String {
        let mut out = Vec::new();
        if !self.roots_ok {
            out.push(format!("root residual {:.3e}", self.root_residual));
        }
        if !self.sum_ok {
            out.push(format!("coefficient sum {}", self.coefficient_sum));
        }
        if !self.rank_ok {
            out.push(format!("singular submatrix (sigma_min {:.3e})", self.sigma_min));
        }
        out.join(", ")
    }
}

pub fn check_tool_conditions(spec: &SystemSpec, poly: &ToolPolynomial) -> Result<ConditionReport> {
    let blocks = real_blocks(spec)?;
    let mut root_residual: f64 = 0.0;
    for &(lam, k) in &blocks {
        for s in 0..k {
            let (v, mag) = poly.scaled_derivative(s, 1.0 / lam);
            root_residual = root_residual.max(v.abs() / mag.max(1.0));
        }
    }
    let coefficient_sum = poly.coefficient_sum();
    let b = build_b_matrix(spec, poly)?;
    let enough = poly.degree() >= b.rows;
    let columns = if enough { pivot_columns(&b) } else { Vec::new() };
    let (sub, smin, smax) = if columns.len() == b.rows {
        let s = b.submatrix(&columns);
        let (lo, hi) = (sigma_min(&s), sigma_max(&s));
        (s.transpose().as_slice().to_vec(), lo, hi)
    } else {
        (Vec::new(), 0.0, 0.0)
    };
    Ok(ConditionReport {
        root_residual,
        coefficient_sum,
        columns,
        submatrix: sub,
        sigma_min: smin,
        condition_number: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        roots_ok: root_residual <= ROOT_TOL,
        sum_ok: coefficient_sum <= 2.0 + SUM_SLACK,
        rank_ok: smin > 1e-12 * smax.max(1.0),
    })
}

/// Everything needed to re-verify that the ball of radius `delta` (in the
/// max-norm) about the origin lies in the attractor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorCertificate {
    pub spec: SystemSpec,
    pub poly: ToolPolynomial,
    pub delta: f64,
    pub submatrix_columns: Vec<usize>,
    pub condition_margins: ConditionReport,
}

/// `delta = σ_min(S) / √N` for the chosen `N × N` submatrix `S`: then
/// `‖S^{-1}x‖_∞ <= ‖S^{-1}‖₂ √N max|x_i| < 1`.
pub fn interior_radius(spec: &SystemSpec, poly: &ToolPolynomial) -> Result<InteriorCertificate> {
    let report = check_tool_conditions(spec, poly)?;
    if !report.passed() {
        return Err(Error::ConditionsFailed(report.failures()));
    }
    let n = report.columns.len() as f64;
    let delta = report.sigma_min / n.sqrt();
    Ok(InteriorCertificate {
        spec: *spec,
        poly: poly.clone(),
        delta,
        submatrix_columns: report.columns.clone(),
        condition_margins: report,
    })
}

/// The certificate for the built-in polynomial of the case, if there is one.
pub fn default_certificate(spec: &SystemSpec) -> Result<InteriorCertificate> {
    use crate::system::Case;
    let poly = match spec.case() {
        Case::MixedReal { lambda, mu } => mixed_real_poly(lambda, mu)?,
        Case::Jordan { nu } if nu > 0.0 => jordan_poly(nu)?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "no built-in polynomial for {}",
                spec.case_name()
            )))
        }
    };
    interior_radius(spec, &poly)
}

impl InteriorCertificate {
    /// Recomputes the conditions and the radius from the stored data.
    pub fn verify(&self) -> Result<()> {
        let fresh = interior_radius(&self.spec, &self.poly)?;
        if fresh.submatrix_columns != self.submatrix_columns {
            return Err(Error::ConditionsFailed("submatrix columns differ".into()));
        }
        if (fresh.delta - self.delta).abs() > 1e-12 * self.delta.max(1.0) || self.delta <= 0.0 {
            return Err(Error::ConditionsFailed(format!(
                "delta {} does not match recomputed {}",
                self.delta, fresh.delta
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRun {
    pub target: Vec2,
    /// `u_{-n} … u_{-1}`
    pub initial_residuals: Vec<f64>,
    pub digits: Word,
    /// `u_0 … u_{T-1}`
    pub residual_trace: Vec<f64>,
    pub max_residual: f64,
    /// `|π_T(digits) - target|` for the truncated sum.
    pub prefix_error: f64,
    /// Guaranteed bound on the distance from the truncated sum to any point
    /// of the cylinder of `digits`.
    pub error_bound: f64,
}

pub fn expand_point(cert: &InteriorCertificate, target: Vec2, steps: usize) -> Result<ExpansionRun> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    if target.norm_inf() >= cert.delta {
        return Err(Error::TargetOutsideDelta {
            target: target.into(),
            delta: cert.delta,
        });
    }
    let poly = &cert.poly;
    let n = poly.degree();
    let b = build_b_matrix(&cert.spec, poly)?;
    let sub = b.submatrix(&cert.submatrix_columns);
    let rhs = DVector::from_vec(vec![target.x, target.y]);
    let sol = sub
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::ConditionsFailed("singular submatrix".into()))?;
    let mut init = vec![0.0; n];
    for (i, &c) in cert.submatrix_columns.iter().enumerate() {
        init[c] = sol[i];
    }

    // u holds u_{-n} … u_{j-1}
    let mut u = init.clone();
    u.reserve(steps);
    let mut digits = Vec::with_capacity(steps);
    let mut max_residual = init.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_residual > 1.0 + RESIDUAL_SLACK {
        return Err(Error::ResidualEscape {
            step: 0,
            value: max_residual,
        });
    }
    for j in 0..steps {
        let s: f64 = (0..n).map(|k| poly.coeffs[k] * u[j + k]).sum();
        let a = if s >= 0.0 { 1.0 } else { -1.0 };
        let uj = a - s;
        if uj.abs() > 1.0 + RESIDUAL_SLACK {
            return Err(Error::ResidualEscape { step: j, value: uj });
        }
        max_residual = max_residual.max(uj.abs());
        digits.push(Symbol::from_sign(a));
        u.push(uj);
    }
    let digits = Word::new(digits);
    let point = project_finite(&cert.spec, &digits);
    let tail: Mat2 = cert.spec.matrix().pow(steps as u32);
    let error_bound = bounding_set(&cert.spec).support_norm_bound(tail);
    Ok(ExpansionRun {
        target,
        initial_residuals: init,
        digits,
        residual_trace: u[n..].to_vec(),
        max_residual,
        prefix_error: point.dist(target),
        error_bound,
    })
}

impl ExpansionRun {
    /// Shortest prefix of `digits` whose partial sum is within `tol` of the
    /// target, with its length and error.
    pub fn first_prefix_within(&self, spec: &SystemSpec, tol: f64) -> Option<(usize, f64)> {
        let m = spec.matrix();
        let mut term = spec.translation();
        let mut p = Vec2::ZERO;
        for (i, a) in self.digits.values().enumerate() {
            p += term * a;
            let e = p.dist(self.target);
            if e <= tol {
                return Some((i + 1, e));
            }
            term = m.apply(term);
        }
        None
    }

    /// Largest `|u_j + Σ_k b_k u_{j+k-n} - a_j|` over the run.
    pub fn recurrence_defect(&self, poly: &ToolPolynomial) -> f64 {
        let n = poly.degree();
        let mut all = self.initial_residuals.clone();
        all.extend_from_slice(&self.residual_trace);
        self.digits
            .values()
            .enumerate()
            .map(|(j, a)| {
                let s: f64 = (0..n).map(|k| poly.coeffs[k] * all[j + k]).sum();
                (all[j + n] + s - a).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_coefficients() {
        let p = mixed_real_poly(0.72, 0.95).unwrap();
        assert!((p.coeffs[1] - (1.0 / 0.72 - 1.0 / 0.95)).abs() < 1e-15);
        assert!((p.coeffs[0] + 1.0 / (0.72 * 0.95)).abs() < 1e-15);
        assert!(matches!(
            mixed_real_poly(0.5, 0.9),
            Err(Error::CoefficientSumExceeded { .. })
        ));
    }

    #[test]
    fn boundary_sum_accepted() {
        let l = std::f64::consts::FRAC_1_SQRT_2;
        let p = mixed_real_poly(l, l).unwrap();
        assert!(p.coeffs[1].abs() < 1e-15);
    }

    #[test]
    fn jordan_double_root() {
        let nu = 0.9;
        let p = jordan_poly(nu).unwrap();
        for s in 0..2 {
            let (v, mag) = p.scaled_derivative(s, 1.0 / nu);
            assert!(v.abs() < 1e-12 * mag, "s = {s}: {v}");
        }
        assert!(jordan_poly(0.83).is_err());
    }

    #[test]
    fn mixed_b_matrix_layout() {
        let (l, m) = (0.72, 0.95);
        let spec = SystemSpec::mixed_real(l, m).unwrap();
        let b = build_b_matrix(&spec, &mixed_real_poly(l, m).unwrap()).unwrap();
        // [[b0, b0(-λ) + b1], [b0, b0 μ + b1]] = [[-1/(λμ), 1/λ], [-1/(λμ), -1/μ]]
        assert!((b.get(0, 0) + 1.0 / (l * m)).abs() < 1e-14);
        assert!((b.get(0, 1) - 1.0 / l).abs() < 1e-14);
        assert!((b.get(1, 0) + 1.0 / (l * m)).abs() < 1e-14);
        assert!((b.get(1, 1) + 1.0 / m).abs() < 1e-14);
    }

    #[test]
    fn wrong_roots_fail_condition_one() {
        let spec = SystemSpec::mixed_real(0.72, 0.95).unwrap();
        let r = check_tool_conditions(&spec, &ToolPolynomial::new(vec![0.0, 0.0])).unwrap();
        assert!(!r.roots_ok);
        assert!(r.sum_ok);
    }

    #[test]
    fn origin_expands_without_escape() {
        let spec = SystemSpec::jordan(0.85).unwrap();
        let cert = default_certificate(&spec).unwrap();
        let run = expand_point(&cert, Vec2::ZERO, 300).unwrap();
        assert!(run.prefix_error < 1e-12 + run.error_bound);
        assert!(run.recurrence_defect(&cert.poly) < 1e-12);
    }
}

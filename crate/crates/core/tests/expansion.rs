use std::f64::consts::FRAC_1_SQRT_2;

use proptest::prelude::*;

use twomap::expansion::{
    check_tool_conditions, default_certificate, expand_point, interior_radius, jordan_poly, mixed_real_poly,
};
use twomap::{SystemSpec, Vec2};

fn interior_pair() -> impl Strategy<Value = (f64, f64)> {
    (FRAC_1_SQRT_2..0.999, FRAC_1_SQRT_2..0.999)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_residuals_follow_recurrence((l, m) in interior_pair(), r in 0.0f64..1.0, th in 0.0..std::f64::consts::TAU) {
        let spec = SystemSpec::mixed_real(l, m).unwrap();
        let cert = default_certificate(&spec).unwrap();
        let rad = cert.delta * r * 0.999 / 2f64.sqrt();
        let run = expand_point(&cert, Vec2::new(rad * th.cos(), rad * th.sin()), 300).unwrap();
        prop_assert!(run.recurrence_defect(&cert.poly) <= 1e-12);
        prop_assert!(run.max_residual <= 1.0 + 1e-12);
        // the bound can sit far below double precision
        prop_assert!(run.prefix_error <= run.error_bound + 1e-13);
    }

    #[test]
    fn jordan_residuals_follow_recurrence(nu in 0.832f64..0.99, r in 0.0f64..1.0, th in 0.0..std::f64::consts::TAU) {
        let spec = SystemSpec::jordan(nu).unwrap();
        let cert = default_certificate(&spec).unwrap();
        let rad = cert.delta * r * 0.999 / 2f64.sqrt();
        let run = expand_point(&cert, Vec2::new(rad * th.cos(), rad * th.sin()), 300).unwrap();
        prop_assert!(run.recurrence_defect(&cert.poly) <= 1e-12);
        prop_assert!(run.max_residual <= 1.0 + 1e-12);
    }
}

#[test]
fn reprojection_error_decays_geometrically() {
    for spec in [SystemSpec::mixed_real(0.72, 0.95).unwrap(), SystemSpec::jordan(0.85).unwrap()] {
        let cert = default_certificate(&spec).unwrap();
        let target = Vec2::new(0.3 * cert.delta, -0.2 * cert.delta);
        let mut pts = Vec::new();
        for t in (50..=400).step_by(25) {
            let run = expand_point(&cert, target, t).unwrap();
            assert!(run.prefix_error <= run.error_bound + 1e-13, "{spec} t={t}");
            pts.push((t as f64, run.error_bound.ln()));
        }
        // least-squares slope of log bound against t
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / n, sy / n);
        let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        let slope = num / den;
        let rho = spec.spectral_radius();
        assert!(slope <= rho.ln() * 0.95, "{spec}: slope {slope} vs log rho {}", rho.ln());
    }
}

#[test]
fn square_grid_has_interior() {
    for i in 0..20 {
        for j in 0..20 {
            let l = FRAC_1_SQRT_2 + (0.999 - FRAC_1_SQRT_2) * i as f64 / 19.0;
            let m = FRAC_1_SQRT_2 + (0.999 - FRAC_1_SQRT_2) * j as f64 / 19.0;
            let spec = SystemSpec::mixed_real(l, m).unwrap();
            let poly = mixed_real_poly(l, m).unwrap();
            let cert = interior_radius(&spec, &poly).unwrap();
            assert!(cert.delta > 0.0, "({l}, {m})");
            cert.verify().unwrap();
        }
    }
}

#[test]
fn jordan_threshold_is_monotone() {
    for nu in [0.8315, 0.9, 0.99] {
        assert!(jordan_poly(nu).is_ok(), "{nu}");
    }
    for nu in [0.83, 0.7] {
        assert!(jordan_poly(nu).is_err(), "{nu}");
    }
}

#[test]
fn condition_report_outside_region() {
    let spec = SystemSpec::mixed_real(0.5, 0.9).unwrap();
    assert!(mixed_real_poly(0.5, 0.9).is_err());
    let ok = check_tool_conditions(&spec, &mixed_real_poly(0.75, 0.9).unwrap()).unwrap();
    assert!(!ok.passed(), "roots belong to a different system");
}

use std::f64::consts::PI;

use gaussphase::dynamics::{initial_covariance, propagate};
use gaussphase::transform::{balance_residuals, symplectic_matrix};
use gaussphase::*;
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -PI..=PI
}

fn squeezed() -> impl Strategy<Value = SqueezedParams> {
    (0.05f64..2.0, angle()).prop_map(|(s, phi)| SqueezedParams::new(s, phi).unwrap())
}

fn local() -> impl Strategy<Value = LocalSymplectic> {
    (-1.5f64..1.5, angle(), angle()).prop_map(|(r, t, p)| LocalSymplectic::new(r, t, p))
}

proptest! {
    #[test]
    fn local_symplectic_has_unit_determinant(m in local()) {
        prop_assert!((symplectic_matrix(m.r, m.theta, m.psi).determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn local_transforms_preserve_invariants(p in squeezed(), a in local(), b in local()) {
        let v = covariance_of_squeezed(p);
        let w = apply_local(&v, &a, &b);
        let scale = w.matrix().amax().powi(4).max(1.0);
        prop_assert!((w.det() - 1.0 / 16.0).abs() < 1e-12 * scale);
        prop_assert!((w.a().determinant() - v.a().determinant()).abs() < 1e-10 * scale);
        prop_assert!((entropy_from_covariance(&w).unwrap() - entanglement(p.s).unwrap()).abs() < 1e-8);
        // EPR-type combinations are not local invariants, but det C is
        prop_assert!((w.c().determinant() - v.c().determinant()).abs() < 1e-10 * scale);
    }

    #[test]
    fn squeezed_round_trip(p in squeezed()) {
        let v = covariance_of_squeezed(p);
        prop_assert!((squeezing_strength(&v).unwrap() - p.s).abs() < 1e-10);
        prop_assert!(gaussphase::state::angle_distance(phase(&v).unwrap(), p.phi) < 1e-10);
        let w = covariance_from_coeffs(&coeffs_from_squeezed(p)).unwrap();
        prop_assert!(w.max_abs_diff(&v) < 1e-10 * v.matrix().amax());
    }

    #[test]
    fn symmetric_extraction_recovers_strength(p in squeezed(), r in -1.2f64..1.2, theta in angle(), psi in angle()) {
        let m = LocalSymplectic::new(r, theta, psi);
        let v = apply_local(&covariance_of_squeezed(p), &m, &m);
        let ext = phase_extraction(&v).unwrap();
        prop_assert!((ext.s - p.s).abs() < 1e-7);
        let (s1, s2) = associated_transform(&v).unwrap();
        let w = apply_local(&v, &s1, &s2);
        let target = covariance_of_squeezed(SqueezedParams::new(ext.s, ext.phi).unwrap());
        prop_assert!(w.max_abs_diff(&target) < 1e-8);
        let res = balance_residuals(&v).unwrap();
        let scale = v.matrix().amax().powi(2).max(1.0);
        prop_assert!(res.residual_a.abs() < 1e-9 * scale && res.residual_b.abs() < 1e-9 * scale);
    }

    #[test]
    fn propagation_preserves_flow_invariants(s0 in 0.0f64..2.0, phi0 in angle(), t in 0.0f64..20.0) {
        let v0 = initial_covariance(s0, phi0);
        let v = propagate(&v0, t);
        let scale = v.matrix().amax().max(1.0);
        prop_assert!((epr_dispersion(&v) - epr_dispersion(&v0)).abs() < 1e-12 * scale);
        prop_assert!((v.a() - v.b()).amax() < 1e-12 * scale);
        prop_assert!((v.a().determinant() + v.c().determinant() - 0.25).abs() < 1e-13 * scale * scale);
    }

    #[test]
    fn wrap_angle_lands_in_half_open_interval(x in -100.0f64..100.0) {
        let y = wrap_angle(x);
        prop_assert!(y > -PI && y <= PI);
        prop_assert!(((x - y) / (2.0 * PI) - ((x - y) / (2.0 * PI)).round()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn general_solver_on_asymmetric_states(p in squeezed(), a in local(), b in local()) {
        let v = apply_local(&covariance_of_squeezed(p), &a, &b);
        let sol = solve_general(&v, &SolverOptions::default(), Exec::Sequential).unwrap();
        prop_assert!((sol.squeezed.s - p.s).abs() < 1e-6);
        prop_assert!(sol.residual < 1e-8);
    }
}

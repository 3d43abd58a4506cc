use ocean_rays::dynamics::{rossby_symbol, rossby_vector_field};
use ocean_rays::modes::{polarization_matrices, polarization_residuals};
use ocean_rays::profiles::{make_betaplane, make_bump, make_signed_zonal, CoriolisProfile};
use ocean_rays::reduced::potential;
use ocean_rays::spectral::dispersion_roots;
use ocean_rays::transport::{
    propagate_snapshots, sample_initial, Mode, PhaseBox, SamplingSpec, TransportOptions,
};
use ocean_rays::trapping::{drift_velocity, TrappingOptions};
use ocean_rays::{PhasePoint, Profiles, ZonalProfile};
use proptest::prelude::*;

fn profile_set() -> Vec<Profiles> {
    vec![
        Profiles::betaplane(1.0).unwrap(),
        Profiles::new(make_signed_zonal(0.3, 2.0).unwrap(), make_betaplane(1.0).unwrap()),
        Profiles::new(make_bump(0.2, 0.8, 0.5).unwrap(), make_betaplane(1.5).unwrap()),
        Profiles::new(
            make_bump(-0.3, 1.0, -0.4).unwrap(),
            CoriolisProfile::Quadratic {
                curvature: 0.7,
                offset: 0.2,
            },
        ),
    ]
}

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v })
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn potential_recovers_xi2_squared(
        k in 0usize..4,
        xi1 in nonzero(0.3, 3.0),
        x2 in -1.5f64..1.5,
        xi2 in -2.0f64..2.0,
    ) {
        let p = profile_set()[k];
        let tau = rossby_symbol(xi1, x2, xi2, &p).unwrap();
        prop_assume!((tau - p.zonal.value(x2) * xi1).abs() > 1e-6);
        let v = potential(tau, xi1, x2, &p).unwrap();
        prop_assert!((v - xi2 * xi2).abs() < 1e-9 * (1.0 + xi2 * xi2 + xi1 * xi1), "{v} vs {}", xi2 * xi2);
    }

    #[test]
    fn vector_field_is_the_symbol_gradient(
        k in 0usize..4,
        xi1 in nonzero(0.3, 3.0),
        x2 in -1.5f64..1.5,
        xi2 in -2.0f64..2.0,
    ) {
        let p = profile_set()[k];
        let f = rossby_vector_field(&PhasePoint::new(0.0, xi1, x2, xi2).unwrap(), &p);
        let h = 1e-5;
        let sym = |a: f64, b: f64, c: f64| rossby_symbol(a, b, c, &p).unwrap();
        let d_xi1 = (sym(xi1 + h, x2, xi2) - sym(xi1 - h, x2, xi2)) / (2.0 * h);
        let d_xi2 = (sym(xi1, x2, xi2 + h) - sym(xi1, x2, xi2 - h)) / (2.0 * h);
        let d_x2 = (sym(xi1, x2 + h, xi2) - sym(xi1, x2 - h, xi2)) / (2.0 * h);
        prop_assert!(rel_err(f.x1_dot, d_xi1) < 1e-6, "{} {}", f.x1_dot, d_xi1);
        prop_assert!(rel_err(f.x2_dot, d_xi2) < 1e-6, "{} {}", f.x2_dot, d_xi2);
        prop_assert!(rel_err(f.xi2_dot, -d_x2) < 1e-6, "{} {}", f.xi2_dot, -d_x2);
    }

    #[test]
    fn polarization_basis_inverts(
        x2 in -4.0f64..4.0,
        xi1 in nonzero(0.05, 5.0),
        xi2 in -5.0f64..5.0,
        k in 0usize..4,
    ) {
        let b = profile_set()[k].coriolis;
        let m = polarization_matrices(x2, xi1, xi2, &b).unwrap();
        prop_assert!(m.identity_defect() < 1e-12);
        let det = m.det_p0().norm();
        prop_assert!((det - m.det_formula()).abs() < 1e-12 * m.det_formula());
        prop_assert!(det >= 2.0 * (1.0 - 1e-14));
        let scale = m.s().max(1.0) * m.p0.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(polarization_residuals(&m).iter().all(|r| *r < 1e-12 * scale));
    }

    #[test]
    fn dispersion_roots_satisfy_vieta(
        xi1 in nonzero(0.05, 10.0),
        n in 0u32..200,
        eps in 1e-4f64..0.5,
        beta in 0.1f64..5.0,
    ) {
        let r = dispersion_roots(xi1, n, eps, beta).unwrap();
        let scale = r.tau_plus.abs().max(r.tau_minus.abs());
        prop_assert!(r.tau_minus < r.tau_r && r.tau_r < r.tau_plus);
        prop_assert!(r.residuals().iter().all(|e| e.abs() < 1e-12 * scale.powi(3).max(1.0)));
        let (sum, prod) = r.vieta_defects();
        prop_assert!(sum.abs() < 1e-13 * scale.max(1.0));
        prop_assert!(prod.abs() < 1e-12 * scale.powi(3).max(1.0));
        prop_assert_eq!(r.tau_r.signum(), xi1.signum());
    }

    #[test]
    fn signed_zonal_is_odd_in_scale(s in 0.05f64..2.0, w in 0.5f64..3.0, y in -3.0f64..3.0) {
        let a = make_signed_zonal(s, w).unwrap().jet(y);
        let b = make_signed_zonal(-s, w).unwrap().jet(y);
        prop_assert_eq!(a.value, -b.value);
        prop_assert_eq!(a.d1, -b.d1);
        prop_assert_eq!(a.d2, -b.d2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // x -> lambda x, xi -> lambda xi maps betaplane circles to circles and
    // scales the drift by lambda^-2.
    #[test]
    fn betaplane_drift_scales_inversely_with_frequency_squared(
        xi1 in 0.5f64..2.0,
        r in 0.3f64..2.0,
        theta in 0.0f64..std::f64::consts::TAU,
        lambda in 0.5f64..2.0,
    ) {
        let p = Profiles::betaplane(1.0).unwrap();
        let opts = TrappingOptions::default();
        let a = PhasePoint::new(0.0, xi1, r * theta.cos(), r * theta.sin()).unwrap();
        let b = PhasePoint::new(0.0, lambda * xi1, lambda * r * theta.cos(), lambda * r * theta.sin()).unwrap();
        let da = drift_velocity(&a, &p, &opts).unwrap().drift;
        let db = drift_velocity(&b, &p, &opts).unwrap().drift;
        let exact = (r * r - xi1 * xi1) / (xi1 * xi1 + r * r).powi(2);
        prop_assert!((da - exact).abs() < 1e-8, "{da} {exact}");
        prop_assert!((db * lambda * lambda - da).abs() < 1e-8, "{db} {da}");
    }

    #[test]
    fn transport_conserves_weight(seed in 0u64..1000, count in 1usize..64, plus in any::<bool>()) {
        let p = Profiles::new(ZonalProfile::Zero, make_betaplane(1.0).unwrap());
        let spec = SamplingSpec {
            region: PhaseBox { x1: (-1.0, 1.0), xi1: (0.5, 2.0), x2: (-1.0, 1.0), xi2: (-1.0, 1.0) },
            count,
            mode: if plus { Mode::PoincarePlus } else { Mode::Rossby },
            seed,
            tol_sigma: 1e-6,
            retry_budget: 100,
        };
        let e = sample_initial(&spec, &p).unwrap();
        prop_assert_eq!(e.len(), count);
        prop_assert!((e.total_weight() - 1.0).abs() < 1e-14);
        for s in propagate_snapshots(&e, &[0.0, 3.0, 30.0], &p, &TransportOptions::default()).unwrap() {
            prop_assert_eq!(s.total_weight(), e.total_weight());
            prop_assert!(s.particles.iter().zip(&e.particles).all(|(a, b)| a.point.xi1() == b.point.xi1()));
        }
    }
}

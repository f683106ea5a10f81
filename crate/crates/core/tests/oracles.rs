use aiez_core::detectors::{qmd_statistic, DetectorConfig, QmdObservation};
use aiez_core::heading::compass_heading;
use aiez_core::math::{
    euler_from_rotmat, pade_attitude_correct, rodrigues, rotmat_from_euler, skew3, wrap_angle, EulerAngles, Quaternion,
    Vec3,
};
use proptest::prelude::*;

/// Likelihood ratio `p(z; H1) / p(z; H0)` from the per-sample Gaussian
/// densities, evaluated as raw products.
fn likelihood_ratio(window: &[QmdObservation], cfg: &DetectorConfig) -> f64 {
    let gauss = |x: f64, s: f64| (-(x * x) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).sqrt();
    let flat = |s: f64| 1.0 / (2.0 * std::f64::consts::PI * s * s).sqrt();
    let h1: f64 = window
        .iter()
        .map(|o| gauss(o.heading_diff, cfg.sigma_heading) * gauss(o.field_dev, cfg.sigma_field))
        .product();
    let h0: f64 = window.iter().map(|_| flat(cfg.sigma_heading) * flat(cfg.sigma_field)).product();
    h1 / h0
}

fn observation() -> impl Strategy<Value = QmdObservation> {
    (-0.3..0.3f64, -0.15..0.15f64).prop_map(|(dpsi, db)| QmdObservation {
        heading_diff: dpsi.abs(),
        field_dev: db,
    })
}

fn euler() -> impl Strategy<Value = EulerAngles> {
    let lim = 80f64.to_radians();
    (-lim..lim, -lim..lim, -179f64.to_radians()..179f64.to_radians())
        .prop_map(|(r, p, h)| EulerAngles::new(r, p, h))
}

proptest! {
    #[test]
    fn glrt_statistic_is_scaled_log_likelihood(window in prop::collection::vec(observation(), 50)) {
        let cfg = DetectorConfig::default();
        let t = qmd_statistic(&window, &cfg).unwrap();
        let oracle = -2.0 / window.len() as f64 * likelihood_ratio(&window, &cfg).ln();
        prop_assert!((t - oracle).abs() <= 1e-9, "{} vs {}", t, oracle);
    }

    #[test]
    fn compass_inverts_the_body_field(e in euler(), incl in -80f64..80.0, decl in -0.5f64..0.5) {
        let incl = incl.to_radians();
        let field_n = Vec3::new(incl.cos(), 0.0, -incl.sin());
        let body = rotmat_from_euler(&e).transpose() * field_n;
        let h0 = compass_heading(&body, e.roll, e.pitch, 0.0).unwrap();
        prop_assert!(wrap_angle(h0 - e.heading).abs() <= 1e-9);
        let hd = compass_heading(&body, e.roll, e.pitch, decl).unwrap();
        prop_assert_eq!(hd, wrap_angle(h0 + decl));
    }

    #[test]
    fn euler_round_trip(e in euler()) {
        let back = euler_from_rotmat(&rotmat_from_euler(&e)).unwrap();
        prop_assert!((back.roll - e.roll).abs() <= 1e-10);
        prop_assert!((back.pitch - e.pitch).abs() <= 1e-10);
        prop_assert!(wrap_angle(back.heading - e.heading).abs() <= 1e-10);
    }

    #[test]
    fn pade_matches_exponential_at_small_angles(e in euler(), dir in prop::array::uniform3(-1.0f64..1.0)) {
        let d = Vec3::from(dir);
        prop_assume!(d.norm() > 1e-3);
        let d = d.normalize() * 1e-2;
        let c = rotmat_from_euler(&e);
        let corrected = pade_attitude_correct(&c, &d);
        prop_assert!((corrected - rodrigues(&-d) * c).norm() <= 1e-6);
        prop_assert!((corrected.transpose() * corrected - nalgebra::Matrix3::identity()).norm() <= 1e-12);
    }

    #[test]
    fn propagation_keeps_unit_norm(e in euler(), w in prop::array::uniform3(-10.0f64..10.0), dt in 1e-4f64..0.1) {
        let mut q = Quaternion::from_euler(&e);
        for _ in 0..100 {
            q = q.propagate(&Vec3::from(w), dt);
        }
        prop_assert!((q.norm() - 1.0).abs() <= 1e-9);
        let c = q.to_rotmat();
        prop_assert!((c.transpose() * c - nalgebra::Matrix3::identity()).norm() <= 1e-12);
    }

    #[test]
    fn skew_is_cross(v in prop::array::uniform3(-1e3f64..1e3), w in prop::array::uniform3(-1e3f64..1e3)) {
        let (v, w) = (Vec3::from(v), Vec3::from(w));
        prop_assert!((skew3(&v) * w - v.cross(&w)).norm() <= 1e-9 * (1.0 + v.norm() * w.norm()));
    }
}

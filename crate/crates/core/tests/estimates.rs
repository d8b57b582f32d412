use systole::calibration::CutoffProfile;
use systole::cylinder::CylinderMetric;
use systole::discrete::{
    build_complex, minimize_mass, pairing, reference_cycle_m, sampled_calibration_dual, LpSettings, Resolution,
};
use systole::geodesics::{integrate_geodesic, GeodesicState};
use systole::loops::{default_torus_classes, nilmanifold_sys1_estimate, sys1_estimate, LoopClass, ShorteningConfig};
use systole::metric::Point3;

#[test]
fn sys1_does_not_collapse_with_j() {
    let cfg = ShorteningConfig::default();
    for j in 1..=8 {
        let m = CylinderMetric::new(j).unwrap();
        let est = sys1_estimate(&m, &default_torus_classes(), 2, 11, &cfg).unwrap();
        assert!(!est.certified);
        assert!(est.value >= 0.5 && est.value <= 1.0 + 1e-6, "j = {j}: {}", est.value);
        let t1 = est.classes.iter().find(|c| c.class == LoopClass::Torus { wy: 1, wz: 0 }).unwrap();
        assert!((t1.best - 1.0).abs() < 1e-3, "j = {j}: T^1 shortened to {}", t1.best);
    }
}

#[test]
fn nilmanifold_generators() {
    let est = nilmanifold_sys1_estimate(2, 3, &ShorteningConfig::default()).unwrap();
    for (x, y, z) in [(0, 1, 0), (0, 0, 1)] {
        let c = est.classes.iter().find(|c| c.class == LoopClass::Heisenberg { x, y, z }).unwrap();
        assert!(c.best <= 1.0 + 1e-9, "{c:?}");
    }
    assert!(est.value >= 0.5 && est.value <= 1.0 + 1e-9);
}

#[test]
fn large_steps_show_up_as_speed_drift() {
    let m = CylinderMetric::new(10).unwrap();
    let start = GeodesicState::new(Point3::new(5.0, 0.0, 0.0), [0.3, 1.0, 0.5]);
    let fine = integrate_geodesic(&m, start, 20.0, 1e-3).unwrap();
    let coarse = integrate_geodesic(&m, start, 20.0, 0.5).unwrap();
    assert!(fine.speed_drift < 1e-8);
    assert!(coarse.speed_drift > 1e-8, "{}", coarse.speed_drift);
}

#[test]
fn lp_optimum_is_stable_under_refinement() {
    let m = CylinderMetric::new(2).unwrap();
    let mut optima = Vec::new();
    for res in [Resolution::new(16, 8, 8), Resolution::new(32, 16, 16)] {
        let c = build_complex(&m, res).unwrap();
        let r = reference_cycle_m(&c, 0);
        let cert = minimize_mass(&c, &r, &LpSettings::default()).unwrap();
        let lower = pairing(&sampled_calibration_dual(&c, &CutoffProfile::standard(2).unwrap()), &r);
        assert!(lower <= cert.primal_mass && cert.primal_mass <= r.mass(&c) * (1.0 + 1e-9));
        optima.push(cert.primal_mass);
    }
    assert!((optima[1] / optima[0] - 1.0).abs() < 0.05, "{optima:?}");
}

#[test]
fn reference_mass_tracks_area_under_refinement() {
    let m = CylinderMetric::new(2).unwrap();
    let area = m.area_m_closed_form();
    for (res, tol) in [(Resolution::new(16, 8, 8), 0.10), (Resolution::new(32, 16, 16), 0.03)] {
        let c = build_complex(&m, res).unwrap();
        let mass = reference_cycle_m(&c, 0).mass(&c);
        assert!((mass / area - 1.0).abs() <= tol, "{res:?}: {mass} vs {area}");
    }
}

//! Quick invariant suite behind the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    alpha_residuals, closedness_check, cutoff_alpha_samples, integrate_form_over_m, plateau_lower_bound, CutoffAlpha,
    CutoffProfile,
};
use crate::cylinder::{heisenberg_relation_check, CylinderMetric};
use crate::discrete::{
    build_complex, certificate_check, minimize_mass, pairing, reference_cycle_m, sampled_calibration_dual, LpSettings,
    Resolution,
};
use crate::error::Result;
use crate::flat_torus::{
    class_length, loewner_ratio, moduli_point, shortest_vector, slice_gram, torus_diameter, GramMatrix2, LOEWNER_BOUND,
};
use crate::torus3::{assemble, intersection_counts, AssemblyConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckResult { name: name.into(), passed, detail }
}

pub fn run_suite(tol: f64, seed: u64) -> Vec<CheckResult> {
    vec![
        check("volume", || {
            let mut worst = 0.0f64;
            for j in [1, 2, 4, 8] {
                let v = CylinderMetric::new(j)?.volume(tol)?;
                worst = worst.max((v - 2.0 * j as f64).abs());
            }
            Ok((worst < 1e-6, format!("max |vol - 2j| = {worst:e}")))
        }),
        check("area", || {
            let mut worst = 0.0f64;
            for j in 1..=16 {
                let m = CylinderMetric::new(j)?;
                worst = worst.max((m.area_m(tol.min(1e-11))? - m.area_m_closed_form()).abs());
            }
            Ok((worst < 1e-9, format!("max deviation {worst:e}")))
        }),
        check("calibration_bound", || {
            let mut ok = true;
            for j in 2..=16 {
                ok &= integrate_form_over_m(&CutoffProfile::standard(j)?, tol)? >= plateau_lower_bound(j);
            }
            Ok((ok, "int phi_j alpha >= plateau bound for j = 2..16".into()))
        }),
        check("comass_hodge", || {
            let r = alpha_residuals(&CylinderMetric::new(8)?, 2000, seed);
            Ok((r.comass < 1e-10 && r.hodge < 1e-10, format!("{r:?}")))
        }),
        check("closedness", || {
            let phi = CutoffProfile::standard(6)?;
            let res = closedness_check(&CutoffAlpha { phi }, &cutoff_alpha_samples(&phi), 1e-4)?;
            Ok((res < 1e-6, format!("max |d(phi alpha)| = {res:e}")))
        }),
        check("psi_isometry", || {
            let r = CylinderMetric::new(4)?.isometry_check_psi(500, seed)?;
            Ok((r.periodic_region < 1e-12, format!("{r:?}")))
        }),
        check("instability", || {
            let mut ok = true;
            for j in 1..=64u32 {
                let m = CylinderMetric::new(j)?;
                ok &= class_length(&slice_gram(j as f64), [1, j as i64]) == 1.0;
                ok &= (m.mass1_slide_bound().mass1_bound - 1.0 / j as f64).abs() < 1e-15;
            }
            Ok((ok, "T^1 + jC has unit length on the middle fibre".into()))
        }),
        check("slices", || {
            let mut ok = true;
            for i in 0..=200 {
                let g = slice_gram(0.05 * i as f64);
                let m = moduli_point(&g);
                ok &= (g.det() - 1.0).abs() < 1e-9
                    && (shortest_vector(&g).0 - 1.0).abs() < 1e-9
                    && (m.t - 1.0).abs() < 1e-9
                    && m.s.abs() <= 0.5 + 1e-12
                    && torus_diameter(&g) < 1.0;
            }
            Ok((ok, "det, sys1, moduli and diameter over 201 slices".into()))
        }),
        check("group_relation", || Ok((heisenberg_relation_check(50), "j = 1..50".into()))),
        check("loewner", || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..1000 {
                let (a, b, d) = (rng.gen_range(0.1..5.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.1..5.0));
                if let Ok(g) = GramMatrix2::new(a, b, a * d + b * b / a) {
                    worst = worst.max(loewner_ratio(&g));
                }
            }
            Ok((worst <= LOEWNER_BOUND + 1e-12, format!("max ratio {worst}")))
        }),
        check("lp_sandwich", || {
            let m = CylinderMetric::new(2)?;
            let c = build_complex(&m, Resolution::default_for(2))?;
            let r = reference_cycle_m(&c, 0);
            let cert = minimize_mass(&c, &r, &LpSettings::default())?;
            let lower = pairing(&sampled_calibration_dual(&c, &CutoffProfile::standard(2)?), &r);
            let ok = certificate_check(&cert, &c, 1e-6).is_ok()
                && lower <= cert.primal_mass + 1e-9
                && cert.primal_mass <= r.mass(&c) * (1.0 + 1e-9);
            Ok((ok, format!("{lower} <= {} <= {}", cert.primal_mass, r.mass(&c))))
        }),
        check("assembly", || {
            let cfg = AssemblyConfig::standard(2);
            let s = assemble(&cfg)?.seam_residuals(16)?;
            let counts = intersection_counts(&cfg)?;
            let ok = s.flat_collar < 1e-12 && s.collar_insert < 1e-12 && counts == [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
            Ok((ok, format!("{s:?}")))
        }),
    ]
}

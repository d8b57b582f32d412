//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use systole::calibration::{alpha_at, integrate_form_over_m, CutoffAlpha, CutoffProfile, TwoForm};
use systole::cylinder::CylinderMetric;
use systole::discrete::{
    build_complex, certificate_check, dual_feasibility, minimize_mass, pairing, reference_cycle_m,
    sampled_calibration_dual, LpSettings, Resolution,
};
use systole::flat_torus::{class_length, loewner_ratio, moduli_point, slice_gram, torus_diameter, GramMatrix2};
use systole::group::{relation_holds_at, UnipotentMatrix};
use systole::metric::Point3;
use systole::torus3::{report, t4_product_report, AssemblyConfig, Sys1Constants};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Shortest vector by exhaustive enumeration over a coefficient box.
fn brute_shortest(g: &GramMatrix2, radius: i64) -> f64 {
    let mut best = f64::INFINITY;
    for p in -radius..=radius {
        for q in -radius..=radius {
            if (p, q) != (0, 0) {
                let (p, q) = (p as f64, q as f64);
                best = best.min(g.a * p * p + 2.0 * g.b * p * q + g.d * q * q);
            }
        }
    }
    best.sqrt()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn volume_law() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for j in [1u32, 2, 4, 8, 16] {
        let v = CylinderMetric::new(j).map_err(err)?.volume(1e-10).map_err(err)?;
        // det g_j = 1 identically, so the volume is the coordinate volume.
        worst = worst.max((v - 2.0 * j as f64).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-6, format!("max |vol - 2j| = {worst:e}"))?;
    ensure(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("max |vol - 2j| = {worst:e} in {secs:.3} s"))
}

fn area_law() -> Outcome {
    let mut worst = 0.0f64;
    for j in 1..=64u32 {
        let jf = j as f64;
        let closed = jf * (1.0 + jf * jf).sqrt() + (jf + (1.0 + jf * jf).sqrt()).ln();
        let a = CylinderMetric::new(j).map_err(err)?.area_m(1e-12).map_err(err)?;
        worst = worst.max((a - closed).abs());
    }
    let ratio = CylinderMetric::new(64).map_err(err)?.area_m(1e-12).map_err(err)? / 4096.0;
    ensure(worst <= 1e-9, format!("max deviation {worst:e}"))?;
    ensure((0.95..=1.10).contains(&ratio), format!("area/j^2 = {ratio}"))?;
    Ok(format!("max deviation {worst:e}, area(64)/64^2 = {ratio:.5}"))
}

fn calibration_bound() -> Outcome {
    let mut tightest = f64::INFINITY;
    for j in 2..=32u32 {
        let bound = integrate_form_over_m(&CutoffProfile::standard(j).map_err(err)?, 1e-10).map_err(err)?;
        let top = j as f64 - 1.0;
        let plateau = if top > 1.0 { 0.5 * (top * top - 1.0) } else { 0.0 };
        ensure(bound >= plateau, format!("j = {j}: {bound} < {plateau}"))?;
        tightest = tightest.min(bound - plateau);
    }
    let b32 = integrate_form_over_m(&CutoffProfile::standard(32).map_err(err)?, 1e-10).map_err(err)?;
    let ratio = b32 / 512.0;
    ensure((0.85..=1.15).contains(&ratio), format!("bound(32) / (32^2/2) = {ratio}"))?;
    Ok(format!("min margin over plateau {tightest:.4}, ratio at 32 = {ratio:.4}"))
}

/// Components `(e1^e2, e1^e3, e2^e3)` of a coordinate 2-form in the
/// orthonormal coframe `e1 = dx, e2 = dy, e3 = dz - s dy`.
fn frame_components(xy: f64, xz: f64, yz: f64, s: f64) -> [f64; 3] {
    // Dual frame: E1 = d/dx, E2 = d/dy + s d/dz, E3 = d/dz.
    let w = |u: [f64; 3], v: [f64; 3]| {
        xy * (u[0] * v[1] - u[1] * v[0]) + xz * (u[0] * v[2] - u[2] * v[0]) + yz * (u[1] * v[2] - u[2] * v[1])
    };
    let (e1, e2, e3) = ([1.0, 0.0, 0.0], [0.0, 1.0, s], [0.0, 0.0, 1.0]);
    [w(e1, e2), w(e1, e3), w(e2, e3)]
}

fn comass_and_hodge() -> Outcome {
    let j = 7u32;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut comass, mut hodge) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let p = Point3::new(rng.gen_range(0.0..=j as f64), rng.gen(), rng.gen());
        let a = alpha_at(p);
        let f = frame_components(a.xy, a.xz, a.yz, p.x);
        // For a 2-form in three dimensions the comass is the Euclidean norm
        // of its frame components.
        let c = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
        comass = comass.max((c - 1.0).abs());
        // *dz with dz = e3 + s e2: *e3 = e1^e2, *e2 = -e1^e3.
        let star = [1.0, -p.x, 0.0];
        let k = (1.0 + p.x * p.x).sqrt();
        for i in 0..3 {
            hodge = hodge.max((k * f[i] - star[i]).abs());
        }
    }
    ensure(comass < 1e-10 && hodge < 1e-10, format!("comass {comass:e}, hodge {hodge:e}"))?;
    Ok(format!("comass residual {comass:e}, hodge residual {hodge:e} over 10^4 points"))
}

/// `d omega` by central differences in a unimodular oblique chart.
fn d_fd(form: &dyn TwoForm, q: [f64; 3], h: f64) -> f64 {
    let a = Matrix3::new(1.0, 0.3, 0.2, 0.0, 1.0, 0.4, 0.0, 0.0, 1.0);
    let pulled = |q: [f64; 3]| {
        let x = a * nalgebra::Vector3::from(q);
        let w = form.eval(Point3::new(x[0], x[1], x[2]));
        let m = Matrix3::new(0.0, w.xy, w.xz, -w.xy, 0.0, w.yz, -w.xz, -w.yz, 0.0);
        a.transpose() * m * a
    };
    let shifted = |i: usize, s: f64| {
        let mut p = q;
        p[i] += s;
        pulled(p)
    };
    let du = (shifted(0, h) - shifted(0, -h)) / (2.0 * h);
    let dv = (shifted(1, h) - shifted(1, -h)) / (2.0 * h);
    let dw = (shifted(2, h) - shifted(2, -h)) / (2.0 * h);
    du[(1, 2)] - dv[(0, 2)] + dw[(0, 1)]
}

fn closedness() -> Outcome {
    let j = 6u32;
    let phi = CutoffProfile::standard(j).map_err(err)?;
    let form = CutoffAlpha { phi };
    let knots = phi.knots();
    let inv = Matrix3::new(1.0, 0.3, 0.2, 0.0, 1.0, 0.4, 0.0, 0.0, 1.0).try_inverse().unwrap();
    let mut pts = Vec::new();
    for i in 0..60 {
        let x = 0.05 + (j as f64 - 0.1) * i as f64 / 59.0;
        if knots.iter().any(|k| (x - k).abs() < 0.06) {
            continue;
        }
        for (y, z) in [(0.2, 0.3), (0.7, 0.9)] {
            let q = inv * nalgebra::Vector3::new(x, y, z);
            pts.push([q[0], q[1], q[2]]);
        }
    }
    let worst = |h: f64| pts.iter().map(|q| d_fd(&form, *q, h).abs()).fold(0.0, f64::max);
    let r4 = worst(1e-4);
    let (r1, r2) = (worst(1e-2), worst(5e-3));
    let ratio = r1 / r2;
    ensure(r4 < 1e-6, format!("residual {r4:e} at h = 1e-4"))?;
    ensure((3.5..=4.5).contains(&ratio), format!("convergence ratio {ratio}"))?;
    Ok(format!("residual {r4:e} at h = 1e-4; ratio {ratio:.3} (h = 1e-2 vs 5e-3)"))
}

fn isometry() -> Outcome {
    let m = CylinderMetric::new(4).map_err(err)?;
    // Left multiplication by the x-generator: (x, y, z) -> (x + 1, y, z + y).
    let jac = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..5000 {
        let p = Point3::new(rng.gen_range(0.0..=3.0), rng.gen(), rng.gen());
        let img = Point3::new(p.x + 1.0, p.y, p.z + p.y);
        let lib = CylinderMetric::psi(p);
        ensure(lib == img, format!("psi({p:?}) = {lib:?}"))?;
        let pulled = jac.transpose() * m.metric_at(img).0 * jac;
        worst = worst.max((pulled - m.metric_at(p).0).abs().max());
    }
    ensure(worst < 1e-12, format!("pullback residual {worst:e}"))?;
    Ok(format!("pullback residual {worst:e} on x in [0, 3]"))
}

fn instability() -> Outcome {
    for j in 1..=64u32 {
        let len = class_length(&slice_gram(j as f64), [1, j as i64]);
        ensure(len == 1.0, format!("j = {j}: length {len}"))?;
        let b = CylinderMetric::new(j).map_err(err)?.mass1_slide_bound().mass1_bound;
        ensure(b == 1.0 / j as f64, format!("j = {j}: mass1 bound {b}"))?;
    }
    Ok("class (1, j) has length exactly 1 and mass_1 bound 1/j for j <= 64".into())
}

fn moduli_and_diameter() -> Outcome {
    let mut max_diam = 0.0f64;
    for i in 0..=200 {
        let s = 0.05 * i as f64;
        let g = slice_gram(s);
        ensure((g.det() - 1.0).abs() < 1e-9, format!("x = {s}: det {}", g.det()))?;
        let sys = brute_shortest(&g, 40);
        ensure((sys - 1.0).abs() < 1e-12, format!("x = {s}: sys1 {sys}"))?;
        let m = moduli_point(&g);
        ensure((m.t - 1.0).abs() < 1e-9 && m.s.abs() <= 0.5 + 1e-12, format!("x = {s}: {m:?}"))?;
        // Sampled covering radius: a lower bound converging to the diameter.
        let (a, b, d) = (g.a, g.b, g.d);
        let dist2 = |p: f64, q: f64| a * p * p + 2.0 * b * p * q + d * q * q;
        let mut sampled = 0.0f64;
        let n = 40;
        for u in 0..n {
            for v in 0..n {
                let (p, q) = (u as f64 / n as f64, v as f64 / n as f64);
                let mut near = f64::INFINITY;
                for k in -3..=3 {
                    for l in -36..=36 {
                        near = near.min(dist2(p - k as f64, q - l as f64));
                    }
                }
                sampled = sampled.max(near.sqrt());
            }
        }
        let diam = torus_diameter(&g);
        ensure(diam < 1.0, format!("x = {s}: diameter {diam}"))?;
        ensure(diam >= sampled - 1e-12 && diam - sampled < 0.05, format!("x = {s}: {diam} vs sampled {sampled}"))?;
        max_diam = max_diam.max(diam);
    }
    Ok(format!("201 slices; max diameter {max_diam:.6}"))
}

fn mat_mul(a: [[i64; 3]; 3], b: [[i64; 3]; 3]) -> [[i64; 3]; 3] {
    let mut c = [[0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            c[i][k] = (0..3).map(|l| a[i][l] * b[l][k]).sum();
        }
    }
    c
}

fn mat_pow(a: [[i64; 3]; 3], n: u32) -> [[i64; 3]; 3] {
    (0..n).fold([[1, 0, 0], [0, 1, 0], [0, 0, 1]], |acc, _| mat_mul(acc, a))
}

fn group_relation() -> Outcome {
    let x = [[1, 1, 0], [0, 1, 0], [0, 0, 1]];
    let x_inv = [[1, -1, 0], [0, 1, 0], [0, 0, 1]];
    let y = [[1, 0, 0], [0, 1, 1], [0, 0, 1]];
    let y_inv = [[1, 0, 0], [0, 1, -1], [0, 0, 1]];
    let z = [[1, 0, 1], [0, 1, 0], [0, 0, 1]];
    for j in 1..=50u32 {
        let rhs = mat_mul(mat_mul(mat_mul(mat_pow(x, j), y), mat_pow(x_inv, j)), y_inv);
        ensure(mat_pow(z, j) == rhs, format!("matrix relation fails at j = {j}"))?;
        ensure(relation_holds_at(j as i64, 0), format!("library relation fails at j = {j}"))?;
        let lib = (UnipotentMatrix::GEN_Y.conjugate_by(UnipotentMatrix::GEN_X.pow(j as i64))
            * UnipotentMatrix::GEN_Y.inverse())
        .to_array();
        ensure(lib == rhs, format!("library product differs at j = {j}"))?;
    }
    Ok("z^j = x^j y x^-j y^-1 for j = 1..50".into())
}

fn lp_sandwich() -> Outcome {
    let start = Instant::now();
    let mut masses = Vec::new();
    let mut lines = Vec::new();
    for j in [2u32, 3, 4] {
        let m = CylinderMetric::new(j).map_err(err)?;
        let c = build_complex(&m, Resolution::new(8 * j as usize, 8, 8)).map_err(err)?;
        let r = reference_cycle_m(&c, 0);
        let cert = minimize_mass(&c, &r, &LpSettings::default()).map_err(err)?;
        let y = sampled_calibration_dual(&c, &CutoffProfile::standard(j).map_err(err)?);
        dual_feasibility(&y, &c, 1e-12).map_err(|v| format!("sampled dual infeasible: {v}"))?;
        let lower = pairing(&y, &r);
        let upper = r.mass(&c);
        certificate_check(&cert, &c, 1e-6).map_err(|v| format!("j = {j}: {v}"))?;
        ensure(cert.converged, format!("j = {j}: solver did not converge"))?;
        ensure(lower <= cert.primal_mass + 1e-9, format!("j = {j}: {lower} > {}", cert.primal_mass))?;
        ensure(cert.primal_mass <= upper * (1.0 + 1e-9), format!("j = {j}: {} > {upper}", cert.primal_mass))?;
        ensure(cert.gap.abs() < 1e-6 * cert.primal_mass, format!("j = {j}: gap {}", cert.gap))?;
        // Discrete area of M against the closed form.
        let jf = j as f64;
        let area = jf * (1.0 + jf * jf).sqrt() + jf.asinh();
        ensure((upper / area - 1.0).abs() <= 0.10, format!("j = {j}: reference mass {upper} vs {area}"))?;
        lines.push(format!("j={j}: {lower:.4} <= {:.4} <= {upper:.4}", cert.primal_mass));
        masses.push(cert.primal_mass);
    }
    let growth = masses[2] / masses[0];
    let secs = start.elapsed().as_secs_f64();
    ensure(growth > 2.0, format!("mass(4)/mass(2) = {growth}"))?;
    ensure(secs < 600.0, format!("took {secs:.1} s"))?;
    Ok(format!("{}; mass(4)/mass(2) = {growth:.3}; {secs:.2} s", lines.join(", ")))
}

fn collar_excess_oracle(cfg: &AssemblyConfig) -> f64 {
    let (r0, w) = (cfg.tube_radius, cfg.collar_width);
    let tau = std::f64::consts::TAU;
    let f = |r: f64| {
        let b = 1.0 - (r - r0).abs() / w;
        ((1.0 - b) * (tau * r).powi(2) + b).sqrt() - tau * r
    };
    simpson(f, r0 - w, r0, 2000) + simpson(f, r0, r0 + w, 2000)
}

fn sys1_constants() -> Result<Sys1Constants, String> {
    Sys1Constants::estimate(3, 0).map_err(err)
}

fn freedom_ratio(s1: &Sys1Constants) -> Outcome {
    let mut ratios = Vec::new();
    for j in [4u32, 8, 16, 32] {
        let cfg = AssemblyConfig::standard(j);
        let rep = report(&cfg, s1).map_err(err)?;
        let vol = 1.0 + 6.0 * j as f64 + 3.0 * collar_excess_oracle(&cfg);
        ensure((rep.volume - vol).abs() < 1e-6, format!("j = {j}: volume {} vs {vol}", rep.volume))?;
        let ratio = rep.volume / (rep.sys1_estimate * rep.sys2_lower);
        ensure((ratio - rep.ratio).abs() <= 1e-12 * ratio, format!("j = {j}: ratio inconsistent"))?;
        ensure(rep.sys1_estimate > 0.5, format!("j = {j}: sys1 {}", rep.sys1_estimate))?;
        ratios.push(rep.ratio);
    }
    ensure(ratios.windows(2).all(|w| w[1] < w[0]), format!("not decreasing: {ratios:?}"))?;
    ensure(ratios[3] < 0.25 * ratios[0], format!("ratio(32)/ratio(4) = {}", ratios[3] / ratios[0]))?;
    Ok(format!("ratios {ratios:.4?}; ratio(32)/ratio(4) = {:.4}", ratios[3] / ratios[0]))
}

fn t4_derivation(s1: &Sys1Constants) -> Outcome {
    let mut vals = Vec::new();
    for j in [4u32, 8, 16, 32] {
        let cfg = AssemblyConfig::standard(j);
        let base = report(&cfg, s1).map_err(err)?;
        let rep = t4_product_report(&cfg, s1).map_err(err)?;
        let circle = (j * j) as f64;
        let expect = base.sys2_lower.min(base.sys1_estimate * circle) / (base.volume * circle).sqrt();
        ensure((rep.sys2_over_sqrt_volume - expect).abs() < 1e-12 * expect, format!("j = {j}: mismatch"))?;
        vals.push(rep.sys2_over_sqrt_volume);
    }
    ensure(vals.windows(2).all(|w| w[1] > w[0]), format!("not increasing: {vals:?}"))?;
    Ok(format!("sys2/sqrt(vol) = {vals:.4?}"))
}

fn loewner() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let bound = 2.0 / 3f64.sqrt();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        // Random basis (p, 0), (q, r) of the plane.
        let (p, q, r) = (rng.gen_range(0.2..3.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.05..3.0));
        let g = GramMatrix2::new(p * p, p * q, q * q + r * r).map_err(err)?;
        let lib = loewner_ratio(&g);
        let brute = brute_shortest(&g, 200).powi(2) / (p * r);
        ensure((lib - brute).abs() < 1e-9 * brute.max(1.0), format!("{g:?}: {lib} vs {brute}"))?;
        ensure(lib <= bound + 1e-12, format!("{g:?}: ratio {lib}"))?;
        worst = worst.max(lib);
    }
    let hex = GramMatrix2::new(1.0, 0.5, 1.0).map_err(err)?;
    let h = loewner_ratio(&hex);
    ensure((h - bound).abs() < 1e-12, format!("hexagonal ratio {h}"))?;
    Ok(format!("max random ratio {worst:.6}; hexagonal {h:.15}"))
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let s1 = sys1_constants();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("volume law", Box::new(volume_law)),
        ("area law", Box::new(area_law)),
        ("calibration bound", Box::new(calibration_bound)),
        ("unit comass and Hodge identity", Box::new(comass_and_hodge)),
        ("closedness", Box::new(closedness)),
        ("isometry", Box::new(isometry)),
        ("instability", Box::new(instability)),
        ("moduli and diameter", Box::new(moduli_and_diameter)),
        ("group relation", Box::new(group_relation)),
        ("LP oracle sandwich", Box::new(lp_sandwich)),
        ("freedom ratio", Box::new(|| s1.as_ref().map_err(Clone::clone).and_then(freedom_ratio))),
        ("T4 derivation", Box::new(|| s1.as_ref().map_err(Clone::clone).and_then(t4_derivation))),
        ("Loewner", Box::new(loewner)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use systole::calibration::{
    alpha_residuals, closedness_check, cutoff_alpha_samples, integrate_form_over_m, plateau_lower_bound, CutoffAlpha,
    CutoffProfile,
};
use systole::cylinder::CylinderMetric;
use systole::discrete::sparse_io::{chain_vector, complex_document, SparseVector};
use systole::discrete::{
    build_complex, certificate_check, minimize_mass, pairing, reference_cycle_m, sampled_calibration_dual, LpSettings,
    Resolution,
};
use systole::flat_torus::{loewner_ratio, moduli_point, shortest_vector, slice_gram, torus_diameter};
use systole::loops::{default_torus_classes, sys1_estimate, ShorteningConfig};
use systole::report::{write_csv, write_freedom_reports, write_json_lines, Format};
use systole::torus3::{is_nonconvergence_flag, report, t4_product_report, AssemblyConfig, Sys1Constants};
use systole::{verify, SystoleError};

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "systole", version, about = "Systolic freedom experiments on Heisenberg-cylinder metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// Cylinder parameter; may be repeated.
    #[arg(long = "j")]
    j: Vec<u32>,
    /// Run j = 1..=J (combined with any --j values).
    #[arg(long)]
    j_max: Option<u32>,
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Grid resolution `nx,ny,nz` (default `8j,8,8`).
    #[arg(long)]
    res: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Loop-shortening restarts per homotopy class.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Flat torus invariants of the fibres over a range of xhat.
    Slice {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        x_max: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        x_step: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Invariants of the cylinder Y_j.
    Cylinder(Common),
    /// Freedom reports for j = 1..=j-max (default 8).
    Sweep(Common),
    /// Freedom reports of the assembled T^3 for the listed j.
    Torus3 {
        /// Report the T^3 x S^1 product instead.
        #[arg(long)]
        t4: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Discrete mass LP with its certificate.
    Lp {
        /// Also write the complex, chains and dual in the sparse text format.
        #[arg(long)]
        sparse: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suite.
    Verify(Common),
}

struct Failure {
    code: u8,
    message: String,
}

impl From<SystoleError> for Failure {
    fn from(e: SystoleError) -> Self {
        let code = match e {
            SystoleError::InvalidArgument(_) | SystoleError::ResolutionTooCoarse(_) => EXIT_USAGE,
            _ => EXIT_FAILED_CHECK,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

impl Common {
    fn js(&self, default_max: Option<u32>) -> Result<Vec<u32>, Failure> {
        let mut js = self.j.clone();
        if let Some(m) = self.j_max.or(if js.is_empty() { default_max } else { None }) {
            js.extend(1..=m);
        }
        js.sort_unstable();
        js.dedup();
        if js.is_empty() {
            return Err(usage("no j values given"));
        }
        if js.contains(&0) {
            return Err(usage("j must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(usage("--tol must be positive"));
        }
        Ok(js)
    }

    fn resolution(&self, j: u32) -> Result<Resolution, Failure> {
        let Some(text) = &self.res else {
            return Ok(Resolution::default_for(j));
        };
        let parts: Vec<usize> = text
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| usage(format!("bad --res {text:?}, expected nx,ny,nz")))?;
        match parts[..] {
            [nx, ny, nz] => Ok(Resolution::new(nx, ny, nz)),
            _ => Err(usage(format!("bad --res {text:?}, expected nx,ny,nz"))),
        }
    }

    fn writer(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p)
                    .map_err(|e| Failure { code: EXIT_FAILED_CHECK, message: format!("{}: {e}", p.display()) })?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn emit<T: Serialize>(&self, rows: &[T]) -> Result<(), Failure> {
        let mut w = self.writer()?;
        match self.format {
            OutFormat::Json => write_json_lines(rows, &mut w)?,
            OutFormat::Csv => write_csv(rows, &mut w)?,
        }
        w.flush().map_err(SystoleError::from)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct SliceRow {
    xhat: f64,
    det: f64,
    sys1: f64,
    shortest_y: i64,
    shortest_z: i64,
    diameter: f64,
    s: f64,
    t: f64,
    loewner_ratio: f64,
}

fn cmd_slice(x_min: f64, x_max: f64, x_step: f64, common: &Common) -> Result<u8, Failure> {
    if !(x_step > 0.0) || !(x_max >= x_min) || !x_min.is_finite() || !x_max.is_finite() {
        return Err(usage(format!("empty range [{x_min}, {x_max}] with step {x_step}")));
    }
    let n = ((x_max - x_min) / x_step + 1e-9).floor() as usize;
    let rows: Vec<SliceRow> = (0..=n)
        .map(|i| {
            let xhat = x_min + i as f64 * x_step;
            let g = slice_gram(xhat);
            let (sys1, v) = shortest_vector(&g);
            let m = moduli_point(&g);
            SliceRow {
                xhat,
                det: g.det(),
                sys1,
                shortest_y: v[0],
                shortest_z: v[1],
                diameter: torus_diameter(&g),
                s: m.s,
                t: m.t,
                loewner_ratio: loewner_ratio(&g),
            }
        })
        .collect();
    common.emit(&rows)?;
    Ok(0)
}

#[derive(Serialize)]
struct CylinderRow {
    j: u32,
    volume: f64,
    area_m: f64,
    mass2_lower: f64,
    plateau_bound: f64,
    sys1_estimate: f64,
    diam1_estimate: f64,
    mass1_bound: f64,
    psi_residual: Option<f64>,
    closedness_residual: f64,
    comass_residual: f64,
    hodge_residual: f64,
    flags: String,
}

fn cmd_cylinder(common: &Common) -> Result<u8, Failure> {
    let mut rows = Vec::new();
    let mut code = 0;
    for j in common.js(None)? {
        let m = CylinderMetric::new(j)?;
        let phi = CutoffProfile::standard(j)?;
        let sys1 =
            sys1_estimate(&m, &default_torus_classes(), common.restarts, common.seed, &ShorteningConfig::default())?;
        let alpha = alpha_residuals(&m, 2000, common.seed);
        let mut flags = vec!["sys1_uncertified"];
        if !sys1.converged {
            flags.push("sys1_nonconverged");
            code = EXIT_NONCONVERGED;
        }
        rows.push(CylinderRow {
            j,
            volume: m.volume(common.tol)?,
            area_m: m.area_m(common.tol)?,
            mass2_lower: integrate_form_over_m(&phi, common.tol)?,
            plateau_bound: plateau_lower_bound(j),
            sys1_estimate: sys1.value,
            diam1_estimate: m.diam1_estimate(64),
            mass1_bound: m.mass1_slide_bound().mass1_bound,
            psi_residual: if j >= 2 { Some(m.isometry_check_psi(500, common.seed)?.periodic_region) } else { None },
            closedness_residual: closedness_check(&CutoffAlpha { phi }, &cutoff_alpha_samples(&phi), 1e-4)?,
            comass_residual: alpha.comass,
            hodge_residual: alpha.hodge,
            flags: flags.join(";"),
        });
    }
    common.emit(&rows)?;
    Ok(code)
}

fn cmd_torus3(common: &Common, default_max: Option<u32>, t4: bool) -> Result<u8, Failure> {
    let js = common.js(default_max)?;
    let sys1 = Sys1Constants::estimate(common.restarts, common.seed)?;
    let configs: Vec<AssemblyConfig> =
        js.iter().map(|&j| AssemblyConfig { tol: common.tol, ..AssemblyConfig::standard(j) }).collect();
    let mut w = common.writer()?;
    let flags: Vec<String> = if t4 {
        let reps = configs.iter().map(|c| t4_product_report(c, &sys1)).collect::<Result<Vec<_>, _>>()?;
        let flags = reps.iter().flat_map(|r| r.flags.clone()).collect();
        match common.format {
            OutFormat::Json => write_json_lines(&reps, &mut w)?,
            OutFormat::Csv => {
                #[derive(Serialize)]
                struct Row {
                    j: u32,
                    volume: f64,
                    sys2_lower: f64,
                    sys2_over_sqrt_volume: f64,
                    flags: String,
                }
                let rows: Vec<Row> = reps
                    .iter()
                    .map(|r| Row {
                        j: r.j,
                        volume: r.volume,
                        sys2_lower: r.sys2_lower,
                        sys2_over_sqrt_volume: r.sys2_over_sqrt_volume,
                        flags: r.flags.join(";"),
                    })
                    .collect();
                write_csv(&rows, &mut w)?
            }
        }
        flags
    } else {
        let reps = configs.iter().map(|c| report(c, &sys1)).collect::<Result<Vec<_>, _>>()?;
        write_freedom_reports(&reps, common.format.into(), &mut w)?;
        reps.iter().flat_map(|r| r.flags.clone()).collect()
    };
    w.flush().map_err(SystoleError::from)?;
    Ok(if flags.iter().any(|f| is_nonconvergence_flag(f)) { EXIT_NONCONVERGED } else { 0 })
}

#[derive(Serialize)]
struct LpRow {
    j: u32,
    nx: usize,
    ny: usize,
    nz: usize,
    faces: usize,
    cubes: usize,
    reference_mass: f64,
    lp_mass: f64,
    calibration_pairing: f64,
    dual_pairing: f64,
    gap: f64,
    certificate_ok: bool,
    iterations: u32,
    converged: bool,
    flags: String,
}

fn cmd_lp(common: &Common, sparse: Option<&PathBuf>) -> Result<u8, Failure> {
    let js = common.js(None)?;
    let mut rows = Vec::new();
    let mut code = 0;
    for &j in &js {
        let m = CylinderMetric::new(j)?;
        let res = common.resolution(j)?;
        let c = build_complex(&m, res)?;
        let r = reference_cycle_m(&c, 0);
        let cert = minimize_mass(&c, &r, &LpSettings { tolerance: common.tol, ..LpSettings::default() })?;
        let lower = pairing(&sampled_calibration_dual(&c, &CutoffProfile::standard(j)?), &r);
        let check = certificate_check(&cert, &c, 1e-6);
        let mut flags = Vec::new();
        if !cert.converged {
            flags.push("lp_nonconverged".to_string());
            code = EXIT_NONCONVERGED;
        }
        if let Err(v) = &check {
            flags.push(format!("certificate_rejected:{v}"));
            code = EXIT_NONCONVERGED;
        }
        if let Some(path) = sparse {
            let mut doc = complex_document(&c);
            doc.meta.insert("j".into(), j.to_string());
            doc.chains.insert("reference".into(), chain_vector(&c, &r));
            doc.chains.insert("minimizer".into(), SparseVector::from_dense(&cert.chain));
            doc.chains.insert("dual".into(), SparseVector::from_dense(&cert.dual));
            let target = if js.len() > 1 { path.with_extension(format!("j{j}.txt")) } else { path.clone() };
            let file = File::create(&target).map_err(SystoleError::from)?;
            doc.write(BufWriter::new(file))?;
        }
        rows.push(LpRow {
            j,
            nx: res.nx,
            ny: res.ny,
            nz: res.nz,
            faces: c.num_faces(),
            cubes: c.num_cubes(),
            reference_mass: r.mass(&c),
            lp_mass: cert.primal_mass,
            calibration_pairing: lower,
            dual_pairing: cert.pairing,
            gap: cert.gap,
            certificate_ok: check.is_ok(),
            iterations: cert.iterations,
            converged: cert.converged,
            flags: flags.join(";"),
        });
    }
    common.emit(&rows)?;
    Ok(code)
}

fn cmd_verify(common: &Common) -> Result<u8, Failure> {
    if !(common.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let results = verify::run_suite(common.tol, common.seed);
    common.emit(&results)?;
    Ok(if results.iter().all(|r| r.passed) { 0 } else { EXIT_FAILED_CHECK })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Slice { x_min, x_max, x_step, common } => cmd_slice(*x_min, *x_max, *x_step, common),
        Command::Cylinder(c) => cmd_cylinder(c),
        Command::Sweep(c) => cmd_torus3(c, Some(8), false),
        Command::Torus3 { t4, common } => cmd_torus3(common, None, *t4),
        Command::Lp { sparse, common } => cmd_lp(common, sparse.as_ref()),
        Command::Verify(c) => cmd_verify(c),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("systole: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

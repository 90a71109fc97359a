//! Command-line surface: build period frames, dump kernel grids as CSV and
//! run the verification suites with JSON reports.
//!
//! Exit codes: 0 all checks pass, 1 a property check failed, 2 bad input,
//! 3 numeric failure (quadrature or lattice-sum truncation), 64 usage.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{build_frame, BranchData, CurveError, PeriodFrame, SheetedPoint};
use crate::homotopy::{
    bilinear_check, cohomology_dims, splitting_suite, HomotopyError, SampledForm,
};
use crate::kernels::{
    boundary_suite_residual, kernel_mapped, map_point, reflection_suite_max,
    swap_suite_residual, zero_set_probe, KernelError, MappedPoint, Which,
};
use crate::numerics::QuadratureConfig;
use crate::theta::{quasi_periodicity_residual, random_siegel, theta, ThetaError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "branekernels",
    version,
    about = "Mirror-charge kernels on polygons: frames, grid dumps, verification suites"
)]
struct Cli {
    /// Configuration file with one key=value per line; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a period frame from real branch points and write it as JSON.
    Curve(CurveArgs),
    /// Evaluate a kernel on a grid of point pairs and write CSV.
    Kernel(KernelArgs),
    /// Run a verification suite and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CurveArgs {
    /// Strictly increasing real branch points, odd count >= 3.
    #[arg(allow_negative_numbers = true, num_args = 0..)]
    points: Vec<f64>,
    /// Output path for the frame JSON (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    /// Number of polygon sides; inferred from --frame when omitted.
    #[arg(long)]
    n: Option<usize>,
    /// Kernel selector: s1, s2, a1 or a2 (a1/a2 only for n = 2).
    #[arg(long)]
    which: Option<String>,
    /// Frame JSON produced by `curve`; required for n >= 4.
    #[arg(long)]
    frame: Option<PathBuf>,
    /// Grid spec re0:re1:im0:im1:k -> k^2 points, k^4 ordered pairs.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Output path for the CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite: theta-translations, reflections, boundary, swap, bilinear,
    /// splitting, cohomology or zero-set.
    suite: Option<String>,
    /// Number of polygon sides (default 4 where a frame is needed).
    #[arg(long)]
    n: Option<usize>,
    /// Restrict to one kernel (default: both s1 and s2).
    #[arg(long)]
    which: Option<String>,
    /// Frame JSON produced by `curve`; default frames use branch points
    /// 0..n-2.
    #[arg(long)]
    frame: Option<PathBuf>,
    /// Seed for the random probe generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the suite's documented tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output path for the JSON report (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Failures and the key=value configuration file
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
    fn numeric(message: impl Into<String>) -> Self {
        Failure { code: EXIT_NUMERIC, message: message.into() }
    }
}

// Numeric failures (quadrature, theta truncation) get exit 3; everything
// else about a kernel evaluation is an input problem.
fn kernel_failure(e: &KernelError) -> Failure {
    match e {
        KernelError::Numerics(_)
        | KernelError::Curve(CurveError::QuadratureFailure(_))
        | KernelError::Theta(ThetaError::TailBoundFailure { .. }) => {
            Failure::numeric(e.to_string())
        }
        _ => Failure::input(e.to_string()),
    }
}

struct FileConfig(BTreeMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("config {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Failure::input(format!(
                        "config {}: line {} is not key=value",
                        path.display(),
                        lineno + 1
                    )));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig(map))
    }

    // A flag beats the file; the file beats nothing.
    fn resolve<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Failure::input(format!("config key '{key}': {e}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Frame JSON
// ---------------------------------------------------------------------------

/// On-disk frame: real matrices as rows, complex vectors as interleaved
/// re/im pairs. The branch points are authoritative; the derived fields let
/// a reader cross-check a reload against the original build.
#[derive(Debug, Serialize, Deserialize)]
pub struct FrameJson {
    pub g: usize,
    pub branch_points: Vec<f64>,
    #[serde(rename = "I")]
    pub i_mat: Vec<Vec<f64>>,
    #[serde(rename = "Omega_im")]
    pub omega_im: Vec<Vec<f64>>,
    pub half_periods: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    #[serde(rename = "A_default")]
    pub a_default: Vec<f64>,
}

fn flatten(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn frame_to_json(frame: &PeriodFrame) -> FrameJson {
    let g = frame.g();
    FrameJson {
        g,
        branch_points: frame.branch.x.clone(),
        i_mat: (0..g)
            .map(|i| (0..g).map(|j| frame.i_mat[(i, j)].re).collect())
            .collect(),
        omega_im: (0..g)
            .map(|i| (0..g).map(|j| frame.omega.im_entry(i, j)).collect())
            .collect(),
        half_periods: frame.half_periods.iter().map(|hp| flatten(hp)).collect(),
        k: flatten(&frame.k),
        a_default: flatten(&frame.a_default),
    }
}

/// Rebuild the frame from the branch points in a frame JSON and check the
/// stored period data against the rebuild, so a stale or edited file is
/// rejected instead of silently trusted.
pub fn load_frame(path: &Path, cfg: &QuadratureConfig) -> Result<PeriodFrame, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("frame {}: {e}", path.display()))?;
    let json: FrameJson =
        serde_json::from_str(&text).map_err(|e| format!("frame {}: {e}", path.display()))?;
    let branch = BranchData::new(json.branch_points.clone()).map_err(|e| e.to_string())?;
    let frame = build_frame(&branch, cfg).map_err(|e| e.to_string())?;
    let g = frame.g();
    if json.g != g {
        return Err(format!("frame {}: g = {} but branch points give {g}", path.display(), json.g));
    }
    let mut drift: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            drift = drift.max((json.omega_im[i][j] - frame.omega.im_entry(i, j)).abs());
        }
    }
    if drift > 1e-8 {
        return Err(format!(
            "frame {}: stored Omega_im deviates from the rebuild by {drift:e}",
            path.display()
        ));
    }
    Ok(frame)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::input(format!("write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------------

fn cmd_curve(args: CurveArgs, file: &FileConfig) -> Result<i32, Failure> {
    let out = file.resolve(args.out, "out")?;
    let cfg = QuadratureConfig::default();
    let branch = BranchData::new(args.points).map_err(|e| Failure::usage(e.to_string()))?;
    let frame = build_frame(&branch, &cfg).map_err(|e| match e {
        CurveError::QuadratureFailure(_) => Failure::numeric(e.to_string()),
        _ => Failure::input(e.to_string()),
    })?;
    let g = frame.g();

    // invariant summary to standard output; the JSON goes to --out
    let mut i_im: f64 = 0.0;
    let mut om_re: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            i_im = i_im.max(frame.i_mat[(i, j)].im.abs());
            om_re = om_re.max(frame.omega.omega[(i, j)].re.abs());
        }
    }
    let theta_at_a = theta(&frame.a_default, &frame.omega, 1e-13)
        .map_err(|e| Failure::numeric(e.to_string()))?
        .norm();
    println!("frame: g = {g}, branch points {:?}", frame.branch.x);
    println!("check I real: max |Im| = {i_im:e} (tol 1e-8)");
    println!("check Omega imaginary: max |Re| = {om_re:e} (tol 1e-8)");
    println!("check theta vanishes at A_default: |theta(A)| = {theta_at_a:e} (tol 1e-9)");

    let json = serde_json::to_string_pretty(&frame_to_json(&frame)).expect("serializable");
    match out {
        Some(path) => write_output(Some(&path), &(json + "\n"))?,
        None => println!("{json}"),
    }
    Ok(EXIT_PASS)
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------

struct GridSpec {
    re0: f64,
    re1: f64,
    im0: f64,
    im1: f64,
    k: usize,
}

fn parse_grid(spec: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 5 {
        return Err(format!("grid spec '{spec}' is not re0:re1:im0:im1:k"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("grid spec '{spec}': {e}"));
    let g = GridSpec {
        re0: num(parts[0])?,
        re1: num(parts[1])?,
        im0: num(parts[2])?,
        im1: num(parts[3])?,
        k: parts[4].parse().map_err(|e| format!("grid spec '{spec}': {e}"))?,
    };
    if g.k == 0 || g.re1 < g.re0 || g.im1 < g.im0 || g.im0 < 0.0 {
        return Err(format!("grid spec '{spec}' must have k >= 1, re0 <= re1, 0 <= im0 <= im1"));
    }
    Ok(g)
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![a];
    }
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

pub const CSV_HEADER: &str = "re_zQ,im_zQ,re_zP,im_zP,re_aQ,im_aQ,re_aP,im_aP";

fn cmd_kernel(args: KernelArgs, file: &FileConfig) -> Result<i32, Failure> {
    let cfg = QuadratureConfig::default();
    let which: Which = file
        .resolve(args.which, "which")?
        .ok_or_else(|| Failure::usage("kernel needs --which"))?
        .parse()
        .map_err(Failure::usage)?;
    let grid = file
        .resolve(args.grid, "grid")?
        .ok_or_else(|| Failure::usage("kernel needs --grid re0:re1:im0:im1:k"))?;
    let grid = parse_grid(&grid).map_err(Failure::input)?;
    let frame_path: Option<PathBuf> = file.resolve(args.frame, "frame")?;
    let frame = match &frame_path {
        Some(p) => Some(load_frame(p, &cfg).map_err(Failure::input)?),
        None => None,
    };
    let n = match (file.resolve(args.n, "n")?, &frame) {
        (Some(n), Some(f)) if n != 2 * f.g() + 2 => {
            return Err(Failure::input(format!(
                "--n {n} contradicts the frame (n = {})",
                2 * f.g() + 2
            )));
        }
        (Some(n), _) => n,
        (None, Some(f)) => 2 * f.g() + 2,
        (None, None) => return Err(Failure::usage("kernel needs --n or --frame")),
    };
    if n >= 4 && frame.is_none() {
        return Err(Failure::input(format!("n = {n} needs a frame file")));
    }
    if matches!(which, Which::A1 | Which::A2) && n != 2 {
        return Err(Failure::input("a1/a2 exist only for n = 2"));
    }

    // lexicographic points: re outer, im inner; pairs Q outer, P inner
    let mut points = Vec::with_capacity(grid.k * grid.k);
    for re in linspace(grid.re0, grid.re1, grid.k) {
        for im in linspace(grid.im0, grid.im1, grid.k) {
            points.push(Complex64::new(re, im));
        }
    }
    let mapped: Vec<MappedPoint> = points
        .iter()
        .map(|z| map_point(&SheetedPoint::upper(*z), n, frame.as_ref(), &cfg))
        .collect::<Result<_, _>>()
        .map_err(|e| kernel_failure(&e))?;

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut skipped = 0usize;
    for (zq, mq) in points.iter().zip(&mapped) {
        for (zp, mp) in points.iter().zip(&mapped) {
            if (zq - zp).norm() < 1e-9 {
                skipped += 1;
                continue;
            }
            let form = kernel_mapped(mq, mp, which, n, frame.as_ref()).map_err(|e| {
                let f = kernel_failure(&e);
                Failure {
                    code: f.code,
                    message: format!("pair zQ = {zq}, zP = {zp}: {}", f.message),
                }
            })?;
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                zq.re, zq.im, zp.re, zp.im, form.a_q.re, form.a_q.im, form.a_p.re, form.a_p.im
            )
            .expect("string write");
        }
    }
    let out: Option<PathBuf> = file.resolve(args.out, "out")?;
    write_output(out.as_deref(), &csv)?;
    eprintln!("skipped {skipped} diagonal pairs");
    Ok(EXIT_PASS)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct CheckJson {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub suite: String,
    pub n: Option<usize>,
    pub seed: u64,
    pub checks: Vec<CheckJson>,
    pub passed: bool,
}

fn check(name: impl Into<String>, residual: f64, tolerance: f64) -> CheckJson {
    CheckJson { name: name.into(), residual, tolerance, pass: residual < tolerance }
}

fn default_branch(n: usize) -> Vec<f64> {
    (0..n - 1).map(|i| i as f64).collect()
}

fn which_list(opt: Option<Which>) -> Vec<Which> {
    match opt {
        Some(w) => vec![w],
        None => vec![Which::S1, Which::S2],
    }
}

/// Standard splitting probes: a bump function, its differential as an exact
/// 1-form, and a compactly supported 2-form, centered in the chart, with
/// two evaluation points near the center.
pub fn splitting_probes(
    n: usize,
    frame: Option<&PeriodFrame>,
) -> (Vec<SampledForm>, Vec<Complex64>) {
    let (center, radius) = if n <= 3 {
        (Complex64::new(0.3, 1.2), 0.8)
    } else {
        let b = &frame.expect("n >= 4 needs a frame").branch;
        let span = b.span();
        let mid = 0.5 * (b.x[0] + b.x[b.x.len() - 1]);
        (Complex64::new(mid - 0.2 * span, 0.45 * span), 0.35 * span)
    };
    let probes = vec![
        SampledForm::bump(center, radius, "bump"),
        SampledForm::exact_one_form(center, radius, "df"),
        SampledForm::curl_bump(center, radius, "dw"),
    ];
    let step = Complex64::new(0.08, 0.06) * radius;
    (probes, vec![center, center + step])
}

fn cmd_verify(args: VerifyArgs, file: &FileConfig) -> Result<i32, Failure> {
    let cfg = QuadratureConfig::default();
    let suite: String = file
        .resolve(args.suite, "suite")?
        .ok_or_else(|| Failure::usage("verify needs a suite name"))?;
    let seed = file.resolve(args.seed, "seed")?.unwrap_or(0);
    let tol_override: Option<f64> = file.resolve(args.tol, "tol")?;
    let which_opt: Option<Which> = match file.resolve(args.which, "which")? {
        Some(s) => Some(s.parse::<Which>().map_err(Failure::usage)?),
        None => None,
    };
    let n_opt: Option<usize> = file.resolve(args.n, "n")?;
    let frame_path: Option<PathBuf> = file.resolve(args.frame, "frame")?;

    // a frame, built on demand from --frame or from the default branch set
    let need_frame = |n: usize| -> Result<Option<PeriodFrame>, Failure> {
        if n < 4 {
            return Ok(None);
        }
        let frame = match &frame_path {
            Some(p) => load_frame(p, &cfg).map_err(Failure::input)?,
            None => {
                let branch =
                    BranchData::new(default_branch(n)).map_err(|e| Failure::input(e.to_string()))?;
                build_frame(&branch, &cfg).map_err(|e| Failure::numeric(e.to_string()))?
            }
        };
        if 2 * frame.g() + 2 != n {
            return Err(Failure::input(format!(
                "frame has n = {}, suite asked for {n}",
                2 * frame.g() + 2
            )));
        }
        Ok(Some(frame))
    };

    let tol = |default: f64| tol_override.unwrap_or(default);
    let mut checks: Vec<CheckJson> = Vec::new();
    let mut n_report = n_opt;

    match suite.as_str() {
        "theta-translations" => {
            let t = tol(1e-9);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for g in 1..=3usize {
                let pm = random_siegel(g, &mut rng);
                let mut worst: f64 = 0.0;
                for _ in 0..100 {
                    let z: Vec<Complex64> = (0..g)
                        .map(|_| {
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        })
                        .collect();
                    let mu: Vec<i64> = (0..g).map(|_| rng.gen_range(-2..=2)).collect();
                    let mup: Vec<i64> = (0..g).map(|_| rng.gen_range(-2..=2)).collect();
                    let r = quasi_periodicity_residual(&z, &pm, &mu, &mup, 1e-12)
                        .map_err(|e| Failure::numeric(e.to_string()))?;
                    worst = worst.max(r);
                }
                checks.push(check(format!("translation law g={g}, 100 draws"), worst, t));
            }
        }
        "reflections" => {
            let n = n_opt.unwrap_or(4);
            n_report = Some(n);
            if n < 4 || n % 2 != 0 {
                return Err(Failure::input("reflections need even n >= 4"));
            }
            let frame = need_frame(n)?.expect("even n >= 4");
            let t = tol(1e-7);
            for which in which_list(which_opt) {
                let r = reflection_suite_max(&frame, which, 100, seed)
                    .map_err(|e| kernel_failure(&e))?;
                checks.push(check(format!("{which:?} reflection list, 100 pairs"), r, t));
            }
        }
        "boundary" => {
            let n = n_opt.unwrap_or(4);
            n_report = Some(n);
            let frame = need_frame(n)?;
            let t = tol(if n <= 3 { 1e-7 } else { 1e-6 });
            for which in which_list(which_opt) {
                let r = boundary_suite_residual(n, which, frame.as_ref(), 32, 20, seed, &cfg)
                    .map_err(|e| kernel_failure(&e))?;
                checks.push(check(format!("{which:?} side pullbacks, 32 pts/side"), r, t));
            }
        }
        "swap" => {
            let n = n_opt.unwrap_or(4);
            n_report = Some(n);
            let frame = need_frame(n)?;
            let t = tol(if n <= 3 { 1e-9 } else { 1e-7 });
            let r = swap_suite_residual(n, frame.as_ref(), 100, seed, &cfg)
                .map_err(|e| kernel_failure(&e))?;
            checks.push(check("S1(Q,P) = S2(P,Q), 100 pairs", r, t));
        }
        "bilinear" => {
            let n = n_opt.unwrap_or(4);
            n_report = Some(n);
            let frame = need_frame(n)?
                .ok_or_else(|| Failure::input("bilinear relations need n >= 4"))?;
            let g = frame.g();
            let t = tol(if g == 1 { 1e-6 } else { 1e-5 });
            let res = bilinear_check(&frame, &cfg)
                .map_err(|e| Failure::numeric(e.to_string()))?;
            let worst = res.iter().flatten().copied().fold(0.0, f64::max);
            checks.push(check(
                format!("int omega_j ^ conj(omega_k) = tau_jk / 2, g = {g}"),
                worst,
                t,
            ));
        }
        "splitting" => {
            let n = n_opt.unwrap_or(2);
            n_report = Some(n);
            let frame = need_frame(n)?;
            let which = which_opt.unwrap_or(Which::S1);
            let t = tol(5e-3);
            let (probes, points) = splitting_probes(n, frame.as_ref());
            let report = splitting_suite(n, which, frame.as_ref(), &probes, &points, &cfg)
                .map_err(homotopy_failure)?;
            for probe in report.probes {
                checks.push(check(
                    format!("dG + Gd = I - P on '{}'", probe.name),
                    probe.max_residual,
                    t,
                ));
            }
        }
        "cohomology" => {
            let n = n_opt.unwrap_or(4);
            n_report = Some(n);
            if n < 2 {
                return Err(Failure::input("cohomology needs n >= 2"));
            }
            let dims = cohomology_dims(n);
            let expected = if n % 2 == 0 { (n - 2) / 2 } else { (n - 3) / 2 };
            let r = if dims == (0, expected, 0) { 0.0 } else { 1.0 };
            checks.push(check(
                format!("dims(n={n}) = ({}, {}, {})", dims.0, dims.1, dims.2),
                r,
                tol(0.5),
            ));
        }
        "zero-set" => {
            let n = n_opt.unwrap_or(4);
            n_report = Some(n);
            let frame = need_frame(n)?
                .ok_or_else(|| Failure::input("the zero-set probe needs n >= 4"))?;
            let which = which_opt.unwrap_or(Which::S1);
            let (min_off, near) =
                zero_set_probe(&frame, which, 40, &cfg).map_err(|e| kernel_failure(&e))?;
            // pass iff the off-diagonal floor dominates the near value 1e3x
            checks.push(check(
                format!("{which:?} off-diagonal floor {min_off:e} vs near-diagonal {near:e}"),
                1e3 * near / min_off,
                tol(1.0),
            ));
        }
        other => return Err(Failure::usage(format!("unknown suite '{other}'"))),
    }

    let passed = checks.iter().all(|c| c.pass);
    let report = ReportJson { suite, n: n_report, seed, checks, passed };
    let json = serde_json::to_string_pretty(&report).expect("serializable");
    let out: Option<PathBuf> = file.resolve(args.out, "out")?;
    write_output(out.as_deref(), &(json + "\n"))?;
    eprintln!(
        "suite {}: {}",
        report.suite,
        if report.passed { "PASS" } else { "FAIL" }
    );
    Ok(if passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn homotopy_failure(e: HomotopyError) -> Failure {
    match e {
        HomotopyError::Kernel(k) => kernel_failure(&k),
        HomotopyError::Numerics(n) => Failure::numeric(n.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let file = match FileConfig::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let result = match cli.command {
        Command::Curve(args) => cmd_curve(args, &file),
        Command::Kernel(args) => cmd_kernel(args, &file),
        Command::Verify(args) => cmd_verify(args, &file),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

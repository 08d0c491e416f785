//! Command-line interface. [`run`] is the whole program minus process setup,
//! so it can be driven from tests with in-memory streams.
//!
//! Exit codes: 0 on success (all checks passed), 1 when a check or
//! certificate fails, 2 on usage or input errors.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::john::{inner_john_ellipse, verify_john, DEFAULT_FACETS, DEFAULT_SOLVER_TOL};
use crate::metric::{distance_ratio, intrinsic_distance, DEFAULT_TOL};
use crate::norms::{normalize_norm, validate_norm, NormSpec};
use crate::sampling::NormFamily;
use crate::vec2::Vec2;
use crate::verify::{
    check_estimate_segment, check_euclidean_arc, check_lemma_angles, check_lemma_tangent_lines,
    check_main_theorem_with, check_norm_decreasing, check_theorem_k_bound_with, ratio_search, CheckReport,
    ARC_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Names accepted by `verify --suite`, in output order.
pub const SUITES: [&str; 8] = [
    "angles",
    "estimate-segment",
    "euclidean-arc",
    "k-cubed-bound",
    "main-theorem",
    "norm-axioms",
    "norm-decreasing",
    "tangent-lines",
];

#[derive(Debug, Parser)]
#[command(
    name = "intrinsic-sphere",
    version,
    about = "Intrinsic metric on unit spheres of planar norms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Sphere,
    RatioLandscape,
}

#[derive(Debug, clap::Args)]
pub struct NormArg {
    /// Norm as inline JSON, `@path` to read a file, or `-` for stdin.
    #[arg(long)]
    pub norm: String,
}

#[derive(Debug, clap::Args)]
pub struct OutputArgs {
    /// Write output to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Intrinsic distance between two points of the unit sphere.
    Distance {
        #[command(flatten)]
        norm: NormArg,
        /// First point, `a,b`.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Second point, `a,b`.
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Ratio of the intrinsic distance to the norm distance.
    Ratio {
        #[command(flatten)]
        norm: NormArg,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run property checks; one JSON line per check, sorted by name.
    Verify {
        #[command(flatten)]
        norm: NormArg,
        /// `all` or a comma-separated list of check suites.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Arc-length tolerance of the metric checks.
        #[arg(long, default_value_t = ARC_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Maximal-area inscribed ellipse and its certificate.
    John {
        #[command(flatten)]
        norm: NormArg,
        /// Facets used to approximate non-polygonal balls.
        #[arg(long, default_value_t = DEFAULT_FACETS)]
        facets: usize,
        #[arg(long, default_value_t = DEFAULT_SOLVER_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Search random norms for the largest distance ratio.
    Search {
        #[arg(long, default_value = "mixed")]
        family: NormFamily,
        #[arg(long, default_value_t = 1000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Plot-ready samples of the sphere or of the ratio landscape.
    Export {
        #[command(flatten)]
        norm: NormArg,
        #[arg(long, value_enum, default_value = "sphere")]
        what: ExportKind,
        #[arg(long, default_value_t = 360)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Write output to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

/// Failure of a command, mapped to an exit code by [`run`].
#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli.command, stdin, out) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command, stdin: &mut dyn Read, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Distance { norm, x, y, tol, output } => {
            let spec = load_norm(&norm.norm, stdin)?;
            let (x, y) = (parse_point(&x, "x")?, parse_point(&y, "y")?);
            check_tol(tol)?;
            json_only(&output)?;
            let d = intrinsic_distance(&spec, x, y, tol)?;
            emit(&output.out, out, |w| write_json_line(w, &d))?;
            Ok(EXIT_OK)
        }
        Command::Ratio { norm, x, y, tol, output } => {
            let spec = load_norm(&norm.norm, stdin)?;
            let (x, y) = (parse_point(&x, "x")?, parse_point(&y, "y")?);
            check_tol(tol)?;
            json_only(&output)?;
            let r = distance_ratio(&spec, x, y, tol)?;
            emit(&output.out, out, |w| write_json_line(w, &json!({ "ratio": r })))?;
            Ok(EXIT_OK)
        }
        Command::Verify { norm, suite, trials, seed, tol, output } => {
            let spec = load_norm(&norm.norm, stdin)?;
            check_tol(tol)?;
            let suites = parse_suites(&suite)?;
            if trials == 0 {
                return Err(Failure::Usage("trials must be >= 1".into()));
            }
            let mut reports = run_suites(&spec, &suites, trials, seed, tol)?;
            reports.sort_by(|a, b| a.name.cmp(&b.name));
            let all_passed = reports.iter().all(|r| r.passed);
            emit(&output.out, out, |w| match output.format {
                Format::Json => reports.iter().try_for_each(|r| write_json_line(w, r)),
                Format::Csv => write_reports_csv(w, &reports),
            })?;
            Ok(if all_passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::John { norm, facets, tol, output } => {
            let spec = load_norm(&norm.norm, stdin)?;
            check_tol(tol)?;
            json_only(&output)?;
            if facets < 8 {
                return Err(Failure::Usage("facets must be >= 8".into()));
            }
            let ellipse = inner_john_ellipse(&spec, facets, tol)?;
            let cert = verify_john(&spec, &ellipse, 4096)?;
            let passed = cert.passed();
            emit(&output.out, out, |w| {
                write_json_line(w, &json!({ "ellipse": ellipse, "certificate": cert }))
            })?;
            Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Search { family, budget, seed, output } => {
            json_only(&output)?;
            let result = ratio_search(family, budget, seed)?;
            emit(&output.out, out, |w| write_json_line(w, &result))?;
            Ok(EXIT_OK)
        }
        Command::Export { norm, what, points, tol, out: path, format } => {
            let spec = load_norm(&norm.norm, stdin)?;
            check_tol(tol)?;
            if points == 0 {
                return Err(Failure::Usage("points must be >= 1".into()));
            }
            match what {
                ExportKind::Sphere => emit(&path, out, |w| export_sphere(w, &spec, points, format))?,
                ExportKind::RatioLandscape => {
                    let grid = ratio_landscape(&spec, points, tol)?;
                    emit(&path, out, |w| write_landscape(w, &grid, format))?
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn check_tol(tol: f64) -> std::result::Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("tol must be > 0, got {tol}")))
    }
}

fn json_only(output: &OutputArgs) -> std::result::Result<(), Failure> {
    match output.format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Usage("this command only supports --format json".into())),
    }
}

fn load_norm(source: &str, stdin: &mut dyn Read) -> std::result::Result<NormSpec, Failure> {
    let text = if source == "-" {
        let mut s = String::new();
        stdin.read_to_string(&mut s)?;
        s
    } else if let Some(path) = source.strip_prefix('@') {
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {path}: {e}")))?
    } else {
        source.to_string()
    };
    Ok(NormSpec::from_json(&text)?)
}

/// Accepts `a,b` or a JSON array `[a, b]`.
pub fn parse_point(text: &str, what: &str) -> std::result::Result<Vec2, String> {
    let trimmed = text.trim();
    let inner = trimmed
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(trimmed);
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("--{what}: expected two comma-separated numbers, got {text:?}"));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("--{what}: {s:?} is not a finite number"))
    };
    Ok(Vec2::new(num(parts[0])?, num(parts[1])?))
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Usage(s)
    }
}

fn parse_suites(text: &str) -> std::result::Result<Vec<&'static str>, Failure> {
    if text == "all" {
        return Ok(SUITES.to_vec());
    }
    let mut chosen = Vec::new();
    for name in text.split(',').map(str::trim) {
        match SUITES.iter().find(|s| **s == name) {
            Some(s) if !chosen.contains(s) => chosen.push(*s),
            Some(_) => {}
            None => {
                return Err(Failure::Usage(format!(
                    "unknown suite {name:?}; expected all or one of {}",
                    SUITES.join(", ")
                )))
            }
        }
    }
    Ok(chosen)
}

fn run_suites(
    spec: &NormSpec,
    suites: &[&str],
    trials: u64,
    seed: u64,
    tol: f64,
) -> std::result::Result<Vec<CheckReport>, Failure> {
    let needs_normalized = suites
        .iter()
        .any(|s| matches!(*s, "tangent-lines" | "angles" | "estimate-segment" | "norm-decreasing"));
    let normalized = if needs_normalized { Some(normalize_norm(spec)?.0) } else { None };
    let mut reports = Vec::new();
    for suite in suites {
        let n = || normalized.as_ref().expect("normalized when needed");
        match *suite {
            "norm-axioms" => reports.push(validate_norm(spec, trials as usize, seed)?),
            "euclidean-arc" => reports.push(check_euclidean_arc(trials, seed)?),
            "tangent-lines" => reports.push(check_lemma_tangent_lines(n(), trials, seed)?),
            "angles" => reports.push(check_lemma_angles(n(), trials, seed)?),
            "estimate-segment" => reports.push(check_estimate_segment(n(), trials, seed)?),
            "norm-decreasing" => reports.push(check_norm_decreasing(n(), trials, seed)?),
            "k-cubed-bound" => reports.push(check_theorem_k_bound_with(spec, trials, seed, tol)?),
            "main-theorem" => {
                let r = check_main_theorem_with(spec, trials, seed, tol)?;
                reports.push(r.sqrt2_pi);
                reports.push(r.constant_two);
            }
            other => unreachable!("suite {other} validated above"),
        }
    }
    Ok(reports)
}

fn emit(
    path: &Option<PathBuf>,
    out: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(out);
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_json_line<T: Serialize>(w: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    writeln!(w)
}

/// 17 significant digits, `.` as decimal separator.
fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_reports_csv(w: &mut dyn Write, reports: &[CheckReport]) -> io::Result<()> {
    writeln!(w, "name,passed,trials,skipped,worst_margin,tolerance")?;
    for r in reports {
        let margin = r.worst_margin.map(fmt_num).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.name,
            r.passed,
            r.trials,
            r.skipped,
            margin,
            fmt_num(r.tolerance)
        )?;
    }
    Ok(())
}

fn grid_angle(k: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * k as f64 / n as f64
}

fn export_sphere(w: &mut dyn Write, spec: &NormSpec, n: usize, format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "theta,x,y")?;
            for k in 0..n {
                let t = grid_angle(k, n);
                let p = spec.sphere_point(t);
                writeln!(w, "{},{},{}", fmt_num(t), fmt_num(p.x), fmt_num(p.y))?;
            }
        }
        Format::Json => {
            for k in 0..n {
                let t = grid_angle(k, n);
                let p = spec.sphere_point(t);
                write_json_line(w, &json!({ "theta": t, "x": p.x, "y": p.y }))?;
            }
        }
    }
    Ok(())
}

/// Ratio at every pair of `n` equally spaced angles; the diagonal is the
/// limiting value 1.
fn ratio_landscape(spec: &NormSpec, n: usize, tol: f64) -> std::result::Result<Vec<(f64, f64, f64)>, Failure> {
    let pts: Vec<Vec2> = (0..n).map(|k| spec.sphere_point(grid_angle(k, n))).collect();
    let mut grid = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let r = if i == j { 1.0 } else { distance_ratio(spec, pts[i], pts[j], tol)? };
            grid.push((grid_angle(i, n), grid_angle(j, n), r));
        }
    }
    Ok(grid)
}

fn write_landscape(w: &mut dyn Write, grid: &[(f64, f64, f64)], format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "theta_x,theta_y,ratio")?;
            for (a, b, r) in grid {
                writeln!(w, "{},{},{}", fmt_num(*a), fmt_num(*b), fmt_num(*r))?;
            }
        }
        Format::Json => {
            for (a, b, r) in grid {
                write_json_line(w, &json!({ "theta_x": a, "theta_y": b, "ratio": r }))?;
            }
        }
    }
    Ok(())
}

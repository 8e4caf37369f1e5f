//! The `uqtri` command-line driver.
//!
//! Data goes to `--output` or standard output, diagnostics to standard error.
//! Exit codes: 0 success, 2 usage, 3 degenerate parameters, 4 numerical
//! breakdown, 5 verification failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io;
use crate::kernel::{build_kernel, limit_sweep, residuals_of, KernelTable, LimitRow, ResidualReport};
use crate::oracle::{assemble, compare_with_table, nullspace};
use crate::qspecial::{DeformationParameter, TruncationPolicy};
use crate::repr::{
    anchored_deviation, reflection_build, reflection_by_recurrence, unitarity_residual, ModuleParams, Recurrence,
    ReflectionConstruction, TripleParams,
};
use crate::{Complex64, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_BREAKDOWN: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

pub const DEFAULT_W: u32 = 12;
/// Distance to the excluded parameter set below which a warning is logged.
pub const NEAR_EXCLUDED_WARNING: f64 = 1e-2;

#[derive(Debug, Parser)]
#[command(name = "uqtri", version, about = "Invariant trilinear functionals on principal-series modules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the kernel table on a window and check every equation.
    Kernel(KernelArgs),
    /// Check the equations on a stored table.
    Verify(VerifyArgs),
    /// Nullspace of the assembled invariance system, compared with the kernel.
    Oracle(OracleArgs),
    /// Reflection coefficients R(s): M(s) -> M(-s).
    Reflection(ReflectionArgs),
    /// Deviation of the kernel at q = 1 - 10^-j from the classical kernel.
    Limit(LimitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DeformationArgs {
    /// Deformation parameter, "re" or "re,im".
    #[arg(long, allow_hyphen_values = true, conflicts_with = "classical")]
    pub q: Option<String>,
    /// Use the classical algebra (q = 1).
    #[arg(long)]
    pub classical: bool,
    /// Branch of log q, "re,im". Defaults to the principal branch.
    #[arg(long, allow_hyphen_values = true)]
    pub log_q: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TripleArgs {
    /// s1,s2,s3 as complex literals: "2.1,1.3+0.5i,0.7".
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// s1 as "re" or "re,im" (overrides --s).
    #[arg(long, allow_hyphen_values = true)]
    pub s1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s3: Option<String>,
    /// Parities eps1,eps2,eps3.
    #[arg(long)]
    pub eps: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub deformation: DeformationArgs,
    #[command(flatten)]
    pub triple: TripleArgs,
    /// Window radius: |n|, |m|, |n+m| <= W.
    #[arg(long = "W", default_value_t = DEFAULT_W)]
    pub w: u32,
    /// Value of the seed point, "re" or "re,im".
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub seed_scale: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the residual report (JSON) here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Pass threshold for normalized residuals.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Table written by `kernel` (JSON or CSV).
    #[arg(long)]
    pub table: PathBuf,
    #[command(flatten)]
    pub deformation: DeformationArgs,
    #[command(flatten)]
    pub triple: TripleArgs,
    #[arg(long = "W")]
    pub w: Option<u32>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub deformation: DeformationArgs,
    #[command(flatten)]
    pub triple: TripleArgs,
    #[arg(long = "W", default_value_t = DEFAULT_W)]
    pub w: u32,
    /// Relative singular-value cutoff.
    #[arg(long, default_value_t = 1e-8)]
    pub threshold: f64,
    /// Allowed deviation between the nullspace vector and the kernel table.
    #[arg(long, default_value_t = 1e-8)]
    pub oracle_tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReflectionArgs {
    #[command(flatten)]
    pub deformation: DeformationArgs,
    /// Module parameter s, "re", "re,im" or "re+imi".
    #[arg(long, allow_hyphen_values = true)]
    pub s: String,
    #[arg(long, default_value_t = 0)]
    pub eps: u8,
    /// Weights |n| <= W.
    #[arg(long = "W", default_value_t = 40)]
    pub w: u32,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    #[command(flatten)]
    pub deformation: DeformationArgs,
    #[command(flatten)]
    pub triple: TripleArgs,
    #[arg(long = "W", default_value_t = DEFAULT_W)]
    pub w: u32,
    #[arg(long, default_value_t = 2)]
    pub j_min: i32,
    #[arg(long, default_value_t = 6)]
    pub j_max: i32,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// A failed run: exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Degenerate(_)
            | Error::InvalidModule(_)
            | Error::InvalidDeformation(_)
            | Error::NearSingular { .. }
            | Error::Pole { .. } => EXIT_DEGENERATE,
            Error::Breakdown { .. } | Error::NoConvergence | Error::NonFinite(_) | Error::Truncation { .. } => {
                EXIT_BREAKDOWN
            }
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

fn log(message: impl AsRef<str>) {
    eprintln!("uqtri: {}", message.as_ref());
}

/// `"re"`, `"re+imi"`, `"re-imi"`, `"imi"`.
pub fn parse_complex_literal(text: &str) -> std::result::Result<Complex64, String> {
    let t = text.trim();
    let bad = || format!("cannot parse complex number {text:?}");
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    let im = im.trim_start_matches('+').parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

/// `"re"` or `"re,im"`.
pub fn parse_pair(text: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = text.split(',').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("cannot parse number {s:?} in {text:?}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected \"re\" or \"re,im\", got {text:?}")),
    }
}

impl DeformationArgs {
    fn given(&self) -> bool {
        self.q.is_some() || self.classical || self.log_q.is_some()
    }

    pub fn parameter(&self) -> std::result::Result<DeformationParameter, Failure> {
        if self.classical {
            if self.log_q.is_some() {
                return Err(Failure::usage("--log-q has no meaning with --classical"));
            }
            return Ok(DeformationParameter::classical());
        }
        let Some(q) = &self.q else {
            return Err(Failure::usage("one of --q or --classical is required"));
        };
        let q = parse_pair(q).map_err(Failure::usage)?;
        let dp = match &self.log_q {
            Some(l) => DeformationParameter::with_log(q, parse_pair(l).map_err(Failure::usage)?),
            None => DeformationParameter::quantum(q),
        };
        dp.map_err(Failure::from)
    }
}

impl TripleArgs {
    fn given(&self) -> bool {
        self.s.is_some() || self.s1.is_some() || self.s2.is_some() || self.s3.is_some() || self.eps.is_some()
    }

    pub fn parameters(&self) -> std::result::Result<TripleParams, Failure> {
        let mut s: [Option<Complex64>; 3] = [None; 3];
        if let Some(list) = &self.s {
            let parts: Vec<&str> = list.split(',').collect();
            if parts.len() != 3 {
                return Err(Failure::usage(format!("--s needs three comma-separated values, got {list:?}")));
            }
            for (slot, part) in s.iter_mut().zip(parts) {
                *slot = Some(parse_complex_literal(part).map_err(Failure::usage)?);
            }
        }
        for (slot, flag) in s.iter_mut().zip([&self.s1, &self.s2, &self.s3]) {
            if let Some(text) = flag {
                *slot = Some(parse_pair(text).map_err(Failure::usage)?);
            }
        }
        let [Some(s1), Some(s2), Some(s3)] = s else {
            return Err(Failure::usage("s1, s2, s3 are required (--s or --s1/--s2/--s3)"));
        };
        let eps_text = self.eps.as_deref().unwrap_or("0,0,0");
        let eps: Vec<u8> = eps_text
            .split(',')
            .map(|e| e.trim().parse::<u8>().map_err(|_| Failure::usage(format!("bad parity {e:?}"))))
            .collect::<std::result::Result<_, _>>()?;
        let [e1, e2, e3] = eps[..] else {
            return Err(Failure::usage(format!("--eps needs three values, got {eps_text:?}")));
        };
        TripleParams::from_parts([s1, s2, s3], [e1, e2, e3]).map_err(|e| Failure::usage(e.to_string()))
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> std::result::Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn warn_if_near_excluded(triple: &TripleParams) {
    let d = triple.distance_to_reducible();
    if d < NEAR_EXCLUDED_WARNING {
        log(format!(
            "warning: parameters are {d:.3e} from a reducible module; results may be ill-conditioned"
        ));
    }
}

fn log_report(report: &ResidualReport, tol: f64) {
    for e in &report.entries {
        let worst = e.worst.map(|(n, m)| format!(" at ({n}, {m})")).unwrap_or_default();
        log(format!("{:<9} max {:.3e}{worst} over {} points", e.equation.id(), e.max_abs, e.evaluated));
    }
    let verdict = if report.passes(tol) { "pass" } else { "FAIL" };
    log(format!("residuals {verdict} at tolerance {tol:e}"));
}

fn cmd_kernel(args: &KernelArgs) -> CmdResult {
    let dp = args.deformation.parameter()?;
    let triple = args.triple.parameters()?;
    let scale = parse_pair(&args.seed_scale).map_err(Failure::usage)?;
    warn_if_near_excluded(&triple);
    let table = build_kernel(&dp, &triple, args.w, scale)?;
    if table.trivial {
        log("eps3 != eps1 + eps2 (mod 2): the kernel is identically zero");
    }
    let report = residuals_of(&dp, &triple, &table.values)?;
    let text = match args.format {
        OutputFormat::Json => io::table_to_json(&table)?,
        OutputFormat::Csv => io::values_to_csv(&table.values)?,
    };
    emit(&args.output, &text)?;
    if args.report.is_some() {
        emit(&args.report, &io::report_to_json(&report, args.tol)?)?;
    }
    log_report(&report, args.tol);
    Ok(if report.passes(args.tol) { EXIT_OK } else { EXIT_VERIFY })
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-14 * a.norm().max(b.norm()).max(1.0)
}

fn check_matches(args: &VerifyArgs, table: &KernelTable) -> std::result::Result<(), Failure> {
    let mismatch = |what: &str| Failure::usage(format!("{what} given on the command line does not match the table"));
    if args.deformation.given() {
        let dp = args.deformation.parameter()?;
        let same_log = args.deformation.log_q.is_none() || close(dp.log_q(), table.dp.log_q());
        if dp.mode() != table.dp.mode() || !close(dp.q(), table.dp.q()) || !same_log {
            return Err(mismatch("deformation parameter"));
        }
    }
    if args.triple.given() {
        let t = args.triple.parameters()?;
        if t.epsilons() != table.triple.epsilons() {
            return Err(mismatch("eps"));
        }
        if t.s().iter().zip(table.triple.s()).any(|(a, b)| !close(*a, b)) {
            return Err(mismatch("s"));
        }
    }
    if let Some(w) = args.w {
        if w != table.window.radius() {
            return Err(mismatch("W"));
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.table)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.table.display())))?;
    let (dp, triple, values) = match io::parse_table_file(&text)? {
        io::TableFile::Json(table) => {
            check_matches(args, &table)?;
            (table.dp, table.triple, table.values)
        }
        io::TableFile::Csv(values) => (args.deformation.parameter()?, args.triple.parameters()?, values),
    };
    if !triple.parity_compatible() && !values.values().all(|v| v.norm() == 0.0) {
        log("eps3 != eps1 + eps2 (mod 2) but the table has nonzero entries");
        return Ok(EXIT_VERIFY);
    }
    let report = residuals_of(&dp, &triple, &values)?;
    emit(&args.output, &io::report_to_json(&report, args.tol)?)?;
    log_report(&report, args.tol);
    Ok(if report.passes(args.tol) { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_oracle(args: &OracleArgs) -> CmdResult {
    let dp = args.deformation.parameter()?;
    let triple = args.triple.parameters()?;
    warn_if_near_excluded(&triple);
    let sys = assemble(&dp, &triple, args.w)?;
    let result = nullspace(&sys, args.threshold)?;
    let expected = usize::from(triple.parity_compatible());
    log(format!(
        "{} unknowns, {} equations, nullity {} (expected {expected}), gap {:.3e}",
        sys.unknowns.len(),
        sys.rows.len(),
        result.nullity,
        result.gap()
    ));
    let deviation = if result.nullity >= 1 && triple.parity_compatible() {
        let table = build_kernel(&dp, &triple, args.w, Complex64::new(1.0, 0.0))?;
        let d = compare_with_table(&result, &table)?;
        log(format!("deviation from the recursive table: {d:.3e}"));
        Some(d)
    } else {
        None
    };
    emit(&args.output, &io::nullspace_to_json(&result, deviation)?)?;
    let agrees = deviation.is_none_or(|d| d < args.oracle_tol);
    Ok(if result.nullity == expected && agrees { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_reflection(args: &ReflectionArgs) -> CmdResult {
    let dp = args.deformation.parameter()?;
    let s = parse_complex_literal(&args.s).or_else(|_| parse_pair(&args.s)).map_err(Failure::usage)?;
    let mp = ModuleParams::new(s, args.eps).map_err(|e| Failure::usage(e.to_string()))?;
    if mp.distance_to_reducible() < NEAR_EXCLUDED_WARNING {
        log("warning: s is close to a reducible point; coefficients may vanish or blow up");
    }
    let tp = TruncationPolicy::default();
    let forward = reflection_build(&dp, &mp, args.w, &tp)?;
    let backward = reflection_build(&dp, &mp.reflected(), args.w, &tp)?;
    let unitarity = unitarity_residual(&forward, &backward);
    let check = match forward.construction {
        ReflectionConstruction::PhiRatio => Recurrence::E,
        _ => Recurrence::F,
    };
    let second = reflection_by_recurrence(&dp, &mp, args.w, check)?;
    let deviation = anchored_deviation(&forward, &second);
    log(format!(
        "{}: unitarity residual {unitarity:.3e}, deviation from {} {deviation:.3e}",
        io::construction_id(forward.construction),
        io::construction_id(second.construction)
    ));
    emit(&args.output, &io::reflection_to_json(&forward, unitarity, Some(deviation))?)?;
    Ok(if unitarity < args.tol && deviation < args.tol { EXIT_OK } else { EXIT_VERIFY })
}

/// Strictly decreasing deviations.
pub fn is_monotone(rows: &[LimitRow]) -> bool {
    rows.windows(2).all(|w| w[1].deviation < w[0].deviation)
}

fn cmd_limit(args: &LimitArgs) -> CmdResult {
    if args.deformation.given() {
        return Err(Failure::usage("limit sweeps q itself; --q, --log-q and --classical are not accepted"));
    }
    let triple = args.triple.parameters()?;
    if triple.s().iter().any(|s| s.im != 0.0) {
        return Err(Failure::usage("limit needs real s1, s2, s3"));
    }
    if args.j_min < 1 || args.j_max <= args.j_min {
        return Err(Failure::usage("need 1 <= j-min < j-max"));
    }
    warn_if_near_excluded(&triple);
    let rows = limit_sweep(&triple, args.w, args.j_min..=args.j_max)?;
    let monotone = is_monotone(&rows);
    for r in &rows {
        log(format!("j = {}: q = {:.8}, deviation {:.3e}", r.j, r.q, r.deviation));
    }
    let text = match args.format {
        OutputFormat::Json => io::limit_to_json(&triple, args.w, &rows, monotone)?,
        OutputFormat::Csv => io::limit_to_csv(&rows)?,
    };
    emit(&args.output, &text)?;
    Ok(if monotone { EXIT_OK } else { EXIT_VERIFY })
}

pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Kernel(a) => cmd_kernel(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Reflection(a) => cmd_reflection(a),
        Command::Limit(a) => cmd_limit(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            log(format!("error: {}", f.message));
            f.code
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = Complex64::new;
        assert_eq!(parse_complex_literal("2.1").unwrap(), c(2.1, 0.0));
        assert_eq!(parse_complex_literal("1.3+0.5i").unwrap(), c(1.3, 0.5));
        assert_eq!(parse_complex_literal("-1.3-0.5i").unwrap(), c(-1.3, -0.5));
        assert_eq!(parse_complex_literal("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex_literal("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex_literal("1e-3+2e+1i").unwrap(), c(1e-3, 20.0));
        assert!(parse_complex_literal("x").is_err());
        assert_eq!(parse_pair("0.5").unwrap(), c(0.5, 0.0));
        assert_eq!(parse_pair("0.5,-0.1").unwrap(), c(0.5, -0.1));
        assert!(parse_pair("1,2,3").is_err());
    }

    #[test]
    fn triple_flags() {
        let args = TripleArgs {
            s: Some("2.1,1.3+0.5i,0.7".into()),
            s3: Some("0.2,0.1".into()),
            eps: Some("1,1,0".into()),
            ..Default::default()
        };
        let t = args.parameters().unwrap();
        assert_eq!(t.s()[1], Complex64::new(1.3, 0.5));
        assert_eq!(t.s()[2], Complex64::new(0.2, 0.1));
        assert_eq!(t.epsilons(), [1, 1, 0]);
        let missing = TripleArgs { s1: Some("1".into()), ..Default::default() };
        assert_eq!(missing.parameters().unwrap_err().code, EXIT_USAGE);
        let bad_eps = TripleArgs { s: Some("1,1,1".into()), eps: Some("0,2,0".into()), ..Default::default() };
        assert_eq!(bad_eps.parameters().unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn deformation_flags() {
        let none = DeformationArgs::default();
        assert_eq!(none.parameter().unwrap_err().code, EXIT_USAGE);
        let unit = DeformationArgs { q: Some("1".into()), ..Default::default() };
        assert_eq!(unit.parameter().unwrap_err().code, EXIT_DEGENERATE);
        let branch = DeformationArgs {
            q: Some("0.5".into()),
            log_q: Some(format!("{},{}", 0.5f64.ln(), 2.0 * std::f64::consts::PI)),
            ..Default::default()
        };
        assert!(branch.parameter().is_ok());
    }

    #[test]
    fn error_codes() {
        let f: Failure = Error::Breakdown { equation: "F-inv", at: (2, 0), divisor: 0.0 }.into();
        assert_eq!(f.code, EXIT_BREAKDOWN);
        assert!(f.message.contains("(2, 0)"));
        let f: Failure = Error::Degenerate("x".into()).into();
        assert_eq!(f.code, EXIT_DEGENERATE);
        assert_eq!(run(["uqtri", "kernel", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["uqtri", "--help"]), EXIT_OK);
    }
}

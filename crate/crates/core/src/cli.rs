//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 domain error (excluded
//! ratio, singular or indefinite Σ₀), 3 oracle check failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CovTestError, Result};
use crate::mp_law::{cos_offset, helper_integral_cos, mp_integral_g, mp_integral_numeric, MpIndex};
use crate::quadrature::adaptive_simpson;
use crate::rmt_clt::{
    mean_correction, mean_correction_numeric, var_correction, var_correction_numeric, Kappa,
    RmtParams,
};
use crate::score_test::{
    BetaMode, CorrectedRaoScore, CrstDetail, NullSpec, RaoScore, Reference, Sidedness, TestResult,
    TestStatistic,
};
use crate::simulation::{
    power_curve_each, run_monte_carlo, Family, Hypothesis, ScenarioSpec, SimulationReport,
};
use crate::stats::{CovMatrix, DataMatrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

/// Header of the `simulate` / `curve` CSV output.
pub const SIMULATE_HEADER: [&str; 14] = [
    "test",
    "family",
    "hypothesis",
    "n",
    "p",
    "v0",
    "alpha",
    "reps",
    "rejections",
    "rate",
    "ci_low",
    "ci_high",
    "seed",
    "elapsed_s",
];

#[derive(Debug, Parser)]
#[command(
    name = "covtest",
    version,
    about = "Score tests for covariance structure in large dimension"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a data file against a null covariance structure.
    Test(TestArgs),
    /// Estimate the rejection rate of a test on one simulated scenario.
    Simulate(SimulateArgs),
    /// Rejection rates over a grid of alternative strengths v0.
    Curve(CurveArgs),
    /// Compare every closed-form correction term with its numerical oracle.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestKind {
    Crst,
    Rst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypothesisArg {
    Null,
    Alt1,
    Alt2,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long = "test", value_enum, default_value = "crst")]
    pub test: TestKind,
    /// identity, sphericity, or file:<path> (p×p CSV)
    #[arg(long, default_value = "identity")]
    pub null: String,
    /// CSV with one observation per row; a header row is detected automatically.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fourth-moment parameter; estimated from the data when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub kappa: i64,
    /// Two-sided rejection region for the corrected test.
    #[arg(long)]
    pub two_sided: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub output: OutputFormat,
    #[arg(long = "out")]
    pub out_path: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long = "test", value_enum, default_value = "crst")]
    pub test: TestKind,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: FamilyArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = crate::simulation::DEFAULT_MU0, allow_hyphen_values = true)]
    pub mu0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    /// Master seed; a random one is drawn and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Known β; defaults to the family's true value (0 Gaussian, 1.5 Gamma).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "beta_estimate")]
    pub beta: Option<f64>,
    /// Estimate β from each simulated sample instead.
    #[arg(long)]
    pub beta_estimate: bool,
    #[arg(long, default_value_t = 2)]
    pub kappa: i64,
    #[arg(long)]
    pub two_sided: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub output: OutputFormat,
    #[arg(long = "out")]
    pub out_path: Option<PathBuf>,
    /// Write elapsed_s as 0 so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "null")]
    pub hypothesis: HypothesisArg,
    #[arg(long, default_value_t = 0.0)]
    pub v0: f64,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "alt1")]
    pub hypothesis: HypothesisArg,
    /// `start:step:stop` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0:0.02:0.10")]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Ratios to check (comma-separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.9, 1.5, 2.0, 3.0])]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub kappa: i64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

/// JSON/CSV shape of a single test outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub null: String,
    pub statistic: f64,
    pub reference: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df: Option<u64>,
    pub p_value: f64,
    pub sidedness: Sidedness,
    pub alpha: f64,
    pub reject: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<CrstDetail>,
}

impl TestReport {
    pub fn new(test: &str, null: &NullSpec, result: &TestResult, alpha: f64) -> Self {
        Self {
            test: test.to_string(),
            null: null.name().to_string(),
            statistic: result.statistic,
            reference: match result.reference {
                Reference::StandardNormal => "normal".into(),
                Reference::ChiSquare { .. } => "chi_square".into(),
            },
            df: result.df(),
            p_value: result.p_value,
            sidedness: result.sidedness,
            alpha,
            reject: result.reject_at(alpha),
            detail: result.detail,
        }
    }
}

/// One `simulate`/`curve` output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub test: String,
    pub family: String,
    pub hypothesis: String,
    pub n: usize,
    pub p: usize,
    pub v0: f64,
    pub alpha: f64,
    pub reps: u64,
    pub rejections: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub elapsed_s: f64,
}

impl From<&SimulationReport> for ReportRow {
    fn from(r: &SimulationReport) -> Self {
        Self {
            test: r.test_name.clone(),
            family: r.spec.family.name().into(),
            hypothesis: r.spec.hypothesis.name().into(),
            n: r.spec.n,
            p: r.spec.p,
            v0: r.spec.hypothesis.v0(),
            alpha: r.alpha,
            reps: r.replications,
            rejections: r.rejections,
            rate: r.rate,
            ci_low: r.ci95.0,
            ci_high: r.ci95.1,
            seed: r.master_seed,
            elapsed_s: r.elapsed,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_IO,
            };
        }
    };
    let outcome = match cli.command {
        Command::Test(a) => cmd_test(&a, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(&a, stdout, stderr),
        Command::Curve(a) => cmd_curve(&a, stdout, stderr),
        Command::Verify(a) => return cmd_verify(&a, stdout, stderr),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &CovTestError) -> i32 {
    match e {
        CovTestError::Domain(_) | CovTestError::RatioAtUnity { .. } => EXIT_DOMAIN,
        _ => EXIT_IO,
    }
}

fn open_output<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

/// Reads a numeric CSV; a first row that does not parse as numbers is
/// treated as a header.
pub fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(CovTestError::Parse(format!(
                    "{}: row {}: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(CovTestError::Parse(format!(
            "{}: no numeric rows",
            path.display()
        )));
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> CovTestError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CovTestError::Io(io),
            other => CovTestError::Parse(format!("{}: {other:?}", path.display())),
        }
    } else {
        CovTestError::Parse(format!("{}: {e}", path.display()))
    }
}

pub fn parse_null(spec: &str, p: usize) -> Result<NullSpec> {
    match spec {
        "identity" => Ok(NullSpec::Identity),
        "sphericity" => Ok(NullSpec::Sphericity),
        other => {
            let path = other.strip_prefix("file:").ok_or_else(|| {
                CovTestError::Parse(format!(
                    "unknown null '{other}' (expected identity, sphericity or file:<path>)"
                ))
            })?;
            let rows = read_numeric_csv(Path::new(path))?;
            if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                return Err(CovTestError::Parse(format!(
                    "{path}: null covariance must be {p}x{p}"
                )));
            }
            let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
            NullSpec::general(CovMatrix::new(m)?)
        }
    }
}

fn build_test(
    kind: TestKind,
    beta: BetaMode,
    kappa: i64,
    two_sided: bool,
) -> Result<Box<dyn TestStatistic>> {
    Ok(match kind {
        TestKind::Rst => Box::new(RaoScore),
        TestKind::Crst => Box::new(CorrectedRaoScore {
            beta_mode: beta,
            kappa: Kappa::from_int(kappa)?,
            sidedness: if two_sided {
                Sidedness::TwoSided
            } else {
                Sidedness::Upper
            },
        }),
    })
}

pub fn cmd_test(args: &TestArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<()> {
    let rows = read_numeric_csv(&args.data)?;
    let x = DataMatrix::from_observations(&rows)?;
    let null = parse_null(&args.null, x.dim())?;
    let beta = args.beta.map_or(BetaMode::Estimate, BetaMode::Known);
    let test = build_test(args.test, beta, args.kappa, args.two_sided)?;
    let result = test.compute(&x, &null)?;
    let report = TestReport::new(test.name(), &null, &result, args.alpha);
    let mut out = open_output(&args.out_path, stdout)?;
    match args.output {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &report)
                .map_err(|e| CovTestError::Parse(e.to_string()))?;
            writeln!(out)?;
        }
        OutputFormat::Csv => write_test_csv(&mut out, &report)?,
    }
    out.flush()?;
    Ok(())
}

fn write_test_csv(out: &mut dyn Write, r: &TestReport) -> Result<()> {
    let mut header = vec![
        "test",
        "null",
        "statistic",
        "reference",
        "df",
        "p_value",
        "alpha",
        "reject",
    ];
    let mut row = vec![
        r.test.clone(),
        r.null.clone(),
        r.statistic.to_string(),
        r.reference.clone(),
        r.df.map(|d| d.to_string()).unwrap_or_default(),
        r.p_value.to_string(),
        r.alpha.to_string(),
        r.reject.to_string(),
    ];
    if let Some(d) = &r.detail {
        header.extend(["rst_raw", "f_qn_g", "mu_g", "upsilon_g", "q_n", "beta_used"]);
        row.extend(
            [d.rst_raw, d.f_qn_g, d.mu_g, d.upsilon_g, d.q_n, d.beta_used].map(|v| v.to_string()),
        );
    }
    writeln!(out, "{}", header.join(","))?;
    writeln!(out, "{}", row.join(","))?;
    Ok(())
}

fn resolve_seed(seed: Option<u64>, stderr: &mut dyn Write) -> Result<u64> {
    Ok(match seed {
        Some(s) => s,
        None => {
            use std::hash::{BuildHasher, Hasher};
            let mut h = std::collections::hash_map::RandomState::new().build_hasher();
            h.write_u128(
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_nanos())
                    .unwrap_or(0),
            );
            let s = h.finish();
            writeln!(stderr, "no --seed given; using seed {s}")?;
            s
        }
    })
}

fn scenario_test(a: &ScenarioArgs, family: Family) -> Result<Box<dyn TestStatistic>> {
    let beta = if a.beta_estimate {
        BetaMode::Estimate
    } else {
        BetaMode::Known(a.beta.unwrap_or(family.true_beta()))
    };
    build_test(a.test, beta, a.kappa, a.two_sided)
}

fn hypothesis(h: HypothesisArg, v0: f64) -> Hypothesis {
    match h {
        HypothesisArg::Null => Hypothesis::Null,
        HypothesisArg::Alt1 => Hypothesis::Alt1(v0),
        HypothesisArg::Alt2 => Hypothesis::Alt2(v0),
    }
}

fn family(f: FamilyArg) -> Family {
    match f {
        FamilyArg::Gaussian => Family::Gaussian,
        FamilyArg::Gamma => Family::Gamma,
    }
}

/// Writes report rows one at a time, flushing after each.
struct RowWriter<'a> {
    out: Box<dyn Write + 'a>,
    format: OutputFormat,
    no_timing: bool,
    header_done: bool,
}

impl<'a> RowWriter<'a> {
    fn write(&mut self, report: &SimulationReport) -> Result<()> {
        let mut row = ReportRow::from(report);
        if self.no_timing {
            row.elapsed_s = 0.0;
        }
        match self.format {
            OutputFormat::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .has_headers(!self.header_done)
                    .from_writer(&mut self.out);
                w.serialize(&row)
                    .map_err(|e| CovTestError::Parse(e.to_string()))?;
                w.flush()?;
                self.header_done = true;
            }
            OutputFormat::Json => {
                serde_json::to_writer(&mut self.out, &row)
                    .map_err(|e| CovTestError::Parse(e.to_string()))?;
                writeln!(self.out)?;
            }
        }
        self.out.flush()?;
        Ok(())
    }
}

pub fn cmd_simulate(
    args: &SimulateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let a = &args.scenario;
    let fam = family(a.family);
    let spec =
        ScenarioSpec::new(fam, a.n, a.p, hypothesis(args.hypothesis, args.v0))?.with_mu0(a.mu0)?;
    let seed = resolve_seed(a.seed, stderr)?;
    let test = scenario_test(a, fam)?;
    let report = run_monte_carlo(&spec, test.as_ref(), a.alpha, a.reps, seed)?;
    let mut w = RowWriter {
        out: open_output(&a.out_path, stdout)?,
        format: a.output,
        no_timing: a.no_timing,
        header_done: false,
    };
    w.write(&report)
}

pub fn cmd_curve(args: &CurveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let a = &args.scenario;
    let fam = family(a.family);
    let grid = parse_grid(&args.grid)?;
    let template =
        ScenarioSpec::new(fam, a.n, a.p, hypothesis(args.hypothesis, 0.0))?.with_mu0(a.mu0)?;
    let seed = resolve_seed(a.seed, stderr)?;
    let test = scenario_test(a, fam)?;
    let mut w = RowWriter {
        out: open_output(&a.out_path, stdout)?,
        format: a.output,
        no_timing: a.no_timing,
        header_done: false,
    };
    power_curve_each(
        &template,
        test.as_ref(),
        &grid,
        a.alpha,
        a.reps,
        seed,
        |r| w.write(r),
    )
}

/// `start:step:stop` (inclusive, step > 0) or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| CovTestError::Parse(format!("grid '{text}': {msg}"));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| bad(format!("'{s}': {e}")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad("need step > 0 and stop >= start".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + i as f64 * step).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<f64>>>()?,
        _ => return Err(bad("expected start:step:stop or a comma list".into())),
    };
    if grid.is_empty() {
        return Err(bad("empty".into()));
    }
    Ok(grid)
}

/// One row of the oracle suite.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub q: f64,
    pub outcome: std::result::Result<(f64, f64), String>,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, Ok((c, o)) if (c - o).abs() < self.tolerance)
    }
}

/// Closed form vs numerical oracle for every correction term at ratio `q`.
pub fn oracle_checks(q: f64, kappa: Kappa, beta: f64, tol: f64) -> Vec<OracleCheck> {
    let g = |x: f64| (x - 1.0) * (x - 1.0);
    let index = || MpIndex::new(q);
    let params = || index().and_then(|i| RmtParams::new(i, kappa, beta));
    let msg = |e: CovTestError| e.to_string();
    let mut checks = Vec::new();
    let mut push = |name, tolerance, outcome: std::result::Result<(f64, f64), String>| {
        checks.push(OracleCheck {
            name,
            q,
            outcome,
            tolerance,
        })
    };
    push(
        "mp_integral_g",
        1e-7,
        index()
            .and_then(|i| Ok((mp_integral_g(i)?, mp_integral_numeric(g, i, tol)?)))
            .map_err(msg),
    );
    push(
        "mp_normalization",
        1e-8,
        index()
            .and_then(|i| Ok((1.0, mp_integral_numeric(|_| 1.0, i, tol)?)))
            .map_err(msg),
    );
    push(
        "mean_correction",
        1e-6,
        params()
            .and_then(|p| {
                let numeric = mean_correction_numeric(&p, tol)?;
                Ok((mean_correction(&p), numeric))
            })
            .map_err(msg),
    );
    push(
        "var_correction",
        1e-4,
        params()
            .and_then(|p| {
                let numeric = var_correction_numeric(&p, tol)?;
                Ok((var_correction(&p), numeric))
            })
            .map_err(msg),
    );
    push(
        "helper_integral_cos",
        1e-8,
        index()
            .and_then(|i| {
                let d0 = cos_offset(i);
                let closed = helper_integral_cos(d0)?;
                let direct = adaptive_simpson(
                    |t: f64| 1.0 / (t.cos() + d0),
                    0.0,
                    2.0 * std::f64::consts::PI,
                    1e-12,
                )?;
                Ok((closed, direct))
            })
            .map_err(msg),
    );
    checks
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let kappa = match Kappa::from_int(args.kappa) {
        Ok(k) => k,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_IO;
        }
    };
    let mut all_pass = true;
    let _ = writeln!(stdout, "check,q,closed_form,oracle,abs_diff,status");
    for &q in &args.q {
        for check in oracle_checks(q, kappa, args.beta, args.tol) {
            let pass = check.passed();
            all_pass &= pass;
            let line = match &check.outcome {
                Ok((c, o)) => format!(
                    "{},{},{},{},{:e},{}",
                    check.name,
                    q,
                    c,
                    o,
                    (c - o).abs(),
                    if pass { "pass" } else { "FAIL" }
                ),
                Err(e) => format!("{},{},,,,FAIL: {}", check.name, q, e.replace(',', ";")),
            };
            let _ = writeln!(stdout, "{line}");
        }
    }
    if all_pass {
        EXIT_OK
    } else {
        EXIT_ORACLE
    }
}

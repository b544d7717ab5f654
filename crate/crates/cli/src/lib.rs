//! Command-line front end: analyze a state, evolve it, regenerate the
//! figure data sets and run the verification suite.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussphase::consistency::FIGURE_PHASES;
use gaussphase::transform::{
    balance_residuals_at, standard_form, BalanceResiduals, StandardForm, DEGENERACY_EPS,
};
use gaussphase::{
    apply_local, associated_transform, covariance_from_coeffs, covariance_of_squeezed, entanglement, epr_dispersion,
    phase_extraction, run_verify, solve_general, trajectory_with, validate, CovarianceMatrix, EvolutionSpec, Exec,
    LocalSymplectic, SolverOptions, SqueezedParams, TimeSeries, Tolerances, TrajectoryRecord, ValidationReport,
    VerifyOptions, VerifyReport,
};
use serde::Serialize;
use thiserror::Error;

pub mod input;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] gaussphase::Error),

    #[error("invalid state: {0}")]
    Validation(String),

    #[error("hard checks failed: {}", .0.join(", "))]
    HardFailure(Vec<String>),

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl CliError {
    /// 1 for a failed invariant or numerical breakdown, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        use gaussphase::Error as E;
        match self {
            CliError::HardFailure(_) | CliError::Serialize(_) => 1,
            CliError::Core(E::SolverFailure { .. } | E::Precision { .. } | E::SingularEvolution(_) | E::AtTime { .. }) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "gaussphase", version, about = "Associated squeezed states and two-mode phase of Gaussian states")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract (s, phi), the local transform and diagnostics from a state.
    Analyze(AnalyzeArgs),
    /// Write a trajectory of the center-of-mass evolution.
    Evolve(EvolveArgs),
    /// Write the five reference trajectories and a manifest.
    Figures(FiguresArgs),
    /// Run invariant and closed-form checks and write the report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    /// Tolerance on |det V - 1/16|.
    #[arg(long, default_value_t = 1e-10)]
    pub purity_tol: f64,
    /// Tolerance on max |A - B|.
    #[arg(long, default_value_t = 1e-10)]
    pub symmetry_tol: f64,
    /// Tolerance on |det A + det C - 1/4|.
    #[arg(long, default_value_t = 1e-10)]
    pub det_tol: f64,
}

impl ToleranceArgs {
    fn tolerances(&self) -> Result<Tolerances, CliError> {
        for (name, x) in [("purity-tol", self.purity_tol), ("symmetry-tol", self.symmetry_tol), ("det-tol", self.det_tol)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(CliError::Config(format!("--{name} must be a positive number")));
            }
        }
        Ok(Tolerances { purity: self.purity_tol, symmetry: self.symmetry_tol, det_relation: self.det_tol })
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// 4x4 covariance matrix, or coefficients with --coeffs.
    #[arg(long)]
    pub input: PathBuf,
    /// Read six labeled coefficients (alpha_re ... gamma_im) instead.
    #[arg(long)]
    pub coeffs: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub degrees: bool,
    /// Seed for the multi-start solver (asymmetric inputs).
    #[arg(long, default_value_t = SolverOptions::default().seed)]
    pub seed: u64,
    #[command(flatten)]
    pub tol: ToleranceArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = 1.0)]
    pub s0: f64,
    /// Initial phase in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub phi0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub degrees: bool,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long)]
    pub degrees: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = SolverOptions::default().seed)]
    pub seed: u64,
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub tol: ToleranceArgs,
}

fn exec_for(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn angle_unit(degrees: bool) -> &'static str {
    if degrees {
        "degrees"
    } else {
        "radians"
    }
}

fn angle(x: f64, degrees: bool) -> f64 {
    if degrees {
        x.to_degrees()
    } else {
        x
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeTransform {
    pub r: f64,
    pub theta: f64,
    pub psi: f64,
}

impl ModeTransform {
    fn new(m: &LocalSymplectic, degrees: bool) -> Self {
        ModeTransform { r: m.r, theta: angle(m.theta, degrees), psi: angle(m.psi, degrees) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CosPhi {
    pub balance: Option<f64>,
    pub block: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    /// `closed-form` for symmetric inputs, `general-solver` otherwise.
    pub method: &'static str,
    pub angle_unit: &'static str,
    pub s: f64,
    pub phi: f64,
    /// Closed-form symmetric transform (symmetric inputs only).
    pub r: Option<f64>,
    pub theta: Option<f64>,
    /// Per-mode transform taking V exactly to the squeezed covariance at (s, phi).
    pub transform: [ModeTransform; 2],
    pub squeezed_form_residual: f64,
    pub entanglement: f64,
    pub epr_dispersion: f64,
    pub standard_form: StandardForm,
    pub balance_residuals: Option<BalanceResiduals>,
    pub cos_phi: Option<CosPhi>,
    pub solver_start: Option<usize>,
    pub validation: ValidationReport,
    pub covariance: [[f64; 4]; 4],
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn load_state(args: &AnalyzeArgs) -> Result<CovarianceMatrix, CliError> {
    let text = read(&args.input)?;
    if args.coeffs {
        Ok(covariance_from_coeffs(&input::parse_coeffs(&text)?)?)
    } else {
        Ok(CovarianceMatrix::from_matrix(input::parse_covariance(&text)?)?)
    }
}

pub fn analyze(v: &CovarianceMatrix, tol: &Tolerances, seed: u64, degrees: bool) -> Result<AnalyzeReport, CliError> {
    let validation = validate(v, tol);
    if !validation.is_valid_pure() {
        return Err(CliError::Validation(format!(
            "not a pure state: |det V - 1/16| = {:e} (tolerance {:e}), A positive definite: {}, B positive definite: {}",
            validation.purity_residual, tol.purity, validation.a_positive_definite, validation.b_positive_definite
        )));
    }
    if !validation.det_relation {
        return Err(CliError::Validation(format!(
            "|det A + det C - 1/4| = {:e} exceeds {:e}",
            validation.det_relation_residual, tol.det_relation
        )));
    }
    let std_form = standard_form(v)?;
    let common = |method, s: f64, phi: f64, m: [LocalSymplectic; 2]| {
        let w = apply_local(v, &m[0], &m[1]);
        let resid = w.max_abs_diff(&covariance_of_squeezed(SqueezedParams { s, phi }));
        Ok::<_, CliError>(AnalyzeReport {
            method,
            angle_unit: angle_unit(degrees),
            s,
            phi: angle(phi, degrees),
            r: None,
            theta: None,
            transform: [ModeTransform::new(&m[0], degrees), ModeTransform::new(&m[1], degrees)],
            squeezed_form_residual: resid,
            entanglement: entanglement(s)?,
            epr_dispersion: epr_dispersion(v),
            standard_form: std_form,
            balance_residuals: None,
            cos_phi: None,
            solver_start: None,
            validation,
            covariance: v.to_rows(),
        })
    };

    let symmetric = (v.a() - v.b()).amax() <= tol.symmetry.max(DEGENERACY_EPS * v.a().trace());
    if symmetric {
        let p = phase_extraction(v)?;
        let (s1, s2) = associated_transform(v)?;
        let mut rep = common("closed-form", p.s, p.phi, [s1, s2])?;
        rep.r = Some(p.transform.r);
        rep.theta = Some(angle(p.transform.theta, degrees));
        rep.balance_residuals = Some(balance_residuals_at(v, p.s, p.phi));
        rep.cos_phi = Some(CosPhi { balance: p.cos_balance, block: p.cos_block });
        Ok(rep)
    } else {
        let opts = SolverOptions { seed, ..Default::default() };
        let sol = solve_general(v, &opts, Exec::default())?;
        let mut rep = common("general-solver", sol.squeezed.s, sol.squeezed.phi, [sol.s1, sol.s2])?;
        rep.solver_start = Some(sol.start);
        Ok(rep)
    }
}

pub fn run_analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<AnalyzeReport, CliError> {
    let tol = args.tol.tolerances()?;
    let v = load_state(args)?;
    let report = analyze(&v, &tol, args.seed, args.degrees)?;
    let bytes = to_json(&report)?;
    match &args.output {
        Some(path) => write_bytes(path, &bytes)?,
        None => stdout.write_all(&bytes).map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
struct SeriesDocument<'a> {
    angle_unit: &'static str,
    spec: EvolutionSpec,
    records: &'a [TrajectoryRecord],
}

fn converted(ts: &TimeSeries, degrees: bool) -> Vec<TrajectoryRecord> {
    ts.records
        .iter()
        .map(|r| TrajectoryRecord { theta: angle(r.theta, degrees), phi: angle(r.phi, degrees), ..*r })
        .collect()
}

/// Serialized trajectory. CSV columns follow [`TrajectoryRecord::FIELDS`].
pub fn encode_series(ts: &TimeSeries, format: Format, degrees: bool) -> Result<Vec<u8>, CliError> {
    let records = converted(ts, degrees);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &records {
                w.serialize(r).map_err(|e| CliError::Serialize(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Serialize(e.to_string()))
        }
        Format::Json => to_json(&SeriesDocument { angle_unit: angle_unit(degrees), spec: ts.spec, records: &records }),
    }
}

pub fn run_evolve(args: &EvolveArgs) -> Result<TimeSeries, CliError> {
    let spec = EvolutionSpec::new(args.s0, args.phi0, args.t_max, args.steps)?;
    let ts = trajectory_with(&spec, exec_for(args.sequential))?;
    write_bytes(&args.output, &encode_series(&ts, args.format, args.degrees)?)?;
    Ok(ts)
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub s0: f64,
    pub phi0: f64,
    pub phi0_label: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub format: Format,
    pub angle_unit: &'static str,
    pub t_max: f64,
    pub steps: usize,
    pub columns: [&'static str; 8],
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn phase_label(phi0: f64) -> &'static str {
    const LABELS: [(f64, &str); 5] =
        [(PI, "pi"), (2.0 * PI / 3.0, "2pi_3"), (PI / 2.0, "pi_2"), (PI / 3.0, "pi_3"), (PI / 4.0, "pi_4")];
    LABELS.iter().find(|(x, _)| (x - phi0).abs() < 1e-12).map(|(_, l)| *l).unwrap_or("custom")
}

pub fn run_figures(args: &FiguresArgs) -> Result<Manifest, CliError> {
    fs::create_dir_all(&args.output_dir).map_err(io_err(&args.output_dir))?;
    let mut files = Vec::new();
    for &phi0 in &FIGURE_PHASES {
        let spec = EvolutionSpec::new(1.0, phi0, args.t_max, args.steps)?;
        let ts = trajectory_with(&spec, Exec::default())?;
        let label = phase_label(phi0);
        let name = format!("trajectory_phi0_{label}.{}", args.format.extension());
        write_bytes(&args.output_dir.join(&name), &encode_series(&ts, args.format, args.degrees)?)?;
        files.push(ManifestEntry { file: name, s0: 1.0, phi0, phi0_label: label });
    }
    let manifest = Manifest {
        format: args.format,
        angle_unit: angle_unit(args.degrees),
        t_max: args.t_max,
        steps: args.steps,
        columns: TrajectoryRecord::FIELDS,
        files,
    };
    write_bytes(&args.output_dir.join(MANIFEST_NAME), &to_json(&manifest)?)?;
    Ok(manifest)
}

#[derive(Debug, Serialize)]
struct ReportDocument<'a> {
    passed: bool,
    hard_failures: &'a [String],
    records: &'a [gaussphase::CheckRecord],
}

/// Writes the report, then fails with the names of any failed hard checks.
pub fn run_verify_command(args: &VerifyArgs) -> Result<VerifyReport, CliError> {
    if args.steps < 2 {
        return Err(CliError::Config("--steps must be >= 2".into()));
    }
    let opts = VerifyOptions {
        tolerances: args.tol.tolerances()?,
        solver: SolverOptions { seed: args.seed, ..Default::default() },
        exec: exec_for(args.sequential),
        steps: args.steps,
        ..Default::default()
    };
    let report = run_verify(&opts)?;
    let failed: Vec<String> = report.hard_failures().iter().map(|r| r.name.clone()).collect();
    let doc = ReportDocument { passed: failed.is_empty(), hard_failures: &failed, records: &report.records };
    write_bytes(&args.report, &to_json(&doc)?)?;
    if !failed.is_empty() {
        return Err(CliError::HardFailure(failed));
    }
    Ok(report)
}

/// Run one command; returns the process exit status.
pub fn run(config: RunConfig) -> i32 {
    let mut stdout = std::io::stdout().lock();
    let result = match &config.command {
        Command::Analyze(a) => run_analyze(a, &mut stdout).map(|_| ()),
        Command::Evolve(a) => run_evolve(a).map(|_| ()),
        Command::Figures(a) => run_figures(a).map(|_| ()),
        Command::Verify(a) => run_verify_command(a).map(|r| {
            let info = r.records.iter().filter(|x| !x.passed).count();
            let _ = writeln!(stdout, "{} checks, all hard checks passed, {info} informational discrepancies", r.records.len());
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `momexp`: evaluate, solve and decompose from the command line.
//!
//! Every verb writes one JSON document to stdout; diagnostics go to stderr.
//! Exit status 0 is success, 2 an input or parse error, 3 a numeric failure
//! (radius exceeded, no convergence, singular matrix, failed Jordan chains).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use momexp::expm::{eval_exp, eval_exp_exact, eval_via_jordan};
use momexp::jordan::{jordan_decompose, verify_decomposition};
use momexp::json::{
    decomposition_to_json, detect_backend, matrix_to_json, parse_decomposition, parse_matrix_for, parse_series_as,
    parse_vector_as, series_backend, series_to_json, vector_to_json, CDecomposition, JsonScalar,
};
use momexp::moment::MomentKind;
use momexp::scalar::{parse_complex, parse_exact_complex};
use momexp::series::{inverse_series, phi_coefficients};
use momexp::solver::{q_derivative_residual, residual_check, solve, IVPSolution};
use momexp::{
    Backend, CMatrix, Error, EvalReport, EvalStatus, ExactScalar, FloatMatrix, FloatScalar, JordanOptions, Matrix,
    MomentSequence, MomentSeries, TruncationPolicy,
};

#[derive(Parser)]
#[command(name = "momexp", version, about = "Matrix exponentials and linear systems in a moment basis")]
struct Cli {
    /// Arithmetic backend; inferred from the input entries when omitted.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Exact,
    Float,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Float => Backend::Float,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate E(Az).
    Eval(EvalArgs),
    /// Solve the system with y(0) = v0 and evaluate it.
    Solve(SolveArgs),
    /// Jordan decomposition of a matrix.
    Jordan(JordanArgs),
    /// Check a supplied Jordan decomposition.
    VerifyJordan(VerifyArgs),
    /// Formal series in the moment basis.
    Series {
        #[command(subcommand)]
        op: SeriesOp,
    },
    /// Growth report of a moment sequence.
    Probe(ProbeArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// JSON file with the matrix rows.
    #[arg(long)]
    matrix: PathBuf,
    /// Complex argument "re,im".
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    z: String,
    /// Moment sequence: factorial, ml:k, qfac:q, geom:b or custom:<path>.
    #[arg(long, default_value = "factorial")]
    moment: String,
    #[arg(long, default_value_t = TruncationPolicy::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = TruncationPolicy::default().max_terms)]
    max_terms: usize,
    #[arg(long, value_enum, default_value = "series")]
    path: EvalPath,
    #[command(flatten)]
    jordan: JordanFlags,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalPath {
    Series,
    Jordan,
    Both,
}

#[derive(Args)]
struct JordanFlags {
    /// Relative rank threshold for kernel computations.
    #[arg(long = "rank-tol", default_value_t = JordanOptions::default().rank_tol)]
    rank_tol: f64,
    /// Relative distance below which eigenvalues are merged.
    #[arg(long, default_value_t = JordanOptions::default().eig_tol)]
    eig_tol: f64,
}

impl JordanFlags {
    fn options(&self) -> JordanOptions {
        JordanOptions { rank_tol: self.rank_tol, eig_tol: self.eig_tol }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// JSON file with the matrix rows.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value = "factorial")]
    moment: String,
    /// Initial vector as JSON, e.g. '[[1,0],[0,0]]' or '[["1","0"],["0","0"]]'.
    #[arg(long, allow_hyphen_values = true)]
    v0: String,
    /// Evaluation point "re,im"; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    z: Vec<String>,
    #[arg(long, value_enum, default_value = "none")]
    check: Check,
    /// Order of the coefficient residual check.
    #[arg(long, default_value_t = 30)]
    order: usize,
    #[arg(long, default_value_t = TruncationPolicy::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = TruncationPolicy::default().max_terms)]
    max_terms: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Residual,
    Qres,
    None,
}

#[derive(Args)]
struct JordanArgs {
    /// JSON file with the matrix rows.
    #[arg(long)]
    matrix: PathBuf,
    /// Relative rank threshold for kernel computations.
    #[arg(long, default_value_t = JordanOptions::default().rank_tol)]
    tol: f64,
    #[arg(long, default_value_t = JordanOptions::default().eig_tol)]
    eig_tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON file with the matrix rows.
    #[arg(long)]
    matrix: PathBuf,
    /// JSON file with blocks, P and optionally P_inv.
    #[arg(long)]
    decomposition: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Subcommand)]
enum SeriesOp {
    /// Coefficients A^p of E(Az).
    Exp(SeriesMatrixArgs),
    /// Coefficients of the Cauchy inverse of E(Az).
    Inverse(SeriesMatrixArgs),
    /// Moment derivative of a series file.
    Derivative {
        /// JSON file with a series.
        #[arg(long)]
        series: PathBuf,
    },
    /// Cauchy product of two series files, left times right.
    Product {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Scalar coefficients of the inverse of the scalar E(z).
    Phi {
        #[arg(long, default_value = "factorial")]
        moment: String,
        #[arg(long, default_value_t = 10)]
        order: usize,
    },
}

#[derive(Args)]
struct SeriesMatrixArgs {
    /// JSON file with the matrix rows.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value = "factorial")]
    moment: String,
    #[arg(long, default_value_t = 10)]
    order: usize,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, default_value = "factorial")]
    moment: String,
    #[arg(long, default_value_t = 64)]
    terms: usize,
}

enum Failure {
    Input(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularMatrix
            | Error::NotConverged(_)
            | Error::RootFinding(_)
            | Error::ChainConstructionFailed(_)
            | Error::NoExactClosedForm(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// A JSON document plus the exit status it should leave with.
struct Outcome {
    doc: Value,
    code: u8,
}

impl Outcome {
    fn ok(doc: Value) -> Self {
        Self { doc, code: 0 }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.doc).expect("serializable"));
            ExitCode::from(out.code)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CliResult<Outcome> {
    let backend = cli.backend.map(Backend::from);
    match cli.command {
        Command::Eval(args) => eval_cmd(&args, backend),
        Command::Solve(args) => solve_cmd(&args, backend),
        Command::Jordan(args) => jordan_cmd(&args, backend),
        Command::VerifyJordan(args) => verify_cmd(&args, backend),
        Command::Series { op } => series_cmd(&op, backend),
        Command::Probe(args) => probe_cmd(&args),
    }
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    momexp::json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path, backend: Option<Backend>) -> CliResult<CMatrix> {
    Ok(parse_matrix_for(&read_json(path)?, backend)?)
}

fn policy(tol: f64, max_terms: usize) -> CliResult<TruncationPolicy> {
    Ok(TruncationPolicy { tol, max_terms, ..TruncationPolicy::default() }.validated()?)
}

fn complex_json(z: Complex64) -> Value {
    FloatScalar::to_json(&z)
}

fn status_code(status: EvalStatus) -> u8 {
    if status == EvalStatus::Converged {
        0
    } else {
        3
    }
}

fn report_fields(report: &EvalReport<FloatMatrix>) -> Value {
    json!({
        "value": if report.is_converged() { matrix_to_json(&report.value) } else { Value::Null },
        "terms_used": report.terms_used,
        "tail_estimate": report.tail_estimate,
        "status": report.status.as_str(),
    })
}

fn eval_cmd(args: &EvalArgs, backend: Option<Backend>) -> CliResult<Outcome> {
    let m = read_matrix(&args.matrix, backend)?;
    let seq = MomentSequence::parse(&args.moment)?;
    let policy = policy(args.tol, args.max_terms)?;

    if backend == Some(Backend::Exact) {
        if args.path != EvalPath::Series {
            return Err(Failure::Input("the exact backend evaluates closed forms only; use --path series".into()));
        }
        let a = m.as_exact().expect("exact backend yields an exact matrix");
        let z = parse_exact_complex(&args.z)?;
        return match eval_exp_exact(a, &z, &seq) {
            Ok(value) => Ok(Outcome::ok(json!({
                "backend": "exact",
                "path": "series",
                "value": matrix_to_json(&value),
                "terms_used": Value::Null,
                "tail_estimate": 0.0,
                "status": EvalStatus::Converged.as_str(),
            }))),
            Err(Error::NotConverged(msg)) => {
                eprintln!("error: {msg}");
                Ok(Outcome {
                    doc: json!({
                        "backend": "exact",
                        "path": "series",
                        "value": Value::Null,
                        "terms_used": Value::Null,
                        "tail_estimate": Value::Null,
                        "status": EvalStatus::RadiusExceeded.as_str(),
                    }),
                    code: 3,
                })
            }
            Err(e) => Err(e.into()),
        };
    }

    let a = m.to_float_lossy();
    let z = parse_complex(&args.z)?;
    let series = match args.path {
        EvalPath::Series | EvalPath::Both => Some(eval_exp(&a, z, &seq, &policy)?),
        EvalPath::Jordan => None,
    };
    let jordan = match args.path {
        EvalPath::Jordan | EvalPath::Both => {
            let dec = decompose(&m, &args.jordan.options(), false)?;
            Some(match &dec {
                CDecomposition::Exact(d) => eval_via_jordan(d, z, &seq, &policy)?,
                CDecomposition::Float(d) => eval_via_jordan(d, z, &seq, &policy)?,
            })
        }
        EvalPath::Series => None,
    };
    let path_name = match args.path {
        EvalPath::Series => "series",
        EvalPath::Jordan => "jordan",
        EvalPath::Both => "both",
    };
    let primary = series.as_ref().or(jordan.as_ref()).expect("at least one path");
    let mut doc = report_fields(primary);
    doc["backend"] = json!("float");
    doc["path"] = json!(path_name);
    let mut code = status_code(primary.status);
    if let (Some(s), Some(j)) = (&series, &jordan) {
        doc["jordan"] = report_fields(j);
        doc["discrepancy"] =
            if s.is_converged() && j.is_converged() { json!(s.value.distance(&j.value)?) } else { Value::Null };
        code = code.max(status_code(j.status));
    }
    if code != 0 {
        eprintln!("error: evaluation stopped with status {}", primary.status);
    }
    Ok(Outcome { doc, code })
}

/// Exact decomposition for exact input, falling back to float when the
/// eigenvalues are not Gaussian rationals and exactness was not demanded.
fn decompose(m: &CMatrix, opts: &JordanOptions, exact_required: bool) -> CliResult<CDecomposition> {
    match m {
        CMatrix::Exact(a) => match jordan_decompose(a, opts) {
            Ok(d) => Ok(CDecomposition::Exact(d)),
            Err(Error::NotExact(msg)) if !exact_required => {
                eprintln!("note: {msg}; falling back to the float backend");
                Ok(CDecomposition::Float(jordan_decompose(&a.to_float(), opts)?))
            }
            Err(e) => Err(e.into()),
        },
        CMatrix::Float(a) => Ok(CDecomposition::Float(jordan_decompose(a, opts)?)),
    }
}

fn solve_cmd(args: &SolveArgs, backend: Option<Backend>) -> CliResult<Outcome> {
    let m = read_matrix(&args.matrix, backend)?;
    let seq = MomentSequence::parse(&args.moment)?;
    let v_doc = momexp::json::from_str(&args.v0)?;
    let v_backend = detect_backend(&v_doc)?;
    let zs = args.z.iter().map(|z| parse_complex(z)).collect::<Result<Vec<_>, _>>()?;
    let policy = policy(args.tol, args.max_terms)?;
    let exact = match backend {
        Some(Backend::Exact) => true,
        Some(Backend::Float) => false,
        None => matches!(m, CMatrix::Exact(_)) && v_backend == Backend::Exact,
    };
    if exact {
        let a = m.as_exact().ok_or_else(|| Failure::Input("the exact backend needs an exact matrix".into()))?;
        let v: Matrix<ExactScalar> = parse_vector_as(&v_doc)?;
        solve_report(&solve(a, &v, seq)?, &zs, args, &policy, "exact")
    } else {
        let v: FloatMatrix = match v_backend {
            Backend::Exact => parse_vector_as::<ExactScalar>(&v_doc)?.to_float(),
            Backend::Float => parse_vector_as(&v_doc)?,
        };
        solve_report(&solve(&m.to_float_lossy(), &v, seq)?, &zs, args, &policy, "float")
    }
}

fn solve_report<S: JsonScalar>(
    sol: &IVPSolution<S>,
    zs: &[Complex64],
    args: &SolveArgs,
    policy: &TruncationPolicy,
    backend: &str,
) -> CliResult<Outcome> {
    let mut code = 0;
    let mut solutions = Vec::with_capacity(zs.len());
    for &z in zs {
        let r = sol.evaluate(z, policy)?;
        code = code.max(status_code(r.status));
        solutions.push(json!({
            "z": complex_json(z),
            "y": if r.is_converged() { vector_to_json(&r.value) } else { Value::Null },
            "terms_used": r.terms_used,
            "status": r.status.as_str(),
        }));
    }
    let mut doc = json!({
        "backend": backend,
        "sequence": sol.seq().specifier(),
        "v0": vector_to_json(sol.v_c()),
        "solutions": solutions,
    });
    match args.check {
        Check::None => {}
        Check::Residual => {
            doc["residual"] =
                json!({ "check": "residual", "order": args.order, "max": residual_check(sol, args.order)? });
        }
        Check::Qres => {
            let q = match sol.seq().kind() {
                MomentKind::QFactorial { q } => q.to_f64(),
                _ => return Err(Failure::Input("--check qres needs a qfac:q moment sequence".into())),
            };
            if zs.is_empty() {
                return Err(Failure::Input("--check qres needs at least one --z".into()));
            }
            doc["residual"] = json!({ "check": "qres", "q": q, "max": q_derivative_residual(sol, q, zs, policy)? });
        }
    }
    if code != 0 {
        eprintln!("error: at least one evaluation did not converge");
    }
    Ok(Outcome { doc, code })
}

fn jordan_cmd(args: &JordanArgs, backend: Option<Backend>) -> CliResult<Outcome> {
    let m = read_matrix(&args.matrix, backend)?;
    let opts = JordanOptions { rank_tol: args.tol, eig_tol: args.eig_tol };
    let (mut doc, name) = match decompose(&m, &opts, backend == Some(Backend::Exact))? {
        CDecomposition::Exact(d) => (decomposition_to_json(&d), "exact"),
        CDecomposition::Float(d) => (decomposition_to_json(&d), "float"),
    };
    doc["backend"] = json!(name);
    Ok(Outcome::ok(doc))
}

fn verify_cmd(args: &VerifyArgs, backend: Option<Backend>) -> CliResult<Outcome> {
    let m = read_matrix(&args.matrix, backend)?;
    let dec_doc = read_json(&args.decomposition)?;
    let (v, name) = match parse_decomposition(&dec_doc, &m)? {
        CDecomposition::Exact(d) => (verify_decomposition(m.as_exact().expect("exact"), &d, args.tol)?, "exact"),
        CDecomposition::Float(d) => (verify_decomposition(&m.to_float_lossy(), &d, args.tol)?, "float"),
    };
    Ok(Outcome::ok(json!({
        "backend": name,
        "residual": v.residual,
        "inverse_residual": v.inverse_residual,
        "ok": v.ok,
    })))
}

/// Exact series need exact moments; float-only sequences switch to floats
/// unless the exact backend was requested.
fn series_is_exact(m: &CMatrix, seq: &MomentSequence, backend: Option<Backend>) -> CliResult<bool> {
    match (backend, m) {
        (Some(Backend::Exact), _) if !seq.is_exact() => {
            Err(Failure::Input(format!("{} has no exact values; use --backend float", seq.specifier())))
        }
        (_, CMatrix::Exact(_)) => Ok(seq.is_exact() || backend == Some(Backend::Exact)),
        (_, CMatrix::Float(_)) => Ok(false),
    }
}

fn series_cmd(op: &SeriesOp, backend: Option<Backend>) -> CliResult<Outcome> {
    let doc = match op {
        SeriesOp::Exp(args) | SeriesOp::Inverse(args) => {
            let m = read_matrix(&args.matrix, backend)?;
            let seq = MomentSequence::parse(&args.moment)?;
            let inverse = matches!(op, SeriesOp::Inverse(_));
            if series_is_exact(&m, &seq, backend)? {
                let a = m.as_exact().expect("exact");
                let s = if inverse {
                    inverse_series(a, seq, args.order)?
                } else {
                    MomentSeries::exp_series(a, seq, args.order)?
                };
                series_to_json(&s)
            } else {
                let a = m.to_float_lossy();
                let s = if inverse {
                    inverse_series(&a, seq, args.order)?
                } else {
                    MomentSeries::exp_series(&a, seq, args.order)?
                };
                series_to_json(&s)
            }
        }
        SeriesOp::Derivative { series } => {
            let doc = read_json(series)?;
            match series_backend(&doc)? {
                Backend::Exact => series_to_json(&parse_series_as::<ExactScalar>(&doc)?.moment_derivative()?),
                Backend::Float => series_to_json(&parse_series_as::<FloatScalar>(&doc)?.moment_derivative()?),
            }
        }
        SeriesOp::Product { left, right } => {
            let (l, r) = (read_json(left)?, read_json(right)?);
            match (series_backend(&l)?, series_backend(&r)?) {
                (Backend::Exact, Backend::Exact) => series_to_json(
                    &parse_series_as::<ExactScalar>(&l)?.cauchy_product(&parse_series_as::<ExactScalar>(&r)?)?,
                ),
                (Backend::Float, Backend::Float) => series_to_json(
                    &parse_series_as::<FloatScalar>(&l)?.cauchy_product(&parse_series_as::<FloatScalar>(&r)?)?,
                ),
                (lb, rb) => return Err(Error::BackendMismatch { left: lb, right: rb }.into()),
            }
        }
        SeriesOp::Phi { moment, order } => {
            let seq = MomentSequence::parse(moment)?;
            let values: Vec<Value> = if seq.is_exact() && backend != Some(Backend::Float) {
                phi_coefficients::<ExactScalar>(&seq, *order)?
                    .iter()
                    .map(|c| ExactScalar::component_to_json(true, c))
                    .collect()
            } else {
                phi_coefficients::<FloatScalar>(&seq, *order)?.iter().map(|c| json!(c.re)).collect()
            };
            json!({ "sequence": seq.specifier(), "phi": values })
        }
    };
    Ok(Outcome::ok(doc))
}

fn probe_cmd(args: &ProbeArgs) -> CliResult<Outcome> {
    let seq = MomentSequence::parse(&args.moment)?;
    let r = seq.growth_probe(args.terms)?;
    Ok(Outcome::ok(json!({
        "sequence": r.specifier,
        "terms": r.terms,
        "roots": r.roots,
        "min_root": r.min_root,
        "last_root": r.last_root,
        "trend": r.trend,
        "finite_radius_suspected": r.finite_radius_suspected,
        "rapid_growth_declared": r.rapid_growth_declared,
    })))
}

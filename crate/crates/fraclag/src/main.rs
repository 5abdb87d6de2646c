//! Command-line front end.
//!
//! Exit codes: 0 success, 2 validation error, 3 solver divergence or
//! carrier exit, 4 oracle-check failure. All error detail goes to
//! stderr as JSON lines; outputs are byte-identical across reruns of
//! the same configuration.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use fraclag::expr::parse_expression;
use fraclag::neumann::{solve_general, verify_general, GeneralProblem, Halt};
use fraclag::oracle::{oracle_check_series, Scheme};
use fraclag::oscillator::{residual_check, solve, OscillatorProblem};
use fraclag::report::{format_float, write_csv, write_json};
use fraclag::{lagrangian, FracError, FracSeries, Interval};

const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "fraclag",
    about = "Fractional-order oscillator and variational toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the fractional oscillator; CSV columns: t,x1,x2,residual_abs
    Oscillator(Opts),
    /// Solve the damped generalization by operator inversion
    General(Opts),
    /// Synthesize a Lagrangian from equation coefficients b and f
    Synthesize(Opts),
    /// Apply one fractional operator to a series expression
    Fracop(Opts),
    /// Check a formal operator image against a numeric oracle
    Verify(Opts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Oscillator(_) => "oscillator",
            Command::General(_) => "general",
            Command::Synthesize(_) => "synthesize",
            Command::Fracop(_) => "fracop",
            Command::Verify(_) => "verify",
        }
    }

    fn opts(&self) -> &Opts {
        match self {
            Command::Oscillator(o)
            | Command::General(o)
            | Command::Synthesize(o)
            | Command::Fracop(o)
            | Command::Verify(o) => o,
        }
    }
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// INI-style config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fractional order in (0, 1]
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Working interval as "A,B"
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
    /// Oscillator eigenvalue
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// First free coefficient
    #[arg(long, allow_negative_numbers = true)]
    a0: Option<f64>,
    /// Second free coefficient
    #[arg(long, allow_negative_numbers = true)]
    a1: Option<f64>,
    /// Truncation order (oscillator) or iteration budget (general)
    #[arg(long)]
    order: Option<usize>,
    /// Forcing / operand expression, e.g. "2*(t-a)^0.5 - 1"
    #[arg(long = "expr-f", allow_hyphen_values = true)]
    expr_f: Option<String>,
    /// Damping expression, a single monomial
    #[arg(long = "expr-g", allow_hyphen_values = true)]
    expr_g: Option<String>,
    /// Coupling expression in t and x (synthesize)
    #[arg(long = "expr-b", allow_hyphen_values = true)]
    expr_b: Option<String>,
    /// Homogeneous coefficient, "RE" or "RE,IM"
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<String>,
    /// Homogeneous coefficient, "RE" or "RE,IM"
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<String>,
    /// Number of sample / check points
    #[arg(long)]
    grid: Option<usize>,
    /// Oracle step size
    #[arg(long = "oracle-h")]
    oracle_h: Option<f64>,
    /// Oracle tolerance; enables the check under fracop
    #[arg(long)]
    tol: Option<f64>,
    /// Iterate-norm growth guard (general)
    #[arg(long)]
    guard: Option<f64>,
    /// Operator: leftRL | leftCaputo | rightRLFormal | integral
    #[arg(long)]
    op: Option<String>,
    /// Primary output path (CSV or JSON, command dependent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Secondary report path (JSON)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Seed for randomized suites; deterministic commands ignore it
    #[arg(long)]
    seed: Option<u64>,
}

/// A failure annotated with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl From<FracError> for Failure {
    fn from(e: FracError) -> Self {
        let code = match e {
            FracError::Divergence { .. } | FracError::CarrierExit { .. } => EXIT_SOLVER,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": f.message, "code": f.code}));
            ExitCode::from(f.code)
        }
    }
}

/// Resolved configuration: config-file values overlaid by flags.
struct Resolved {
    section: HashMap<String, String>,
    flags: Opts,
}

impl Resolved {
    fn load(command: &Command) -> Result<Self, Failure> {
        let flags = command.opts().clone();
        let section = match &flags.config {
            Some(path) => load_config_section(path, command.name())?,
            None => HashMap::new(),
        };
        Ok(Resolved { section, flags })
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.section.get(key).cloned()
    }

    fn string(&self, key: &str, flag: &Option<String>) -> Option<String> {
        flag.clone().or_else(|| self.raw(key))
    }

    fn parse_key<T>(&self, key: &str, flag: &Option<T>) -> Result<Option<T>, Failure>
    where
        T: std::str::FromStr + Clone,
    {
        if let Some(v) = flag {
            return Ok(Some(v.clone()));
        }
        match self.raw(key) {
            None => Ok(None),
            Some(text) => text.parse::<T>().map(Some).map_err(|_| {
                Failure::validation(format!("config key '{key}': cannot parse '{text}'"))
            }),
        }
    }

    fn alpha(&self) -> Result<f64, Failure> {
        self.parse_key("alpha", &self.flags.alpha)?
            .ok_or_else(|| Failure::validation("missing required parameter: alpha"))
    }

    fn interval(&self) -> Result<Interval, Failure> {
        let text = self
            .string("interval", &self.flags.interval)
            .unwrap_or_else(|| "0,1".to_string());
        let (a, b) = split_pair(&text)
            .ok_or_else(|| Failure::validation(format!("interval must be 'A,B', got '{text}'")))?;
        Ok(Interval::new(a, b)?)
    }

    fn complex(&self, key: &str, flag: &Option<String>) -> Result<Complex64, Failure> {
        let Some(text) = self.string(key, flag) else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        if let Some((re, im)) = split_pair(&text) {
            return Ok(Complex64::new(re, im));
        }
        text.trim()
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| Failure::validation(format!("{key} must be 'RE' or 'RE,IM', got '{text}'")))
    }

    fn expression(&self, key: &str, flag: &Option<String>) -> Result<Option<String>, Failure> {
        Ok(self.string(key, flag))
    }

    fn required_expr(&self, key: &str, flag: &Option<String>) -> Result<String, Failure> {
        self.expression(key, flag)?
            .ok_or_else(|| Failure::validation(format!("missing required parameter: {key}")))
    }
}

fn split_pair(text: &str) -> Option<(f64, f64)> {
    let (lhs, rhs) = text.split_once(',')?;
    Some((lhs.trim().parse().ok()?, rhs.trim().parse().ok()?))
}

/// Parse the flat INI config: keys before any `[section]` apply to every
/// command; a `[name]` section applies to the command of that name.
fn load_config_section(path: &Path, command: &str) -> Result<HashMap<String, String>, Failure> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = HashMap::new();
    let mut active = true;
    for (lineno, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            active = name.trim() == command;
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::validation(format!(
                "config line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        if active {
            out.insert(key.trim().to_string(), value.trim().to_string());
        }
    }
    Ok(out)
}

fn parse_series(text: &str, base: f64) -> Result<FracSeries, Failure> {
    let ast = parse_expression(text).map_err(|e| Failure::validation(e.to_string()))?;
    Ok(ast.to_series(base)?)
}

fn series_to_json(s: &FracSeries) -> serde_json::Value {
    serde_json::to_value(s).expect("series serialization cannot fail")
}

fn emit_json(path: Option<&PathBuf>, value: &serde_json::Value) -> Result<(), Failure> {
    match path {
        Some(p) => Ok(write_json(p, value)?),
        None => {
            println!("{}", serde_json::to_string_pretty(value).unwrap());
            Ok(())
        }
    }
}

fn run(command: &Command) -> Result<(), Failure> {
    let cfg = Resolved::load(command)?;
    // accepted everywhere for reproducibility of randomized suites;
    // the deterministic commands have no randomness to seed
    let _seed = cfg.parse_key("seed", &cfg.flags.seed)?.unwrap_or(0u64);
    match command {
        Command::Oscillator(_) => run_oscillator(&cfg),
        Command::General(_) => run_general(&cfg),
        Command::Synthesize(_) => run_synthesize(&cfg),
        Command::Fracop(_) => run_fracop(&cfg),
        Command::Verify(_) => run_verify(&cfg),
    }
}

fn run_oscillator(cfg: &Resolved) -> Result<(), Failure> {
    let alpha = cfg.alpha()?;
    let interval = cfg.interval()?;
    let lambda = cfg.parse_key("lambda", &cfg.flags.lambda)?.unwrap_or(1.0);
    let a0 = cfg.parse_key("a0", &cfg.flags.a0)?.unwrap_or(1.0);
    let a1 = cfg.parse_key("a1", &cfg.flags.a1)?.unwrap_or(0.0);
    let order = cfg.parse_key("order", &cfg.flags.order)?.unwrap_or(30);
    let grid = cfg.parse_key("grid", &cfg.flags.grid)?.unwrap_or(101);
    if grid < 2 {
        return Err(Failure::validation("grid must have at least 2 points"));
    }

    let problem = OscillatorProblem::new(alpha, lambda, interval, a0, a1, order)?;
    let solution = solve(&problem)?;
    let residual = residual_check(&solution, &problem)?;
    if solution.truncation_warning {
        eprintln!(
            "{}",
            json!({"warning": "truncation: last retained term is not negligible at t=b"})
        );
    }

    let singular = solution
        .complex_series
        .min_exponent()
        .is_some_and(|p| p < 0.0);
    let a = interval.a;
    let span = interval.span();
    let mut rows = Vec::with_capacity(grid);
    for i in 0..grid {
        if i == 0 && singular {
            continue;
        }
        let t = a + span * (i as f64) / ((grid - 1) as f64);
        let x1 = solution.x1.evaluate(t)?.re;
        let x2 = solution.x2.evaluate(t)?.re;
        let r = residual.evaluate(t)?.norm();
        rows.push(vec![
            format_float(t),
            format_float(x1),
            format_float(x2),
            format_float(r),
        ]);
    }
    if let Some(out) = &cfg.flags.out {
        write_csv(out, &["t", "x1", "x2", "residual_abs"], &rows)?;
    }
    let report = json!({
        "x1": series_to_json(&solution.x1),
        "x2": series_to_json(&solution.x2),
        "truncation_warning": solution.truncation_warning,
    });
    if cfg.flags.report.is_some() || cfg.flags.out.is_none() {
        emit_json(cfg.flags.report.as_ref(), &report)?;
    }
    Ok(())
}

fn run_general(cfg: &Resolved) -> Result<(), Failure> {
    let alpha = cfg.alpha()?;
    let interval = cfg.interval()?;
    let g = parse_series(&cfg.required_expr("expr-g", &cfg.flags.expr_g)?, interval.a)?;
    let f = match cfg.expression("expr-f", &cfg.flags.expr_f)? {
        Some(text) => parse_series(&text, interval.a)?,
        None => FracSeries::zero(interval.a),
    };
    let c1 = cfg.complex("c1", &cfg.flags.c1)?;
    let c2 = cfg.complex("c2", &cfg.flags.c2)?;
    let max_iters = cfg.parse_key("order", &cfg.flags.order)?.unwrap_or(30);
    let guard = cfg.parse_key("guard", &cfg.flags.guard)?.unwrap_or(1e8);

    let problem = GeneralProblem::new(alpha, interval, g, f, c1, c2, max_iters, guard)?;
    let result = solve_general(&problem)?;
    let residual_terms = match verify_general(&result, &problem) {
        Ok(residual) => residual.len(),
        // residual support prediction when the formal check itself
        // leaves the carrier: one term per final-iterate term
        Err(_) => result.final_iterate.len(),
    };

    if let Some(out) = &cfg.flags.out {
        write_json(out, &series_to_json(&result.x))?;
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&series_to_json(&result.x)).unwrap()
        );
    }
    let diagnostics = json!({
        "iterations": result.iterations_used,
        "term_norms": result.term_norms,
        "converged": result.converged,
        "residual_terms": residual_terms,
        "halt": result.halt,
    });
    if let Some(report) = &cfg.flags.report {
        write_json(report, &diagnostics)?;
    }
    if result.halt == Halt::CarrierExit {
        return Err(Failure {
            code: EXIT_SOLVER,
            message: "iteration left the carrier; partial result emitted".into(),
        });
    }
    Ok(())
}

fn run_synthesize(cfg: &Resolved) -> Result<(), Failure> {
    let alpha = cfg.alpha()?;
    let interval = cfg.interval()?;
    let b_text = cfg.required_expr("expr-b", &cfg.flags.expr_b)?;
    let f_text = cfg.required_expr("expr-f", &cfg.flags.expr_f)?;
    let b = parse_expression(&b_text)
        .map_err(|e| Failure::validation(e.to_string()))?
        .to_coefficient_function(interval.a)?;
    let f = parse_expression(&f_text)
        .map_err(|e| Failure::validation(e.to_string()))?
        .to_coefficient_function(interval.a)?;

    let spec = lagrangian::synthesize(&b, &f, alpha)?;
    let coeffs_json = |c: &lagrangian::CoefficientFunction| {
        json!({ "coeffs": c.coeffs().iter().map(series_to_json).collect::<Vec<_>>() })
    };
    let body = json!({
        "h": coeffs_json(&spec.coupling),
        "G": coeffs_json(&spec.potential),
    });
    emit_json(cfg.flags.out.as_ref(), &body)
}

fn op_name(cfg: &Resolved) -> Result<String, Failure> {
    cfg.string("op", &cfg.flags.op)
        .ok_or_else(|| Failure::validation("missing required parameter: op"))
}

fn check_points(interval: Interval, grid: usize) -> Vec<f64> {
    (1..=grid)
        .map(|i| interval.a + interval.span() * (i as f64) / (grid as f64))
        .collect()
}

fn run_fracop(cfg: &Resolved) -> Result<(), Failure> {
    let alpha = cfg.alpha()?;
    let interval = cfg.interval()?;
    let series = parse_series(&cfg.required_expr("expr-f", &cfg.flags.expr_f)?, interval.a)?;
    let op = op_name(cfg)?;

    let image = match op.as_str() {
        "leftRL" => series.left_rl_derivative(alpha)?,
        "leftCaputo" => series.left_caputo_derivative(alpha)?,
        "rightRLFormal" => series.right_rl_derivative_formal(alpha)?,
        "integral" => series.fractional_integral(alpha)?,
        other => {
            return Err(Failure::validation(format!(
                "unknown op '{other}'; expected leftRL, leftCaputo, rightRLFormal or integral"
            )))
        }
    };
    emit_json(cfg.flags.out.as_ref(), &series_to_json(&image))?;

    let tol = cfg.parse_key("tol", &cfg.flags.tol)?;
    if let Some(tol) = tol {
        let scheme = match op.as_str() {
            "leftRL" => Scheme::Gl,
            "leftCaputo" => Scheme::L1,
            other => {
                return Err(Failure::validation(format!(
                    "oracle check supports leftRL and leftCaputo only, not '{other}'"
                )))
            }
        };
        let h = cfg
            .parse_key("oracle-h", &cfg.flags.oracle_h)?
            .unwrap_or(fraclag::oracle::DEFAULT_H);
        let grid = cfg.parse_key("grid", &cfg.flags.grid)?.unwrap_or(8);
        let points = check_points(interval, grid);
        let report = oracle_check_series(&series, alpha, &points, scheme, h, tol)?;
        let report_json = serde_json::to_value(&report).unwrap();
        emit_json(cfg.flags.report.as_ref(), &report_json)?;
        if !report.pass {
            return Err(Failure {
                code: EXIT_ORACLE,
                message: format!(
                    "oracle check failed: max abs_err {:e} max rel_err {:e} tol {tol}",
                    report.abs_err.iter().fold(0.0f64, |m, &e| m.max(e)),
                    report.rel_err.iter().fold(0.0f64, |m, &e| m.max(e)),
                ),
            });
        }
    }
    Ok(())
}

fn run_verify(cfg: &Resolved) -> Result<(), Failure> {
    let alpha = cfg.alpha()?;
    let interval = cfg.interval()?;
    let series = parse_series(&cfg.required_expr("expr-f", &cfg.flags.expr_f)?, interval.a)?;
    let op = cfg
        .string("op", &cfg.flags.op)
        .unwrap_or_else(|| "leftRL".to_string());
    let scheme = match op.as_str() {
        "leftRL" => Scheme::Gl,
        "leftCaputo" => Scheme::L1,
        other => {
            return Err(Failure::validation(format!(
                "verify supports leftRL and leftCaputo only, not '{other}'"
            )))
        }
    };
    let h = cfg
        .parse_key("oracle-h", &cfg.flags.oracle_h)?
        .unwrap_or(fraclag::oracle::DEFAULT_H);
    let tol = cfg
        .parse_key("tol", &cfg.flags.tol)?
        .unwrap_or(fraclag::oracle::DEFAULT_TOL);
    let grid = cfg.parse_key("grid", &cfg.flags.grid)?.unwrap_or(8);
    let points = check_points(interval, grid);

    let report = oracle_check_series(&series, alpha, &points, scheme, h, tol)?;
    let report_json = serde_json::to_value(&report).unwrap();
    emit_json(cfg.flags.report.as_ref(), &report_json)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_ORACLE,
            message: format!(
                "oracle check failed: max abs_err {:e} max rel_err {:e} tol {tol}",
                report.abs_err.iter().fold(0.0f64, |m, &e| m.max(e)),
                report.rel_err.iter().fold(0.0f64, |m, &e| m.max(e)),
            ),
        })
    }
}

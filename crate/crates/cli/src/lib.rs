//! Commands of the `piecert` binary: admissibility checks, PDE-to-PIE
//! conversion, Lyapunov stability tests, parameter sweeps and numerical
//! spectra.

mod sweep;

pub use sweep::{bisect, SweepEntry, SweepResult, SweepStatus};

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use piecert::conversion::{compute_bt, convert, format_pie, ConversionError, PieSystem};
use piecert::lpi::{
    assemble_lpi, prove_stability, ClarabelBackend, LpiError, LpiOptions, SdpBackend, SolveOutcome,
    VerificationReport,
};
use piecert::oracle::{pie_eigenvalues, NalgebraEigen, OracleError};
use piecert::pde_model::{parse_pde, PdeError, PdeSystem};
use piecert::polyalg::parse_expr;
use piecert::scalar::{format_rational, rational_from_f64, Rational};

/// Exit status when a stability proof was found or a model is admissible.
pub const EXIT_OK: i32 = 0;
/// Exit status when no proof was found.
pub const EXIT_NOT_PROVEN: i32 = 1;
/// Exit status for invalid input, inadmissible models and usage errors.
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Model { path: String, source: PdeError },
    #[error(transparent)]
    Conversion(#[from] ConversionError),
    #[error(transparent)]
    Lpi(#[from] LpiError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Usage(String),
}

/// Settings shared by all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub params: BTreeMap<String, Rational>,
    pub degree: usize,
    pub alpha: f64,
    pub delta: f64,
    pub backend: String,
    pub export_sdpa: Option<PathBuf>,
    pub timeout: Option<f64>,
    pub grid: usize,
    pub output: Option<PathBuf>,
    pub timings: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            params: BTreeMap::new(),
            degree: 2,
            alpha: 1e-4,
            delta: 1e-4,
            backend: "clarabel".into(),
            export_sdpa: None,
            timeout: None,
            grid: 200,
            output: None,
            timings: false,
        }
    }
}

impl Settings {
    fn lpi_options(&self) -> LpiOptions {
        LpiOptions::new(self.degree).with_margins(self.alpha, self.delta)
    }

    fn backend(&self) -> Result<Box<dyn SdpBackend>, CliError> {
        match self.backend.as_str() {
            "clarabel" => Ok(Box::new(ClarabelBackend::default())),
            other => Err(CliError::Usage(format!("unknown backend '{other}' (available: clarabel)"))),
        }
    }
}

/// Parses `name=value`, where the value is an exact decimal or fraction.
pub fn parse_assignment(s: &str) -> Result<(String, Rational), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(format!("missing parameter name in '{s}'"));
    }
    Ok((name.to_string(), parse_number(value)?))
}

/// An exact rational from a constant expression such as `9`, `-0.5`,
/// `1e-3` or `3/4`.
pub fn parse_number(s: &str) -> Result<Rational, String> {
    let e = parse_expr(s.trim()).map_err(|e| format!("'{s}': {e}"))?;
    if !e.variables().is_empty() {
        return Err(format!("'{s}' is not a number"));
    }
    let p = e.to_poly1().map_err(|e| format!("'{s}': {e}"))?;
    Ok(p.coeff(0))
}

/// Reads a model file. A name that is not an existing file but matches a
/// bundled model (such as `heat_dirichlet.pde`) loads the bundled copy.
pub fn read_model(path: &str) -> Result<String, CliError> {
    match std::fs::read_to_string(path) {
        Ok(src) => Ok(src),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let name = Path::new(path).file_name().and_then(|n| n.to_str()).unwrap_or(path);
            piecert::models::bundled(name)
                .map(str::to_string)
                .ok_or(CliError::Io { path: path.to_string(), source: e })
        }
        Err(e) => Err(CliError::Io { path: path.to_string(), source: e }),
    }
}

/// Parses a model and binds the parameters it declares.
pub fn load_model(path: &str, params: &BTreeMap<String, Rational>) -> Result<PdeSystem, CliError> {
    let src = read_model(path)?;
    let sys = parse_pde(&src).map_err(|source| CliError::Model { path: path.to_string(), source })?;
    let declared: BTreeMap<String, Rational> =
        params.iter().filter(|(k, _)| sys.params().contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
    if let Some(extra) = params.keys().find(|k| !sys.params().contains(k)) {
        return Err(CliError::Usage(format!("model has no parameter '{extra}'")));
    }
    if sys.params().is_empty() {
        return Ok(sys);
    }
    sys.bind_params(&declared).map_err(|source| CliError::Model { path: path.to_string(), source })
}

fn write_output(settings: &Settings, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match &settings.output {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "stdout".into(), source }),
    }
}

fn io(source: std::io::Error) -> CliError {
    CliError::Io { path: "stdout".into(), source }
}

/// `check`: prints `B_T`, its determinant and the verdict.
pub fn cmd_check(path: &str, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let sys = load_model(path, &settings.params)?;
    let report = compute_bt(&sys)?;
    writeln!(out, "B_T = {}", format_matrix(&report.bt.to_rows())).map_err(io)?;
    let det = format_rational(&report.determinant);
    if report.admissible {
        writeln!(out, "admissible, det(B_T)={det}").map_err(io)?;
        if report.ill_conditioned() {
            writeln!(out, "warning: B_T is ill-conditioned (condition estimate {:.3e})", report.condition_estimate)
                .map_err(io)?;
        }
        Ok(EXIT_OK)
    } else {
        writeln!(out, "inadmissible, det(B_T)={det}").map_err(io)?;
        Ok(EXIT_INVALID)
    }
}

fn format_matrix(rows: &[Vec<Rational>]) -> String {
    let rows: Vec<String> =
        rows.iter().map(|r| format!("[{}]", r.iter().map(format_rational).collect::<Vec<_>>().join(", "))).collect();
    format!("[{}]", rows.join(", "))
}

fn convert_model(path: &str, settings: &Settings) -> Result<PieSystem, CliError> {
    let sys = load_model(path, &settings.params)?;
    Ok(convert(&sys)?)
}

/// `convert`: writes the PIE in its text form.
pub fn cmd_convert(path: &str, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let pie = convert_model(path, settings)?;
    write_output(settings, &format_pie(&pie), out)?;
    Ok(EXIT_OK)
}

/// Result of one stability test, for reports and sweeps.
pub struct StabilityRun {
    pub outcome: SolveOutcome,
    pub solve_seconds: f64,
}

/// Converts, assembles, solves and verifies.
pub fn run_stability(pie: &PieSystem, settings: &Settings) -> Result<StabilityRun, CliError> {
    let opts = settings.lpi_options();
    if let Some(p) = &settings.export_sdpa {
        let problem = assemble_lpi(pie, &opts)?;
        std::fs::write(p, problem.sdp.to_sdpa())
            .map_err(|source| CliError::Io { path: p.display().to_string(), source })?;
    }
    let backend = settings.backend()?;
    let (outcome, solve_seconds) = prove_stability(pie, &opts, backend.as_ref(), settings.timeout)?;
    Ok(StabilityRun { outcome, solve_seconds })
}

/// `stability`: prints the status, settings and verification data.
pub fn cmd_stability(path: &str, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let pie = convert_model(path, settings)?;
    let run = run_stability(&pie, settings)?;
    let mut text = String::new();
    let params: Vec<String> = settings.params.iter().map(|(k, v)| format!("{k}={}", format_rational(v))).collect();
    text += &format!("model: {path}\n");
    if !params.is_empty() {
        text += &format!("parameters: {}\n", params.join(" "));
    }
    text += &format!("degree: {}\nalpha: {:e}\ndelta: {:e}\n", settings.degree, settings.alpha, settings.delta);
    text += &format!("status: {}\n", run.outcome.describe());
    match &run.outcome {
        SolveOutcome::Proven(cert, report) => {
            text += &report_lines(report);
            text += &format!("gram sizes: M_R {}, M_H {}\n", cert.m_r.nrows(), cert.m_h.nrows());
        }
        SolveOutcome::Rejected(report) => text += &report_lines(report),
        _ => {}
    }
    if settings.timings {
        text += &format!("solve seconds: {:.3}\n", run.solve_seconds);
    }
    write_output(settings, &text, out)?;
    Ok(if run.outcome.is_proven() { EXIT_OK } else { EXIT_NOT_PROVEN })
}

fn report_lines(r: &VerificationReport) -> String {
    let mut s = format!(
        "max residual: {:.3e} (relative {:.3e})\nmin eigenvalue M_R: {:.3e}\nmin eigenvalue M_H: {:.3e}\n",
        r.max_residual,
        r.max_residual / r.scale,
        r.min_eig_r,
        r.min_eig_h
    );
    if let Some(d) = &r.decay {
        s += &format!(
            "decay: ||x(t)||^2 <= {:.3e} ||x(0)||^2 exp(-{:.3e} t)  (||R|| <= {:.3e})\n",
            d.overshoot, d.rate, d.r_norm_bound
        );
        s += &format!(
            "note: ||T||^2 <= {:.3e}; a rate of the form delta*||T||^2 is not implied by this certificate\n",
            d.t_norm_sq_bound
        );
    }
    s
}

/// `spectrum`: the spectral abscissa and leading eigenvalues of the
/// collocated PIE as CSV.
pub fn cmd_spectrum(path: &str, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let pie = convert_model(path, settings)?;
    let ev = pie_eigenvalues(&pie, settings.grid, &NalgebraEigen)?;
    let first = ev.first().ok_or(OracleError::SingularPencil)?;
    let mut text = String::from("quantity,re,im\n");
    text += &format!("abscissa,{:.10e},0\n", first.re);
    for (k, z) in ev.iter().take(5).enumerate() {
        text += &format!("eig{},{:.10e},{:.10e}\n", k + 1, z.re, z.im);
    }
    write_output(settings, &text, out)?;
    Ok(EXIT_OK)
}

/// Spectral abscissa of the model at one parameter value.
pub fn oracle_abscissa(path: &str, settings: &Settings, param: &str, value: f64) -> Result<f64, CliError> {
    let mut params = settings.params.clone();
    params.insert(param.to_string(), rational_from_f64(value));
    let pie = convert(&load_model(path, &params)?)?;
    Ok(piecert::oracle::spectral_abscissa(&pie, settings.grid)?)
}

/// `sweep`: bisection on proven stability over `[lo, hi]`. The CSV log goes
/// to the output; the summary, including the parameter value where the
/// oracle spectrum crosses the imaginary axis, goes to `summary`.
pub fn cmd_sweep(
    path: &str,
    param: &str,
    lo: f64,
    hi: f64,
    tol: f64,
    settings: &Settings,
    out: &mut dyn Write,
    summary: &mut dyn Write,
) -> Result<i32, CliError> {
    let result = run_sweep(path, param, lo, hi, tol, settings)?;
    write_output(settings, &result.to_csv(settings.timings), out)?;
    let s = &mut *summary;
    let boundary = result.boundary.map_or("none".into(), |b| format!("{b}"));
    writeln!(s, "parameter: {param} in [{lo}, {hi}], tol {tol}, degree {}", settings.degree).map_err(io)?;
    writeln!(s, "certified boundary: {boundary}").map_err(io)?;
    match result.oracle_crossing {
        Some(c) => {
            writeln!(s, "oracle crossing: {c}").map_err(io)?;
            if let Some(b) = result.boundary {
                writeln!(s, "gap (oracle - certified): {}", c - b).map_err(io)?;
            }
        }
        None => writeln!(s, "oracle crossing: none in bracket").map_err(io)?,
    }
    Ok(EXIT_OK)
}

/// Runs the certified and the oracle bisections.
pub fn run_sweep(
    path: &str,
    param: &str,
    lo: f64,
    hi: f64,
    tol: f64,
    settings: &Settings,
) -> Result<SweepResult, CliError> {
    if !(lo < hi && tol > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Usage(format!("invalid bracket [{lo}, {hi}] or tolerance {tol}")));
    }
    let src_params = parse_pde(&read_model(path)?).map_err(|source| CliError::Model { path: path.into(), source })?;
    if !src_params.params().iter().any(|p| p == param) {
        return Err(CliError::Usage(format!("model has no parameter '{param}'")));
    }
    let evaluate = |value: f64| -> Result<(SweepStatus, f64), CliError> {
        let mut s = settings.clone();
        s.params.insert(param.to_string(), rational_from_f64(value));
        s.export_sdpa = None;
        let pie = convert_model(path, &s)?;
        let run = run_stability(&pie, &s)?;
        let status = if run.outcome.is_proven() { SweepStatus::ProvenStable } else { SweepStatus::NotProven };
        Ok((status, run.solve_seconds))
    };
    let log = bisect(lo, hi, tol, evaluate)?.ok_or_else(|| {
        CliError::Usage(format!("same status at {lo} and {hi}; choose a bracket where the status differs"))
    })?;
    let boundary = SweepResult::boundary_of(&log);
    let oracle = bisect(lo, hi, tol, |value| {
        let stable = oracle_abscissa(path, settings, param, value)? < 0.0;
        Ok::<_, CliError>((if stable { SweepStatus::ProvenStable } else { SweepStatus::NotProven }, 0.0))
    })?;
    let oracle_crossing = oracle.map(|l| {
        let stable = SweepResult::boundary_of(&l);
        let unstable = l.iter().filter(|e| e.status == SweepStatus::NotProven).map(|e| e.value);
        let nearest = unstable.min_by(|a, b| {
            let s = stable.unwrap_or(lo);
            (a - s).abs().total_cmp(&(b - s).abs())
        });
        match (stable, nearest) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => lo,
        }
    });
    Ok(SweepResult { param: param.to_string(), lo, hi, tol, log, boundary, oracle_crossing })
}

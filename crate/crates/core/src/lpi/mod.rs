//! Lyapunov stability test for a PIE `T x' = A x`.
//!
//! Exponential stability follows from operators `R >= alpha I` and `H` with
//!
//! ```text
//! -(T* R A + A* R T) = H >= delta T* T.
//! ```
//!
//! `R` and `H` are parameterized by positive semidefinite Gram matrices, the
//! identity is matched coefficient by coefficient, and the resulting
//! semidefinite program is handed to a backend. Any candidate the backend
//! returns is re-checked in exact arithmetic before it is reported.

mod assemble;
mod backend;
mod certificate;
mod param;
mod refine;
mod sdp;

#[cfg(test)]
mod tests;

pub use assemble::{assemble_lpi, coefficients, default_h_bases, describe_key, lyapunov_derivative, CoeffKey, LpiOptions, LpiProblem};
pub use backend::{BackendResult, BackendStatus, ClarabelBackend, SdpBackend};
pub use certificate::{
    verify_certificate, DecayBound, StabilityCertificate, VerificationReport, EIGENVALUE_TOLERANCE,
    RESIDUAL_TOLERANCE,
};
pub use param::{realize_positive, Basis, PositivePiParam};
pub use sdp::{SdpConstraint, SdpEntry, SdpProblem};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::conversion::PieSystem;
use crate::pi_ops::PiError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpiError {
    #[error("matrix size {found} does not match the parameterization ({expected})")]
    SizeMismatch { expected: usize, found: usize },
    #[error("Gram matrix is not symmetric")]
    NotSymmetric,
    #[error("alpha and delta must be positive and finite")]
    BadMargin,
    #[error("degree too small: {monomial} cannot be matched; increase the degree")]
    DegreeTooSmall { monomial: String },
    #[error("invalid SDP: {0}")]
    Sdp(String),
    #[error("SDPA line {line}: {message}")]
    Sdpa { line: usize, message: String },
    #[error(transparent)]
    Pi(#[from] PiError),
}

/// Result of one stability test.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    /// A certificate that passed verification.
    Proven(StabilityCertificate, VerificationReport),
    /// The backend reported the SDP infeasible.
    Infeasible,
    /// The backend gave up (time limit, numerical trouble).
    BackendFailure(String),
    /// The backend returned a candidate that failed verification.
    Rejected(VerificationReport),
}

impl SolveOutcome {
    pub fn is_proven(&self) -> bool {
        matches!(self, SolveOutcome::Proven(..))
    }

    /// One-line status. Failure to find a certificate is never phrased as
    /// instability.
    pub fn describe(&self) -> String {
        match self {
            SolveOutcome::Proven(..) => "proven stable".into(),
            SolveOutcome::Infeasible => "not proven (LPI infeasible at this degree)".into(),
            SolveOutcome::BackendFailure(m) => format!("not proven (backend: {m})"),
            SolveOutcome::Rejected(_) => "not proven (certificate failed verification)".into(),
        }
    }
}

/// Relative eigenvalue cutoffs tried when rounding a backend solution onto
/// a face of the semidefinite cone.
const FACE_THRESHOLDS: [f64; 5] = [0.0, 1e-9, 1e-8, 1e-7, 1e-6];

/// Relative eigenvalue below which a direction is dropped before re-solving.
const REDUCTION_THRESHOLD: f64 = 1e-6;

/// Backend calls per stability test: the first solve plus re-solves on
/// successively smaller faces.
const MAX_ROUNDS: usize = 3;

/// Exact verification of a candidate. The candidate is tried as returned,
/// then after moving it onto the equalities within faces of the cone.
fn check_candidate(
    problem: &LpiProblem,
    pie: &PieSystem,
    raw: &[DMatrix<f64>],
) -> Result<(StabilityCertificate, VerificationReport), LpiError> {
    let cert = StabilityCertificate::from_blocks(problem, raw)?;
    let report = verify_certificate(&cert, pie)?;
    if report.passed() {
        return Ok((cert, report));
    }
    let mut best = (cert, report);
    for tau in FACE_THRESHOLDS {
        let faces: Vec<DMatrix<f64>> = raw.iter().map(|m| refine::dominant_subspace(m, tau)).collect();
        let (projected, reduced) = refine::project_onto_constraints(&problem.sdp, raw, &faces);
        let psd = reduced.iter().all(|n| n.nrows() == 0 || n.clone().symmetric_eigen().eigenvalues.min() >= 0.0);
        if !psd {
            continue;
        }
        let cert = StabilityCertificate::from_blocks(problem, &projected)?;
        let report = verify_certificate(&cert, pie)?;
        if report.passed() {
            return Ok((cert, report));
        }
        best = (cert, report);
    }
    Ok(best)
}

/// Solves an assembled problem and verifies any candidate certificate.
///
/// When a candidate fails verification, the Gram matrices are restricted to
/// the span of its dominant eigenvectors and the smaller problem is solved
/// again.
pub fn solve(
    problem: &LpiProblem,
    pie: &PieSystem,
    backend: &dyn SdpBackend,
    timeout_seconds: Option<f64>,
) -> Result<(SolveOutcome, f64), LpiError> {
    let slack = problem.cone_slack;
    let mut faces: Vec<DMatrix<f64>> = problem.sdp.blocks.iter().map(|&n| DMatrix::identity(n, n)).collect();
    let mut seconds = 0.0;
    let mut outcome = None;
    for round in 0..MAX_ROUNDS {
        let remaining = timeout_seconds.map(|t| (t - seconds).max(0.0));
        if remaining == Some(0.0) {
            break;
        }
        let reduced = refine::drop_dependent_rows(&refine::restrict_to_faces(&problem.sdp, &faces), assemble::DEPENDENCE_TOLERANCE);
        let res = backend.solve(&refine::shift_problem(&reduced, -slack), remaining);
        seconds += res.solve_seconds;
        let (candidate, failure) = match res.status {
            BackendStatus::Infeasible if round == 0 => return Ok((SolveOutcome::Infeasible, seconds)),
            BackendStatus::Infeasible => break,
            BackendStatus::Failure { message, candidate } => (candidate, Some(message)),
            BackendStatus::Feasible(blocks) => (Some(blocks), None),
        };
        let Some(mut n) = candidate else {
            outcome.get_or_insert(SolveOutcome::BackendFailure(failure.unwrap_or_default()));
            break;
        };
        refine::add_ridge(&mut n, -slack);
        let (cert, report) = check_candidate(problem, pie, &refine::lift(&n, &faces))?;
        if report.passed() {
            return Ok((SolveOutcome::Proven(cert, report), seconds));
        }
        outcome.get_or_insert(match failure {
            Some(m) => SolveOutcome::BackendFailure(m),
            None => SolveOutcome::Rejected(report),
        });
        let next: Vec<DMatrix<f64>> =
            n.iter().zip(&faces).map(|(m, v)| v * refine::dominant_subspace(m, REDUCTION_THRESHOLD)).collect();
        if next.iter().zip(&faces).all(|(a, b)| a.ncols() == b.ncols()) || next.iter().any(|v| v.ncols() == 0) {
            break;
        }
        faces = next;
    }
    Ok((outcome.unwrap_or_else(|| SolveOutcome::BackendFailure("time limit".into())), seconds))
}

/// Assembles, solves, and verifies in one call.
///
/// Without an explicit `H` basis, each of [`default_h_bases`] is tried until
/// one yields a verified certificate. A proof from any of them is a proof;
/// when none succeeds, the outcome of the first is reported.
pub fn prove_stability(
    pie: &PieSystem,
    opts: &LpiOptions,
    backend: &dyn SdpBackend,
    timeout_seconds: Option<f64>,
) -> Result<(SolveOutcome, f64), LpiError> {
    if opts.h_basis.is_some() {
        let problem = assemble_lpi(pie, opts)?;
        return solve(&problem, pie, backend, timeout_seconds);
    }
    let mut seconds = 0.0;
    let mut first = None;
    let mut tried: Vec<Basis> = Vec::new();
    for start in default_h_bases(opts.degree) {
        let remaining = timeout_seconds.map(|t| (t - seconds).max(0.0));
        if remaining == Some(0.0) {
            break;
        }
        let problem = assemble::assemble_with_h(pie, opts, start, true)?;
        if tried.contains(&problem.h_param.basis) {
            continue;
        }
        tried.push(problem.h_param.basis);
        let (outcome, s) = solve(&problem, pie, backend, remaining)?;
        seconds += s;
        if outcome.is_proven() {
            return Ok((outcome, seconds));
        }
        first.get_or_insert(outcome);
    }
    Ok((first.unwrap_or_else(|| SolveOutcome::BackendFailure("time limit".into())), seconds))
}

//! Stability certificates and their backend-independent verification.

use nalgebra::DMatrix;

use crate::conversion::PieSystem;
use crate::pi_ops::RatOperator;
use crate::scalar::{rational_from_f64, Rational};

use super::assemble::{lyapunov_derivative, LpiProblem};
use super::param::{realize_positive, PositivePiParam};
use super::LpiError;

/// Relative bound on the largest kernel-coefficient mismatch.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
/// Smallest admissible eigenvalue of a Gram matrix.
pub const EIGENVALUE_TOLERANCE: f64 = -1e-8;

/// `M_R`, `M_H` and the margins they were computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub degree: usize,
    pub alpha: f64,
    pub delta: f64,
    pub r_param: PositivePiParam,
    pub h_param: PositivePiParam,
    pub m_r: DMatrix<f64>,
    pub m_h: DMatrix<f64>,
}

impl StabilityCertificate {
    pub fn from_blocks(problem: &LpiProblem, blocks: &[DMatrix<f64>]) -> Result<Self, LpiError> {
        let sizes = [problem.r_param.block_size(), problem.h_param.block_size()];
        if blocks.len() != 2 || blocks[0].nrows() != sizes[0] || blocks[1].nrows() != sizes[1] {
            return Err(LpiError::SizeMismatch { expected: sizes[0], found: blocks.first().map_or(0, |b| b.nrows()) });
        }
        Ok(Self {
            degree: problem.degree,
            alpha: problem.alpha,
            delta: problem.delta,
            r_param: problem.r_param.clone(),
            h_param: problem.h_param.clone(),
            m_r: symmetric_part(&blocks[0]),
            m_h: symmetric_part(&blocks[1]),
        })
    }

    /// The Lyapunov operator `R = Zop* M_R Zop + alpha I`.
    pub fn lyapunov_operator(&self) -> Result<RatOperator, LpiError> {
        realize_positive(&self.r_param, &exact(&self.m_r), &rational_from_f64(self.alpha))
    }
}

/// Exponential decay implied by a verified certificate:
/// `||x(t)||^2 <= overshoot * ||x(0)||^2 * exp(-rate * t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayBound {
    /// Upper bound `k` on the operator norm of `R`.
    pub r_norm_bound: f64,
    /// `k / alpha`.
    pub overshoot: f64,
    /// `delta / k`.
    pub rate: f64,
    /// Upper bound on `||T||^2`. A decay exponent of the form
    /// `delta * ||T||^2` does not follow from the Lyapunov argument, which
    /// needs a lower bound on `T`; this value is reported for comparison only.
    pub t_norm_sq_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// Largest coefficient of `-(T* R A + A* R T) - H`.
    pub max_residual: f64,
    /// Largest coefficient of the two sides, used to scale the tolerance.
    pub scale: f64,
    pub min_eig_r: f64,
    pub min_eig_h: f64,
    pub decay: Option<DecayBound>,
}

impl VerificationReport {
    pub fn residual_ok(&self) -> bool {
        self.max_residual < RESIDUAL_TOLERANCE * self.scale
    }

    pub fn eigenvalues_ok(&self) -> bool {
        self.min_eig_r > EIGENVALUE_TOLERANCE && self.min_eig_h > EIGENVALUE_TOLERANCE
    }

    pub fn passed(&self) -> bool {
        self.residual_ok() && self.eigenvalues_ok()
    }
}

fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn exact(m: &DMatrix<f64>) -> Vec<Vec<Rational>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| rational_from_f64(m[(i, j)])).collect()).collect()
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    symmetric_part(m).symmetric_eigen().eigenvalues.min()
}

/// Re-realizes `R` and `H` from the certificate in exact arithmetic and
/// measures how well the operator identity and the positivity hold.
pub fn verify_certificate(cert: &StabilityCertificate, pie: &PieSystem) -> Result<VerificationReport, LpiError> {
    let n = pie.t.out_dim();
    if cert.r_param.dim != n || cert.h_param.dim != n {
        return Err(LpiError::SizeMismatch { expected: n, found: cert.r_param.dim });
    }
    for (m, p) in [(&cert.m_r, &cert.r_param), (&cert.m_h, &cert.h_param)] {
        if m.nrows() != p.block_size() || m.ncols() != p.block_size() {
            return Err(LpiError::SizeMismatch { expected: p.block_size(), found: m.nrows() });
        }
    }
    let min_eig_r = min_eigenvalue(&cert.m_r);
    let min_eig_h = min_eigenvalue(&cert.m_h);
    if !(cert.alpha > 0.0 && cert.delta > 0.0) || !min_eig_r.is_finite() || !min_eig_h.is_finite() {
        return Ok(VerificationReport {
            max_residual: f64::INFINITY,
            scale: 1.0,
            min_eig_r,
            min_eig_h,
            decay: None,
        });
    }

    let r = cert.lyapunov_operator()?;
    let lhs = lyapunov_derivative(pie, &r)?;
    let tt = pie.t.adjoint().compose(&pie.t)?;
    let h = realize_positive(&cert.h_param, &exact(&cert.m_h), &Rational::from_integer(0.into()))?
        .add(&tt.scale(&rational_from_f64(cert.delta)))?;
    let residual = lhs.sub(&h)?;
    let max_residual = residual.max_abs_coeff();
    let scale = lhs.max_abs_coeff().max(h.max_abs_coeff()).max(f64::MIN_POSITIVE);

    let mut report = VerificationReport { max_residual, scale, min_eig_r, min_eig_h, decay: None };
    if report.passed() {
        let k = r.map_coeffs(crate::scalar::Coeff::to_f64).norm_upper_bound().max(cert.alpha);
        let t_norm = pie.t.map_coeffs(crate::scalar::Coeff::to_f64).norm_upper_bound();
        report.decay = Some(DecayBound {
            r_norm_bound: k,
            overshoot: k / cert.alpha,
            rate: cert.delta / k,
            t_norm_sq_bound: t_norm * t_norm,
        });
    }
    Ok(report)
}

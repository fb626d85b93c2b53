//! Independent numerical cross-checks: adaptive quadrature of operator
//! actions, trapezoid collocation of PIEs, finite differences for the PDE,
//! generalized spectra and implicit time stepping.

pub mod discretize;
pub mod eig;
pub mod fd;
pub mod quad;

pub use discretize::{
    discretize_pi, pie_eigenvalues, simulate, spectral_abscissa, uniform_grid, DiscretizedPair,
};
pub use eig::{pencil_eigenvalues, EigenBackend, NalgebraEigen};
pub use fd::{discretize_pde, pde_eigenvalues, pde_spectrum};

use nalgebra::DVector;
use thiserror::Error;

use crate::pde_model::PdeError;
use crate::pi_ops::PiOperator;
use crate::scalar::Coeff;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("grid of {0} points is too small (need at least 8)")]
    GridTooSmall(usize),
    #[error("the discretized pencil is singular; try a larger grid or check admissibility")]
    SingularPencil,
    #[error("boundary conditions cannot be solved for the boundary unknowns")]
    BoundaryRank,
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Pde(#[from] PdeError),
}

/// `(P v)(s)` by adaptive quadrature of the defining integrals, for any
/// vector-valued function `v`.
pub fn apply_quadrature<C: Coeff>(
    op: &PiOperator<C>,
    v: &dyn Fn(f64) -> DVector<f64>,
    s: f64,
    tol: f64,
) -> DVector<f64> {
    let (a, b) = (op.a().to_f64(), op.b().to_f64());
    let mut out = op.r0().eval_f64(s) * v(s);
    for i in 0..op.out_dim() {
        let row = |k: &crate::polyalg::PolyMat2<C>, th: f64| -> f64 {
            let vt = v(th);
            (0..op.in_dim()).map(|j| k.get(i, j).eval_f64(s, th) * vt[j]).sum()
        };
        out[i] += quad::integrate(|th| row(op.r1(), th), a, s, tol);
        out[i] += quad::integrate(|th| row(op.r2(), th), s, b, tol);
    }
    out
}

#[cfg(test)]
mod tests;

//! Trapezoid collocation of PI operators and of the PIE `T x' = A x`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::conversion::PieSystem;
use crate::pi_ops::PiOperator;
use crate::scalar::{rational_to_f64, Coeff};

use super::eig::{pencil_eigenvalues, EigenBackend, NalgebraEigen};
use super::OracleError;

/// `n` uniform points on `[a, b]`, endpoints included.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { b } else { a + i as f64 * h }).collect()
}

/// Composite trapezoid weights for `grid[lo..=hi]`, indexed from `lo`.
pub(super) fn trapezoid(grid: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let mut w = vec![0.0; hi + 1 - lo];
    for k in lo..hi {
        let half = 0.5 * (grid[k + 1] - grid[k]);
        w[k - lo] += half;
        w[k + 1 - lo] += half;
    }
    w
}

/// Trapezoid weights over the whole grid.
pub fn full_weights(grid: &[f64]) -> Vec<f64> {
    trapezoid(grid, 0, grid.len() - 1)
}

/// Collocation matrix of `P` on an `n`-point uniform grid. Unknowns are
/// ordered component-major: entry `j * n + k` is component `j` at node `k`.
pub fn discretize_pi<C: Coeff>(op: &PiOperator<C>, n: usize) -> Result<DMatrix<f64>, OracleError> {
    if n < 8 {
        return Err(OracleError::GridTooSmall(n));
    }
    let (a, b) = (op.a().to_f64(), op.b().to_f64());
    let grid = uniform_grid(a, b, n);
    let (p, q) = op.shape();
    let mut m = DMatrix::zeros(p * n, q * n);
    for (i, &s) in grid.iter().enumerate() {
        let r0 = op.r0().eval_f64(s);
        let lower = trapezoid(&grid, 0, i);
        let upper = trapezoid(&grid, i, n - 1);
        for (k, &th) in grid.iter().enumerate() {
            let w1 = if k <= i { lower[k] } else { 0.0 };
            let w2 = if k >= i { upper[k - i] } else { 0.0 };
            if w1 == 0.0 && w2 == 0.0 && k != i {
                continue;
            }
            for r in 0..p {
                for c in 0..q {
                    let mut v = 0.0;
                    if w1 != 0.0 {
                        v += w1 * op.r1().get(r, c).eval_f64(s, th);
                    }
                    if w2 != 0.0 {
                        v += w2 * op.r2().get(r, c).eval_f64(s, th);
                    }
                    if k == i {
                        v += r0[(r, c)];
                    }
                    m[(r * n + i, c * n + k)] += v;
                }
            }
        }
    }
    Ok(m)
}

/// Collocated `T` and `A` of a PIE on a shared grid.
#[derive(Debug, Clone)]
pub struct DiscretizedPair {
    pub grid: Vec<f64>,
    pub td: DMatrix<f64>,
    pub ad: DMatrix<f64>,
    pub n_x: usize,
}

impl DiscretizedPair {
    pub fn new(pie: &PieSystem, n: usize) -> Result<Self, OracleError> {
        let t = pie.t.map_coeffs(rational_to_f64);
        let a = pie.a.map_coeffs(rational_to_f64);
        Ok(Self {
            grid: uniform_grid(t.a().to_f64(), t.b().to_f64(), n),
            td: discretize_pi(&t, n)?,
            ad: discretize_pi(&a, n)?,
            n_x: pie.partition.n_x(),
        })
    }

    /// Trapezoid L2 norm of a component-major sample vector.
    pub fn l2_norm(&self, v: &DVector<f64>) -> f64 {
        let w = full_weights(&self.grid);
        let n = self.grid.len();
        (0..self.n_x)
            .map(|j| (0..n).map(|k| w[k] * v[j * n + k].powi(2)).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Finite generalized eigenvalues of the collocated PIE, by decreasing real
/// part.
pub fn pie_eigenvalues(
    pie: &PieSystem,
    n: usize,
    backend: &dyn EigenBackend,
) -> Result<Vec<Complex<f64>>, OracleError> {
    let pair = DiscretizedPair::new(pie, n)?;
    pencil_eigenvalues(&pair.td, &pair.ad, backend)
}

/// Largest real part of the collocated PIE spectrum.
pub fn spectral_abscissa(pie: &PieSystem, n: usize) -> Result<f64, OracleError> {
    let ev = pie_eigenvalues(pie, n, &NalgebraEigen)?;
    ev.first().map(|z| z.re).ok_or(OracleError::SingularPencil)
}

/// Backward Euler on `Td x' = Ad x` from the fundamental-state samples `x0`;
/// returns the L2 norm at each step, starting with the initial state.
pub fn simulate(
    pair: &DiscretizedPair,
    x0: &DVector<f64>,
    dt: f64,
    t_end: f64,
) -> Result<Vec<f64>, OracleError> {
    if dt <= 0.0 {
        return Err(OracleError::BadStep(dt));
    }
    let lu = (&pair.td - &pair.ad * dt).lu();
    let steps = (t_end / dt).round() as usize;
    let mut x = x0.clone();
    let mut norms = vec![pair.l2_norm(&x)];
    for _ in 0..steps {
        let rhs = &pair.td * &x;
        x = lu.solve(&rhs).ok_or(OracleError::SingularPencil)?;
        norms.push(pair.l2_norm(&x));
    }
    Ok(norms)
}

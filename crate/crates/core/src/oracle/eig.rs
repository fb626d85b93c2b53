//! Dense eigenvalue computations behind a small backend trait.

use nalgebra::{Complex, DMatrix};

use super::OracleError;

/// Eigenvalues of a dense real square matrix.
pub trait EigenBackend {
    fn eigenvalues(&self, m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, OracleError>;
}

/// Real Schur decomposition from nalgebra, preceded by the permutation step
/// of standard balancing: eigenvalues whose row or column is otherwise zero
/// are read off the diagonal before the iterative part runs. Triangular and
/// block-triangular matrices therefore keep their exact diagonal
/// eigenvalues, which matters for defective spectra.
#[derive(Debug, Clone, Copy, Default)]
pub struct NalgebraEigen;

impl EigenBackend for NalgebraEigen {
    fn eigenvalues(&self, m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, OracleError> {
        let (isolated, core) = isolate(m);
        let mut out: Vec<Complex<f64>> = isolated.into_iter().map(|v| Complex::new(v, 0.0)).collect();
        if core.nrows() > 0 {
            let schur = core.try_schur(1e-14, 10_000).ok_or(OracleError::EigenFailure)?;
            out.extend(schur.complex_eigenvalues().iter().copied());
        }
        Ok(out)
    }
}

/// Repeatedly removes an index whose row, or column, has no nonzero
/// off-diagonal entry within the remaining indices. Returns the removed
/// diagonal entries and the remaining principal submatrix.
fn isolate(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let mut active: Vec<usize> = (0..m.nrows()).collect();
    let mut isolated = Vec::new();
    loop {
        let lone = active.iter().position(|&i| {
            active.iter().all(|&j| j == i || m[(i, j)] == 0.0)
                || active.iter().all(|&j| j == i || m[(j, i)] == 0.0)
        });
        match lone {
            Some(k) => isolated.push(m[(active[k], active[k])]),
            None => break,
        }
        active.remove(lone.unwrap_or(0));
    }
    let core = DMatrix::from_fn(active.len(), active.len(), |i, j| m[(active[i], active[j])]);
    (isolated, core)
}

const SHIFTS: [f64; 4] = [0.618_033_988_7, -1.414_213_562, 3.141_592_653_6, -7.389_056_099];

/// Finite eigenvalues `mu` of the pencil `mass * x' = stiff * x`, that is
/// `stiff v = mu mass v`, sorted by decreasing real part.
///
/// Uses `nu` = eigenvalues of `(stiff - sigma mass)^{-1} mass` and
/// `mu = sigma + 1 / nu`, so a singular `mass` is allowed; its null space
/// shows up as `nu = 0` and is discarded.
pub fn pencil_eigenvalues(
    mass: &DMatrix<f64>,
    stiff: &DMatrix<f64>,
    backend: &dyn EigenBackend,
) -> Result<Vec<Complex<f64>>, OracleError> {
    let scale = stiff.amax().max(mass.amax()).max(1.0);
    for sigma in SHIFTS {
        let shifted = stiff - mass * sigma;
        let lu = shifted.clone().lu();
        let Some(inv_mass) = lu.solve(mass) else { continue };
        let growth = inv_mass.amax() * scale;
        if !growth.is_finite() || growth > 1e13 {
            continue;
        }
        let nus = backend.eigenvalues(&inv_mass)?;
        let top = nus.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut out: Vec<Complex<f64>> = nus
            .into_iter()
            .filter(|z| z.norm() > 1e-10 * top)
            .map(|z| Complex::new(sigma, 0.0) + z.inv())
            .collect();
        sort_by_real_part(&mut out);
        return Ok(out);
    }
    Err(OracleError::SingularPencil)
}

/// Decreasing real part; conjugate pairs ordered with positive imaginary
/// part first.
pub fn sort_by_real_part(v: &mut [Complex<f64>]) {
    v.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencil_with_singular_mass() {
        // mass = diag(1, 0), stiff = diag(-2, 1): one finite eigenvalue -2
        let mass = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let stiff = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 1.0]);
        let ev = pencil_eigenvalues(&mass, &stiff, &NalgebraEigen).unwrap();
        assert_eq!(ev.len(), 1);
        assert!((ev[0].re + 2.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_spectrum() {
        let mass = DMatrix::identity(2, 2);
        let stiff = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
        let ev = pencil_eigenvalues(&mass, &stiff, &NalgebraEigen).unwrap();
        assert!((ev[0] - Complex::new(-1.0, 2.0)).norm() < 1e-12);
        assert!((ev[1] - Complex::new(-1.0, -2.0)).norm() < 1e-12);
    }

    #[test]
    fn jordan_block_is_exact() {
        let n = 150;
        let j = DMatrix::from_fn(n, n, |i, k| match i as i64 - k as i64 {
            0 => -3.0,
            1 => 1.0,
            _ => 0.0,
        });
        let ev = NalgebraEigen.eigenvalues(&j).unwrap();
        assert_eq!(ev.len(), n);
        assert!(ev.iter().all(|z| *z == Complex::new(-3.0, 0.0)));
    }
}

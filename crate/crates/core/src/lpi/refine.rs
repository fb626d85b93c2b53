//! Post-processing of backend solutions.
//!
//! The backend is asked for `X = X' - slack I` with `X'` positive
//! semidefinite. Candidates that miss the equalities can be moved onto the
//! affine constraint set by a minimum-norm correction, optionally within a
//! face of the cone, and problems can be restricted to such a face.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};

use super::sdp::{SdpConstraint, SdpEntry, SdpProblem};

/// The problem whose solutions `X'` give solutions `X' + eps I` of `p`.
pub fn shift_problem(p: &SdpProblem, eps: f64) -> SdpProblem {
    let constraints = p
        .constraints
        .iter()
        .map(|c| {
            let trace: f64 = c.entries.iter().filter(|e| e.i == e.j).map(|e| e.value).sum();
            SdpConstraint { entries: c.entries.clone(), rhs: c.rhs - eps * trace }
        })
        .collect();
    SdpProblem { blocks: p.blocks.clone(), constraints }
}

pub fn add_ridge(blocks: &mut [DMatrix<f64>], eps: f64) {
    for b in blocks {
        for i in 0..b.nrows() {
            b[(i, i)] += eps;
        }
    }
}

/// Orthonormal columns spanning the eigenvectors of `m` whose eigenvalues
/// exceed `tau` times the largest one.
pub fn dominant_subspace(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let eig = ((m + m.transpose()) * 0.5).symmetric_eigen();
    let top = eig.eigenvalues.max().max(0.0);
    let keep: Vec<usize> = (0..m.nrows()).filter(|&k| eig.eigenvalues[k] > tau * top).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

/// Minimum-norm corrections onto the equalities of `p` within the faces
/// `X_b = V_b N_b V_b^T`.
struct AffineProjector {
    ranks: Vec<usize>,
    offsets: Vec<usize>,
    faces: Vec<DMatrix<f64>>,
    a: DMatrix<f64>,
    gram: Option<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl AffineProjector {
    fn new(p: &SdpProblem, faces: &[DMatrix<f64>]) -> Self {
        let ranks: Vec<usize> = faces.iter().map(|v| v.ncols()).collect();
        let mut offsets = Vec::with_capacity(ranks.len());
        let mut len = 0;
        for &r in &ranks {
            offsets.push(len);
            len += r * (r + 1) / 2;
        }
        let m = p.constraints.len();
        let mut a = DMatrix::<f64>::zeros(m, len);
        let mut this = Self { ranks, offsets, faces: faces.to_vec(), a: DMatrix::zeros(0, 0), gram: None };
        for (k, c) in p.constraints.iter().enumerate() {
            let mut dense: Vec<DMatrix<f64>> = p.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
            for e in &c.entries {
                dense[e.block][(e.i, e.j)] = e.value;
                dense[e.block][(e.j, e.i)] = e.value;
            }
            for (b, v) in faces.iter().enumerate() {
                let f = v.transpose() * &dense[b] * v;
                for j in 0..this.ranks[b] {
                    for i in 0..=j {
                        a[(k, this.index(b, i, j))] = if i == j { f[(i, i)] } else { SQRT_2 * f[(i, j)] };
                    }
                }
            }
        }
        if m > 0 && len > 0 {
            this.gram = Some((&a * a.transpose()).svd(true, true));
        }
        this.a = a;
        this
    }

    fn index(&self, b: usize, i: usize, j: usize) -> usize {
        self.offsets[b] + j * (j + 1) / 2 + i
    }

    fn reduce(&self, blocks: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        blocks.iter().zip(&self.faces).map(|(x, v)| v.transpose() * x * v).collect()
    }

    /// Corrects reduced matrices in place, twice to clean up rounding.
    fn correct(&self, p: &SdpProblem, reduced: &mut [DMatrix<f64>]) {
        let Some(svd) = &self.gram else { return };
        let cutoff = svd.singular_values.max() * 1e-13;
        for _ in 0..2 {
            let x = lift(reduced, &self.faces);
            let r = DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|c| c.rhs - c.evaluate(&x)));
            let Ok(y) = svd.solve(&r, cutoff) else { return };
            let dx = self.a.transpose() * y;
            for (b, n) in reduced.iter_mut().enumerate() {
                for j in 0..self.ranks[b] {
                    for i in 0..=j {
                        let v = dx[self.index(b, i, j)];
                        if i == j {
                            n[(i, i)] += v;
                        } else {
                            n[(i, j)] += v / SQRT_2;
                            n[(j, i)] += v / SQRT_2;
                        }
                    }
                }
            }
        }
    }
}

/// Minimum Frobenius-norm change of the blocks that satisfies the
/// equalities while staying in the faces `X_b = V_b N_b V_b^T`. Returns the
/// new blocks and the reduced matrices `N_b`.
pub fn project_onto_constraints(
    p: &SdpProblem,
    blocks: &[DMatrix<f64>],
    faces: &[DMatrix<f64>],
) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let proj = AffineProjector::new(p, faces);
    let mut reduced = proj.reduce(blocks);
    proj.correct(p, &mut reduced);
    (lift(&reduced, faces), reduced)
}

/// The problem in the variables `N_b` with `X_b = V_b N_b V_b^T`.
pub fn restrict_to_faces(p: &SdpProblem, faces: &[DMatrix<f64>]) -> SdpProblem {
    let constraints = p
        .constraints
        .iter()
        .map(|c| {
            let mut dense: Vec<DMatrix<f64>> = p.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
            for e in &c.entries {
                dense[e.block][(e.i, e.j)] = e.value;
                dense[e.block][(e.j, e.i)] = e.value;
            }
            let mut entries = Vec::new();
            for (b, v) in faces.iter().enumerate() {
                let f = v.transpose() * &dense[b] * v;
                for j in 0..v.ncols() {
                    for i in 0..=j {
                        if f[(i, j)].abs() > 1e-15 {
                            entries.push(SdpEntry { block: b, i, j, value: f[(i, j)] });
                        }
                    }
                }
            }
            SdpConstraint::new(entries, c.rhs)
        })
        .collect();
    SdpProblem { blocks: faces.iter().map(|v| v.ncols()).collect(), constraints }
}

pub fn lift(reduced: &[DMatrix<f64>], faces: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    reduced.iter().zip(faces).map(|(n, v)| v * n * v.transpose()).collect()
}

/// Drops equalities that are linear combinations of earlier ones, judged on
/// unit-normalized rows with relative tolerance `tol`.
pub fn drop_dependent_rows(p: &SdpProblem, tol: f64) -> SdpProblem {
    let offsets: Vec<usize> = p
        .blocks
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n * (n + 1) / 2;
            Some(o)
        })
        .collect();
    let nvar: usize = p.blocks.iter().map(|n| n * (n + 1) / 2).sum();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for c in &p.constraints {
        let mut v = DVector::zeros(nvar);
        for e in &c.entries {
            let w = if e.i == e.j { e.value } else { std::f64::consts::SQRT_2 * e.value };
            v[offsets[e.block] + e.j * (e.j + 1) / 2 + e.i] = w;
        }
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        v /= norm;
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let r = v.norm();
        if r > tol {
            basis.push(v / r);
            kept.push(c.clone());
        }
    }
    SdpProblem { blocks: p.blocks.clone(), constraints: kept }
}



//! Pluggable SDP solvers.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;

use super::sdp::{SdpConstraint, SdpProblem};

/// What a backend found.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendStatus {
    /// Candidate block values; still subject to independent verification.
    Feasible(Vec<DMatrix<f64>>),
    /// The solver produced an infeasibility certificate.
    Infeasible,
    /// Time limit, iteration limit, or numerical trouble. The last iterate
    /// is kept when available since it may still pass verification.
    Failure { message: String, candidate: Option<Vec<DMatrix<f64>>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendResult {
    pub status: BackendStatus,
    pub solve_seconds: f64,
}

/// A semidefinite feasibility solver.
pub trait SdpBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &SdpProblem, timeout_seconds: Option<f64>) -> BackendResult;
}

/// Interior-point solver from the `clarabel` crate.
#[derive(Debug, Clone, Default)]
pub struct ClarabelBackend {
    pub verbose: bool,
}

/// Position of `(i, j)`, `i <= j`, in the column-major upper triangle.
fn svec_index(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

impl SdpBackend for ClarabelBackend {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve(&self, problem: &SdpProblem, timeout_seconds: Option<f64>) -> BackendResult {
        let start = Instant::now();
        let status = self.run(problem, timeout_seconds);
        BackendResult { status, solve_seconds: start.elapsed().as_secs_f64() }
    }
}

fn svec_offsets(blocks: &[usize]) -> Vec<usize> {
    blocks
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n * (n + 1) / 2;
            Some(o)
        })
        .collect()
}

/// Symmetric blocks from a concatenation of scaled upper triangles.
fn unpack_blocks(blocks: &[usize], offsets: &[usize], s: &[f64]) -> Vec<DMatrix<f64>> {
    blocks
        .iter()
        .zip(offsets)
        .map(|(&n, &o)| {
            DMatrix::from_fn(n, n, |i, j| {
                let (i, j) = (i.min(j), i.max(j));
                let v = s[o + svec_index(i, j)];
                if i == j {
                    v
                } else {
                    v / std::f64::consts::SQRT_2
                }
            })
        })
        .collect()
}

impl ClarabelBackend {
    fn settings(&self, timeout_seconds: Option<f64>) -> Result<DefaultSettings<f64>, String> {
        DefaultSettingsBuilder::default()
            .verbose(self.verbose)
            .time_limit(timeout_seconds.unwrap_or(f64::INFINITY))
            .max_iter(400)
            .max_threads(1)
            .direct_solve_method("faer".into())
            .build()
            .map_err(|e| e.to_string())
    }

    fn run(&self, problem: &SdpProblem, timeout_seconds: Option<f64>) -> BackendStatus {
        let sqrt2 = std::f64::consts::SQRT_2;
        let offsets = svec_offsets(&problem.blocks);
        let nvar: usize = problem.blocks.iter().map(|n| n * (n + 1) / 2).sum();
        // Rows that lost every entry are either trivially satisfied or
        // certify infeasibility on their own.
        let scale = problem.constraints.iter().map(|c| row_norm(c)).fold(0.0, f64::max);
        let mut rows = Vec::with_capacity(problem.constraints.len());
        for c in &problem.constraints {
            if row_norm(c) > 1e-12 * scale {
                rows.push(c);
            } else if c.rhs.abs() > 1e-12 * scale.max(1.0) {
                return BackendStatus::Infeasible;
            }
        }
        let m = rows.len();

        // Rows 0..m: equalities. Rows m..: -x + s = 0 with s in the PSD cones.
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut b = vec![0.0; m + nvar];
        // The problem is homogeneous in (X, c), so the right side is scaled
        // to unit size and the solution scaled back.
        let c_scale = rows.iter().map(|c| (c.rhs / row_norm(c)).abs()).fold(0.0, f64::max);
        let c_scale = if c_scale > 0.0 { c_scale } else { 1.0 };
        for (k, c) in rows.iter().enumerate() {
            // Unit row scaling keeps the solver's internal equilibration mild.
            let norm = row_norm(c);
            for e in &c.entries {
                let col = offsets[e.block] + svec_index(e.i, e.j);
                let v = if e.i == e.j { e.value } else { sqrt2 * e.value };
                triplets.push((k, col, v / norm));
            }
            b[k] = c.rhs / norm / c_scale;
        }
        for v in 0..nvar {
            triplets.push((m + v, v, -1.0));
        }
        let a = csc_from_triplets(m + nvar, nvar, triplets);
        let p = CscMatrix::zeros((nvar, nvar));
        let q = vec![0.0; nvar];
        let mut cones = vec![SupportedConeT::ZeroConeT(m)];
        cones.extend(problem.blocks.iter().map(|&n| SupportedConeT::PSDTriangleConeT(n)));

        let settings = match self.settings(timeout_seconds) {
            Ok(s) => s,
            Err(e) => return BackendStatus::Failure { message: format!("settings: {e}"), candidate: None },
        };
        let mut solver = match DefaultSolver::new(&p, &q, &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(e) => return BackendStatus::Failure { message: format!("setup: {e}"), candidate: None },
        };
        solver.solve();
        let s: Vec<f64> = solver.solution.s[m..].iter().map(|v| v * c_scale).collect();
        let s = &s[..];
        let blocks = || unpack_blocks(&problem.blocks, &offsets, s);
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => BackendStatus::Feasible(blocks()),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => BackendStatus::Infeasible,
            other => {
                let finite = s.iter().all(|v| v.is_finite());
                BackendStatus::Failure { message: format!("{other:?}"), candidate: finite.then(blocks) }
            }
        }
    }
}

fn row_norm(c: &SdpConstraint) -> f64 {
    c.entries.iter().map(|e| e.value * e.value).sum::<f64>().sqrt()
}

fn csc_from_triplets(m: usize, n: usize, mut t: Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    t.sort_by_key(|&(r, c, _)| (c, r));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(t.len());
    let mut nzval = Vec::with_capacity(t.len());
    for &(r, c, v) in &t {
        colptr[c + 1] += 1;
        rowval.push(r);
        nzval.push(v);
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

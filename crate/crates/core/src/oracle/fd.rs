//! Finite-difference discretization of the PDE itself.
//!
//! Nodal unknowns on a uniform grid, component-major. Rows of the
//! semi-discrete system `M u' = K u` are placed where each state has a
//! natural stencil:
//!
//! * `n0` states at every node,
//! * `n1` states at cell midpoints (box scheme),
//! * `n2` states at interior nodes (central differences).
//!
//! This leaves exactly `n_S` rows missing; the boundary conditions fill
//! them and are eliminated by solving for `n_S` boundary unknowns.

use nalgebra::{Complex, DMatrix};

use crate::pde_model::{PdeMatrices, PdeSystem, StatePartition};
use crate::polyalg::{PolyMat1, PolyMat2};
use crate::scalar::{rational_to_f64, Rational};

use super::discretize::{full_weights, trapezoid, uniform_grid};
use super::eig::{pencil_eigenvalues, EigenBackend, NalgebraEigen};
use super::OracleError;

/// A sparse linear functional of the unknowns.
type Functional = Vec<(usize, f64)>;

#[derive(Clone, Copy)]
enum Site {
    Node(usize),
    Mid(usize),
}

struct Grid {
    n: usize,
    h: f64,
    s: Vec<f64>,
}

impl Grid {
    fn position(&self, site: Site) -> f64 {
        match site {
            Site::Node(i) => self.s[i],
            Site::Mid(i) => 0.5 * (self.s[i] + self.s[i + 1]),
        }
    }

    /// Derivative of order `order` of component `comp` at a node.
    fn node(&self, comp: usize, i: usize, order: usize) -> Functional {
        let (n, h) = (self.n, self.h);
        let at = |k: usize, w: f64| (comp * n + k, w);
        match order {
            0 => vec![at(i, 1.0)],
            1 if i == 0 => vec![at(0, -1.5 / h), at(1, 2.0 / h), at(2, -0.5 / h)],
            1 if i == n - 1 => vec![at(n - 1, 1.5 / h), at(n - 2, -2.0 / h), at(n - 3, 0.5 / h)],
            1 => vec![at(i + 1, 0.5 / h), at(i - 1, -0.5 / h)],
            _ => {
                let h2 = h * h;
                if i == 0 {
                    vec![at(0, 2.0 / h2), at(1, -5.0 / h2), at(2, 4.0 / h2), at(3, -1.0 / h2)]
                } else if i == n - 1 {
                    vec![at(n - 1, 2.0 / h2), at(n - 2, -5.0 / h2), at(n - 3, 4.0 / h2), at(n - 4, -1.0 / h2)]
                } else {
                    vec![at(i - 1, 1.0 / h2), at(i, -2.0 / h2), at(i + 1, 1.0 / h2)]
                }
            }
        }
    }

    fn at(&self, comp: usize, site: Site, order: usize) -> Functional {
        match site {
            Site::Node(i) => self.node(comp, i, order),
            Site::Mid(i) if order == 1 => {
                vec![(comp * self.n + i + 1, 1.0 / self.h), (comp * self.n + i, -1.0 / self.h)]
            }
            Site::Mid(i) => {
                let mut f = self.node(comp, i, order);
                f.extend(self.node(comp, i + 1, order));
                f.iter_mut().for_each(|(_, w)| *w *= 0.5);
                f
            }
        }
    }

    /// Functionals for every entry of `x_D` at a site.
    fn x_d(&self, p: StatePartition, site: Site) -> Vec<Functional> {
        let (n0, n1, nx) = (p.n0, p.n1, p.n_x());
        let mut out: Vec<Functional> = (0..nx).map(|c| self.at(c, site, 0)).collect();
        out.extend((n0..nx).map(|c| self.at(c, site, 1)));
        out.extend((n0 + n1..nx).map(|c| self.at(c, site, 2)));
        out
    }

    /// Functionals for `x_c` at a node.
    fn x_c(&self, p: StatePartition, i: usize) -> Vec<Functional> {
        let (n0, n1, nx) = (p.n0, p.n1, p.n_x());
        let mut out: Vec<Functional> = (n0..nx).map(|c| self.node(c, i, 0)).collect();
        out.extend((n0 + n1..nx).map(|c| self.node(c, i, 1)));
        out
    }
}

fn add(row: &mut [f64], f: &Functional, scale: f64) {
    if scale != 0.0 {
        for &(k, w) in f {
            row[k] += scale * w;
        }
    }
}

/// `sum_c weight * K[r][c] * xd[c]` into `row`.
fn add_product(row: &mut [f64], weight: f64, kernel_row: &[f64], xd: &[Functional]) {
    for (c, f) in xd.iter().enumerate() {
        add(row, f, weight * kernel_row[c]);
    }
}

fn eval_row1(m: &PolyMat1<Rational>, r: usize, s: f64) -> Vec<f64> {
    (0..m.cols()).map(|c| m.get(r, c).eval_f64(s)).collect()
}

fn eval_row2(m: &PolyMat2<f64>, r: usize, s: f64, th: f64) -> Vec<f64> {
    (0..m.cols()).map(|c| m.get(r, c).eval_f64(s, th)).collect()
}

/// Semi-discrete PDE `mass u' = stiff u` on the free unknowns.
pub struct FdSystem {
    pub mass: DMatrix<f64>,
    pub stiff: DMatrix<f64>,
}

pub fn discretize_pde(sys: &PdeSystem, n: usize) -> Result<FdSystem, OracleError> {
    if n < 8 {
        return Err(OracleError::GridTooSmall(n));
    }
    let m: PdeMatrices = sys.matrices()?;
    let p = sys.partition();
    let (n0, n1, nx, ns) = (p.n0, p.n1, p.n_x(), p.n_s());
    let (a, b) = (rational_to_f64(sys.a()), rational_to_f64(sys.b()));
    let s = uniform_grid(a, b, n);
    let g = Grid { n, h: (b - a) / (n - 1) as f64, s };
    let a1 = m.a1.map_coeffs(rational_to_f64);
    let a2 = m.a2.map_coeffs(rational_to_f64);
    let nodal: Vec<Vec<Functional>> = (0..n).map(|i| g.x_d(p, Site::Node(i))).collect();
    let total = nx * n;

    let mut mass_rows: Vec<Vec<f64>> = Vec::new();
    let mut stiff_rows: Vec<Vec<f64>> = Vec::new();
    for k in 0..nx {
        let sites: Vec<Site> = if k < n0 {
            (0..n).map(Site::Node).collect()
        } else if k < n0 + n1 {
            (0..n - 1).map(Site::Mid).collect()
        } else {
            (1..n - 1).map(Site::Node).collect()
        };
        for site in sites {
            let pos = g.position(site);
            let mut mrow = vec![0.0; total];
            add(&mut mrow, &g.at(k, site, 0), 1.0);
            let mut krow = vec![0.0; total];
            let here = g.x_d(p, site);
            add_product(&mut krow, 1.0, &eval_row1(&m.a0, k, pos), &here);
            let (lo_end, hi_start) = match site {
                Site::Node(i) => (i, i),
                Site::Mid(i) => (i, i + 1),
            };
            for (j, w) in trapezoid(&g.s, 0, lo_end).into_iter().enumerate() {
                add_product(&mut krow, w, &eval_row2(&a1, k, pos, g.s[j]), &nodal[j]);
            }
            for (j, w) in trapezoid(&g.s, hi_start, n - 1).into_iter().enumerate() {
                let j = j + hi_start;
                add_product(&mut krow, w, &eval_row2(&a2, k, pos, g.s[j]), &nodal[j]);
            }
            if let Site::Mid(i) = site {
                // half cells [s_i, pos] and [pos, s_(i+1)]
                let w = 0.25 * g.h;
                add_product(&mut krow, w, &eval_row2(&a1, k, pos, g.s[i]), &nodal[i]);
                add_product(&mut krow, w, &eval_row2(&a1, k, pos, pos), &here);
                add_product(&mut krow, w, &eval_row2(&a2, k, pos, pos), &here);
                add_product(&mut krow, w, &eval_row2(&a2, k, pos, g.s[i + 1]), &nodal[i + 1]);
            }
            mass_rows.push(mrow);
            stiff_rows.push(krow);
        }
    }

    // boundary conditions: B x_b - int BI x_D = 0
    let bnum = m.b.to_f64();
    let xb: Vec<Functional> = g.x_c(p, 0).into_iter().chain(g.x_c(p, n - 1)).collect();
    let wfull = full_weights(&g.s);
    let mut constraints = DMatrix::zeros(ns, total);
    for r in 0..ns {
        let mut row = vec![0.0; total];
        for (c, f) in xb.iter().enumerate() {
            add(&mut row, f, bnum[(r, c)]);
        }
        for j in 0..n {
            add_product(&mut row, -wfull[j], &eval_row1(&m.bi, r, g.s[j]), &nodal[j]);
        }
        constraints.row_mut(r).copy_from_slice(&row);
    }

    let mass = DMatrix::from_fn(mass_rows.len(), total, |i, j| mass_rows[i][j]);
    let stiff = DMatrix::from_fn(stiff_rows.len(), total, |i, j| stiff_rows[i][j]);
    let candidates: Vec<usize> = (n0..nx).flat_map(|c| [c * n, c * n + n - 1]).collect();
    let elim = eliminate(&constraints, &candidates)?;
    Ok(FdSystem { mass: mass * &elim, stiff: stiff * &elim })
}

/// Picks `rows(c)` boundary columns by complete pivoting among `candidates`
/// and returns the matrix `E` with `u = E u_free` on the constraint set.
fn eliminate(c: &DMatrix<f64>, candidates: &[usize]) -> Result<DMatrix<f64>, OracleError> {
    let (ns, total) = c.shape();
    let mut work = c.clone();
    let mut chosen = Vec::with_capacity(ns);
    let scale = c.amax().max(1e-300);
    for r in 0..ns {
        let mut best = (0.0, 0, 0);
        for i in r..ns {
            for &col in candidates.iter().filter(|k| !chosen.contains(*k)) {
                let v = work[(i, col)].abs();
                if v > best.0 {
                    best = (v, i, col);
                }
            }
        }
        if best.0 <= 1e-10 * scale {
            return Err(OracleError::BoundaryRank);
        }
        work.swap_rows(r, best.1);
        let pivot = work[(r, best.2)];
        for i in 0..ns {
            if i != r {
                let f = work[(i, best.2)] / pivot;
                if f != 0.0 {
                    let row_r = work.row(r).clone_owned();
                    let mut row_i = work.row_mut(i);
                    row_i -= row_r * f;
                }
            }
        }
        chosen.push(best.2);
    }
    let bound_block = DMatrix::from_fn(ns, ns, |i, j| c[(i, chosen[j])]);
    let free: Vec<usize> = (0..total).filter(|k| !chosen.contains(k)).collect();
    let free_block = DMatrix::from_fn(ns, free.len(), |i, j| c[(i, free[j])]);
    let solved = bound_block.lu().solve(&free_block).ok_or(OracleError::BoundaryRank)?;
    let mut e = DMatrix::zeros(total, free.len());
    for (j, &k) in free.iter().enumerate() {
        e[(k, j)] = 1.0;
    }
    for (i, &k) in chosen.iter().enumerate() {
        for j in 0..free.len() {
            e[(k, j)] = -solved[(i, j)];
        }
    }
    Ok(e)
}

/// Finite eigenvalues of the finite-difference PDE, by decreasing real part.
pub fn pde_eigenvalues(
    sys: &PdeSystem,
    n: usize,
    backend: &dyn EigenBackend,
) -> Result<Vec<Complex<f64>>, OracleError> {
    let fd = discretize_pde(sys, n)?;
    pencil_eigenvalues(&fd.mass, &fd.stiff, backend)
}

/// Largest real part of the finite-difference spectrum.
pub fn pde_spectrum(sys: &PdeSystem, n: usize) -> Result<f64, OracleError> {
    let ev = pde_eigenvalues(sys, n, &NalgebraEigen)?;
    ev.first().map(|z| z.re).ok_or(OracleError::SingularPencil)
}

//! Linear 1-D PDE models with integral terms in the dynamics and in the
//! boundary conditions.
//!
//! States are partitioned by differentiability: `n0` states with no spatial
//! derivative, `n1` states with one, and `n2` states with two. The stacked
//! vector of all well-defined values is
//!
//! ```text
//! x_D = col(x0, x1, x2, dx1, dx2, ddx2)
//! ```
//!
//! and the dynamics read
//!
//! ```text
//! x_t(s) = A0(s) x_D(s) + int_a^s A1(s,th) x_D(th) dth + int_s^b A2(s,th) x_D(th) dth
//! ```
//!
//! subject to `B x_b = int_a^b BI(s) x_D(s) ds`, where `x_b` stacks the
//! continuous part `x_c = col(x1, x2, dx2)` at both endpoints.

mod parse;

pub use parse::{format_pde, parse_pde};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::polyalg::{MPoly, Mat, Poly1, PolyError, PolyMat1, PolyMat2, RatMatrix};
use crate::scalar::{rational_to_f64, Rational};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PdeError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("block {block} has shape {found:?}, expected {expected:?}")]
    Dimension { block: String, expected: (usize, usize), found: (usize, usize) },
    #[error("unknown parameter '{name}' in block {block}")]
    UnknownParameter { name: String, block: String },
    #[error("variable '{var}' is not allowed in block {block}")]
    VariableNotAllowed { var: String, block: String },
    #[error("parameter '{0}' has no value")]
    Unbound(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Counts of states by differentiability order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StatePartition {
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
}

impl StatePartition {
    pub fn new(n0: usize, n1: usize, n2: usize) -> Result<Self, PdeError> {
        if n0 + n1 + n2 == 0 {
            return Err(PdeError::Invalid("the model needs at least one state".into()));
        }
        Ok(Self { n0, n1, n2 })
    }

    /// Number of states.
    pub fn n_x(&self) -> usize {
        self.n0 + self.n1 + self.n2
    }

    /// Rows of the continuous boundary vector `x_c`.
    pub fn n_s(&self) -> usize {
        self.n1 + 2 * self.n2
    }

    /// Rows of `x_D`.
    pub fn n_d(&self) -> usize {
        self.n_x() + self.n_s()
    }

    /// `col(x1, x2, dx2)` for a polynomial state.
    pub fn x_c(&self, x: &PolyMat1<Rational>) -> PolyMat1<Rational> {
        let (x1, x2) = (self.rows1(x), self.rows2(x));
        x1.vstack(&x2).vstack(&x2.derivative())
    }

    /// `col(x0, x1, x2, dx1, dx2, ddx2)` for a polynomial state.
    pub fn x_d(&self, x: &PolyMat1<Rational>) -> PolyMat1<Rational> {
        let (x1, x2) = (self.rows1(x), self.rows2(x));
        let dx2 = x2.derivative();
        x.vstack(&x1.derivative()).vstack(&dx2).vstack(&dx2.derivative())
    }

    /// The fundamental state `col(x0, dx1, ddx2)`.
    pub fn x_f(&self, x: &PolyMat1<Rational>) -> PolyMat1<Rational> {
        let x0 = x.row_range(0, self.n0);
        x0.vstack(&self.rows1(x).derivative()).vstack(&self.rows2(x).derivative().derivative())
    }

    /// `col(x_c(a), x_c(b))`.
    pub fn x_b(&self, x: &PolyMat1<Rational>, a: &Rational, b: &Rational) -> Vec<Rational> {
        let xc = self.x_c(x);
        let mut out: Vec<Rational> = xc.eval(a).into_iter().map(|r| r[0].clone()).collect();
        out.extend(xc.eval(b).into_iter().map(|r| r[0].clone()));
        out
    }

    fn rows1(&self, x: &PolyMat1<Rational>) -> PolyMat1<Rational> {
        x.row_range(self.n0, self.n0 + self.n1)
    }

    fn rows2(&self, x: &PolyMat1<Rational>) -> PolyMat1<Rational> {
        x.row_range(self.n0 + self.n1, self.n_x())
    }
}

/// A dense matrix of polynomial expressions that may mention parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<MPoly>,
}

impl SymMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![MPoly::zero(); rows * cols] }
    }

    /// Builds from row vectors; all rows must share one length.
    pub fn from_rows(rows: Vec<Vec<MPoly>>, cols_if_empty: usize) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(cols_if_empty, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Self { rows: r, cols: c, entries: rows.into_iter().flatten().collect() }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &MPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<MPoly>> {
        (0..self.rows).map(|i| self.entries[i * self.cols..(i + 1) * self.cols].to_vec()).collect()
    }

    /// Names appearing in the entries, other than `s` and `th`.
    pub fn symbols(&self) -> Vec<String> {
        let mut names: Vec<String> = self.entries.iter().flat_map(MPoly::variables).collect();
        names.sort();
        names.dedup();
        names
    }

    fn bind(&self, values: &BTreeMap<String, Rational>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.bind(values)).collect(),
        }
    }

    fn to_poly1(&self) -> Result<PolyMat1<Rational>, PolyError> {
        let data = self.entries.iter().map(MPoly::to_poly1).collect::<Result<Vec<_>, _>>()?;
        Ok(Mat::from_vec(self.rows, self.cols, data))
    }

    fn to_poly2(&self) -> Result<PolyMat2<Rational>, PolyError> {
        let data = self.entries.iter().map(MPoly::to_poly2).collect::<Result<Vec<_>, _>>()?;
        Ok(Mat::from_vec(self.rows, self.cols, data))
    }

    fn from_poly1(m: &PolyMat1<Rational>) -> Self {
        let (rows, cols) = m.shape();
        Self { rows, cols, entries: m.entries().iter().map(MPoly::from_poly1).collect() }
    }

    fn from_poly2(m: &PolyMat2<Rational>) -> Self {
        let (rows, cols) = m.shape();
        Self { rows, cols, entries: m.entries().iter().map(MPoly::from_poly2).collect() }
    }
}

/// The coefficient matrices of a model with every parameter bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeMatrices {
    pub a0: PolyMat1<Rational>,
    pub a1: PolyMat2<Rational>,
    pub a2: PolyMat2<Rational>,
    pub b: RatMatrix,
    pub bi: PolyMat1<Rational>,
}

/// A parsed model; entries may still mention named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSystem {
    pub(crate) partition: StatePartition,
    pub(crate) a: Rational,
    pub(crate) b: Rational,
    pub(crate) params: Vec<String>,
    pub(crate) a0: SymMatrix,
    pub(crate) a1: SymMatrix,
    pub(crate) a2: SymMatrix,
    pub(crate) bmat: SymMatrix,
    pub(crate) bi: SymMatrix,
}

impl PdeSystem {
    /// Assembles and validates a model from symbolic blocks.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        partition: StatePartition,
        a: Rational,
        b: Rational,
        params: Vec<String>,
        a0: SymMatrix,
        a1: SymMatrix,
        a2: SymMatrix,
        bmat: SymMatrix,
        bi: SymMatrix,
    ) -> Result<Self, PdeError> {
        let sys = Self { partition, a, b, params, a0, a1, a2, bmat, bi };
        sys.validate()?;
        Ok(sys)
    }

    /// A parameter-free model from numeric blocks.
    pub fn from_matrices(
        partition: StatePartition,
        a: Rational,
        b: Rational,
        m: &PdeMatrices,
    ) -> Result<Self, PdeError> {
        let bmat = SymMatrix::from_rows(
            m.b.to_rows().into_iter().map(|r| r.into_iter().map(MPoly::constant).collect()).collect(),
            m.b.cols(),
        );
        Self::new(
            partition,
            a,
            b,
            Vec::new(),
            SymMatrix::from_poly1(&m.a0),
            SymMatrix::from_poly2(&m.a1),
            SymMatrix::from_poly2(&m.a2),
            bmat,
            SymMatrix::from_poly1(&m.bi),
        )
    }

    pub fn partition(&self) -> StatePartition {
        self.partition
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    /// Declared parameter names that are still free.
    pub fn params(&self) -> &[String] {
        &self.params
    }

    /// Number of boundary conditions.
    pub fn n_bc(&self) -> usize {
        self.bmat.rows
    }

    pub fn block(&self, name: &str) -> Option<&SymMatrix> {
        match name {
            "A0" => Some(&self.a0),
            "A1" => Some(&self.a1),
            "A2" => Some(&self.a2),
            "B" => Some(&self.bmat),
            "BI" => Some(&self.bi),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), PdeError> {
        if self.a >= self.b {
            return Err(PdeError::Invalid("domain requires a < b".into()));
        }
        let p = self.partition;
        let (nx, nd, ns) = (p.n_x(), p.n_d(), p.n_s());
        let nbc = self.bmat.rows;
        let checks = [
            ("A0", &self.a0, (nx, nd), &["s"][..]),
            ("A1", &self.a1, (nx, nd), &["s", "th"][..]),
            ("A2", &self.a2, (nx, nd), &["s", "th"][..]),
            ("B", &self.bmat, (nbc, 2 * ns), &[][..]),
            ("BI", &self.bi, (nbc, nd), &["s"][..]),
        ];
        for (name, m, expected, vars) in checks {
            let found = m.shape();
            let empty_ok = found.0 == 0 && expected.0 == 0;
            if found != expected && !empty_ok {
                return Err(PdeError::Dimension { block: name.into(), expected, found });
            }
            for sym in m.symbols() {
                if vars.contains(&sym.as_str()) {
                    continue;
                }
                if sym == "s" || sym == "th" {
                    return Err(PdeError::VariableNotAllowed { var: sym, block: name.into() });
                }
                if !self.params.contains(&sym) {
                    return Err(PdeError::UnknownParameter { name: sym, block: name.into() });
                }
            }
        }
        Ok(())
    }

    /// Substitutes values for parameters; the result lists only the
    /// parameters that remain free.
    pub fn bind_params(&self, values: &BTreeMap<String, Rational>) -> Result<Self, PdeError> {
        for name in values.keys() {
            if !self.params.contains(name) {
                return Err(PdeError::UnknownParameter { name: name.clone(), block: "--set".into() });
            }
        }
        if let Some(missing) = self.params.iter().find(|p| !values.contains_key(*p)) {
            return Err(PdeError::Unbound(missing.clone()));
        }
        Ok(Self {
            partition: self.partition,
            a: self.a.clone(),
            b: self.b.clone(),
            params: Vec::new(),
            a0: self.a0.bind(values),
            a1: self.a1.bind(values),
            a2: self.a2.bind(values),
            bmat: self.bmat.bind(values),
            bi: self.bi.bind(values),
        })
    }

    /// Numeric blocks; fails while any parameter is unbound.
    pub fn matrices(&self) -> Result<PdeMatrices, PdeError> {
        if let Some(p) = self.params.first() {
            return Err(PdeError::Unbound(p.clone()));
        }
        let lift = |e: PolyError| PdeError::Invalid(e.to_string());
        let (r, c) = self.bmat.shape();
        let mut b = RatMatrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                let p = self.bmat.get(i, j).to_poly1().map_err(lift)?;
                b.set(i, j, p.coeff(0));
            }
        }
        Ok(PdeMatrices {
            a0: self.a0.to_poly1().map_err(lift)?,
            a1: self.a1.to_poly2().map_err(lift)?,
            a2: self.a2.to_poly2().map_err(lift)?,
            b,
            bi: self.bi.to_poly1().map_err(lift)?,
        })
    }

    /// Exact boundary-condition defect `B x_b - int BI x_D` of a
    /// polynomial state.
    pub fn membership_defect(&self, x: &PolyMat1<Rational>) -> Result<Vec<Rational>, PdeError> {
        let m = self.matrices()?;
        let p = self.partition;
        if x.shape() != (p.n_x(), 1) {
            return Err(PdeError::Dimension {
                block: "state".into(),
                expected: (p.n_x(), 1),
                found: x.shape(),
            });
        }
        let xb = p.x_b(x, &self.a, &self.b);
        let integral = m.bi.mul(&p.x_d(x)).integrate(&self.a, &self.b);
        Ok((0..m.b.rows())
            .map(|i| {
                let bx: Rational = (0..xb.len()).map(|j| m.b.get(i, j) * &xb[j]).sum();
                bx - &integral[i][0]
            })
            .collect())
    }

    /// Euclidean norm of [`Self::membership_defect`]; zero exactly when
    /// `x` satisfies the boundary conditions.
    pub fn membership_residual(&self, x: &PolyMat1<Rational>) -> Result<f64, PdeError> {
        let d = self.membership_defect(x)?;
        Ok(d.iter().map(|r| rational_to_f64(r).powi(2)).sum::<f64>().sqrt())
    }
}

/// A column of univariate polynomials, convenient for tests and examples.
pub fn state_column(entries: Vec<Poly1<Rational>>) -> PolyMat1<Rational> {
    let n = entries.len();
    Mat::from_vec(n, 1, entries)
}

//! Conversion of a PDE model into a partial integral equation `T x_f' = A x_f`
//! on the fundamental state `x_f = col(x0, dx1, ddx2)`.
//!
//! The boundary conditions are solved for the boundary values in terms of
//! `x_f`, which yields
//!
//! ```text
//! x_D(s) = U1 x_f(s) + int_a^s RD1(s,th) x_f(th) dth + int_s^b RD2(s,th) x_f(th) dth
//! ```
//!
//! `T` is the block of rows of that map returning `x`, and `A` composes the
//! PDE dynamics with it.

mod text;

pub use text::{format_pie, parse_pie};

use thiserror::Error;

use crate::pde_model::{PdeError, PdeMatrices, PdeSystem, StatePartition};
use crate::pi_ops::{l2_inner, PiError, RatOperator};
use crate::polyalg::{Bound, Mat, Poly1, PolyMat1, PolyMat2, RatMatrix, Shift, Var};
use crate::scalar::{rational_to_f64, Rational};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConversionError {
    #[error("{n_bc} boundary conditions given but {n_s} are required")]
    BoundaryCount { n_bc: usize, n_s: usize },
    #[error("boundary conditions are not admissible: det(B_T) = 0")]
    Inadmissible,
    #[error("state does not satisfy the boundary conditions (defect {0:e})")]
    NotInDomain(f64),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Pi(#[from] PiError),
}

/// Building blocks that depend only on the partition and the domain start.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreMatrices {
    /// `T(x)`, `n_S x n_S`.
    pub t: PolyMat1<Rational>,
    /// `Q(x)`, `n_S x n_x`.
    pub q: PolyMat1<Rational>,
    /// Places `x_f` into `x_D`, `(n_x + n_S) x n_x`.
    pub u1: PolyMat1<Rational>,
    /// Places `x_c` into `x_D`, `(n_x + n_S) x n_S`.
    pub u2: PolyMat1<Rational>,
}

/// `T(x)`, `Q(x)`, `U1`, `U2` for a partition. `T` and `Q` are functions of a
/// single displacement argument, so they do not depend on the domain.
pub fn core_matrices(p: StatePartition) -> CoreMatrices {
    let (n0, n1, n2) = (p.n0, p.n1, p.n2);
    let (nx, ns, nd) = (p.n_x(), p.n_s(), p.n_d());
    let one = Poly1::one();
    let x = Poly1::var();
    let mut t = Mat::zeros(ns, ns);
    let mut q = Mat::zeros(ns, nx);
    for i in 0..n1 {
        t.set(i, i, one.clone());
        q.set(i, n0 + i, one.clone());
    }
    for i in 0..n2 {
        let (r2, rd2) = (n1 + i, n1 + n2 + i);
        t.set(r2, r2, one.clone());
        t.set(r2, rd2, x.clone());
        t.set(rd2, rd2, one.clone());
        q.set(r2, n0 + n1 + i, x.clone());
        q.set(rd2, n0 + n1 + i, one.clone());
    }
    let mut u1 = Mat::zeros(nd, nx);
    for i in 0..n0 {
        u1.set(i, i, one.clone());
    }
    for i in 0..n1 {
        u1.set(nx + i, n0 + i, one.clone());
    }
    for i in 0..n2 {
        u1.set(nx + n1 + n2 + i, n0 + n1 + i, one.clone());
    }
    let mut u2 = Mat::zeros(nd, ns);
    for i in 0..n1 {
        u2.set(n0 + i, i, one.clone());
    }
    for i in 0..n2 {
        u2.set(n0 + n1 + i, n1 + i, one.clone());
        u2.set(nx + n1 + i, n1 + n2 + i, one.clone());
    }
    CoreMatrices { t, q, u1, u2 }
}

/// The boundary matrix `B_T` and its invertibility.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub bt: RatMatrix,
    pub determinant: Rational,
    pub condition_estimate: f64,
    pub admissible: bool,
}

impl AdmissibilityReport {
    /// Condition estimates above this are reported as a warning.
    pub const CONDITION_WARNING: f64 = 1e8;

    pub fn ill_conditioned(&self) -> bool {
        self.admissible && self.condition_estimate > Self::CONDITION_WARNING
    }
}

fn constant_mat(m: &RatMatrix) -> PolyMat1<Rational> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| Poly1::constant(m.get(i, j).clone()))
}

fn numeric(sys: &PdeSystem) -> Result<PdeMatrices, ConversionError> {
    let m = sys.matrices()?;
    let ns = sys.partition().n_s();
    if m.b.rows() != ns {
        return Err(ConversionError::BoundaryCount { n_bc: m.b.rows(), n_s: ns });
    }
    Ok(m)
}

/// `B_T = B [T(0); T(b-a)] - int_a^b BI(s) U2 T(s-a) ds`.
pub fn compute_bt(sys: &PdeSystem) -> Result<AdmissibilityReport, ConversionError> {
    let m = numeric(sys)?;
    let p = sys.partition();
    let ns = p.n_s();
    let core = core_matrices(p);
    let (a, b) = (sys.a(), sys.b());
    let stacked: Vec<Vec<Rational>> = core
        .t
        .eval(&Rational::from_integer(0.into()))
        .into_iter()
        .chain(core.t.eval(&(b - a)))
        .collect();
    let mut bt = m.b.mul(&RatMatrix::from_rows(stacked));
    let shifted = core.t.subst_shift(&Shift::SMinus(a.clone())).as_mat_in_s().expect("T(s-a) depends on s only");
    let integral = m.bi.mul(&core.u2).mul(&shifted).integrate(a, b);
    bt = bt.sub(&RatMatrix::from_rows(integral));
    let determinant = if ns == 0 { Rational::from_integer(1.into()) } else { bt.determinant() };
    let admissible = determinant != Rational::from_integer(0.into());
    let condition_estimate = if admissible { bt.condition_estimate() } else { f64::INFINITY };
    Ok(AdmissibilityReport { bt, determinant, condition_estimate, admissible })
}

fn admissible_bt_inverse(sys: &PdeSystem) -> Result<RatMatrix, ConversionError> {
    let report = compute_bt(sys)?;
    if !report.admissible {
        return Err(ConversionError::Inadmissible);
    }
    Ok(report.bt.inverse().unwrap_or_else(|| RatMatrix::zeros(0, 0)))
}

/// `B_Q(th)`, `n_S x n_x`, returned as a polynomial in its single argument:
/// `B_T^{-1} (BI(th) U1 - B [0; Q(b-th)] + int_th^b BI(s) U2 Q(s-th) ds)`.
pub fn compute_bq(sys: &PdeSystem) -> Result<PolyMat1<Rational>, ConversionError> {
    let inv = admissible_bt_inverse(sys)?;
    let m = numeric(sys)?;
    let p = sys.partition();
    let (ns, nx) = (p.n_s(), p.n_x());
    if ns == 0 {
        return Ok(Mat::zeros(0, nx));
    }
    let core = core_matrices(p);
    let b = sys.b();
    let b_right = constant_mat(&m.b).col_range(ns, 2 * ns);
    let q_end = core.q.subst_shift(&Shift::MinusS(b.clone())).as_mat_in_s().expect("Q(b-s) depends on s only");
    let kernel = m.bi.mul(&core.u2).in_s().mul(&core.q.subst_shift(&Shift::SMinusTheta));
    let tail = kernel
        .integrate(Var::S, &Bound::Theta, &Bound::Const(b.clone()))
        .map_err(PiError::from)?
        .swap_vars()
        .as_mat_in_s()
        .expect("integral over s leaves th only");
    let inner = m.bi.mul(&core.u1).sub(&b_right.mul(&q_end)).add(&tail);
    Ok(constant_mat(&inv).mul(&inner))
}

/// The map `x_f -> x_D` as a PI operator `{U1, RD1, RD2}`.
pub fn build_xd(sys: &PdeSystem) -> Result<RatOperator, ConversionError> {
    let bq = compute_bq(sys)?;
    let p = sys.partition();
    let core = core_matrices(p);
    let (a, b) = (sys.a().clone(), sys.b().clone());
    let u2t = core.u2.mul(&core.t).subst_shift(&Shift::SMinus(a.clone()));
    let rd2: PolyMat2<Rational> = u2t.mul(&bq.in_theta());
    let rd1 = rd2.add(&core.u2.mul(&core.q).subst_shift(&Shift::SMinusTheta));
    Ok(RatOperator::new(a, b, core.u1, rd1, rd2)?)
}

/// `T = {G0, G1, G2}` with `x = T x_f` on the domain of the PDE.
pub fn build_t(sys: &PdeSystem) -> Result<RatOperator, ConversionError> {
    let xd = build_xd(sys)?;
    Ok(xd.rows(0, sys.partition().n_x()))
}

/// `A = {A0, A1, A2} o {U1, RD1, RD2}`.
pub fn build_a(sys: &PdeSystem) -> Result<RatOperator, ConversionError> {
    let xd = build_xd(sys)?;
    let m = sys.matrices()?;
    let dynamics = RatOperator::new(sys.a().clone(), sys.b().clone(), m.a0, m.a1, m.a2)?;
    Ok(dynamics.compose(&xd)?)
}

/// The PIE `T x_f' = A x_f` equivalent to a PDE model.
#[derive(Debug, Clone, PartialEq)]
pub struct PieSystem {
    pub partition: StatePartition,
    pub t: RatOperator,
    pub a: RatOperator,
}

impl PieSystem {
    pub fn new(partition: StatePartition, t: RatOperator, a: RatOperator) -> Result<Self, ConversionError> {
        let nx = partition.n_x();
        for op in [&t, &a] {
            if op.shape() != (nx, nx) {
                return Err(PiError::DimMismatch { op: "pie", left: (nx, nx), right: op.shape() }.into());
            }
        }
        if t.a() != a.a() || t.b() != a.b() {
            return Err(PiError::DomainMismatch.into());
        }
        Ok(Self { partition, t, a })
    }
}

pub fn convert(sys: &PdeSystem) -> Result<PieSystem, ConversionError> {
    let xd = build_xd(sys)?;
    let m = sys.matrices()?;
    let dynamics = RatOperator::new(sys.a().clone(), sys.b().clone(), m.a0, m.a1, m.a2)?;
    let a = dynamics.compose(&xd)?;
    let t = xd.rows(0, sys.partition().n_x());
    PieSystem::new(sys.partition(), t, a)
}

/// `D x = col(x0, dx1, ddx2)`.
pub fn apply_d(p: StatePartition, x: &PolyMat1<Rational>) -> PolyMat1<Rational> {
    p.x_f(x)
}

fn l2_norm(v: &PolyMat1<Rational>, a: &Rational, b: &Rational) -> Result<f64, ConversionError> {
    Ok(rational_to_f64(&l2_inner(v, v, a, b)?).sqrt())
}

/// `||T D x - x||` for a state satisfying the boundary conditions.
pub fn round_trip_residual(
    sys: &PdeSystem,
    pie: &PieSystem,
    x: &PolyMat1<Rational>,
) -> Result<f64, ConversionError> {
    let defect = sys.membership_residual(x)?;
    if defect != 0.0 {
        return Err(ConversionError::NotInDomain(defect));
    }
    let back = pie.t.apply_poly(&apply_d(pie.partition, x))?;
    l2_norm(&back.sub(x), pie.t.a(), pie.t.b())
}

/// `||D T xh - xh||` for any polynomial `xh`.
pub fn backward_residual(pie: &PieSystem, xh: &PolyMat1<Rational>) -> Result<f64, ConversionError> {
    let tx = pie.t.apply_poly(xh)?;
    l2_norm(&apply_d(pie.partition, &tx).sub(xh), pie.t.a(), pie.t.b())
}

/// `<x, y>_X = <D x, D y>_{L2}`.
pub fn x_inner(
    p: StatePartition,
    x: &PolyMat1<Rational>,
    y: &PolyMat1<Rational>,
    a: &Rational,
    b: &Rational,
) -> Result<Rational, ConversionError> {
    Ok(l2_inner(&apply_d(p, x), &apply_d(p, y), a, b)?)
}

/// Squared Sobolev norm: the sum of squared L2 norms of every entry of `x_D`.
pub fn h_norm_sq(
    p: StatePartition,
    x: &PolyMat1<Rational>,
    a: &Rational,
    b: &Rational,
) -> Result<Rational, ConversionError> {
    let xd = p.x_d(x);
    Ok(l2_inner(&xd, &xd, a, b)?)
}

/// Adds a correction to `x` so that the result satisfies the boundary
/// conditions. The correction uses constants in the `x1` and `x2` rows and
/// linear terms in the `x2` rows, whose fundamental state is zero.
pub fn project_onto_domain(
    sys: &PdeSystem,
    x: &PolyMat1<Rational>,
) -> Result<PolyMat1<Rational>, ConversionError> {
    let p = sys.partition();
    let (n0, n1, n2) = (p.n0, p.n1, p.n2);
    let ns = p.n_s();
    if ns == 0 {
        return Ok(x.clone());
    }
    let a = sys.a().clone();
    let mut basis = Vec::with_capacity(ns);
    let unit = |row: usize, poly: Poly1<Rational>| {
        let mut m = Mat::zeros(p.n_x(), 1);
        m.set(row, 0, poly);
        m
    };
    for i in 0..n1 {
        basis.push(unit(n0 + i, Poly1::one()));
    }
    for i in 0..n2 {
        basis.push(unit(n0 + n1 + i, Poly1::one()));
    }
    for i in 0..n2 {
        let ramp = Poly1::from_coeffs(vec![-a.clone(), Rational::from_integer(1.into())]);
        basis.push(unit(n0 + n1 + i, ramp));
    }
    let mut mat = RatMatrix::zeros(ns, ns);
    for (k, phi) in basis.iter().enumerate() {
        for (i, v) in sys.membership_defect(phi)?.into_iter().enumerate() {
            mat.set(i, k, v);
        }
    }
    let inv = mat.inverse().ok_or(ConversionError::Inadmissible)?;
    let defect = sys.membership_defect(x)?;
    let mut out = x.clone();
    for (k, phi) in basis.iter().enumerate() {
        let c: Rational = (0..ns).map(|i| inv.get(k, i) * &defect[i]).sum();
        out = out.sub(&phi.scale(&c));
    }
    Ok(out)
}

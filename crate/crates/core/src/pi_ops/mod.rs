//! Partial-integral operators with a multiplier and two polynomial kernels:
//!
//! ```text
//! (P v)(s) = R0(s) v(s) + int_a^s R1(s,th) v(th) dth + int_s^b R2(s,th) v(th) dth
//! ```
//!
//! Sums, products, and adjoints of such operators are again of this form,
//! so every operation here returns a [`PiOperator`].

mod text;

pub use text::{format_operator, parse_operator, parse_operator_at, write_operator_block};

use thiserror::Error;

use crate::polyalg::{Bound, Mat, Poly1, PolyError, PolyMat1, PolyMat2, Var};
use crate::scalar::{Coeff, Rational};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PiError {
    #[error("operator dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("operators live on different domains")]
    DomainMismatch,
    #[error("invalid domain: require a < b")]
    BadDomain,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// A 3-PI operator of dimension `out_dim x in_dim` on `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiOperator<C> {
    a: C,
    b: C,
    r0: PolyMat1<C>,
    r1: PolyMat2<C>,
    r2: PolyMat2<C>,
}

impl<C: Coeff> PiOperator<C> {
    pub fn new(
        a: C,
        b: C,
        r0: PolyMat1<C>,
        r1: PolyMat2<C>,
        r2: PolyMat2<C>,
    ) -> Result<Self, PiError> {
        if a.to_f64() >= b.to_f64() {
            return Err(PiError::BadDomain);
        }
        for shape in [r1.shape(), r2.shape()] {
            if shape != r0.shape() {
                return Err(PiError::DimMismatch { op: "new", left: r0.shape(), right: shape });
            }
        }
        Ok(Self { a, b, r0, r1, r2 })
    }

    pub fn zero(a: C, b: C, out_dim: usize, in_dim: usize) -> Self {
        Self {
            a,
            b,
            r0: Mat::zeros(out_dim, in_dim),
            r1: Mat::zeros(out_dim, in_dim),
            r2: Mat::zeros(out_dim, in_dim),
        }
    }

    pub fn identity(a: C, b: C, n: usize) -> Self {
        Self::multiplier(a, b, Mat::identity(n))
    }

    pub fn multiplier(a: C, b: C, r0: PolyMat1<C>) -> Self {
        let (p, q) = r0.shape();
        Self { a, b, r0, r1: Mat::zeros(p, q), r2: Mat::zeros(p, q) }
    }

    pub fn a(&self) -> &C {
        &self.a
    }

    pub fn b(&self) -> &C {
        &self.b
    }

    pub fn out_dim(&self) -> usize {
        self.r0.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.r0.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.r0.shape()
    }

    pub fn r0(&self) -> &PolyMat1<C> {
        &self.r0
    }

    pub fn r1(&self) -> &PolyMat2<C> {
        &self.r1
    }

    pub fn r2(&self) -> &PolyMat2<C> {
        &self.r2
    }

    pub fn is_zero(&self) -> bool {
        self.r0.is_zero() && self.r1.is_zero() && self.r2.is_zero()
    }

    fn same_domain(&self, o: &Self) -> Result<(), PiError> {
        if self.a != o.a || self.b != o.b {
            return Err(PiError::DomainMismatch);
        }
        Ok(())
    }

    fn same_shape(&self, o: &Self, op: &'static str) -> Result<(), PiError> {
        self.same_domain(o)?;
        if self.shape() != o.shape() {
            return Err(PiError::DimMismatch { op, left: self.shape(), right: o.shape() });
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self, PiError> {
        self.same_shape(o, "add")?;
        Ok(Self {
            a: self.a.clone(),
            b: self.b.clone(),
            r0: self.r0.add(&o.r0),
            r1: self.r1.add(&o.r1),
            r2: self.r2.add(&o.r2),
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self, PiError> {
        self.add(&o.scale(&-C::one()))
    }

    pub fn scale(&self, k: &C) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            r0: self.r0.scale(k),
            r1: self.r1.scale(k),
            r2: self.r2.scale(k),
        }
    }

    /// Returns `S` with `S v = self(other(v))`.
    pub fn compose(&self, other: &Self) -> Result<Self, PiError> {
        self.same_domain(other)?;
        if self.in_dim() != other.out_dim() {
            return Err(PiError::DimMismatch {
                op: "compose",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let lo = Bound::Const(self.a.clone());
        let hi = Bound::Const(self.b.clone());
        let (p0s, q0t) = (self.r0.in_s(), other.r0.in_theta());
        let (p1, p2, q1, q2) = (&self.r1, &self.r2, &other.r1, &other.r2);
        let ip = |x: &PolyMat2<C>, y: &PolyMat2<C>, l: &Bound<C>, u: &Bound<C>| {
            PolyMat2::integrate_product(x, y, l, u)
        };

        let r0 = self.r0.mul(&other.r0);
        let r1 = p0s
            .mul(q1)
            .add(&p1.mul(&q0t))
            .add(&ip(p1, q2, &lo, &Bound::Theta)?)
            .add(&ip(p1, q1, &Bound::Theta, &Bound::S)?)
            .add(&ip(p2, q1, &Bound::S, &hi)?);
        let r2 = p0s
            .mul(q2)
            .add(&p2.mul(&q0t))
            .add(&ip(p1, q2, &lo, &Bound::S)?)
            .add(&ip(p2, q2, &Bound::S, &Bound::Theta)?)
            .add(&ip(p2, q1, &Bound::Theta, &hi)?);
        Ok(Self { a: self.a.clone(), b: self.b.clone(), r0, r1, r2 })
    }

    /// Adjoint with respect to the `L2` inner product.
    pub fn adjoint(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            r0: self.r0.transpose(),
            r1: self.r2.swap_vars().transpose(),
            r2: self.r1.swap_vars().transpose(),
        }
    }

    /// Exact image of a polynomial column `v(s)`.
    pub fn apply_poly(&self, v: &PolyMat1<C>) -> Result<PolyMat1<C>, PiError> {
        if v.rows() != self.in_dim() {
            return Err(PiError::DimMismatch { op: "apply", left: self.shape(), right: v.shape() });
        }
        let lo = Bound::Const(self.a.clone());
        let hi = Bound::Const(self.b.clone());
        let vt = v.in_theta();
        let k = self
            .r1
            .mul(&vt)
            .integrate(Var::Theta, &lo, &Bound::S)?
            .add(&self.r2.mul(&vt).integrate(Var::Theta, &Bound::S, &hi)?);
        let k = k.as_mat_in_s().expect("theta integrated out");
        Ok(self.r0.mul(v).add(&k))
    }

    /// `<u, P v>` in `L2` over the domain.
    pub fn quadratic_form(&self, u: &PolyMat1<C>, v: &PolyMat1<C>) -> Result<C, PiError> {
        let pv = self.apply_poly(v)?;
        l2_inner(u, &pv, &self.a, &self.b)
    }

    /// Kernel values `(R1(s, th), R2(s, th))`.
    pub fn kernel_values(&self, s: f64, th: f64) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
        (self.r1.eval_f64(s, th), self.r2.eval_f64(s, th))
    }

    /// Converts coefficients (e.g. exact to floating point).
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D + Copy) -> PiOperator<D> {
        PiOperator {
            a: f(&self.a),
            b: f(&self.b),
            r0: self.r0.map_coeffs(f),
            r1: self.r1.map_coeffs(f),
            r2: self.r2.map_coeffs(f),
        }
    }

    /// Largest coefficient magnitude over all three blocks.
    pub fn max_abs_coeff(&self) -> f64 {
        self.r0.max_abs_coeff().max(self.r1.max_abs_coeff()).max(self.r2.max_abs_coeff())
    }

    /// Bound on the induced `L2` norm from sup-norms of the blocks.
    pub fn norm_upper_bound(&self) -> f64 {
        let (a, b) = (self.a.to_f64(), self.b.to_f64());
        let len = b - a;
        let grid: Vec<f64> = (0..=40).map(|k| a + len * k as f64 / 40.0).collect();
        let mut m0: f64 = 0.0;
        let mut k1: f64 = 0.0;
        let mut k2: f64 = 0.0;
        for &s in &grid {
            m0 = m0.max(spectral_norm_bound(&self.r0.eval_f64(s)));
            for &t in &grid {
                let (x, y) = self.kernel_values(s, t);
                k1 = k1.max(spectral_norm_bound(&x));
                k2 = k2.max(spectral_norm_bound(&y));
            }
        }
        // 5% slack for the sampled supremum
        1.05 * (m0 + len * (k1 + k2))
    }

    /// Row block `rows` of the operator.
    pub fn rows(&self, r0: usize, r1: usize) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            r0: self.r0.row_range(r0, r1),
            r1: self.r1.row_range(r0, r1),
            r2: self.r2.row_range(r0, r1),
        }
    }

    /// Multiplies from the left by a polynomial multiplier in `s`.
    pub fn left_multiply(&self, m: &PolyMat1<C>) -> Result<Self, PiError> {
        let mult = Self::multiplier(self.a.clone(), self.b.clone(), m.clone());
        mult.compose(self)
    }
}

fn spectral_norm_bound(m: &nalgebra::DMatrix<f64>) -> f64 {
    // Frobenius norm dominates the spectral norm.
    m.norm()
}

/// `int_a^b u(s)^T v(s) ds` for polynomial columns.
pub fn l2_inner<C: Coeff>(u: &PolyMat1<C>, v: &PolyMat1<C>, a: &C, b: &C) -> Result<C, PiError> {
    if u.shape() != v.shape() {
        return Err(PiError::DimMismatch { op: "inner", left: u.shape(), right: v.shape() });
    }
    let mut acc = Poly1::zero();
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            acc = &acc + &(u.get(i, j) * v.get(i, j));
        }
    }
    Ok(acc.integrate(a, b))
}

/// Exact operator over the rationals.
pub type RatOperator = PiOperator<Rational>;

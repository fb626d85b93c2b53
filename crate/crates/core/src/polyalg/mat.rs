use std::fmt::Debug;

use crate::scalar::Coeff;

use super::poly1::Poly1;
use super::poly2::{Bound, Poly2, Var};
use super::PolyError;

/// Ring operations a matrix entry must provide.
pub trait Entry: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl<C: Coeff> Entry for Poly1<C> {
    fn zero() -> Self {
        Poly1::zero()
    }
    fn one() -> Self {
        Poly1::one()
    }
    fn is_zero(&self) -> bool {
        Poly1::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl<C: Coeff> Entry for Poly2<C> {
    fn zero() -> Self {
        Poly2::zero()
    }
    fn one() -> Self {
        Poly2::constant(C::one())
    }
    fn is_zero(&self) -> bool {
        Poly2::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// Dense row-major matrix of ring elements.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<P> {
    rows: usize,
    cols: usize,
    data: Vec<P>,
}

pub type PolyMat1<C> = Mat<Poly1<C>>;
pub type PolyMat2<C> = Mat<Poly2<C>>;

impl<P: Entry> Mat<P> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![P::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = P::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<P>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> P) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &P {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: P) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[P] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|p| p.is_zero())
    }

    pub fn map<Q: Entry>(&self, f: impl Fn(&P) -> Q) -> Mat<Q> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    fn check_same(&self, o: &Self, op: &'static str) -> Result<(), PolyError> {
        if self.shape() != o.shape() {
            return Err(PolyError::DimMismatch { op, left: self.shape(), right: o.shape() });
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, PolyError> {
        self.check_same(o, "add")?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).add(o.get(i, j))))
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self, PolyError> {
        self.check_same(o, "sub")?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).sub(o.get(i, j))))
    }

    pub fn neg(&self) -> Self {
        self.map(|p| p.neg())
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, PolyError> {
        if self.cols != o.rows {
            return Err(PolyError::DimMismatch { op: "mul", left: self.shape(), right: o.shape() });
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * o.cols + j;
                    out.data[idx] = out.data[idx].add(&a.mul(b));
                }
            }
        }
        Ok(out)
    }

    /// Panicking product for internally consistent shapes.
    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("matrix product dimensions")
    }

    pub fn add(&self, o: &Self) -> Self {
        self.try_add(o).expect("matrix sum dimensions")
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.try_sub(o).expect("matrix difference dimensions")
    }

    /// Rows `r0..r1`.
    pub fn row_range(&self, r0: usize, r1: usize) -> Self {
        Self::from_fn(r1 - r0, self.cols, |i, j| self.get(r0 + i, j).clone())
    }

    pub fn col_range(&self, c0: usize, c1: usize) -> Self {
        Self::from_fn(self.rows, c1 - c0, |i, j| self.get(i, c0 + j).clone())
    }

    pub fn vstack(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.cols, "vstack column count");
        let mut data = self.data.clone();
        data.extend(o.data.iter().cloned());
        Self { rows: self.rows + o.rows, cols: self.cols, data }
    }

    pub fn hstack(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows, "hstack row count");
        Self::from_fn(self.rows, self.cols + o.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                o.get(i, j - self.cols).clone()
            }
        })
    }

    /// Writes `block` with its top-left corner at `(r, c)`.
    pub fn set_block(&mut self, r: usize, c: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(r + i, c + j, block.get(i, j).clone());
            }
        }
    }
}

impl<C: Coeff> PolyMat1<C> {
    pub fn constant(rows: usize, cols: usize, vals: &[C]) -> Self {
        Self::from_fn(rows, cols, |i, j| Poly1::constant(vals[i * cols + j].clone()))
    }

    pub fn scale(&self, k: &C) -> Self {
        self.map(|p| p.scale(k))
    }

    pub fn eval(&self, x: &C) -> Vec<Vec<C>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).eval(x)).collect()).collect()
    }

    pub fn eval_f64(&self, x: f64) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval_f64(x))
    }

    pub fn derivative(&self) -> Self {
        self.map(|p| p.derivative())
    }

    pub fn integrate(&self, lower: &C, upper: &C) -> Vec<Vec<C>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).integrate(lower, upper)).collect())
            .collect()
    }

    /// Lifts to a kernel depending on `s` only.
    pub fn in_s(&self) -> PolyMat2<C> {
        self.map(Poly2::from_s)
    }

    /// Lifts to a kernel depending on `th` only.
    pub fn in_theta(&self) -> PolyMat2<C> {
        self.map(Poly2::from_theta)
    }

    /// Entrywise substitution of the argument by one of the shift expressions.
    pub fn subst_shift(&self, expr: &Shift<C>) -> PolyMat2<C> {
        let (c0, cs, ct) = expr.affine();
        self.map(|p| p.compose_affine(&c0, &cs, &ct))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.data.iter().map(|p| p.max_abs_coeff()).fold(0.0, f64::max)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D + Copy) -> PolyMat1<D> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|p| p.map(f)).collect() }
    }
}

impl<C: Coeff> PolyMat2<C> {
    pub fn scale(&self, k: &C) -> Self {
        self.map(|p| p.scale(k))
    }

    pub fn eval(&self, s: &C, th: &C) -> Vec<Vec<C>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).eval(s, th)).collect()).collect()
    }

    pub fn eval_f64(&self, s: f64, th: f64) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval_f64(s, th))
    }

    /// Entrywise `(s, th) -> (th, s)` without transposing.
    pub fn swap_vars(&self) -> Self {
        self.map(|p| p.swap())
    }

    pub fn integrate(&self, var: Var, lower: &Bound<C>, upper: &Bound<C>) -> Result<Self, PolyError> {
        let own = match var {
            Var::S => Bound::S,
            Var::Theta => Bound::Theta,
        };
        if *lower == own || *upper == own {
            return Err(PolyError::MalformedBound(format!(
                "integration variable {var:?} cannot appear as its own limit"
            )));
        }
        Ok(self.map(|p| p.integrate(var, lower, upper)))
    }

    /// `int_lower^upper P(s, b) Q(b, th) db` as a matrix product.
    pub fn integrate_product(
        p: &Self,
        q: &Self,
        lower: &Bound<C>,
        upper: &Bound<C>,
    ) -> Result<Self, PolyError> {
        if p.cols != q.rows {
            return Err(PolyError::DimMismatch {
                op: "integrate_product",
                left: p.shape(),
                right: q.shape(),
            });
        }
        let mut out = Self::zeros(p.rows, q.cols);
        for i in 0..p.rows {
            for k in 0..p.cols {
                let a = p.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..q.cols {
                    let b = q.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * q.cols + j;
                    out.data[idx] =
                        &out.data[idx] + &Poly2::integrate_product(a, b, lower, upper);
                }
            }
        }
        Ok(out)
    }

    /// `Some` when no entry depends on `th`.
    pub fn as_mat_in_s(&self) -> Option<PolyMat1<C>> {
        let data: Option<Vec<_>> = self.data.iter().map(|p| p.as_poly_in_s()).collect();
        data.map(|d| Mat { rows: self.rows, cols: self.cols, data: d })
    }

    pub fn substitute(&self, var: Var, value: &Bound<C>) -> Self {
        self.map(|p| p.substitute(var, value))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.data.iter().map(|p| p.max_abs_coeff()).fold(0.0, f64::max)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D + Copy) -> PolyMat2<D> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|p| p.map(f)).collect() }
    }

    /// Largest `(deg_s, deg_th)` over the entries; `None` if all zero.
    pub fn degrees(&self) -> Option<(usize, usize)> {
        let mut out: Option<(usize, usize)> = None;
        for p in &self.data {
            if let (Some(a), Some(b)) = (p.deg_s(), p.deg_theta()) {
                out = Some(match out {
                    None => (a, b),
                    Some((x, y)) => (x.max(a), y.max(b)),
                });
            }
        }
        out
    }
}

/// Argument substitutions `s - a`, `s - th`, `th - s`, `b - s`.
#[derive(Clone, Debug, PartialEq)]
pub enum Shift<C> {
    SMinus(C),
    SMinusTheta,
    ThetaMinusS,
    MinusS(C),
}

impl<C: Coeff> Shift<C> {
    fn affine(&self) -> (C, C, C) {
        match self {
            Shift::SMinus(a) => (-a.clone(), C::one(), C::zero()),
            Shift::SMinusTheta => (C::zero(), C::one(), -C::one()),
            Shift::ThetaMinusS => (C::zero(), -C::one(), C::one()),
            Shift::MinusS(b) => (b.clone(), -C::one(), C::zero()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Rational};

    type P2 = Poly2<Rational>;

    #[test]
    fn unipotent_product() {
        let s = P2::monomial(1, 0, int(1));
        let th = P2::monomial(0, 1, int(1));
        let one = P2::constant(int(1));
        let m1 = Mat::from_vec(2, 2, vec![one.clone(), s.clone(), P2::zero(), one.clone()]);
        let m2 = Mat::from_vec(2, 2, vec![one.clone(), th.clone(), P2::zero(), one.clone()]);
        let prod = m1.mul(&m2);
        assert_eq!(*prod.get(0, 1), &s + &th);
        assert_eq!(*prod.get(0, 0), one);
        assert!(prod.get(1, 0).is_zero());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a: PolyMat1<Rational> = Mat::zeros(2, 3);
        let b: PolyMat1<Rational> = Mat::zeros(2, 3);
        assert!(matches!(a.try_mul(&b), Err(PolyError::DimMismatch { .. })));
        assert!(a.try_add(&b).is_ok());
    }

    #[test]
    fn zero_times_anything() {
        let z: PolyMat1<Rational> = Mat::zeros(2, 2);
        let m = PolyMat1::constant(2, 2, &[int(1), int(2), int(3), int(4)]);
        assert!(z.mul(&m).is_zero());
    }

    #[test]
    fn own_variable_bound_rejected() {
        let m: PolyMat2<Rational> = Mat::identity(1);
        assert!(m.integrate(Var::Theta, &Bound::Theta, &Bound::S).is_err());
    }
}

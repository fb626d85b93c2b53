use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Coeff;

use super::poly2::Poly2;

/// Univariate polynomial, coefficients by ascending degree, trailing zeros
/// trimmed so that structural equality is value equality.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly1<C> {
    coeffs: Vec<C>,
}

impl<C: Coeff> Poly1<C> {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The polynomial `x`.
    pub fn var() -> Self {
        Self::from_coeffs(vec![C::zero(), C::one()])
    }

    pub fn monomial(degree: usize, c: C) -> Self {
        let mut v = vec![C::zero(); degree + 1];
        v[degree] = c;
        Self::from_coeffs(v)
    }

    pub fn from_coeffs(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &C) -> C {
        let mut acc = C::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    pub fn scale(&self, k: &C) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self::from_coeffs(self.coeffs.iter().map(|c| c.clone() * k.clone()).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * C::from_i64(k as i64))
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = Vec::with_capacity(self.coeffs.len() + 1);
        v.push(C::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            v.push(c.clone() / C::from_i64(k as i64 + 1));
        }
        Self::from_coeffs(v)
    }

    pub fn integrate(&self, lower: &C, upper: &C) -> C {
        let f = self.antiderivative();
        f.eval(upper) - f.eval(lower)
    }

    /// Substitutes `x -> c0 + cs*s + ct*th`.
    pub fn compose_affine(&self, c0: &C, cs: &C, ct: &C) -> Poly2<C> {
        let lin = Poly2::from_terms(&[
            (0, 0, c0.clone()),
            (1, 0, cs.clone()),
            (0, 1, ct.clone()),
        ]);
        let mut acc = Poly2::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &lin) + &Poly2::constant(c.clone());
        }
        acc
    }

    /// Substitutes `x -> c0 + c1*x`, staying univariate.
    pub fn shift_scale(&self, c0: &C, c1: &C) -> Self {
        let lin = Self::from_coeffs(vec![c0.clone(), c1.clone()]);
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &lin) + &Self::constant(c.clone());
        }
        acc
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly1<D> {
        Poly1::from_coeffs(self.coeffs.iter().map(f).collect())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }
}

impl<C: Coeff> Add for &Poly1<C> {
    type Output = Poly1<C>;
    fn add(self, rhs: Self) -> Poly1<C> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly1::from_coeffs((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<C: Coeff> Sub for &Poly1<C> {
    type Output = Poly1<C>;
    fn sub(self, rhs: Self) -> Poly1<C> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly1::from_coeffs((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<C: Coeff> Neg for &Poly1<C> {
    type Output = Poly1<C>;
    fn neg(self) -> Poly1<C> {
        Poly1::from_coeffs(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl<C: Coeff> Mul for &Poly1<C> {
    type Output = Poly1<C>;
    fn mul(self, rhs: Self) -> Poly1<C> {
        if self.is_zero() || rhs.is_zero() {
            return Poly1::zero();
        }
        let mut v = vec![C::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] = v[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly1::from_coeffs(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    fn p(v: &[i64]) -> Poly1<Rational> {
        Poly1::from_coeffs(v.iter().map(|&k| int(k)).collect())
    }

    #[test]
    fn canonical_trimming() {
        assert_eq!(p(&[1, 2, 0, 0]), p(&[1, 2]));
        assert!(p(&[0, 0]).is_zero());
        assert_eq!(p(&[0]).degree(), None);
    }

    #[test]
    fn eval_and_integrate() {
        // s^2 - 1 at 2
        assert_eq!(p(&[-1, 0, 1]).eval(&int(2)), int(3));
        // int_0^1 s(1-s) = 1/6
        assert_eq!(p(&[0, 1, -1]).integrate(&int(0), &int(1)), rat(1, 6));
    }

    #[test]
    fn multiply_adds_degrees() {
        let s = Poly1::<Rational>::var();
        assert_eq!(&s * &s, p(&[0, 0, 1]));
        assert!((&Poly1::zero() * &s).is_zero());
    }

    #[test]
    fn shift_matches_pointwise() {
        let q = p(&[3, -2, 5, 1]);
        let shifted = q.shift_scale(&int(-2), &int(3));
        for x in -3..4 {
            assert_eq!(shifted.eval(&int(x)), q.eval(&int(-2 + 3 * x)));
        }
    }
}

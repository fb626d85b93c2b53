use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Coeff;

use super::poly1::Poly1;

/// One of the two free variables of a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    S,
    Theta,
}

/// Integration limit: a constant endpoint or one of the free variables.
#[derive(Clone, Debug, PartialEq)]
pub enum Bound<C> {
    Const(C),
    S,
    Theta,
}

/// Bivariate polynomial in `(s, th)`. Dense grid, `c[i * nt + j]` is the
/// coefficient of `s^i th^j`; the last row and last column are never all
/// zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2<C> {
    ns: usize,
    nt: usize,
    c: Vec<C>,
}

impl<C: Coeff> Poly2<C> {
    pub fn zero() -> Self {
        Self { ns: 0, nt: 0, c: Vec::new() }
    }

    pub fn constant(c: C) -> Self {
        Self::from_grid(1, 1, vec![c])
    }

    pub fn monomial(i: usize, j: usize, c: C) -> Self {
        Self::from_terms(&[(i, j, c)])
    }

    pub fn from_terms(terms: &[(usize, usize, C)]) -> Self {
        let ns = terms.iter().map(|t| t.0 + 1).max().unwrap_or(0);
        let nt = terms.iter().map(|t| t.1 + 1).max().unwrap_or(0);
        let mut c = vec![C::zero(); ns * nt];
        for (i, j, v) in terms {
            c[i * nt + j] = c[i * nt + j].clone() + v.clone();
        }
        Self::from_grid(ns, nt, c)
    }

    /// Builds from a row-major `ns x nt` grid and canonicalizes.
    pub fn from_grid(ns: usize, nt: usize, c: Vec<C>) -> Self {
        assert_eq!(c.len(), ns * nt);
        let mut ms = 0;
        let mut mt = 0;
        for i in 0..ns {
            for j in 0..nt {
                if !c[i * nt + j].is_zero() {
                    ms = ms.max(i + 1);
                    mt = mt.max(j + 1);
                }
            }
        }
        if ms == ns && mt == nt {
            return Self { ns, nt, c };
        }
        let mut out = Vec::with_capacity(ms * mt);
        for i in 0..ms {
            for j in 0..mt {
                out.push(c[i * nt + j].clone());
            }
        }
        Self { ns: ms, nt: mt, c: out }
    }

    pub fn from_s(p: &Poly1<C>) -> Self {
        Self::from_grid(p.coeffs().len(), 1.min(p.coeffs().len()), p.coeffs().to_vec())
    }

    pub fn from_theta(p: &Poly1<C>) -> Self {
        let n = p.coeffs().len();
        Self::from_grid(1.min(n), n, p.coeffs().to_vec())
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Number of coefficient rows (`deg_s + 1`, 0 for the zero polynomial).
    pub fn s_len(&self) -> usize {
        self.ns
    }

    pub fn theta_len(&self) -> usize {
        self.nt
    }

    pub fn deg_s(&self) -> Option<usize> {
        self.ns.checked_sub(1)
    }

    pub fn deg_theta(&self) -> Option<usize> {
        self.nt.checked_sub(1)
    }

    pub fn coeff(&self, i: usize, j: usize) -> C {
        if i < self.ns && j < self.nt {
            self.c[i * self.nt + j].clone()
        } else {
            C::zero()
        }
    }

    pub fn coeff_ref(&self, i: usize, j: usize) -> Option<&C> {
        (i < self.ns && j < self.nt).then(|| &self.c[i * self.nt + j])
    }

    /// Iterates the nonzero terms as `(deg_s, deg_theta, coeff)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &C)> {
        let nt = self.nt;
        self.c
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(move |(k, v)| (k / nt, k % nt, v))
    }

    /// `Some` when the polynomial does not depend on `th`.
    pub fn as_poly_in_s(&self) -> Option<Poly1<C>> {
        (self.nt <= 1).then(|| Poly1::from_coeffs(self.c.clone()))
    }

    pub fn as_poly_in_theta(&self) -> Option<Poly1<C>> {
        (self.ns <= 1).then(|| Poly1::from_coeffs(self.c.clone()))
    }

    pub fn eval(&self, s: &C, th: &C) -> C {
        let mut acc = C::zero();
        for i in (0..self.ns).rev() {
            let mut row = C::zero();
            for j in (0..self.nt).rev() {
                row = row * th.clone() + self.c[i * self.nt + j].clone();
            }
            acc = acc * s.clone() + row;
        }
        acc
    }

    pub fn eval_f64(&self, s: f64, th: f64) -> f64 {
        let mut acc = 0.0;
        for i in (0..self.ns).rev() {
            let mut row = 0.0;
            for j in (0..self.nt).rev() {
                row = row * th + self.c[i * self.nt + j].to_f64();
            }
            acc = acc * s + row;
        }
        acc
    }

    pub fn scale(&self, k: &C) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self::from_grid(self.ns, self.nt, self.c.iter().map(|v| v.clone() * k.clone()).collect())
    }

    /// Exchanges the roles of `s` and `th`.
    pub fn swap(&self) -> Self {
        let mut out = vec![C::zero(); self.ns * self.nt];
        for i in 0..self.ns {
            for j in 0..self.nt {
                out[j * self.ns + i] = self.c[i * self.nt + j].clone();
            }
        }
        Self { ns: self.nt, nt: self.ns, c: out }
    }

    /// Antiderivative in `var`, vanishing where `var = 0`.
    pub fn antiderivative(&self, var: Var) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        match var {
            Var::Theta => {
                let nt = self.nt + 1;
                let mut out = vec![C::zero(); self.ns * nt];
                for i in 0..self.ns {
                    for j in 0..self.nt {
                        out[i * nt + j + 1] =
                            self.c[i * self.nt + j].clone() / C::from_i64(j as i64 + 1);
                    }
                }
                Self::from_grid(self.ns, nt, out)
            }
            Var::S => self.swap().antiderivative(Var::Theta).swap(),
        }
    }

    pub fn derivative(&self, var: Var) -> Self {
        match var {
            Var::Theta => {
                if self.nt <= 1 {
                    return Self::zero();
                }
                let nt = self.nt - 1;
                let mut out = vec![C::zero(); self.ns * nt];
                for i in 0..self.ns {
                    for j in 1..self.nt {
                        out[i * nt + j - 1] =
                            self.c[i * self.nt + j].clone() * C::from_i64(j as i64);
                    }
                }
                Self::from_grid(self.ns, nt, out)
            }
            Var::S => self.swap().derivative(Var::Theta).swap(),
        }
    }

    /// Replaces `var` by a bound (a constant or either variable).
    pub fn substitute(&self, var: Var, value: &Bound<C>) -> Self {
        if let Var::S = var {
            let swapped_value = match value {
                Bound::Const(c) => Bound::Const(c.clone()),
                Bound::S => Bound::Theta,
                Bound::Theta => Bound::S,
            };
            return self.swap().substitute(Var::Theta, &swapped_value).swap();
        }
        match value {
            Bound::Theta => self.clone(),
            Bound::Const(x) => {
                let mut out = Vec::with_capacity(self.ns);
                for i in 0..self.ns {
                    let mut row = C::zero();
                    for j in (0..self.nt).rev() {
                        row = row * x.clone() + self.c[i * self.nt + j].clone();
                    }
                    out.push(row);
                }
                Self::from_grid(self.ns, 1.min(self.ns), out)
            }
            Bound::S => {
                if self.is_zero() {
                    return Self::zero();
                }
                let n = self.ns + self.nt - 1;
                let mut out = vec![C::zero(); n];
                for i in 0..self.ns {
                    for j in 0..self.nt {
                        out[i + j] = out[i + j].clone() + self.c[i * self.nt + j].clone();
                    }
                }
                Self::from_grid(n, 1, out)
            }
        }
    }

    /// Definite integral over `var` between two bounds. Integrating a
    /// variable up to itself is rejected by the caller.
    pub fn integrate(&self, var: Var, lower: &Bound<C>, upper: &Bound<C>) -> Self {
        let f = self.antiderivative(var);
        &f.substitute(var, upper) - &f.substitute(var, lower)
    }

    /// `int_{lower}^{upper} p(s, b) q(b, th) db` with the bounds drawn from
    /// constants, `s`, and `th`.
    pub fn integrate_product(p: &Self, q: &Self, lower: &Bound<C>, upper: &Bound<C>) -> Self {
        if p.is_zero() || q.is_zero() {
            return Self::zero();
        }
        let nb = p.nt + q.ns - 1;
        let mut total = Self::zero();
        for l in 0..q.nt {
            // W(s, b) = sum_i s^i sum_m (p_i * q_.l)_m b^m
            let mut grid = vec![C::zero(); p.ns * nb];
            let mut any = false;
            for i in 0..p.ns {
                for j in 0..p.nt {
                    let a = &p.c[i * p.nt + j];
                    if a.is_zero() {
                        continue;
                    }
                    for k in 0..q.ns {
                        let b = &q.c[k * q.nt + l];
                        if b.is_zero() {
                            continue;
                        }
                        any = true;
                        let idx = i * nb + j + k;
                        grid[idx] = grid[idx].clone() + a.clone() * b.clone();
                    }
                }
            }
            if !any {
                continue;
            }
            let w = Self::from_grid(p.ns, nb, grid);
            let part = w.integrate(Var::Theta, lower, upper);
            let shifted = &part * &Self::monomial(0, l, C::one());
            total = &total + &shifted;
        }
        total
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly2<D> {
        Poly2::from_grid(self.ns, self.nt, self.c.iter().map(f).collect())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.c.iter().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C, C) -> C) -> Self {
        let ns = self.ns.max(rhs.ns);
        let nt = self.nt.max(rhs.nt);
        let mut out = Vec::with_capacity(ns * nt);
        for i in 0..ns {
            for j in 0..nt {
                out.push(f(self.coeff(i, j), rhs.coeff(i, j)));
            }
        }
        Self::from_grid(ns, nt, out)
    }
}

impl<C: Coeff> Add for &Poly2<C> {
    type Output = Poly2<C>;
    fn add(self, rhs: Self) -> Poly2<C> {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<C: Coeff> Sub for &Poly2<C> {
    type Output = Poly2<C>;
    fn sub(self, rhs: Self) -> Poly2<C> {
        if rhs.is_zero() {
            return self.clone();
        }
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<C: Coeff> Neg for &Poly2<C> {
    type Output = Poly2<C>;
    fn neg(self) -> Poly2<C> {
        Poly2 { ns: self.ns, nt: self.nt, c: self.c.iter().map(|v| -v.clone()).collect() }
    }
}

impl<C: Coeff> Mul for &Poly2<C> {
    type Output = Poly2<C>;
    fn mul(self, rhs: Self) -> Poly2<C> {
        if self.is_zero() || rhs.is_zero() {
            return Poly2::zero();
        }
        let ns = self.ns + rhs.ns - 1;
        let nt = self.nt + rhs.nt - 1;
        let mut out = vec![C::zero(); ns * nt];
        for i in 0..self.ns {
            for j in 0..self.nt {
                let a = &self.c[i * self.nt + j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..rhs.ns {
                    for l in 0..rhs.nt {
                        let b = &rhs.c[k * rhs.nt + l];
                        if b.is_zero() {
                            continue;
                        }
                        let idx = (i + k) * nt + j + l;
                        out[idx] = out[idx].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        Poly2::from_grid(ns, nt, out)
    }
}

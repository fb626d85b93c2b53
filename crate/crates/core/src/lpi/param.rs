//! Positive PI operators `P = Zop* M Zop + eps I` with `M` positive semidefinite.

use crate::pi_ops::PiOperator;
use crate::polyalg::{Mat, Poly1, Poly2, PolyMat1, PolyMat2};
use crate::scalar::{Coeff, Rational};

use super::LpiError;

/// Monomial content of `Zop`: the multiplier block uses `u(s)^k` for
/// `k <= degree`, and both kernel blocks use `u(s)^i u(th)^j` for
/// `i <= kernel_s_degree`, `j <= kernel_theta_degree`, where
/// `u(x) = (x - a) / (b - a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Basis {
    pub degree: usize,
    pub kernel_s_degree: usize,
    pub kernel_theta_degree: usize,
}

impl Basis {
    pub fn new(degree: usize, kernel_s_degree: usize, kernel_theta_degree: usize) -> Self {
        Self { degree, kernel_s_degree, kernel_theta_degree }
    }

    /// Basis used for the Lyapunov operator at degree `d`: kernels depend
    /// on the integration variable only, so every block of `Zop` has
    /// `d + 1` rows per state component.
    pub fn for_degree(d: usize) -> Self {
        Self::new(d, 0, d)
    }

    /// Componentwise maximum.
    pub fn max(self, o: Self) -> Self {
        Self::new(
            self.degree.max(o.degree),
            self.kernel_s_degree.max(o.kernel_s_degree),
            self.kernel_theta_degree.max(o.kernel_theta_degree),
        )
    }

    /// One more monomial degree in slot 0 (multiplier), 1 (kernel in `s`)
    /// or 2 (kernel in `th`).
    pub fn grow(self, slot: usize) -> Self {
        match slot {
            0 => Self::new(self.degree + 1, self.kernel_s_degree, self.kernel_theta_degree),
            1 => Self::new(self.degree, self.kernel_s_degree + 1, self.kernel_theta_degree),
            _ => Self::new(self.degree, self.kernel_s_degree, self.kernel_theta_degree + 1),
        }
    }

    pub fn kernel_len(&self) -> usize {
        (self.kernel_s_degree + 1) * (self.kernel_theta_degree + 1)
    }

    pub fn contains(&self, o: &Self) -> bool {
        self.max(*o) == *self
    }
}

/// Parameterization of positive operators on `L2[a,b]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivePiParam {
    pub dim: usize,
    pub basis: Basis,
    /// Components that receive multiplier rows, increasing.
    pub multiplier_components: Vec<usize>,
    /// Components whose lower-kernel monomials carry the factor `u(th)`.
    pub lower_vanishing: Vec<usize>,
    /// Components whose upper-kernel monomials carry the factor `1 - u(th)`.
    pub upper_vanishing: Vec<usize>,
    pub a: Rational,
    pub b: Rational,
}

impl PositivePiParam {
    pub fn new(dim: usize, basis: Basis, a: Rational, b: Rational) -> Self {
        Self {
            dim,
            basis,
            multiplier_components: (0..dim).collect(),
            lower_vanishing: Vec::new(),
            upper_vanishing: Vec::new(),
            a,
            b,
        }
    }

    /// Restricts the multiplier block to the given components.
    pub fn with_multiplier_components(mut self, comps: Vec<usize>) -> Self {
        self.multiplier_components = comps;
        self
    }

    /// Kernel monomials vanishing at `th = a` (lower block) or `th = b`
    /// (upper block) for the given components.
    pub fn with_vanishing_kernels(mut self, lower: Vec<usize>, upper: Vec<usize>) -> Self {
        self.lower_vanishing = lower;
        self.upper_vanishing = upper;
        self
    }

    /// Rows of the multiplier block.
    pub fn multiplier_size(&self) -> usize {
        self.multiplier_components.len() * (self.basis.degree + 1)
    }

    /// Rows of each kernel block.
    pub fn kernel_size(&self) -> usize {
        self.dim * self.basis.kernel_len()
    }

    /// Side length of `M`.
    pub fn block_size(&self) -> usize {
        self.multiplier_size() + 2 * self.kernel_size()
    }

    /// The operator `Zop` of shape `block_size x dim`.
    pub fn zop<C: Coeff>(&self) -> PiOperator<C> {
        let (a, b) = (C::from_rational(&self.a), C::from_rational(&self.b));
        let len = b.clone() - a.clone();
        let u = Poly1::from_coeffs(vec![-(a.clone() / len.clone()), C::one() / len]);
        let top = self.basis.degree.max(self.basis.kernel_s_degree).max(self.basis.kernel_theta_degree);
        let mut powers = vec![Poly1::one()];
        for k in 0..top {
            let next = &powers[k] * &u;
            powers.push(next);
        }
        let m = self.dim;
        let (k0, k1) = (self.multiplier_size(), self.kernel_size());
        let n = self.block_size();
        let mut r0: PolyMat1<C> = Mat::zeros(n, m);
        let mut r1: PolyMat2<C> = Mat::zeros(n, m);
        let mut r2: PolyMat2<C> = Mat::zeros(n, m);
        let mc = &self.multiplier_components;
        for (k, p) in powers.iter().take(self.basis.degree + 1).enumerate() {
            for (idx, &c) in mc.iter().enumerate() {
                r0.set(k * mc.len() + idx, c, p.clone());
            }
        }
        let u_th = Poly2::from_theta(&u);
        let one_minus_u_th = &Poly2::constant(C::one()) - &u_th;
        let mut idx = 0;
        for i in 0..=self.basis.kernel_s_degree {
            for j in 0..=self.basis.kernel_theta_degree {
                let z = &Poly2::from_s(&powers[i]) * &Poly2::from_theta(&powers[j]);
                for c in 0..m {
                    let lower = if self.lower_vanishing.contains(&c) { &z * &u_th } else { z.clone() };
                    let upper = if self.upper_vanishing.contains(&c) { &z * &one_minus_u_th } else { z.clone() };
                    r1.set(k0 + idx * m + c, c, lower);
                    r2.set(k0 + k1 + idx * m + c, c, upper);
                }
                idx += 1;
            }
        }
        PiOperator::new(a, b, r0, r1, r2).expect("shapes agree by construction")
    }
}

/// `Zop* M Zop + eps I` for a symmetric `M` given row by row.
pub fn realize_positive<C: Coeff>(
    param: &PositivePiParam,
    m: &[Vec<C>],
    eps: &C,
) -> Result<PiOperator<C>, LpiError> {
    let n = param.block_size();
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(LpiError::SizeMismatch { expected: n, found: m.len() });
    }
    for i in 0..n {
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(LpiError::NotSymmetric);
            }
        }
    }
    let zop = param.zop::<C>();
    let (a, b) = (zop.a().clone(), zop.b().clone());
    let flat: Vec<C> = m.iter().flat_map(|r| r.iter().cloned()).collect();
    let mult = PiOperator::multiplier(a.clone(), b.clone(), PolyMat1::constant(n, n, &flat));
    let p = zop.adjoint().compose(&mult.compose(&zop)?)?;
    let ridge = PiOperator::multiplier(a, b, Mat::identity(param.dim)).scale(eps);
    Ok(p.add(&ridge)?)
}

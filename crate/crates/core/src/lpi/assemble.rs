//! Coefficient matching for `-(T* R A + A* R T) = H` with
//! `R = Zop* M_R Zop + alpha I` and `H = Zop'* M_H Zop' + delta T* T`.

use std::collections::BTreeMap;

use crate::conversion::PieSystem;
use crate::pi_ops::RatOperator;
use crate::scalar::{rational_from_f64, rational_to_f64, Rational};

use super::param::{Basis, PositivePiParam};
use super::sdp::{SdpConstraint, SdpEntry, SdpProblem};
use super::{refine, LpiError};
use num_traits::Zero;

/// Identifies one polynomial coefficient of a self-adjoint operator: the
/// multiplier (`kind` 0, upper triangle only) or the lower kernel (`kind` 1),
/// matrix entry `(row, col)`, and the monomial `s^ds th^dt`.
pub type CoeffKey = (u8, usize, usize, usize, usize);

/// Settings of the stability test.
#[derive(Debug, Clone, PartialEq)]
pub struct LpiOptions {
    pub degree: usize,
    pub alpha: f64,
    pub delta: f64,
    /// Basis of `Zop` for `R`; derived from `degree` when absent.
    pub r_basis: Option<Basis>,
    /// Basis of `Zop'` for `H`; when absent, the bases of
    /// [`default_h_bases`] are tried in turn.
    pub h_basis: Option<Basis>,
    /// The backend solves for Gram matrices whose eigenvalues may dip to
    /// `-cone_slack`. The Lyapunov SDP usually has no strictly feasible
    /// point, and this slack gives the solver an interior. It must stay
    /// below the eigenvalue tolerance of verification.
    pub cone_slack: f64,
}

impl LpiOptions {
    pub fn new(degree: usize) -> Self {
        Self { degree, alpha: 1e-4, delta: 1e-4, r_basis: None, h_basis: None, cone_slack: 5e-9 }
    }

    pub fn with_margins(mut self, alpha: f64, delta: f64) -> Self {
        self.alpha = alpha;
        self.delta = delta;
        self
    }
}

/// An assembled stability test: the SDP with block 0 holding `M_R` and
/// block 1 holding `M_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpiProblem {
    pub sdp: SdpProblem,
    pub r_param: PositivePiParam,
    pub h_param: PositivePiParam,
    pub alpha: f64,
    pub delta: f64,
    pub degree: usize,
    pub cone_slack: f64,
}

/// Monomial coefficients of a self-adjoint operator keyed by [`CoeffKey`].
/// The upper kernel is the mirror of the lower one and is not listed.
pub fn coefficients(op: &RatOperator) -> BTreeMap<CoeffKey, Rational> {
    let mut out = BTreeMap::new();
    let (p, q) = op.shape();
    for r in 0..p {
        for c in 0..q {
            if r <= c {
                for (k, v) in op.r0().get(r, c).coeffs().iter().enumerate() {
                    if !v.is_zero() {
                        out.insert((0, r, c, k, 0), v.clone());
                    }
                }
            }
            let k = op.r1().get(r, c);
            for i in 0..k.s_len() {
                for j in 0..k.theta_len() {
                    let v = k.coeff(i, j);
                    if !v.is_zero() {
                        out.insert((1, r, c, i, j), v);
                    }
                }
            }
        }
    }
    out
}

/// `P + P*`.
fn symmetrize(p: &RatOperator) -> Result<RatOperator, LpiError> {
    Ok(p.add(&p.adjoint())?)
}

/// Coefficient columns of the map `M -> Zop* M Zop` composed on both sides,
/// i.e. of `sum_ij M_ij (Z_i L)* (Z_j Rt)` plus its adjoint, one entry per
/// upper-triangle position of `M`.
fn gram_columns(
    zop: &RatOperator,
    left: &RatOperator,
    right: &RatOperator,
) -> Result<Vec<((usize, usize), BTreeMap<CoeffKey, Rational>)>, LpiError> {
    let n = zop.out_dim();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let zi = zop.rows(i, i + 1);
        xs.push(zi.compose(left)?.adjoint());
        ys.push(zi.compose(right)?);
    }
    let mut cols = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            let mut g = xs[i].compose(&ys[j])?;
            if i != j {
                g = g.add(&xs[j].compose(&ys[i])?)?;
            }
            let coeffs = coefficients(&symmetrize(&g)?);
            if !coeffs.is_empty() {
                cols.push(((i, j), coeffs));
            }
        }
    }
    Ok(cols)
}

/// Largest monomial degrees present in a set of coefficients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct DegreeProfile {
    multiplier: Option<usize>,
    kernel_s: Option<usize>,
    kernel_theta: Option<usize>,
}

impl DegreeProfile {
    fn extend<'a>(&mut self, keys: impl Iterator<Item = &'a CoeffKey>) {
        for &(kind, _, _, i, j) in keys {
            if kind == 0 {
                self.multiplier = self.multiplier.max(Some(i));
            } else {
                self.kernel_s = self.kernel_s.max(Some(i));
                self.kernel_theta = self.kernel_theta.max(Some(j));
            }
        }
    }

    /// The first slot (0 multiplier, 1 kernel in `s`, 2 kernel in `th`)
    /// where `have` falls short of `self`, with a description.
    fn uncovered(&self, have: &Self) -> Option<(usize, String)> {
        let slots = [
            (self.multiplier, have.multiplier, "multiplier degree"),
            (self.kernel_s, have.kernel_s, "kernel degree in s"),
            (self.kernel_theta, have.kernel_theta, "kernel degree in th"),
        ];
        slots
            .into_iter()
            .enumerate()
            .find(|(_, (need, got, _))| need.is_some() && need > got)
            .map(|(k, (need, _, what))| (k, format!("{what} {}", need.unwrap_or(0))))
    }
}

fn profile(cols: &[((usize, usize), BTreeMap<CoeffKey, Rational>)]) -> DegreeProfile {
    let mut p = DegreeProfile::default();
    for (_, c) in cols {
        p.extend(c.keys());
    }
    p
}

/// Where every admissible `H` is structurally zero, read off the coefficient
/// maps it must match.
struct HStructure {
    /// Components whose multiplier row or column can be nonzero.
    multiplier: Vec<usize>,
    /// Components whose lower kernel column vanishes at `th = a`.
    lower_vanishing: Vec<usize>,
    /// Components whose upper kernel column vanishes at `th = b`.
    upper_vanishing: Vec<usize>,
}

impl HStructure {
    fn from_maps<'a>(
        maps: impl Iterator<Item = &'a BTreeMap<CoeffKey, Rational>> + Clone,
        dim: usize,
        a: &Rational,
        b: &Rational,
    ) -> Self {
        let multiplier = (0..dim)
            .filter(|&c| maps.clone().any(|m| m.keys().any(|&(kind, r, col, _, _)| kind == 0 && (r == c || col == c))))
            .collect::<Vec<_>>();
        // Lower kernel entry (r, c) at th = a, as a polynomial in s.
        let lower_at_a = |m: &BTreeMap<CoeffKey, Rational>, c: usize| {
            let mut acc: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
            for (&(kind, r, col, i, j), v) in m {
                if kind == 1 && col == c {
                    *acc.entry((r, i)).or_insert_with(Rational::zero) += v * pow(a, j);
                }
            }
            acc.values().all(|v| v.is_zero())
        };
        // The upper kernel at (s, b) is the transpose of the lower kernel
        // at (b, s), so its column c is row c of the lower kernel at s = b.
        let upper_at_b = |m: &BTreeMap<CoeffKey, Rational>, c: usize| {
            let mut acc: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
            for (&(kind, r, col, i, j), v) in m {
                if kind == 1 && r == c {
                    *acc.entry((col, j)).or_insert_with(Rational::zero) += v * pow(b, i);
                }
            }
            acc.values().all(|v| v.is_zero())
        };
        let free = |c: &usize| !multiplier.contains(c);
        let lower_vanishing = (0..dim).filter(|c| free(c) && maps.clone().all(|m| lower_at_a(m, *c))).collect();
        let upper_vanishing = (0..dim).filter(|c| free(c) && maps.clone().all(|m| upper_at_b(m, *c))).collect();
        Self { multiplier, lower_vanishing, upper_vanishing }
    }
}

fn pow(x: &Rational, k: usize) -> Rational {
    (0..k).fold(Rational::from_integer(1.into()), |acc, _| acc * x)
}

/// Gram columns of `Zop'* M Zop'` for an `H` basis.
fn h_columns(
    pie: &PieSystem,
    basis: Basis,
    structure: &HStructure,
) -> Result<(PositivePiParam, Vec<((usize, usize), BTreeMap<CoeffKey, Rational>)>), LpiError> {
    let t = &pie.t;
    let param = PositivePiParam::new(t.out_dim(), basis, t.a().clone(), t.b().clone())
        .with_multiplier_components(structure.multiplier.clone())
        .with_vanishing_kernels(structure.lower_vanishing.clone(), structure.upper_vanishing.clone());
    let zop = param.zop::<Rational>();
    let id = RatOperator::identity(t.a().clone(), t.b().clone(), t.out_dim());
    // (Z_i)* Z_j + (Z_j)* Z_i counts the symmetric pair twice.
    let half = Rational::new(1.into(), 2.into());
    let cols = gram_columns(&zop, &id, &id)?
        .into_iter()
        .map(|(ij, c)| (ij, c.into_iter().map(|(k, v)| (k, v * &half)).collect()))
        .collect();
    Ok((param, cols))
}

/// Largest number of `H` basis enlargements tried before giving up.
const MAX_H_GROWTH: usize = 12;

/// Relative size below which an equality is treated as implied by others.
pub(crate) const DEPENDENCE_TOLERANCE: f64 = 1e-9;

/// Builds the SDP whose feasibility certifies exponential stability.
pub fn assemble_lpi(pie: &PieSystem, opts: &LpiOptions) -> Result<LpiProblem, LpiError> {
    match opts.h_basis {
        Some(b) => assemble_with_h(pie, opts, b, false),
        None => assemble_with_h(pie, opts, default_h_bases(opts.degree)[0], true),
    }
}

/// Starting `H` bases, in the order they are tried when none is given.
/// Each is enlarged where needed to cover the monomials of the identity.
pub fn default_h_bases(degree: usize) -> Vec<Basis> {
    let m = degree + 3;
    vec![Basis::new(m, 2, m), Basis::new(m, 3, m), Basis::new(m - 1, 2, m - 1), Basis::new(m + 1, 2, m + 1)]
}

/// Builds the SDP for a given starting `H` basis. With `grow`, the basis is
/// enlarged one slot at a time until it covers every monomial; otherwise an
/// uncovered monomial is an error.
pub(crate) fn assemble_with_h(
    pie: &PieSystem,
    opts: &LpiOptions,
    h_start: Basis,
    grow: bool,
) -> Result<LpiProblem, LpiError> {
    let slack_ok = opts.cone_slack >= 0.0 && opts.cone_slack < -super::EIGENVALUE_TOLERANCE;
    if !(opts.alpha > 0.0 && opts.delta > 0.0 && opts.alpha.is_finite() && opts.delta.is_finite() && slack_ok) {
        return Err(LpiError::BadMargin);
    }
    let (t, a) = (&pie.t, &pie.a);
    let n = t.out_dim();
    let r_basis = opts.r_basis.unwrap_or_else(|| Basis::for_degree(opts.degree));
    let r_param = PositivePiParam::new(n, r_basis, t.a().clone(), t.b().clone());
    let zop = r_param.zop::<Rational>();

    // -(T* Zop* M Zop A + A* Zop* M Zop T)
    let r_cols: Vec<_> = gram_columns(&zop, t, a)?
        .into_iter()
        .map(|(ij, c)| (ij, c.into_iter().map(|(k, v)| (k, -v)).collect::<BTreeMap<_, _>>()))
        .collect();

    // delta T*T + alpha (T*A + A*T)
    let (alpha, delta) = (rational_from_f64(opts.alpha), rational_from_f64(opts.delta));
    let tt = t.adjoint().compose(t)?;
    let ta = symmetrize(&t.adjoint().compose(a)?)?;
    let rhs_op = tt.scale(&delta).add(&ta.scale(&alpha))?;
    let rhs = coefficients(&rhs_op);

    let mut needed = DegreeProfile::default();
    for (_, c) in &r_cols {
        needed.extend(c.keys());
    }
    needed.extend(rhs.keys());

    let structure = HStructure::from_maps(r_cols.iter().map(|(_, c)| c).chain(std::iter::once(&rhs)), n, t.a(), t.b());
    let mut basis = h_start;
    let mut tries = 0;
    let (h_param, h_cols) = loop {
        let (p, cols) = h_columns(pie, basis, &structure)?;
        match needed.uncovered(&profile(&cols)) {
            None => break (p, cols),
            Some((_, missing)) if !grow || tries == MAX_H_GROWTH => {
                return Err(LpiError::DegreeTooSmall { monomial: missing });
            }
            Some((slot, _)) => {
                basis = basis.grow(slot);
                tries += 1;
            }
        }
    };

    // One equality per coefficient key.
    let mut rows: BTreeMap<CoeffKey, Vec<SdpEntry>> = BTreeMap::new();
    let entry = |block: usize, (i, j): (usize, usize), v: &Rational| {
        // The column coefficient multiplies M_ij; a symmetric SDPA entry
        // contributes twice off the diagonal.
        let v = rational_to_f64(v);
        SdpEntry { block, i, j, value: if i == j { v } else { v / 2.0 } }
    };
    for (ij, col) in &r_cols {
        for (k, v) in col {
            rows.entry(*k).or_default().push(entry(0, *ij, v));
        }
    }
    for (ij, col) in &h_cols {
        for (k, v) in col {
            rows.entry(*k).or_default().push(entry(1, *ij, &-v.clone()));
        }
    }
    let mut constraints = Vec::with_capacity(rows.len());
    for (k, entries) in rows {
        let c = rhs.get(&k).map(rational_to_f64).unwrap_or(0.0);
        let row = SdpConstraint::new(entries, c);
        if row.entries.is_empty() {
            if c != 0.0 {
                return Err(LpiError::DegreeTooSmall { monomial: describe_key(&k) });
            }
            continue;
        }
        constraints.push(row);
    }
    let sdp = SdpProblem::new(vec![r_param.block_size(), h_param.block_size()], constraints)?;
    let sdp = refine::drop_dependent_rows(&sdp, DEPENDENCE_TOLERANCE);
    Ok(LpiProblem { sdp, r_param, h_param, alpha: opts.alpha, delta: opts.delta, degree: opts.degree, cone_slack: opts.cone_slack })
}

/// Human-readable name of a coefficient.
pub fn describe_key(k: &CoeffKey) -> String {
    let (kind, r, c, i, j) = *k;
    if kind == 0 {
        format!("s^{i} in multiplier entry ({}, {})", r + 1, c + 1)
    } else {
        format!("s^{i} th^{j} in kernel entry ({}, {})", r + 1, c + 1)
    }
}

/// `-(T* R A + A* R T)` for a given `R`.
pub fn lyapunov_derivative(pie: &PieSystem, r: &RatOperator) -> Result<RatOperator, LpiError> {
    let (t, a) = (&pie.t, &pie.a);
    let g = t.adjoint().compose(&r.compose(a)?)?;
    Ok(symmetrize(&g)?.scale(&-Rational::from_integer(1.into())))
}

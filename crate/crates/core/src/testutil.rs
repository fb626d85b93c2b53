//! Random generators shared by the unit tests.

use rand::Rng;

use crate::pi_ops::RatOperator;
use crate::polyalg::{Mat, Poly1, Poly2, PolyMat1, PolyMat2};
use crate::scalar::{int, rat, Rational};

pub fn small_rational<R: Rng>(rng: &mut R) -> Rational {
    rat(rng.gen_range(-6..=6), rng.gen_range(1..=4))
}

pub fn random_poly1<R: Rng>(rng: &mut R, max_deg: usize) -> Poly1<Rational> {
    let d = rng.gen_range(0..=max_deg);
    Poly1::from_coeffs((0..=d).map(|_| small_rational(rng)).collect())
}

pub fn random_poly2<R: Rng>(rng: &mut R, max_deg: usize) -> Poly2<Rational> {
    let ds = rng.gen_range(0..=max_deg);
    let dt = rng.gen_range(0..=max_deg);
    let mut terms = Vec::new();
    for i in 0..=ds {
        for j in 0..=dt {
            if rng.gen_bool(0.6) {
                terms.push((i, j, small_rational(rng)));
            }
        }
    }
    Poly2::from_terms(&terms)
}

pub fn random_mat1<R: Rng>(rng: &mut R, p: usize, q: usize, deg: usize) -> PolyMat1<Rational> {
    Mat::from_fn(p, q, |_, _| random_poly1(rng, deg))
}

pub fn random_mat2<R: Rng>(rng: &mut R, p: usize, q: usize, deg: usize) -> PolyMat2<Rational> {
    Mat::from_fn(p, q, |_, _| random_poly2(rng, deg))
}

pub fn random_operator<R: Rng>(rng: &mut R, p: usize, q: usize, deg: usize) -> RatOperator {
    RatOperator::new(
        int(0),
        int(1),
        random_mat1(rng, p, q, deg),
        random_mat2(rng, p, q, deg),
        random_mat2(rng, p, q, deg),
    )
    .unwrap()
}

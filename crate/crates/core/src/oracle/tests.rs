use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DVector;

use super::*;
use crate::conversion::{convert, PieSystem};
use crate::models;
use crate::pde_model::{parse_pde, PdeSystem};
use crate::pi_ops::RatOperator;
use crate::polyalg::{Mat, Poly1, Poly2};
use crate::scalar::{int, rational_from_f64, Rational};

fn load(text: &str, params: &[(&str, f64)]) -> PdeSystem {
    let values: BTreeMap<String, Rational> =
        params.iter().map(|(k, v)| (k.to_string(), rational_from_f64(*v))).collect();
    parse_pde(text).unwrap().bind_params(&values).unwrap()
}

fn heat(lam: f64) -> (PdeSystem, PieSystem) {
    let sys = load(models::HEAT_DIRICHLET, &[("lam", lam)]);
    let pie = convert(&sys).unwrap();
    (sys, pie)
}

fn scalar(r1: Poly2<Rational>, r2: Poly2<Rational>) -> RatOperator {
    RatOperator::new(int(0), int(1), Mat::zeros(1, 1), Mat::from_vec(1, 1, vec![r1]), Mat::from_vec(1, 1, vec![r2]))
        .unwrap()
}

#[test]
fn discretize_examples() {
    let id = discretize_pi(&RatOperator::identity(int(0), int(1), 2), 10).unwrap();
    assert_eq!(id, nalgebra::DMatrix::identity(20, 20));
    let n = 50;
    let grid = uniform_grid(0.0, 1.0, n);
    let volterra = discretize_pi(&scalar(Poly2::constant(int(1)), Poly2::zero()), n).unwrap();
    let out = &volterra * DVector::from_element(n, 1.0);
    for (i, s) in grid.iter().enumerate() {
        assert!((out[i] - s).abs() < 1e-12);
    }
    let (_, pie) = heat(0.0);
    let td = discretize_pi(&pie.t, n).unwrap();
    let out = &td * DVector::from_element(n, 1.0);
    let h = 1.0 / (n - 1) as f64;
    for (i, s) in grid.iter().enumerate() {
        assert!((out[i] - s * (s - 1.0) / 2.0).abs() < h * h, "{i}");
    }
    assert_eq!(discretize_pi(&pie.t, 4), Err(OracleError::GridTooSmall(4)));
}

#[test]
fn compose_discretization_converges() {
    let p = scalar(Poly2::from_terms(&[(1, 1, int(2)), (0, 0, int(1))]), Poly2::from_terms(&[(2, 0, int(-1))]));
    let q = scalar(Poly2::from_terms(&[(0, 2, int(3))]), Poly2::from_terms(&[(1, 0, int(1)), (0, 1, int(1))]));
    let pq = p.compose(&q).unwrap();
    let err = |n: usize| {
        let d = discretize_pi(&pq, n).unwrap() - discretize_pi(&p, n).unwrap() * discretize_pi(&q, n).unwrap();
        // compare as operators on smooth samples
        let v = DVector::from_fn(n, |i, _| (i as f64 / (n - 1) as f64).cos());
        (d * v).amax()
    };
    let (e50, e100, e200) = (err(50), err(100), err(200));
    let order1 = (e50 / e100).log2();
    let order2 = (e100 / e200).log2();
    assert!(order1 >= 1.8 && order2 >= 1.8, "orders {order1} {order2}");
}

#[test]
fn heat_abscissa() {
    let (_, pie) = heat(0.0);
    let a = spectral_abscissa(&pie, 200).unwrap();
    assert!((a + PI * PI).abs() < 0.01 * PI * PI, "{a}");
    let (_, pie) = heat(9.0);
    let a = spectral_abscissa(&pie, 200).unwrap();
    assert!((a - (9.0 - PI * PI)).abs() < 0.05 * (PI * PI - 9.0), "{a}");
}

#[test]
fn transport_abscissa_is_negative() {
    let pie = convert(&load(models::TRANSPORT, &[])).unwrap();
    assert!(spectral_abscissa(&pie, 100).unwrap() < 0.0);
}

#[test]
fn pde_heat_spectrum() {
    let (sys, _) = heat(0.0);
    let a = pde_spectrum(&sys, 200).unwrap();
    assert!((a + PI * PI).abs() < 0.01 * PI * PI, "{a}");
}

#[test]
fn mckendrick_is_subcritical_at_zero() {
    let sys = load(models::MCKENDRICK, &[("c", 0.0)]);
    assert!(pde_spectrum(&sys, 200).unwrap() < 0.0);
}

#[test]
fn inadmissible_boundary_rank() {
    let sys = load(models::HEAT_NEUMANN, &[("lam", 0.0)]);
    // the Neumann problem is still solvable for the boundary unknowns of
    // the finite-difference scheme, but its pencil has a zero eigenvalue
    let ev = pde_eigenvalues(&sys, 50, &NalgebraEigen).unwrap();
    assert!(ev[0].norm() < 1e-6);
}

#[test]
fn simulation_trends() {
    let n = 60;
    let (sys0, pie) = heat(0.0);
    let pair = DiscretizedPair::new(&pie, n).unwrap();
    // x0 = s(1-s)(1+s) so x_f0 = -6s
    let x0 = DVector::from_iterator(n, pair.grid.iter().map(|s| -6.0 * s));
    let norms = simulate(&pair, &x0, 1e-3, 0.2).unwrap();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let zero = simulate(&pair, &DVector::zeros(n), 1e-3, 0.1).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
    let _ = sys0;
    let (_, pie) = heat(15.0);
    let pair = DiscretizedPair::new(&pie, n).unwrap();
    let norms = simulate(&pair, &x0, 1e-3, 1.0).unwrap();
    assert!(norms.last().unwrap() > &norms[0]);
    assert_eq!(simulate(&pair, &x0, 0.0, 1.0), Err(OracleError::BadStep(0.0)));
}

fn leading_agree(sys: &PdeSystem, n: usize) -> (Vec<nalgebra::Complex<f64>>, Vec<nalgebra::Complex<f64>>) {
    let pie = convert(sys).unwrap();
    let a = pie_eigenvalues(&pie, n, &NalgebraEigen).unwrap();
    let b = pde_eigenvalues(sys, n, &NalgebraEigen).unwrap();
    (a, b)
}

#[test]
fn quadrature_apply_matches_closed_form() {
    let (_, pie) = heat(0.0);
    let v = |_: f64| DVector::from_element(1, 1.0);
    for s in [0.1, 0.5, 0.9] {
        let got = apply_quadrature(&pie.t, &v, s, 1e-12)[0];
        assert!((got - s * (s - 1.0) / 2.0).abs() < 1e-12);
    }
    let _ = Poly1::<Rational>::zero();
}

#[test]
fn small_grid_spectra_agree() {
    for (text, params) in [
        (models::HEAT_MIXED, vec![("lam", 1.0)]),
        (models::MCKENDRICK, vec![("c", 0.5)]),
        (models::MIXED_ORDER, vec![]),
    ] {
        let sys = load(text, &params);
        let (a, b) = leading_agree(&sys, 80);
        for k in 0..2 {
            let rel = (a[k] - b[k]).norm() / b[k].norm();
            assert!(rel < 0.02, "{:?} vs {:?}", a[k], b[k]);
        }
    }
}

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::conversion::{convert, PieSystem};
use crate::models;
use crate::pde_model::parse_pde;
use crate::pi_ops::l2_inner;
use crate::polyalg::{Mat, Poly1, PolyMat1};
use crate::scalar::{int, rat, rational_from_f64, Rational};
use crate::testutil::small_rational;

fn pie(src: &str, params: &[(&str, f64)]) -> PieSystem {
    let sys = parse_pde(src).unwrap();
    let values: BTreeMap<String, Rational> =
        params.iter().map(|(k, v)| (k.to_string(), rational_from_f64(*v))).collect();
    let sys = if values.is_empty() { sys } else { sys.bind_params(&values).unwrap() };
    convert(&sys).unwrap()
}

fn heat(lam: f64) -> PieSystem {
    pie(models::HEAT_DIRICHLET, &[("lam", lam)])
}

fn transport() -> PieSystem {
    pie(models::TRANSPORT, &[])
}

fn prove(p: &PieSystem, degree: usize) -> (SolveOutcome, f64) {
    prove_stability(p, &LpiOptions::new(degree), &ClarabelBackend::default(), Some(120.0)).unwrap()
}

fn scalar_param(degree: usize) -> PositivePiParam {
    PositivePiParam::new(1, Basis::for_degree(degree), int(0), int(1))
}

fn rat_rows(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
    rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()
}

#[test]
fn unit_multiplier_gram_gives_identity() {
    let m = rat_rows(&[&[1, 0, 0], &[0, 0, 0], &[0, 0, 0]]);
    let p = realize_positive(&scalar_param(0), &m, &int(0)).unwrap();
    assert_eq!(p.r0().get(0, 0), &Poly1::constant(int(1)));
    assert!(p.r1().get(0, 0).is_zero());
    assert!(p.r2().get(0, 0).is_zero());
}

#[test]
fn all_ones_gram_realizes_constant_kernels() {
    // With Zop v = (v, int_0^s v, int_s^1 v), the all-ones Gram matrix gives
    // <v, P v> = int (v + int_0^1 v)^2 = ||v||^2 + 3 (int v)^2.
    let m = rat_rows(&[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]]);
    let p = realize_positive(&scalar_param(0), &m, &int(0)).unwrap();
    assert_eq!(p.r0().get(0, 0), &Poly1::constant(int(1)));
    assert_eq!(p.r1().get(0, 0), &crate::polyalg::Poly2::constant(int(3)));
    assert_eq!(p.r2().get(0, 0), &crate::polyalg::Poly2::constant(int(3)));
    let v: PolyMat1<Rational> = Mat::from_fn(1, 1, |_, _| Poly1::var());
    let pv = p.apply_poly(&v).unwrap();
    let form = l2_inner(&v, &pv, &int(0), &int(1)).unwrap();
    assert_eq!(form, rat(1, 3) + int(3) * rat(1, 4));
}

#[test]
fn ridge_is_added_to_the_multiplier() {
    let m = rat_rows(&[&[0, 0, 0], &[0, 0, 0], &[0, 0, 0]]);
    let p = realize_positive(&scalar_param(0), &m, &rat(1, 10)).unwrap();
    assert_eq!(p.r0().get(0, 0), &Poly1::constant(rat(1, 10)));
}

#[test]
fn realize_rejects_bad_gram_matrices() {
    let param = scalar_param(1);
    assert_eq!(param.block_size(), 6);
    let small = rat_rows(&[&[1, 0], &[0, 1]]);
    assert!(matches!(realize_positive(&param, &small, &int(0)), Err(LpiError::SizeMismatch { .. })));
    let mut asym = vec![vec![int(0); 6]; 6];
    asym[0][1] = int(1);
    assert_eq!(realize_positive(&param, &asym, &int(0)), Err(LpiError::NotSymmetric));
}

#[test]
fn realized_operators_are_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in [1, 2] {
        let param = PositivePiParam::new(dim, Basis::new(1, 1, 1), int(0), int(1));
        let n = param.block_size();
        let b: Vec<Vec<Rational>> = (0..n).map(|_| (0..n).map(|_| small_rational(&mut rng)).collect()).collect();
        let m: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| &b[i][k] * &b[j][k]).sum()).collect())
            .collect();
        let eps = rat(1, 100);
        let p = realize_positive(&param, &m, &eps).unwrap();
        for _ in 0..20 {
            let v: PolyMat1<Rational> = Mat::from_fn(dim, 1, |_, _| {
                Poly1::from_coeffs((0..=rng.gen_range(0..4)).map(|_| small_rational(&mut rng)).collect())
            });
            let form = l2_inner(&v, &p.apply_poly(&v).unwrap(), &int(0), &int(1)).unwrap();
            let norm = l2_inner(&v, &v, &int(0), &int(1)).unwrap();
            assert!(form >= &eps * &norm, "form {form} below eps * {norm}");
        }
    }
}

#[test]
fn transport_problem_has_blocks_of_three_times_degree_plus_one() {
    let problem = assemble_lpi(&transport(), &LpiOptions::new(1)).unwrap();
    assert_eq!(problem.sdp.blocks[0], 6);
    assert_eq!(problem.sdp.blocks.len(), 2);
    assert!(problem.sdp.num_constraints() > 0);
    problem.sdp.validate().unwrap();
}

#[test]
fn transport_is_proven_with_positive_decay() {
    let p = transport();
    let (outcome, _) = prove(&p, 1);
    let SolveOutcome::Proven(cert, report) = outcome else { panic!("{}", outcome.describe()) };
    assert!(report.max_residual < RESIDUAL_TOLERANCE * report.scale);
    assert!(report.decay.as_ref().unwrap().rate > 0.0);
    assert_eq!(verify_certificate(&cert, &p).unwrap(), report);
}

#[test]
fn heat_without_reaction_is_proven_at_degree_one() {
    assert!(prove(&heat(0.0), 1).0.is_proven());
}

#[test]
fn heat_below_threshold_is_proven_at_degree_two() {
    assert!(prove(&heat(9.0), 2).0.is_proven());
}

#[test]
fn heat_above_threshold_is_not_proven() {
    let (outcome, _) = prove(&heat(15.0), 2);
    assert!(!outcome.is_proven());
    assert!(outcome.describe().starts_with("not proven"));
    assert!(!outcome.describe().contains("unstable"));
}

fn transport_certificate() -> (StabilityCertificate, PieSystem) {
    let p = transport();
    match prove(&p, 1).0 {
        SolveOutcome::Proven(cert, _) => (cert, p),
        other => panic!("{}", other.describe()),
    }
}

#[test]
fn shifted_gram_matrix_is_rejected() {
    let (mut cert, p) = transport_certificate();
    let n = cert.m_r.nrows();
    cert.m_r -= DMatrix::identity(n, n) * 1e-3;
    let report = verify_certificate(&cert, &p).unwrap();
    assert!(!report.eigenvalues_ok());
    assert!(!report.passed());
}

#[test]
fn zeroed_coefficient_is_rejected() {
    let (mut cert, p) = transport_certificate();
    let (i, j) = cert.m_h.iamax_full();
    cert.m_h[(i, j)] = 0.0;
    cert.m_h[(j, i)] = 0.0;
    assert!(!verify_certificate(&cert, &p).unwrap().residual_ok());
}

#[test]
fn non_positive_margins_are_rejected() {
    let (mut cert, p) = transport_certificate();
    cert.alpha = 0.0;
    assert!(!verify_certificate(&cert, &p).unwrap().passed());
    assert_eq!(assemble_lpi(&p, &LpiOptions::new(1).with_margins(0.0, 1e-4)), Err(LpiError::BadMargin));
    assert_eq!(assemble_lpi(&p, &LpiOptions::new(1).with_margins(1e-4, f64::NAN)), Err(LpiError::BadMargin));
}

#[test]
fn insufficient_h_basis_is_reported() {
    let mut opts = LpiOptions::new(2);
    opts.h_basis = Some(Basis::new(0, 0, 0));
    assert!(matches!(assemble_lpi(&heat(1.0), &opts), Err(LpiError::DegreeTooSmall { .. })));
}

#[test]
fn sdpa_export_round_trips_exactly() {
    let problem = assemble_lpi(&heat(9.0), &LpiOptions::new(2)).unwrap();
    let text = problem.sdp.to_sdpa();
    let back = SdpProblem::from_sdpa(&text).unwrap();
    assert_eq!(back, problem.sdp);
    assert_eq!(back.to_sdpa(), text);
}

#[test]
fn sdpa_parser_reports_line_numbers() {
    let bad = "1\n1\n2\n0.0\n1 1 1 1 x\n";
    assert!(matches!(SdpProblem::from_sdpa(bad), Err(LpiError::Sdpa { .. })));
}

#[test]
fn proofs_persist_when_the_degree_grows() {
    for d in [1, 2] {
        assert!(prove(&transport(), d).0.is_proven(), "transport at degree {d}");
    }
    for d in [2, 3] {
        assert!(prove(&heat(9.0), d).0.is_proven(), "heat at degree {d}");
    }
}

#[test]
fn scaling_both_operators_keeps_the_status() {
    let p = transport();
    let k = int(3);
    let scaled = PieSystem::new(p.partition, p.t.scale(&k), p.a.scale(&k)).unwrap();
    assert!(prove(&scaled, 1).0.is_proven());
    let h = heat(15.0);
    let scaled = PieSystem::new(h.partition, h.t.scale(&k), h.a.scale(&k)).unwrap();
    assert!(!prove(&scaled, 2).0.is_proven());
}

/// Returns a fixed answer without solving anything.
struct Canned(BackendStatus);

impl SdpBackend for Canned {
    fn name(&self) -> &str {
        "canned"
    }

    fn solve(&self, _: &SdpProblem, _: Option<f64>) -> BackendResult {
        BackendResult { status: self.0.clone(), solve_seconds: 0.0 }
    }
}

#[test]
fn backend_answers_are_never_trusted() {
    let p = transport();
    let problem = assemble_lpi(&p, &LpiOptions::new(1)).unwrap();
    let garbage: Vec<DMatrix<f64>> = problem.sdp.blocks.iter().map(|&n| DMatrix::identity(n, n)).collect();
    let (outcome, _) = solve(&problem, &p, &Canned(BackendStatus::Feasible(garbage)), None).unwrap();
    assert!(matches!(outcome, SolveOutcome::Rejected(_)));
    let (outcome, _) = solve(&problem, &p, &Canned(BackendStatus::Infeasible), None).unwrap();
    assert_eq!(outcome, SolveOutcome::Infeasible);
    let failure = BackendStatus::Failure { message: "time limit".into(), candidate: None };
    let (outcome, _) = solve(&problem, &p, &Canned(failure), None).unwrap();
    assert_eq!(outcome.describe(), "not proven (backend: time limit)");
}

#[test]
fn derivative_of_identity_for_transport() {
    // With R = I, -(T* A + A* T) = T + T* for A = -I.
    let p = transport();
    let id = crate::pi_ops::RatOperator::identity(int(0), int(1), 1);
    let d = lyapunov_derivative(&p, &id).unwrap();
    assert_eq!(d, p.t.add(&p.t.adjoint()).unwrap());
}

#[test]
fn coefficient_keys_name_kernel_entries() {
    let t = transport().t;
    let keys = coefficients(&t.add(&t.adjoint()).unwrap());
    assert!(keys.keys().all(|k| k.0 == 1));
    assert_eq!(describe_key(&(1, 0, 0, 2, 1)), "s^2 th^1 in kernel entry (1, 1)");
}

use std::process::Command;

use piecert::conversion::{convert, parse_pie};
use piecert::models;
use piecert::pde_model::parse_pde;
use piecert::scalar::{int, rat};
use piecert_cli::{bisect, parse_assignment, parse_number, SweepEntry, SweepResult, SweepStatus};

fn piecert(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_piecert")).args(args).output().expect("run piecert");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn assignments_are_exact() {
    assert_eq!(parse_assignment("lam=9"), Ok(("lam".to_string(), int(9))));
    assert_eq!(parse_assignment("c = 0.740625"), Ok(("c".to_string(), rat(237, 320))));
    assert_eq!(parse_number("1e-3"), Ok(rat(1, 1000)));
    assert_eq!(parse_number("-3/4"), Ok(rat(-3, 4)));
    assert!(parse_assignment("lam").is_err());
    assert!(parse_assignment("=3").is_err());
    assert!(parse_number("s + 1").is_err());
}

fn status_at(threshold: f64) -> impl FnMut(f64) -> Result<(SweepStatus, f64), ()> {
    move |v| Ok((if v < threshold { SweepStatus::ProvenStable } else { SweepStatus::NotProven }, 0.0))
}

#[test]
fn bisection_brackets_the_threshold() {
    let log = bisect(5.0, 15.0, 1e-2, status_at(9.87)).unwrap().unwrap();
    let boundary = SweepResult::boundary_of(&log).unwrap();
    assert!(boundary < 9.87 && 9.87 - boundary <= 1e-2, "{boundary}");
    assert_eq!(log[0].value, 5.0);
    assert_eq!(log[1].value, 15.0);
    // Each step halves the bracket.
    assert_eq!(log.len(), 2 + (10.0f64 / 1e-2).log2().ceil() as usize);
}

#[test]
fn bisection_handles_a_reversed_orientation() {
    let mut f = |v: f64| Ok::<_, ()>((if v > 2.0 { SweepStatus::ProvenStable } else { SweepStatus::NotProven }, 0.0));
    let log = bisect(0.0, 3.0, 1e-3, &mut f).unwrap().unwrap();
    let boundary = SweepResult::boundary_of(&log).unwrap();
    assert!(boundary > 2.0 && boundary - 2.0 <= 1e-3);
}

#[test]
fn bisection_needs_differing_ends() {
    assert_eq!(bisect(0.0, 0.1, 1e-3, status_at(1.0)), Ok(None));
}

#[test]
fn csv_hides_timings_unless_asked() {
    let result = SweepResult {
        param: "c".into(),
        lo: 0.0,
        hi: 1.0,
        tol: 0.5,
        log: vec![
            SweepEntry { value: 0.0, status: SweepStatus::ProvenStable, solve_seconds: 0.25 },
            SweepEntry { value: 1.0, status: SweepStatus::NotProven, solve_seconds: 1.5 },
        ],
        boundary: Some(0.0),
        oracle_crossing: None,
    };
    assert_eq!(result.to_csv(false), "value,status,solve_seconds\n0,proven-stable,\n1,not-proven,\n");
    assert_eq!(result.to_csv(true), "value,status,solve_seconds\n0,proven-stable,0.250\n1,not-proven,1.500\n");
}

#[test]
fn check_reports_admissibility() {
    let (code, out, _) = piecert(&["check", "heat_dirichlet.pde", "--set", "lam=0"]);
    assert_eq!(code, 0);
    assert!(out.contains("admissible, det(B_T)=1"), "{out}");
    let (code, out, _) = piecert(&["check", "heat_neumann.pde", "--set", "lam=0"]);
    assert_eq!(code, 2);
    assert!(out.contains("inadmissible"), "{out}");
}

#[test]
fn malformed_models_exit_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pde");
    std::fs::write(&path, "[domain]\na = 0\nb = \n").unwrap();
    let (code, _, err) = piecert(&["check", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");
    let (code, _, err) = piecert(&["check", "no_such_model.pde"]);
    assert_eq!(code, 2);
    assert!(err.contains("no_such_model.pde"), "{err}");
}

#[test]
fn parameters_must_match_the_model() {
    let (code, _, err) = piecert(&["check", "heat_dirichlet.pde"]);
    assert_eq!(code, 2);
    assert!(err.contains("lam"), "{err}");
    let (code, _, err) = piecert(&["check", "transport.pde", "--set", "k=1"]);
    assert_eq!(code, 2);
    assert!(err.contains("no parameter 'k'"), "{err}");
}

#[test]
fn convert_writes_a_parseable_pie() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heat.pie");
    let (code, _, _) = piecert(&["convert", "heat_dirichlet.pde", "--set", "lam=2", "-o", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let parsed = parse_pie(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let mut params = std::collections::BTreeMap::new();
    params.insert("lam".to_string(), int(2));
    let expected = convert(&parse_pde(models::HEAT_DIRICHLET).unwrap().bind_params(&params).unwrap()).unwrap();
    assert_eq!(parsed.t, expected.t);
    assert_eq!(parsed.a, expected.a);
    let (code, _, _) = piecert(&["convert", "heat_neumann.pde", "--set", "lam=0"]);
    assert_eq!(code, 2);
}

#[test]
fn spectrum_of_the_heat_equation() {
    let (code, out, _) = piecert(&["spectrum", "heat_dirichlet.pde", "--set", "lam=0", "-N", "200"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("quantity,re,im"));
    let abscissa: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((abscissa + std::f64::consts::PI.powi(2)).abs() < 0.01 * std::f64::consts::PI.powi(2));
    assert_eq!(out.lines().count(), 7);
}

#[test]
fn stability_exit_codes_and_determinism() {
    let args = ["stability", "transport.pde", "--degree", "1"];
    let (code, first, _) = piecert(&args);
    assert_eq!(code, 0, "{first}");
    assert!(first.contains("status: proven stable"));
    assert!(!first.contains("solve seconds"));
    let (_, second, _) = piecert(&args);
    assert_eq!(first, second);
    let (_, timed, _) = piecert(&["stability", "transport.pde", "--degree", "1", "--timings"]);
    assert!(timed.contains("solve seconds"));
}

#[test]
fn unproven_models_are_not_called_unstable() {
    let (code, out, _) = piecert(&["stability", "heat_dirichlet.pde", "--set", "lam=15", "--degree", "1"]);
    assert_eq!(code, 1);
    assert!(out.contains("status: not proven"), "{out}");
    assert!(!out.to_lowercase().contains("unstable"));
}

#[test]
fn invalid_settings_exit_with_two() {
    let (code, _, err) = piecert(&["stability", "transport.pde", "--backend", "mosek"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown backend"), "{err}");
    let (code, _, _) = piecert(&["stability", "transport.pde", "--alpha", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn sweep_rejects_a_bracket_without_a_change() {
    let (code, out, err) = piecert(&["sweep", "mckendrick.pde", "c", "0", "0.1", "--tol", "1e-3", "--degree", "1"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("same status"), "{err}");
    let (code, _, err) = piecert(&["sweep", "mckendrick.pde", "k", "0", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("no parameter 'k'"), "{err}");
}

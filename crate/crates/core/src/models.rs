//! Bundled example models and the generator for the observer model.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

pub const TRANSPORT: &str = include_str!("../../../models/transport.pde");
pub const MCKENDRICK: &str = include_str!("../../../models/mckendrick.pde");
pub const HEAT_DIRICHLET: &str = include_str!("../../../models/heat_dirichlet.pde");
pub const HEAT_MIXED: &str = include_str!("../../../models/heat_mixed.pde");
pub const HEAT_NEUMANN: &str = include_str!("../../../models/heat_neumann.pde");
pub const COUPLED_DIFFUSION: &str = include_str!("../../../models/coupled_diffusion.pde");
pub const MIXED_ORDER: &str = include_str!("../../../models/mixed_order.pde");
pub const OBSERVER_RD: &str = include_str!("../../../models/observer_rd.pde");

/// Bundled models keyed by file name.
pub const BUNDLED: [(&str, &str); 8] = [
    ("transport.pde", TRANSPORT),
    ("mckendrick.pde", MCKENDRICK),
    ("heat_dirichlet.pde", HEAT_DIRICHLET),
    ("heat_mixed.pde", HEAT_MIXED),
    ("heat_neumann.pde", HEAT_NEUMANN),
    ("coupled_diffusion.pde", COUPLED_DIFFUSION),
    ("mixed_order.pde", MIXED_ORDER),
    ("observer_rd.pde", OBSERVER_RD),
];

/// Source of a bundled model, by file name with or without `.pde`.
pub fn bundled(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".pde").unwrap_or(name);
    BUNDLED.iter().find(|(file, _)| file.strip_suffix(".pde") == Some(name)).map(|(_, src)| *src)
}

/// `I1(z) / z` from the modified Bessel series, summed until the terms fall
/// below `1e-12` relative to the partial sum.
pub fn bessel_i1_over_z(z: f64) -> f64 {
    let q = z * z / 4.0;
    let mut term: f64 = 0.5;
    let mut sum = term;
    let mut k = 0.0;
    while term.abs() > 1e-12 * sum.abs() {
        k += 1.0;
        term *= q / (k * (k + 1.0));
        sum += term;
    }
    sum
}

/// The backstepping observer gain `-sqrt(lam) I1(sqrt(lam (1 - s^2))) / sqrt(1 - s^2)`,
/// written as `-lam I1(z)/z` with `z = sqrt(lam (1 - s^2))` so it stays
/// finite at `s = 1`.
pub fn observer_gain(lambda: f64, s: f64) -> f64 {
    let z = (lambda * (1.0 - s * s)).max(0.0).sqrt();
    -lambda * bessel_i1_over_z(z)
}

/// Least-squares polynomial fit of the observer gain on 200 uniform points
/// of `[0, 1]`; coefficients by ascending degree.
pub fn fit_observer_gain(lambda: f64, degree: usize) -> Vec<f64> {
    let pts = 200;
    let s: Vec<f64> = (0..pts).map(|i| i as f64 / (pts - 1) as f64).collect();
    let v = DMatrix::from_fn(pts, degree + 1, |i, j| s[i].powi(j as i32));
    let y = DVector::from_iterator(pts, s.iter().map(|&x| observer_gain(lambda, x)));
    let svd = v.svd(true, true);
    let c = svd.solve(&y, 1e-14).expect("SVD computed with U and V");
    c.iter().copied().collect()
}

fn decimal(x: f64) -> String {
    format!("{x:.12e}")
}

/// PDESPEC text for the reaction-diffusion observer loop with the gain
/// replaced by its degree-`degree` fit and the boundary measurement written
/// as an integral of the second derivative.
pub fn observer_model(lambda: f64, degree: usize) -> String {
    let coeffs = fit_observer_gain(lambda, degree);
    let gain: Vec<String> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| match k {
            0 => decimal(*c),
            1 => format!("{}*s", decimal(*c)),
            _ => format!("{}*s^{k}", decimal(*c)),
        })
        .collect();
    let l = gain.join(" + ");
    let mut out = String::new();
    let _ = writeln!(out, "# Reaction-diffusion state x and observer xh with gain l(s) fitted by a");
    let _ = writeln!(out, "# degree-{degree} polynomial at lam = {lambda}:");
    let _ = writeln!(out, "#   x_t  = lam x + x_ss");
    let _ = writeln!(out, "#   xh_t = lam xh + xh_ss + l(s) int_0^1 (x_ss - xh_ss) dth");
    let _ = writeln!(out, "#   x = xh = 0 at both ends");
    let _ = writeln!(out, "[domain]\na = 0\nb = 1");
    let _ = writeln!(out, "[states]\nn0 = 0  n1 = 0  n2 = 2");
    let _ = writeln!(out, "[dynamics]");
    let _ = writeln!(out, "# x_D = (x, xh, x_s, xh_s, x_ss, xh_ss)");
    let _ = writeln!(out, "A0 = [[{lambda}, 0, 0, 0, 1, 0],\n      [0, {lambda}, 0, 0, 0, 1]]");
    for name in ["A1", "A2"] {
        let _ = writeln!(
            out,
            "{name} = [[0, 0, 0, 0, 0, 0],\n      [0, 0, 0, 0, \"{l}\", \"-({l})\"]]"
        );
    }
    let _ = writeln!(out, "[bc]");
    let _ = writeln!(out, "# x_b = (x(0), xh(0), x_s(0), xh_s(0), x(1), xh(1), x_s(1), xh_s(1))");
    let _ = writeln!(
        out,
        "B = [[1, 0, 0, 0, 0, 0, 0, 0],\n     [0, 1, 0, 0, 0, 0, 0, 0],\n     [0, 0, 0, 0, 1, 0, 0, 0],\n     [0, 0, 0, 0, 0, 1, 0, 0]]"
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_series_values() {
        assert!((bessel_i1_over_z(0.0) - 0.5).abs() < 1e-15);
        // I1(1) = 0.565159103992485
        assert!((bessel_i1_over_z(1.0) - 0.565_159_103_992_485).abs() < 1e-12);
        // I1(2) / 2 with I1(2) = 1.590636854637329
        assert!((bessel_i1_over_z(2.0) - 1.590_636_854_637_329 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gain_endpoints() {
        assert!((observer_gain(5.0, 1.0) + 2.5).abs() < 1e-12);
        let z = 5f64.sqrt();
        assert!((observer_gain(5.0, 0.0) + 5.0 * bessel_i1_over_z(z)).abs() < 1e-12);
    }

    #[test]
    fn fits_improve_with_degree() {
        let err = |d: usize| {
            let c = fit_observer_gain(6.0, d);
            (0..=100)
                .map(|i| {
                    let s = i as f64 / 100.0;
                    let p: f64 = c.iter().rev().fold(0.0, |acc, k| acc * s + k);
                    (p - observer_gain(6.0, s)).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(err(4) < err(1));
        assert!(err(4) < 1e-3);
    }

    #[test]
    fn generated_model_parses() {
        let sys = crate::pde_model::parse_pde(&observer_model(5.0, 1)).unwrap();
        assert_eq!(sys.partition().n_x(), 2);
        assert!(sys.matrices().is_ok());
    }
}

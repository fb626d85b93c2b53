//! Adaptive Gauss-Kronrod (7/15) quadrature for the numerical cross-checks.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let x = h * XGK[k];
        let (f1, f2) = (f(c - x), f(c + x));
        kron += WGK[k] * (f1 + f2);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (f1 + f2);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute-or-relative tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = gk15(&f, lo, hi);
        if err <= tol.max(tol * v.abs()) || depth > 40 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_integrals() {
        assert!((integrate(|x| x * x, 0.0, 1.0, 1e-14) - 1.0 / 3.0).abs() < 1e-15);
        assert!((integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-13) - 2.0).abs() < 1e-12);
        assert!((integrate(|x| x.abs().sqrt(), -1.0, 1.0, 1e-12) - 4.0 / 3.0).abs() < 1e-9);
    }
}

//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use num_complex::Complex64;

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Bisections allowed per integral; the reported error stays honest when
/// the budget runs out.
const MAX_SPLITS: usize = 100_000;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: f64,
}

/// Kronrod estimate, error estimate, and the rounding floor of the rule.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (l, r) = (f(c - x), f(c + x));
        let s = l + r;
        kron += s * WGK[j];
        abs += (l.norm() + r.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let floor = 50.0 * f64::EPSILON * abs * h.abs();
    (kron * h, ((kron - gauss) * h).norm(), floor)
}

fn adapt<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    whole: (Complex64, f64, f64),
    tol: f64,
    depth: u32,
    budget: &mut usize,
) -> (Complex64, f64) {
    let (v, e, floor) = whole;
    if e <= tol.max(floor) || depth == 0 || *budget == 0 || (b - a).abs() < 1e-15 * a.abs().max(1.0) {
        return (v, e);
    }
    *budget -= 1;
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    let (lv, le) = adapt(f, a, m, left, 0.5 * tol, depth - 1, budget);
    let (rv, re) = adapt(f, m, b, right, 0.5 * tol, depth - 1, budget);
    (lv + rv, le + re)
}

/// `∫_a^b f` for complex-valued `f` to absolute tolerance `tol`.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature<Complex64> {
    if a == b {
        return Quadrature {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        };
    }
    let whole = gk15(&f, a, b);
    let mut budget = MAX_SPLITS;
    let (value, error) = adapt(&f, a, b, whole, tol, 40, &mut budget);
    Quadrature { value, error }
}

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature<f64> {
    let q = integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, tol);
    Quadrature {
        value: q.value.re,
        error: q.error,
    }
}

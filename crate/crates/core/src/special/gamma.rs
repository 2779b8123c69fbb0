use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `log Γ(z)`.
///
/// On `Re z > 0` this is the principal branch, continuous in `z` and real on
/// the positive axis. For `Re z ≤ 0` the reflection formula is used and the
/// imaginary part is only defined modulo `2π`.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("log_gamma({z}) of non-finite input")));
    }
    if z.re >= 0.5 {
        return Ok(lanczos(z));
    }
    if z.re > 0.0 {
        // Γ(z) = Γ(z + 1) / z keeps the principal branch.
        return Ok(lanczos(z + 1.0) - z.ln());
    }
    if z.im == 0.0 && z.re == z.re.round() {
        return Err(Error::Domain(format!("log_gamma pole at {}", z.re)));
    }
    let s = (PI * z).sin();
    Ok(Complex64::new(PI.ln(), 0.0) - s.ln() - lanczos(1.0 - z))
}

/// Real `log Γ(x)` for `x > 0`.
pub fn log_gamma_real(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    log_gamma(Complex64::new(x, 0.0)).map(|z| z.re).unwrap_or(f64::NAN)
}

/// `ψ(x) = Γ'(x)/Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma needs x > 0, got {x}")));
    }
    let mut acc = 0.0;
    let mut x = x;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * 691.0 / 32760.0)))));
    Ok(acc + x.ln() - 0.5 / x - series)
}

/// Upper incomplete gamma `Γ(a, y)` for a positive integer `a`:
/// `(a−1)! e^{−y} Σ_{k<a} y^k / k!`.
pub fn gamma_upper_integer(a: u32, y: f64) -> f64 {
    debug_assert!(a >= 1);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..a {
        term *= y / k as f64;
        sum += term;
    }
    let fact: f64 = (1..a).map(|k| k as f64).product();
    fact * (-y).exp() * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Stirling series with upward recurrence, as an independent oracle.
    fn stirling(z: Complex64) -> Complex64 {
        let mut z = z;
        let mut shift = Complex64::new(0.0, 0.0);
        while z.norm() < 20.0 {
            shift += z.ln();
            z += 1.0;
        }
        let b = [
            1.0 / 6.0,
            -1.0 / 30.0,
            1.0 / 42.0,
            -1.0 / 30.0,
            5.0 / 66.0,
            -691.0 / 2730.0,
            7.0 / 6.0,
        ];
        let mut s = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln();
        for (k, &bk) in b.iter().enumerate() {
            let n = 2 * (k + 1);
            s += bk / ((n * (n - 1)) as f64 * z.powi(n as i32 - 1));
        }
        s - shift
    }

    #[test]
    fn log_gamma_special_values() {
        let c = |x: f64| Complex64::new(x, 0.0);
        assert!(log_gamma(c(1.0)).unwrap().norm() < 1e-14);
        assert!((log_gamma(c(0.5)).unwrap() - c(PI.sqrt().ln())).norm() < 1e-14);
        assert!((log_gamma(c(6.0)).unwrap() - c(120f64.ln())).norm() < 1e-13);
        assert!(matches!(log_gamma(c(-2.0)), Err(Error::Domain(_))));
        assert!(matches!(log_gamma(c(0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn log_gamma_matches_stirling_on_vertical_lines() {
        for &re in &[0.25, 1.0, 2.5, 4.0, 7.5] {
            for k in 0..80 {
                let z = Complex64::new(re, -40.0 + k as f64);
                let a = log_gamma(z).unwrap();
                let b = stirling(z);
                assert!(
                    (a - b).norm() < 1e-12 * b.norm().max(1.0),
                    "z = {z}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-14);
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        let h = 1e-5;
        let fd = (log_gamma_real(6.0 + h) - log_gamma_real(6.0 - h)) / (2.0 * h);
        assert!((digamma(6.0).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn digamma_consistent_with_log_gamma() {
        let h = 1e-5;
        for i in 0..20 {
            let x = 0.3 + 0.77 * i as f64;
            let fd = (log_gamma_real(x + h) - log_gamma_real(x - h)) / (2.0 * h);
            assert!((digamma(x).unwrap() - fd).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn incomplete_gamma_integer() {
        assert!((gamma_upper_integer(1, 2.0) - (-2.0f64).exp()).abs() < 1e-16);
        assert!((gamma_upper_integer(6, 0.0) - 120.0).abs() < 1e-12);
        // Γ(2, y) = (1 + y) e^{−y}
        assert!((gamma_upper_integer(2, 3.0) - 4.0 * (-3.0f64).exp()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn recurrence(re in 0.1f64..30.0, im in -30.0f64..30.0) {
            let z = Complex64::new(re, im);
            let lhs = log_gamma(z + 1.0).unwrap();
            let rhs = log_gamma(z).unwrap() + z.ln();
            prop_assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        }

        #[test]
        fn conjugate_symmetry(re in 0.1f64..30.0, im in -30.0f64..30.0) {
            let z = Complex64::new(re, im);
            let a = log_gamma(z).unwrap();
            let b = log_gamma(z.conj()).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-13 * a.norm().max(1.0));
        }
    }
}

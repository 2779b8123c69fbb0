use super::{averaged_log_product, ConstantReport, LocalData};
use crate::error::{Error, Result};

const SYM2_STEP: f64 = 1e-4;

/// `L_p(s, sym²f)^{−1}` as a polynomial in `x = p^{−s}`.
pub fn sym2_local_inverse(lambda: f64, bad: bool, x: f64) -> f64 {
    if bad {
        1.0 - lambda * lambda * x
    } else {
        let c = lambda * lambda - 1.0;
        1.0 - c * x + c * x * x - x * x * x
    }
}

/// `L_p(s, f⊗g)^{−1}` as a polynomial in `x = p^{−s}`.
pub fn rankin_local_inverse(a: f64, b: f64, bad_f: bool, bad_g: bool, x: f64) -> f64 {
    let ab = a * b;
    match (bad_f, bad_g) {
        (false, false) => {
            let x2 = x * x;
            1.0 - ab * x + (a * a + b * b - 2.0) * x2 - ab * x2 * x + x2 * x2
        }
        (true, false) => 1.0 - ab * x + a * a * x * x,
        (false, true) => 1.0 - ab * x + b * b * x * x,
        (true, true) => 1.0 - ab * x,
    }
}

fn sym2_log_factor(data: &LocalData, i: usize, s: f64) -> f64 {
    let p = data.primes()[i];
    let x = (p as f64).powf(-s);
    -sym2_local_inverse(data.lambdas()[i], data.is_bad(p), x).ln()
}

fn sym2_unchecked(data: &LocalData, s: f64) -> (f64, f64) {
    averaged_log_product(data.primes(), |i| sym2_log_factor(data, i, s))
}

/// Truncated `L(s, sym²f)` for real `s ≥ 1`.
#[allow(non_snake_case)]
pub fn sym2_L(data: &LocalData, s: f64) -> Result<ConstantReport> {
    if !(s >= 1.0) {
        return Err(Error::Domain(format!(
            "L(s, sym²f) product diverges for s = {s} < 1"
        )));
    }
    let (log_value, spread) = sym2_unchecked(data, s);
    let value = log_value.exp();
    Ok(ConstantReport::real(
        "L_sym2",
        data.limit(),
        value,
        value * spread.exp_m1(),
    ))
}

/// `L′/L(1, sym²f)` by central differences with one Richardson step.
pub fn sym2_log_derivative(data: &LocalData) -> Result<ConstantReport> {
    let h = SYM2_STEP;
    let diff = |i: usize, h: f64| {
        (sym2_log_factor(data, i, 1.0 + h) - sym2_log_factor(data, i, 1.0 - h)) / (2.0 * h)
    };
    let (value, spread) = averaged_log_product(data.primes(), |i| {
        (4.0 * diff(i, h / 2.0) - diff(i, h)) / 3.0
    });
    Ok(ConstantReport::real(
        "L_sym2_logderiv",
        data.limit(),
        value,
        spread,
    ))
}

/// Truncated `L(1, f⊗g)` for distinct forms.
#[allow(non_snake_case)]
pub fn rankin_L1(f: &LocalData, g: &LocalData) -> Result<ConstantReport> {
    if f.form().label == g.form().label {
        return Err(Error::InvalidArgument(format!(
            "L(s, f⊗f) has a pole at s = 1 (ζ factor); rankin_L1 needs distinct forms, got {} twice",
            f.form().label
        )));
    }
    let limit = f.limit().min(g.limit());
    let k = f.primes().partition_point(|&p| p <= limit);
    let primes = &f.primes()[..k];
    let (log_value, spread) = averaged_log_product(primes, |i| {
        let p = primes[i];
        let x = 1.0 / p as f64;
        -rankin_local_inverse(f.lambdas()[i], g.lambdas()[i], f.is_bad(p), g.is_bad(p), x).ln()
    });
    let value = log_value.exp();
    Ok(ConstantReport::real(
        "L_rankin",
        limit,
        value,
        value * spread.exp_m1(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::forms::{lookup, registry};

    fn data(label: &str, limit: u64) -> LocalData {
        LocalData::new(&lookup(label).unwrap(), limit, Execution::Parallel).unwrap()
    }

    #[test]
    fn trivial_roots_give_zeta_cubed() {
        for &x in &[0.5, 0.1, 1.0 / 3.0, 1e-3] {
            let inv = sym2_local_inverse(2.0, false, x);
            assert!((inv - (1.0 - x).powi(3)).abs() < 1e-15);
        }
    }

    #[test]
    fn local_factors_match_roots() {
        use super::super::LocalRoots;
        use num_complex::Complex64;
        let d = data("37a", 2000);
        let g = data("11a", 2000);
        for i in 0..d.primes().len() {
            let p = d.primes()[i];
            let x = 1.0 / p as f64;
            let rf = LocalRoots::new(p, d.lambdas()[i], d.is_bad(p));
            let rg = LocalRoots::new(p, g.lambdas()[i], g.is_bad(p));
            let one = Complex64::new(1.0, 0.0);
            let mut want = one;
            for a in [rf.alpha, rf.beta] {
                for b in [rg.alpha, rg.beta] {
                    want *= one - a * b * x;
                }
            }
            let got = rankin_local_inverse(d.lambdas()[i], g.lambdas()[i], d.is_bad(p), g.is_bad(p), x);
            assert!((want - got).norm() < 1e-14, "p = {p}");
            if !d.is_bad(p) {
                let s = (one - rf.alpha * rf.alpha * x) * (one - x) * (one - rf.beta * rf.beta * x);
                assert!((s.re - sym2_local_inverse(d.lambdas()[i], false, x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sym2_rejects_divergent_region() {
        let d = data("11a", 100);
        assert!(matches!(sym2_L(&d, 0.9), Err(Error::Domain(_))));
        assert!(sym2_L(&d, 1.5).is_ok());
    }

    #[test]
    fn sym2_stable_for_11a() {
        let d = data("11a", 100_000);
        let big = sym2_L(&d, 1.0).unwrap();
        let small = sym2_L(&d.truncated(10_000), 1.0).unwrap();
        assert!((big.value - small.value).abs() / big.value < 5e-3, "{big:?} {small:?}");
        assert!(big.tail_bound < 1e-2);
    }

    #[test]
    fn sym2_positive_for_registry() {
        for form in registry() {
            let limit = form.n_max_cap().map_or(20_000, |c| c as u64);
            let d = LocalData::new(&form, limit, Execution::Parallel).unwrap();
            let v = sym2_L(&d, 1.0).unwrap();
            assert!(v.value > 0.0 && v.value.is_finite(), "{}", form.label);
            assert!(sym2_log_derivative(&d).unwrap().value.is_finite());
        }
    }

    #[test]
    fn log_derivative_matches_secant_of_product() {
        let d = data("19a", 20_000);
        let ld = sym2_log_derivative(&d).unwrap().value;
        let h = 1e-3;
        let up = sym2_L(&d, 1.0 + h).unwrap().value.ln();
        let down = sym2_unchecked(&d, 1.0 - h).0;
        assert!((ld - (up - down) / (2.0 * h)).abs() < 1e-5);
    }

    #[test]
    fn rankin_symmetric_and_stable() {
        let f = data("11a", 100_000);
        let g = data("19a", 100_000);
        let fg = rankin_L1(&f, &g).unwrap();
        let gf = rankin_L1(&g, &f).unwrap();
        assert_eq!(fg.value, gf.value);
        let small = rankin_L1(&f.truncated(10_000), &g.truncated(10_000)).unwrap();
        assert!((fg.value - small.value).abs() / fg.value < 5e-3, "{fg:?} {small:?}");
        assert!(fg.value > 0.0);
    }

    #[test]
    fn rankin_same_form_is_rejected() {
        let f = data("11a", 1000);
        let err = rankin_L1(&f, &f).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(ref m) if m.contains("pole")));
    }
}

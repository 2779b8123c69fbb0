use num_complex::Complex64;

use super::{ConstantReport, LocalData, LogProduct, DOMAIN_EPS};
use crate::arith::{factorize, gcd};
use crate::error::{Error, Result};

/// Step of the central differences for `Z*` derivatives.
pub const ZSTAR_STEP: f64 = 1e-3;

type C = Complex64;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

fn p_pow(p: u64, s: C) -> C {
    (-s * (p as f64).ln()).exp()
}

fn check_domain(args: &[C]) -> Result<()> {
    for z in args {
        if !(z.re > -0.25 + DOMAIN_EPS) || !z.im.is_finite() {
            return Err(Error::Domain(format!(
                "Re = {} outside the convergence region Re > −1/4 + {DOMAIN_EPS}",
                z.re
            )));
        }
    }
    Ok(())
}

fn decay(args: &[C]) -> f64 {
    let m = args.iter().map(|z| -z.re).fold(0.0, f64::max);
    2.0 - 4.0 * m
}

/// `n′` must be a unitary divisor of `level`.
fn check_n_prime(level: u64, n_prime: u64) -> Result<()> {
    if n_prime == 0 || level % n_prime != 0 || gcd(n_prime, level / n_prime) != 1 {
        return Err(Error::InvalidArgument(format!(
            "N′ = {n_prime} is not a unitary divisor of N = {level}"
        )));
    }
    Ok(())
}

fn check_coverage(data: &LocalData, level: u64) -> Result<()> {
    let top = factorize(level)?.primes().max().unwrap_or(1);
    if data.limit() < top {
        return Err(Error::InvalidArgument(format!(
            "prime limit {} does not reach the level prime {top}",
            data.limit()
        )));
    }
    Ok(())
}

fn ord_sign(n_prime: u64, p: u64) -> f64 {
    let mut n = n_prime;
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn sym2_inv(lambda: f64, bad: bool, x: C) -> C {
    if bad {
        1.0 - lambda * lambda * x
    } else {
        let k = lambda * lambda - 1.0;
        1.0 - k * x + k * x * x - x * x * x
    }
}

fn rankin_inv(a: f64, b: f64, bad_f: bool, bad_g: bool, x: C) -> C {
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

/// `(1 − λ t + χ t²)^{−1}`.
fn bracket(lambda: f64, chi0: f64, t: C) -> C {
    1.0 / (1.0 - lambda * t + chi0 * t * t)
}

fn weight(p: u64) -> f64 {
    p as f64 / (p as f64 + 1.0)
}

/// Raw local factor of the second-moment product.
pub(crate) fn second_raw(p: u64, lambda: f64, bad: bool, sign: f64, u: C, v: C) -> C {
    if p == 2 {
        return c(1.0);
    }
    let tu = p_pow(p, 0.5 + u);
    let tv = p_pow(p, 0.5 + v);
    if bad {
        let b = |t: C| 1.0 / (1.0 - lambda * t);
        weight(p) * 0.5 * (b(tu) * b(tv) + sign * b(-tu) * b(-tv))
    } else {
        let a = |t: C| bracket(lambda, 1.0, t);
        1.0 + weight(p) * (0.5 * (a(tu) * a(tv) + a(-tu) * a(-tv)) - 1.0)
    }
}

/// Inverse local factors of `ζ(1+u+v) L(1+2u,sym²) L(1+u+v,sym²) L(1+2v,sym²)`.
pub(crate) fn second_normalizer(p: u64, lambda: f64, bad: bool, u: C, v: C) -> C {
    let xuv = p_pow(p, 1.0 + u + v);
    (1.0 - xuv)
        * sym2_inv(lambda, bad, p_pow(p, 1.0 + 2.0 * u))
        * sym2_inv(lambda, bad, xuv)
        * sym2_inv(lambda, bad, p_pow(p, 1.0 + 2.0 * v))
}

/// `Z*_{N′}(u, v)` of the second moment.
pub fn zstar_second_part(data: &LocalData, n_prime: u64, u: C, v: C) -> Result<ConstantReport> {
    let level = data.form().level;
    check_domain(&[u, v])?;
    check_n_prime(level, n_prime)?;
    check_coverage(data, level)?;
    let mut prod = LogProduct::new(decay(&[u, v]), data.limit());
    for (&p, &l) in data.primes().iter().zip(data.lambdas()) {
        let bad = data.is_bad(p);
        let raw = second_raw(p, l, bad, ord_sign(n_prime, p), u, v);
        prod.push(p, raw * second_normalizer(p, l, bad, u, v));
    }
    let (value, tail) = prod.finish();
    Ok(ConstantReport::complex(
        &format!("Zstar_{n_prime}"),
        data.limit(),
        value,
        tail,
    ))
}

/// `Z*(u, v) = Z*_1 − w(f) Z*_N`.
pub fn zstar_second(data: &LocalData, u: C, v: C) -> Result<ConstantReport> {
    let w = data.form().root_number()?.as_f64();
    let one = zstar_second_part(data, 1, u, v)?;
    let lev = zstar_second_part(data, data.form().level, u, v)?;
    let value = one.as_complex() - w * lev.as_complex();
    Ok(ConstantReport::complex(
        "Zstar",
        data.limit(),
        value,
        one.tail_bound + lev.tail_bound,
    ))
}

fn richardson<F>(f: F, tail: f64, limit: u64, name: &str) -> Result<ConstantReport>
where
    F: Fn(f64) -> Result<C>,
{
    let h = ZSTAR_STEP;
    let d = |h: f64| -> Result<C> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let d1 = d(h)?;
    let d2 = d(h / 2.0)?;
    let value = (4.0 * d2 - d1) / 3.0;
    let tail = tail * (limit as f64).ln() + (d2 - d1).norm() / 3.0 * h;
    Ok(ConstantReport::complex(name, limit, value, tail))
}

/// `∂/∂u Z*(u, 0)` at `u = 0`.
pub fn zstar_second_du(data: &LocalData) -> Result<ConstantReport> {
    let z0 = zstar_second(data, c(0.0), c(0.0))?;
    richardson(
        |h| Ok(zstar_second(data, c(h), c(0.0))?.as_complex()),
        z0.tail_bound,
        data.limit(),
        "Zstar_du",
    )
}

/// `Z*_{N′}(u, v)` of the mixed moment; `n_prime` is a unitary divisor of
/// `N₁N₂`.
pub fn zstar_mixed_part(
    f: &LocalData,
    g: &LocalData,
    n_prime: u64,
    u: C,
    v: C,
) -> Result<ConstantReport> {
    let (n1, n2) = (f.form().level, g.form().level);
    if f.form().label == g.form().label {
        return Err(Error::InvalidArgument("mixed moment needs distinct forms".into()));
    }
    if gcd(n1, n2) != 1 {
        return Err(Error::InvalidArgument(format!(
            "levels {n1} and {n2} are not coprime"
        )));
    }
    check_domain(&[u, v])?;
    check_n_prime(n1 * n2, n_prime)?;
    check_coverage(f, n1)?;
    check_coverage(g, n2)?;
    let limit = f.limit().min(g.limit());
    let k = f.primes().partition_point(|&p| p <= limit);
    let mut prod = LogProduct::new(decay(&[u, v]), limit);
    for i in 0..k {
        let p = f.primes()[i];
        let (a, b) = (f.lambdas()[i], g.lambdas()[i]);
        let (bad_f, bad_g) = (f.is_bad(p), g.is_bad(p));
        let raw = if p == 2 {
            c(1.0)
        } else {
            let tu = p_pow(p, 0.5 + u);
            let tv = p_pow(p, 0.5 + v);
            let cf = |t: C| bracket(a, if bad_f { 0.0 } else { 1.0 }, t);
            let cg = |t: C| bracket(b, if bad_g { 0.0 } else { 1.0 }, t);
            let even = cf(tu) * cg(tv);
            let odd = cf(-tu) * cg(-tv);
            if bad_f || bad_g {
                weight(p) * 0.5 * (even + ord_sign(n_prime, p) * odd)
            } else {
                1.0 + weight(p) * (0.5 * (even + odd) - 1.0)
            }
        };
        let norm = rankin_inv(a, b, bad_f, bad_g, p_pow(p, 1.0 + u + v))
            * sym2_inv(a, bad_f, p_pow(p, 1.0 + 2.0 * u))
            * sym2_inv(b, bad_g, p_pow(p, 1.0 + 2.0 * v));
        prod.push(p, raw * norm);
    }
    let (value, tail) = prod.finish();
    Ok(ConstantReport::complex(
        &format!("Zstar_{n_prime}"),
        limit,
        value,
        tail,
    ))
}

/// `Z*(u,v) = Z*_1 − w_f Z*_{N₁} − w_g Z*_{N₂} + w_f w_g Z*_{N₁N₂}`.
pub fn zstar_mixed(f: &LocalData, g: &LocalData, u: C, v: C) -> Result<ConstantReport> {
    let wf = f.form().root_number()?.as_f64();
    let wg = g.form().root_number()?.as_f64();
    let (n1, n2) = (f.form().level, g.form().level);
    let parts = [
        (1, 1.0),
        (n1, -wf),
        (n2, -wg),
        (n1 * n2, wf * wg),
    ];
    let mut value = c(0.0);
    let mut tail = 0.0;
    for (n_prime, coef) in parts {
        let r = zstar_mixed_part(f, g, n_prime, u, v)?;
        value += coef * r.as_complex();
        tail += r.tail_bound;
    }
    Ok(ConstantReport::complex(
        "Zstar",
        f.limit().min(g.limit()),
        value,
        tail,
    ))
}

/// Raw local factor of the first-moment product.
pub(crate) fn first_raw(p: u64, lambda: f64, bad: bool, sign: f64, u: C) -> C {
    if p == 2 {
        return c(1.0);
    }
    let t = p_pow(p, 0.5 + u);
    if bad {
        let b = |t: C| 1.0 / (1.0 - lambda * t);
        weight(p) * 0.5 * (b(t) + sign * b(-t))
    } else {
        let a = |t: C| bracket(lambda, 1.0, t);
        1.0 + weight(p) * (0.5 * (a(t) + a(-t)) - 1.0)
    }
}

/// `Z*_{N′}(u)` of the first moment.
pub fn zstar_first_part(data: &LocalData, n_prime: u64, u: C) -> Result<ConstantReport> {
    let level = data.form().level;
    check_domain(&[u])?;
    check_n_prime(level, n_prime)?;
    check_coverage(data, level)?;
    let mut prod = LogProduct::new(decay(&[u]), data.limit());
    for (&p, &l) in data.primes().iter().zip(data.lambdas()) {
        let bad = data.is_bad(p);
        let raw = first_raw(p, l, bad, ord_sign(n_prime, p), u);
        prod.push(p, raw * sym2_inv(l, bad, p_pow(p, 1.0 + 2.0 * u)));
    }
    let (value, tail) = prod.finish();
    Ok(ConstantReport::complex(
        &format!("Zstar_{n_prime}"),
        data.limit(),
        value,
        tail,
    ))
}

/// `Z*(u) = Z*_1(u) − w(f) Z*_N(u)`.
pub fn zstar_first(data: &LocalData, u: C) -> Result<ConstantReport> {
    let w = data.form().root_number()?.as_f64();
    let one = zstar_first_part(data, 1, u)?;
    let lev = zstar_first_part(data, data.form().level, u)?;
    Ok(ConstantReport::complex(
        "Zstar",
        data.limit(),
        one.as_complex() - w * lev.as_complex(),
        one.tail_bound + lev.tail_bound,
    ))
}

/// `Z*′(0)` of the first moment.
pub fn zstar_first_derivative(data: &LocalData) -> Result<ConstantReport> {
    let z0 = zstar_first(data, c(0.0))?;
    richardson(
        |h| Ok(zstar_first(data, c(h))?.as_complex()),
        z0.tail_bound,
        data.limit(),
        "Zstar_d",
    )
}

#[cfg(test)]
mod tests {
    use super::super::lfactors::{rankin_local_inverse, sym2_local_inverse};
    use super::super::LocalRoots;
    use super::*;
    use crate::exec::Execution;
    use crate::forms::{lookup, Sign};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(label: &str, limit: u64) -> LocalData {
        let eta = match label {
            "11a" | "19a" | "49a" => Sign::Minus,
            _ => Sign::Plus,
        };
        LocalData::new(&lookup(label).unwrap().with_eta(eta), limit, Execution::Parallel).unwrap()
    }

    /// `λ(p^j)` by the Hecke recursion (good `p`) or `λ(p)^j` (bad `p`).
    fn hecke_powers(lambda: f64, bad: bool, n: usize) -> Vec<f64> {
        let mut out = vec![1.0, lambda];
        for j in 2..n {
            let next = if bad {
                lambda * out[j - 1]
            } else {
                lambda * out[j - 1] - out[j - 2]
            };
            out.push(next);
        }
        out
    }

    /// Raw second-moment factor from the double Dirichlet series.
    fn raw_series(p: u64, lambda: f64, bad: bool, sign: f64, u: C, v: C) -> C {
        let n = 80;
        let pw = hecke_powers(lambda, bad, n);
        let tu = p_pow(p, 0.5 + u);
        let tv = p_pow(p, 0.5 + v);
        let mut even = c(0.0);
        let mut odd = c(0.0);
        let mut tj = c(1.0);
        for j in 0..n {
            let mut tk = c(1.0);
            for k in 0..n {
                let term = pw[j] * pw[k] * tj * tk;
                if (j + k) % 2 == 0 {
                    even += term;
                } else {
                    odd += term;
                }
                tk *= tv;
            }
            tj *= tu;
        }
        if bad {
            weight(p) * if sign > 0.0 { even } else { odd }
        } else {
            1.0 + weight(p) * (even - 1.0)
        }
    }

    fn normalizer_from_roots(p: u64, lambda: f64, bad: bool, u: C, v: C) -> C {
        let r = LocalRoots::new(p, lambda, bad);
        let one = c(1.0);
        let sym = |s: C| {
            let x = p_pow(p, s);
            if bad {
                one - lambda * lambda * x
            } else {
                (one - r.alpha * r.alpha * x) * (one - x) * (one - r.beta * r.beta * x)
            }
        };
        (one - p_pow(p, 1.0 + u + v)) * sym(1.0 + 2.0 * u) * sym(1.0 + u + v) * sym(1.0 + 2.0 * v)
    }

    #[test]
    fn factorization_identity_against_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = data("11a", 1000);
        for _ in 0..20 {
            let u = C::new(rng.gen_range(0.0..0.2), rng.gen_range(-5.0..5.0));
            let v = C::new(rng.gen_range(0.0..0.2), rng.gen_range(-5.0..5.0));
            for n_prime in [1, 11] {
                let mut raw_log = c(0.0);
                let mut oracle_log = c(0.0);
                for (&p, &l) in d.primes().iter().zip(d.lambdas()).skip(1) {
                    let bad = d.is_bad(p);
                    let sign = ord_sign(n_prime, p);
                    let series = raw_series(p, l, bad, sign, u, v);
                    let closed = second_raw(p, l, bad, sign, u, v);
                    assert!((series - closed).norm() < 1e-12, "p = {p}");
                    let zstar_p = closed * second_normalizer(p, l, bad, u, v);
                    let rebuilt = zstar_p / normalizer_from_roots(p, l, bad, u, v);
                    assert!((rebuilt - series).norm() < 1e-12, "p = {p}");
                    raw_log += series.ln();
                    oracle_log += rebuilt.ln();
                }
                assert!((raw_log - oracle_log).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn complex_local_inverses_match_real() {
        for &(a, b) in &[(0.3, -1.2), (1.9, 0.1), (-0.5, 0.5)] {
            for &x in &[0.5, 0.01, 1.0 / 7.0] {
                for &(bf, bg) in &[(false, false), (true, false), (false, true), (true, true)] {
                    let r = rankin_inv(a, b, bf, bg, c(x));
                    assert!((r.re - rankin_local_inverse(a, b, bf, bg, x)).abs() < 1e-15);
                }
                let s = sym2_inv(a, false, c(x));
                assert!((s.re - sym2_local_inverse(a, false, x)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn local_factor_decay_at_origin() {
        let d = data("11a", 10_000);
        let factor = |i: usize| {
            let p = d.primes()[i];
            let l = d.lambdas()[i];
            let bad = d.is_bad(p);
            second_raw(p, l, bad, 1.0, c(0.0), c(0.0)) * second_normalizer(p, l, bad, c(0.0), c(0.0))
        };
        let mut fitted: f64 = 0.0;
        let mut late: f64 = 0.0;
        for i in 1..d.primes().len() {
            let p = d.primes()[i] as f64;
            let dev = (factor(i) - 1.0).norm() * p.powf(1.5);
            if p <= 1000.0 {
                fitted = fitted.max(dev);
            } else {
                late = late.max(dev);
            }
        }
        assert!(fitted < 20.0, "C = {fitted}");
        assert!(late <= fitted, "late {late} vs fitted {fitted}");
    }

    #[test]
    fn good_brackets_are_positive() {
        for label in ["11a", "19a", "37a", "49a", "Delta"] {
            let d = data(label, 10_000);
            for (&p, &l) in d.primes().iter().zip(d.lambdas()).skip(1) {
                let t = 1.0 / (p as f64).sqrt();
                if d.is_bad(p) {
                    assert!(1.0 - l * t > 0.0 && 1.0 + l * t > 0.0);
                } else {
                    assert!(1.0 - l * t + t * t > 0.0 && 1.0 + l * t + t * t > 0.0);
                }
            }
        }
    }

    #[test]
    fn square_level_vanishes() {
        let d = data("49a", 100_000);
        let z = zstar_second(&d, c(0.0), c(0.0)).unwrap();
        assert!(z.as_complex().norm() <= z.tail_bound);
        assert_eq!(z.value, 0.0);
        let z = zstar_first(&d, c(0.0)).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn eleven_a_positive_and_stable() {
        let d = data("11a", 100_000);
        let big = zstar_second(&d, c(0.0), c(0.0)).unwrap();
        let small = zstar_second(&d.truncated(10_000), c(0.0), c(0.0)).unwrap();
        assert!(big.value > 0.0);
        assert!(big.imag.abs() < 1e-14);
        assert!((big.value - small.value).abs() / big.value < 5e-4);
        assert!(zstar_first(&d, c(0.0)).unwrap().value > 0.0);
    }

    #[test]
    fn doubling_p_stays_within_tail() {
        for label in ["11a", "37a"] {
            let d = data(label, 40_000);
            let half = d.truncated(20_000);
            for (u, v) in [(0.0, 0.0), (0.1, -0.1), (-0.2, 0.05)] {
                let (u, v) = (c(u), c(v));
                let a = zstar_second(&half, u, v).unwrap();
                let b = zstar_second(&d, u, v).unwrap();
                assert!((a.as_complex() - b.as_complex()).norm() < a.tail_bound, "{label} {u} {v}");
                let a = zstar_first(&half, u).unwrap();
                let b = zstar_first(&d, u).unwrap();
                assert!((a.as_complex() - b.as_complex()).norm() < a.tail_bound);
            }
        }
    }

    #[test]
    fn domain_errors() {
        let d = data("11a", 1000);
        assert!(matches!(zstar_second(&d, c(-0.245), c(0.0)), Err(Error::Domain(_))));
        assert!(matches!(zstar_first(&d, c(-0.3)), Err(Error::Domain(_))));
        assert!(zstar_first(&d, c(-0.23)).is_ok());
        assert!(matches!(zstar_second_part(&d, 3, c(0.0), c(0.0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn derivative_matches_coarse_secant() {
        let d = data("11a", 20_000);
        let der = zstar_second_du(&d).unwrap();
        let h = 1e-2;
        let sec = (zstar_second(&d, c(h), c(0.0)).unwrap().as_complex()
            - zstar_second(&d, c(-h), c(0.0)).unwrap().as_complex())
            / (2.0 * h);
        assert!((der.as_complex() - sec).norm() < 1e-3 * sec.norm().max(1.0));
        let der1 = zstar_first_derivative(&d).unwrap();
        assert!(der1.value.is_finite());
    }

    #[test]
    fn mixed_swap_symmetry_and_vanishing() {
        let f = data("11a", 20_000);
        let g = data("19a", 20_000);
        let u = C::new(0.05, 1.0);
        let v = C::new(0.1, -0.5);
        let a = zstar_mixed(&f, &g, u, v).unwrap().as_complex();
        let b = zstar_mixed(&g, &f, v, u).unwrap().as_complex();
        assert!((a - b).norm() < 1e-13 * a.norm());
        let z = zstar_mixed(&f, &g, c(0.0), c(0.0)).unwrap();
        assert!(z.value.abs() > z.tail_bound);

        let sq = data("49a", 20_000);
        let z = zstar_mixed(&sq, &f, c(0.0), c(0.0)).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn first_lower_bound() {
        for label in ["11a", "19a", "37a"] {
            let d = data(label, 100_000);
            let n = d.form().level as f64;
            let z = zstar_first(&d, c(0.0)).unwrap().value;
            assert!(z >= 1e-3 * n.ln().ln() / n.ln().sqrt(), "{label}: {z}");
        }
    }
}

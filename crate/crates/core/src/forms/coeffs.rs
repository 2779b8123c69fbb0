use super::tau::tau_table;
use super::{FormSpec, Source};
use crate::arith::sieve;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Default ceiling on the working memory of one coefficient table.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

#[derive(Debug, Clone, Copy)]
pub struct CoeffOptions {
    pub memory_budget: u64,
    pub exec: Execution,
}

impl Default for CoeffOptions {
    fn default() -> Self {
        CoeffOptions {
            memory_budget: DEFAULT_MEMORY_BUDGET,
            exec: Execution::Parallel,
        }
    }
}

/// `λ_f(n)` for `1 ≤ n ≤ n_max`, plus the AFE weights `λ_f(n)/√n`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    form: FormSpec,
    n_max: usize,
    lambda: Vec<f64>,
    scaled: Vec<f64>,
}

impl CoefficientTable {
    /// Wraps `λ(1..=n_max)`; `lambda[0]` must be `λ(1)`.
    pub fn from_lambda(form: FormSpec, lambda_from_one: &[f64]) -> Result<Self> {
        let n_max = lambda_from_one.len();
        if n_max == 0 || lambda_from_one[0] != 1.0 {
            return Err(Error::InvalidArgument(
                "coefficient table must start with λ(1) = 1".into(),
            ));
        }
        let mut lambda = Vec::with_capacity(n_max + 1);
        lambda.push(0.0);
        lambda.extend_from_slice(lambda_from_one);
        let scaled = lambda
            .iter()
            .enumerate()
            .map(|(n, &l)| if n == 0 { 0.0 } else { l / (n as f64).sqrt() })
            .collect();
        Ok(CoefficientTable {
            form,
            n_max,
            lambda,
            scaled,
        })
    }

    pub fn form(&self) -> &FormSpec {
        &self.form
    }

    /// Replaces the form metadata, e.g. once `η` is known.
    pub fn set_form(&mut self, form: FormSpec) {
        self.form = form;
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    #[inline]
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n]
    }

    /// `λ(n)` indexed by `n`, with a zero at index 0.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// `λ(n)/√n` indexed by `n`, with a zero at index 0.
    pub fn scaled(&self) -> &[f64] {
        &self.scaled
    }
}

/// Bytes held while sieving to `n_max`.
pub fn estimate_bytes(n_max: usize) -> u64 {
    // λ and λ/√n (8 + 8), least prime factors (4), exact integers (16)
    36 * (n_max as u64 + 1)
}

/// `a(n) / n^{(κ−1)/2}`.
#[inline]
pub fn normalize(a: i128, n: u64, weight: u32) -> f64 {
    let x = n as f64;
    (a as f64) / (x.powi(weight as i32 / 2 - 1) * x.sqrt())
}

/// Unnormalised prime coefficients `a(p)` for the given primes.
pub fn prime_inputs(form: &FormSpec, primes: &[u64], exec: Execution) -> Result<Vec<i128>> {
    match &form.source {
        Source::EllipticCurve(e) => Ok(exec.map(primes, |&p| e.ap(p) as i128)),
        Source::DeltaForm => {
            let top = primes.last().copied().unwrap_or(1) as usize;
            let tau = tau_table(top.max(1))?;
            Ok(primes.iter().map(|&p| tau[p as usize]).collect())
        }
    }
}

pub fn sieve_coefficients(form: &FormSpec, n_max: usize) -> Result<CoefficientTable> {
    sieve_coefficients_with(form, n_max, &CoeffOptions::default())
}

/// Exact integer coefficients by one least-prime-factor pass, normalised at
/// the end. For `p ∤ N`: `a(p^{k+1}) = a(p)a(p^k) − p^{κ−1}a(p^{k−1})`;
/// for `p | N`: `a(p^k) = a(p)^k`.
pub fn sieve_coefficients_with(
    form: &FormSpec,
    n_max: usize,
    opts: &CoeffOptions,
) -> Result<CoefficientTable> {
    form.validate()?;
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be positive".into()));
    }
    if let Some(cap) = form.n_max_cap() {
        if n_max > cap {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients are capped at n_max = {cap}, requested {n_max}",
                form.label
            )));
        }
    }
    let need = estimate_bytes(n_max);
    if need > opts.memory_budget {
        return Err(Error::ResourceLimit {
            what: format!("coefficient table for {} to n = {n_max} (bytes)", form.label),
            required: need,
            limit: opts.memory_budget,
        });
    }
    let table = sieve(n_max.max(2) as u64)?;
    let primes = table.primes_up_to(n_max as u64);
    let ap = prime_inputs(form, primes, opts.exec)?;
    let mut a_of_p = vec![0i128; n_max + 1];
    for (&p, &a) in primes.iter().zip(&ap) {
        a_of_p[p as usize] = a;
    }
    let level = form.level;
    let k1 = form.weight - 1;
    let overflow = || Error::Precision(format!("integer overflow sieving {}", form.label));

    let mut a = vec![0i128; n_max + 1];
    a[1] = 1;
    for n in 2..=n_max {
        let p = table.smallest_factor(n as u64) as usize;
        let mut m = n;
        let mut pk = 1usize;
        while m % p == 0 {
            m /= p;
            pk *= p;
        }
        a[n] = if m > 1 {
            a[pk].checked_mul(a[m]).ok_or_else(overflow)?
        } else if pk == p {
            a_of_p[p]
        } else if level % p as u64 == 0 {
            a[p].checked_mul(a[pk / p]).ok_or_else(overflow)?
        } else {
            let pw = (p as i128).checked_pow(k1).ok_or_else(overflow)?;
            let t1 = a[p].checked_mul(a[pk / p]).ok_or_else(overflow)?;
            let t2 = pw.checked_mul(a[pk / p / p]).ok_or_else(overflow)?;
            t1 - t2
        };
    }
    let lambda: Vec<f64> = (1..=n_max)
        .map(|n| normalize(a[n], n as u64, form.weight))
        .collect();
    CoefficientTable::from_lambda(form.clone(), &lambda)
}

#[cfg(test)]
mod tests {
    use super::super::lookup;
    use super::*;
    use crate::arith::{factorize, gcd};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn table_11a() -> &'static CoefficientTable {
        static T: OnceLock<CoefficientTable> = OnceLock::new();
        T.get_or_init(|| sieve_coefficients(&lookup("11a").unwrap(), 100_000).unwrap())
    }

    /// Dirichlet coefficients of `∏_{p ≤ P} L_p(s)` expanded in place: the
    /// series is divided by each local polynomial in turn.
    fn euler_product_expansion(form: &FormSpec, n_max: usize, p_max: u64) -> Vec<i128> {
        let primes: Vec<u64> = (2..=p_max).filter(|&p| crate::arith::is_prime(p)).collect();
        let ap = prime_inputs(form, &primes, Execution::Sequential).unwrap();
        let mut c = vec![0i128; n_max + 1];
        c[1] = 1;
        for (&p, &a) in primes.iter().zip(&ap) {
            let p = p as usize;
            let bad = form.level % p as u64 == 0;
            let pk = (p as i128).pow(form.weight - 1);
            for n in (p..=n_max).step_by(p) {
                let mut v = c[n] + a * c[n / p];
                if !bad && n % (p * p) == 0 {
                    v -= pk * c[n / p / p];
                }
                c[n] = v;
            }
        }
        c
    }

    #[test]
    fn matches_euler_product_expansion_bitwise() {
        let form = lookup("11a").unwrap();
        let t = sieve_coefficients(&form, 10_000).unwrap();
        let c = euler_product_expansion(&form, 10_000, 10_000);
        for n in 1..=10_000usize {
            assert_eq!(t.lambda(n).to_bits(), normalize(c[n], n as u64, 2).to_bits(), "n = {n}");
        }
    }

    #[test]
    fn delta_agrees_with_tau_table() {
        let form = lookup("Delta").unwrap();
        let t = sieve_coefficients(&form, 10_000).unwrap();
        let tau = tau_table(10_000).unwrap();
        for n in 1..=10_000usize {
            assert_eq!(t.lambda(n), normalize(tau[n], n as u64, 12), "n = {n}");
        }
        assert!(matches!(
            sieve_coefficients(&form, 10_001),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn hecke_square_relation() {
        let t = table_11a();
        assert_eq!(t.lambda(1), 1.0);
        for p in [2usize, 3, 5, 7, 13, 17, 19, 23, 29, 31] {
            let l = t.lambda(p);
            assert!((t.lambda(p * p) - (l * l - 1.0)).abs() < 1e-14, "p = {p}");
        }
        let l11 = t.lambda(11);
        assert!((l11 - 1.0 / 11f64.sqrt()).abs() < 1e-15);
        assert!((t.lambda(121) - l11 * l11).abs() < 1e-15);
    }

    #[test]
    fn deligne_bound_all_forms() {
        for label in ["Delta", "11a", "19a", "37a", "49a"] {
            let form = lookup(label).unwrap();
            let n_max = if label == "Delta" { 10_000 } else { 50_000 };
            let t = sieve_coefficients(&form, n_max).unwrap();
            for n in 1..=n_max {
                let dn: u32 = factorize(n as u64).unwrap().factors.iter().map(|&(_, e)| e + 1).product();
                assert!(t.lambda(n).abs() <= dn as f64 + 1e-9, "{label} n = {n}");
            }
            for &(p, _) in &form.level_factorization().factors {
                assert!(t.lambda(p as usize).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn memory_budget_enforced() {
        let form = lookup("11a").unwrap();
        let opts = CoeffOptions {
            memory_budget: 1000,
            exec: Execution::Sequential,
        };
        match sieve_coefficients_with(&form, 10_000, &opts) {
            Err(Error::ResourceLimit { required, .. }) => assert_eq!(required, estimate_bytes(10_000)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sequential_and_parallel_tables_identical() {
        let form = lookup("37a").unwrap();
        let seq = CoeffOptions { exec: Execution::Sequential, ..Default::default() };
        let a = sieve_coefficients_with(&form, 30_000, &seq).unwrap();
        let b = sieve_coefficients(&form, 30_000).unwrap();
        assert_eq!(a.lambdas(), b.lambdas());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn multiplicative_on_coprime_pairs(m in 1usize..300, n in 1usize..300) {
            prop_assume!(gcd(m as u64, n as u64) == 1);
            let t = table_11a();
            let lhs = t.lambda(m * n);
            let rhs = t.lambda(m) * t.lambda(n);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }
}

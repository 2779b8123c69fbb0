//! Exact integer arithmetic: primes, factorisation, Möbius, squarefree tests
//! and the Kronecker symbol.

use crate::error::{Error, Result};

/// `n = ∏ p^e` with primes in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Exponent of `p` in `n` (zero when `p ∤ n`).
    pub fn ord(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }
}

/// Primes up to `limit` together with a least-prime-factor table.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    smallest_factor: Vec<u32>,
}

/// Linear sieve of Euler; every composite is struck exactly once.
pub fn sieve(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::InvalidArgument(format!(
            "sieve limit must be at least 2, got {limit}"
        )));
    }
    if limit > u32::MAX as u64 {
        return Err(Error::ResourceLimit {
            what: "sieve limit".into(),
            required: limit,
            limit: u32::MAX as u64,
        });
    }
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u64> = Vec::new();
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u64);
        }
        let si = spf[i];
        for &p in &primes {
            let p32 = p as u32;
            let m = i * p as usize;
            if p32 > si || m > n {
                break;
            }
            spf[m] = p32;
        }
    }
    Ok(PrimeTable {
        limit,
        primes,
        smallest_factor: spf,
    })
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes `≤ x`.
    pub fn primes_up_to(&self, x: u64) -> &[u64] {
        let k = self.primes.partition_point(|&p| p <= x);
        &self.primes[..k]
    }

    /// Least prime factor of `2 ≤ n ≤ limit`.
    #[inline]
    pub fn smallest_factor(&self, n: u64) -> u64 {
        debug_assert!(n >= 2 && n <= self.limit);
        self.smallest_factor[n as usize] as u64
    }

    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        if n <= self.limit {
            n >= 2 && self.smallest_factor[n as usize] as u64 == n
        } else {
            is_prime(n)
        }
    }

    /// Factorisation through the table, falling back to trial division above
    /// the limit.
    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        if n == 0 {
            return Err(Error::InvalidArgument("cannot factor 0".into()));
        }
        if n > self.limit {
            return factorize(n);
        }
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.smallest_factor(m);
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        Ok(Factorization { n, factors })
    }

    pub fn mobius(&self, n: u64) -> Result<i32> {
        Ok(mobius_of(&self.factorize(n)?))
    }

    pub fn is_squarefree(&self, n: u64) -> bool {
        match self.factorize(n) {
            Ok(f) => f.is_squarefree(),
            Err(_) => false,
        }
    }
}

/// Factorisation by trial division.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot factor 0".into()));
    }
    let mut factors = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Ok(Factorization { n, factors })
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn mobius_of(f: &Factorization) -> i32 {
    if f.is_squarefree() {
        if f.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    } else {
        0
    }
}

pub fn mobius(n: u64) -> Result<i32> {
    Ok(mobius_of(&factorize(n)?))
}

pub fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Jacobi symbol `(a/n)` for odd `n > 0`.
pub fn jacobi(a: i64, n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut a = (a as i128).rem_euclid(n as i128) as u64;
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol `(a/n)` with the standard extension to even and
/// negative `n`: `(a/2)` is 0 for even `a` and `±1` according to `a mod 8`,
/// and `(a/−1)` is the sign of `a`.
pub fn kronecker(a: i64, n: i64) -> Result<i32> {
    if a == 0 && n == 0 {
        return Err(Error::InvalidArgument("(0/0) is undefined".into()));
    }
    if n == 0 {
        return Ok(if a == 1 || a == -1 { 1 } else { 0 });
    }
    if a % 2 == 0 && n % 2 == 0 {
        return Ok(0);
    }
    let mut k = 1;
    let mut m = n.unsigned_abs();
    let v = m.trailing_zeros();
    m >>= v;
    if v % 2 == 1 {
        k = match a.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    if n < 0 && a < 0 {
        k = -k;
    }
    if m == 1 {
        return Ok(k);
    }
    Ok(k * jacobi(a, m))
}

/// `b^e mod m` for `m < 2^32`.
#[inline]
pub fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    let mut b = b % m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m` when `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (m as i64, (a % m) as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i64) as u64)
}

/// A square root of the quadratic residue `a` modulo the odd prime `p`
/// (Tonelli–Shanks).
pub fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = tt * tt % p;
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = b * b % p;
        t = t * c % p;
        r = r * b % p;
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_primes(limit: u64) -> Vec<u64> {
        (2..=limit)
            .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect()
    }

    #[test]
    fn small_sieves() {
        assert_eq!(sieve(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(sieve(2).unwrap().primes(), &[2]);
        assert!(matches!(sieve(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn prime_count_matches_trial_division() {
        let t = sieve(100_000).unwrap();
        let oracle = trial_primes(100_000);
        assert_eq!(oracle.len(), 9592);
        assert_eq!(t.primes(), &oracle[..]);
    }

    #[test]
    fn smallest_factor_is_prime_divisor() {
        let t = sieve(20_000).unwrap();
        for n in 2..=20_000u64 {
            let p = t.smallest_factor(n);
            assert_eq!(n % p, 0);
            assert!(is_prime(p));
            assert!((2..p).all(|q| n % q != 0));
        }
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(mobius(1).unwrap(), 1);
        assert_eq!(mobius(12).unwrap(), 0);
        assert_eq!(mobius(30).unwrap(), -1);
        assert!(mobius(0).is_err());
    }

    #[test]
    fn squarefree_examples_and_count() {
        assert!(is_squarefree(1));
        assert!(!is_squarefree(18));
        let mut count = 0;
        for n in (1..=10_000u64).step_by(2) {
            let mut sf = true;
            let mut d = 2;
            while d * d <= n {
                if n % (d * d) == 0 {
                    sf = false;
                    break;
                }
                d += 1;
            }
            if sf {
                count += 1;
            }
            assert_eq!(sf, is_squarefree(n), "n = {n}");
        }
        assert_eq!(count, 4056);
    }

    #[test]
    fn squarefree_density() {
        let t = sieve(1_000_000).unwrap();
        let l = 1_000_000u64;
        let s: i64 = (1..=l).map(|n| t.mobius(n).unwrap().abs() as i64).sum();
        let density = s as f64 / l as f64;
        let target = 6.0 / std::f64::consts::PI.powi(2);
        assert!((density / target - 1.0).abs() < 0.02);
    }

    #[test]
    fn kronecker_examples() {
        for n in 1..100 {
            assert_eq!(kronecker(1, n).unwrap(), 1);
        }
        assert_eq!(kronecker(8, 3).unwrap(), -1);
        assert!(kronecker(0, 0).is_err());
    }

    // Real primitive character of conductor 40, (40/m), from quadratic
    // residues: for odd prime m it is +1 iff 40 is a square mod m, and
    // multiplicativity extends it.
    #[test]
    fn kronecker_40_matches_residue_table() {
        let euler = |a: i64, p: u64| -> i32 {
            let r = pow_mod(a.rem_euclid(p as i64) as u64, (p - 1) / 2, p);
            if r == 0 {
                0
            } else if r == 1 {
                1
            } else {
                -1
            }
        };
        let squares = |a: u64, p: u64| (0..p).any(|x| x * x % p == a % p);
        for m in 1..=30u64 {
            if gcd(m, 40) != 1 {
                continue;
            }
            let f = factorize(m).unwrap();
            let mut expect = 1;
            for &(p, e) in &f.factors {
                let s = if squares(40, p) { 1 } else { -1 };
                assert_eq!(s, euler(40, p));
                expect *= if e % 2 == 0 { 1 } else { s };
            }
            assert_eq!(kronecker(40, m as i64).unwrap(), expect, "m = {m}");
        }
    }

    #[test]
    fn kronecker_matches_euler_criterion_for_odd_n() {
        let primes = trial_primes(1000);
        for n in (1..=1000u64).step_by(2) {
            let f = factorize(n).unwrap();
            for a in -60i64..=60 {
                let mut expect = 1;
                for &(p, e) in &f.factors {
                    debug_assert!(primes.contains(&p));
                    let r = pow_mod(a.rem_euclid(p as i64) as u64, (p - 1) / 2, p);
                    let s: i32 = if r == 0 {
                        0
                    } else if r == 1 {
                        1
                    } else {
                        -1
                    };
                    expect *= s.pow(e);
                }
                assert_eq!(kronecker(a, n as i64).unwrap(), expect, "({a}/{n})");
            }
        }
    }

    #[test]
    fn kronecker_multiplicative_in_odd_modulus() {
        for a in [-7i64, -3, 5, 8, 40, 88, 136] {
            for m in (1..=200i64).step_by(2) {
                for n in (1..=200i64).step_by(2) {
                    assert_eq!(
                        kronecker(a, m * n).unwrap(),
                        kronecker(a, m).unwrap() * kronecker(a, n).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn kronecker_even_and_negative_extension() {
        assert_eq!(kronecker(5, 2).unwrap(), -1);
        assert_eq!(kronecker(7, 2).unwrap(), 1);
        assert_eq!(kronecker(6, 4).unwrap(), 0);
        assert_eq!(kronecker(-3, -1).unwrap(), -1);
        assert_eq!(kronecker(3, -1).unwrap(), 1);
        assert_eq!(kronecker(1, 0).unwrap(), 1);
        assert_eq!(kronecker(2, 0).unwrap(), 0);
    }

    #[test]
    fn sqrt_mod_roundtrip() {
        for &p in &trial_primes(2000)[1..] {
            for a in 1..p.min(60) {
                match sqrt_mod(a, p) {
                    Some(r) => assert_eq!(r * r % p, a),
                    None => assert_eq!(jacobi(a as i64, p), -1),
                }
            }
        }
    }

    proptest! {
        #[test]
        fn factorization_reconstructs(n in 1u64..2_000_000) {
            static TABLE: std::sync::OnceLock<PrimeTable> = std::sync::OnceLock::new();
            let t = TABLE.get_or_init(|| sieve(1_000_000).unwrap());
            let f = t.factorize(n).unwrap();
            let prod: u64 = f.factors.iter().map(|&(p, e)| p.pow(e)).product();
            prop_assert_eq!(prod, n);
            prop_assert!(f.factors.windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(f.factors.iter().all(|&(p, e)| is_prime(p) && e >= 1));
            prop_assert_eq!(f, factorize(n).unwrap());
        }

        #[test]
        fn kronecker_vanishes_iff_not_coprime(a in -10_000i64..10_000, n in 1i64..10_000) {
            let k = kronecker(a, n).unwrap();
            prop_assert_eq!(k == 0, gcd(a.unsigned_abs(), n as u64) != 1);
        }

        #[test]
        fn inverse_mod_prime(a in 1u64..100_000, i in 0usize..50) {
            let p = [10007u64, 65537, 99991, 1_000_003, 7][i % 5];
            if a % p != 0 {
                let b = inv_mod(a, p).unwrap();
                prop_assert_eq!(a % p * b % p, 1);
            }
        }
    }
}

//! Euler products behind the main-term constants: `L(1, sym²f)`,
//! `L(1, f⊗g)`, the arithmetic factors `Z*` and the assembled `C₂(f)`,
//! `C(f,g)`, `C₃(f)`.

mod constants;
mod lfactors;
mod zstar;

pub use constants::{constants_first, constants_mixed, constants_second, Constants, MomentKind};
pub use lfactors::{rankin_L1, rankin_local_inverse, sym2_L, sym2_local_inverse, sym2_log_derivative};
pub use zstar::{
    zstar_first, zstar_first_derivative, zstar_first_part, zstar_mixed, zstar_mixed_part,
    zstar_second, zstar_second_du, zstar_second_part, ZSTAR_STEP,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::sieve;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forms::{prime_inputs, CoefficientTable, FormSpec};
use crate::sum::ComplexNeumaier;

/// Default truncation of every Euler product.
pub const DEFAULT_PRIME_LIMIT: u64 = 100_000;

/// Distance from the boundary `Re = −1/4` of the region where the `Z*`
/// products converge absolutely.
pub const DOMAIN_EPS: f64 = 0.01;

/// Local roots `α, β` of a form at `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalRoots {
    pub p: u64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl LocalRoots {
    pub fn new(p: u64, lambda: f64, bad: bool) -> Self {
        if bad {
            return LocalRoots {
                p,
                alpha: Complex64::new(lambda, 0.0),
                beta: Complex64::new(0.0, 0.0),
            };
        }
        let disc = (4.0 - lambda * lambda).max(0.0).sqrt();
        LocalRoots {
            p,
            alpha: Complex64::new(lambda / 2.0, disc / 2.0),
            beta: Complex64::new(lambda / 2.0, -disc / 2.0),
        }
    }
}

/// `λ_f(p)` for all primes up to a limit.
#[derive(Debug, Clone)]
pub struct LocalData {
    form: FormSpec,
    primes: Vec<u64>,
    lambda: Vec<f64>,
}

impl LocalData {
    /// Computes `λ_f(p)` for `p ≤ limit` from the form's source.
    pub fn new(form: &FormSpec, limit: u64, exec: Execution) -> Result<Self> {
        if limit < 2 {
            return Err(Error::InvalidArgument("prime limit must be at least 2".into()));
        }
        if let Some(cap) = form.n_max_cap() {
            if limit > cap as u64 {
                return Err(Error::InvalidArgument(format!(
                    "{} prime data is capped at {cap}, requested {limit}",
                    form.label
                )));
            }
        }
        let primes = sieve(limit)?.primes().to_vec();
        let a = prime_inputs(form, &primes, exec)?;
        let lambda = primes
            .iter()
            .zip(&a)
            .map(|(&p, &ap)| crate::forms::normalize(ap, p, form.weight))
            .collect();
        Ok(LocalData {
            form: form.clone(),
            primes,
            lambda,
        })
    }

    /// Reads `λ_f(p)` from an existing table.
    pub fn from_table(table: &CoefficientTable, limit: u64) -> Result<Self> {
        if limit as usize > table.n_max() {
            return Err(Error::ResourceLimit {
                what: format!("prime data of {}", table.form().label),
                required: limit,
                limit: table.n_max() as u64,
            });
        }
        let primes = sieve(limit.max(2))?.primes().to_vec();
        let lambda = primes.iter().map(|&p| table.lambda(p as usize)).collect();
        Ok(LocalData {
            form: table.form().clone(),
            primes,
            lambda,
        })
    }

    /// Same primes, form metadata replaced (e.g. once `η` is known).
    pub fn with_form(mut self, form: FormSpec) -> Self {
        self.form = form;
        self
    }

    pub fn form(&self) -> &FormSpec {
        &self.form
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn limit(&self) -> u64 {
        self.primes.last().copied().unwrap_or(1)
    }

    pub fn is_bad(&self, p: u64) -> bool {
        self.form.level % p == 0
    }

    /// Data restricted to `p ≤ limit`.
    pub fn truncated(&self, limit: u64) -> LocalData {
        let k = self.primes.partition_point(|&p| p <= limit);
        LocalData {
            form: self.form.clone(),
            primes: self.primes[..k].to_vec(),
            lambda: self.lambda[..k].to_vec(),
        }
    }
}

/// A named constant with its truncation, tail bound and breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub name: String,
    pub prime_limit: u64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub imag: f64,
    pub tail_bound: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Component>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub value: f64,
    pub tail_bound: f64,
}

impl ConstantReport {
    pub fn real(name: &str, prime_limit: u64, value: f64, tail_bound: f64) -> Self {
        ConstantReport {
            name: name.to_string(),
            prime_limit,
            value,
            imag: 0.0,
            tail_bound,
            components: Vec::new(),
        }
    }

    pub fn complex(name: &str, prime_limit: u64, value: Complex64, tail_bound: f64) -> Self {
        ConstantReport {
            imag: value.im,
            ..Self::real(name, prime_limit, value.re, tail_bound)
        }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.value, self.imag)
    }

    pub fn as_component(&self) -> Component {
        Component {
            name: self.name.clone(),
            value: self.value,
            tail_bound: self.tail_bound,
        }
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|c| c.name == name).map(|c| c.value)
    }

    /// Flat `key = value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let n = &self.name;
        s += &format!("{n} = {:.15e}\n", self.value);
        if self.imag != 0.0 {
            s += &format!("{n}.imag = {:.15e}\n", self.imag);
        }
        s += &format!("{n}.tail_bound = {:.3e}\n", self.tail_bound);
        s += &format!("{n}.prime_limit = {}\n", self.prime_limit);
        for c in &self.components {
            s += &format!("{n}.{} = {:.15e}\n", c.name, c.value);
            s += &format!("{n}.{}.tail_bound = {:.3e}\n", c.name, c.tail_bound);
        }
        s
    }
}

/// Product of local factors accumulated as a compensated sum of logs, with
/// a tail bound from the decay of `|log factor|` over the last decade of
/// primes.
pub(crate) struct LogProduct {
    acc: ComplexNeumaier,
    decay: f64,
    limit: u64,
    worst: f64,
}

impl LogProduct {
    /// `decay` is the exponent `e` in `|log factor_p| ≲ C p^{−e}`.
    pub(crate) fn new(decay: f64, limit: u64) -> Self {
        LogProduct {
            acc: ComplexNeumaier::new(),
            decay,
            limit,
            worst: 0.0,
        }
    }

    pub(crate) fn push(&mut self, p: u64, factor: Complex64) {
        let l = factor.ln();
        self.acc.add(l);
        if 10 * p > self.limit {
            self.worst = self.worst.max(l.norm() * (p as f64).powf(self.decay));
        }
    }

    /// Value and absolute tail bound `|value| · C P^{1−e}/(e−1)`.
    pub(crate) fn finish(&self) -> (Complex64, f64) {
        let v = self.acc.value().exp();
        let e = self.decay;
        let rel = self.worst * (self.limit as f64).powf(1.0 - e) / (e - 1.0);
        (v, v.norm() * rel.exp_m1())
    }
}

/// Product of local factors at `s`, averaged over the partial products of
/// the last 10% of primes; returns the average and the largest deviation of
/// a partial product in that window.
pub(crate) fn averaged_log_product<F>(primes: &[u64], mut log_factor: F) -> (f64, f64)
where
    F: FnMut(usize) -> f64,
{
    let n = primes.len();
    let start = n - (n / 10).max(1);
    let mut acc = crate::sum::Neumaier::new();
    let mut window = Vec::with_capacity(n - start);
    for i in 0..n {
        acc.add(log_factor(i));
        if i >= start {
            window.push(acc.value());
        }
    }
    let mean = crate::sum::neumaier_sum(window.iter().copied()) / window.len() as f64;
    let spread = window.iter().map(|w| (w - mean).abs()).fold(0.0, f64::max);
    (mean, spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::lookup;

    #[test]
    fn local_roots_are_unimodular() {
        let data = LocalData::new(&lookup("11a").unwrap(), 10_000, Execution::Parallel).unwrap();
        for (&p, &l) in data.primes().iter().zip(data.lambdas()) {
            let r = LocalRoots::new(p, l, data.is_bad(p));
            assert!((r.alpha + r.beta - l).norm() < 1e-14);
            if !data.is_bad(p) {
                assert!((r.alpha.norm() - 1.0).abs() < 1e-12);
                assert!((r.alpha * r.beta - 1.0).norm() < 1e-12);
                let l2 = r.alpha * r.alpha + r.alpha * r.beta + r.beta * r.beta;
                assert!((l2.re - (l * l - 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kv_block() {
        let mut r = ConstantReport::real("C3", 1000, 0.25, 1e-6);
        r.components.push(Component {
            name: "Fhat1".into(),
            value: 0.95,
            tail_bound: 0.0,
        });
        let kv = r.to_kv();
        assert!(kv.contains("C3 = 2.5"));
        assert!(kv.contains("C3.prime_limit = 1000"));
        assert!(kv.contains("C3.Fhat1 = 9.5"));
        let json = serde_json::to_string(&r).unwrap();
        let back: ConstantReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}

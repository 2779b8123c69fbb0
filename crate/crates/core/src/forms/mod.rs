//! Built-in newforms and their normalised Hecke eigenvalues.

mod cache;
mod coeffs;
mod curve;
mod eta;
mod tau;

pub use cache::{CacheEntry, CoefficientCache, CACHE_ENV, CACHE_VERSION};
pub use coeffs::{
    estimate_bytes, normalize, prime_inputs, sieve_coefficients, sieve_coefficients_with,
    CoeffOptions, CoefficientTable, DEFAULT_MEMORY_BUDGET,
};
pub use curve::Weierstrass;
pub use eta::{alt_z, default_probes, infer_eta, infer_eta_report, probe_length, EtaProbe, ETA_TOL};
pub use tau::{tau_table, TAU_CAP};

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::arith::{factorize, Factorization};
use crate::error::{Error, Result};

/// A sign in `{−1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i32(v: i32) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Source {
    EllipticCurve(Weierstrass),
    DeltaForm,
}

/// A holomorphic newform of even weight `κ`, odd level `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSpec {
    pub label: String,
    pub weight: u32,
    pub level: u64,
    /// Fricke eigenvalue; `None` until inferred.
    pub eta: Option<Sign>,
    pub source: Source,
}

impl FormSpec {
    /// `i^κ ∈ {±1}`.
    pub fn i_kappa(&self) -> Sign {
        if (self.weight / 2) % 2 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn eta(&self) -> Result<Sign> {
        self.eta.ok_or_else(|| {
            Error::Contract(format!(
                "Fricke eigenvalue of {} has not been inferred",
                self.label
            ))
        })
    }

    /// `w(f) = i^κ η`.
    pub fn root_number(&self) -> Result<Sign> {
        Ok(self.i_kappa() * self.eta()?)
    }

    pub fn with_eta(mut self, eta: Sign) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn level_factorization(&self) -> Factorization {
        factorize(self.level).expect("level is positive")
    }

    pub fn has_square_level(&self) -> bool {
        self.level_factorization()
            .factors
            .iter()
            .all(|&(_, e)| e % 2 == 0)
    }

    /// Largest supported coefficient table, if capped.
    pub fn n_max_cap(&self) -> Option<usize> {
        match self.source {
            Source::DeltaForm => Some(TAU_CAP),
            Source::EllipticCurve(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weight == 0 || self.weight % 2 == 1 {
            return Err(Error::InvalidArgument(format!("weight {} is not even", self.weight)));
        }
        if self.level % 2 == 0 {
            return Err(Error::InvalidArgument(format!("level {} is not odd", self.level)));
        }
        if let Source::EllipticCurve(_) = self.source {
            if self.weight != 2 {
                return Err(Error::InvalidArgument("elliptic curves have weight 2".into()));
            }
        }
        Ok(())
    }
}

fn curve(label: &str, level: u64, a: [i64; 5]) -> FormSpec {
    FormSpec {
        label: label.to_string(),
        weight: 2,
        level,
        eta: None,
        source: Source::EllipticCurve(Weierstrass::new(a)),
    }
}

/// The built-in forms, with `η` unknown.
pub fn registry() -> Vec<FormSpec> {
    vec![
        FormSpec {
            label: "Delta".to_string(),
            weight: 12,
            level: 1,
            eta: None,
            source: Source::DeltaForm,
        },
        curve("11a", 11, [0, -1, 1, -10, -20]),
        curve("19a", 19, [0, 1, 1, -9, -15]),
        curve("37a", 37, [0, 0, 1, -1, 0]),
        curve("49a", 49, [1, -1, 0, -2, -1]),
    ]
}

/// Registry lookup; `Δ`, `delta` and `Delta` all name the weight-12 form.
pub fn lookup(label: &str) -> Result<FormSpec> {
    let key = match label {
        "Δ" | "delta" | "Delta" | "DELTA" => "Delta",
        other => other,
    };
    registry()
        .into_iter()
        .find(|f| f.label == key)
        .ok_or_else(|| Error::UnknownForm(label.to_string()))
}

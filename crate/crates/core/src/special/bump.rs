use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quad::integrate_complex;
use crate::error::{Error, Result};

/// Smooth weight `F` supported on `[0, 1]` and equal to one on `[δ, 1−δ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub delta: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec { delta: 0.05 }
    }
}

const MELLIN_TOL: f64 = 1e-13;

impl BumpSpec {
    pub fn new(delta: f64) -> Result<Self> {
        let s = BumpSpec { delta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta > 0.0 && self.delta <= 0.25 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "bump width δ must lie in (0, 1/4], got {}",
                self.delta
            )))
        }
    }
}

fn phi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub(crate) fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = phi(t);
        a / (a + phi(1.0 - t))
    }
}

#[allow(non_snake_case)]
pub fn bump_F(x: f64, spec: &BumpSpec) -> Result<f64> {
    spec.validate()?;
    Ok(bump_unchecked(x, spec.delta))
}

pub(crate) fn bump_unchecked(x: f64, delta: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    smooth_step(x / delta) * smooth_step((1.0 - x) / delta)
}

/// Mellin transform `F̃(s) = ∫_0^1 F(x) x^{s−1} dx` for `Re s > 0`.
///
/// The plateau is integrated in closed form and the two transition bands by
/// adaptive quadrature.
#[allow(non_snake_case)]
pub fn mellin_F(s: Complex64, spec: &BumpSpec) -> Result<Complex64> {
    mellin_moment(s, spec, false)
}

/// `F̃'(s) = ∫_0^1 F(x) x^{s−1} log x dx`.
#[allow(non_snake_case)]
pub fn mellin_F_derivative(s: Complex64, spec: &BumpSpec) -> Result<Complex64> {
    mellin_moment(s, spec, true)
}

fn mellin_moment(s: Complex64, spec: &BumpSpec, with_log: bool) -> Result<Complex64> {
    spec.validate()?;
    if !(s.re > 0.0) {
        return Err(Error::Domain(format!("Mellin transform needs Re s > 0, got {s}")));
    }
    let d = spec.delta;
    let (a, b) = (Complex64::new(d, 0.0), Complex64::new(1.0 - d, 0.0));
    let (pa, pb) = (a.powc(s), b.powc(s));
    let plateau = if with_log {
        (pb * b.ln() - pa * a.ln()) / s - (pb - pa) / (s * s)
    } else {
        (pb - pa) / s
    };
    let kernel = |x: f64| {
        let v = Complex64::new(x, 0.0).powc(s - 1.0);
        if with_log {
            v * x.ln()
        } else {
            v
        }
    };
    let left = integrate_complex(|x| kernel(x) * smooth_step(x / d), 0.0, d, MELLIN_TOL);
    let right = integrate_complex(
        |x| kernel(x) * smooth_step((1.0 - x) / d),
        1.0 - d,
        1.0,
        MELLIN_TOL,
    );
    let err = left.error + right.error;
    if err > 1e-10 {
        return Err(Error::Precision(format!(
            "Mellin transform at s = {s}: quadrature error {err:e}"
        )));
    }
    Ok(plateau + left.value + right.value)
}

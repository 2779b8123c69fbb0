use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::gamma::{digamma, gamma_upper_integer, log_gamma};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Which Mellin kernel the cutoff integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffKind {
    /// `(1 − u log Z)/u²`: the cutoff for the central derivative.
    Derivative,
    /// `1/u`: the cutoff for the central value.
    Value,
}

/// Parameters of the cutoff `W_Z`.
///
/// The argument `x` of [`cutoff_W`] is `n/q`; internally everything is
/// expressed in `y = 2πx/(Z√N)`, the variable in which the Mellin integrand
/// reads `Γ(u+κ/2)/Γ(κ/2) · y^{−u} · m(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub z: f64,
    pub kappa: u32,
    pub level: u64,
    pub contour_sigma: f64,
    pub t_cut: f64,
    pub quad_step: f64,
    pub kind: CutoffKind,
}

const DEFAULT_SIGMA: f64 = 1.5;
const DEFAULT_STEP: f64 = 1.0 / 64.0;
const GAMMA_DECAY: f64 = 1e-16;
const RESIDUE_SWITCH: f64 = 1e-2;
const PRECISION_LIMIT: f64 = 1e-10;
const REANCHOR: usize = 128;

/// Smallest `T` (on a 1/4 grid) with `|Γ(c+iT)| < 10⁻¹⁶ Γ(c)`.
fn decay_cut(c: f64) -> f64 {
    let base = log_gamma(Complex64::new(c, 0.0)).map(|z| z.re).unwrap_or(0.0);
    let target = GAMMA_DECAY.ln();
    let mut t = 0.25;
    loop {
        let v = log_gamma(Complex64::new(c, t)).map(|z| z.re).unwrap_or(f64::NEG_INFINITY);
        if v - base < target || t > 400.0 {
            return t;
        }
        t += 0.25;
    }
}

impl CutoffSpec {
    /// Derivative cutoff with the default contour.
    pub fn new(z: f64, kappa: u32, level: u64) -> Result<Self> {
        Self::with_kind(z, kappa, level, CutoffKind::Derivative)
    }

    pub fn with_kind(z: f64, kappa: u32, level: u64, kind: CutoffKind) -> Result<Self> {
        let a = kappa as f64 / 2.0;
        let spec = CutoffSpec {
            z,
            kappa,
            level,
            contour_sigma: DEFAULT_SIGMA,
            t_cut: decay_cut(DEFAULT_SIGMA + a),
            quad_step: DEFAULT_STEP,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same contour, different `Z`.
    pub fn with_z(&self, z: f64) -> Result<Self> {
        let s = CutoffSpec { z, ..self.clone() };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.z > 0.0 && self.z.is_finite()) {
            return bad(format!("Z must be positive, got {}", self.z));
        }
        if self.kappa == 0 || self.kappa % 2 == 1 {
            return bad(format!("weight must be a positive even integer, got {}", self.kappa));
        }
        if self.level == 0 {
            return bad("level must be positive".into());
        }
        if !(self.contour_sigma > 0.0) {
            return bad(format!("contour must lie right of 0, got {}", self.contour_sigma));
        }
        if !(self.t_cut > 0.0) || !(self.quad_step > 0.0) {
            return bad("t_cut and quad_step must be positive".into());
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        self.kappa as f64 / 2.0
    }

    /// Factor converting `x = n/q` to `y`.
    pub fn scale(&self) -> f64 {
        2.0 * PI / (self.z * (self.level as f64).sqrt())
    }
}

/// Which representation produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Path {
    Direct,
    Residue,
}

#[derive(Debug, Clone, Copy)]
pub struct CutoffEval {
    pub value: f64,
    /// `dW/d log y`.
    pub dlog: f64,
    /// `|I_h − I_{2h}|` plus the truncation envelope.
    pub error: f64,
    pub path: Path,
}

#[derive(Debug, Clone)]
struct LineRule {
    sigma: f64,
    h: f64,
    w: Vec<Complex64>,
    dw: Vec<Complex64>,
}

impl LineRule {
    fn build(sigma: f64, h: f64, t_cut: f64, a: f64, kind: CutoffKind, log_z: f64) -> Result<Self> {
        let lg_a = log_gamma(Complex64::new(a, 0.0))?;
        let k_max = (t_cut / h).ceil() as usize;
        let mut w = Vec::with_capacity(k_max + 1);
        let mut dw = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let u = Complex64::new(sigma, k as f64 * h);
            let g = (log_gamma(u + a)? - lg_a).exp();
            let m = match kind {
                CutoffKind::Derivative => (1.0 - u * log_z) / (u * u),
                CutoffKind::Value => 1.0 / u,
            };
            let weight = if k == 0 { 0.5 } else { 1.0 };
            let c = g * m * weight;
            w.push(c);
            dw.push(-c * u);
        }
        Ok(LineRule { sigma, h, w, dw })
    }

    /// Trapezoid sums at `s = log y`: value, derivative in `s`, error estimate.
    fn sum(&self, s: f64) -> (f64, f64, f64) {
        let step = Complex64::from_polar(1.0, -self.h * s);
        let mut rot = Complex64::new(1.0, 0.0);
        let (mut all, mut even, mut d) = (0.0, 0.0, 0.0);
        for (k, (w, dw)) in self.w.iter().zip(&self.dw).enumerate() {
            if k % REANCHOR == 0 {
                rot = Complex64::from_polar(1.0, -(k as f64) * self.h * s);
            }
            let t = (w * rot).re;
            all += t;
            if k % 2 == 0 {
                even += t;
            }
            d += (dw * rot).re;
            rot *= step;
        }
        let pref = self.h / PI * (-self.sigma * s).exp();
        let value = pref * all;
        let coarse = 2.0 * pref * even;
        let tail = pref * self.w.last().map_or(0.0, |c| c.norm()) * 2.0 / PI;
        (value, pref * d, (value - coarse).abs() + tail)
    }
}

/// Precomputed quadrature weights for both evaluation paths of one
/// [`CutoffSpec`]. Building costs a few thousand `log Γ` calls; each
/// evaluation afterwards is a single pass over the nodes.
#[derive(Debug, Clone)]
pub struct CutoffKernel {
    spec: CutoffSpec,
    psi_a: f64,
    log_z: f64,
    direct: LineRule,
    shifted: LineRule,
}

impl CutoffKernel {
    pub fn new(spec: &CutoffSpec) -> Result<Self> {
        spec.validate()?;
        let a = spec.a();
        let log_z = spec.z.ln();
        let direct = LineRule::build(spec.contour_sigma, spec.quad_step, spec.t_cut, a, spec.kind, log_z)?;
        let c = a / 2.0;
        let shifted = LineRule::build(-c, spec.quad_step, decay_cut(a - c), a, spec.kind, log_z)?;
        Ok(CutoffKernel {
            spec: spec.clone(),
            psi_a: digamma(a)?,
            log_z,
            direct,
            shifted,
        })
    }

    pub fn spec(&self) -> &CutoffSpec {
        &self.spec
    }

    /// Integral along `Re u = contour_sigma`.
    pub fn eval_direct(&self, y: f64) -> CutoffEval {
        let (value, dlog, error) = self.direct.sum(y.ln());
        CutoffEval {
            value,
            dlog,
            error,
            path: Path::Direct,
        }
    }

    /// Residue at `u = 0` plus the integral along `Re u = −κ/4`.
    pub fn eval_residue(&self, y: f64) -> CutoffEval {
        let s = y.ln();
        let (res, dres) = match self.spec.kind {
            CutoffKind::Derivative => (self.psi_a - s - self.log_z, -1.0),
            CutoffKind::Value => (1.0, 0.0),
        };
        let (value, dlog, error) = self.shifted.sum(s);
        CutoffEval {
            value: res + value,
            dlog: dres + dlog,
            error,
            path: Path::Residue,
        }
    }

    /// Evaluation at `y`, choosing the path by the size of `y`.
    pub fn eval(&self, y: f64) -> CutoffEval {
        if y < RESIDUE_SWITCH {
            self.eval_residue(y)
        } else {
            self.eval_direct(y)
        }
    }

    /// Evaluation switching paths at `y = 1`, where both `y^{−σ}` on the
    /// direct line and `y^{κ/4}` on the shifted line stay bounded by one.
    /// Used to generate table nodes.
    pub fn eval_conditioned(&self, y: f64) -> CutoffEval {
        if y < 1.0 {
            self.eval_residue(y)
        } else {
            self.eval_direct(y)
        }
    }

    /// `W(x)` for `x = n/q`, failing when the error estimate is too large.
    pub fn eval_x(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("cutoff needs x > 0, got {x}")));
        }
        let e = self.eval(self.spec.scale() * x);
        if e.error > PRECISION_LIMIT || !e.value.is_finite() {
            return Err(Error::Precision(format!(
                "cutoff at x = {x} ({:?} path): error estimate {:e}",
                e.path, e.error
            )));
        }
        Ok(e.value)
    }
}

/// `W_Z(x)` by contour quadrature.
#[allow(non_snake_case)]
pub fn cutoff_W(x: f64, spec: &CutoffSpec) -> Result<f64> {
    CutoffKernel::new(spec)?.eval_x(x)
}

/// Smallest `y` beyond which the cutoff of the given kind is bounded by
/// `threshold`.
///
/// For the derivative kernel the bound is
/// `[|log Z| Γ(a,y) + (a/y − 1) Γ(a,y) + y^{a−1} e^{−y}] / Γ(a)`, obtained from
/// the real-line representation `∫_y^∞ (log(t/y) − log Z) t^{a−1} e^{−t} dt`.
/// For the value kernel it is `Γ(a, y)/Γ(a)`.
pub fn effective_cutoff(kind: CutoffKind, kappa: u32, z: f64, threshold: f64) -> f64 {
    let a = kappa / 2;
    let af = a as f64;
    let gamma_a: f64 = (1..a).map(|k| k as f64).product();
    let log_z = z.ln().abs();
    let envelope = |y: f64| {
        let g = gamma_upper_integer(a, y);
        match kind {
            CutoffKind::Derivative => {
                (log_z * g + (af / y - 1.0).max(0.0) * g + y.powf(af - 1.0) * (-y).exp()) / gamma_a
            }
            CutoffKind::Value => g / gamma_a,
        }
    };
    let mut y = af.max(1.0);
    while envelope(y) > threshold {
        y += 0.05;
    }
    y
}

/// Cubic Hermite table of a cutoff in `s = log y`, exact values and
/// derivatives at the nodes.
#[derive(Debug, Clone)]
pub struct CutoffTable {
    s0: f64,
    ds: f64,
    inv_ds: f64,
    s_end: f64,
    nodes: Vec<[f64; 2]>,
    kernel: CutoffKernel,
}

/// Lower end of the tabulated range.
const TABLE_Y_MIN: f64 = 1e-12;
/// Node spacing in `log y`.
const TABLE_DS: f64 = 1.0 / 512.0;

impl CutoffTable {
    /// Tabulates on `[10⁻¹², y_end]`; the cutoff is taken to vanish beyond
    /// `y_end`.
    pub fn build(kernel: CutoffKernel, y_end: f64, exec: Execution) -> Result<Self> {
        let s0 = TABLE_Y_MIN.ln();
        let s_end = y_end.ln();
        let ds = TABLE_DS;
        let n = ((s_end - s0) / ds).ceil() as usize + 2;
        let evals = exec.map_range(n, |j| kernel.eval_conditioned((s0 + j as f64 * ds).exp()));
        let mut nodes = Vec::with_capacity(n);
        let mut worst: f64 = 0.0;
        for e in &evals {
            worst = worst.max(e.error);
            nodes.push([e.value, e.dlog * ds]);
        }
        if worst > PRECISION_LIMIT {
            return Err(Error::Precision(format!(
                "cutoff table: node error estimate {worst:e}"
            )));
        }
        Ok(CutoffTable {
            s0,
            ds,
            inv_ds: 1.0 / ds,
            s_end,
            nodes,
            kernel,
        })
    }

    pub fn kernel(&self) -> &CutoffKernel {
        &self.kernel
    }

    /// Last `y` with a non-zero table value.
    pub fn y_end(&self) -> f64 {
        self.s_end.exp()
    }

    /// Value at `s = log y`.
    #[inline]
    pub fn eval_log(&self, s: f64) -> f64 {
        if s >= self.s_end {
            return 0.0;
        }
        let r = (s - self.s0) * self.inv_ds;
        if r < 0.0 {
            return self.kernel.eval_conditioned(s.exp()).value;
        }
        let j = r as usize;
        let t = r - j as f64;
        let [w0, d0] = self.nodes[j];
        let [w1, d1] = self.nodes[j + 1];
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = 3.0 * t2 - 2.0 * t3;
        let h11 = t3 - t2;
        h00 * w0 + h10 * d0 + h01 * w1 + h11 * d1
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        self.eval_log(y.ln())
    }

    pub fn spacing(&self) -> f64 {
        self.ds
    }
}

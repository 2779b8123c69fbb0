//! Central values and derivatives of quadratic twists through the
//! approximate functional equation.
//!
//! For a twist by `χ_{8d}` the conductor is `(8d)²N`, and with
//! `y_n = 2πn/(8d·Z·√N)` the derivative reads
//!
//! ```text
//! S_Z = Σ_n λ(n) χ_{8d}(n) n^{−1/2} W_Z(y_n),   L'(1/2) = S_Z − ε S_{1/Z}
//! ```
//!
//! where `ε = i^κ η χ_{8d}(N)` is the root number; the combination vanishes
//! identically when `ε = +1`. The central value uses the first-order kernel
//! and `L(1/2) = S_Z + ε S_{1/Z}`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::arith::{factorize, gcd, jacobi, kronecker};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forms::{CoefficientTable, FormSpec, Sign};
use crate::special::{effective_cutoff, CutoffKernel, CutoffKind, CutoffSpec, CutoffTable};
use crate::sum::Neumaier;

/// Bound on `|W|` past the end of the tabulated range.
pub const TAIL_THRESHOLD: f64 = 1e-16;

/// Tolerance for the Z-invariance of `L'(1/2)`.
pub const Z_INVARIANCE_TOL: f64 = 1e-8;

/// Relative tolerance of the annihilation contract.
pub const ANNIHILATION_TOL: f64 = 1e-8;

/// A quadratic twist `f ⊗ χ_{8d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistPoint {
    pub form: FormSpec,
    pub d: u64,
    /// The fundamental discriminant `8d`.
    pub discriminant: u64,
    pub root_number: Sign,
}

impl TwistPoint {
    pub fn new(form: &FormSpec, d: u64) -> Result<Self> {
        let w = root_number(form, d)?;
        Ok(TwistPoint {
            form: form.clone(),
            d,
            discriminant: 8 * d,
            root_number: w,
        })
    }

    /// `χ_{8d}(a)`.
    pub fn character(&self, a: i64) -> i32 {
        kronecker(self.discriminant as i64, a).unwrap_or(0)
    }
}

/// Checks that `d` is odd, squarefree, positive and coprime to `N`.
pub fn check_twist(level: u64, d: u64) -> Result<()> {
    if d == 0 || d % 2 == 0 {
        return Err(Error::InvalidArgument(format!("d = {d} must be odd and positive")));
    }
    if !factorize(d)?.is_squarefree() {
        return Err(Error::InvalidArgument(format!("d = {d} is not squarefree")));
    }
    if gcd(d, level) != 1 {
        return Err(Error::InvalidArgument(format!("d = {d} shares a factor with N = {level}")));
    }
    Ok(())
}

/// `χ_{8d}(N)`.
pub fn chi_level(level: u64, d: u64) -> Sign {
    Sign::from_i32(kronecker(8 * d as i64, level as i64).unwrap_or(0)).unwrap_or(Sign::Plus)
}

/// `w(f ⊗ χ_{8d}) = i^κ η χ_{8d}(N)`.
pub fn root_number(form: &FormSpec, d: u64) -> Result<Sign> {
    check_twist(form.level, d)?;
    Ok(form.i_kappa() * form.eta()? * chi_level(form.level, d))
}

/// `χ_{8d}(r)` for `0 ≤ r < 8d`.
///
/// For odd `n`, `(8d/n) = (2/n)(d/n)` and quadratic reciprocity turns
/// `(d/n)` into `(n/d)` up to a sign depending on `n, d mod 4`, so one pass
/// of Jacobi symbols mod `d` fills the table.
pub fn chi_table(d: u64) -> Vec<i8> {
    let q = 8 * d as usize;
    let jd: Vec<i8> = (0..d).map(|r| jacobi(r as i64, d) as i8).collect();
    let mut t = vec![0i8; q];
    for r in (1..q).step_by(2) {
        let two = match r % 8 {
            1 | 7 => 1,
            _ => -1,
        };
        let recip = if d % 4 == 3 && r % 4 == 3 { -1 } else { 1 };
        t[r] = two * recip * jd[r % d as usize];
    }
    t
}

/// The two sums `S_Z`, `S_{1/Z}` of one twist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeSums {
    pub s_z: f64,
    pub s_inv: f64,
    /// `Σ |λ(n)χ(n)n^{−1/2}| (|W_Z| + |W_{1/Z}|)`, the scale of rounding.
    pub abs_sum: f64,
    /// Last `n` summed.
    pub length: usize,
}

#[derive(Debug, Clone)]
struct Tables {
    z: CutoffTable,
    /// `None` when `Z = 1`.
    inv: Option<CutoffTable>,
}

#[derive(Debug, Clone, Copy)]
pub struct AfeOptions {
    /// Multiplies the tabulated range (and hence the summation length).
    pub length_factor: f64,
    pub exec: Execution,
}

impl Default for AfeOptions {
    fn default() -> Self {
        AfeOptions {
            length_factor: 1.0,
            exec: Execution::Parallel,
        }
    }
}

/// Evaluates AFE sums for many twists of one form with shared cutoff tables.
#[derive(Debug, Clone)]
pub struct AfeEvaluator<'a> {
    coeffs: &'a CoefficientTable,
    eta: Sign,
    spec: CutoffSpec,
    tables: Tables,
    ln: Vec<f64>,
    y_end: f64,
}

impl<'a> AfeEvaluator<'a> {
    pub fn new(coeffs: &'a CoefficientTable, spec: &CutoffSpec) -> Result<Self> {
        let eta = coeffs.form().eta()?;
        Self::with_eta(coeffs, spec, eta, AfeOptions::default())
    }

    /// Evaluator with an explicit Fricke sign; the sums themselves do not
    /// depend on it, only the combinations do.
    pub fn with_eta(
        coeffs: &'a CoefficientTable,
        spec: &CutoffSpec,
        eta: Sign,
        opts: AfeOptions,
    ) -> Result<Self> {
        let form = coeffs.form();
        if spec.kappa != form.weight || spec.level != form.level {
            return Err(Error::InvalidArgument(format!(
                "cutoff is for (κ, N) = ({}, {}), form {} has ({}, {})",
                spec.kappa, spec.level, form.label, form.weight, form.level
            )));
        }
        if !(opts.length_factor >= 1.0) {
            return Err(Error::InvalidArgument("length factor must be at least 1".into()));
        }
        let y_end = opts.length_factor * effective_cutoff(spec.kind, spec.kappa, spec.z, TAIL_THRESHOLD);
        let z_table = CutoffTable::build(CutoffKernel::new(spec)?, y_end, opts.exec)?;
        let inv = if spec.z == 1.0 {
            None
        } else {
            let inv_spec = spec.with_z(1.0 / spec.z)?;
            Some(CutoffTable::build(CutoffKernel::new(&inv_spec)?, y_end, opts.exec)?)
        };
        let ln = (0..=coeffs.n_max())
            .map(|n| if n == 0 { f64::NEG_INFINITY } else { (n as f64).ln() })
            .collect();
        Ok(AfeEvaluator {
            coeffs,
            eta,
            spec: spec.clone(),
            tables: Tables { z: z_table, inv },
            ln,
            y_end,
        })
    }

    pub fn spec(&self) -> &CutoffSpec {
        &self.spec
    }

    pub fn form(&self) -> &FormSpec {
        self.coeffs.form()
    }

    /// Root number of the twist under this evaluator's `η`.
    pub fn root_number(&self, d: u64) -> Result<Sign> {
        let form = self.form();
        check_twist(form.level, d)?;
        Ok(form.i_kappa() * self.eta * chi_level(form.level, d))
    }

    /// Number of coefficients the twist by `χ_{8d}` needs.
    pub fn required_length(&self, d: u64) -> usize {
        effective_length_for(self.y_end, 8 * d, self.spec.level, self.spec.z)
    }

    /// `S_Z` and `S_{1/Z}` for `χ_{8d}`.
    pub fn sums(&self, d: u64) -> Result<AfeSums> {
        check_twist(self.spec.level, d)?;
        let q = 8 * d as usize;
        let length = self.required_length(d);
        if length > self.coeffs.n_max() {
            return Err(Error::ResourceLimit {
                what: format!("coefficients of {} for d = {d}", self.form().label),
                required: length as u64,
                limit: self.coeffs.n_max() as u64,
            });
        }
        let chi = chi_table(d);
        let sqrt_n = (self.spec.level as f64).sqrt();
        let z = self.spec.z;
        let off_z = (2.0 * PI / (q as f64 * z * sqrt_n)).ln();
        let off_inv = (2.0 * PI * z / (q as f64 * sqrt_n)).ln();
        let scaled = self.coeffs.scaled();
        let (mut s_z, mut s_inv, mut abs) = (Neumaier::new(), Neumaier::new(), 0.0);
        let mut r = 1usize;
        let mut n = 1usize;
        match &self.tables.inv {
            None => {
                while n <= length {
                    let c = chi[r];
                    if c != 0 {
                        let t = scaled[n] * c as f64;
                        let w = self.tables.z.eval_log(self.ln[n] + off_z);
                        s_z.add(t * w);
                        abs += (t * w).abs();
                    }
                    n += 2;
                    r += 2;
                    if r >= q {
                        r -= q;
                    }
                }
                let v = s_z.value();
                Ok(AfeSums {
                    s_z: v,
                    s_inv: v,
                    abs_sum: 2.0 * abs,
                    length,
                })
            }
            Some(inv) => {
                while n <= length {
                    let c = chi[r];
                    if c != 0 {
                        let t = scaled[n] * c as f64;
                        let ln = self.ln[n];
                        let a = t * self.tables.z.eval_log(ln + off_z);
                        let b = t * inv.eval_log(ln + off_inv);
                        s_z.add(a);
                        s_inv.add(b);
                        abs += a.abs() + b.abs();
                    }
                    n += 2;
                    r += 2;
                    if r >= q {
                        r -= q;
                    }
                }
                Ok(AfeSums {
                    s_z: s_z.value(),
                    s_inv: s_inv.value(),
                    abs_sum: abs,
                    length,
                })
            }
        }
    }

    fn combine(&self, sums: &AfeSums, eps: Sign) -> f64 {
        match self.spec.kind {
            CutoffKind::Derivative => sums.s_z - eps.as_f64() * sums.s_inv,
            CutoffKind::Value => sums.s_z + eps.as_f64() * sums.s_inv,
        }
    }

    fn require_kind(&self, kind: CutoffKind) -> Result<()> {
        if self.spec.kind != kind {
            return Err(Error::Contract(format!(
                "evaluator built with the {:?} kernel, {kind:?} required",
                self.spec.kind
            )));
        }
        Ok(())
    }

    /// `L'(1/2, f ⊗ χ_{8d})` for a twist with root number −1.
    pub fn lprime(&self, d: u64) -> Result<f64> {
        self.require_kind(CutoffKind::Derivative)?;
        let eps = self.root_number(d)?;
        if eps == Sign::Plus {
            return Err(Error::Contract(format!(
                "d = {d} has root number +1; its antisymmetric combination is the annihilation check"
            )));
        }
        Ok(self.combine(&self.sums(d)?, eps))
    }

    /// The antisymmetric combination for a twist with root number +1, which
    /// vanishes identically. Returns the value and the rounding scale
    /// `1 + Σ|terms|`.
    pub fn annihilation(&self, d: u64) -> Result<(f64, f64)> {
        self.require_kind(CutoffKind::Derivative)?;
        let eps = self.root_number(d)?;
        if eps == Sign::Minus {
            return Err(Error::Contract(format!(
                "d = {d} has root number −1; use lprime"
            )));
        }
        let s = self.sums(d)?;
        Ok((self.combine(&s, eps), 1.0 + s.abs_sum))
    }

    /// `L(1/2, f ⊗ χ_{8d})`.
    pub fn central_value(&self, d: u64) -> Result<f64> {
        self.require_kind(CutoffKind::Value)?;
        let eps = self.root_number(d)?;
        Ok(self.combine(&self.sums(d)?, eps))
    }

    /// The same combination for the untwisted `L(s, f)`: the derivative
    /// kernel gives `L'(1/2, f)`, the value kernel `L(1/2, f)`.
    pub fn untwisted(&self) -> Result<f64> {
        let sqrt_n = (self.spec.level as f64).sqrt();
        let z = self.spec.z;
        let length = effective_length_for(self.y_end, 1, self.spec.level, z);
        if length > self.coeffs.n_max() {
            return Err(Error::ResourceLimit {
                what: format!("coefficients of {}", self.form().label),
                required: length as u64,
                limit: self.coeffs.n_max() as u64,
            });
        }
        let off_z = (2.0 * PI / (z * sqrt_n)).ln();
        let off_inv = (2.0 * PI * z / sqrt_n).ln();
        let inv = self.tables.inv.as_ref().unwrap_or(&self.tables.z);
        let (mut s_z, mut s_inv) = (Neumaier::new(), Neumaier::new());
        for n in 1..=length {
            let t = self.coeffs.scaled()[n];
            s_z.add(t * self.tables.z.eval_log(self.ln[n] + off_z));
            s_inv.add(t * inv.eval_log(self.ln[n] + off_inv));
        }
        let sums = AfeSums {
            s_z: s_z.value(),
            s_inv: s_inv.value(),
            abs_sum: 0.0,
            length,
        };
        Ok(self.combine(&sums, self.form().i_kappa() * self.eta))
    }
}

fn effective_length_for(y_end: f64, q: u64, level: u64, z: f64) -> usize {
    let zmax = z.max(1.0 / z);
    (y_end * q as f64 * (level as f64).sqrt() * zmax / (2.0 * PI)).ceil() as usize
}

/// Coefficients needed for `L'(1/2, f ⊗ χ_{8d})` with the given `Z`.
pub fn effective_length(form: &FormSpec, d: u64, z: f64) -> usize {
    effective_length_kind(form, d, z, CutoffKind::Derivative)
}

/// As [`effective_length`] for either kernel.
pub fn effective_length_kind(form: &FormSpec, d: u64, z: f64, kind: CutoffKind) -> usize {
    let y = effective_cutoff(kind, form.weight, z, TAIL_THRESHOLD);
    effective_length_for(y, 8 * d, form.level, z)
}

/// `L'(1/2, f ⊗ χ_{8d})` for a single twist.
pub fn lprime_central(point: &TwistPoint, spec: &CutoffSpec, coeffs: &CoefficientTable) -> Result<f64> {
    let spec = CutoffSpec {
        kind: CutoffKind::Derivative,
        ..spec.clone()
    };
    AfeEvaluator::with_eta(coeffs, &spec, point.form.eta()?, AfeOptions::default())?.lprime(point.d)
}

/// The vanishing antisymmetric combination for a twist with `w = +1`;
/// errors with [`Error::Inconsistency`] if it exceeds the contract bound.
pub fn afe_annihilation(point: &TwistPoint, spec: &CutoffSpec, coeffs: &CoefficientTable) -> Result<f64> {
    let spec = CutoffSpec {
        kind: CutoffKind::Derivative,
        ..spec.clone()
    };
    let ev = AfeEvaluator::with_eta(coeffs, &spec, point.form.eta()?, AfeOptions::default())?;
    let (v, scale) = ev.annihilation(point.d)?;
    if v.abs() >= ANNIHILATION_TOL * scale {
        return Err(Error::Inconsistency(format!(
            "annihilation at d = {} left {v:e} (scale {scale:e})",
            point.d
        )));
    }
    Ok(v)
}

/// `L(1/2, f ⊗ χ_{8d})` with `Z = 1`.
pub fn l_central(point: &TwistPoint, coeffs: &CoefficientTable) -> Result<f64> {
    let spec = CutoffSpec::with_kind(1.0, point.form.weight, point.form.level, CutoffKind::Value)?;
    AfeEvaluator::with_eta(coeffs, &spec, point.form.eta()?, AfeOptions::default())?.central_value(point.d)
}

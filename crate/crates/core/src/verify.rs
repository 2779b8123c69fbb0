//! Numerical identity checks behind the moment computations.
//!
//! Every suite returns [`Verdict`]s carrying the measured value and its
//! tolerance.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, jacobi};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forms::{alt_z, CoefficientTable, FormSpec, Sign};
use crate::lfunc::{check_twist, effective_length_kind, AfeEvaluator, AfeOptions, TwistPoint};
use crate::special::quad::integrate_complex;
use crate::special::{BumpSpec, CutoffKind, CutoffSpec};

/// Tolerance of the Gauss-sum comparisons.
pub const GAUSS_TOL: f64 = 1e-9;
/// Bound on the Poisson discrepancy.
pub const POISSON_TOL: f64 = 1e-8;
/// Tolerance of every AFE identity.
pub const AFE_TOL: f64 = 1e-8;

/// `G_k(n)` with its arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussSumValue {
    pub k: i64,
    pub n: u64,
    pub re: f64,
    pub im: f64,
}

impl GaussSumValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn check_odd(n: u64) -> Result<()> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "G_k(n) needs odd positive n, got {n}"
        )));
    }
    Ok(())
}

fn prefactor(n: u64) -> Complex64 {
    let s = jacobi(-1, n) as f64;
    Complex64::new(0.5, -0.5) + s * Complex64::new(0.5, 0.5)
}

/// `G_k(n) = ((1−i)/2 + (−1/n)(1+i)/2) Σ_{a mod n} (a/n) e(ak/n)` summed
/// directly.
pub fn gauss_bruteforce(k: i64, n: u64) -> Result<Complex64> {
    check_odd(n)?;
    let kr = k.rem_euclid(n as i64) as u64;
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..n {
        let chi = jacobi(a as i64, n);
        if chi != 0 {
            let phase = 2.0 * PI * ((a * kr) % n) as f64 / n as f64;
            acc += chi as f64 * Complex64::from_polar(1.0, phase);
        }
    }
    Ok(prefactor(n) * acc)
}

/// `G_k(p^β)` from the five-case table.
fn gauss_prime_power(k: i64, p: u64, beta: u32) -> f64 {
    let alpha = if k == 0 {
        u32::MAX
    } else {
        let mut a = 0;
        let mut m = k.unsigned_abs();
        while m % p == 0 {
            m /= p;
            a += 1;
        }
        a
    };
    if beta <= alpha {
        if beta % 2 == 1 {
            0.0
        } else if beta == 0 {
            1.0
        } else {
            (p.pow(beta) - p.pow(beta - 1)) as f64
        }
    } else if beta == alpha + 1 {
        let pa = p.pow(alpha) as f64;
        if beta % 2 == 0 {
            -pa
        } else {
            let unit = k / p.pow(alpha) as i64;
            jacobi(unit, p) as f64 * pa * (p as f64).sqrt()
        }
    } else {
        0.0
    }
}

/// `G_k(n)` assembled multiplicatively from the prime-power table.
pub fn gauss_explicit(k: i64, n: u64) -> Result<Complex64> {
    check_odd(n)?;
    let f = factorize(n)?;
    let mut v = 1.0;
    for &(p, beta) in &f.factors {
        v *= gauss_prime_power(k, p, beta);
    }
    Ok(Complex64::new(v, 0.0))
}

/// `F̂(y) = ∫ (cos + sin)(2πxy) F(x) dx` for the bump `F`.
pub fn bump_transform(y: f64, bump: &BumpSpec) -> Result<f64> {
    bump.validate()?;
    let d = bump.delta;
    let w = 2.0 * PI * y;
    // Plateau in closed form: ∫(cos + sin)(wx) = (sin − cos)(wx)/w.
    let prim = |x: f64| {
        if w == 0.0 {
            x
        } else {
            ((w * x).sin() - (w * x).cos()) / w
        }
    };
    let plateau = prim(1.0 - d) - prim(d);
    let kernel = |x: f64| {
        let f = crate::special::bump_unchecked(x, d);
        Complex64::new(f * ((w * x).cos() + (w * x).sin()), 0.0)
    };
    let tol = 1e-13;
    let a = integrate_complex(kernel, 0.0, d, tol);
    let b = integrate_complex(kernel, 1.0 - d, 1.0, tol);
    if a.error + b.error > 1e-11 {
        return Err(Error::Precision(format!(
            "F̂({y}) quadrature error {:e}",
            a.error + b.error
        )));
    }
    Ok(plateau + a.value.re + b.value.re)
}

/// Both sides of the Poisson identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub n: u64,
    pub z: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
    /// Largest `|k|` used on the dual side.
    pub k_max: i64,
}

const POISSON_K_CAP: i64 = 200_000;
/// Dual terms below this are at the rounding level of `F̂`.
const DUAL_NOISE: f64 = 1e-11;

/// `Σ_{d odd} (d/n) F(d/Z)` against
/// `(Z/2n)(2/n) Σ_k (−1)^k G_k(n) F̂(kZ/2n)`.
pub fn verify_poisson(n: u64, z: f64, bump: &BumpSpec) -> Result<PoissonCheck> {
    check_odd(n)?;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::InvalidArgument(format!("Z must be positive, got {z}")));
    }
    let mut lhs = crate::sum::Neumaier::new();
    let mut d = 1u64;
    while (d as f64) < z {
        let chi = jacobi(d as i64, n);
        if chi != 0 {
            lhs.add(chi as f64 * crate::special::bump_F(d as f64 / z, bump)?);
        }
        d += 2;
    }
    let lhs = lhs.value();

    let scale = z / (2.0 * n as f64) * jacobi(2, n) as f64;
    let f = factorize(n)?;
    let g = |k: i64| -> f64 { f.factors.iter().map(|&(p, b)| gauss_prime_power(k, p, b)).product() };
    let mut rhs = crate::sum::Neumaier::new();
    rhs.add(g(0) * bump_transform(0.0, bump)?);
    let mut quiet = 0;
    let mut k = 1i64;
    let mut tail: f64 = 0.0;
    while quiet < 64 {
        if k > POISSON_K_CAP {
            return Err(Error::Precision(format!(
                "dual sum for n = {n}, Z = {z} not converged by |k| = {POISSON_K_CAP}"
            )));
        }
        let y = k as f64 * z / (2.0 * n as f64);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let fp = bump_transform(y, bump)?;
        let fm = bump_transform(-y, bump)?;
        let term = sign * (g(k) * fp + g(-k) * fm);
        rhs.add(term);
        let size = (fp.abs() + fm.abs()) * n as f64;
        if size * scale.abs() < DUAL_NOISE {
            quiet += 1;
        } else {
            quiet = 0;
        }
        tail = size * scale.abs();
        k += 1;
    }
    if tail > POISSON_TOL {
        return Err(Error::Precision(format!("dual-sum truncation {tail:e}")));
    }
    let rhs = scale * rhs.value();
    Ok(PoissonCheck {
        n,
        z,
        lhs,
        rhs,
        discrepancy: (lhs - rhs).abs(),
        k_max: k - 1,
    })
}

/// One line of a verification table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub suite: String,
    pub check: String,
    pub passed: bool,
    /// Worst observed deviation.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Verdict {
    fn new(suite: &str, check: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Verdict {
            suite: suite.into(),
            check: check.into(),
            passed: value.is_finite() && value < tolerance,
            value,
            tolerance,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{:<8} {:<28} {}  worst {:.3e}  tol {:.1e}  {}",
            self.suite,
            self.check,
            if self.passed { "PASS" } else { "FAIL" },
            self.value,
            self.tolerance,
            self.detail
        )
    }
}

/// Exhaustive Gauss-sum grid: odd `n ≤ n_max`, `|k| ≤ k_max`.
pub fn gauss_suite(n_max: u64, k_max: i64, exec: Execution) -> Result<Vec<Verdict>> {
    let ns: Vec<u64> = (1..=n_max).step_by(2).collect();
    let rows = exec.map(&ns, |&n| -> Result<(f64, f64)> {
        let mut worst_explicit: f64 = 0.0;
        let mut worst_four: f64 = 0.0;
        for k in -k_max..=k_max {
            let brute = gauss_bruteforce(k, n)?;
            worst_explicit = worst_explicit.max((brute - gauss_explicit(k, n)?).norm());
            worst_four = worst_four.max((brute - gauss_bruteforce(4 * k, n)?).norm());
        }
        Ok((worst_explicit, worst_four))
    });
    let (mut e, mut f) = (0.0f64, 0.0f64);
    for r in rows {
        let (a, b) = r?;
        e = e.max(a);
        f = f.max(b);
    }
    let mut mult: f64 = 0.0;
    for m in (1..100u64).step_by(2) {
        for n in (1..100u64).step_by(2) {
            if crate::arith::gcd(m, n) != 1 {
                continue;
            }
            for k in [-7i64, 0, 1, 3, 12, 45] {
                let lhs = gauss_explicit(k, m * n)?;
                let rhs = gauss_explicit(k, m)? * gauss_explicit(k, n)?;
                mult = mult.max((lhs - rhs).norm());
            }
        }
    }
    let grid = format!("odd n ≤ {n_max}, |k| ≤ {k_max}");
    Ok(vec![
        Verdict::new("gauss", "explicit = brute force", e, GAUSS_TOL, grid.clone()),
        Verdict::new("gauss", "G_k = G_4k", f, GAUSS_TOL, grid),
        Verdict::new("gauss", "multiplicativity", mult, GAUSS_TOL, "coprime odd m, n < 100".into()),
    ])
}

/// The default 25 `(n, Z)` pairs.
pub fn default_poisson_pairs() -> Vec<(u64, f64)> {
    let ns = [1u64, 3, 9, 15, 105];
    let zs = [50.0, 120.0, 200.0, 333.0, 500.0];
    ns.iter().flat_map(|&n| zs.iter().map(move |&z| (n, z))).collect()
}

pub fn poisson_suite(pairs: &[(u64, f64)], bump: &BumpSpec, exec: Execution) -> Result<Vec<Verdict>> {
    let rows = exec.map(pairs, |&(n, z)| verify_poisson(n, z, bump));
    let mut out = Vec::with_capacity(pairs.len());
    for r in rows {
        let c = r?;
        out.push(Verdict::new(
            "poisson",
            &format!("n = {}, Z = {}", c.n, c.z),
            c.discrepancy,
            POISSON_TOL,
            format!("lhs {:.12e}, |k| ≤ {}", c.lhs, c.k_max),
        ));
    }
    Ok(out)
}

/// Random admissible twists with `d ≤ d_max`, drawn without replacement.
pub fn random_twists(form: &FormSpec, count: usize, d_max: u64, seed: u64) -> Vec<u64> {
    let mut pool: Vec<u64> = (1..=d_max)
        .step_by(2)
        .filter(|&d| check_twist(form.level, d).is_ok())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.truncate(count);
    pool.sort_unstable();
    pool
}

/// Asymmetric `Z` for the AFE checks and the largest `d` whose twist fits
/// in `n_cap` coefficients.
pub fn afe_parameters(form: &FormSpec, n_cap: usize) -> (f64, u64) {
    let z = match form.n_max_cap() {
        Some(_) => 1.1,
        None => alt_z(form.level),
    };
    let mut d = 1;
    let need = |d: u64| {
        effective_length_kind(form, d, z, CutoffKind::Derivative)
            .max(effective_length_kind(form, d, z, CutoffKind::Value))
    };
    while need(d + 2) <= n_cap {
        d += 2;
    }
    (z, d)
}

/// Worst deviations of the three AFE identities over a set of twists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfeIdentities {
    pub form: String,
    pub z: f64,
    pub twists: Vec<u64>,
    pub plus_count: usize,
    pub minus_count: usize,
    /// `max |S_Z − S_{1/Z}| / (1 + Σ|terms|)` over `w = +1`.
    pub annihilation: f64,
    /// `max |L′(Z) − L′(1)|` over `w = −1`.
    pub z_invariance: f64,
    /// `max |L(1/2)|` at the asymmetric `Z` over `w = −1`.
    pub central_value: f64,
}

pub fn afe_identities(coeffs: &CoefficientTable, twists: &[u64], z: f64, exec: Execution) -> Result<AfeIdentities> {
    let form = coeffs.form();
    let eta = form.eta()?;
    let opts = AfeOptions {
        length_factor: 1.0,
        exec,
    };
    let alt = AfeEvaluator::with_eta(coeffs, &CutoffSpec::new(z, form.weight, form.level)?, eta, opts)?;
    let one = AfeEvaluator::with_eta(coeffs, &CutoffSpec::new(1.0, form.weight, form.level)?, eta, opts)?;
    let val = AfeEvaluator::with_eta(
        coeffs,
        &CutoffSpec::with_kind(z, form.weight, form.level, CutoffKind::Value)?,
        eta,
        opts,
    )?;
    let rows = exec.map(twists, |&d| -> Result<(Sign, f64, f64)> {
        let w = TwistPoint::new(form, d)?.root_number;
        match w {
            Sign::Plus => {
                let (v, scale) = alt.annihilation(d)?;
                Ok((w, v.abs() / scale, 0.0))
            }
            Sign::Minus => {
                let dz = (alt.lprime(d)? - one.lprime(d)?).abs();
                Ok((w, dz, val.central_value(d)?.abs()))
            }
        }
    });
    let mut out = AfeIdentities {
        form: form.label.clone(),
        z,
        twists: twists.to_vec(),
        plus_count: 0,
        minus_count: 0,
        annihilation: 0.0,
        z_invariance: 0.0,
        central_value: 0.0,
    };
    for r in rows {
        let (w, a, b) = r?;
        match w {
            Sign::Plus => {
                out.plus_count += 1;
                out.annihilation = out.annihilation.max(a);
            }
            Sign::Minus => {
                out.minus_count += 1;
                out.z_invariance = out.z_invariance.max(a);
                out.central_value = out.central_value.max(b);
            }
        }
    }
    Ok(out)
}

pub fn afe_verdicts(r: &AfeIdentities) -> Vec<Verdict> {
    let tag = |n: usize| format!("{} ({} twists, Z = {:.4})", r.form, n, r.z);
    vec![
        Verdict::new("afe", &format!("{} annihilation", r.form), r.annihilation, AFE_TOL, tag(r.plus_count)),
        Verdict::new("afe", &format!("{} Z-invariance", r.form), r.z_invariance, AFE_TOL, tag(r.minus_count)),
        Verdict::new("afe", &format!("{} central value", r.form), r.central_value, AFE_TOL, tag(r.minus_count)),
    ]
}

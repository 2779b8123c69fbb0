use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    rankin_L1, sym2_L, sym2_log_derivative, zstar_first, zstar_first_derivative, zstar_mixed,
    zstar_second, zstar_second_du, Component, ConstantReport, LocalData,
};
use crate::error::Result;
use crate::special::{digamma, mellin_F, mellin_F_derivative, BumpSpec, EULER_GAMMA};

/// Which moment a constant or report belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    /// `Σ L′(½, f⊗χ)²`
    Second,
    /// `Σ L′(½, f⊗χ) L′(½, g⊗χ)`
    Mixed,
    /// `Σ L′(½, f⊗χ)`
    First,
}

impl std::fmt::Display for MomentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MomentKind::Second => "second",
            MomentKind::Mixed => "mixed",
            MomentKind::First => "first",
        })
    }
}

/// Main-term constants of one moment.
///
/// * second: `X·leading·(⅓log³X + secondary·log²X)`
/// * mixed: `X·leading·log²X`
/// * first: `X·leading·(log X + secondary)`, with `refined` the bracket
///   constant obtained from the exact residue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub kind: MomentKind,
    pub forms: Vec<String>,
    pub prime_limit: u64,
    pub delta: f64,
    pub vanishes: bool,
    pub leading: f64,
    pub secondary: Option<f64>,
    pub refined: Option<f64>,
    pub report: ConstantReport,
}

impl Constants {
    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "kind = {}\nforms = {}\nprime_limit = {}\ndelta = {}\nvanishes = {}\nleading = {:.15e}\n",
            self.kind,
            self.forms.join(","),
            self.prime_limit,
            self.delta,
            self.vanishes,
            self.leading
        );
        if let Some(x) = self.secondary {
            s += &format!("secondary = {x:.15e}\n");
        }
        if let Some(x) = self.refined {
            s += &format!("refined = {x:.15e}\n");
        }
        s + &self.report.to_kv()
    }
}

fn comp(name: &str, value: f64, tail_bound: f64) -> Component {
    Component {
        name: name.to_string(),
        value,
        tail_bound,
    }
}

fn mellin_parts(bump: &BumpSpec) -> Result<(f64, f64)> {
    let one = Complex64::new(1.0, 0.0);
    Ok((mellin_F(one, bump)?.re, mellin_F_derivative(one, bump)?.re))
}

fn degenerate(z: &ConstantReport) -> bool {
    z.as_complex().norm() <= z.tail_bound
}

/// `K₁ = L(1,sym²f)³ Z*(0,0) F̃(1)/π²` and
/// `C₂(f) = ψ(κ/2) + log(√N/2π) + γ + 3L′/L(1,sym²f) + Z*_u/Z* + F̃′(1)/F̃(1)`.
pub fn constants_second(data: &LocalData, bump: &BumpSpec) -> Result<Constants> {
    let form = data.form();
    let l = sym2_L(data, 1.0)?;
    let ld = sym2_log_derivative(data)?;
    let z = zstar_second(data, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))?;
    let zu = zstar_second_du(data)?;
    let (f1, fd1) = mellin_parts(bump)?;
    let psi = digamma(form.weight as f64 / 2.0)?;
    let log_cond = ((form.level as f64).sqrt() / (2.0 * PI)).ln();
    let vanishes = degenerate(&z);
    let leading = l.value.powi(3) * z.value * f1 / (PI * PI);
    let c2 = (!vanishes).then(|| {
        psi + log_cond + EULER_GAMMA + 3.0 * ld.value + zu.value / z.value + fd1 / f1
    });
    let mut report = ConstantReport::real("C2", data.limit(), c2.unwrap_or(0.0), 0.0);
    report.tail_bound = if vanishes {
        0.0
    } else {
        3.0 * ld.tail_bound + (zu.tail_bound + (zu.value / z.value).abs() * z.tail_bound) / z.value.abs()
    };
    report.components = vec![
        l.as_component(),
        ld.as_component(),
        z.as_component(),
        zu.as_component(),
        comp("Fhat_1", f1, 0.0),
        comp("Fhat_d1", fd1, 0.0),
        comp("digamma", psi, 0.0),
        comp("log_conductor", log_cond, 0.0),
        comp("euler_gamma", EULER_GAMMA, 0.0),
        comp("K1", leading, leading.abs() * 3.0 * l.tail_bound / l.value + l.value.powi(3) * z.tail_bound * f1 / (PI * PI)),
    ];
    Ok(Constants {
        kind: MomentKind::Second,
        forms: vec![form.label.clone()],
        prime_limit: data.limit(),
        delta: bump.delta,
        vanishes,
        leading,
        secondary: c2,
        refined: None,
        report,
    })
}

/// `C(f,g) = L(1,sym²f) L(1,sym²g) L(1,f⊗g) Z*(0,0) F̃(1)/(2π²)`.
pub fn constants_mixed(f: &LocalData, g: &LocalData, bump: &BumpSpec) -> Result<Constants> {
    let lf = sym2_L(f, 1.0)?;
    let mut lg = sym2_L(g, 1.0)?;
    lg.name = "L_sym2_g".into();
    let r = rankin_L1(f, g)?;
    let zero = Complex64::new(0.0, 0.0);
    let z = zstar_mixed(f, g, zero, zero)?;
    let (f1, _) = mellin_parts(bump)?;
    let value = lf.value * lg.value * r.value * z.value * f1 / (2.0 * PI * PI);
    let rel = lf.tail_bound / lf.value + lg.tail_bound / lg.value + r.tail_bound / r.value;
    let tail = value.abs() * rel + lf.value * lg.value * r.value * z.tail_bound * f1 / (2.0 * PI * PI);
    let limit = f.limit().min(g.limit());
    let mut report = ConstantReport::real("C", limit, value, tail);
    report.components = vec![
        lf.as_component(),
        lg.as_component(),
        r.as_component(),
        z.as_component(),
        comp("Fhat_1", f1, 0.0),
    ];
    Ok(Constants {
        kind: MomentKind::Mixed,
        forms: vec![f.form().label.clone(), g.form().label.clone()],
        prime_limit: limit,
        delta: bump.delta,
        vanishes: degenerate(&z),
        leading: value,
        secondary: None,
        refined: None,
        report,
    })
}

/// `C₃(f) = F̃(1) L(1,sym²f) Z*(0)/(2π²)` with bracket constants
/// `log(κ√N/2π) + 2L′/L + Z*′/Z*` and the refined
/// `ψ(κ/2) + log(√N/2π) + F̃′(1)/F̃(1) + 2L′/L + Z*′/Z*`.
pub fn constants_first(data: &LocalData, bump: &BumpSpec) -> Result<Constants> {
    let form = data.form();
    let l = sym2_L(data, 1.0)?;
    let ld = sym2_log_derivative(data)?;
    let z = zstar_first(data, Complex64::new(0.0, 0.0))?;
    let zd = zstar_first_derivative(data)?;
    let (f1, fd1) = mellin_parts(bump)?;
    let kappa = form.weight as f64;
    let psi = digamma(kappa / 2.0)?;
    let log_cond = ((form.level as f64).sqrt() / (2.0 * PI)).ln();
    let vanishes = degenerate(&z);
    let c3 = f1 * l.value * z.value / (2.0 * PI * PI);
    let shared = (!vanishes).then(|| 2.0 * ld.value + zd.value / z.value);
    let bracket = shared.map(|s| kappa.ln() + log_cond + s);
    let refined = shared.map(|s| psi + log_cond + fd1 / f1 + s);
    let tail = c3.abs() * l.tail_bound / l.value + f1 * l.value * z.tail_bound / (2.0 * PI * PI);
    let mut report = ConstantReport::real("C3", data.limit(), c3, tail);
    report.components = vec![
        l.as_component(),
        ld.as_component(),
        z.as_component(),
        zd.as_component(),
        comp("Fhat_1", f1, 0.0),
        comp("Fhat_d1", fd1, 0.0),
        comp("digamma", psi, 0.0),
        comp("log_conductor", log_cond, 0.0),
    ];
    Ok(Constants {
        kind: MomentKind::First,
        forms: vec![form.label.clone()],
        prime_limit: data.limit(),
        delta: bump.delta,
        vanishes,
        leading: c3,
        secondary: bracket,
        refined,
        report,
    })
}

//! Empirical moments over the odd-sign quadratic twist family and the
//! predicted main terms.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, is_squarefree};
use crate::error::{Error, Result};
use crate::eulerprod::{constants_first, constants_mixed, constants_second, Constants, LocalData};
use crate::exec::Execution;
use crate::forms::{
    default_probes, infer_eta, probe_length, sieve_coefficients_with, CoeffOptions,
    CoefficientCache, CoefficientTable, FormSpec, Sign,
};
use crate::lfunc::{check_twist, chi_level, effective_length, AfeEvaluator, AfeOptions};
use crate::special::{bump_F, BumpSpec, CutoffSpec};
use crate::sum::Neumaier;

pub use crate::eulerprod::MomentKind;

/// Exponent parameter `A` of the alternative first-moment bracket.
pub const U_BRACKET_A: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub d: u64,
    /// `F(8d/X)`
    pub weight: f64,
}

/// Odd squarefree `d` coprime to the level(s) with every root number −1 and
/// `F(8d/X) > 0`, in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistFamily {
    pub forms: Vec<String>,
    pub x: f64,
    pub delta: f64,
    pub members: Vec<FamilyMember>,
    /// Set when some form has square level and root number +1, so every
    /// twist has root number +1 and the family is empty.
    pub degenerate: bool,
}

impl TwistFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_d(&self) -> Option<u64> {
        self.members.last().map(|m| m.d)
    }
}

/// Square level and `w(f) = +1`.
pub fn is_degenerate(form: &FormSpec) -> Result<bool> {
    Ok(form.has_square_level() && form.root_number()? == Sign::Plus)
}

pub fn enumerate_family(forms: &[&FormSpec], x: f64, bump: &BumpSpec) -> Result<TwistFamily> {
    if !(x >= 100.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("X must be at least 100, got {x}")));
    }
    if forms.is_empty() || forms.len() > 2 {
        return Err(Error::InvalidArgument("family needs one or two forms".into()));
    }
    bump.validate()?;
    let labels = forms.iter().map(|f| f.label.clone()).collect();
    let mut degenerate = false;
    let mut signs = Vec::with_capacity(forms.len());
    for f in forms {
        degenerate |= is_degenerate(f)?;
        signs.push(f.root_number()?);
    }
    let mut members = Vec::new();
    if !degenerate {
        let d_max = (x / 8.0).ceil() as u64;
        let mut d = 1;
        while d <= d_max {
            let weight = bump_F(8.0 * d as f64 / x, bump)?;
            let ok = weight > 0.0
                && is_squarefree(d)
                && forms.iter().zip(&signs).all(|(f, &w)| {
                    gcd(d, f.level) == 1 && w * chi_level(f.level, d) == Sign::Minus
                });
            if ok {
                members.push(FamilyMember { d, weight });
            }
            d += 2;
        }
    }
    Ok(TwistFamily {
        forms: labels,
        x,
        delta: bump.delta,
        members,
        degenerate,
    })
}

/// Member-failure handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FailurePolicy {
    #[default]
    SkipAndLog,
    FailFast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedMember {
    pub d: u64,
    pub reason: String,
}

/// `L′(1/2)` of each twist in a list, evaluated with `Z = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LValues {
    pub ds: Vec<u64>,
    pub values: Vec<Option<f64>>,
    pub skipped: Vec<SkippedMember>,
}

impl LValues {
    pub fn compute(
        coeffs: &CoefficientTable,
        ds: &[u64],
        policy: FailurePolicy,
        exec: Execution,
    ) -> Result<Self> {
        let form = coeffs.form();
        let spec = CutoffSpec::new(1.0, form.weight, form.level)?;
        let opts = AfeOptions {
            length_factor: 1.0,
            exec,
        };
        let ev = AfeEvaluator::with_eta(coeffs, &spec, form.eta()?, opts)?;
        let raw = exec.map(ds, |&d| ev.lprime(d));
        let mut values = Vec::with_capacity(ds.len());
        let mut skipped = Vec::new();
        for (&d, r) in ds.iter().zip(raw) {
            match r {
                Ok(v) => values.push(Some(v)),
                Err(e) => match policy {
                    FailurePolicy::FailFast => {
                        return Err(Error::Inconsistency(format!(
                            "{} twist d = {d} failed: {e}",
                            form.label
                        )))
                    }
                    FailurePolicy::SkipAndLog => {
                        eprintln!("warning: skipping {} d = {d}: {e}", form.label);
                        skipped.push(SkippedMember {
                            d,
                            reason: e.to_string(),
                        });
                        values.push(None);
                    }
                },
            }
        }
        Ok(LValues {
            ds: ds.to_vec(),
            values,
            skipped,
        })
    }

    pub fn get(&self, d: u64) -> Option<f64> {
        let i = self.ds.binary_search(&d).ok()?;
        self.values[i]
    }
}

/// Weighted sum over the family: `L′²`, `L′_f L′_g`, or `L′`. Members
/// without a value are left out.
pub fn empirical_moment(
    kind: MomentKind,
    family: &TwistFamily,
    f: &LValues,
    g: Option<&LValues>,
) -> Result<f64> {
    if kind == MomentKind::Mixed && g.is_none() {
        return Err(Error::InvalidArgument("mixed moment needs values of both forms".into()));
    }
    let mut acc = Neumaier::new();
    for m in &family.members {
        let Some(a) = f.get(m.d) else { continue };
        let term = match kind {
            MomentKind::Second => a * a,
            MomentKind::First => a,
            MomentKind::Mixed => match g.and_then(|g| g.get(m.d)) {
                Some(b) => a * b,
                None => continue,
            },
        };
        acc.add(m.weight * term);
    }
    Ok(acc.value())
}

fn require(c: &Constants, kind: MomentKind) -> Result<()> {
    if c.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "constants are for the {} moment, {kind} requested",
            c.kind
        )));
    }
    Ok(())
}

/// Leading term and the prediction including the `C₂ log²X` term.
pub fn predicted_second(c: &Constants, x: f64) -> Result<(f64, f64)> {
    require(c, MomentKind::Second)?;
    let l = x.ln();
    let lead = x * c.leading * l.powi(3) / 3.0;
    let with = match c.secondary {
        Some(c2) => x * c.leading * (l.powi(3) / 3.0 + c2 * l * l),
        None => 0.0,
    };
    if c.vanishes {
        return Ok((0.0, 0.0));
    }
    Ok((lead, with))
}

pub fn predicted_mixed(c: &Constants, x: f64) -> Result<f64> {
    require(c, MomentKind::Mixed)?;
    if c.vanishes {
        return Ok(0.0);
    }
    Ok(c.leading * x * x.ln().powi(2))
}

/// First-moment predictions under the three bracket conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPrediction {
    /// `C₃X(log(Xκ√N/2π) + 2L′/L + Z*′/Z*)`
    pub main: f64,
    /// `C₃X(ψ(κ/2) + log(X√N/2π) + F̃′(1)/F̃(1) + 2L′/L + Z*′/Z*)`
    pub refined: f64,
    /// Main bracket with `X` replaced by `U = X/(log XκN)^{17(A+6)/4}`.
    pub u_bracket: f64,
}

pub fn predicted_first(c: &Constants, x: f64, kappa: u32, level: u64) -> Result<FirstPrediction> {
    require(c, MomentKind::First)?;
    let (Some(b), Some(r)) = (c.secondary, c.refined) else {
        return Ok(FirstPrediction {
            main: 0.0,
            refined: 0.0,
            u_bracket: 0.0,
        });
    };
    if c.vanishes {
        return Ok(FirstPrediction {
            main: 0.0,
            refined: 0.0,
            u_bracket: 0.0,
        });
    }
    let l = x.ln();
    let log_u = l - 17.0 * (U_BRACKET_A + 6.0) / 4.0 * (x * kappa as f64 * level as f64).ln().ln();
    Ok(FirstPrediction {
        main: c.leading * x * (l + b),
        refined: c.leading * x * (l + r),
        u_bracket: c.leading * x * (log_u + b),
    })
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| a / b)
}

/// One point of a moment sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub kind: MomentKind,
    pub forms: Vec<String>,
    #[serde(rename = "X")]
    pub x: f64,
    pub empirical: f64,
    pub predicted_leading: f64,
    /// Second moment only.
    pub predicted_with_secondary: Option<f64>,
    /// First moment only: refined and `U` brackets.
    pub predicted_refined: Option<f64>,
    pub predicted_u_bracket: Option<f64>,
    /// `empirical / predicted` for the headline prediction (with the
    /// secondary term for the second moment, the main bracket for the
    /// first); `None` in the degenerate case.
    pub ratio: Option<f64>,
    pub ratio_leading: Option<f64>,
    pub ratio_refined: Option<f64>,
    pub ratio_u_bracket: Option<f64>,
    /// Change of `ratio` from the previous grid point.
    pub ratio_change: Option<f64>,
    pub family_size: usize,
    pub degenerate: bool,
    pub constants: Constants,
    pub delta: f64,
    pub prime_limit: u64,
    pub n_max: Vec<usize>,
    pub threads: usize,
    pub sample_rate: f64,
    pub seed: u64,
    pub cache_hits: Vec<bool>,
    pub skipped: Vec<SkippedMember>,
    pub runtime_secs: f64,
}

impl MomentReport {
    /// Copy with the wall-clock field cleared, for reproducibility checks.
    pub fn without_runtime(&self) -> MomentReport {
        MomentReport {
            runtime_secs: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Fixed CSV column order.
pub const CSV_HEADER: [&str; 6] = [
    "X",
    "empirical",
    "predicted_leading",
    "predicted_with_secondary",
    "ratio",
    "family_size",
];

pub fn write_csv<W: std::io::Write>(reports: &[MomentReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.17e}"));
    for r in reports {
        w.write_record([
            format!("{}", r.x),
            format!("{:.17e}", r.empirical),
            format!("{:.17e}", r.predicted_leading),
            opt(r.predicted_with_secondary),
            opt(r.ratio),
            r.family_size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json_lines<W: std::io::Write>(reports: &[MomentReport], mut out: W) -> Result<()> {
    for r in reports {
        writeln!(out, "{}", r.to_json_line()?)?;
    }
    Ok(())
}

/// Settings of a moment sweep.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: MomentKind,
    pub forms: Vec<FormSpec>,
    pub x_grid: Vec<f64>,
    pub bump: BumpSpec,
    pub prime_limit: u64,
    pub exec: Execution,
    /// Fraction of family members kept; the sum is rescaled by its inverse.
    pub sample: f64,
    pub seed: u64,
    pub policy: FailurePolicy,
    pub cache: Option<CoefficientCache>,
    pub memory_budget: u64,
}

impl ExperimentConfig {
    pub fn new(kind: MomentKind, forms: Vec<FormSpec>, x_grid: Vec<f64>) -> Self {
        ExperimentConfig {
            kind,
            forms,
            x_grid,
            bump: BumpSpec::default(),
            prime_limit: crate::eulerprod::DEFAULT_PRIME_LIMIT,
            exec: Execution::Parallel,
            sample: 1.0,
            seed: 0,
            policy: FailurePolicy::SkipAndLog,
            cache: None,
            memory_budget: crate::forms::DEFAULT_MEMORY_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let need = if self.kind == MomentKind::Mixed { 2 } else { 1 };
        if self.forms.len() != need {
            return Err(Error::InvalidArgument(format!(
                "the {} moment takes {need} form(s), got {}",
                self.kind,
                self.forms.len()
            )));
        }
        if self.x_grid.is_empty() {
            return Err(Error::InvalidArgument("empty X grid".into()));
        }
        if !(self.sample > 0.0 && self.sample <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must lie in (0, 1], got {}",
                self.sample
            )));
        }
        self.bump.validate()
    }
}

/// A form with known `η` and a coefficient table of the requested length.
#[derive(Debug, Clone)]
pub struct PreparedForm {
    pub form: FormSpec,
    pub table: CoefficientTable,
    pub cache_hit: bool,
}

/// Builds (or loads) the table and infers `η` if it is unknown.
pub fn prepare_form(
    form: &FormSpec,
    n_max: usize,
    cache: Option<&CoefficientCache>,
    opts: &CoeffOptions,
) -> Result<PreparedForm> {
    let probes = default_probes(form, 1, 4);
    let n_max = match form.eta {
        Some(_) => n_max.max(1),
        None => n_max.max(probe_length(form, &probes)),
    };
    let (mut table, cache_hit) = match cache {
        Some(c) => c.load_or_build(form, n_max, opts)?,
        None => (sieve_coefficients_with(form, n_max, opts)?, false),
    };
    let form = match form.eta {
        Some(_) => form.clone(),
        None => form.clone().with_eta(infer_eta(form, &probes, &table)?),
    };
    table.set_form(form.clone());
    Ok(PreparedForm {
        form,
        table,
        cache_hit,
    })
}

/// Prime limit actually usable for a form's Euler products.
pub fn usable_prime_limit(forms: &[&FormSpec], requested: u64) -> u64 {
    forms
        .iter()
        .filter_map(|f| f.n_max_cap())
        .fold(requested, |p, cap| p.min(cap as u64))
}

pub fn compute_constants(
    kind: MomentKind,
    forms: &[&FormSpec],
    prime_limit: u64,
    bump: &BumpSpec,
    exec: Execution,
) -> Result<Constants> {
    let p = usable_prime_limit(forms, prime_limit);
    let data = forms
        .iter()
        .map(|f| LocalData::new(f, p, exec))
        .collect::<Result<Vec<_>>>()?;
    match kind {
        MomentKind::Second => constants_second(&data[0], bump),
        MomentKind::First => constants_first(&data[0], bump),
        MomentKind::Mixed => constants_mixed(&data[0], &data[1], bump),
    }
}

fn keep(seed: u64, d: u64, rate: f64) -> bool {
    if rate >= 1.0 {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ d.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.gen::<f64>() < rate
}

/// Runs a sweep over the X grid; `L′` values are computed once for the
/// largest family and reused for every smaller `X`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MomentReport>> {
    cfg.validate()?;
    let start = Instant::now();
    let x_max = cfg.x_grid.iter().copied().fold(f64::NAN, f64::max);
    let d_bound = (x_max / 8.0).ceil() as u64;
    let opts = CoeffOptions {
        memory_budget: cfg.memory_budget,
        exec: cfg.exec,
    };

    let mut prepared = Vec::with_capacity(cfg.forms.len());
    for f in &cfg.forms {
        let n_max = probe_length(f, &default_probes(f, 1, 1)).max(1);
        prepared.push(prepare_form(f, n_max, cfg.cache.as_ref(), &opts)?);
    }
    let forms: Vec<&FormSpec> = prepared.iter().map(|p| &p.form).collect();
    let big = enumerate_family(&forms, x_max, &cfg.bump)?;
    let ds: Vec<u64> = big
        .members
        .iter()
        .map(|m| m.d)
        .filter(|&d| d <= d_bound && keep(cfg.seed, d, cfg.sample))
        .collect();

    let mut values = Vec::with_capacity(prepared.len());
    for p in prepared.iter_mut() {
        if let Some(&d) = ds.last() {
            let need = effective_length(&p.form, d, 1.0);
            if need > p.table.n_max() {
                *p = prepare_form(&p.form, need, cfg.cache.as_ref(), &opts)?;
            }
        }
        values.push(LValues::compute(&p.table, &ds, cfg.policy, cfg.exec)?);
    }
    let forms: Vec<&FormSpec> = prepared.iter().map(|p| &p.form).collect();
    let constants = compute_constants(cfg.kind, &forms, cfg.prime_limit, &cfg.bump, cfg.exec)?;
    let mut skipped: Vec<SkippedMember> = values.iter().flat_map(|v| v.skipped.clone()).collect();
    skipped.sort_by_key(|s| s.d);

    let mut grid = cfg.x_grid.clone();
    grid.sort_by(f64::total_cmp);
    let mut reports = Vec::with_capacity(grid.len());
    let mut previous: Option<f64> = None;
    for &x in &grid {
        let mut family = enumerate_family(&forms, x, &cfg.bump)?;
        family.members.retain(|m| keep(cfg.seed, m.d, cfg.sample));
        let raw = empirical_moment(cfg.kind, &family, &values[0], values.get(1))?;
        let empirical = raw / cfg.sample;
        let mut r = MomentReport {
            kind: cfg.kind,
            forms: family.forms.clone(),
            x,
            empirical,
            predicted_leading: 0.0,
            predicted_with_secondary: None,
            predicted_refined: None,
            predicted_u_bracket: None,
            ratio: None,
            ratio_leading: None,
            ratio_refined: None,
            ratio_u_bracket: None,
            ratio_change: None,
            family_size: family.len(),
            degenerate: family.degenerate,
            constants: constants.clone(),
            delta: cfg.bump.delta,
            prime_limit: constants.prime_limit,
            n_max: prepared.iter().map(|p| p.table.n_max()).collect(),
            threads: if cfg.exec == Execution::Sequential {
                1
            } else {
                crate::exec::current_threads()
            },
            sample_rate: cfg.sample,
            seed: cfg.seed,
            cache_hits: prepared.iter().map(|p| p.cache_hit).collect(),
            skipped: skipped
                .iter()
                .filter(|s| 8 * s.d < x.ceil() as u64)
                .cloned()
                .collect(),
            runtime_secs: 0.0,
        };
        match cfg.kind {
            MomentKind::Second => {
                let (lead, with) = predicted_second(&constants, x)?;
                r.predicted_leading = lead;
                r.predicted_with_secondary = Some(with);
                r.ratio_leading = ratio(empirical, lead);
                r.ratio = ratio(empirical, with);
            }
            MomentKind::Mixed => {
                let lead = predicted_mixed(&constants, x)?;
                r.predicted_leading = lead;
                r.ratio_leading = ratio(empirical, lead);
                r.ratio = r.ratio_leading;
            }
            MomentKind::First => {
                let f = forms[0];
                let p = predicted_first(&constants, x, f.weight, f.level)?;
                r.predicted_leading = p.main;
                r.predicted_refined = Some(p.refined);
                r.predicted_u_bracket = Some(p.u_bracket);
                r.ratio = ratio(empirical, p.main);
                r.ratio_leading = r.ratio;
                r.ratio_refined = ratio(empirical, p.refined);
                r.ratio_u_bracket = ratio(empirical, p.u_bracket);
            }
        }
        if r.degenerate {
            r.ratio = None;
            r.ratio_leading = None;
            r.ratio_refined = None;
            r.ratio_u_bracket = None;
        }
        r.ratio_change = match (previous, r.ratio) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        previous = r.ratio;
        reports.push(r);
    }
    let elapsed = start.elapsed().as_secs_f64();
    for r in &mut reports {
        r.runtime_secs = elapsed;
    }
    Ok(reports)
}

/// Checks a member list against the defining filters with the root number
/// recomputed from the Kronecker symbol.
pub fn verify_family(forms: &[&FormSpec], family: &TwistFamily) -> Result<()> {
    for m in &family.members {
        for f in forms {
            check_twist(f.level, m.d)?;
            if crate::lfunc::root_number(f, m.d)? != Sign::Minus {
                return Err(Error::Inconsistency(format!(
                    "d = {} has root number +1 for {}",
                    m.d, f.label
                )));
            }
        }
        if 8.0 * m.d as f64 >= family.x {
            return Err(Error::Inconsistency(format!("8d = {} outside supp F", 8 * m.d)));
        }
    }
    Ok(())
}

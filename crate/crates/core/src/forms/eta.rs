//! Numerical determination of the Fricke eigenvalue.

use serde::{Deserialize, Serialize};

use super::{CoefficientTable, FormSpec, Sign};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lfunc::{chi_level, check_twist, AfeEvaluator, AfeOptions};
use crate::special::CutoffSpec;

/// Tolerance of the probe checks.
pub const ETA_TOL: f64 = 1e-6;

/// The asymmetric `Z` used by self-consistency checks: `√N`, or 2 at level
/// one where `√N = 1` would make every check vacuous.
pub fn alt_z(level: u64) -> f64 {
    if level > 1 {
        (level as f64).sqrt()
    } else {
        2.0
    }
}

/// The first `count` admissible `d` (odd, squarefree, coprime to `N`) at or
/// above `start`.
pub fn default_probes(form: &FormSpec, start: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut d = start.max(1) | 1;
    while out.len() < count {
        if check_twist(form.level, d).is_ok() {
            out.push(d);
        }
        d += 2;
    }
    out
}

/// Per-probe residuals under both candidate signs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaProbe {
    pub d: u64,
    pub chi_level: i32,
    /// Residual assuming `η = +1`, then `η = −1`.
    pub residual: [f64; 2],
}

/// Coefficients needed to probe the given twists.
pub fn probe_length(form: &FormSpec, probes: &[u64]) -> usize {
    let z = alt_z(form.level);
    probes
        .iter()
        .map(|&d| crate::lfunc::effective_length(form, d, z))
        .max()
        .unwrap_or(1)
}

/// Infers `η` from AFE self-consistency.
///
/// For each candidate sign and probe: if the predicted root number is +1 the
/// antisymmetric combination `S_Z − S_{1/Z}` must vanish; otherwise
/// `S_Z + S_{1/Z}` must not depend on `Z` (compared at `Z = 1` and
/// [`alt_z`]). Exactly one sign must pass every probe.
pub fn infer_eta(form: &FormSpec, probes: &[u64], coeffs: &CoefficientTable) -> Result<Sign> {
    infer_eta_report(form, probes, coeffs).map(|(s, _)| s)
}

pub fn infer_eta_report(
    form: &FormSpec,
    probes: &[u64],
    coeffs: &CoefficientTable,
) -> Result<(Sign, Vec<EtaProbe>)> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument("no probe twists given".into()));
    }
    let opts = AfeOptions {
        length_factor: 1.0,
        exec: Execution::Parallel,
    };
    let spec_alt = CutoffSpec::new(alt_z(form.level), form.weight, form.level)?;
    let spec_one = CutoffSpec::new(1.0, form.weight, form.level)?;
    // The sums do not depend on η; any sign will do here.
    let alt = AfeEvaluator::with_eta(coeffs, &spec_alt, Sign::Plus, opts)?;
    let one = AfeEvaluator::with_eta(coeffs, &spec_one, Sign::Plus, opts)?;
    let mut report = Vec::with_capacity(probes.len());
    let mut ok = [true, true];
    for &d in probes {
        let s = alt.sums(d)?;
        let s1 = one.sums(d)?;
        let chi = chi_level(form.level, d);
        let mut residual = [0.0; 2];
        for (i, eta) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
            let eps = form.i_kappa() * eta * chi;
            residual[i] = match eps {
                Sign::Plus => (s.s_z - s.s_inv).abs(),
                Sign::Minus => ((s.s_z + s.s_inv) - (s1.s_z + s1.s_inv)).abs(),
            };
            ok[i] &= residual[i] < ETA_TOL;
        }
        report.push(EtaProbe {
            d,
            chi_level: chi.value(),
            residual,
        });
    }
    match ok {
        [true, false] => Ok((Sign::Plus, report)),
        [false, true] => Ok((Sign::Minus, report)),
        _ => Err(Error::Inconsistency(format!(
            "Fricke sign of {}: consistent with η=+1: {}, with η=−1: {}; residuals {:?}",
            form.label,
            ok[0],
            ok[1],
            report.iter().map(|p| (p.d, p.residual)).collect::<Vec<_>>()
        ))),
    }
}

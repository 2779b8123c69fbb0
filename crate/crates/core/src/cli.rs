//! The `twistlab` command line.
//!
//! Exit codes: 0 on success, 1 on a runtime failure (including a failed
//! verification suite), 2 on a usage error or an unknown form label.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eulerprod::{Constants, DEFAULT_PRIME_LIMIT};
use crate::exec::{with_threads, Execution};
use crate::forms::{lookup, registry, sieve_coefficients_with, CoeffOptions, CoefficientCache, FormSpec};
use crate::lfunc::{effective_length_kind, AfeEvaluator, AfeOptions, TwistPoint};
use crate::moments::{
    compute_constants, prepare_form, run_experiment, write_csv, write_json_lines, ExperimentConfig,
    FailurePolicy, MomentKind, MomentReport,
};
use crate::special::{BumpSpec, CutoffKind, CutoffSpec};
use crate::verify::{
    afe_identities, afe_parameters, afe_verdicts, default_poisson_pairs, gauss_suite, poisson_suite,
    random_twists, Verdict,
};

#[derive(Debug, Parser)]
#[command(name = "twistlab", version, about = "Moments of derivatives of quadratic twists at the central point")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Worker threads (default: all hardware threads).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Coefficient cache directory (default: $TWISTLAB_CACHE, else no cache).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Run every map sequentially.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Main-term constants with every component and tail bound.
    Constants(ConstantsArgs),
    /// A single central value or derivative.
    Lvalue(LvalueArgs),
    /// Empirical moments against the predicted main terms.
    Moment(MomentArgs),
    /// Numerical verification suites.
    Verify(VerifyArgs),
    /// Coefficient cache management.
    Cache(CacheArgs),
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub form: String,
    /// Second form, for the mixed constant.
    #[arg(long)]
    pub form2: Option<String>,
    /// Restrict to one moment (default: all that apply).
    #[arg(long, value_enum)]
    pub kind: Option<MomentKind>,
    #[arg(long, default_value_t = DEFAULT_PRIME_LIMIT)]
    pub prime_limit: u64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LvalueArgs {
    #[arg(long)]
    pub form: String,
    #[arg(long)]
    pub d: u64,
    /// Evaluate `L′(1/2)` instead of `L(1/2)`.
    #[arg(long)]
    pub deriv: bool,
    /// AFE parameter `Z`.
    #[arg(long, default_value_t = 1.0)]
    pub z: f64,
    /// Also evaluate at `Z = √N` and report the agreement.
    #[arg(long)]
    pub check_z_invariance: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[arg(long, value_enum)]
    pub kind: MomentKind,
    #[arg(long)]
    pub form: String,
    #[arg(long)]
    pub form2: Option<String>,
    /// A single `X`.
    #[arg(long, conflicts_with = "xgrid")]
    pub x: Option<f64>,
    /// Comma-separated `X` grid.
    #[arg(long, value_delimiter = ',')]
    pub xgrid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = DEFAULT_PRIME_LIMIT)]
    pub prime_limit: u64,
    /// Keep each family member with this probability.
    #[arg(long, default_value_t = 1.0)]
    pub sample: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FailurePolicy::SkipAndLog)]
    pub policy: FailurePolicy,
    /// JSON-lines output (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV summary file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Gauss,
    Poisson,
    Afe,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Forms for the AFE suite (default: Δ, 11a, 19a, 37a).
    #[arg(long)]
    pub form: Vec<String>,
    /// Random twists per form in the AFE suite.
    #[arg(long, default_value_t = 50)]
    pub twists: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the JSON verdict list here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    #[command(subcommand)]
    pub action: CacheAction,
}

#[derive(Debug, Subcommand)]
pub enum CacheAction {
    /// Print the cache directory.
    Path,
    /// List cached tables.
    List,
    /// Remove every cached table.
    Clear,
    /// Sieve a table and store it.
    Build {
        #[arg(long)]
        form: String,
        #[arg(long)]
        n_max: usize,
    },
}

/// Runs the CLI on explicit arguments and streams; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let threads = cli.global.threads;
    let result = with_threads(threads, || {
        let mut buf = Vec::new();
        let mut ebuf = Vec::new();
        let r = dispatch(&cli, &mut buf, &mut ebuf);
        (r, buf, ebuf)
    });
    let (r, buf, ebuf) = result;
    let _ = out.write_all(&buf);
    let _ = err.write_all(&ebuf);
    match r {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownForm(_) => 2,
        _ => 1,
    }
}

fn dispatch(cli: &Cli, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32> {
    let exec = if cli.global.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let cache = CoefficientCache::from_env_or(cli.global.cache_dir.clone());
    let ctx = Context { exec, cache };
    match &cli.command {
        Command::Constants(a) => cmd_constants(&ctx, a, out),
        Command::Lvalue(a) => cmd_lvalue(&ctx, a, out),
        Command::Moment(a) => cmd_moment(&ctx, a, out, err),
        Command::Verify(a) => cmd_verify(&ctx, a, out),
        Command::Cache(a) => cmd_cache(&ctx, a, out),
    }
}

struct Context {
    exec: Execution,
    cache: Option<CoefficientCache>,
}

impl Context {
    fn coeff_options(&self) -> CoeffOptions {
        CoeffOptions {
            exec: self.exec,
            ..CoeffOptions::default()
        }
    }

    /// Form with `η` determined.
    fn resolved_form(&self, label: &str) -> Result<FormSpec> {
        let form = lookup(label)?;
        Ok(prepare_form(&form, 1, self.cache.as_ref(), &self.coeff_options())?.form)
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>> {
    Ok(match path {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    })
}

fn emit(out: &mut Vec<u8>, path: &Option<PathBuf>, text: &str) -> Result<()> {
    match open_output(path)? {
        Some(mut f) => {
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ConstantsOutput<'a> {
    forms: Vec<&'a str>,
    eta: Vec<i32>,
    bundles: &'a [Constants],
}

fn cmd_constants(ctx: &Context, a: &ConstantsArgs, out: &mut Vec<u8>) -> Result<i32> {
    let bump = BumpSpec::new(a.delta)?;
    let f = ctx.resolved_form(&a.form)?;
    let g = a.form2.as_deref().map(|l| ctx.resolved_form(l)).transpose()?;
    let kinds: Vec<MomentKind> = match (a.kind, &g) {
        (Some(MomentKind::Mixed), None) => {
            return Err(Error::InvalidArgument("the mixed constant needs --form2".into()))
        }
        (Some(k), _) => vec![k],
        (None, Some(_)) => vec![MomentKind::Mixed],
        (None, None) => vec![MomentKind::Second, MomentKind::First],
    };
    let mut bundles = Vec::new();
    for k in kinds {
        let forms: Vec<&FormSpec> = match (k, &g) {
            (MomentKind::Mixed, Some(g)) => vec![&f, g],
            _ => vec![&f],
        };
        bundles.push(compute_constants(k, &forms, a.prime_limit, &bump, ctx.exec)?);
    }
    let mut all = vec![&f];
    all.extend(g.as_ref());
    let text = match a.format {
        Format::Json => {
            let o = ConstantsOutput {
                forms: all.iter().map(|f| f.label.as_str()).collect(),
                eta: all.iter().map(|f| f.eta.map_or(0, |s| s.value())).collect(),
                bundles: &bundles,
            };
            serde_json::to_string_pretty(&o)? + "\n"
        }
        Format::Text => {
            let mut s = String::new();
            for f in &all {
                s += &format!("{}.eta = {}\n", f.label, f.eta.map_or(0, |e| e.value()));
            }
            for b in &bundles {
                s += "\n";
                s += &b.to_kv();
                if b.vanishes {
                    s += "degenerate = true (Z* vanishes; the moment is identically zero)\n";
                }
            }
            s
        }
    };
    emit(out, &a.output, &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct LvalueOutput {
    form: String,
    d: u64,
    root_number: i32,
    derivative: bool,
    z: f64,
    value: f64,
    value_alt_z: Option<f64>,
    alt_z: Option<f64>,
    z_difference: Option<f64>,
}

fn cmd_lvalue(ctx: &Context, a: &LvalueArgs, out: &mut Vec<u8>) -> Result<i32> {
    let f = ctx.resolved_form(&a.form)?;
    let point = TwistPoint::new(&f, a.d)?;
    let kind = if a.deriv {
        CutoffKind::Derivative
    } else {
        CutoffKind::Value
    };
    if a.deriv && point.root_number == crate::forms::Sign::Plus {
        return Err(Error::Contract(format!(
            "{} ⊗ χ_{} has root number w = +1, so L′(1/2) is not the leading object; \
             the AFE combination for the derivative vanishes identically here",
            f.label,
            8 * a.d
        )));
    }
    let alt = (f.level as f64).sqrt();
    let mut zs = vec![a.z];
    if a.check_z_invariance {
        zs.push(if alt == 1.0 { 2.0 } else { alt });
    }
    let n_max = zs.iter().map(|&z| effective_length_kind(&f, a.d, z, kind)).max().unwrap_or(1);
    if let Some(cap) = f.n_max_cap() {
        if n_max > cap {
            return Err(Error::ResourceLimit {
                what: format!("coefficients of {} for d = {}", f.label, a.d),
                required: n_max as u64,
                limit: cap as u64,
            });
        }
    }
    let table = match &ctx.cache {
        Some(c) => c.load_or_build(&f, n_max, &ctx.coeff_options())?.0,
        None => sieve_coefficients_with(&f, n_max, &ctx.coeff_options())?,
    };
    let mut table = table;
    table.set_form(f.clone());
    let opts = AfeOptions {
        length_factor: 1.0,
        exec: ctx.exec,
    };
    let eval = |z: f64| -> Result<f64> {
        let spec = CutoffSpec::with_kind(z, f.weight, f.level, kind)?;
        let ev = AfeEvaluator::with_eta(&table, &spec, f.eta()?, opts)?;
        if a.deriv {
            ev.lprime(a.d)
        } else {
            ev.central_value(a.d)
        }
    };
    let value = eval(zs[0])?;
    let alt_value = zs.get(1).map(|&z| eval(z)).transpose()?;
    let o = LvalueOutput {
        form: f.label.clone(),
        d: a.d,
        root_number: point.root_number.value(),
        derivative: a.deriv,
        z: a.z,
        value,
        value_alt_z: alt_value,
        alt_z: zs.get(1).copied(),
        z_difference: alt_value.map(|v| (v - value).abs()),
    };
    let text = match a.format {
        Format::Json => serde_json::to_string(&o)? + "\n",
        Format::Text => {
            let what = if a.deriv { "L'(1/2)" } else { "L(1/2)" };
            let mut s = format!(
                "form = {}\nd = {}\nroot_number = {}\n{what} = {:.15e}\n",
                o.form, o.d, o.root_number, o.value
            );
            if let (Some(z), Some(v), Some(dz)) = (o.alt_z, o.value_alt_z, o.z_difference) {
                s += &format!("{what} at Z = {z:.6} = {v:.15e}\n|difference| = {dz:.3e}\n");
            }
            s
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(0)
}

fn cmd_moment(ctx: &Context, a: &MomentArgs, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32> {
    let grid = match (&a.x, &a.xgrid) {
        (Some(x), _) => vec![*x],
        (None, Some(g)) => g.clone(),
        (None, None) => vec![1e4, 3e4, 1e5],
    };
    let mut forms = vec![lookup(&a.form)?];
    match (a.kind, &a.form2) {
        (MomentKind::Mixed, Some(g)) => forms.push(lookup(g)?),
        (MomentKind::Mixed, None) => {
            return Err(Error::InvalidArgument("the mixed moment needs --form2".into()))
        }
        (_, Some(_)) => {
            return Err(Error::InvalidArgument(format!("--form2 only applies to the mixed moment, not {}", a.kind)))
        }
        _ => {}
    }
    let mut cfg = ExperimentConfig::new(a.kind, forms, grid);
    cfg.bump = BumpSpec::new(a.delta)?;
    cfg.prime_limit = a.prime_limit;
    cfg.exec = ctx.exec;
    cfg.sample = a.sample;
    cfg.seed = a.seed;
    cfg.policy = a.policy;
    cfg.cache = ctx.cache.clone();
    let reports = run_experiment(&cfg)?;
    match open_output(&a.output)? {
        Some(mut f) => {
            write_json_lines(&reports, &mut f)?;
            f.flush()?;
        }
        None => write_json_lines(&reports, &mut *out)?,
    }
    if let Some(path) = &a.csv {
        write_csv(&reports, File::create(path)?)?;
    }
    write_trend(&reports, err)?;
    Ok(0)
}

fn write_trend(reports: &[MomentReport], err: &mut Vec<u8>) -> Result<()> {
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    for r in reports {
        writeln!(
            err,
            "{} {} X = {:e}: family {}, empirical {:.6e}, predicted {:.6e}, ratio {}, change {}{}",
            r.kind,
            r.forms.join("x"),
            r.x,
            r.family_size,
            r.empirical,
            r.predicted_with_secondary.unwrap_or(r.predicted_leading),
            fmt(r.ratio),
            fmt(r.ratio_change),
            if r.degenerate { " (degenerate)" } else { "" }
        )?;
    }
    Ok(())
}

fn cmd_verify(ctx: &Context, a: &VerifyArgs, out: &mut Vec<u8>) -> Result<i32> {
    let mut verdicts: Vec<Verdict> = Vec::new();
    let run = |s: Suite| a.suite == s || a.suite == Suite::All;
    if run(Suite::Gauss) {
        verdicts.extend(gauss_suite(999, 20, ctx.exec)?);
    }
    if run(Suite::Poisson) {
        verdicts.extend(poisson_suite(&default_poisson_pairs(), &BumpSpec::default(), ctx.exec)?);
    }
    if run(Suite::Afe) {
        let labels: Vec<String> = if a.form.is_empty() {
            vec!["Delta".into(), "11a".into(), "19a".into(), "37a".into()]
        } else {
            a.form.clone()
        };
        for l in &labels {
            verdicts.extend(afe_suite_for(ctx, l, a.twists, a.seed)?);
        }
    }
    let all_pass = verdicts.iter().all(|v| v.passed);
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&verdicts)? + "\n",
        Format::Text => {
            let mut s: String = verdicts.iter().map(|v| v.line() + "\n").collect();
            s += &format!(
                "{} of {} checks passed\n",
                verdicts.iter().filter(|v| v.passed).count(),
                verdicts.len()
            );
            s
        }
    };
    out.write_all(text.as_bytes())?;
    if let Some(p) = &a.json {
        std::fs::write(p, serde_json::to_string_pretty(&verdicts)?)?;
    }
    Ok(if all_pass { 0 } else { 1 })
}

/// Coefficients used by the AFE suite for uncapped forms.
const AFE_SUITE_N: usize = 400_000;

fn afe_suite_for(ctx: &Context, label: &str, twists: usize, seed: u64) -> Result<Vec<Verdict>> {
    let form = lookup(label)?;
    let n_cap = form.n_max_cap().unwrap_or(AFE_SUITE_N);
    let (z, d_max) = afe_parameters(&form, n_cap);
    let opts = ctx.coeff_options();
    let p = prepare_form(&form, n_cap, ctx.cache.as_ref(), &opts)?;
    let ds = random_twists(&p.form, twists, d_max, seed);
    let r = afe_identities(&p.table, &ds, z, ctx.exec)?;
    Ok(afe_verdicts(&r))
}

fn cmd_cache(ctx: &Context, a: &CacheArgs, out: &mut Vec<u8>) -> Result<i32> {
    let cache = ctx.cache.clone().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no cache directory: pass --cache-dir or set {}",
            crate::forms::CACHE_ENV
        ))
    })?;
    match &a.action {
        CacheAction::Path => writeln!(out, "{}", cache.dir().display())?,
        CacheAction::List => {
            for e in cache.list()? {
                writeln!(out, "{}\t{}\tv{}\t{}\t{}", e.label, e.n_max, e.version, e.bytes, e.path.display())?;
            }
        }
        CacheAction::Clear => {
            let n = cache.clear()?;
            writeln!(out, "removed {n} file(s)")?;
        }
        CacheAction::Build { form, n_max } => {
            let f = lookup(form)?;
            let (t, hit) = cache.load_or_build(&f, *n_max, &ctx.coeff_options())?;
            writeln!(
                out,
                "{} n_max = {} {}",
                t.form().label,
                t.n_max(),
                if hit { "(already cached)" } else { "(built)" }
            )?;
        }
    }
    Ok(0)
}

/// Registry labels, for help texts and tests.
pub fn known_forms() -> Vec<String> {
    registry().into_iter().map(|f| f.label).collect()
}

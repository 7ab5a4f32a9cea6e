//! Command-line front-end: every library module as a subcommand.
//!
//! Exit codes: 0 ok, 1 check failed, 2 bad input, 3 size cap exceeded.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use wishart::bounds::{self, BoundReport, LaplaceArgs, LaplaceKind, LaplaceValue, LegendreKind, ThresholdArgs, ThresholdKind};
use wishart::moments::{self, IsoValue, Isotropic, LimitArgs, LimitKind, NExpansion, Route, SampleCoefficient};
use wishart::partitions::enumerate;
use wishart::sampling::{self, RngSpec, Spectrum, Target, Variant};
use wishart::specnum::{count, CountKind};
use wishart::wick::{moment_class, MomentClass, WickCaps};
use wishart::{Error, PartitionClass, Rational, SetPartition, SymMatrix, TracePolynomial};

pub mod input;
pub mod output;
pub mod verify;

use input::Eval;
use output::{Format, Provenance, Rendered};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "wishart", version, about = "Exact and sampled moments of real Wishart matrices")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Pretty, global = true)]
    pub format: Format,
    /// Seed for every random stream.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Worker threads; defaults to the available cores. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub caps: CapArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct CapArgs {
    /// Largest power for centered Wick sums.
    #[arg(long, global = true)]
    pub cap_centered: Option<usize>,
    /// Largest power for uncentered Wick sums.
    #[arg(long, global = true)]
    pub cap_uncentered: Option<usize>,
    /// Largest power of the Gaussian limit.
    #[arg(long, global = true)]
    pub cap_h_power: Option<usize>,
}

impl CapArgs {
    pub fn resolve(&self) -> WickCaps {
        let d = WickCaps::default();
        WickCaps {
            centered: self.cap_centered.unwrap_or(d.centered),
            uncentered: self.cap_uncentered.unwrap_or(d.uncentered),
            h_power: self.cap_h_power.unwrap_or(d.h_power),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate set partitions of [n], optionally with m blocks.
    Partitions {
        n: usize,
        m: Option<usize>,
        /// all, nc, nosing, nosing-nc, nosing-cross, cross
        #[arg(long, default_value = "all")]
        class: String,
        /// Print only the number of partitions.
        #[arg(long)]
        count: bool,
        /// Add the Kreweras complement of each (non-crossing) partition.
        #[arg(long)]
        kreweras: bool,
    },
    /// Special numbers: stirling1, stirling2, bell, catalan, narayana, riordan-nm, riordan, kreweras, catalan-triangle, pochhammer, gauss-even.
    Counts { kind: String, args: Vec<usize> },
    /// Symbolic moments as trace polynomials.
    Moment(MomentArgs),
    /// Leading-order Gaussian-limit moments, or their refinement by outer blocks with --circ.
    Sigma {
        n: usize,
        #[arg(long)]
        circ: Option<usize>,
        /// recursion or closed-form
        #[arg(long, default_value = "recursion")]
        route: String,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Isotropic values at P = I.
    Iso {
        #[arg(value_enum)]
        kind: IsoKind,
        /// A partition as JSON, e.g. [[1,3],[2]], or a power n.
        arg: String,
        /// Fix the dimension instead of keeping r symbolic.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Limit spectral moments: mp-moment, mp-moment-iso, mp-centered-iso, semicircle-sigma, mp-integral, sc-integral.
    Limits {
        kind: String,
        n: usize,
        /// Aspect ratio r/N, exact (e.g. 1/2 or 0.5).
        #[arg(long, default_value = "1")]
        rho: String,
        /// Normalized traces τ₁, τ₂, …; missing values default to 1.
        #[arg(long, value_delimiter = ',')]
        tau: Vec<String>,
    },
    /// Run a named check suite; exit 0 iff every check passes.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Size bound for the sub-suites.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Monte Carlo moment estimates, or a single draw with --draw.
    Sample(SampleArgs),
    /// Pooled eigenvalue histogram with limit-law overlays.
    Spectra(SpectraArgs),
    /// Concentration thresholds, Laplace transforms and inequality checks.
    Bounds {
        #[command(subcommand)]
        command: BoundsCommand,
    },
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    /// `I` for the identity, or a matrix (JSON file or inline JSON).
    #[arg(long)]
    pub eval: Option<String>,
    /// `r` keeps the dimension symbolic; an integer fixes it.
    #[arg(long)]
    pub dim: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MomentKind {
    /// Centered class moment M(n,m): singleton-free partitions with m blocks.
    M,
    /// Non-crossing part M⁺(2n,n) of the Gaussian-limit moment.
    Mplus,
    /// Uncentered class moment M°(n,m): all partitions with m blocks.
    Mcirc,
    /// E(ℋ_N^n), exact in N.
    Hn,
    /// E(P_N^n), or E((P_N − P)^n) with --centered, exact in N.
    Pn,
}

#[derive(Args, Debug)]
pub struct MomentArgs {
    #[arg(long, value_enum)]
    pub kind: MomentKind,
    pub n: usize,
    /// m for the class moments, N for hn/pn.
    pub second: Option<u64>,
    #[arg(long)]
    pub centered: bool,
    /// Finite-sample coefficient.
    #[arg(long, value_enum, default_value_t = CoeffArg::Falling)]
    pub coeff: CoeffArg,
    #[command(flatten)]
    pub eval: EvalArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoeffArg {
    Falling,
    Binomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IsoKind {
    MPiCirc,
    MPiCentered,
    XMinusIPower,
    MPlusI,
    Rank1Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// The full acceptance suite.
    All,
    Golden,
    Routes,
    Counting,
    Isotropic,
    Limits,
    MonteCarlo,
    Bounds,
    Coverage,
    SigmaRoutes,
    SigmaCircRoutes,
    MplusRoutes,
    AlphaRoutes,
    NcRoutes,
    Kreweras,
    WickEngines,
}

#[derive(Args, Debug, Clone)]
pub struct CovArgs {
    /// Covariance: `I` (with --dim), a JSON file, or inline JSON.
    #[arg(long, default_value = "I")]
    pub cov: String,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Sample size N.
    #[arg(long)]
    pub samples: usize,
    /// Random stream index, combined with --seed.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Plain,
    MeanAdjusted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    PnPower,
    CenteredPower,
    HnPower,
    HPower,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub cov: CovArgs,
    #[arg(long, default_value_t = 1)]
    pub power: usize,
    #[arg(long, value_enum, default_value_t = TargetArg::PnPower)]
    pub target: TargetArg,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Print one draw of P_N instead of an estimate.
    #[arg(long)]
    pub draw: bool,
    #[arg(long, value_enum, default_value_t = VariantArg::Plain)]
    pub variant: VariantArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpectrumArg {
    Covariance,
    Fluctuation,
}

#[derive(Args, Debug)]
pub struct SpectraArgs {
    #[command(flatten)]
    pub cov: CovArgs,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = SpectrumArg::Covariance)]
    pub spectrum: SpectrumArg,
}

#[derive(Args, Debug, Clone)]
pub struct BoundInputs {
    /// P: `I` (with --dim), a JSON file, or inline JSON.
    #[arg(long)]
    pub p: Option<String>,
    /// A, in the same forms as P.
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Sample size N.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    FluctuationMoment,
    GaussianMoment,
    MatrixLaplace,
    SubGaussian,
    TraceMomentGap,
    Rank1,
}

#[derive(Subcommand, Debug)]
pub enum BoundsCommand {
    /// Level exceeded with probability at most e^{−δ}: trace-two-sided, trace-pos, trace-neg, trace-gaussian, opnorm, eigen-sup, lambda1, lambda1-fluctuation, moment-tail.
    Threshold {
        kind: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        z: Option<f64>,
        #[command(flatten)]
        inputs: BoundInputs,
    },
    /// Laplace transforms: rank1-exact, rank1-iso, h-series, trace-ah, chi-sq, trace-ahn.
    Laplace {
        kind: String,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        /// Truncation order of the Gaussian-limit series.
        #[arg(long)]
        terms: Option<usize>,
        #[command(flatten)]
        inputs: BoundInputs,
    },
    /// L, lstar, lstar-inv, cramer-threshold.
    Legendre { kind: String, x: f64 },
    /// Evaluate one inequality family; exit 1 if any reported bound fails.
    Check {
        #[arg(value_enum)]
        check: CheckKind,
        #[command(flatten)]
        inputs: BoundInputs,
        /// Moment order n.
        #[arg(long)]
        power: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        t: Option<f64>,
        /// Rank-one vectors as JSON arrays.
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
    },
    /// CSV-style table of thresholds over δ × N × r with P = A = I_r.
    Sweep {
        kind: String,
        #[arg(long, value_delimiter = ',', required = true)]
        delta: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        samples: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        dim: Vec<usize>,
        #[arg(long)]
        z: Option<f64>,
    },
}

/// Outcome of a command before formatting.
pub struct Outcome {
    pub provenance: Provenance,
    pub body: Rendered,
    pub passed: bool,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Cap { .. } => EXIT_CAP,
        Error::Convergence(_) => EXIT_CHECK,
        _ => EXIT_INPUT,
    }
}

/// Parses `argv`, runs the command and writes to `out`; returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::Invalid(format!("thread pool: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(o) => {
            if let Err(e) = o.body.emit(&o.provenance, cli.format, out) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_CHECK;
            }
            if o.passed {
                EXIT_OK
            } else {
                EXIT_CHECK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

struct Ctx {
    caps: WickCaps,
    seed: u64,
}

impl Ctx {
    fn provenance(&self, formula: impl Into<String>, route: Option<&str>) -> Provenance {
        Provenance { formula: formula.into(), route: route.map(str::to_string), caps: self.caps, seed: self.seed }
    }

    fn done(&self, formula: impl Into<String>, route: Option<&str>, body: Rendered) -> wishart::Result<Outcome> {
        Ok(Outcome { provenance: self.provenance(formula, route), body, passed: true })
    }
}

fn execute(cli: &Cli) -> wishart::Result<Outcome> {
    let ctx = Ctx { caps: cli.caps.resolve(), seed: cli.seed };
    match &cli.command {
        Command::Partitions { n, m, class, count, kreweras } => partitions(&ctx, *n, *m, class, *count, *kreweras),
        Command::Counts { kind, args } => {
            let k: CountKind = kind.parse()?;
            let v = count(k, args)?;
            ctx.done(format!("{k:?}{args:?}"), None, output::scalar("value", v.to_string()))
        }
        Command::Moment(a) => moment(&ctx, a),
        Command::Sigma { n, circ, route, eval } => {
            let r: Route = route.parse()?;
            let target = input::eval_target(eval.eval.as_deref(), eval.dim.as_deref())?;
            let (name, t) = match circ {
                Some(m) => (format!("sigma_circ({n},{m})"), moments::sigma_circ(*n, *m, r)?),
                None => (format!("sigma({n})"), moments::sigma(*n, r)?),
            };
            ctx.done(name, Some(route_name(r)), render_poly(&t, &target)?)
        }
        Command::Iso { kind, arg, dim } => iso(&ctx, *kind, arg, *dim),
        Command::Limits { kind, n, rho, tau } => {
            let k: LimitKind = kind.parse()?;
            let mut taus: Vec<Rational> = tau.iter().map(|s| input::rational(s)).collect::<wishart::Result<_>>()?;
            if taus.len() < *n {
                taus.resize(*n, Rational::from_integer(1.into()));
            }
            let v = moments::limits(k, &LimitArgs { n: *n, rho: input::rational(rho)?, tau: taus })?;
            let body = Rendered {
                json: serde_json::to_value(&v).expect("serializable"),
                pretty: v.to_string(),
                csv: format!("value\n{}", v.value()),
            };
            ctx.done(format!("{k:?}({n})"), None, body)
        }
        Command::Verify { suite, n } => verify_suite(&ctx, *suite, *n),
        Command::Sample(a) => sample(&ctx, a),
        Command::Spectra(a) => spectra(&ctx, a),
        Command::Bounds { command } => bounds_cmd(&ctx, command),
    }
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Recursion => "recursion",
        Route::ClosedForm => "closed-form",
        Route::Wick => "wick",
    }
}

fn partitions(ctx: &Ctx, n: usize, m: Option<usize>, class: &str, only_count: bool, with_kreweras: bool) -> wishart::Result<Outcome> {
    let class: PartitionClass = class.parse()?;
    let stream = enumerate(n, m, class)?;
    let formula = format!("partitions({n}, {m:?}, {class:?})");
    if only_count {
        return ctx.done(formula, None, output::scalar("count", stream.count().to_string()));
    }
    let parts: Vec<SetPartition> = stream.collect();
    let body = if with_kreweras {
        let rows = parts.iter().map(|p| Ok(vec![p.to_string(), p.kreweras()?.to_string()])).collect::<wishart::Result<Vec<_>>>()?;
        let mut r = output::table(&["partition", "kreweras"], &rows);
        r.json = json!(parts.iter().map(|p| json!({ "partition": p, "kreweras": p.kreweras().ok() })).collect::<Vec<_>>());
        r
    } else {
        let rows: Vec<Vec<String>> = parts.iter().map(|p| vec![p.to_string()]).collect();
        let mut r = output::table(&["partition"], &rows);
        r.pretty = parts.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("\n");
        r.json = serde_json::to_value(&parts).expect("serializable");
        r
    };
    ctx.done(formula, Some("enumeration"), body)
}

fn render_poly(t: &TracePolynomial, target: &Eval) -> wishart::Result<Rendered> {
    Ok(match target {
        Eval::Symbolic => output::poly(t),
        Eval::Identity(None) => output::laurent(&t.eval_isotropic()),
        Eval::Identity(Some(r)) => output::rational(&t.eval_isotropic().eval(r)),
        Eval::Numeric(p) => output::matrix(t.eval_numeric(p)?.matrix()),
    })
}

fn render_expansion(e: &NExpansion, big_n: Option<u64>, target: &Eval) -> wishart::Result<Rendered> {
    if let Some(nn) = big_n {
        return match target {
            Eval::Numeric(p) => Ok(output::matrix(e.eval_numeric(p, nn as f64)?.matrix())),
            _ => render_poly(&e.at(nn)?, target),
        };
    }
    let power = |d: i32| if d % 2 == 0 { format!("{}", d / 2) } else { format!("{d}/2") };
    match target {
        Eval::Symbolic => {
            let rows: Vec<Vec<String>> = e.terms().rev().map(|(d, t)| vec![power(*d), t.to_string()]).collect();
            let mut r = output::table(&["n_power", "coefficient"], &rows);
            r.pretty = e.to_string();
            r.json = serde_json::to_value(e).expect("serializable");
            Ok(r)
        }
        Eval::Identity(dim) => {
            let rows: Vec<Vec<String>> = e
                .terms()
                .rev()
                .map(|(d, t)| {
                    let l = t.eval_isotropic();
                    let v = match dim {
                        None => l.to_string(),
                        Some(r) => output::rational_string(&l.eval(r)),
                    };
                    vec![power(*d), v]
                })
                .collect();
            let mut r = output::table(&["n_power", "value"], &rows);
            r.pretty = rows.iter().map(|row| format!("N^{}: {}", row[0], row[1])).collect::<Vec<_>>().join("\n");
            Ok(r)
        }
        Eval::Numeric(_) => Err(Error::Invalid("numeric evaluation needs N".into())),
    }
}

fn moment(ctx: &Ctx, a: &MomentArgs) -> wishart::Result<Outcome> {
    let target = input::eval_target(a.eval.eval.as_deref(), a.eval.dim.as_deref())?;
    let n = a.n;
    if a.centered && a.kind != MomentKind::Pn {
        return Err(Error::Invalid("--centered applies to --kind pn only".into()));
    }
    let need_m = || -> wishart::Result<usize> { a.second.map(|m| m as usize).ok_or_else(|| Error::Invalid("this moment needs m".into())) };
    let coeff = match a.coeff {
        CoeffArg::Falling => SampleCoefficient::Falling,
        CoeffArg::Binomial => SampleCoefficient::Binomial,
    };
    let caps = &ctx.caps;
    match a.kind {
        MomentKind::M => {
            let m = need_m()?;
            let t = moment_class(n, m, MomentClass::QAll, true, caps)?;
            ctx.done(format!("M({n},{m})"), Some("wick"), render_poly(&t, &target)?)
        }
        MomentKind::Mcirc => {
            let m = need_m()?;
            let t = moment_class(n, m, MomentClass::PAll, false, caps)?;
            ctx.done(format!("M_circ({n},{m})"), Some("wick"), render_poly(&t, &target)?)
        }
        MomentKind::Mplus => {
            if a.second.is_some() {
                return Err(Error::Invalid("M+ takes only n".into()));
            }
            ctx.done(format!("M_plus({})", 2 * n), Some("recursion"), render_poly(&moments::m_plus(n)?, &target)?)
        }
        MomentKind::Hn => {
            let e = moments::hn_moment(n, coeff, caps)?;
            ctx.done(format!("E(H_N^{n})"), Some("wick"), render_expansion(&e, a.second, &target)?)
        }
        MomentKind::Pn => {
            let e = moments::pn_moment(n, a.centered, coeff, caps)?;
            let name = if a.centered { format!("E((P_N - P)^{n})") } else { format!("E(P_N^{n})") };
            ctx.done(name, Some("wick"), render_expansion(&e, a.second, &target)?)
        }
    }
}

fn iso(ctx: &Ctx, kind: IsoKind, arg: &str, dim: Option<usize>) -> wishart::Result<Outcome> {
    let partition =
        || -> wishart::Result<SetPartition> { serde_json::from_str(arg).map_err(|e| Error::Invalid(format!("partition {arg}: {e}"))) };
    let power = || -> wishart::Result<usize> { arg.parse().map_err(|_| Error::Invalid(format!("expected a power, got {arg}"))) };
    let k = match kind {
        IsoKind::MPiCirc => Isotropic::MPiCirc(partition()?),
        IsoKind::MPiCentered => Isotropic::MPiCentered(partition()?),
        IsoKind::XMinusIPower => Isotropic::XMinusIPower(power()?),
        IsoKind::MPlusI => Isotropic::MPlusI(power()?),
        IsoKind::Rank1Power => Isotropic::Rank1Power(power()?),
    };
    let r = dim.map(|d| Rational::from_integer(d.into()));
    let body = match (moments::isotropic(&k)?, r) {
        (IsoValue::Laurent(l), None) => output::laurent(&l),
        (IsoValue::Laurent(l), Some(r)) => output::rational(&l.eval(&r)),
        (IsoValue::Poly(t), None) => output::poly(&t),
        (IsoValue::Poly(t), Some(r)) => output::rational(&t.eval_isotropic().eval(&r)),
    };
    ctx.done(format!("{kind:?}({arg})"), None, body)
}

fn verify_suite(ctx: &Ctx, suite: Suite, n: Option<usize>) -> wishart::Result<Outcome> {
    use verify::*;
    let checks: Vec<(String, Check)> = match suite {
        Suite::All => CRITERIA.iter().enumerate().map(|(i, (name, f))| (format!("criterion {} {name}", i + 1), guarded(f))).collect(),
        Suite::Golden => vec![("golden".into(), guarded(criterion_1))],
        Suite::Routes => vec![("routes".into(), guarded(criterion_2))],
        Suite::Counting => vec![("counting".into(), guarded(criterion_3))],
        Suite::Isotropic => vec![("isotropic".into(), guarded(criterion_4))],
        Suite::Limits => vec![("limits".into(), guarded(criterion_5))],
        Suite::MonteCarlo => vec![("monte carlo".into(), guarded(criterion_6))],
        Suite::Bounds => vec![("bounds".into(), guarded(criterion_7))],
        Suite::Coverage => vec![("coverage".into(), guarded(criterion_8))],
        Suite::SigmaRoutes => vec![("sigma routes".into(), guarded(|| sigma_routes(n.unwrap_or(7))))],
        Suite::SigmaCircRoutes => vec![("sigma_circ routes".into(), guarded(|| sigma_circ_routes(n.unwrap_or(7))))],
        Suite::MplusRoutes => vec![("M+ routes".into(), guarded(|| mplus_routes(n.unwrap_or(3))))],
        Suite::AlphaRoutes => vec![("alpha routes".into(), guarded(|| alpha_routes(n.unwrap_or(8))))],
        Suite::NcRoutes => vec![("non-crossing routes".into(), guarded(|| nc_routes(n.unwrap_or(8))))],
        Suite::Kreweras => vec![("kreweras".into(), guarded(|| kreweras_suite(n.unwrap_or(8))))],
        Suite::WickEngines => vec![("wick engines".into(), guarded(|| wick_engines(n.unwrap_or(3))))],
    };
    let passed = checks.iter().all(|(_, c)| c.is_ok());
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|(name, c)| match c {
            Ok(msg) => vec![name.clone(), "PASS".into(), msg.clone()],
            Err(msg) => vec![name.clone(), "FAIL".into(), msg.clone()],
        })
        .collect();
    let mut body = output::table(&["check", "status", "detail"], &rows);
    body.pretty = rows.iter().map(|r| format!("{} {}: {}", r[1], r[0], r[2])).collect::<Vec<_>>().join("\n");
    Ok(Outcome { provenance: ctx.provenance(format!("verify {suite:?}"), Some("cross-route")), body, passed })
}

fn covariance(c: &CovArgs) -> wishart::Result<SymMatrix<f64>> {
    input::sym_matrix(&c.cov, c.dim)
}

fn sample(ctx: &Ctx, a: &SampleArgs) -> wishart::Result<Outcome> {
    let p = covariance(&a.cov)?;
    let rng = RngSpec::new(ctx.seed, a.cov.stream);
    let variant = match a.variant {
        VariantArg::Plain => Variant::Plain,
        VariantArg::MeanAdjusted => Variant::MeanAdjusted,
    };
    if a.draw {
        let pn = sampling::sample_wishart(&p, a.cov.samples, variant, &rng)?;
        return ctx.done(format!("P_N draw, N = {}", a.cov.samples), Some("cholesky"), output::matrix(pn.matrix()));
    }
    if variant != Variant::Plain {
        return Err(Error::Invalid("moment estimates use the plain variant".into()));
    }
    let target = match a.target {
        TargetArg::PnPower => Target::PnPower,
        TargetArg::CenteredPower => Target::CenteredPower,
        TargetArg::HnPower => Target::HnPower,
        TargetArg::HPower => Target::HPower,
    };
    let est = sampling::empirical_moment(&p, a.cov.samples, a.power, target, a.trials, &rng)?;
    let r = p.dim();
    let mut rows = Vec::new();
    for i in 0..r {
        for j in 0..r {
            rows.push(vec![i.to_string(), j.to_string(), est.mean[(i, j)].to_string(), est.stderr[(i, j)].to_string()]);
        }
    }
    let mut body = output::table(&["i", "j", "mean", "stderr"], &rows);
    body.json = serde_json::to_value(&est).expect("serializable");
    body.pretty = format!(
        "mean over {} trials:\n{}\nstandard error:\n{}",
        est.trials,
        output::matrix(est.mean.matrix()).pretty,
        output::matrix(est.stderr.matrix()).pretty
    );
    ctx.done(format!("{target:?}^{} at N = {}", a.power, a.cov.samples), Some("monte carlo"), body)
}

fn spectra(ctx: &Ctx, a: &SpectraArgs) -> wishart::Result<Outcome> {
    let p = covariance(&a.cov)?;
    let spectrum = match a.spectrum {
        SpectrumArg::Covariance => Spectrum::Covariance,
        SpectrumArg::Fluctuation => Spectrum::Fluctuation,
    };
    let h = sampling::spectral_histogram(&p, a.cov.samples, a.trials, a.bins, spectrum, &RngSpec::new(ctx.seed, a.cov.stream))?;
    let rows: Vec<Vec<String>> = h
        .rows
        .iter()
        .map(|r| {
            vec![
                format!("{:.4}", r.bin_lo),
                format!("{:.4}", r.bin_hi),
                format!("{:.5}", r.empirical),
                format!("{:.5}", r.mp_density),
                format!("{:.5}", r.sc_density),
            ]
        })
        .collect();
    let mut body = output::table(&["bin_lo", "bin_hi", "empirical", "mp_density", "sc_density"], &rows);
    body.pretty = format!("eigenvalues: {}, near zero: {:.4}, rho: {}\n{}", h.count, h.near_zero, h.rho, body.pretty);
    body.csv = h.to_csv();
    body.json = serde_json::to_value(&h).expect("serializable");
    ctx.done(format!("{spectrum:?} spectrum, N = {}", a.cov.samples), Some("monte carlo"), body)
}

fn reports(rs: &[BoundReport]) -> (Rendered, bool) {
    let rows: Vec<Vec<String>> = rs
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                if r.holds(bounds::SLACK) { "holds".into() } else { "VIOLATED".into() },
                format!("{:.6e}", r.bound),
                format!("{:.6e}", r.empirical),
                format!("{:.6e}", r.margin),
            ]
        })
        .collect();
    let mut body = output::table(&["name", "status", "bound", "empirical", "margin"], &rows);
    body.json = serde_json::to_value(rs).expect("serializable");
    (body, rs.iter().all(|r| r.holds(bounds::SLACK)))
}

fn bounds_cmd(ctx: &Ctx, cmd: &BoundsCommand) -> wishart::Result<Outcome> {
    let need = |x: Option<usize>, what: &str| x.ok_or_else(|| Error::Invalid(format!("{what} is required")));
    match cmd {
        BoundsCommand::Threshold { kind, delta, z, inputs } => {
            let k: ThresholdKind = kind.parse()?;
            let args = ThresholdArgs {
                a: input::optional_matrix(inputs.a.as_deref(), inputs.dim)?,
                p: input::optional_matrix(inputs.p.as_deref(), inputs.dim)?,
                n_samples: inputs.samples,
                delta: *delta,
                z: *z,
            };
            let v = bounds::concentration_threshold(k, &args)?;
            ctx.done(format!("threshold {k:?}, delta = {delta}"), None, output::float(v))
        }
        BoundsCommand::Laplace { kind, t, terms, inputs } => {
            let k: LaplaceKind = kind.parse()?;
            let args = LaplaceArgs {
                t: *t,
                p: input::optional_matrix(inputs.p.as_deref(), inputs.dim)?,
                a: input::optional_matrix(inputs.a.as_deref(), inputs.dim)?,
                dim: inputs.dim,
                n_samples: inputs.samples,
                terms: *terms,
            };
            let v = bounds::laplace(k, &args)?;
            let json = serde_json::to_value(&v).expect("serializable");
            let body = match &v {
                LaplaceValue::Scalar(x) => output::float(*x),
                LaplaceValue::Matrix(m) => output::matrix(m.matrix()),
                LaplaceValue::Series { value, remainder } => {
                    let mut r = output::matrix(value.matrix());
                    r.pretty = format!("{}\nremainder ≤ {remainder:.3e}", r.pretty);
                    r
                }
                LaplaceValue::Truncated { value, tail } => Rendered {
                    json: json.clone(),
                    pretty: format!("{value} (tail ≤ {tail:.3e})"),
                    csv: format!("value,tail\n{value},{tail}"),
                },
            };
            let body = if matches!(v, LaplaceValue::Scalar(_)) { body } else { Rendered { json, ..body } };
            ctx.done(format!("laplace {k:?}, t = {t}"), Some("series"), body)
        }
        BoundsCommand::Legendre { kind, x } => {
            let k: LegendreKind = kind.parse()?;
            ctx.done(format!("legendre {k:?}"), None, output::float(bounds::legendre(k, *x)?))
        }
        BoundsCommand::Check { check, inputs, power, t, x, y } => {
            let p = input::sym_matrix(inputs.p.as_deref().unwrap_or("I"), inputs.dim)?;
            let a = || input::sym_matrix(inputs.a.as_deref().unwrap_or("I"), Some(p.dim()));
            let t = || t.ok_or_else(|| Error::Invalid("--t is required".into()));
            let rs = match check {
                CheckKind::FluctuationMoment => {
                    bounds::fluctuation_moment_check(&p, need(*power, "--power")?, need(inputs.samples, "--samples")?, &ctx.caps)?
                }
                CheckKind::GaussianMoment => vec![bounds::gaussian_moment_check(&p, need(*power, "--power")?, &ctx.caps)?],
                CheckKind::MatrixLaplace => bounds::matrix_laplace_check(&p, t()?)?,
                CheckKind::SubGaussian => bounds::sub_gaussian_check(&a()?, &p, need(inputs.samples, "--samples")?, t()?)?,
                CheckKind::TraceMomentGap => {
                    let a = a()?;
                    let (alpha, beta) = bounds::default_alpha_beta(&a, &p)?;
                    bounds::trace_moment_gap_check(&a, &p, need(inputs.samples, "--samples")?, need(*power, "--power")?, alpha, beta)?
                }
                CheckKind::Rank1 => {
                    let x = input::vector(x.as_deref().ok_or_else(|| Error::Invalid("--x is required".into()))?)?;
                    let y = input::vector(y.as_deref().ok_or_else(|| Error::Invalid("--y is required".into()))?)?;
                    bounds::rank1_check(&x, &y, &p, need(*power, "--power")?)?
                }
            };
            let (body, ok) = reports(&rs);
            Ok(Outcome { provenance: ctx.provenance(format!("check {check:?}"), None), body, passed: ok })
        }
        BoundsCommand::Sweep { kind, delta, samples, dim, z } => {
            let k: ThresholdKind = kind.parse()?;
            let mut rows = Vec::new();
            for &r in dim {
                let id = SymMatrix::<f64>::identity(r);
                for &n in samples {
                    for &d in delta {
                        let args = ThresholdArgs { a: Some(id.clone()), p: Some(id.clone()), n_samples: Some(n), delta: d, z: *z };
                        let (value, status) = match bounds::concentration_threshold(k, &args) {
                            Ok(v) => (v.to_string(), "ok".to_string()),
                            Err(Error::Hypothesis(h)) => (String::new(), format!("refused: {h}")),
                            Err(e) => return Err(e),
                        };
                        rows.push(vec![d.to_string(), n.to_string(), r.to_string(), value, status]);
                    }
                }
            }
            ctx.done(format!("threshold sweep {k:?}"), None, output::table(&["delta", "samples", "dim", "threshold", "status"], &rows))
        }
    }
}

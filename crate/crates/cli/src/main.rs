//! `hardy-lab`: reproducible experiment reports for composition operators on
//! weighted Hardy spaces.
//!
//! Exit status: 0 on success, 1 when a check fails or a computation errors,
//! 2 on usage errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hardy_lab::asymptotics::{
    calibrate_delta_star, calibrate_k0, calibrate_k_laguerre, eset_scan, fresnel_bracket,
    fresnel_constant, singular_inner_oscillatory, LAGUERRE_CALIBRATION_N, SP_AS, SP_CALIBRATION_N,
};
use hardy_lab::coeff::{
    column_circle_fft, column_explicit, column_series_power, default_truncation, write_cache,
    CoeffColumn,
};
use hardy_lab::constants::{Constants, Provenance};
use hardy_lab::operator::{assemble, block_decompose, column_norm_ratio, op_norm, RESTART_SEED};
use hardy_lab::symbols::{rho_exponent, SymbolSpec};
use hardy_lab::weights::{predicate_report, WeightSequence};
use hardy_lab::LabError;
use hardy_lab_suite::{gp_sequence, gp_target, run_all, GP_SIZES};

#[derive(Parser)]
#[command(
    name = "hardy-lab",
    version,
    about = "Composition operators on weighted Hardy spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Taylor coefficients of φⁿ as CSV (m, re, im).
    Coeffs(CoeffsArgs),
    /// Weight sequence diagnostics.
    #[command(subcommand)]
    Weights(WeightsCommand),
    /// Norm of the N×N section of the weighted operator matrix.
    Norm(NormArgs),
    /// Block split D, R, S, U of a section.
    Blocks(BlocksArgs),
    /// Column norm ratios Σ_m |a_{m,n}|² β_m / β_n over a range of n, as CSV.
    RatioSweep(SweepArgs),
    /// E-set scan of J_n for a Möbius symbol.
    LemmaScan(LemmaArgs),
    /// Tail-bracketed Fresnel integral.
    Fresnel(FresnelArgs),
    /// Coefficients of a singular inner function's powers.
    Inner(InnerArgs),
    /// Reproduce a closed-form comparison.
    #[command(subcommand)]
    Reproduce(ReproduceCommand),
    /// Run the acceptance suite.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Recompute the calibrated constants.
    Calibrate(OutArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Explicit,
    Series,
    Fft,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CoeffsArgs {
    #[arg(long)]
    symbol: String,
    /// Power n.
    #[arg(long)]
    n: usize,
    /// Truncation: coefficients m = 0..=N (default: enough for a 1e-12 tail).
    #[arg(long = "N")]
    truncation: Option<usize>,
    #[arg(long, value_enum, default_value = "explicit")]
    method: MethodArg,
    /// Also write the binary column cache here.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Subcommand)]
enum WeightsCommand {
    /// Predicate profiles over a horizon, as JSON.
    Check {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        horizon: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct NormArgs {
    #[arg(long)]
    symbol: String,
    #[arg(long, default_value = "one")]
    weight: String,
    #[arg(long = "N")]
    size: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BlocksArgs {
    #[arg(long)]
    symbol: String,
    #[arg(long, default_value = "one")]
    weight: String,
    #[arg(long = "N")]
    size: usize,
    /// Block base (default ⌈2/ρ⌉ at α = 1 for Möbius symbols).
    #[arg(long)]
    base: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    symbol: String,
    #[arg(long)]
    weight: String,
    #[arg(long)]
    from: usize,
    #[arg(long)]
    to: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Weight horizon (default: 16384).
    #[arg(long, default_value_t = 1 << 14)]
    horizon: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    n: usize,
    /// Threshold δ (default: the calibrated δ*).
    #[arg(long)]
    delta: Option<f64>,
    /// Include the E-set indices in the report.
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct FresnelArgs {
    #[arg(long = "T", default_value_t = 100.0)]
    t: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct InnerArgs {
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    n: usize,
    #[arg(long = "N", default_value_t = 4096)]
    truncation: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Cross-check coefficient m against the oscillatory-integral route.
    #[arg(long)]
    check_m: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Subcommand)]
enum ReproduceCommand {
    /// Section norms of C_{T_a} on β_n = (n+1)^{−ν} against ((1+a)/(1−a))^{(ν+1)/2}.
    Gp {
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        /// Largest section size (sizes double from 128).
        #[arg(long = "N", default_value_t = 4096)]
        size: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Every acceptance criterion; exits 1 when any fails.
    All {
        #[command(flatten)]
        out: OutArgs,
    },
}

enum Failure {
    Usage(String),
    Check(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<LabError>() {
            Some(l) if is_usage(l) => Failure::Usage(format!("{e:#}")),
            _ => Failure::Runtime(e),
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        if is_usage(&e) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

fn is_usage(e: &LabError) -> bool {
    matches!(
        e,
        LabError::UnknownFamily(_)
            | LabError::UnknownSymbol(_)
            | LabError::InvalidParameter { .. }
            | LabError::HorizonOverflow { .. }
            | LabError::HorizonMismatch { .. }
    )
}

type Outcome = Result<(), Failure>;

fn usage(flag: &str, reason: &str) -> Failure {
    Failure::Usage(format!("--{flag}: {reason}"))
}

fn emit(out: &OutArgs, text: &str) -> anyhow::Result<()> {
    match &out.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json(out: &OutArgs, value: &Value) -> anyhow::Result<()> {
    emit(out, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn csv_column(col: &CoeffColumn) -> String {
    let mut s = String::from("m,re,im\n");
    for (m, c) in col.entries.iter().enumerate() {
        s.push_str(&format!("{m},{:.16e},{:.16e}\n", c.re, c.im));
    }
    s
}

fn symbol(s: &str) -> Result<SymbolSpec, Failure> {
    s.parse::<SymbolSpec>()
        .map_err(|e| usage("symbol", &e.to_string()))
}

fn weight(s: &str, horizon: usize) -> Result<WeightSequence, Failure> {
    WeightSequence::parse(s, horizon).map_err(|e| usage("weight", &e.to_string()))
}

fn positive_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(usage("tol", "must be positive"))
    }
}

fn coeffs(args: &CoeffsArgs) -> Outcome {
    let phi = symbol(&args.symbol)?;
    let m = args
        .truncation
        .unwrap_or_else(|| default_truncation(&phi, args.n));
    let col = match args.method {
        MethodArg::Explicit => column_explicit(&phi, args.n, m)?,
        MethodArg::Series => column_series_power(&phi, args.n, m)?,
        MethodArg::Fft => column_circle_fft(&phi, args.n, m, 1.0, 4 * (m + 1).next_power_of_two())?,
    };
    if let Some(p) = &args.cache {
        write_cache(p, &col)?;
    }
    emit(&args.out, &csv_column(&col))?;
    Ok(())
}

fn norm(args: &NormArgs) -> Outcome {
    positive_tol(args.tol)?;
    if args.size == 0 {
        return Err(usage("N", "must be positive"));
    }
    let phi = symbol(&args.symbol)?;
    let beta = weight(&args.weight, args.size.max(2))?;
    let t = assemble(&phi, &beta, args.size)?;
    let e = op_norm(&t, args.tol)?;
    emit_json(
        &args.out,
        &json!({
            "symbol": phi.label(), "weight": beta.rule().label(),
            "value": e.value, "N": e.n, "iterations": e.iterations, "residual": e.residual,
            "lower_bound_only": e.lower_bound_only, "trunc_error": t.trunc_error, "seed": RESTART_SEED,
        }),
    )?;
    Ok(())
}

fn blocks(args: &BlocksArgs) -> Outcome {
    positive_tol(args.tol)?;
    let phi = symbol(&args.symbol)?;
    let base = match (args.base, &phi) {
        (Some(b), _) => b,
        (None, SymbolSpec::Mobius { a }) => {
            (2.0 / rho_exponent(a.norm(), (-1f64).exp())?).ceil() as usize
        }
        (None, _) => return Err(usage("base", "required for non-Möbius symbols")),
    };
    if base < 2 || base > args.size {
        return Err(usage("base", "must lie in [2, N]"));
    }
    let beta = weight(&args.weight, args.size.max(2))?;
    let t = assemble(&phi, &beta, args.size)?;
    let rep = block_decompose(&t, base, args.tol)?;
    emit_json(
        &args.out,
        &serde_json::to_value(&rep).context("serializing block report")?,
    )?;
    let ok = [&rep.unweighted, &rep.weighted].iter().all(|b| {
        let tol = 1e-9 * b.a + t.trunc_error;
        b.partition_exact && b.d <= b.a + tol && b.r <= b.a + tol
    });
    if ok {
        Ok(())
    } else {
        Err(Failure::Check(
            "a block norm exceeds the section norm".into(),
        ))
    }
}

fn sweep(args: &SweepArgs) -> Outcome {
    if args.step == 0 {
        return Err(usage("step", "must be positive"));
    }
    if args.from > args.to {
        return Err(usage("from", "must not exceed --to"));
    }
    let phi = symbol(&args.symbol)?;
    let beta = weight(&args.weight, args.horizon)?;
    let mut s = String::from("n,ratio,tail_bound\n");
    for n in (args.from..=args.to).step_by(args.step) {
        let r = column_norm_ratio(&phi, &beta, n)?;
        s.push_str(&format!("{n},{:.16e},{:.16e}\n", r.ratio, r.tail_bound));
    }
    emit(&args.out, &s)?;
    Ok(())
}

fn lemma(args: &LemmaArgs) -> Outcome {
    if !(args.a > 0.0 && args.a < 1.0) {
        return Err(usage("a", "must lie in (0, 1)"));
    }
    let delta = match args.delta {
        Some(d) => d,
        None => Constants::load()?.delta_star,
    };
    let mut rep =
        serde_json::to_value(eset_scan(args.a, args.n, delta)?).context("serializing scan")?;
    if !args.full {
        if let Some(obj) = rep.as_object_mut() {
            obj.remove("e");
        }
    }
    emit_json(&args.out, &rep)?;
    Ok(())
}

fn fresnel(args: &FresnelArgs) -> Outcome {
    positive_tol(args.tol)?;
    let b = fresnel_bracket(args.t, args.tol)?;
    let c = fresnel_constant();
    emit_json(
        &args.out,
        &json!({
            "bracket": b, "exact": [c.re, c.im],
            "error": (b.value() - c).norm(), "brackets_exact": b.brackets(c),
        }),
    )?;
    Ok(())
}

fn inner(args: &InnerArgs) -> Outcome {
    if !(args.a > 0.0 && args.a.is_finite()) {
        return Err(usage("a", "must be positive"));
    }
    let phi = SymbolSpec::SingularInner { a: args.a };
    let col = column_explicit(&phi, args.n, args.truncation)?;
    match args.format {
        Format::Csv => emit(&args.out, &csv_column(&col))?,
        Format::Json => {
            let check = match args.check_m {
                Some(m) if m <= args.truncation => {
                    if args.a != 1.0 {
                        return Err(usage("check-m", "the oscillatory route is for a = 1"));
                    }
                    let (v, err) = singular_inner_oscillatory(args.n, m, 1e-10)?;
                    json!({"m": m, "laguerre": col.entries[m].re, "oscillatory": [v.re, v.im], "error_bound": err})
                }
                Some(_) => return Err(usage("check-m", "must not exceed --N")),
                None => Value::Null,
            };
            emit_json(
                &args.out,
                &json!({
                    "symbol": col.symbol, "n": col.n, "N": col.truncation(),
                    "norm_sq": col.norm_sq(), "parseval_defect": (col.norm_sq() - 1.0).abs(),
                    "trunc_error": col.trunc_error, "method": col.method.name(), "check": check,
                }),
            )?;
        }
    }
    Ok(())
}

fn gp(a: f64, nu: f64, size: usize, out: &OutArgs) -> Outcome {
    if !(a > 0.0 && a < 1.0) {
        return Err(usage("a", "must lie in (0, 1)"));
    }
    if nu.is_nan() || nu < 0.0 {
        return Err(usage("nu", "must be non-negative"));
    }
    if size < GP_SIZES[0] {
        return Err(usage("N", "must be at least 128"));
    }
    let sizes: Vec<usize> = std::iter::successors(Some(GP_SIZES[0]), |s| Some(s * 2))
        .take_while(|s| *s <= size)
        .collect();
    let target = gp_target(a, nu);
    let seq = gp_sequence(a, nu, &sizes)?;
    let monotone = seq.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-10));
    let below = seq.iter().all(|(_, v, e)| *v <= target + e);
    emit_json(
        out,
        &json!({
            "a": a, "nu": nu, "target": target, "monotone": monotone, "below_target": below,
            "sequence": seq.iter().map(|(n, v, e)| json!({"N": n, "value": v, "fraction": v / target, "trunc_error": e})).collect::<Vec<_>>(),
        }),
    )?;
    if monotone && below {
        Ok(())
    } else {
        Err(Failure::Check(
            "section norms are not monotone lower bounds".into(),
        ))
    }
}

fn report(out: &OutArgs) -> Outcome {
    let constants = Constants::load()?;
    let outcomes = run_all(&constants);
    let mut err = std::io::stderr().lock();
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        writeln!(
            err,
            "{verdict} {:>2} {:<30} {:>7.2}s  {}",
            o.id, o.title, o.seconds, o.summary
        )
        .ok();
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    emit_json(out, &json!({"failed": failed, "criteria": outcomes}))?;
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{failed} acceptance criteria failed"
        )))
    }
}

/// Fresh constants from the three calibration routines.
fn calibrated() -> anyhow::Result<Constants> {
    let a = 0.5;
    let n = 512;
    Ok(Constants {
        a,
        delta_star: calibrate_delta_star(a, n)?,
        k0: calibrate_k0()?,
        k_laguerre: calibrate_k_laguerre(),
        provenance: Provenance {
            delta_star: format!("largest delta with E-set density >= delta on J_n, a = {a}, n = {n}"),
            k0: format!(
                "2 x max residual / (1/(eta lambda2) + eta^4 lambda3), a in {SP_AS:?}, n = {SP_CALIBRATION_N}, five positions in J_n"
            ),
            k_laguerre: format!(
                "2 x max |c_m(n) - M_m(n)| / (sqrt(n) m^(-5/4)), n = {LAGUERRE_CALIBRATION_N}, m in [n/4, 4n]"
            ),
        },
    })
}

fn calibrate(out: &OutArgs) -> Outcome {
    let c = calibrated()?;
    emit(out, &c.to_json()?)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Coeffs(a) => coeffs(&a),
        Command::Weights(WeightsCommand::Check {
            weight: w,
            horizon,
            out,
        }) => {
            let beta = weight(&w, horizon)?;
            let rep = predicate_report(&beta, horizon)?;
            emit_json(
                &out,
                &serde_json::to_value(&rep).context("serializing report")?,
            )?;
            Ok(())
        }
        Command::Norm(a) => norm(&a),
        Command::Blocks(a) => blocks(&a),
        Command::RatioSweep(a) => sweep(&a),
        Command::LemmaScan(a) => lemma(&a),
        Command::Fresnel(a) => fresnel(&a),
        Command::Inner(a) => inner(&a),
        Command::Reproduce(ReproduceCommand::Gp { a, nu, size, out }) => gp(a, nu, size, &out),
        Command::Report(ReportCommand::All { out }) => report(&out),
        Command::Calibrate(out) => calibrate(&out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("see `hardy-lab --help`");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

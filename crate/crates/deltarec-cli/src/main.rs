//! Command-line driver for delta-record experiments.
//!
//! Exit codes: 0 success, 1 an embedded check failed (e.g. an oracle
//! tolerance breach), 2 usage error, 3 domain error (unknown distribution,
//! invalid parameter, wrong regime), 4 I/O failure. Machine output goes to
//! `--out` (or stdout); human-readable summaries go to stderr.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use deltarec::hazard::{cond_moment_oracle, HazardTable, MomentPower};
use deltarec::minima::MinimaSpec;
use deltarec::montecarlo::{run_experiment, trend_check, ExperimentConfig, ExperimentReport};
use deltarec::normalizers::{NormalizerPlan, VariantRequest};
use deltarec::presets;
use deltarec::{DiscreteModel, Error as CoreError, ModelSpec, RngState, Sampler};

mod report_io;

#[derive(Debug)]
enum CliError {
    /// Malformed flag values (exit 2).
    Usage(String),
    /// Semantically invalid request (exit 3).
    Domain(String),
    /// An embedded acceptance-style check failed (exit 1).
    CheckFailed(String),
    /// Filesystem trouble (exit 4).
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Domain(m)
            | CliError::CheckFailed(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io(err) => CliError::Io(err.to_string()),
            CoreError::Json(err) => CliError::Io(err.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "deltarec",
    version,
    about = "Delta-record counting processes: simulation, normalizers and identity checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and report the normalized statistic.
    Simulate(SimulateArgs),
    /// Evaluate centering/scaling sequences on an n-grid.
    Normalizers(NormalizerArgs),
    /// Verify the exact martingale and variance identities.
    OracleCheck(OracleArgs),
    /// Sums of partial minima and Deheuvels diagnostics.
    Minima(MinimaArgs),
    /// Run a pinned preset configuration.
    Preset(PresetArgs),
}

#[derive(Args)]
struct DistArg {
    /// Model, e.g. geometric:p=0.5 | negbinomial:a=2,p=0.5 | zeta:a=2 |
    /// poisson:lambda=1 | table:FILE | rates:FILE
    #[arg(long)]
    dist: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    dist: DistArg,
    /// Record shift; must be nonzero for normalizer-backed runs.
    #[arg(long, allow_hyphen_values = true)]
    delta: i32,
    /// Comma-separated stream lengths, e.g. 1e3,1e4,1e5,1e6.
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 200)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// thm31a | thm31b | thm41 | cor-simplified | poisson-special
    #[arg(long)]
    variant: String,
    /// Hazard-table depth override.
    #[arg(long)]
    depth: Option<i64>,
    /// Keep per-replication raw counts in the report.
    #[arg(long, default_value_t = false)]
    keep_counts: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long, default_value = "json")]
    format: String,
    /// Write replication 0's checkpoint trajectory (n, M, N, residual, V) as CSV.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Write raw per-replication counts as CSV, one column per n
    /// (requires --keep-counts).
    #[arg(long)]
    counts_out: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizerArgs {
    #[command(flatten)]
    dist: DistArg,
    #[arg(long, allow_hyphen_values = true)]
    delta: i32,
    #[arg(long)]
    n: String,
    /// Defaults to the simplified corollary normalizers.
    #[arg(long, default_value = "cor-simplified")]
    variant: String,
    #[arg(long)]
    depth: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    dist: DistArg,
    #[arg(long, allow_hyphen_values = true)]
    delta: i32,
    /// Check conditional moments for m = -1..=m_max.
    #[arg(long, default_value_t = 30)]
    m_max: i64,
    /// Tolerance for the identity checks.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long)]
    depth: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinimaArgs {
    #[command(flatten)]
    dist: DistArg,
    /// Stream lengths for the S_n / H(log n) ratio table.
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 100)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// z-sequence: survival | shifted:K
    #[arg(long, default_value = "survival")]
    z: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PresetArgs {
    /// Preset name; use --list to enumerate.
    name: Option<String>,
    #[arg(long, default_value_t = false)]
    list: bool,
    /// Scale the preset down (smoke runs): cap the grid at this n.
    #[arg(long)]
    max_n: Option<u64>,
    /// Scale the preset down: override the replication count.
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let result = match cli.cmd {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Normalizers(args) => cmd_normalizers(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::Minima(args) => cmd_minima(args),
        Command::Preset(args) => cmd_preset(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deltarec: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

// ---------------------------------------------------------------------------
// Flag parsing helpers
// ---------------------------------------------------------------------------

fn parse_kv(args: &str) -> Result<Vec<(&str, f64)>, CliError> {
    let mut out = Vec::new();
    for part in args.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("expected key=value in distribution spec, got {part:?}"))
        })?;
        let value: f64 = v
            .parse()
            .map_err(|_| CliError::Usage(format!("malformed number {v:?} in distribution spec")))?;
        out.push((k, value));
    }
    Ok(out)
}

fn lookup(kv: &[(&str, f64)], key: &str) -> Result<f64, CliError> {
    kv.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| CliError::Domain(format!("distribution spec missing {key}=")))
}

fn parse_dist(spec: &str) -> Result<DiscreteModel, CliError> {
    let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match family {
        "geometric" => {
            let kv = parse_kv(rest)?;
            Ok(DiscreteModel::geometric(lookup(&kv, "p")?)?)
        }
        "negbinomial" => {
            let kv = parse_kv(rest)?;
            Ok(DiscreteModel::negative_binomial(
                lookup(&kv, "a")?,
                lookup(&kv, "p")?,
            )?)
        }
        "zeta" => {
            let kv = parse_kv(rest)?;
            Ok(DiscreteModel::zeta(lookup(&kv, "a")?)?)
        }
        "poisson" => {
            let kv = parse_kv(rest)?;
            Ok(DiscreteModel::poisson(lookup(&kv, "lambda")?)?)
        }
        "table" | "rates" => {
            if rest.is_empty() {
                return Err(CliError::Usage(format!("{family}: expects a file path")));
            }
            let model = deltarec::load_tabulated_csv(std::path::Path::new(rest))
                .map_err(|e| match e {
                    CoreError::Io(err) => CliError::Io(format!("{rest}: {err}")),
                    other => CliError::Domain(other.to_string()),
                })?;
            let ok = matches!(
                (family, model.spec()),
                ("table", ModelSpec::TabulatedPmf { .. })
                    | ("rates", ModelSpec::TabulatedRates { .. })
            );
            if !ok {
                return Err(CliError::Domain(format!(
                    "{rest} declares a different kind than the {family}: prefix"
                )));
            }
            Ok(model)
        }
        other => Err(CliError::Domain(format!("unknown distribution {other:?}"))),
    }
}

fn parse_n_list(text: &str) -> Result<Vec<u64>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("malformed stream length {part:?}")))?;
        if !(v >= 1.0) || v > 9e15 {
            return Err(CliError::Domain(format!("stream length {part} out of range")));
        }
        out.push(v.round() as u64);
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty n list".into()));
    }
    Ok(out)
}

fn parse_variant(text: &str, delta: i32) -> Result<VariantRequest, CliError> {
    let v = match text {
        "thm31a" => VariantRequest::Thm31a,
        "thm31b" => VariantRequest::Thm31b,
        "thm41" => VariantRequest::Thm41,
        "cor-simplified" => VariantRequest::CorSimplified,
        "poisson-special" => VariantRequest::PoissonSpecial,
        other => return Err(CliError::Usage(format!("unknown variant {other:?}"))),
    };
    if delta == 0 {
        return Err(CliError::Domain(
            "delta = 0 has no delta-hazard normalizer theory; pick a nonzero delta".into(),
        ));
    }
    Ok(v)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn build_config(args: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let model = parse_dist(&args.dist.dist)?;
    let variant = parse_variant(&args.variant, args.delta)?;
    Ok(ExperimentConfig {
        model,
        delta: args.delta,
        variant,
        n_grid: parse_n_list(&args.n)?,
        reps: args.reps,
        master_seed: args.seed,
        depth: args.depth,
        keep_counts: args.keep_counts || args.counts_out.is_some(),
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = build_config(&args)?;
    let report = run_experiment(&config)?;
    summarize_report(&report);
    if let Some(path) = &args.trajectory {
        write_trajectory(&config, path)?;
    }
    if let Some(path) = &args.counts_out {
        let csv = report_io::counts_csv(&report)
            .ok_or_else(|| CliError::Domain("no counts kept in the report".into()))?;
        std::fs::write(path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    emit_report(&report, &args.format, &args.out)
}

fn emit_report(
    report: &ExperimentReport,
    format: &str,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let content = match format {
        "json" => report.to_json_string()?,
        "csv" => report_io::summary_csv(report),
        other => return Err(CliError::Usage(format!("unknown format {other:?}"))),
    };
    write_output(out, &content)
}

fn summarize_report(report: &ExperimentReport) {
    for s in &report.per_n {
        eprintln!(
            "n={:<9} mean(T)={:+.4} var(T)={:.4} KS={:.4} compensator={:.4}",
            s.n, s.mean, s.variance, s.ks, s.compensator_mean
        );
    }
    if report.per_n.len() >= 3 {
        if let Ok(trend) = trend_check(report) {
            eprintln!(
                "trend: {} (KS {}; variance {})",
                if trend.pass { "pass" } else { "fail" },
                if trend.ks_pass { "ok" } else { "worsening" },
                if trend.variance_pass { "ok" } else { "worsening" },
            );
        }
    }
}

fn write_trajectory(config: &ExperimentConfig, path: &PathBuf) -> Result<(), CliError> {
    let table = match config.depth {
        Some(depth) => HazardTable::build_with_depth(&config.model, config.delta, depth)?,
        None => HazardTable::build(&config.model, config.delta)?,
    };
    let sampler = Sampler::new(&config.model);
    let mut rng = RngState::for_stream(config.master_seed, 0);
    let max_n = *config.n_grid.last().expect("validated non-empty");
    let snaps = deltarec::counter::run_stream(&table, &sampler, max_n, &mut rng, &config.n_grid)?;
    let mut csv = String::from("n,max,count,residual,cond_var\n");
    for s in &snaps {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            s.n,
            s.max_level,
            s.record_count,
            s.martingale_residual(),
            s.cond_var_sum
        ));
    }
    std::fs::write(path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn cmd_normalizers(args: NormalizerArgs) -> Result<(), CliError> {
    let model = parse_dist(&args.dist.dist)?;
    let variant = parse_variant(&args.variant, args.delta)?;
    let n_grid = parse_n_list(&args.n)?;
    let table = match args.depth {
        Some(depth) => HazardTable::build_with_depth(&model, args.delta, depth)?,
        None => HazardTable::build(&model, args.delta)?,
    };
    let plan = NormalizerPlan::new(variant, table)?;
    let summary = plan.summary(&n_grid)?;
    for row in &summary.rows {
        eprintln!(
            "n={:<12} center={:.6} scale={:.6} (scale^2={:.6})",
            row.n,
            row.center,
            row.scale,
            row.scale * row.scale
        );
    }
    write_output(
        &args.out,
        &serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?,
    )
}

fn cmd_oracle_check(args: OracleArgs) -> Result<(), CliError> {
    if args.delta == 0 {
        return Err(CliError::Domain(
            "delta = 0 has no delta-hazard identities to check".into(),
        ));
    }
    let model = parse_dist(&args.dist.dist)?;
    let table = match args.depth {
        Some(depth) => HazardTable::build_with_depth(&model, args.delta, depth)?,
        None => HazardTable::build(&model, args.delta)?,
    };
    let mut max_martingale = 0.0f64;
    let mut max_variance = 0.0f64;
    for m in -1..=args.m_max.min(table.depth()) {
        let p1 = cond_moment_oracle(&table, m, MomentPower::First);
        max_martingale = max_martingale.max((p1 - model.survival(m + args.delta as i64)).abs());
        let p2 = cond_moment_oracle(&table, m, MomentPower::Second);
        max_variance = max_variance.max((p2 - table.cond_var_increment(m)).abs());
    }
    let mut max_display = 0.0f64;
    if args.delta > 0 {
        for m in -1..=args.m_max.min(table.depth()) {
            let a = table.cond_var_increment(m);
            let b = table.cond_var_display(m)?;
            max_display = max_display.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    let report = serde_json::json!({
        "model": model,
        "delta": args.delta,
        "m_max": args.m_max,
        "tolerance": args.tolerance,
        "max_abs_error": {
            "martingale_identity": max_martingale,
            "variance_identity": max_variance,
            "rate_route_cross_check": table.eq_cross_check(),
            "display_vs_table_route": max_display,
        },
        "tail_bound": table.tail_bound(),
    });
    eprintln!(
        "martingale {:.3e}, variance {:.3e}, rate routes {:.3e}, display {:.3e}",
        max_martingale,
        max_variance,
        table.eq_cross_check(),
        max_display
    );
    write_output(
        &args.out,
        &serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?,
    )?;
    let worst = max_martingale
        .max(max_variance)
        .max(table.eq_cross_check())
        .max(max_display);
    if worst > args.tolerance {
        return Err(CliError::CheckFailed(format!(
            "identity error {worst:.3e} exceeds tolerance {:.3e}",
            args.tolerance
        )));
    }
    Ok(())
}

fn cmd_minima(args: MinimaArgs) -> Result<(), CliError> {
    let model = parse_dist(&args.dist.dist)?;
    let spec = match args.z.as_str() {
        "survival" => MinimaSpec::survival(model),
        other => match other.split_once(':') {
            Some(("shifted", k)) => {
                let shift: i32 = k
                    .parse()
                    .map_err(|_| CliError::Usage(format!("malformed shift {k:?}")))?;
                MinimaSpec::survival_shifted(model, shift)
            }
            _ => return Err(CliError::Usage(format!("unknown z-sequence {other:?}"))),
        },
    };
    let n_grid = parse_n_list(&args.n)?;
    if args.reps == 0 {
        return Err(CliError::Domain("need at least one replication".into()));
    }
    let mut rows = Vec::new();
    for &n in &n_grid {
        let h = spec.h_log(n as f64);
        let mut ratios: Vec<f64> = (0..args.reps)
            .map(|rep| {
                let mut rng = RngState::for_stream(args.seed, rep as u64);
                spec.simulate_partial_minima(n, &mut rng) / h
            })
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
        let median = ratios[ratios.len() / 2];
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        eprintln!("n={n:<12} H(log n)={h:.6} median(S/H)={median:.4} mean(S/H)={mean:.4}");
        rows.push(serde_json::json!({
            "n": n, "h_log_n": h, "median_ratio": median, "mean_ratio": mean,
            "ratios": ratios,
        }));
    }
    let diagnostics = spec
        .deheuvels_diagnostics(*n_grid.last().expect("non-empty"))
        .map_err(CliError::from)?;
    let report = serde_json::json!({
        "rows": rows,
        "diagnostics": diagnostics,
    });
    write_output(
        &args.out,
        &serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?,
    )
}

fn cmd_preset(args: PresetArgs) -> Result<(), CliError> {
    if args.list {
        for name in presets::PRESET_NAMES {
            println!("{name}");
        }
        return Ok(());
    }
    let name = args
        .name
        .as_deref()
        .ok_or_else(|| CliError::Usage("preset name required (or --list)".into()))?;
    let config = match (args.max_n, args.reps) {
        (None, None) => presets::build(name)?,
        (max_n, reps) => {
            let full = presets::build(name)?;
            presets::build_scaled(
                name,
                max_n.unwrap_or(*full.n_grid.last().expect("non-empty")),
                reps.unwrap_or(full.reps),
            )?
        }
    };
    let report = run_experiment(&config)?;
    summarize_report(&report);
    if let Some(frac) = report_io::stabilization_fraction(&report) {
        eprintln!("stabilized replication fraction (last two n): {frac:.4}");
    }
    emit_report(&report, &args.format, &args.out)
}

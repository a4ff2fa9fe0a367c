use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mixsparse::chernoff::{
    chernoff_bound, empirical_misrank, log_chernoff_bound, optimal_theta_agnostic, ChernoffQuery,
};
use mixsparse::decoders::{decode_exhaustive_capped, decode_local_search, DEFAULT_CANDIDATE_CAP};
use mixsparse::harness::{emit_outputs, run_sweep, summarize, DecoderKind, ExperimentConfig, LambdaRule, OutputFormat};
use mixsparse::io::{read_dataset, write_dataset};
use mixsparse::lasso::{kkt_recovery_witness, lambda_schedule, solve_lasso, LassoConfig};
use mixsparse::model::{
    generate_dataset_capped, signed_support_match, snr_report, support_error, DEFAULT_MAX_ENTRIES, DEFAULT_ZERO_TOL,
};
use mixsparse::planner::{
    check_sufficient, price_of_quality, recovery_threshold, sample_frontier, NoiseLayout, RegimeSpec,
    SufficiencyQuery, ThresholdKind, DEFAULT_DELTA, DEFAULT_EPSILON,
};
use mixsparse::rng::{CounterRng, Stream};
use mixsparse::{Error, NoiseProfile, Setting, SparseSignal};

#[derive(Parser)]
#[command(name = "mixsparse", version, about = "Sparse recovery with mixed-quality samples")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset directory.
    Gen(GenArgs),
    /// Thresholds, sufficiency checks, price of quality and frontiers.
    Plan(PlanArgs),
    /// Run a combinatorial decoder on a dataset directory.
    Solve(SolveArgs),
    /// Solve the Lasso and evaluate the recovery witness.
    Lasso(LassoArgs),
    /// Chernoff bounds and Monte Carlo misranking probability.
    Bound(BoundArgs),
    /// Phase-transition sweep from a JSON config.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Agnostic,
    Informed,
}

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Self {
        match s {
            SettingArg::Agnostic => Setting::Agnostic,
            SettingArg::Informed => Setting::Informed,
        }
    }
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    n1: usize,
    #[arg(long)]
    n2: usize,
    #[arg(long)]
    sigma1_sq: f64,
    #[arg(long)]
    sigma2_sq: f64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    s: usize,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Magnitude of the signal entries.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Draw random signs for the signal entries.
    #[arg(long)]
    signed: bool,
    /// Comma-separated 1-based support; random when omitted.
    #[arg(long, value_delimiter = ',')]
    support: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ENTRIES)]
    max_entries: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    s: usize,
    /// Linear regime with s = round(alpha p); overrides --s.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "agnostic")]
    setting: SettingArg,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    sigma1_sq: Option<f64>,
    #[arg(long)]
    sigma2_sq: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Comma-separated n1 values at which to report the minimal n2.
    #[arg(long, value_delimiter = ',')]
    frontier: Option<Vec<usize>>,
    /// Accepted for uniformity; planning is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchArg {
    Exhaustive,
    Local,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "exhaustive")]
    decoder: SearchArg,
    #[arg(long, value_enum, default_value = "agnostic")]
    setting: SettingArg,
    /// Support size; defaults to the size of the stored truth.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LassoArgs {
    #[arg(long)]
    data: PathBuf,
    /// Regularization; the schedule is used when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    /// Signal magnitude assumed by the schedule; defaults to the stored truth.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    zero_tol: f64,
    /// Accepted for uniformity; the solver is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_enum, default_value = "agnostic")]
    setting: SettingArg,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Size of the symmetric difference between the candidate and the truth.
    #[arg(long)]
    m: u64,
    #[arg(long)]
    theta: Option<f64>,
    /// Also report the optimal agnostic theta.
    #[arg(long)]
    optimize: bool,
    /// Monte Carlo trials for the empirical misranking probability (0 skips it).
    #[arg(long, default_value_t = 0)]
    trials: u64,
    /// Support size used by the simulation; defaults to m/2.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    AgnosticScan,
    InformedMle,
    Lasso,
    LocalSearch,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON file with the experiment fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderArg>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    sigma1_sq: Option<f64>,
    #[arg(long)]
    sigma2_sq: Option<f64>,
    /// Grid as `n1:n2` pairs separated by commas.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Fixed Lasso regularization instead of the schedule.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write phase.svg.
    #[arg(long)]
    svg: bool,
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let written = serde_json::to_writer_pretty(&mut out, value)
        .map_err(std::io::Error::from)
        .and_then(|()| writeln!(out));
    match written {
        // A closed pipe (e.g. `| head`) is not an error for the caller.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn one_based(support: &[usize]) -> Vec<usize> {
    support.iter().map(|j| j + 1).collect()
}

fn gen(args: GenArgs) -> Result<()> {
    let noise = NoiseProfile::new(args.noise.n1, args.noise.n2, args.noise.sigma1_sq, args.noise.sigma2_sq)?;
    if args.s > args.p {
        return Err(Error::Config(format!("s = {} exceeds p = {}", args.s, args.p)).into());
    }
    let signal_rng = CounterRng::stream(args.seed, Stream::Signal);
    let support = match args.support {
        Some(one) => {
            if one.len() != args.s || one.iter().any(|&j| j == 0 || j > args.p) {
                return Err(Error::Config(format!("--support needs {} indices in 1..={}", args.s, args.p)).into());
            }
            one.iter().map(|j| j - 1).collect()
        }
        None => signal_rng.subset(args.p, args.s),
    };
    let entries = support.iter().enumerate().map(|(k, &j)| {
        let negative = args.signed && signal_rng.u64_at((1 << 40) + k as u64) >> 63 == 1;
        (j, if negative { -args.rho } else { args.rho })
    });
    let signal = SparseSignal::new(args.p, entries)?;
    let dataset = generate_dataset_capped(&signal, &noise, args.seed, args.max_entries)?;
    let files = write_dataset(&dataset, &args.out)?;
    let snr = snr_report(&signal, &noise).ok();
    print_json(&json!({ "files": files, "snr": snr }))
}

fn plan(args: PlanArgs) -> Result<()> {
    let regime = match args.alpha {
        Some(alpha) => RegimeSpec::linear(args.p, alpha)?,
        None => RegimeSpec::sublinear(args.p, args.s)?,
    };
    let threshold = |kind| recovery_threshold(kind, &regime).ok();
    let mut out = json!({
        "p": regime.p,
        "s": regime.s,
        "n_star": threshold(ThresholdKind::NStar),
        "n_inf": threshold(ThresholdKind::NInf),
        "n_alg": threshold(ThresholdKind::NAlg),
    });
    if let (Some(v1), Some(v2)) = (args.sigma1_sq, args.sigma2_sq) {
        let setting: Setting = args.setting.into();
        out["price_of_quality"] = json!({
            "agnostic": price_of_quality(Setting::Agnostic, v1, v2, regime.s, args.delta)?,
            "informed": price_of_quality(Setting::Informed, v1, v2, regime.s, args.delta)?,
        });
        let query = |n1, n2| SufficiencyQuery {
            setting,
            layout: NoiseLayout::TwoBlock {
                n1,
                n2,
                sigma1_sq: v1,
                sigma2_sq: v2,
            },
            s: regime.s,
            delta: args.delta,
            epsilon: args.epsilon,
            regime,
        };
        if let (Some(n1), Some(n2)) = (args.n1, args.n2) {
            out["check"] = serde_json::to_value(check_sufficient(&query(n1, n2))?)?;
        }
        if let Some(grid) = &args.frontier {
            out["frontier"] = serde_json::to_value(sample_frontier(&query(0, 0), grid)?)?;
        }
    } else if args.n1.is_some() || args.frontier.is_some() {
        bail!(Error::Config("checks and frontiers need --sigma1-sq and --sigma2-sq".into()));
    }
    print_json(&out)
}

fn solve(args: SolveArgs) -> Result<()> {
    let dataset = read_dataset(&args.data)?;
    let truth = dataset.signal_truth.clone();
    let s = match (args.s, &truth) {
        (Some(s), _) => s,
        (None, Some(t)) => t.sparsity(),
        (None, None) => bail!(Error::Config("--s is required when the dataset has no stored truth".into())),
    };
    let setting: Setting = args.setting.into();
    let result = match args.decoder {
        SearchArg::Exhaustive => decode_exhaustive_capped(&dataset, s, setting, args.cap)?,
        SearchArg::Local => decode_local_search(&dataset, s, setting, args.restarts, args.seed)?,
    };
    let error = truth.as_ref().map(|t| support_error(&result.support, t.support()));
    print_json(&json!({
        "support": one_based(&result.support),
        "loss": result.loss,
        "scanned": result.scanned,
        "exhaustive": result.exhaustive,
        "support_error": error,
    }))
}

fn lasso(args: LassoArgs) -> Result<()> {
    let dataset = read_dataset(&args.data)?;
    let truth = dataset.signal_truth.clone();
    let lambda = match args.lambda {
        Some(l) => l,
        None => {
            let t = truth.as_ref();
            let rho = args.rho.or_else(|| t.map(|t| t.rho())).ok_or_else(|| {
                Error::Config("the schedule needs --rho or a stored truth".into())
            })?;
            let s = t
                .map(|t| t.sparsity())
                .ok_or_else(|| Error::Config("the schedule needs a stored truth for s; pass --lambda".into()))?;
            lambda_schedule(dataset.noise.sigma_avg_sq(), dataset.p(), s, dataset.n(), rho)?
        }
    };
    let config = LassoConfig {
        lambda,
        tol: args.tol,
        max_iter: args.max_iter,
        zero_tol: args.zero_tol,
    };
    let solution = solve_lasso(&dataset, &config)?;
    let nonzero: Vec<(usize, f64)> = solution
        .beta
        .iter()
        .enumerate()
        .filter(|(_, b)| b.abs() > args.zero_tol)
        .map(|(j, &b)| (j + 1, b))
        .collect();
    let mut out = json!({
        "lambda": lambda,
        "converged": solution.converged,
        "iterations": solution.iterations,
        "objective": solution.objective,
        "nonzero": nonzero,
    });
    if let Some(t) = &truth {
        out["signed_support_match"] = json!(signed_support_match(&solution.beta, t, args.zero_tol));
        out["witness"] = match kkt_recovery_witness(&dataset, t, lambda) {
            Ok(report) => serde_json::to_value(report)?,
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    print_json(&out)
}

fn bound(args: BoundArgs) -> Result<()> {
    let setting: Setting = args.setting.into();
    let n = &args.noise;
    let mut query = ChernoffQuery::new(setting, n.n1, n.n2, n.sigma1_sq, n.sigma2_sq, args.m);
    query.theta = args.theta;
    let mut out = json!({
        "theta": query.theta(),
        "bound": chernoff_bound(&query)?,
        "log_bound": log_chernoff_bound(&query)?,
    });
    if args.optimize {
        let (theta, log_bound) = optimal_theta_agnostic(&query)?;
        out["optimal"] = json!({ "theta": theta, "log_bound": log_bound, "bound": log_bound.exp() });
    }
    if args.trials > 0 {
        if !args.m.is_multiple_of(2) {
            bail!(Error::Config("the simulation needs an even m".into()));
        }
        let swapped = (args.m / 2) as usize;
        let s = args.s.unwrap_or(swapped);
        if swapped > s || s == 0 {
            bail!(Error::Config(format!("m/2 = {swapped} must lie in 1..=s (s = {s})")));
        }
        // Truth on 0..s; the candidate swaps its last m/2 indices for fresh ones.
        let signal = SparseSignal::binary(s + swapped, &(0..s).collect::<Vec<_>>())?;
        let candidate: Vec<usize> = (0..s - swapped).chain(s..s + swapped).collect();
        let noise = NoiseProfile::new(n.n1, n.n2, n.sigma1_sq, n.sigma2_sq)?;
        out["misrank"] = serde_json::to_value(empirical_misrank(&signal, &noise, &candidate, setting, args.trials, args.seed)?)?;
    }
    print_json(&out)
}

fn parse_grid(items: &[String]) -> Result<Vec<(usize, usize)>> {
    items
        .iter()
        .map(|item| {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("grid entry {item:?} is not n1:n2")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("grid entry {item:?} is not n1:n2")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

fn load_config(args: &SweepArgs) -> Result<ExperimentConfig> {
    let mut value = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str::<serde_json::Value>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => json!({}),
    };
    let map = value
        .as_object_mut()
        .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
    let mut set = |key: &str, v: serde_json::Value| {
        map.insert(key.to_string(), v);
    };
    if let Some(d) = args.decoder {
        let kind = match d {
            DecoderArg::AgnosticScan => DecoderKind::AgnosticScan,
            DecoderArg::InformedMle => DecoderKind::InformedMle,
            DecoderArg::Lasso => DecoderKind::Lasso,
            DecoderArg::LocalSearch => DecoderKind::LocalSearch,
        };
        set("decoder", serde_json::to_value(kind)?);
    }
    if let Some(v) = args.p {
        set("p", json!(v));
    }
    if let Some(v) = args.s {
        set("s", json!(v));
    }
    if let Some(v) = args.rho {
        set("rho", json!(v));
    }
    if let Some(v) = args.sigma1_sq {
        set("sigma1_sq", json!(v));
    }
    if let Some(v) = args.sigma2_sq {
        set("sigma2_sq", json!(v));
    }
    if let Some(g) = &args.grid {
        set("grid", serde_json::to_value(parse_grid(g)?)?);
    }
    if let Some(v) = args.trials {
        set("trials_per_point", json!(v));
    }
    if let Some(v) = args.delta {
        set("delta", json!(v));
    }
    if let Some(v) = args.lambda {
        set("lambda_rule", serde_json::to_value(LambdaRule::Fixed(v))?);
    }
    if let Some(v) = args.restarts {
        set("restarts", json!(v));
    }
    if let Some(v) = args.seed {
        set("master_seed", json!(v));
    }
    map.entry("lambda_rule")
        .or_insert_with(|| serde_json::to_value(LambdaRule::Schedule).expect("serializable"));
    map.entry("master_seed").or_insert(json!(0));
    map.entry("rho").or_insert(json!(1.0));
    map.entry("delta").or_insert(json!(DEFAULT_DELTA));
    let config: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
    Ok(config)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let config = load_config(&args)?;
    let records = run_sweep(&config)?;
    let summary = summarize(&config, &records)?;
    let mut formats = vec![OutputFormat::Csv];
    if args.svg {
        formats.push(OutputFormat::Svg);
    }
    let files = emit_outputs(&summary, &records, &args.out, &formats)?;
    let failed = records.iter().filter(|r| r.failed).count();
    print_json(&json!({ "files": files, "trials": records.len(), "failed": failed, "summary": summary }))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Plan(a) => plan(a),
        Command::Solve(a) => solve(a),
        Command::Lasso(a) => lasso(a),
        Command::Bound(a) => bound(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::Domain(_) | Error::Data(_)) => 2,
        Some(Error::Resource(_)) => 3,
        Some(Error::Io { .. }) => 4,
        Some(Error::Degenerate(_)) | None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid(&["3:4".to_string(), " 10 : 0".to_string()]).unwrap();
        assert_eq!(g, vec![(3, 4), (10, 0)]);
        assert!(parse_grid(&["3-4".to_string()]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into()).into()), 2);
        assert_eq!(exit_code(&Error::Resource("x".into()).into()), 3);
        let io = Error::Io {
            path: PathBuf::from("/nope"),
            source: std::io::Error::other("x"),
        };
        assert_eq!(exit_code(&io.into()), 4);
    }
}

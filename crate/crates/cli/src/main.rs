//! `cvtest`: test for a constant coefficient of variation and reproduce the
//! simulation tables.

mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use cvtest_core::bootstrap::{bootstrap_test, BootstrapConfig, Pipeline, SmoothingConfig, DEFAULT_ALPHAS};
use cvtest_core::exec::with_threads;
use cvtest_core::generators::{EmbeddingMode, ModelId, ModelSpec, DEFAULT_BURN_IN};
use cvtest_core::harness::{emit_report, run_plan, table1_cells, table2_cells, CellSpec, McPlan, ReportFormat};
use cvtest_core::statistic::{mu0_plugin, standardized, StatisticInput};
use cvtest_core::{Error, Execution, Kernel, WeightFn};

use input::{Column, InputError};

#[derive(Parser)]
#[command(name = "cvtest", version, about = "Nonparametric test for a constant coefficient of variation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the bootstrap test on data from a CSV file.
    Test(TestArgs),
    /// Monte Carlo rejection frequencies for one model.
    Simulate(SimulateArgs),
    /// Regression-model grid (s6-s8, c in {0.5, 1, 1.5}).
    Table1(TableArgs),
    /// Autoregressive-model grid (sta1-sta4).
    Table2(TableArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Epanechnikov,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedArg {
    Lag,
    SquaredLag,
}

impl From<EmbedArg> for EmbeddingMode {
    fn from(e: EmbedArg) -> Self {
        match e {
            EmbedArg::Lag => EmbeddingMode::Lag,
            EmbedArg::SquaredLag => EmbeddingMode::SquaredLag,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct BootstrapArgs {
    /// Bootstrap replicates.
    #[arg(long = "B", visible_alias = "replicates", default_value_t = cvtest_core::bootstrap::DEFAULT_REPLICATES)]
    replicates: usize,
    /// Smoothing parameter v of the bootstrap errors.
    #[arg(long, default_value_t = cvtest_core::bootstrap::DEFAULT_SMOOTHING_V)]
    v: f64,
    /// Comma-separated significance levels.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS.to_vec())]
    alphas: Vec<f64>,
    /// Master seed (falls back to CVTEST_SEED).
    #[arg(long, env = "CVTEST_SEED", default_value_t = 1)]
    seed: u64,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct SmoothingArgs {
    #[arg(long, value_enum, default_value = "epanechnikov")]
    kernel: KernelArg,
    /// Truncation radius of the gaussian kernel.
    #[arg(long, default_value_t = 3.0)]
    gaussian_radius: f64,
    /// Mean bandwidth (skips its cross-validation).
    #[arg(long)]
    h_mean: Option<f64>,
    /// Variance bandwidth (skips its cross-validation).
    #[arg(long)]
    h_var: Option<f64>,
    /// Pair bandwidth of the statistic (default n^{-1/2} times the predictor span).
    #[arg(long)]
    g: Option<f64>,
    /// Re-run cross-validation on every bootstrap replicate.
    #[arg(long)]
    recv: bool,
    /// Use the doubly weighted estimators and statistic.
    #[arg(long)]
    weighted: bool,
    /// Weight w as lower,upper,ramp.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    weight: Option<Vec<f64>>,
    /// Second weight w* as lower,upper,ramp (weighted mode).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    weight_star: Option<Vec<f64>>,
}

#[derive(Args)]
struct TestArgs {
    /// CSV input.
    #[arg(long)]
    input: PathBuf,
    /// Predictor column (index or header name).
    #[arg(long, default_value = "0")]
    x_col: Column,
    /// Response column (index or header name).
    #[arg(long, default_value = "1")]
    y_col: Column,
    /// Treat one column as a time series and embed it.
    #[arg(long, value_enum)]
    embed: Option<EmbedArg>,
    /// Series column used with --embed.
    #[arg(long, default_value = "0")]
    col: Column,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: String,
    /// Mean scale of s6-s8.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    theta0: f64,
    #[arg(long, default_value_t = 0.5)]
    theta1: f64,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value_t = cvtest_core::harness::DEFAULT_RUNS)]
    runs: usize,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
    #[command(flatten)]
    smoothing: SmoothingArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Shorthand for --format json.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = cvtest_core::harness::DEFAULT_RUNS)]
    runs: usize,
    #[arg(long = "B", visible_alias = "replicates", default_value_t = cvtest_core::bootstrap::DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![50, 100, 200])]
    n_list: Vec<usize>,
    #[arg(long, env = "CVTEST_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long)]
    json: bool,
}

fn weight_from(v: &Option<Vec<f64>>) -> anyhow::Result<Option<WeightFn>> {
    v.as_ref()
        .map(|p| WeightFn::new(p[0], p[1], p[2]).map_err(anyhow::Error::from))
        .transpose()
}

impl SmoothingArgs {
    fn kernel(&self) -> anyhow::Result<Kernel> {
        Ok(match self.kernel {
            KernelArg::Epanechnikov => Kernel::epanechnikov(),
            KernelArg::Gaussian => Kernel::truncated_gaussian(self.gaussian_radius)?,
        })
    }

    fn config(&self) -> anyhow::Result<SmoothingConfig> {
        Ok(SmoothingConfig {
            kernel: self.kernel()?,
            h_mean: self.h_mean,
            h_var: self.h_var,
            g: self.g,
            grid: None,
            weight: weight_from(&self.weight)?,
            weight_star: weight_from(&self.weight_star)?,
            recv: self.recv,
        })
    }
}

fn weight_json(w: &WeightFn) -> Value {
    json!([w.lower(), w.upper(), w.ramp()])
}

fn alpha_key(a: f64) -> String {
    format!("{a}")
}

fn cmd_test(args: &TestArgs) -> anyhow::Result<()> {
    let sample = match args.embed {
        Some(mode) => input::load_series(&args.input, &args.col, mode.into())?,
        None => input::load_regression(&args.input, &args.x_col, &args.y_col)?,
    };
    let cfg = BootstrapConfig {
        replicates: args.bootstrap.replicates,
        smoothing_v: args.bootstrap.v,
        alphas: args.bootstrap.alphas.clone(),
        seed: args.bootstrap.seed,
    };
    let smoothing = args.smoothing.config()?;
    let weighted = args.smoothing.weighted;
    // resolve bandwidths and weights once so they can be echoed
    let pipeline = Pipeline::prepare(&sample, &smoothing, weighted)?;
    let resolved = SmoothingConfig {
        h_mean: Some(pipeline.bandwidths().h_mean),
        h_var: Some(pipeline.bandwidths().h_var),
        g: Some(pipeline.bandwidths().g),
        weight: Some(pipeline.weight()),
        weight_star: pipeline.weight_star(),
        ..smoothing.clone()
    };
    let outcome = with_threads(args.bootstrap.jobs, || {
        bootstrap_test(&sample, &cfg, &resolved, weighted, Execution::Parallel)
    })?;
    let bw = outcome.bandwidths;

    let observed = pipeline.evaluate(sample.y())?;
    let input = StatisticInput::new(&sample, &observed.fit, bw.g, resolved.kernel, pipeline.weight(), pipeline.weight_star())?;
    let mu0 = mu0_plugin(&input, outcome.c2_hat).ok();
    let scaled = standardized(outcome.t_observed, sample.n(), bw.g);

    if args.json {
        let mut rejections = Map::new();
        let mut critical = Map::new();
        for d in &outcome.rejections {
            rejections.insert(alpha_key(d.alpha), Value::Bool(d.reject));
            critical.insert(alpha_key(d.alpha), json!(d.critical_value));
        }
        let embed = args.embed.map(|e| match e {
            EmbedArg::Lag => "lag",
            EmbedArg::SquaredLag => "squared-lag",
        });
        let doc = json!({
            "schema": 1,
            "n": sample.n(),
            "t_n": outcome.t_observed,
            "c2_hat": outcome.c2_hat,
            "p_value": outcome.p_value,
            "rejections": rejections,
            "critical_values": critical,
            "t_star": outcome.t_star,
            "redrawn_replicates": outcome.redrawn,
            "bandwidths": { "h_mean": bw.h_mean, "h_var": bw.h_var, "g": bw.g },
            "diagnostics": { "n_sqrt_g_t": scaled, "mu0_plugin": mu0 },
            "config": {
                "input": args.input.display().to_string(),
                "x_col": args.x_col.to_string(),
                "y_col": args.y_col.to_string(),
                "embed": embed,
                "col": args.col.to_string(),
                "seed": cfg.seed,
                "replicates": cfg.replicates,
                "v": cfg.smoothing_v,
                "alphas": cfg.alphas,
                "kernel": resolved.kernel.name(),
                "gaussian_radius": resolved.kernel.support_radius(),
                "h_mean": bw.h_mean,
                "h_var": bw.h_var,
                "g": bw.g,
                "weight": resolved.weight.as_ref().map(weight_json),
                "weight_star": resolved.weight_star.as_ref().map(weight_json),
                "recv": resolved.recv,
                "weighted": weighted,
            },
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!("n            = {}", sample.n());
        println!("T_n(c_hat)   = {:.6}", outcome.t_observed);
        println!("c2_hat       = {:.6}", outcome.c2_hat);
        println!("p-value      = {:.4}", outcome.p_value);
        println!("bandwidths   h_mean = {:.4}, h_var = {:.4}, g = {:.4}", bw.h_mean, bw.h_var, bw.g);
        println!("n sqrt(g) T  = {scaled:.4}");
        if let Some(mu0) = mu0 {
            println!("mu0^2 plugin = {mu0:.4}");
        }
        for d in &outcome.rejections {
            println!(
                "alpha {:<6} {:<14} critical value {:.6}",
                d.alpha,
                if d.reject { "reject" } else { "do not reject" },
                d.critical_value
            );
        }
        println!("seed = {}, B = {}, v = {}{}", cfg.seed, cfg.replicates, cfg.smoothing_v, if weighted { ", weighted" } else { "" });
    }
    if !bw.in_asymptotic_regime() {
        eprintln!("note: g = {} is large relative to h_mean² = {}", bw.g, bw.h_mean * bw.h_mean);
    }
    Ok(())
}

fn format_of(format: FormatArg, json: bool) -> ReportFormat {
    if json {
        return ReportFormat::Json;
    }
    match format {
        FormatArg::Text => ReportFormat::TextTable,
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    }
}

fn run_and_print(plan: McPlan, format: ReportFormat) -> anyhow::Result<()> {
    let report = run_plan(&plan)?;
    print!("{}", emit_report(&report, format));
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let id = ModelId::parse(&args.model).ok_or_else(|| anyhow!("unknown model '{}'", args.model))?;
    let mut spec = match id {
        ModelId::S6 | ModelId::S7 | ModelId::S8 => ModelSpec::regression(id, args.c, args.n),
        ModelId::Arch1 => ModelSpec::arch1(args.theta0, args.theta1, args.n),
        _ => ModelSpec::series(id, args.n),
    };
    if id.is_series() {
        spec.burn_in = args.burn_in;
    }
    let mut plan = McPlan::new(
        vec![CellSpec { model: spec, alphas: args.bootstrap.alphas.clone() }],
        args.runs,
        args.bootstrap.seed,
    );
    plan.bootstrap.replicates = args.bootstrap.replicates;
    plan.bootstrap.smoothing_v = args.bootstrap.v;
    plan.smoothing = args.smoothing.config()?;
    plan.weighted = args.smoothing.weighted;
    plan.parallelism = args.bootstrap.jobs;
    run_and_print(plan, format_of(args.format, args.json))
}

fn cmd_table(args: &TableArgs, cells: Vec<CellSpec>) -> anyhow::Result<()> {
    if args.n_list.is_empty() {
        bail!("--n-list must name at least one sample size");
    }
    let mut plan = McPlan::new(cells, args.runs, args.seed);
    plan.bootstrap.replicates = args.replicates;
    plan.parallelism = args.jobs;
    run_and_print(plan, format_of(args.format, args.json))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::ReplicateFailure { .. } | Error::CellFailure { .. }) => 3,
        Some(Error::TooFewObservations { .. } | Error::NonFinite { .. } | Error::LengthMismatch { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(a) => cmd_test(a).context("test failed"),
        Command::Simulate(a) => cmd_simulate(a).context("simulation failed"),
        Command::Table1(a) => cmd_table(a, table1_cells(&a.n_list)).context("table1 failed"),
        Command::Table2(a) => cmd_table(a, table2_cells(&a.n_list)).context("table2 failed"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

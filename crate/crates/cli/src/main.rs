//! Command-line front end: analyze / falsify / sensitivity / simulate /
//! trends over long-CSV panel data.
//!
//! Exit codes: 0 success, 1 data/estimation errors, 2 usage errors.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use didbracket::bootstrap::{
    parameter_interval, percentile_interval, run_bootstrap_sums, set_interval, union_interval,
    BootstrapConfig,
};
use didbracket::diagnostics::{
    breakeven, falsification_test_with, sensitivity_ci, trend_export, SeMethod, SensitivityParams,
};
use didbracket::estimators::bounding_sums;
use didbracket::simulation::{monte_carlo, DgpConfig, GroupAssignment};
use didbracket::{Error, Result};

mod input;
mod report;

use input::load_dataset;
use report::{
    AnalyzeReport, FalsifyReport, Format, HorizonReport, SensitivityReport, SimulateReport,
    TrendsReport, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(
    name = "didbracket",
    version,
    about = "Treatment-effect bounds from two control groups, with uniformly valid bootstrap confidence intervals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate bounds and confidence intervals from a long CSV
    Analyze(AnalyzeArgs),
    /// Falsification test of the bracketing assumption on a pre-study pair
    Falsify(FalsifyArgs),
    /// Shift intervals by violation allowances and report break-even values
    Sensitivity(SensitivityArgs),
    /// Monte Carlo coverage study on built-in scenarios
    Simulate(SimulateArgs),
    /// Export per-group trend means for external plotting
    Trends(TrendsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Significance level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicate count B
    #[arg(long, short = 'B', default_value_t = 300)]
    replicates: usize,
    /// Master seed; every result is a pure function of flags and this seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads (0 = all cores); does not change results
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct InputArgs {
    /// Long CSV with header unit_id,group,time,outcome ('-' for stdin)
    #[arg(long)]
    input: String,
    /// Calendar times listed in study order, remapped to periods 1..K
    /// (e.g. --remap-times 1972,1973,1974,1975)
    #[arg(long, value_delimiter = ',')]
    remap_times: Option<Vec<String>>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Horizon t to analyze (default: every post-treatment period)
    #[arg(long)]
    horizon: Option<usize>,
    /// Also report the union-of-intervals comparison CI
    #[arg(long)]
    union: bool,
    /// Also report the standard percentile bootstrap comparison CI
    #[arg(long)]
    percentile: bool,
}

#[derive(Args)]
struct FalsifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Later period of the pre-study pair to test (tests (pair-1, pair))
    #[arg(long)]
    pair: usize,
    /// Use the analytic influence-function SE instead of the bootstrap SE
    #[arg(long)]
    analytic_se: bool,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Horizon t
    #[arg(long)]
    horizon: usize,
    /// Per-period allowances for the treated trend falling below both
    /// controls (t-1 comma-separated nonnegative values)
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// Per-period allowances for the treated trend exceeding both controls
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Which base interval to shift
    #[arg(long, value_enum, default_value_t = BaseKind::Parameter)]
    kind: BaseKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum BaseKind {
    Set,
    Parameter,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scenario: 1 (shared trends), 2 (partially parallel trends), or ife
    /// (interactive fixed effects with bracketing loadings)
    #[arg(long)]
    case: String,
    /// Number of simulated datasets
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    /// Units per dataset
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Assign exact group counts instead of i.i.d. labels
    #[arg(long)]
    fixed_counts: bool,
}

#[derive(Args)]
struct TrendsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output format (text and csv coincide)
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Argument(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn init_jobs(jobs: usize) {
    // 0 lets rayon pick; never affects results, only wall time.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global();
}

fn bootstrap_config(common: &CommonArgs) -> Result<BootstrapConfig> {
    let cfg = BootstrapConfig::new(common.replicates, common.alpha, common.seed)?;
    if !cfg.quantile_resolution_ok() {
        eprintln!(
            "warning: B = {} is small for alpha = {}; tail quantiles are coarse",
            cfg.replicates, cfg.alpha
        );
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Analyze(args) => {
            init_jobs(args.common.jobs);
            let report = analyze(&args)?;
            Ok(report.render(args.common.format))
        }
        Command::Falsify(args) => {
            init_jobs(args.common.jobs);
            let report = falsify(&args)?;
            Ok(report.render(args.common.format))
        }
        Command::Sensitivity(args) => {
            init_jobs(args.common.jobs);
            let report = sensitivity(&args)?;
            Ok(report.render(args.common.format))
        }
        Command::Simulate(args) => {
            init_jobs(args.common.jobs);
            let report = simulate(&args)?;
            Ok(report.render(args.common.format))
        }
        Command::Trends(args) => {
            let ds = load_dataset(&args.input.input, args.input.remap_times.as_deref())?;
            let report = TrendsReport {
                schema_version: SCHEMA_VERSION,
                command: "trends",
                rows: trend_export(&ds),
            };
            Ok(report.render(args.format))
        }
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<AnalyzeReport> {
    let ds = load_dataset(&args.input.input, args.input.remap_times.as_deref())?;
    let cfg = bootstrap_config(&args.common)?;
    let horizons: Vec<usize> = match args.horizon {
        Some(t) => vec![t],
        None => (2..=ds.periods()).collect(),
    };

    let mut reports = Vec::with_capacity(horizons.len());
    for t in horizons {
        let point = bounding_sums(&ds, t)?;
        let reps = run_bootstrap_sums(&ds, t, &cfg)?;
        reports.push(HorizonReport {
            t,
            lower: point.lower(),
            upper: point.upper(),
            bounding_sums: point.sums().to_vec(),
            set_ci: set_interval(point.sums(), &reps, &cfg)?,
            parameter_ci: parameter_interval(point.sums(), &reps, &cfg, ds.len())?,
            union_ci: args
                .union
                .then(|| union_interval(point.sums(), &reps, &cfg))
                .transpose()?,
            percentile_ci: args
                .percentile
                .then(|| percentile_interval(point.sums(), &reps, &cfg))
                .transpose()?,
        });
    }
    Ok(AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        command: "analyze",
        alpha: cfg.alpha,
        replicates: cfg.replicates,
        seed: cfg.seed,
        n_units: ds.len(),
        periods: ds.periods(),
        horizons: reports,
    })
}

fn falsify(args: &FalsifyArgs) -> Result<FalsifyReport> {
    let ds = load_dataset(&args.input.input, args.input.remap_times.as_deref())?;
    let cfg = bootstrap_config(&args.common)?;
    let method = if args.analytic_se {
        SeMethod::Analytic
    } else {
        SeMethod::Bootstrap
    };
    let result = falsification_test_with(&ds, args.pair, args.common.alpha, &cfg, method)?;
    Ok(FalsifyReport {
        schema_version: SCHEMA_VERSION,
        command: "falsify",
        pair: [args.pair - 1, args.pair],
        replicates: cfg.replicates,
        seed: cfg.seed,
        se_method: method,
        result,
    })
}

fn sensitivity(args: &SensitivityArgs) -> Result<SensitivityReport> {
    let ds = load_dataset(&args.input.input, args.input.remap_times.as_deref())?;
    let cfg = bootstrap_config(&args.common)?;
    let t = args.horizon;
    let params = SensitivityParams::new(args.gamma.clone(), args.delta.clone())?;
    if params.len() != t - 1 {
        return Err(Error::Argument(format!(
            "horizon {t} needs {} gamma and delta values, got {}",
            t - 1,
            params.len()
        )));
    }

    let point = bounding_sums(&ds, t)?;
    let reps = run_bootstrap_sums(&ds, t, &cfg)?;
    let base = match args.kind {
        BaseKind::Set => set_interval(point.sums(), &reps, &cfg)?,
        BaseKind::Parameter => parameter_interval(point.sums(), &reps, &cfg, ds.len())?,
    };
    let shifted = sensitivity_ci(&base, &params);
    let be = breakeven(&base);
    Ok(SensitivityReport {
        schema_version: SCHEMA_VERSION,
        command: "sensitivity",
        t,
        seed: cfg.seed,
        gammas: args.gamma.clone(),
        deltas: args.delta.clone(),
        base,
        shifted,
        breakeven: be,
    })
}

fn simulate(args: &SimulateArgs) -> Result<SimulateReport> {
    let cfg = bootstrap_config(&args.common)?;
    let mut dgp = match args.case.as_str() {
        "1" | "case1" => DgpConfig::case1(args.n),
        "2" | "case2" => DgpConfig::case2(args.n),
        // Demo interactive-fixed-effects scenario: treated loading between
        // the two control loadings, so bracketing holds by construction.
        "ife" => DgpConfig::interactive_fixed_effects(
            args.n,
            vec![0.0, 1.0, -1.0, 0.5],
            [0.0, 2.0, -1.0],
            [1.0, 0.5, 2.0],
            vec![0.0, 1.0, -0.5, 0.75],
            vec![0.0, 2.0, 1.0, 1.0],
            [0.3, 0.2, 0.5],
            1.0,
        )?,
        other => {
            return Err(Error::Argument(format!(
                "unknown scenario {other:?} (expected 1, 2, or ife)"
            )))
        }
    };
    if args.fixed_counts {
        dgp = dgp.with_assignment(GroupAssignment::FixedCounts);
    }
    let report = monte_carlo(&dgp, args.runs, &cfg)?;
    Ok(SimulateReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        report,
    })
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use skewimpute::bounded::{censored_moments, match_censored, match_truncated, truncated_moments, BoundKind, BoundSpec, MomentPair};
use skewimpute::experiment::{Design, Pattern};
use skewimpute::harness::{
    check_invariants, control_alarms, read_cells, run_experiment, summarize, univariate_demo, write_cells, write_demo,
    write_manifest, write_summary, Arm, CellResult, DemoMethod, ExperimentPlan, Grouping,
};

/// Exit status when a finished run breaks one of its invariants.
const INVARIANT_EXIT: u8 = 3;
/// Control estimates further than this many Monte Carlo SEs from the truth
/// are reported as warnings.
const ALARM_Z: f64 = 3.0;

#[derive(Parser)]
#[command(name = "skewimpute", version, about = "Normal-model imputation of skewed variables: calculators and simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Impute half of a standard exponential sample and write moment and CDF/density tables.
    Demo(DemoArgs),
    /// Moments of a bounded normal, or the pre-bound normal matching target moments.
    Moments(MomentsArgs),
    /// Run selected cells of the factorial experiment.
    Simulate(SimulateArgs),
    /// Run the full factorial for one design.
    Sweep(SweepArgs),
    /// Average a cell table over the factors not being tabulated.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct DemoArgs {
    /// Method name, or `all`.
    #[arg(long, default_value = "all")]
    method: String,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Censor,
    Truncate,
    Both,
}

#[derive(Args)]
struct MomentsArgs {
    /// Pre-bound mean (forward mode).
    #[arg(long, requires = "sigma", conflicts_with_all = ["target_mean", "target_var"])]
    mu: Option<f64>,
    /// Pre-bound standard deviation (forward mode).
    #[arg(long, requires = "mu")]
    sigma: Option<f64>,
    /// Target mean after bounding (inverse mode).
    #[arg(long, requires = "target_var")]
    target_mean: Option<f64>,
    /// Target variance after bounding (inverse mode).
    #[arg(long, requires = "target_mean")]
    target_var: Option<f64>,
    /// Lower bound.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Both)]
    kind: KindArg,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Imputations per dataset.
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for cells.csv, summary.csv and manifest.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "bivariate")]
    design: Design,
    /// Comma-separated shape levels.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    nu: Vec<f64>,
    /// Comma-separated R² levels.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    r2: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "mcar")]
    pattern: Vec<Pattern>,
    /// Comma-separated methods; `control` analyses the complete data.
    #[arg(long, value_delimiter = ',', default_value = "linear")]
    method: Vec<Arm>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "bivariate")]
    design: Design,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SummarizeArgs {
    /// A cells.csv written by `simulate` or `sweep`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "method")]
    by: Grouping,
    /// Comma-separated methods to leave out.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<Arm>,
    /// Defaults to summary_<by>.csv beside the input.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Demo(a) => demo(a),
        Command::Moments(a) => moments(a),
        Command::Simulate(a) => {
            let plan = ExperimentPlan {
                design: a.design,
                nus: a.nu,
                rho2s: a.r2,
                patterns: a.pattern,
                arms: a.method,
                n: a.run.n,
                reps: a.run.reps,
                m: a.run.m,
            };
            experiment("simulate", &plan, &a.run)
        }
        Command::Sweep(a) => {
            let plan = ExperimentPlan {
                n: a.run.n,
                reps: a.run.reps,
                m: a.run.m,
                ..ExperimentPlan::full(a.design)
            };
            experiment("sweep", &plan, &a.run)
        }
        Command::Summarize(a) => {
            let cells: Vec<CellResult> = read_cells(&a.input)
                .with_context(|| format!("reading {}", a.input.display()))?
                .into_iter()
                .filter(|r| !a.exclude.contains(&r.config.arm))
                .collect();
            let table = summarize(&cells, a.by)?;
            let out = a
                .out
                .unwrap_or_else(|| a.input.with_file_name(format!("summary_{}.csv", a.by.name())));
            write_summary(&table, &out)?;
            println!("wrote {} rows to {}", table.rows.len(), out.display());
            let problems = check_invariants(&cells);
            for p in &problems {
                eprintln!("invariant violated: {p}");
            }
            Ok(if problems.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(INVARIANT_EXIT)
            })
        }
    }
}

fn demo(a: DemoArgs) -> anyhow::Result<ExitCode> {
    let methods: Vec<DemoMethod> = if a.method == "all" {
        DemoMethod::ALL.to_vec()
    } else {
        a.method
            .split(',')
            .map(str::parse)
            .collect::<Result<_, _>>()?
    };
    fs::create_dir_all(&a.out)?;
    let mut manifest = vec![
        kv("command", "demo"),
        kv("version", env!("CARGO_PKG_VERSION")),
        kv("n", a.n),
        kv("seed", a.seed),
    ];
    println!("{:<22} {:>10} {:>10} {:>10} {:>10}", "method", "mean", "variance", "skewness", "negative");
    for m in methods {
        let r = univariate_demo(m, a.n, a.seed)?;
        write_demo(&r, &a.out)?;
        let i = &r.imputed;
        println!(
            "{:<22} {:>10.4} {:>10.4} {:>10.4} {:>10.4}  {}",
            m.name(),
            i.mean,
            i.variance,
            i.skewness,
            i.frac_negative,
            r.status
        );
        manifest.push(kv(&format!("{}.status", m.name()), &r.status));
        manifest.push(kv(&format!("{}.rejection_fallbacks", m.name()), r.events.rejection_fallbacks));
    }
    write_manifest(&manifest, &a.out.join("manifest.txt"))?;
    Ok(ExitCode::SUCCESS)
}

fn moments(a: MomentsArgs) -> anyhow::Result<ExitCode> {
    let kinds: &[BoundKind] = match a.kind {
        KindArg::Censor => &[BoundKind::Censor],
        KindArg::Truncate => &[BoundKind::Truncate],
        KindArg::Both => &[BoundKind::Censor, BoundKind::Truncate],
    };
    let label = |k: BoundKind| match k {
        BoundKind::Censor => "censored",
        BoundKind::Truncate => "truncated",
    };
    let mut failed = false;
    if let (Some(mu), Some(sigma)) = (a.mu, a.sigma) {
        let pre = BoundSpec::new(BoundKind::Censor, mu, sigma, a.c)?;
        let g = pre.geometry();
        println!("z_c={}", g.z_c);
        println!("pi_c={}", g.pi_c);
        println!("lambda_c={}", g.lambda_c);
        println!("delta_c={}", g.delta_c);
        for &k in kinds {
            let m = match k {
                BoundKind::Censor => censored_moments(&pre),
                BoundKind::Truncate => truncated_moments(&pre),
            };
            println!("{}.mean={}", label(k), m.mean);
            println!("{}.variance={}", label(k), m.variance);
        }
    } else if let (Some(mean), Some(var)) = (a.target_mean, a.target_var) {
        let target = MomentPair::new(mean, var)?;
        for &k in kinds {
            let found = match k {
                BoundKind::Censor => match_censored(target, a.c),
                BoundKind::Truncate => match_truncated(target, a.c),
            };
            match found {
                Ok(s) => {
                    println!("{}.pre_mean={}", label(k), s.pre_mean);
                    println!("{}.pre_sd={}", label(k), s.pre_sd);
                }
                Err(e) => {
                    println!("{}.error={e}", label(k));
                    failed = true;
                }
            }
        }
    } else {
        bail!("give either --mu and --sigma, or --target-mean and --target-var");
    }
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn experiment(command: &str, plan: &ExperimentPlan, run: &RunArgs) -> anyhow::Result<ExitCode> {
    fs::create_dir_all(&run.out)?;
    let start = Instant::now();
    let results = run_experiment(plan, run.seed, run.workers)?;
    let elapsed = start.elapsed().as_secs_f64();

    write_cells(&results, &run.out.join("cells.csv"))?;
    write_summary(&summarize(&results, Grouping::Method)?, &run.out.join("summary.csv"))?;

    let problems = check_invariants(&results);
    let alarms = control_alarms(&results, ALARM_Z);
    let total = |f: fn(&CellResult) -> usize| results.iter().map(f).sum::<usize>();
    let list = |v: Vec<String>| v.join(",");
    let manifest = vec![
        kv("command", command),
        kv("version", env!("CARGO_PKG_VERSION")),
        kv("design", plan.design),
        kv("seed", run.seed),
        kv("workers", run.workers),
        kv("n", plan.n),
        kv("reps", plan.reps),
        kv("m", plan.m),
        kv("nu", list(plan.nus.iter().map(f64::to_string).collect())),
        kv("r2", list(plan.rho2s.iter().map(f64::to_string).collect())),
        kv("pattern", list(plan.patterns.iter().map(|p| p.to_string()).collect())),
        kv("method", list(plan.arms.iter().map(|a| a.to_string()).collect())),
        kv("cells", results.len()),
        kv("method_failures", total(|r| r.failures.method_failures)),
        kv("rejection_fallbacks", total(|r| r.failures.rejection_fallbacks)),
        kv("rejection_clamps", total(|r| r.failures.rejection_clamps)),
        kv("truncreg_refits", total(|r| r.failures.truncreg_refits)),
        kv("tail_fallbacks", total(|r| r.failures.tail_fallbacks)),
        kv("mask_redraws", total(|r| r.failures.mask_redraws)),
        kv("extreme_replications", total(|r| r.failures.extreme_replications)),
        kv("invariant_violations", problems.len()),
        kv("control_alarms", alarms.len()),
        kv("elapsed_seconds", format!("{elapsed:.3}")),
    ];
    write_manifest(&manifest, &run.out.join("manifest.txt"))?;

    for a in &alarms {
        eprintln!("warning: {a}");
    }
    for p in &problems {
        eprintln!("invariant violated: {p}");
    }
    println!(
        "{} cells in {elapsed:.1}s; results in {}",
        results.len(),
        run.out.display()
    );
    Ok(if problems.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(INVARIANT_EXIT)
    })
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

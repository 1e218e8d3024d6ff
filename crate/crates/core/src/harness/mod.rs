//! Factorial Monte Carlo runner and its outputs.
//!
//! Work is split into `(cell, replication)` units. Each unit draws from
//! streams keyed by the run seed, a hash of the data-generating factors and
//! the replication index, so results do not depend on the worker count and
//! every imputation method in a cell sees the same datasets.

mod demo;
mod summary;
mod tables;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use demo::{univariate_demo, DemoMethod, DemoReport, GridPoint, Moments};
pub use summary::{summarize, Grouping, SummaryRow, SummaryTable};
pub use tables::{
    read_cells, read_manifest, write_cells, write_demo, write_manifest, write_summary, CELL_HEADER,
    SUMMARY_HEADER,
};

use crate::dataset::CompleteDataset;
use crate::error::{Error, Result};
use crate::estimands::{analyze, mi_combine, true_values, Estimand, EstimateSet};
use crate::experiment::{delete, generate, Design, Pattern, NU_LEVELS, RHO2_LEVELS};
use crate::impute::{multiply_impute, ImputationEvents, ImputationMethod, ImputationSpec};
use crate::rng::{hash_words, RandomStream, StreamId};

/// An imputed value above this multiple of the largest observed `x` marks
/// its replication as extreme.
pub const EXTREME_FACTOR: f64 = 10.0;

/// What a cell does with each generated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    /// No deletion: the complete data are analysed directly.
    Control,
    Impute(ImputationMethod),
}

impl Arm {
    /// Control followed by the seven compared methods.
    pub fn all() -> Vec<Arm> {
        std::iter::once(Arm::Control)
            .chain(ImputationMethod::EXPERIMENT.map(Arm::Impute))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Control => "control",
            Arm::Impute(m) => m.name(),
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "control" {
            Ok(Arm::Control)
        } else {
            s.parse().map(Arm::Impute)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConfig {
    pub design: Design,
    pub nu: f64,
    pub rho2: f64,
    pub pattern: Pattern,
    pub arm: Arm,
    pub n: usize,
    pub reps: usize,
    /// Imputations per dataset.
    pub m: usize,
}

impl CellConfig {
    pub fn new(design: Design, nu: f64, rho2: f64, pattern: Pattern, arm: Arm) -> Self {
        Self {
            design,
            nu,
            rho2,
            pattern,
            arm,
            n: 100,
            reps: 100,
            m: 5,
        }
    }

    /// Stream cell id: depends on the data-generating factors only, never on
    /// the arm.
    pub fn stream_cell(&self) -> u64 {
        hash_words(&[
            self.design as u64,
            self.nu.to_bits(),
            self.rho2.to_bits(),
            self.pattern as u64,
            self.n as u64,
        ])
    }

    fn spec(&self) -> Option<ImputationSpec> {
        match self.arm {
            Arm::Control => None,
            Arm::Impute(method) => Some(ImputationSpec {
                m: self.m,
                ..ImputationSpec::new(method)
            }),
        }
    }

    fn sort_key(&self) -> (Design, Arm, u64, u64, Pattern) {
        (self.design, self.arm, self.nu.to_bits(), self.rho2.to_bits(), self.pattern)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.m == 0 || self.n < 10 {
            return Err(Error::InvalidArgument(format!(
                "need reps ≥ 1, m ≥ 1 and n ≥ 10, got reps={}, m={}, n={}",
                self.reps, self.m, self.n
            )));
        }
        Ok(())
    }
}

/// Summary of one estimand over the valid replications of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimandRecord {
    pub estimand: Estimand,
    pub true_value: f64,
    pub mean_estimate: f64,
    /// Standard deviation across replications (`n − 1` divisor).
    pub sd_estimate: f64,
    pub bias: f64,
    /// `√(bias² + sd²)`.
    pub rmse: f64,
    pub rel_bias: f64,
    pub rel_rmse: f64,
    pub median_estimate: f64,
    /// `(median − truth) / truth`, robust to a few wild replications.
    pub median_rel_bias: f64,
    /// Monte Carlo standard error of `mean_estimate`.
    pub mc_se: f64,
}

impl EstimandRecord {
    fn from_values(estimand: Estimand, true_value: f64, values: &mut [f64]) -> Self {
        let k = values.len();
        let (mean, sd, median) = if k == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = values.iter().sum::<f64>() / k as f64;
            let sd = if k > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            } else {
                0.0
            };
            values.sort_by(f64::total_cmp);
            let median = if k % 2 == 1 {
                values[k / 2]
            } else {
                0.5 * (values[k / 2 - 1] + values[k / 2])
            };
            (mean, sd, median)
        };
        let bias = mean - true_value;
        let rmse = (bias * bias + sd * sd).sqrt();
        Self {
            estimand,
            true_value,
            mean_estimate: mean,
            sd_estimate: sd,
            bias,
            rmse,
            rel_bias: bias / true_value,
            rel_rmse: rmse / true_value.abs(),
            median_estimate: median,
            median_rel_bias: (median - true_value) / true_value,
            mc_se: sd / (k as f64).sqrt(),
        }
    }

    /// `|rmse² − (bias² + sd²)|` relative to `rmse²`.
    pub fn rmse_identity_error(&self) -> f64 {
        let lhs = self.rmse * self.rmse;
        let rhs = self.bias * self.bias + self.sd_estimate * self.sd_estimate;
        if lhs == 0.0 {
            rhs
        } else {
            (lhs - rhs).abs() / lhs
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FailureCounts {
    /// Replications dropped because imputation or analysis failed.
    pub method_failures: usize,
    pub rejection_fallbacks: usize,
    pub rejection_clamps: usize,
    /// Datasets whose truncated regression was refitted at the fallback bound.
    pub truncreg_refits: usize,
    pub tail_fallbacks: usize,
    pub mask_redraws: usize,
    /// Replications with an imputed value above [`EXTREME_FACTOR`] times the
    /// largest observed `x`.
    pub extreme_replications: usize,
    /// Observed values altered, bounds breached or non-finite imputations.
    pub invariant_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub config: CellConfig,
    pub valid_reps: usize,
    pub records: Vec<EstimandRecord>,
    pub failures: FailureCounts,
}

impl CellResult {
    pub fn record(&self, e: Estimand) -> Option<&EstimandRecord> {
        self.records.iter().find(|r| r.estimand == e)
    }
}

/// What one replication contributes to its cell.
#[derive(Debug, Clone, Default)]
struct Replication {
    estimates: Option<EstimateSet>,
    events: ImputationEvents,
    mask_redraws: usize,
    extreme: bool,
    invariant_violations: usize,
}

fn run_replication(config: &CellConfig, seed: u64, rep: usize) -> Replication {
    let mut out = Replication::default();
    let mut rng = RandomStream::new(seed, StreamId::new(config.stream_cell(), rep as u64, 0));
    let result = (|| -> Result<EstimateSet> {
        let data = generate(config.design, config.nu, config.rho2, config.n, &mut rng)?;
        let Some(spec) = config.spec() else {
            return analyze(&data);
        };
        let (y, z) = (data.y.clone(), data.z.clone());
        let incomplete = delete(data, config.pattern, &mut rng)?;
        out.mask_redraws = incomplete.mask_redraws() as usize;
        let completions = multiply_impute(&incomplete, &spec, &rng)?;
        let max_obs = incomplete.observed_x().into_iter().fold(f64::NEG_INFINITY, f64::max);
        let limit = spec.method.lower_limit(&spec);
        let mut sets = Vec::with_capacity(completions.len());
        for c in completions {
            out.events += c.events;
            for (i, &v) in c.x.iter().enumerate() {
                let broken = match incomplete.x(i) {
                    Some(o) => o.to_bits() != v.to_bits(),
                    None => {
                        if v > EXTREME_FACTOR * max_obs {
                            out.extreme = true;
                        }
                        !v.is_finite() || limit.is_some_and(|lo| v < lo)
                    }
                };
                out.invariant_violations += usize::from(broken);
            }
            sets.push(analyze(&CompleteDataset::new(c.x, y.clone(), z.clone())?)?);
        }
        mi_combine(&sets)
    })();
    out.estimates = result.ok();
    out
}

fn aggregate(config: CellConfig, reps: &[Replication]) -> CellResult {
    let mut failures = FailureCounts::default();
    for r in reps {
        failures.method_failures += usize::from(r.estimates.is_none());
        failures.rejection_fallbacks += r.events.rejection_fallbacks;
        failures.rejection_clamps += r.events.rejection_clamps;
        failures.truncreg_refits += r.events.truncreg_refits.min(1);
        failures.tail_fallbacks += r.events.tail_fallbacks;
        failures.mask_redraws += r.mask_redraws;
        failures.extreme_replications += usize::from(r.extreme);
        failures.invariant_violations += r.invariant_violations;
    }
    let truth = true_values(config.design, config.nu, config.rho2);
    let valid: Vec<&EstimateSet> = reps.iter().filter_map(|r| r.estimates.as_ref()).collect();
    let records = Estimand::for_design(config.design)
        .iter()
        .map(|&e| {
            let mut values: Vec<f64> = valid.iter().filter_map(|s| s.get(e)).collect();
            EstimandRecord::from_values(e, truth.get(e).unwrap_or(f64::NAN), &mut values)
        })
        .collect();
    CellResult {
        config,
        valid_reps: valid.len(),
        records,
        failures,
    }
}

/// Runs every replication of one cell on the calling thread.
pub fn run_cell(config: &CellConfig, seed: u64) -> Result<CellResult> {
    config.validate()?;
    let reps: Vec<Replication> = (0..config.reps).map(|r| run_replication(config, seed, r)).collect();
    Ok(aggregate(*config, &reps))
}

/// The factor levels of a sweep. Every combination becomes one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub design: Design,
    pub nus: Vec<f64>,
    pub rho2s: Vec<f64>,
    pub patterns: Vec<Pattern>,
    pub arms: Vec<Arm>,
    pub n: usize,
    pub reps: usize,
    pub m: usize,
}

impl ExperimentPlan {
    /// Full factorial with the control arm and all seven methods.
    pub fn full(design: Design) -> Self {
        Self {
            design,
            nus: NU_LEVELS.to_vec(),
            rho2s: RHO2_LEVELS.to_vec(),
            patterns: Pattern::ALL.to_vec(),
            arms: Arm::all(),
            n: 100,
            reps: 100,
            m: 5,
        }
    }

    /// Cells in canonical order.
    pub fn cells(&self) -> Vec<CellConfig> {
        let mut cells = Vec::new();
        for &arm in &self.arms {
            for &nu in &self.nus {
                for &rho2 in &self.rho2s {
                    for &pattern in &self.patterns {
                        cells.push(CellConfig {
                            n: self.n,
                            reps: self.reps,
                            m: self.m,
                            ..CellConfig::new(self.design, nu, rho2, pattern, arm)
                        });
                    }
                }
            }
        }
        cells.sort_by_key(|c| c.sort_key());
        cells.dedup_by_key(|c| c.sort_key());
        cells
    }
}

/// Runs a plan on `workers` threads. Output is sorted canonically and is
/// identical for any worker count.
pub fn run_experiment(plan: &ExperimentPlan, seed: u64, workers: usize) -> Result<Vec<CellResult>> {
    let cells = plan.cells();
    for c in &cells {
        c.validate()?;
    }
    let units: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.reps).map(move |r| (i, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<Replication> = pool.install(|| {
        units
            .par_iter()
            .map(|&(i, r)| run_replication(&cells[i], seed, r))
            .collect()
    });
    let mut results = Vec::with_capacity(cells.len());
    let mut start = 0;
    for cell in &cells {
        results.push(aggregate(*cell, &outcomes[start..start + cell.reps]));
        start += cell.reps;
    }
    Ok(results)
}

/// Deterministic invariants of a finished run: the rmse identity and the
/// per-value checks made during imputation. Returns one message per breach.
pub fn check_invariants(results: &[CellResult]) -> Vec<String> {
    let mut problems = Vec::new();
    for r in results {
        let c = &r.config;
        let label = format!("{} {} nu={} rho2={} {}", c.design, c.arm, c.nu, c.rho2, c.pattern);
        if r.failures.invariant_violations > 0 {
            problems.push(format!(
                "{label}: {} imputed values broke an invariant",
                r.failures.invariant_violations
            ));
        }
        for rec in &r.records {
            if rec.mean_estimate.is_finite() && !(rec.rmse_identity_error() <= 1e-9) {
                problems.push(format!("{label}: rmse identity fails for {}", rec.estimand));
            }
            if rec.rmse < rec.bias.abs() {
                problems.push(format!("{label}: rmse below |bias| for {}", rec.estimand));
            }
        }
    }
    problems
}

/// Control-arm estimates whose bias exceeds `z` Monte Carlo standard errors.
/// These are statistical alarms, reported rather than treated as failures.
pub fn control_alarms(results: &[CellResult], z: f64) -> Vec<String> {
    results
        .iter()
        .filter(|r| r.config.arm == Arm::Control)
        .flat_map(|r| {
            r.records.iter().filter_map(move |rec| {
                (rec.bias.abs() > z * rec.mc_se).then(|| {
                    format!(
                        "control nu={} rho2={} {}: {} bias {:.4} is {:.1} MC SE",
                        r.config.nu,
                        r.config.rho2,
                        r.config.pattern,
                        rec.estimand,
                        rec.bias,
                        rec.bias / rec.mc_se
                    )
                })
            })
        })
        .collect()
}

//! Univariate demonstrations: impute half of a standard exponential sample
//! by one of the normal-model methods and compare the imputed values with
//! the observed ones.

use std::fmt;
use std::str::FromStr;

use crate::bounded::BoundKind;
use crate::error::{Error, Result};
use crate::estimands::sample_skewness;
use crate::impute::{
    impute_fn_univariate, impute_univariate_bounded, impute_univariate_transformed, ImputationEvents,
    ImputationMethod, ImputationSpec, TransformKind,
};
use crate::rng::{hash_words, RandomStream, StreamId};
use crate::sampling::sample_exp1;

const GRID_LOW: f64 = -3.0;
const GRID_HIGH: f64 = 8.0;
const GRID_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DemoMethod {
    Fn,
    CensorNaive,
    CensorMatched,
    TruncateNaive,
    TruncateMatched,
    SqrtTransform,
    FourthRootTransform,
}

impl DemoMethod {
    pub const ALL: [DemoMethod; 7] = [
        DemoMethod::Fn,
        DemoMethod::CensorNaive,
        DemoMethod::CensorMatched,
        DemoMethod::TruncateNaive,
        DemoMethod::TruncateMatched,
        DemoMethod::SqrtTransform,
        DemoMethod::FourthRootTransform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DemoMethod::Fn => "fn",
            DemoMethod::CensorNaive => "censor_naive",
            DemoMethod::CensorMatched => "censor_matched",
            DemoMethod::TruncateNaive => "truncate_naive",
            DemoMethod::TruncateMatched => "truncate_matched",
            DemoMethod::SqrtTransform => "sqrt_transform",
            DemoMethod::FourthRootTransform => "fourth_root_transform",
        }
    }
}

impl fmt::Display for DemoMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DemoMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown demo method {s:?}")))
    }
}

/// Moments of a sample. All fields are NaN for an empty sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// `n − 1` divisor.
    pub variance: f64,
    pub skewness: f64,
    pub min: f64,
    pub max: f64,
    /// Share of values below zero.
    pub frac_negative: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n < 2 {
            return Self {
                count: n,
                mean: f64::NAN,
                variance: f64::NAN,
                skewness: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                frac_negative: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            count: n,
            mean,
            variance,
            skewness: sample_skewness(values).unwrap_or(f64::NAN),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            frac_negative: values.iter().filter(|&&v| v < 0.0).count() as f64 / n as f64,
        }
    }
}

/// Empirical CDFs and histogram densities at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub cdf_observed: f64,
    pub cdf_imputed: f64,
    pub density_observed: f64,
    pub density_imputed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub method: DemoMethod,
    pub n: usize,
    pub seed: u64,
    /// `"ok"`, or the reason no imputations could be made.
    pub status: String,
    pub observed: Moments,
    pub imputed: Moments,
    pub completed: Moments,
    pub events: ImputationEvents,
    pub grid: Vec<GridPoint>,
}

fn grid(observed: &[f64], imputed: &[f64]) -> Vec<GridPoint> {
    let sort = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (obs, imp) = (sort(observed), sort(imputed));
    let cdf = |s: &[f64], x: f64| {
        if s.is_empty() {
            f64::NAN
        } else {
            s.partition_point(|&v| v <= x) as f64 / s.len() as f64
        }
    };
    let density = |s: &[f64], x: f64| {
        let lo = s.partition_point(|&v| v < x - 0.5 * GRID_STEP);
        let hi = s.partition_point(|&v| v < x + 0.5 * GRID_STEP);
        if s.is_empty() {
            f64::NAN
        } else {
            (hi - lo) as f64 / (s.len() as f64 * GRID_STEP)
        }
    };
    let steps = ((GRID_HIGH - GRID_LOW) / GRID_STEP).round() as usize;
    (0..=steps)
        .map(|i| {
            let x = GRID_LOW + i as f64 * GRID_STEP;
            GridPoint {
                x,
                cdf_observed: cdf(&obs, x),
                cdf_imputed: cdf(&imp, x),
                density_observed: density(&obs, x),
                density_imputed: density(&imp, x),
            }
        })
        .collect()
}

/// Draws `n` standard exponential values, deletes each with probability ½
/// and imputes the deleted ones by `method`.
pub fn univariate_demo(method: DemoMethod, n: usize, seed: u64) -> Result<DemoReport> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("demo needs n ≥ 4, got {n}")));
    }
    let cell = hash_words(&[0x64656d6f, method as u64]);
    let mut rng = RandomStream::new(seed, StreamId::new(cell, 0, 0));
    let values: Vec<f64> = (0..n).map(|_| sample_exp1(&mut rng)).collect();
    let observed: Vec<bool> = (0..n).map(|_| rng.open01() >= 0.5).collect();
    let mut imp_rng = rng.for_imputation(1);
    let spec = ImputationSpec::new(ImputationMethod::FnUnivariate);
    let outcome = match method {
        DemoMethod::Fn => impute_fn_univariate(&values, &observed, 0, &mut imp_rng).map(|x| (x, ImputationEvents::default())),
        DemoMethod::SqrtTransform | DemoMethod::FourthRootTransform => {
            let kind = if method == DemoMethod::SqrtTransform {
                TransformKind::SquareRoot
            } else {
                TransformKind::FourthRoot
            };
            impute_univariate_transformed(&values, &observed, kind, 0, &mut imp_rng)
                .map(|x| (x, ImputationEvents::default()))
        }
        _ => {
            let (kind, matched) = match method {
                DemoMethod::CensorNaive => (BoundKind::Censor, false),
                DemoMethod::CensorMatched => (BoundKind::Censor, true),
                DemoMethod::TruncateNaive => (BoundKind::Truncate, false),
                _ => (BoundKind::Truncate, true),
            };
            impute_univariate_bounded(&values, &observed, kind, matched, &spec, &mut imp_rng).map(|c| (c.x, c.events))
        }
    };
    let obs: Vec<f64> = values.iter().zip(&observed).filter(|(_, &o)| o).map(|(&v, _)| v).collect();
    let (status, imputed, completed, events) = match outcome {
        Ok((x, events)) => {
            let imp: Vec<f64> = x.iter().zip(&observed).filter(|(_, &o)| !o).map(|(&v, _)| v).collect();
            ("ok".to_string(), imp, x, events)
        }
        Err(e) => (e.to_string(), Vec::new(), Vec::new(), ImputationEvents::default()),
    };
    Ok(DemoReport {
        method,
        n,
        seed,
        status,
        observed: Moments::of(&obs),
        imputed: Moments::of(&imputed),
        completed: Moments::of(&completed),
        events,
        grid: grid(&obs, &imputed),
    })
}

//! Imputation methods for a skewed `x` given complete predictors.
//!
//! Every method leaves observed values untouched and draws fresh posterior
//! parameters on each call, so repeated calls with different streams give
//! proper multiple imputations.

mod bounds;
mod transform;
mod univariate;

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

pub use bounds::{apply_censoring, apply_truncation_rejection, Rejection};
pub use transform::{TransformKind, TransformSpec};
pub use univariate::{impute_fn_univariate, impute_univariate_bounded, impute_univariate_transformed};

use crate::dataset::IncompleteDataset;
use crate::error::{Error, Result};
use crate::regression::{ols_fit, posterior_draw_regression, DesignMatrix, PosteriorDraw};
use crate::rng::RandomStream;
use crate::sampling::sample_standard_normal;
use crate::truncreg::{truncreg_fit, truncreg_impute, TruncRegFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ImputationMethod {
    /// Normal linear regression of `x` on the predictors.
    Linear,
    /// Linear, then values below the bound rounded up to it.
    LinearCensored,
    /// Linear, then values below the bound redrawn by rejection.
    LinearTruncated,
    /// Linear regression with a squared `y` term.
    Quadratic,
    /// Fourth root of `x` regressed on the predictors, imputed, raised back.
    TransformX,
    /// As `TransformX`, with each predictor `v` replaced by `⁴√(v − min v)`.
    TransformAll,
    /// Maximum-likelihood truncated regression, imputing from the truncated law.
    TruncatedRegression,
    /// Normal imputation ignoring the predictors.
    FnUnivariate,
}

impl ImputationMethod {
    /// The methods compared in the simulation study.
    pub const EXPERIMENT: [ImputationMethod; 7] = [
        ImputationMethod::Linear,
        ImputationMethod::LinearCensored,
        ImputationMethod::LinearTruncated,
        ImputationMethod::Quadratic,
        ImputationMethod::TransformX,
        ImputationMethod::TransformAll,
        ImputationMethod::TruncatedRegression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImputationMethod::Linear => "linear",
            ImputationMethod::LinearCensored => "linear_censored",
            ImputationMethod::LinearTruncated => "linear_truncated",
            ImputationMethod::Quadratic => "quadratic",
            ImputationMethod::TransformX => "transform_x",
            ImputationMethod::TransformAll => "transform_all",
            ImputationMethod::TruncatedRegression => "truncated_regression",
            ImputationMethod::FnUnivariate => "fn_univariate",
        }
    }

    /// Smallest value this method can impute, if it enforces one.
    pub fn lower_limit(self, spec: &ImputationSpec) -> Option<f64> {
        match self {
            ImputationMethod::LinearCensored => Some(spec.bound_c),
            ImputationMethod::LinearTruncated => Some(spec.bound_c.min(spec.rejection_fallback_c)),
            ImputationMethod::TruncatedRegression => Some(spec.bound_c.min(spec.truncreg_fallback_c)),
            ImputationMethod::TransformX | ImputationMethod::TransformAll => Some(0.0),
            _ => None,
        }
    }
}

impl fmt::Display for ImputationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImputationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ImputationMethod::FnUnivariate,
            ImputationMethod::Linear,
            ImputationMethod::LinearCensored,
            ImputationMethod::LinearTruncated,
            ImputationMethod::Quadratic,
            ImputationMethod::TransformX,
            ImputationMethod::TransformAll,
            ImputationMethod::TruncatedRegression,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Parse(format!("unknown imputation method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputationSpec {
    pub method: ImputationMethod,
    /// Lower bound for the bounded methods.
    pub bound_c: f64,
    /// Number of imputations.
    pub m: usize,
    /// Redraws allowed before rejection falls back to `rejection_fallback_c`.
    pub rejection_cap: usize,
    pub rejection_fallback_c: f64,
    /// Bound used to refit a truncated regression that failed to converge.
    pub truncreg_fallback_c: f64,
    pub prior_df: u32,
}

impl ImputationSpec {
    pub fn new(method: ImputationMethod) -> Self {
        Self {
            method,
            bound_c: 0.0,
            m: 5,
            rejection_cap: 100,
            rejection_fallback_c: -6.0,
            truncreg_fallback_c: -1.0,
            prior_df: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        if self.rejection_cap == 0 {
            return Err(Error::InvalidArgument("rejection cap must be at least 1".into()));
        }
        if !self.bound_c.is_finite() || !self.rejection_fallback_c.is_finite() || !self.truncreg_fallback_c.is_finite() {
            return Err(Error::InvalidArgument("bounds must be finite".into()));
        }
        Ok(())
    }
}

/// Fallbacks and other exceptional events during one completion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImputationEvents {
    /// Values for which rejection hit its cap and the fallback bound was used.
    pub rejection_fallbacks: usize,
    /// Values set to the fallback bound because even it was not reached.
    pub rejection_clamps: usize,
    /// Truncated-regression fits redone at the fallback bound.
    pub truncreg_refits: usize,
    /// Truncated draws whose tail mass underflowed.
    pub tail_fallbacks: usize,
}

impl ImputationEvents {
    pub(crate) fn record_rejection(&mut self, r: &Rejection) {
        self.rejection_fallbacks += usize::from(r.fell_back);
        self.rejection_clamps += usize::from(r.clamped);
    }
}

impl AddAssign for ImputationEvents {
    fn add_assign(&mut self, o: Self) {
        self.rejection_fallbacks += o.rejection_fallbacks;
        self.rejection_clamps += o.rejection_clamps;
        self.truncreg_refits += o.truncreg_refits;
        self.tail_fallbacks += o.tail_fallbacks;
    }
}

/// One completed `x` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub x: Vec<f64>,
    pub events: ImputationEvents,
}

impl Completion {
    pub fn new(x: Vec<f64>, events: ImputationEvents) -> Self {
        Self { x, events }
    }
}

/// Predictor columns of the regression for `x`, intercept first.
fn predictors(data: &IncompleteDataset, method: ImputationMethod) -> Result<DesignMatrix> {
    let y = data.y();
    match method {
        ImputationMethod::Quadratic => {
            let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
            match data.z() {
                Some(z) => DesignMatrix::with_intercept(&[y, &y2, z]),
                None => DesignMatrix::with_intercept(&[y, &y2]),
            }
        }
        ImputationMethod::TransformAll => {
            let ty = TransformSpec::shifted_to_min(TransformKind::FourthRoot, y)?.apply_all(y)?;
            match data.z() {
                Some(z) => {
                    let tz = TransformSpec::shifted_to_min(TransformKind::FourthRoot, z)?.apply_all(z)?;
                    DesignMatrix::with_intercept(&[&ty, &tz])
                }
                None => DesignMatrix::with_intercept(&[&ty]),
            }
        }
        _ => match data.z() {
            Some(z) => DesignMatrix::with_intercept(&[y, z]),
            None => DesignMatrix::with_intercept(&[y]),
        },
    }
}

/// Posterior-drawn regression of `response` (observed rows only) on the
/// observed rows of `design`, and the predicted means for the missing rows.
fn regression_draw(
    data: &IncompleteDataset,
    design: &DesignMatrix,
    response: &[f64],
    prior_df: u32,
    rng: &mut RandomStream,
) -> Result<(PosteriorDraw, Vec<f64>)> {
    let fit = ols_fit(&design.select(data.observed()), response)?;
    let draw = posterior_draw_regression(&fit, prior_df, rng)?;
    let means = design.select(&data.missing()).rows().map(|r| draw.predict(r)).collect();
    Ok((draw, means))
}

fn normal_noise(means: &[f64], sd: f64, rng: &mut RandomStream) -> Vec<f64> {
    means.iter().map(|m| m + sd * sample_standard_normal(rng)).collect()
}

fn require_nonnegative(values: &[f64]) -> Result<()> {
    match values.iter().find(|&&v| !(v >= 0.0)) {
        Some(v) => Err(Error::InvalidData(format!("observed x value {v} is negative"))),
        None => Ok(()),
    }
}

/// Linear regression imputation and its censored and truncated variants.
///
/// The bounded variants share the first pass with the plain method exactly,
/// so they differ from it only where it imputed a value below the bound.
fn impute_linear_family(
    data: &IncompleteDataset,
    spec: &ImputationSpec,
    method: ImputationMethod,
    rng: &mut RandomStream,
) -> Result<Completion> {
    let design = predictors(data, method)?;
    let (draw, means) = regression_draw(data, &design, &data.observed_x(), spec.prior_df, rng)?;
    let sd = draw.residual_sd();
    let mut imputed = normal_noise(&means, sd, rng);
    let mut events = ImputationEvents::default();
    let c = spec.bound_c;
    match method {
        ImputationMethod::LinearCensored => imputed = apply_censoring(&imputed, c),
        ImputationMethod::LinearTruncated => {
            for (v, &mean) in imputed.iter_mut().zip(&means) {
                if *v < c {
                    let r = apply_truncation_rejection(
                        |s| mean + sd * sample_standard_normal(s),
                        c,
                        spec.rejection_cap,
                        spec.rejection_fallback_c,
                        rng,
                    );
                    events.record_rejection(&r);
                    *v = r.value;
                }
            }
        }
        _ => {}
    }
    Ok(Completion::new(data.complete_with(&imputed)?, events))
}

pub fn impute_linear(data: &IncompleteDataset, spec: &ImputationSpec, rng: &mut RandomStream) -> Result<Completion> {
    impute_linear_family(data, spec, ImputationMethod::Linear, rng)
}

pub fn impute_linear_censored(
    data: &IncompleteDataset,
    spec: &ImputationSpec,
    rng: &mut RandomStream,
) -> Result<Completion> {
    impute_linear_family(data, spec, ImputationMethod::LinearCensored, rng)
}

pub fn impute_linear_truncated(
    data: &IncompleteDataset,
    spec: &ImputationSpec,
    rng: &mut RandomStream,
) -> Result<Completion> {
    impute_linear_family(data, spec, ImputationMethod::LinearTruncated, rng)
}

/// Linear imputation with predictors `(y, y²)`, plus `z` when present.
pub fn impute_quadratic(data: &IncompleteDataset, spec: &ImputationSpec, rng: &mut RandomStream) -> Result<Completion> {
    impute_linear_family(data, spec, ImputationMethod::Quadratic, rng)
}

fn impute_transformed(
    data: &IncompleteDataset,
    spec: &ImputationSpec,
    method: ImputationMethod,
    rng: &mut RandomStream,
) -> Result<Completion> {
    let obs = data.observed_x();
    require_nonnegative(&obs)?;
    let t = TransformSpec::new(TransformKind::FourthRoot);
    let design = predictors(data, method)?;
    let (draw, means) = regression_draw(data, &design, &t.apply_all(&obs)?, spec.prior_df, rng)?;
    let imputed: Vec<f64> = normal_noise(&means, draw.residual_sd(), rng)
        .into_iter()
        .map(|v| t.invert(v))
        .collect();
    Ok(Completion::new(data.complete_with(&imputed)?, ImputationEvents::default()))
}

/// Imputes `⁴√x` by linear regression on the untransformed predictors and
/// raises the imputations to the fourth power.
pub fn impute_transform_x(data: &IncompleteDataset, spec: &ImputationSpec, rng: &mut RandomStream) -> Result<Completion> {
    impute_transformed(data, spec, ImputationMethod::TransformX, rng)
}

/// As [`impute_transform_x`], with every predictor `v` replaced by
/// `⁴√(v − min v)`.
pub fn impute_transform_all(
    data: &IncompleteDataset,
    spec: &ImputationSpec,
    rng: &mut RandomStream,
) -> Result<Completion> {
    impute_transformed(data, spec, ImputationMethod::TransformAll, rng)
}

/// A truncated-regression fit ready to impute from.
#[derive(Debug, Clone)]
pub struct PreparedTruncReg {
    pub fit: TruncRegFit,
    /// The fit had to be redone at the fallback bound.
    pub refitted: bool,
    design: DesignMatrix,
}

/// Fits the truncated regression of observed `x` on the predictors at
/// `spec.bound_c`, refitting at `spec.truncreg_fallback_c` if that fails to
/// converge. A second failure is reported as [`Error::MethodFailure`].
pub fn prepare_truncated_regression(data: &IncompleteDataset, spec: &ImputationSpec) -> Result<PreparedTruncReg> {
    let design = predictors(data, ImputationMethod::TruncatedRegression)?;
    let obs_design = design.select(data.observed());
    let obs = data.observed_x();
    let first = truncreg_fit(&obs_design, &obs, spec.bound_c, None);
    let (fit, refitted) = match first {
        Ok(fit) => (fit, false),
        Err(Error::NonConvergence { .. }) => {
            match truncreg_fit(&obs_design, &obs, spec.truncreg_fallback_c, None) {
                Ok(fit) => (fit, true),
                Err(e) => {
                    return Err(Error::MethodFailure(format!(
                        "truncated regression failed at both bounds: {e}"
                    )))
                }
            }
        }
        Err(e) => return Err(e),
    };
    Ok(PreparedTruncReg { fit, refitted, design })
}

impl PreparedTruncReg {
    pub fn impute(&self, data: &IncompleteDataset, rng: &mut RandomStream) -> Result<Completion> {
        let draws = truncreg_impute(&self.fit, &self.design.select(&data.missing()), rng)?;
        let events = ImputationEvents {
            truncreg_refits: usize::from(self.refitted),
            tail_fallbacks: draws.tail_fallbacks,
            ..ImputationEvents::default()
        };
        Ok(Completion::new(data.complete_with(&draws.values)?, events))
    }
}

pub fn impute_truncated_regression(
    data: &IncompleteDataset,
    spec: &ImputationSpec,
    rng: &mut RandomStream,
) -> Result<Completion> {
    prepare_truncated_regression(data, spec)?.impute(data, rng)
}

/// Normal imputation of `x` that ignores the predictors.
pub fn impute_fn_dataset(data: &IncompleteDataset, spec: &ImputationSpec, rng: &mut RandomStream) -> Result<Completion> {
    let x = impute_fn_univariate(data.x_including_hidden(), data.observed(), spec.prior_df, rng)?;
    Ok(Completion::new(x, ImputationEvents::default()))
}

/// One completion by `spec.method`.
pub fn impute_once(data: &IncompleteDataset, spec: &ImputationSpec, rng: &mut RandomStream) -> Result<Completion> {
    spec.validate()?;
    match spec.method {
        ImputationMethod::Linear => impute_linear(data, spec, rng),
        ImputationMethod::LinearCensored => impute_linear_censored(data, spec, rng),
        ImputationMethod::LinearTruncated => impute_linear_truncated(data, spec, rng),
        ImputationMethod::Quadratic => impute_quadratic(data, spec, rng),
        ImputationMethod::TransformX => impute_transform_x(data, spec, rng),
        ImputationMethod::TransformAll => impute_transform_all(data, spec, rng),
        ImputationMethod::TruncatedRegression => impute_truncated_regression(data, spec, rng),
        ImputationMethod::FnUnivariate => impute_fn_dataset(data, spec, rng),
    }
}

/// `spec.m` completions. Completion `k` (from zero) uses the stream
/// `rng.for_imputation(k + 1)`; imputation index 0 is left to data
/// generation and deletion.
pub fn multiply_impute(
    data: &IncompleteDataset,
    spec: &ImputationSpec,
    rng: &RandomStream,
) -> Result<Vec<Completion>> {
    spec.validate()?;
    let streams = (1..=spec.m as u64).map(|k| rng.for_imputation(k));
    if spec.method == ImputationMethod::TruncatedRegression {
        // The fit has no random component, so it is shared by all completions.
        let prepared = prepare_truncated_regression(data, spec)?;
        return streams.map(|mut s| prepared.impute(data, &mut s)).collect();
    }
    streams.map(|mut s| impute_once(data, spec, &mut s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CompleteDataset;
    use crate::experiment::{delete_mcar, gen_bivariate, gen_trivariate};

    fn dataset(seed: u64, trivariate: bool) -> IncompleteDataset {
        let mut rng = RandomStream::from_seed(seed);
        let full = if trivariate {
            gen_trivariate(2.0, 0.5, 100, &mut rng).unwrap()
        } else {
            gen_bivariate(2.0, 0.5, 100, &mut rng).unwrap()
        };
        delete_mcar(full, &mut rng).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in ImputationMethod::EXPERIMENT.into_iter().chain([ImputationMethod::FnUnivariate]) {
            assert_eq!(m.name().parse::<ImputationMethod>().unwrap(), m);
        }
        assert!("hotdeck".parse::<ImputationMethod>().is_err());
    }

    #[test]
    fn every_method_keeps_observed_values() {
        for trivariate in [false, true] {
            let data = dataset(3, trivariate);
            for method in ImputationMethod::EXPERIMENT.into_iter().chain([ImputationMethod::FnUnivariate]) {
                let spec = ImputationSpec::new(method);
                let out = multiply_impute(&data, &spec, &RandomStream::from_seed(9)).unwrap();
                assert_eq!(out.len(), 5);
                for c in &out {
                    for (i, v) in c.x.iter().enumerate() {
                        match data.x(i) {
                            Some(o) => assert_eq!(v.to_bits(), o.to_bits(), "{method}"),
                            None => assert!(v.is_finite(), "{method}"),
                        }
                    }
                    if let Some(lo) = method.lower_limit(&spec) {
                        assert!(c.x.iter().all(|&v| v >= lo), "{method}");
                    }
                }
            }
        }
    }

    #[test]
    fn bounded_variants_change_only_low_imputations() {
        let data = dataset(5, false);
        let rng = RandomStream::from_seed(2);
        let plain = multiply_impute(&data, &ImputationSpec::new(ImputationMethod::Linear), &rng).unwrap();
        for method in [ImputationMethod::LinearCensored, ImputationMethod::LinearTruncated] {
            let bounded = multiply_impute(&data, &ImputationSpec::new(method), &rng).unwrap();
            for (p, b) in plain.iter().zip(&bounded) {
                for (a, b) in p.x.iter().zip(&b.x) {
                    if *a >= 0.0 {
                        assert_eq!(a, b);
                    } else {
                        assert!(*b >= 0.0 || method == ImputationMethod::LinearTruncated);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_fit_is_degenerate() {
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        let x: Vec<f64> = y.iter().map(|v| 2.0 * v + 1.0).collect();
        let mut mask = vec![true; 10];
        mask[4] = false;
        let data = IncompleteDataset::new(CompleteDataset::new(x, y, None).unwrap(), mask).unwrap();
        let mut rng = RandomStream::from_seed(1);
        let err = impute_linear(&data, &ImputationSpec::new(ImputationMethod::Linear), &mut rng).unwrap_err();
        assert_eq!(err, Error::DegenerateFit);
    }

    #[test]
    fn constant_y_makes_quadratic_singular() {
        let x: Vec<f64> = (0..10).map(|i| f64::from(i) * 0.37).collect();
        let mut mask = vec![true; 10];
        mask[0] = false;
        let data = IncompleteDataset::new(CompleteDataset::new(x, vec![2.0; 10], None).unwrap(), mask).unwrap();
        let mut rng = RandomStream::from_seed(1);
        let err = impute_quadratic(&data, &ImputationSpec::new(ImputationMethod::Quadratic), &mut rng).unwrap_err();
        assert_eq!(err, Error::SingularDesign);
    }

    #[test]
    fn negative_observed_x_is_rejected_by_transforms() {
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        let mut x: Vec<f64> = y.iter().map(|v| v * 0.5 + 0.1 * (v * 7.0).sin()).collect();
        x[2] = -0.5;
        let mut mask = vec![true; 10];
        mask[5] = false;
        let data = IncompleteDataset::new(CompleteDataset::new(x, y, None).unwrap(), mask).unwrap();
        let mut rng = RandomStream::from_seed(1);
        let spec = ImputationSpec::new(ImputationMethod::TransformX);
        assert!(matches!(impute_transform_x(&data, &spec, &mut rng), Err(Error::InvalidData(_))));
    }

    #[test]
    fn zero_imputations_is_invalid() {
        let data = dataset(1, false);
        let mut spec = ImputationSpec::new(ImputationMethod::Linear);
        spec.m = 0;
        assert!(multiply_impute(&data, &spec, &RandomStream::from_seed(1)).is_err());
    }
}

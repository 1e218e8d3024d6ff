//! Imputing a single variable from a normal model, with no predictors.

use crate::bounded::{match_censored, match_truncated, BoundKind, MomentPair};
use crate::error::{Error, Result};
use crate::regression::{mean_var, posterior_draw_univariate};
use crate::rng::RandomStream;
use crate::sampling::{sample_normal, sample_truncated_normal};

use super::bounds::{apply_censoring, apply_truncation_rejection};
use super::transform::{TransformKind, TransformSpec};
use super::{Completion, ImputationEvents, ImputationSpec};

fn observed_values(values: &[f64], observed: &[bool]) -> Result<Vec<f64>> {
    if values.len() != observed.len() {
        return Err(Error::InvalidData("mask length differs from the values".into()));
    }
    Ok(values
        .iter()
        .zip(observed)
        .filter(|(_, &o)| o)
        .map(|(&v, _)| v)
        .collect())
}

fn fill(values: &[f64], observed: &[bool], imputed: &[f64]) -> Vec<f64> {
    let mut it = imputed.iter();
    values
        .iter()
        .zip(observed)
        .map(|(&v, &o)| if o { v } else { *it.next().unwrap_or(&f64::NAN) })
        .collect()
}

/// Posterior-drawn `(μ, σ)` from the observed values.
fn draw_params(obs: &[f64], prior_df: u32, rng: &mut RandomStream) -> Result<(f64, f64)> {
    if obs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: obs.len(),
        });
    }
    let (mean, var) = mean_var(obs);
    let draw = posterior_draw_univariate(obs.len(), mean, var, prior_df, rng)?;
    Ok((draw.coefficients[0], draw.residual_sd()))
}

/// Normal draws for the missing entries, plus the parameters used. `None`
/// when nothing is missing.
fn normal_draws(
    obs: &[f64],
    n_mis: usize,
    prior_df: u32,
    rng: &mut RandomStream,
) -> Result<Option<((f64, f64), Vec<f64>)>> {
    if n_mis == 0 {
        return Ok(None);
    }
    let (mu, sd) = draw_params(obs, prior_df, rng)?;
    let draws = (0..n_mis).map(|_| sample_normal(mu, sd, rng)).collect();
    Ok(Some(((mu, sd), draws)))
}

/// Imputes the missing entries as though the variable were normal, with
/// mean and variance taken from a posterior draw given the observed values.
///
/// With nothing missing the input comes back unchanged and no random
/// numbers are consumed.
pub fn impute_fn_univariate(
    values: &[f64],
    observed: &[bool],
    prior_df: u32,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    let obs = observed_values(values, observed)?;
    match normal_draws(&obs, values.len() - obs.len(), prior_df, rng)? {
        None => Ok(values.to_vec()),
        Some((_, imputed)) => Ok(fill(values, observed, &imputed)),
    }
}

/// Transforms the observed values, imputes on the transformed scale and
/// maps the imputations back.
pub fn impute_univariate_transformed(
    values: &[f64],
    observed: &[bool],
    kind: TransformKind,
    prior_df: u32,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    let spec = TransformSpec::new(kind);
    let t_obs = spec.apply_all(&observed_values(values, observed)?)?;
    match normal_draws(&t_obs, values.len() - t_obs.len(), prior_df, rng)? {
        None => Ok(values.to_vec()),
        Some((_, t_imp)) => {
            let imputed: Vec<f64> = t_imp.into_iter().map(|t| spec.invert(t)).collect();
            Ok(fill(values, observed, &imputed))
        }
    }
}

/// Normal imputation under the lower bound `spec.bound_c`.
///
/// With `matched == false` the imputations are the plain normal draws of
/// [`impute_fn_univariate`], then censored, or redrawn by rejection from the
/// same normal. With `matched == true` the pre-bound normal is chosen so the
/// imputations *after* the bound have the posterior-drawn mean and
/// variance; truncated values are then drawn by inverse CDF.
pub fn impute_univariate_bounded(
    values: &[f64],
    observed: &[bool],
    kind: BoundKind,
    matched: bool,
    spec: &ImputationSpec,
    rng: &mut RandomStream,
) -> Result<Completion> {
    let c = spec.bound_c;
    let obs = observed_values(values, observed)?;
    let n_mis = values.len() - obs.len();
    let mut events = ImputationEvents::default();
    if n_mis == 0 {
        return Ok(Completion::new(values.to_vec(), events));
    }
    let imputed = if matched {
        let (mu, sd) = draw_params(&obs, spec.prior_df, rng)?;
        let target = MomentPair::new(mu, sd * sd)?;
        match kind {
            BoundKind::Censor => {
                let pre = match_censored(target, c)?;
                let raw: Vec<f64> = (0..n_mis)
                    .map(|_| sample_normal(pre.pre_mean, pre.pre_sd, rng))
                    .collect();
                apply_censoring(&raw, c)
            }
            BoundKind::Truncate => {
                let pre = match_truncated(target, c)?;
                (0..n_mis)
                    .map(|_| sample_truncated_normal(pre.pre_mean, pre.pre_sd, c, rng))
                    .collect::<Result<_>>()?
            }
        }
    } else {
        let Some(((mu, sd), mut draws)) = normal_draws(&obs, n_mis, spec.prior_df, rng)? else {
            unreachable!("n_mis > 0");
        };
        match kind {
            BoundKind::Censor => apply_censoring(&draws, c),
            BoundKind::Truncate => {
                for v in draws.iter_mut().filter(|v| **v < c) {
                    let r = apply_truncation_rejection(
                        |s| sample_normal(mu, sd, s),
                        c,
                        spec.rejection_cap,
                        spec.rejection_fallback_c,
                        rng,
                    );
                    events.record_rejection(&r);
                    *v = r.value;
                }
                draws
            }
        }
    };
    Ok(Completion::new(fill(values, observed, &imputed), events))
}

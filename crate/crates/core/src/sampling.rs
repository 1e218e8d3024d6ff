//! Random variates: normal, chi-square, standard exponential and the
//! left-truncated normal.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::special;

/// Smallest upper-tail mass for which truncated sampling is attempted.
pub const MIN_TAIL_MASS: f64 = 1e-300;

pub fn sample_standard_normal(rng: &mut RandomStream) -> f64 {
    rng.sample(StandardNormal)
}

pub fn sample_normal(mean: f64, sd: f64, rng: &mut RandomStream) -> f64 {
    mean + sd * sample_standard_normal(rng)
}

/// Standard exponential, `Exp(1)`.
pub fn sample_exp1(rng: &mut RandomStream) -> f64 {
    rng.sample(Exp1)
}

/// Chi-square draw with `nu` degrees of freedom (mean `nu`, variance `2 nu`).
pub fn sample_chi_square(nu: f64, rng: &mut RandomStream) -> Result<f64> {
    chi_square(nu).map(|d| d.sample(rng))
}

/// Fills `out` with chi-square draws, building the sampler once.
pub fn fill_chi_square(nu: f64, out: &mut [f64], rng: &mut RandomStream) -> Result<()> {
    let dist = chi_square(nu)?;
    for v in out {
        *v = dist.sample(rng);
    }
    Ok(())
}

fn chi_square(nu: f64) -> Result<ChiSquared<f64>> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "chi-square degrees of freedom must be positive, got {nu}"
        )));
    }
    ChiSquared::new(nu).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Draw from `N(mu, sigma²)` conditioned on `x ≥ lower`, by inverting the
/// upper-tail CDF.
///
/// Working in the upper tail keeps full precision when the bound sits far
/// above the mean, which is exactly where rejection sampling stalls.
pub fn sample_truncated_normal(
    mu: f64,
    sigma: f64,
    lower: f64,
    rng: &mut RandomStream,
) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() || lower.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "truncated normal needs finite mu and positive sigma, got mu={mu}, sigma={sigma}, lower={lower}"
        )));
    }
    if lower == f64::NEG_INFINITY {
        return Ok(sample_normal(mu, sigma, rng));
    }
    let a = (lower - mu) / sigma;
    let tail = special::sf(a);
    if tail < MIN_TAIL_MASS {
        return Err(Error::UnreachableBound(MIN_TAIL_MASS));
    }
    let v = rng.open01() * tail;
    let z = (-special::quantile(v)).max(a);
    Ok((mu + sigma * z).max(lower))
}

//! Standard normal special functions and the truncation geometry of a
//! lower bound.
//!
//! The checked entry points (`std_normal_*`, [`truncation_geometry`]) reject
//! invalid input. The crate-internal helpers skip the checks and are used on
//! hot paths where the arguments are known to be valid.

use statrs::function::erf;

use crate::error::{Error, Result};

/// `1 / sqrt(2π)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `ln(sqrt(2π))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Above this standardized bound the Mills ratio is taken from its continued
/// fraction rather than from `φ / (1 − Φ)`.
const TAIL_SWITCH: f64 = 6.0;
const CONTINUED_FRACTION_DEPTH: u32 = 120;

/// Standard normal density `φ(z)`.
pub fn std_normal_pdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "normal density needs a finite argument, got {z}"
        )));
    }
    Ok(pdf(z))
}

/// Standard normal CDF `Φ(z)`. Infinite arguments map to 0 and 1.
pub fn std_normal_cdf(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::InvalidArgument("normal CDF of NaN".into()));
    }
    Ok(cdf(z))
}

/// Inverse of [`std_normal_cdf`] on the open unit interval.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "normal quantile needs 0 < p < 1, got {p}"
        )));
    }
    Ok(quantile(p))
}

#[inline]
pub(crate) fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
pub(crate) fn cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(z)`, accurate for large positive `z`.
#[inline]
pub(crate) fn sf(z: f64) -> f64 {
    cdf(-z)
}

pub(crate) fn quantile(p: f64) -> f64 {
    let x = -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // One Halley step against the CDF.
    let (err, density) = if x < 0.0 {
        (cdf(x) - p, pdf(x))
    } else {
        ((1.0 - p) - sf(x), pdf(x))
    };
    if density == 0.0 {
        return x;
    }
    let u = err / density;
    x - u / (1.0 + 0.5 * x * u)
}

/// `ln(1 − Φ(z))` without underflow for large `z`.
pub(crate) fn ln_sf(z: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    if z <= TAIL_SWITCH {
        sf(z).ln()
    } else {
        // 1 − Φ(z) = φ(z) / λ(z)
        let (lambda, _) = hazard(z);
        -0.5 * z * z - LN_SQRT_2PI - lambda.ln()
    }
}

/// Mills ratio `λ(z) = φ(z) / (1 − Φ(z))` together with `λ(z) − z`.
///
/// The second component is returned separately because it is the quantity
/// the moment formulas need, and forming it by subtraction loses every
/// significant digit once `z` is large.
pub(crate) fn hazard(z: f64) -> (f64, f64) {
    if z == f64::NEG_INFINITY {
        return (0.0, f64::INFINITY);
    }
    if z == f64::INFINITY {
        return (f64::INFINITY, 0.0);
    }
    if z <= TAIL_SWITCH {
        let lambda = pdf(z) / sf(z);
        (lambda, lambda - z)
    } else {
        // λ(z) = z + 1/(z + 2/(z + 3/(z + ...)))
        let mut f = z;
        for k in (2..=CONTINUED_FRACTION_DEPTH).rev() {
            f = z + f64::from(k) / f;
        }
        let gap = 1.0 / f;
        (z + gap, gap)
    }
}

/// Everything the censored/truncated moment formulas need about a lower
/// bound `c` applied to `N(μ, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationGeometry {
    /// Standardized bound `(c − μ) / σ`.
    pub z_c: f64,
    /// `φ(z_c)`
    pub phi: f64,
    /// Left-tail mass `Φ(z_c)`, the probability of falling below the bound.
    pub pi_c: f64,
    /// Upper-tail mass `1 − Φ(z_c)`, computed directly rather than by subtraction.
    pub upper: f64,
    /// Mills ratio `φ(z_c) / (1 − Φ(z_c))`.
    pub lambda_c: f64,
    /// `λ_c − z_c`, kept separately for accuracy in the far tail.
    pub gap: f64,
    /// `λ_c (λ_c − z_c)`; `1 − δ_c` is the variance shrink factor of truncation.
    pub delta_c: f64,
}

impl TruncationGeometry {
    /// Geometry at a standardized bound. `z = −∞` is the no-bound limit.
    pub fn at(z_c: f64) -> Self {
        if z_c == f64::NEG_INFINITY {
            return Self {
                z_c,
                phi: 0.0,
                pi_c: 0.0,
                upper: 1.0,
                lambda_c: 0.0,
                gap: f64::INFINITY,
                delta_c: 0.0,
            };
        }
        let (lambda_c, gap) = hazard(z_c);
        Self {
            z_c,
            phi: pdf(z_c),
            pi_c: cdf(z_c),
            upper: sf(z_c),
            lambda_c,
            gap,
            delta_c: lambda_c * gap,
        }
    }

    /// `true` when the bound has no effect (`c = −∞`).
    pub fn is_inactive(&self) -> bool {
        self.z_c == f64::NEG_INFINITY
    }
}

/// Truncation geometry of the lower bound `c` for `N(mu_pre, sigma_pre²)`.
///
/// `c = −∞` is accepted as the "no bound" sentinel.
pub fn truncation_geometry(mu_pre: f64, sigma_pre: f64, c: f64) -> Result<TruncationGeometry> {
    if !(sigma_pre > 0.0) || !sigma_pre.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "pre-bound standard deviation must be positive, got {sigma_pre}"
        )));
    }
    if !mu_pre.is_finite() || c.is_nan() || c == f64::INFINITY {
        return Err(Error::InvalidArgument(format!(
            "invalid bound geometry: mu_pre={mu_pre}, c={c}"
        )));
    }
    Ok(TruncationGeometry::at((c - mu_pre) / sigma_pre))
}

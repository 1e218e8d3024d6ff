//! Quantities estimated on each completed dataset, their population values,
//! and point-estimate combining across imputations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::dataset::CompleteDataset;
use crate::error::{Error, Result};
use crate::experiment::{y_error_variance, z_error_variance, Design, TRIVARIATE_R2};
use crate::regression::{mean_var, ols_fit, DesignMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimand {
    XMean,
    XSd,
    XSkew,
    /// Slope of `y` on `x` (bivariate).
    Slope,
    /// Coefficient of `x` in the regression of `z` on `(x, y)`.
    SlopeX,
    /// Coefficient of `y` in the regression of `z` on `(x, y)`.
    SlopeY,
    Intercept,
    ResidSd,
    R2,
}

impl Estimand {
    pub const BIVARIATE: [Estimand; 7] = [
        Estimand::XMean,
        Estimand::XSd,
        Estimand::XSkew,
        Estimand::Slope,
        Estimand::Intercept,
        Estimand::ResidSd,
        Estimand::R2,
    ];

    pub const TRIVARIATE: [Estimand; 8] = [
        Estimand::XMean,
        Estimand::XSd,
        Estimand::XSkew,
        Estimand::SlopeX,
        Estimand::SlopeY,
        Estimand::Intercept,
        Estimand::ResidSd,
        Estimand::R2,
    ];

    pub fn for_design(design: Design) -> &'static [Estimand] {
        match design {
            Design::Bivariate => &Self::BIVARIATE,
            Design::Trivariate => &Self::TRIVARIATE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Estimand::XMean => "x_mean",
            Estimand::XSd => "x_sd",
            Estimand::XSkew => "x_skew",
            Estimand::Slope => "slope",
            Estimand::SlopeX => "slope_x",
            Estimand::SlopeY => "slope_y",
            Estimand::Intercept => "intercept",
            Estimand::ResidSd => "resid_sd",
            Estimand::R2 => "r2",
        }
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimand::TRIVARIATE
            .into_iter()
            .chain([Estimand::Slope])
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown estimand {s:?}")))
    }
}

/// Named estimates, ordered by [`Estimand`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimateSet(BTreeMap<Estimand, f64>);

impl EstimateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: Estimand, v: f64) {
        self.0.insert(e, v);
    }

    pub fn get(&self, e: Estimand) -> Option<f64> {
        self.0.get(&e).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Estimand, f64)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self(self.0.iter().map(|(&k, &v)| (k, a * v)).collect())
    }
}

impl FromIterator<(Estimand, f64)> for EstimateSet {
    fn from_iter<I: IntoIterator<Item = (Estimand, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Sample skewness `g₁ = m₃ / m₂^{3/2}` from central moments with the `n`
/// divisor.
pub fn sample_skewness(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            available: n,
        });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (m2, m3) = values.iter().fold((0.0, 0.0), |(a, b), v| {
        let d = v - mean;
        (a + d * d, b + d * d * d)
    });
    let (m2, m3) = (m2 / nf, m3 / nf);
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSample);
    }
    Ok(m3 / m2.powf(1.5))
}

/// All estimands on a complete dataset. The design is read off the
/// presence of `z`.
pub fn analyze(data: &CompleteDataset) -> Result<EstimateSet> {
    let x = &data.x;
    let (mean, var) = mean_var(x);
    let mut out = EstimateSet::new();
    out.insert(Estimand::XMean, mean);
    out.insert(Estimand::XSd, var.sqrt());
    out.insert(Estimand::XSkew, sample_skewness(x)?);
    let fit = match &data.z {
        None => {
            let fit = ols_fit(&DesignMatrix::with_intercept(&[x])?, &data.y)?;
            out.insert(Estimand::Slope, fit.coefficients[1]);
            fit
        }
        Some(z) => {
            let fit = ols_fit(&DesignMatrix::with_intercept(&[x, &data.y])?, z)?;
            out.insert(Estimand::SlopeX, fit.coefficients[1]);
            out.insert(Estimand::SlopeY, fit.coefficients[2]);
            fit
        }
    };
    out.insert(Estimand::Intercept, fit.coefficients[0]);
    out.insert(Estimand::ResidSd, fit.residual_variance.sqrt());
    out.insert(Estimand::R2, fit.r_squared());
    Ok(out)
}

/// Component-wise mean of the estimates from several completions.
pub fn mi_combine(sets: &[EstimateSet]) -> Result<EstimateSet> {
    let first = sets.first().ok_or(Error::Empty("no estimate sets to combine"))?;
    let k = sets.len() as f64;
    first
        .iter()
        .map(|(e, _)| {
            let mut total = 0.0;
            for s in sets {
                total += s
                    .get(e)
                    .ok_or_else(|| Error::InvalidData(format!("estimate set lacks {e}")))?;
            }
            Ok((e, total / k))
        })
        .collect()
}

/// Population values of every estimand for a design cell.
pub fn true_values(design: Design, nu: f64, rho2: f64) -> EstimateSet {
    let mut out = EstimateSet::new();
    out.insert(Estimand::XMean, nu);
    out.insert(Estimand::XSd, (2.0 * nu).sqrt());
    out.insert(Estimand::XSkew, (8.0 / nu).sqrt());
    out.insert(Estimand::Intercept, 1.0);
    match design {
        Design::Bivariate => {
            out.insert(Estimand::Slope, 1.0);
            out.insert(Estimand::ResidSd, y_error_variance(nu, rho2).sqrt());
            out.insert(Estimand::R2, rho2);
        }
        Design::Trivariate => {
            out.insert(Estimand::SlopeX, 1.0);
            out.insert(Estimand::SlopeY, 1.0);
            out.insert(Estimand::ResidSd, z_error_variance(nu, rho2).sqrt());
            out.insert(Estimand::R2, TRIVARIATE_R2);
        }
    }
    out
}

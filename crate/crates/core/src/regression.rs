//! Ordinary least squares and Bayesian posterior draws of its parameters.
//!
//! Posterior draws follow the usual noninformative-prior recipe: the
//! residual variance is redrawn as `σ̂² (n − p) / U` with
//! `U ~ χ²(n − p + ν_prior)`, then the coefficients are drawn from a normal
//! centred on the OLS estimate with covariance `σ²_PD (XᵀX)⁻¹`. With an
//! intercept-only design this is the univariate draw of
//! [`posterior_draw_univariate`].

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::RandomStream;
use crate::sampling::{sample_chi_square, sample_standard_normal};

/// SSE below this fraction of `Σ y²` is treated as an exact fit.
const EXACT_FIT_TOLERANCE: f64 = 1e-20;

/// Dense `n × p` design matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    /// Builds `[1, col_1, ..., col_k]`. All columns must have equal length.
    pub fn with_intercept(columns: &[&[f64]]) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidData("design columns differ in length".into()));
        }
        let p = columns.len() + 1;
        let mut data = Vec::with_capacity(n * p);
        for i in 0..n {
            data.push(1.0);
            data.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Self { n, p, data })
    }

    /// Intercept-only design with `n` rows.
    pub fn intercept_only(n: usize) -> Self {
        Self {
            n,
            p: 1,
            data: vec![1.0; n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidData("design rows differ in length".into()));
        }
        Ok(Self {
            n: rows.len(),
            p,
            data: rows.concat(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p.max(1)).take(self.n)
    }

    /// Keeps only the rows where `keep` is true.
    pub fn select(&self, keep: &[bool]) -> Self {
        let mut data = Vec::new();
        let mut n = 0;
        for (row, &k) in self.rows().zip(keep) {
            if k {
                data.extend_from_slice(row);
                n += 1;
            }
        }
        Self { n, p: self.p, data }
    }

    fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.p);
        for row in self.rows() {
            for a in 0..self.p {
                for b in 0..=a {
                    g[(a, b)] += row[a] * row[b];
                }
            }
        }
        for a in 0..self.p {
            for b in 0..a {
                g[(b, a)] = g[(a, b)];
            }
        }
        g
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct RegressionFit {
    /// Intercept first, then one slope per predictor column.
    pub coefficients: Vec<f64>,
    /// `SSE / (n_obs − p)`.
    pub residual_variance: f64,
    /// `residual_variance · (XᵀX)⁻¹`.
    pub coefficient_covariance: Matrix,
    /// `(XᵀX)⁻¹`
    pub unscaled_covariance: Matrix,
    pub n_obs: usize,
    pub p: usize,
    pub sse: f64,
    /// Total sum of squares about the mean of the response.
    pub tss: f64,
    exact_fit: bool,
}

impl RegressionFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        dot(&self.coefficients, row)
    }

    pub fn r_squared(&self) -> f64 {
        if self.tss > 0.0 {
            (1.0 - self.sse / self.tss).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact_fit
    }
}

/// Least squares through the normal equations.
pub fn ols_fit(design: &DesignMatrix, response: &[f64]) -> Result<RegressionFit> {
    let (n, p) = (design.n_rows(), design.n_cols());
    if response.len() != n {
        return Err(Error::InvalidData(format!(
            "{} responses for {n} design rows",
            response.len()
        )));
    }
    if n <= p {
        return Err(Error::InsufficientData {
            needed: p + 1,
            available: n,
        });
    }
    if response.iter().chain(&design.data).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in regression data".into()));
    }
    let chol = design.gram().cholesky()?;
    let xty: Vec<f64> = (0..p)
        .map(|j| design.rows().zip(response).map(|(r, y)| r[j] * y).sum())
        .collect();
    let coefficients = chol.solve(&xty);
    let sse: f64 = design
        .rows()
        .zip(response)
        .map(|(r, y)| (y - dot(&coefficients, r)).powi(2))
        .sum();
    let mean = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|y| (y - mean).powi(2)).sum();
    let sum_sq: f64 = response.iter().map(|y| y * y).sum();
    let residual_variance = sse / (n - p) as f64;
    let unscaled_covariance = chol.inverse();
    Ok(RegressionFit {
        coefficient_covariance: unscaled_covariance.scaled(residual_variance),
        unscaled_covariance,
        coefficients,
        residual_variance,
        n_obs: n,
        p,
        sse,
        tss,
        exact_fit: sse <= EXACT_FIT_TOLERANCE * sum_sq,
    })
}

/// One posterior draw of regression (or location-scale) parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub coefficients: Vec<f64>,
    pub residual_variance: f64,
    /// The chi-square variate `U` behind `residual_variance`.
    pub chi_square_draw: f64,
    pub prior_df: u32,
}

impl PosteriorDraw {
    pub fn residual_sd(&self) -> f64 {
        self.residual_variance.sqrt()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        dot(&self.coefficients, row)
    }
}

/// Posterior draw of `(μ, σ²)` from `n_obs` values with sample `mean` and
/// sample `variance` (n − 1 divisor).
pub fn posterior_draw_univariate(
    n_obs: usize,
    mean: f64,
    variance: f64,
    prior_df: u32,
    rng: &mut RandomStream,
) -> Result<PosteriorDraw> {
    if n_obs < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: n_obs,
        });
    }
    if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
        return Err(Error::DegenerateFit);
    }
    let df = (n_obs - 1) as f64;
    let u = sample_chi_square(df + f64::from(prior_df), rng)?;
    let residual_variance = variance * df / u;
    let mu = mean + (residual_variance / n_obs as f64).sqrt() * sample_standard_normal(rng);
    Ok(PosteriorDraw {
        coefficients: vec![mu],
        residual_variance,
        chi_square_draw: u,
        prior_df,
    })
}

/// Posterior draw of the coefficients and residual variance of `fit`.
pub fn posterior_draw_regression(
    fit: &RegressionFit,
    prior_df: u32,
    rng: &mut RandomStream,
) -> Result<PosteriorDraw> {
    if fit.exact_fit || !(fit.residual_variance > 0.0) {
        return Err(Error::DegenerateFit);
    }
    let df = (fit.n_obs - fit.p) as f64;
    let u = sample_chi_square(df + f64::from(prior_df), rng)?;
    let residual_variance = fit.residual_variance * df / u;
    let factor = fit.unscaled_covariance.scaled(residual_variance).cholesky()?;
    let z: Vec<f64> = (0..fit.p).map(|_| sample_standard_normal(rng)).collect();
    let shift = factor.correlate(&z);
    let coefficients = fit
        .coefficients
        .iter()
        .zip(shift)
        .map(|(b, d)| b + d)
        .collect();
    Ok(PosteriorDraw {
        coefficients,
        residual_variance,
        chi_square_draw: u,
        prior_df,
    })
}

/// Mean and `n − 1` variance.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

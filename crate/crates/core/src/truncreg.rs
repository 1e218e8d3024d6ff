//! Maximum-likelihood regression for a response observed only above a lower
//! bound, and imputation from the fitted model.
//!
//! The optimizer works on `(β, θ)` with `θ = ln σ`. A short Nelder–Mead
//! polish from the OLS start is followed by BFGS with a backtracking line
//! search, so every accepted step increases the log-likelihood.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regression::{dot, ols_fit, DesignMatrix};
use crate::rng::RandomStream;
use crate::sampling::{sample_standard_normal, sample_truncated_normal};
use crate::special::{self, LN_SQRT_2PI};

pub const MAX_ITERATIONS: usize = 500;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MIN_SIGMA: f64 = 1e-8;
const NELDER_MEAD_ITERATIONS: usize = 200;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncRegFit {
    pub coefficients: Vec<f64>,
    pub sigma: f64,
    pub lower_bound: f64,
    pub converged: bool,
    /// Quasi-Newton iterations used.
    pub iterations: usize,
    /// Inverse of the negative Hessian in `(β, ln σ)`: the asymptotic
    /// covariance of the estimates.
    pub covariance: Matrix,
    pub loglik: f64,
    /// Log-likelihood after each accepted step, starting from the OLS value.
    pub history: Vec<f64>,
}

impl TruncRegFit {
    /// Parameter vector `(β, ln σ)`.
    pub fn params(&self) -> Vec<f64> {
        let mut v = self.coefficients.clone();
        v.push(self.sigma.ln());
        v
    }

    /// Asymptotic standard errors of `(β, ln σ)`.
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.covariance.dim())
            .map(|i| self.covariance[(i, i)].sqrt())
            .collect()
    }
}

/// Values imputed by [`truncreg_impute`].
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDraws {
    pub values: Vec<f64>,
    /// Rows whose predicted mean sat so far below the bound that the tail
    /// mass underflowed; these received `c` plus a tiny jitter.
    pub tail_fallbacks: usize,
}

struct Problem<'a> {
    design: &'a DesignMatrix,
    response: &'a [f64],
    c: f64,
}

impl Problem<'_> {
    fn loglik(&self, params: &[f64]) -> f64 {
        let p = self.design.n_cols();
        let (beta, theta) = (&params[..p], params[p]);
        let inv = (-theta).exp();
        let mut total = 0.0;
        for (row, &x) in self.design.rows().zip(self.response) {
            let mu = dot(beta, row);
            let r = (x - mu) * inv;
            let tail = if self.c == f64::NEG_INFINITY {
                0.0
            } else {
                special::ln_sf((self.c - mu) * inv)
            };
            total += -LN_SQRT_2PI - 0.5 * r * r - theta - tail;
        }
        if total.is_finite() {
            total
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Per-row `(r, a, λ(a), δ(a))`, with `aλ` and `a²δ` set to zero when
    /// the bound is absent.
    fn terms(&self, params: &[f64], row: &[f64], x: f64) -> (f64, f64, f64, f64) {
        let p = self.design.n_cols();
        let inv = (-params[p]).exp();
        let mu = dot(&params[..p], row);
        let r = (x - mu) * inv;
        if self.c == f64::NEG_INFINITY {
            return (r, 0.0, 0.0, 0.0);
        }
        let a = (self.c - mu) * inv;
        let (lambda, gap) = special::hazard(a);
        (r, a, lambda, lambda * gap)
    }

    fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let p = self.design.n_cols();
        let inv = (-params[p]).exp();
        let mut g = vec![0.0; p + 1];
        for (row, &x) in self.design.rows().zip(self.response) {
            let (r, a, lambda, _) = self.terms(params, row, x);
            let w = (r - lambda) * inv;
            for (gj, xj) in g.iter_mut().zip(row) {
                *gj += w * xj;
            }
            g[p] += r * r - 1.0 - a * lambda;
        }
        g
    }

    fn hessian(&self, params: &[f64]) -> Matrix {
        let p = self.design.n_cols();
        let inv = (-params[p]).exp();
        let mut h = Matrix::zeros(p + 1);
        for (row, &x) in self.design.rows().zip(self.response) {
            let (r, a, lambda, delta) = self.terms(params, row, x);
            let bb = -(1.0 - delta) * inv * inv;
            let bt = (lambda - 2.0 * r + delta * a) * inv;
            for i in 0..p {
                for j in 0..=i {
                    h[(i, j)] += bb * row[i] * row[j];
                }
                h[(p, i)] += bt * row[i];
            }
            h[(p, p)] += -2.0 * r * r + a * lambda + a * a * delta;
        }
        for i in 0..=p {
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
        }
        h
    }
}

fn check_inputs(design: &DesignMatrix, response: &[f64], c: f64) -> Result<()> {
    if design.n_rows() != response.len() {
        return Err(Error::InvalidData(format!(
            "design has {} rows but response has {}",
            design.n_rows(),
            response.len()
        )));
    }
    if c.is_nan() || c == f64::INFINITY {
        return Err(Error::InvalidArgument(format!("lower bound must be below +inf, got {c}")));
    }
    if let Some(x) = response.iter().find(|&&x| !(x >= c) || !x.is_finite()) {
        return Err(Error::InvalidData(format!(
            "response value {x} is not a finite value at or above the bound {c}"
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

fn pack(coefficients: &[f64], sigma: f64) -> Vec<f64> {
    let mut v = coefficients.to_vec();
    v.push(sigma.ln());
    v
}

/// Log-likelihood of a normal regression truncated below `c`.
pub fn truncreg_loglik(
    coefficients: &[f64],
    sigma: f64,
    design: &DesignMatrix,
    response: &[f64],
    c: f64,
) -> Result<f64> {
    check_inputs(design, response, c)?;
    check_sigma(sigma)?;
    if coefficients.len() != design.n_cols() {
        return Err(Error::InvalidArgument("coefficient count does not match design".into()));
    }
    let problem = Problem { design, response, c };
    Ok(problem.loglik(&pack(coefficients, sigma)))
}

/// Gradient of [`truncreg_loglik`] with respect to `(β, ln σ)`.
pub fn truncreg_gradient(
    coefficients: &[f64],
    sigma: f64,
    design: &DesignMatrix,
    response: &[f64],
    c: f64,
) -> Result<Vec<f64>> {
    check_inputs(design, response, c)?;
    check_sigma(sigma)?;
    let problem = Problem { design, response, c };
    Ok(problem.gradient(&pack(coefficients, sigma)))
}

/// Hessian of [`truncreg_loglik`] with respect to `(β, ln σ)`.
pub fn truncreg_hessian(
    coefficients: &[f64],
    sigma: f64,
    design: &DesignMatrix,
    response: &[f64],
    c: f64,
) -> Result<Matrix> {
    check_inputs(design, response, c)?;
    check_sigma(sigma)?;
    let problem = Problem { design, response, c };
    Ok(problem.hessian(&pack(coefficients, sigma)))
}

/// Fits the truncated regression by maximum likelihood.
///
/// `init` is `(β, ln σ)`; the OLS fit is used when absent. Fails with
/// [`Error::NonConvergence`] when the gradient does not fall below
/// [`GRADIENT_TOLERANCE`] within [`MAX_ITERATIONS`] steps, when σ collapses
/// below [`MIN_SIGMA`], or when the Hessian at the optimum is not negative
/// definite.
pub fn truncreg_fit(
    design: &DesignMatrix,
    response: &[f64],
    c: f64,
    init: Option<&[f64]>,
) -> Result<TruncRegFit> {
    check_inputs(design, response, c)?;
    let p = design.n_cols();
    if design.n_rows() <= p + 1 {
        return Err(Error::InsufficientData {
            needed: p + 2,
            available: design.n_rows(),
        });
    }
    let start = match init {
        Some(v) if v.len() == p + 1 => v.to_vec(),
        Some(_) => return Err(Error::InvalidArgument("init must hold p + 1 values".into())),
        None => {
            let ols = ols_fit(design, response)?;
            pack(&ols.coefficients, ols.residual_variance.sqrt().max(MIN_SIGMA * 10.0))
        }
    };
    let problem = Problem { design, response, c };
    let start_ll = problem.loglik(&start);
    if !start_ll.is_finite() {
        return Err(Error::InvalidArgument("log-likelihood is not finite at the start".into()));
    }
    let mut history = vec![start_ll];
    let polished = nelder_mead(&problem, start, &mut history);
    let (params, iterations) = bfgs(&problem, polished, &mut history)?;
    let sigma = params[p].exp();
    let neg_h = problem.hessian(&params).scaled(-1.0);
    let covariance = neg_h
        .cholesky()
        .map_err(|_| Error::NonConvergence {
            iterations,
            reason: "Hessian is not negative definite at the optimum".into(),
        })?
        .inverse();
    Ok(TruncRegFit {
        coefficients: params[..p].to_vec(),
        sigma,
        lower_bound: c,
        converged: true,
        iterations,
        covariance,
        loglik: *history.last().unwrap_or(&start_ll),
        history,
    })
}

fn nelder_mead(problem: &Problem, start: Vec<f64>, history: &mut Vec<f64>) -> Vec<f64> {
    let dim = start.len();
    let f = |x: &[f64]| -problem.loglik(x);
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
    simplex.push((f(&start), start.clone()));
    for i in 0..dim {
        let mut v = start.clone();
        v[i] += 0.1 * v[i].abs().max(1.0);
        simplex.push((f(&v), v));
    }
    let best_start = simplex[0].0;
    for _ in 0..NELDER_MEAD_ITERATIONS {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        if simplex[dim].0 - simplex[0].0 <= 1e-10 * (1.0 + simplex[0].0.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(_, v)| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let towards = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].1)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let reflected = towards(-1.0);
        let fr = f(&reflected);
        if fr < simplex[0].0 {
            let expanded = towards(-2.0);
            let fe = f(&expanded);
            simplex[dim] = if fe < fr { (fe, expanded) } else { (fr, reflected) };
        } else if fr < simplex[dim - 1].0 {
            simplex[dim] = (fr, reflected);
        } else {
            let contracted = if fr < simplex[dim].0 { towards(-0.5) } else { towards(0.5) };
            let fc = f(&contracted);
            if fc < simplex[dim].0.min(fr) {
                simplex[dim] = (fc, contracted);
            } else {
                let best = simplex[0].1.clone();
                for (fv, v) in simplex.iter_mut().skip(1) {
                    for (vj, bj) in v.iter_mut().zip(&best) {
                        *vj = bj + 0.5 * (*vj - bj);
                    }
                    *fv = f(v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (fbest, best) = simplex.swap_remove(0);
    if fbest < best_start {
        history.push(-fbest);
        best
    } else {
        start
    }
}

fn bfgs(problem: &Problem, mut x: Vec<f64>, history: &mut Vec<f64>) -> Result<(Vec<f64>, usize)> {
    let dim = x.len();
    let p = dim - 1;
    let mut ll = problem.loglik(&x);
    let mut g = problem.gradient(&x);
    let mut inv = initial_inverse(problem, &x);
    for iter in 0..=MAX_ITERATIONS {
        if x[p].exp() < MIN_SIGMA {
            return Err(Error::NonConvergence {
                iterations: iter,
                reason: format!("sigma collapsed below {MIN_SIGMA:e}"),
            });
        }
        if norm(&g) < GRADIENT_TOLERANCE {
            return Ok((x, iter));
        }
        if iter == MAX_ITERATIONS {
            break;
        }
        // Ascent direction d = inv · g, where inv approximates (−H)⁻¹.
        let mut d = inv.mul_vec(&g);
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            inv = Matrix::identity(dim);
            d = g.clone();
            slope = dot(&g, &d);
        }
        let mut t = 1.0;
        let (next, next_ll) = loop {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let cand_ll = problem.loglik(&cand);
            if cand_ll >= ll + ARMIJO * t * slope {
                break (cand, cand_ll);
            }
            t *= 0.5;
            if t < 1e-20 {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    reason: format!("line search failed with gradient norm {:.3e}", norm(&g)),
                });
            }
        };
        let next_g = problem.gradient(&next);
        let s: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        // Curvature of −ℓ: y = ∇(−ℓ)(next) − ∇(−ℓ)(x).
        let y: Vec<f64> = g.iter().zip(&next_g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            bfgs_update(&mut inv, &s, &y, sy);
        }
        x = next;
        ll = next_ll;
        g = next_g;
        history.push(ll);
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        reason: format!("gradient norm {:.3e} after the iteration cap", norm(&g)),
    })
}

fn initial_inverse(problem: &Problem, x: &[f64]) -> Matrix {
    problem
        .hessian(x)
        .scaled(-1.0)
        .cholesky()
        .map(|ch| ch.inverse())
        .unwrap_or_else(|_| Matrix::identity(x.len()))
}

fn bfgs_update(inv: &mut Matrix, s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let hy = inv.mul_vec(y);
    let yhy = dot(y, &hy);
    let rho = 1.0 / sy;
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Imputes one value per row of `rows` from the fitted model.
///
/// The parameters `(β, ln σ)` are drawn once from their asymptotic normal
/// law, then each value is drawn from the left-truncated normal by inverse
/// CDF. Rows whose tail mass underflows receive the bound plus a jitter
/// below `1e-9` and are counted in [`TruncatedDraws::tail_fallbacks`].
pub fn truncreg_impute(
    fit: &TruncRegFit,
    rows: &DesignMatrix,
    rng: &mut RandomStream,
) -> Result<TruncatedDraws> {
    if !fit.converged {
        return Err(Error::InvalidArgument("cannot impute from an unconverged fit".into()));
    }
    let p = fit.coefficients.len();
    if rows.n_cols() != p {
        return Err(Error::InvalidArgument("rows do not match the fitted design".into()));
    }
    let factor = fit.covariance.cholesky()?;
    let z: Vec<f64> = (0..=p).map(|_| sample_standard_normal(rng)).collect();
    let shift = factor.correlate(&z);
    let drawn: Vec<f64> = fit.params().iter().zip(&shift).map(|(a, b)| a + b).collect();
    let (beta, sigma) = (&drawn[..p], drawn[p].exp().max(MIN_SIGMA));
    let c = fit.lower_bound;
    let mut tail_fallbacks = 0;
    let mut values = Vec::with_capacity(rows.n_rows());
    for row in rows.rows() {
        let mu = dot(beta, row);
        let v = match sample_truncated_normal(mu, sigma, c, rng) {
            Ok(v) => v,
            Err(Error::UnreachableBound(_)) => {
                tail_fallbacks += 1;
                c + 1e-9 * rng.open01()
            }
            Err(e) => return Err(e),
        };
        values.push(v);
    }
    Ok(TruncatedDraws {
        values,
        tail_fallbacks,
    })
}

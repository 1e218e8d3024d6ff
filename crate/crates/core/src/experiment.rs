//! Data generation for the simulation designs and the deletion mechanisms.
//!
//! Bivariate: `X ~ χ²(ν)`, `Y = 1 + X + e` with the error variance chosen so
//! that the population `R²` of `Y` on `X` is the requested level.
//! Trivariate: `(X, Y)` as above, then `Z = 1 + X + Y + e` with the error
//! variance equal to `Var(X + Y)`, which fixes `R²` of `Z` on `(X, Y)` at ½.

use std::fmt;
use std::str::FromStr;

use crate::dataset::{CompleteDataset, IncompleteDataset, MIN_OBSERVED};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::sampling::{fill_chi_square, sample_normal};

pub const NU_LEVELS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
pub const RHO2_LEVELS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
/// `R²` of `Z` on `(X, Y)` in the trivariate design.
pub const TRIVARIATE_R2: f64 = 0.5;
/// Redraws allowed before a deletion mask is declared impossible.
const MAX_MASK_REDRAWS: u32 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Design {
    Bivariate,
    Trivariate,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::Bivariate => "bivariate",
            Design::Trivariate => "trivariate",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bivariate" => Ok(Design::Bivariate),
            "trivariate" => Ok(Design::Trivariate),
            _ => Err(Error::Parse(format!("unknown design {s:?}"))),
        }
    }
}

/// How `x` values are deleted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    /// Each value deleted with probability ½.
    Mcar,
    /// Deleted with probability `F̂(Y)`, concentrating missingness in the
    /// long right tail of `X`.
    Tail,
    /// Deleted with probability `1 − F̂(Y)`.
    Peak,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Mcar, Pattern::Tail, Pattern::Peak];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Mcar => "mcar",
            Pattern::Tail => "tail",
            Pattern::Peak => "peak",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcar" => Ok(Pattern::Mcar),
            "tail" => Ok(Pattern::Tail),
            "peak" => Ok(Pattern::Peak),
            _ => Err(Error::Parse(format!("unknown pattern {s:?}"))),
        }
    }
}

fn check_factors(nu: f64, rho2: f64, n: usize) -> Result<()> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!("nu must be positive, got {nu}")));
    }
    if !(rho2 > 0.0 && rho2 < 1.0) {
        return Err(Error::InvalidArgument(format!("rho2 must lie in (0, 1), got {rho2}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    Ok(())
}

/// Error variance of `Y` given `X`: `Var(X)(1 − R²)/R²` with unit slope.
pub fn y_error_variance(nu: f64, rho2: f64) -> f64 {
    2.0 * nu * (1.0 - rho2) / rho2
}

/// Error variance of `Z` given `(X, Y)`: `Var(X) + Var(Y) + 2 Cov(X, Y)`.
pub fn z_error_variance(nu: f64, rho2: f64) -> f64 {
    let var_x = 2.0 * nu;
    var_x + var_x / rho2 + 2.0 * var_x
}

pub fn gen_bivariate(nu: f64, rho2: f64, n: usize, rng: &mut RandomStream) -> Result<CompleteDataset> {
    check_factors(nu, rho2, n)?;
    let mut x = vec![0.0; n];
    fill_chi_square(nu, &mut x, rng)?;
    let sd = y_error_variance(nu, rho2).sqrt();
    let y = x.iter().map(|&xi| sample_normal(1.0 + xi, sd, rng)).collect();
    CompleteDataset::new(x, y, None)
}

pub fn gen_trivariate(nu: f64, rho2: f64, n: usize, rng: &mut RandomStream) -> Result<CompleteDataset> {
    let base = gen_bivariate(nu, rho2, n, rng)?;
    let sd = z_error_variance(nu, rho2).sqrt();
    let z = base
        .x
        .iter()
        .zip(&base.y)
        .map(|(&xi, &yi)| sample_normal(1.0 + xi + yi, sd, rng))
        .collect();
    CompleteDataset::new(base.x, base.y, Some(z))
}

pub fn generate(design: Design, nu: f64, rho2: f64, n: usize, rng: &mut RandomStream) -> Result<CompleteDataset> {
    match design {
        Design::Bivariate => gen_bivariate(nu, rho2, n, rng),
        Design::Trivariate => gen_trivariate(nu, rho2, n, rng),
    }
}

/// Within-sample ECDF `rank/n` of each value; ties share the largest rank.
pub fn ecdf_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            out[k] = (j + 1) as f64 / n as f64;
        }
        i = j + 1;
    }
    out
}

/// Probability that each `x` is deleted under `pattern`, given `y`.
pub fn deletion_probabilities(y: &[f64], pattern: Pattern) -> Vec<f64> {
    match pattern {
        Pattern::Mcar => vec![0.5; y.len()],
        Pattern::Tail => ecdf_ranks(y),
        Pattern::Peak => ecdf_ranks(y).into_iter().map(|f| 1.0 - f).collect(),
    }
}

/// Deletes `x` values independently with the probabilities of `pattern`.
///
/// A mask leaving fewer than three observed values is redrawn; the count of
/// redraws is kept on the result.
pub fn delete(data: CompleteDataset, pattern: Pattern, rng: &mut RandomStream) -> Result<IncompleteDataset> {
    let probs = deletion_probabilities(&data.y, pattern);
    for redraws in 0..=MAX_MASK_REDRAWS {
        let observed: Vec<bool> = probs.iter().map(|&p| rng.open01() >= p).collect();
        if observed.iter().filter(|&&o| o).count() >= MIN_OBSERVED {
            return IncompleteDataset::with_redraws(data, observed, redraws);
        }
    }
    Err(Error::InsufficientData {
        needed: MIN_OBSERVED,
        available: 0,
    })
}

pub fn delete_mcar(data: CompleteDataset, rng: &mut RandomStream) -> Result<IncompleteDataset> {
    delete(data, Pattern::Mcar, rng)
}

pub fn delete_tail(data: CompleteDataset, rng: &mut RandomStream) -> Result<IncompleteDataset> {
    delete(data, Pattern::Tail, rng)
}

pub fn delete_peak(data: CompleteDataset, rng: &mut RandomStream) -> Result<IncompleteDataset> {
    delete(data, Pattern::Peak, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_variances() {
        assert_eq!(y_error_variance(2.0, 0.5), 4.0);
        assert_eq!(z_error_variance(2.0, 0.5), 20.0);
    }

    #[test]
    fn ecdf_probabilities_for_four_cases() {
        let y = [3.0, 1.0, 4.0, 2.0];
        assert_eq!(deletion_probabilities(&y, Pattern::Tail), vec![0.75, 0.25, 1.0, 0.5]);
        assert_eq!(deletion_probabilities(&y, Pattern::Peak), vec![0.25, 0.75, 0.0, 0.5]);
        assert_eq!(ecdf_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![0.25, 0.75, 0.75, 1.0]);
    }

    #[test]
    fn deletion_respects_certain_outcomes() {
        let mut rng = RandomStream::from_seed(4);
        for _ in 0..200 {
            let data = gen_bivariate(2.0, 0.5, 20, &mut rng).unwrap();
            let top = (0..20).max_by(|&a, &b| data.y[a].total_cmp(&data.y[b])).unwrap();
            let tail = delete_tail(data.clone(), &mut rng).unwrap();
            assert!(!tail.observed()[top]);
            let peak = delete_peak(data.clone(), &mut rng).unwrap();
            assert!(peak.observed()[top]);
            assert_eq!(peak.x_including_hidden(), &data.x[..]);
            assert_eq!(peak.y(), &data.y[..]);
        }
    }

    #[test]
    fn bad_factors_are_rejected() {
        let mut rng = RandomStream::from_seed(1);
        assert!(gen_bivariate(0.0, 0.5, 10, &mut rng).is_err());
        assert!(gen_bivariate(2.0, 1.0, 10, &mut rng).is_err());
        assert!("cube".parse::<Pattern>().is_err());
        assert_eq!("tail".parse::<Pattern>().unwrap(), Pattern::Tail);
        assert_eq!("trivariate".parse::<Design>().unwrap(), Design::Trivariate);
    }
}

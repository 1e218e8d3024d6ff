//! Complete and incomplete datasets. Only `x` ever has missing entries.

use crate::error::{Error, Result};

/// Smallest number of observed `x` values a dataset may carry.
pub const MIN_OBSERVED: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CompleteDataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Present in the trivariate design.
    pub z: Option<Vec<f64>>,
}

impl CompleteDataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Option<Vec<f64>>) -> Result<Self> {
        let n = x.len();
        if y.len() != n || z.as_ref().is_some_and(|z| z.len() != n) {
            return Err(Error::InvalidData("columns differ in length".into()));
        }
        Ok(Self { x, y, z })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// A dataset whose `x` column is partly hidden by a mask.
///
/// The hidden values stay in storage so deletion can be audited; imputation
/// methods only ever read `x` through [`IncompleteDataset::observed_x`] and
/// friends.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteDataset {
    x: Vec<f64>,
    observed: Vec<bool>,
    y: Vec<f64>,
    z: Option<Vec<f64>>,
    mask_redraws: u32,
}

impl IncompleteDataset {
    pub fn new(complete: CompleteDataset, observed: Vec<bool>) -> Result<Self> {
        Self::with_redraws(complete, observed, 0)
    }

    pub(crate) fn with_redraws(
        complete: CompleteDataset,
        observed: Vec<bool>,
        mask_redraws: u32,
    ) -> Result<Self> {
        if observed.len() != complete.len() {
            return Err(Error::InvalidData("mask length differs from the data".into()));
        }
        let n_obs = observed.iter().filter(|&&o| o).count();
        if n_obs < MIN_OBSERVED {
            return Err(Error::InsufficientData {
                needed: MIN_OBSERVED,
                available: n_obs,
            });
        }
        Ok(Self {
            x: complete.x,
            observed,
            y: complete.y,
            z: complete.z,
            mask_redraws,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn n_missing(&self) -> usize {
        self.len() - self.n_observed()
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn missing(&self) -> Vec<bool> {
        self.observed.iter().map(|o| !o).collect()
    }

    /// `x[i]` if it is observed.
    pub fn x(&self, i: usize) -> Option<f64> {
        self.observed[i].then(|| self.x[i])
    }

    /// Observed `x` values in row order.
    pub fn observed_x(&self) -> Vec<f64> {
        self.x
            .iter()
            .zip(&self.observed)
            .filter(|(_, &o)| o)
            .map(|(&v, _)| v)
            .collect()
    }

    /// The full `x` column including the hidden values. Only the harness
    /// should need this, to score deletion mechanisms.
    pub fn x_including_hidden(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> Option<&[f64]> {
        self.z.as_deref()
    }

    /// How many times the deletion mask was redrawn because too few values
    /// survived.
    pub fn mask_redraws(&self) -> u32 {
        self.mask_redraws
    }

    /// `x` with the missing entries replaced, in row order, by `imputed`.
    pub fn complete_with(&self, imputed: &[f64]) -> Result<Vec<f64>> {
        if imputed.len() != self.n_missing() {
            return Err(Error::InvalidData(format!(
                "{} imputations for {} missing values",
                imputed.len(),
                self.n_missing()
            )));
        }
        let mut fill = imputed.iter();
        Ok(self
            .x
            .iter()
            .zip(&self.observed)
            .map(|(&v, &o)| if o { v } else { *fill.next().unwrap_or(&f64::NAN) })
            .collect())
    }
}

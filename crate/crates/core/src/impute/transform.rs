//! Power transformations used to make a skewed variable look more normal
//! before imputing it.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    SquareRoot,
    FourthRoot,
}

impl TransformKind {
    fn power(self) -> i32 {
        match self {
            TransformKind::SquareRoot => 2,
            TransformKind::FourthRoot => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::SquareRoot => "square_root",
            TransformKind::FourthRoot => "fourth_root",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `t = root(v − offset)` and its inverse `v = t^k + offset`.
///
/// The inverse is applied to any real `t`; a negative imputed `t` therefore
/// maps back above the offset, because the power is even.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub offset: f64,
}

impl TransformSpec {
    pub fn new(kind: TransformKind) -> Self {
        Self { kind, offset: 0.0 }
    }

    /// Offset at the smallest value, so that value maps to zero.
    pub fn shifted_to_min(kind: TransformKind, values: &[f64]) -> Result<Self> {
        let offset = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !offset.is_finite() {
            return Err(Error::Empty("transform offset needs at least one finite value"));
        }
        Ok(Self { kind, offset })
    }

    pub fn apply(&self, v: f64) -> Result<f64> {
        let shifted = v - self.offset;
        if !(shifted >= 0.0) {
            return Err(Error::InvalidData(format!(
                "cannot take the {} of {v} with offset {}",
                self.kind, self.offset
            )));
        }
        Ok(match self.kind {
            TransformKind::SquareRoot => shifted.sqrt(),
            TransformKind::FourthRoot => shifted.sqrt().sqrt(),
        })
    }

    pub fn apply_all(&self, values: &[f64]) -> Result<Vec<f64>> {
        values.iter().map(|&v| self.apply(v)).collect()
    }

    pub fn invert(&self, t: f64) -> f64 {
        t.powi(self.kind.power()) + self.offset
    }
}

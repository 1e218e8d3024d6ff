//! Enforcing a lower bound on imputed values after the fact.

use crate::rng::RandomStream;

/// Rounds every value below `c` up to `c`.
pub fn apply_censoring(values: &[f64], c: f64) -> Vec<f64> {
    values.iter().map(|&v| if v < c { c } else { v }).collect()
}

/// Result of [`apply_truncation_rejection`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rejection {
    pub value: f64,
    /// Draws made, across both stages.
    pub draws: usize,
    /// The cap was hit and the fallback bound took over.
    pub fell_back: bool,
    /// The fallback bound was not reached either and the value was set to it.
    pub clamped: bool,
}

/// Redraws from `imputer` until a value at or above `c` appears.
///
/// After `cap` failed draws the bound drops to `fallback_c` and up to `cap`
/// further draws are made against it. If those fail too the value is set to
/// `fallback_c`, so the result is never below `min(c, fallback_c)`.
pub fn apply_truncation_rejection<F>(
    mut imputer: F,
    c: f64,
    cap: usize,
    fallback_c: f64,
    rng: &mut RandomStream,
) -> Rejection
where
    F: FnMut(&mut RandomStream) -> f64,
{
    let cap = cap.max(1);
    let mut draws = 0;
    for bound in [c, fallback_c] {
        for _ in 0..cap {
            let v = imputer(rng);
            draws += 1;
            if v >= bound {
                return Rejection {
                    value: v,
                    draws,
                    fell_back: draws > cap,
                    clamped: false,
                };
            }
        }
    }
    Rejection {
        value: fallback_c,
        draws,
        fell_back: true,
        clamped: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn censoring_rounds_up_and_is_idempotent() {
        let once = apply_censoring(&[-1.0, 0.5, 2.0], 0.0);
        assert_eq!(once, vec![0.0, 0.5, 2.0]);
        assert_eq!(apply_censoring(&once, 0.0), once);
        assert_eq!(apply_censoring(&[1.0, 3.0], 0.0), vec![1.0, 3.0]);
    }

    #[test]
    fn rejection_cap_engages_the_fallback() {
        let mut rng = RandomStream::from_seed(1);
        let r = apply_truncation_rejection(|_| -5.0, 0.0, 100, -6.0, &mut rng);
        assert!(r.fell_back && !r.clamped);
        assert_eq!(r.value, -5.0);
        assert_eq!(r.draws, 101);

        let r = apply_truncation_rejection(|_| -50.0, 0.0, 100, -6.0, &mut rng);
        assert!(r.fell_back && r.clamped);
        assert_eq!(r.value, -6.0);

        let r = apply_truncation_rejection(|_| 3.0, 0.0, 100, -6.0, &mut rng);
        assert_eq!((r.value, r.draws, r.fell_back), (3.0, 1, false));
    }
}

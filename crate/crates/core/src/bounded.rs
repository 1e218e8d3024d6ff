//! Moments of a normal variable after a lower bound is imposed, and the
//! inverse problem: which pre-bound normal gives prescribed moments *after*
//! censoring or truncation.
//!
//! With `s = σ_pre` and standardized bound `z = (c − μ_pre)/s`:
//!
//! ```text
//! truncated:  E = μ_pre + λ s          V = (1 − δ) s²
//! censored:   E = π c + (1 − π) E_trunc
//!             V = (1 − π) (V_trunc + (λ − z)² π s²)
//! ```
//!
//! Both `(E − c)² / V` ratios depend on `z` alone, so matching reduces to a
//! one-dimensional root find on `z` followed by back-substitution for `s`
//! and `μ_pre`.

use crate::error::{Error, Result};
use crate::special::TruncationGeometry;

/// Search interval for the standardized bound.
pub const Z_BRACKET: f64 = 12.0;
/// Truncated matches whose bound lies further than this above the pre-bound
/// mean (in pre-bound SDs) are reported as [`Error::NearSingular`].
pub const NEAR_SINGULAR_Z: f64 = 10.0;
const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

impl MomentPair {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "moment pair needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// Out-of-bound values are rounded up to the bound.
    Censor,
    /// Out-of-bound values are redrawn; the law is renormalized above the bound.
    Truncate,
}

/// A lower bound `c` applied to `N(pre_mean, pre_sd²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSpec {
    pub c: f64,
    pub kind: BoundKind,
    pub pre_mean: f64,
    pub pre_sd: f64,
}

impl BoundSpec {
    pub fn new(kind: BoundKind, pre_mean: f64, pre_sd: f64, c: f64) -> Result<Self> {
        if !(pre_sd > 0.0) || !pre_sd.is_finite() || !pre_mean.is_finite() || c.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "bound spec needs finite mean, positive sd and a bound, got mu={pre_mean}, sd={pre_sd}, c={c}"
            )));
        }
        Ok(Self {
            c,
            kind,
            pre_mean,
            pre_sd,
        })
    }

    pub fn geometry(&self) -> TruncationGeometry {
        TruncationGeometry::at((self.c - self.pre_mean) / self.pre_sd)
    }

    /// Moments after the bound, dispatching on [`BoundSpec::kind`].
    pub fn moments(&self) -> MomentPair {
        match self.kind {
            BoundKind::Truncate => truncated_moments(self),
            BoundKind::Censor => censored_moments(self),
        }
    }
}

/// Mean and variance of `N(μ_pre, σ_pre²)` truncated below `c`.
///
/// The `kind` field of `pre` is ignored.
pub fn truncated_moments(pre: &BoundSpec) -> MomentPair {
    let g = pre.geometry();
    let s = pre.pre_sd;
    if g.is_inactive() {
        return MomentPair {
            mean: pre.pre_mean,
            variance: s * s,
        };
    }
    MomentPair {
        mean: pre.pre_mean + g.lambda_c * s,
        variance: (1.0 - g.delta_c) * s * s,
    }
}

/// Mean and variance of `N(μ_pre, σ_pre²)` censored below `c`.
///
/// The `kind` field of `pre` is ignored.
pub fn censored_moments(pre: &BoundSpec) -> MomentPair {
    let g = pre.geometry();
    let s = pre.pre_sd;
    if g.is_inactive() || g.pi_c == 0.0 {
        return MomentPair {
            mean: pre.pre_mean,
            variance: s * s,
        };
    }
    let trunc = truncated_moments(pre);
    let pi = g.pi_c;
    MomentPair {
        mean: pi * pre.c + g.upper * trunc.mean,
        variance: g.upper * (trunc.variance + g.gap * g.gap * pi * s * s),
    }
}

/// `(E − c)² / V` after truncation, as a function of the standardized bound.
pub fn truncated_ratio(z: f64) -> f64 {
    let g = TruncationGeometry::at(z);
    g.gap * g.gap / (1.0 - g.delta_c)
}

/// `(E − c)² / V` after censoring, as a function of the standardized bound.
pub fn censored_ratio(z: f64) -> f64 {
    let g = TruncationGeometry::at(z);
    let gap2 = g.gap * g.gap;
    g.upper * gap2 / ((1.0 - g.delta_c) + g.pi_c * gap2)
}

/// Pre-bound normal whose censored-at-`c` moments equal `target`.
pub fn match_censored(target: MomentPair, c: f64) -> Result<BoundSpec> {
    let z = match solve_ratio(target, c, censored_ratio)? {
        Solved::Inactive => return inactive(BoundKind::Censor, target, c),
        Solved::Root(z) => z,
    };
    let g = TruncationGeometry::at(z);
    let shrink = g.upper * ((1.0 - g.delta_c) + g.pi_c * g.gap * g.gap);
    let s = (target.variance / shrink).sqrt();
    BoundSpec::new(BoundKind::Censor, c - z * s, s, c)
}

/// Pre-bound normal whose truncated-below-`c` moments equal `target`.
///
/// No truncated normal has `(E − c)² / V ≤ 1`: as the ratio falls towards 1
/// the solution runs off to `μ_pre/σ_pre → −∞`. Targets whose root lies
/// beyond [`NEAR_SINGULAR_Z`] are reported as [`Error::NearSingular`], and
/// targets with no root inside the bracket as [`Error::InfeasibleTarget`].
pub fn match_truncated(target: MomentPair, c: f64) -> Result<BoundSpec> {
    let z = match solve_ratio(target, c, truncated_ratio)? {
        Solved::Inactive => return inactive(BoundKind::Truncate, target, c),
        Solved::Root(z) => z,
    };
    if z > NEAR_SINGULAR_Z {
        return Err(Error::NearSingular {
            z_c: z,
            limit: NEAR_SINGULAR_Z,
        });
    }
    let g = TruncationGeometry::at(z);
    let s = (target.variance / (1.0 - g.delta_c)).sqrt();
    BoundSpec::new(BoundKind::Truncate, c - z * s, s, c)
}

enum Solved {
    /// The bound sits more than `Z_BRACKET` SDs below the mean and has no
    /// effect at double precision.
    Inactive,
    Root(f64),
}

fn inactive(kind: BoundKind, target: MomentPair, c: f64) -> Result<BoundSpec> {
    BoundSpec::new(kind, target.mean, target.sd(), c)
}

fn solve_ratio(target: MomentPair, c: f64, ratio: fn(f64) -> f64) -> Result<Solved> {
    if !c.is_finite() {
        return Err(Error::InvalidArgument(format!("bound must be finite, got {c}")));
    }
    if !(target.mean > c) {
        return Err(Error::InfeasibleTarget(format!(
            "target mean {} is not above the bound {c}",
            target.mean
        )));
    }
    let want = (target.mean - c).powi(2) / target.variance;
    // Both ratios decrease in z.
    let (mut lo, mut hi) = (-Z_BRACKET, Z_BRACKET);
    if want >= ratio(lo) {
        return Ok(Solved::Inactive);
    }
    if want <= ratio(hi) {
        return Err(Error::InfeasibleTarget(format!(
            "(E - c)^2 / V = {want:.6} is not reached for any standardized bound in [-{Z_BRACKET}, {Z_BRACKET}]"
        )));
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Solved::Root(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mu: f64, sd: f64, c: f64) -> BoundSpec {
        BoundSpec::new(BoundKind::Truncate, mu, sd, c).unwrap()
    }

    #[test]
    fn forward_examples() {
        let t = truncated_moments(&spec(1.0, 1.0, 0.0));
        assert!((t.mean - 1.2876).abs() < 5e-5 && (t.variance - 0.6297).abs() < 5e-5);
        let cz = censored_moments(&spec(1.0, 1.0, 0.0));
        assert!((cz.mean - 1.0833).abs() < 5e-5 && (cz.variance - 0.7511).abs() < 5e-5);

        // With the exact Mills ratio the illustration lands on (1.1, 1.0).
        let t = truncated_moments(&spec(-6.28, 3.02, 0.0));
        assert!((t.mean - 1.1).abs() < 0.005, "{t:?}");
        assert!((t.variance - 1.0).abs() < 0.005, "{t:?}");

        let cz = censored_moments(&spec(0.785, 1.29, 0.0));
        assert!((cz.mean - 1.0).abs() < 0.005 && (cz.variance - 1.0).abs() < 0.005);

        for m in [
            truncated_moments(&spec(2.0, 3.0, f64::NEG_INFINITY)),
            censored_moments(&spec(2.0, 3.0, f64::NEG_INFINITY)),
        ] {
            assert_eq!(m, MomentPair { mean: 2.0, variance: 9.0 });
        }
    }

    #[test]
    fn ratios_decrease() {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        let mut z = -Z_BRACKET;
        while z <= Z_BRACKET {
            let cur = (truncated_ratio(z), censored_ratio(z));
            assert!(cur.0 < prev.0 && cur.1 < prev.1, "not decreasing at {z}");
            assert!(cur.0 > 1.0, "truncated ratio must stay above its limit 1");
            prev = cur;
            z += 0.005;
        }
    }

    #[test]
    fn match_censored_unit_exponential() {
        let target = MomentPair::new(1.0, 1.0).unwrap();
        let pre = match_censored(target, 0.0).unwrap();
        assert!((pre.pre_mean - 0.785).abs() < 5e-4, "{pre:?}");
        assert!((pre.pre_sd - 1.29).abs() < 5e-3, "{pre:?}");
        let back = censored_moments(&pre);
        assert!((back.mean - 1.0).abs() < 1e-8 && (back.variance - 1.0).abs() < 1e-8);
    }

    #[test]
    fn match_truncated_examples() {
        let pre = match_truncated(MomentPair::new(1.1, 1.0).unwrap(), 0.0).unwrap();
        let back = truncated_moments(&pre);
        assert!((back.mean - 1.1).abs() < 1e-8 && (back.variance - 1.0).abs() < 1e-8);
        // Same region as the illustration (-6.28, 3.02): far-negative mean, sd ≈ 3.
        assert!(pre.pre_mean < -4.0 && pre.pre_sd > 2.0, "{pre:?}");

        let err = match_truncated(MomentPair::new(1.0, 1.0).unwrap(), 0.0).unwrap_err();
        assert!(
            matches!(err, Error::NearSingular { .. } | Error::InfeasibleTarget(_)),
            "{err:?}"
        );
        // Root between NEAR_SINGULAR_Z and the bracket edge.
        let mean = truncated_ratio(11.0).sqrt();
        let err = match_truncated(MomentPair::new(mean, 1.0).unwrap(), 0.0).unwrap_err();
        assert!(matches!(err, Error::NearSingular { .. }), "{err:?}");
    }

    #[test]
    fn inactive_bound_returns_target() {
        let target = MomentPair::new(3.0, 4.0).unwrap();
        for pre in [
            match_censored(target, -1e6).unwrap(),
            match_truncated(target, -1e6).unwrap(),
        ] {
            assert_eq!((pre.pre_mean, pre.pre_sd), (3.0, 2.0));
        }
    }

    #[test]
    fn target_below_bound_is_infeasible() {
        let target = MomentPair::new(-1.0, 1.0).unwrap();
        assert!(matches!(match_censored(target, 0.0), Err(Error::InfeasibleTarget(_))));
        assert!(matches!(match_truncated(target, 0.0), Err(Error::InfeasibleTarget(_))));
        assert!(MomentPair::new(0.0, 0.0).is_err());
    }

    #[test]
    fn bounding_shrinks_variance_and_truncated_mean_rises_with_c() {
        let mut prev_mean = f64::NEG_INFINITY;
        for i in 0..200 {
            let c = -5.0 + 0.05 * f64::from(i);
            let pre = spec(0.3, 1.7, c);
            let t = truncated_moments(&pre);
            let cz = censored_moments(&pre);
            assert!(t.variance < 1.7 * 1.7 && cz.variance < 1.7 * 1.7);
            assert!(t.mean > prev_mean);
            assert!(cz.mean <= t.mean && (c > 0.3 || cz.mean >= 0.3));
            prev_mean = t.mean;
        }
    }
}

//! Bracketed root finding for nondecreasing functions.
//!
//! Every threshold in the crate is the root of an equation `f(x) = target`
//! where `f` is a partial expectation (or a weighted sum of them) and is
//! therefore nondecreasing and continuous. Bisection on such functions is
//! globally convergent, so it is the only solver used here.

use serde::{Deserialize, Serialize};

/// Hard cap on bisection steps.
pub const MAX_BISECTION_ITERS: usize = 200;

/// Residual the inverse solves are expected to reach.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Maximum number of bracket doublings for unbounded supports.
const MAX_DOUBLINGS: usize = 1100;

/// A size threshold: a finite cutoff or `Unbounded` when the defining
/// equation has no root (every size is admitted up to capacity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Finite(f64),
    Unbounded,
}

impl Threshold {
    /// The cutoff as a float, `+inf` when unbounded.
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Threshold::Finite(x) => x,
            Threshold::Unbounded => f64::INFINITY,
        }
    }

    #[inline]
    pub fn finite(self) -> Option<f64> {
        match self {
            Threshold::Finite(x) => Some(x),
            Threshold::Unbounded => None,
        }
    }

    #[inline]
    pub fn is_unbounded(self) -> bool {
        matches!(self, Threshold::Unbounded)
    }

    /// Truncates the threshold at `cap`.
    #[inline]
    pub fn min_with(self, cap: f64) -> f64 {
        self.value().min(cap)
    }
}

/// Smallest `x` in `[lo, hi]` with `f(x) >= target`, assuming `f` is
/// nondecreasing, `f(lo) < target` and `f(hi) >= target`.
///
/// Bisects until the bracket cannot shrink further in floating point or the
/// iteration cap is hit, and returns the upper end of the bracket.
pub fn bisect_increasing<F>(f: F, target: f64, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Inverts a nondecreasing, continuous `f` with `f(0) = 0`.
///
/// `limit` is `sup f`. When `support_hi` is `Some(s)` the function reaches
/// `limit` at `s`; when it is `None` the limit is only approached as
/// `x -> inf`, so `target >= limit` has no finite root.
pub fn invert_increasing<F>(f: F, target: f64, limit: f64, support_hi: Option<f64>) -> Threshold
where
    F: Fn(f64) -> f64,
{
    if target <= 0.0 {
        return Threshold::Finite(0.0);
    }
    if target > limit {
        return Threshold::Unbounded;
    }
    let hi = match support_hi {
        Some(s) => s,
        None => {
            if target >= limit {
                return Threshold::Unbounded;
            }
            let mut hi = 1.0;
            let mut found = false;
            for _ in 0..MAX_DOUBLINGS {
                if f(hi) >= target {
                    found = true;
                    break;
                }
                hi *= 2.0;
                if !hi.is_finite() {
                    break;
                }
            }
            if !found {
                return Threshold::Unbounded;
            }
            hi
        }
    };
    Threshold::Finite(bisect_increasing(f, target, 0.0, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_hits_square_root() {
        let x = bisect_increasing(|x| x * x, 2.0, 0.0, 2.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_target_is_zero() {
        assert_eq!(invert_increasing(|x| x, 0.0, 1.0, Some(1.0)), Threshold::Finite(0.0));
    }

    #[test]
    fn target_above_limit_is_unbounded() {
        assert_eq!(invert_increasing(|x| x.min(1.0), 1.5, 1.0, Some(1.0)), Threshold::Unbounded);
        // asymptotic limit never reached
        let f = |x: f64| 1.0 - (-x).exp();
        assert_eq!(invert_increasing(f, 1.0, 1.0, None), Threshold::Unbounded);
    }

    #[test]
    fn expanding_bracket() {
        let f = |x: f64| 1.0 - (-x).exp();
        let x = invert_increasing(f, 0.999, 1.0, None).finite().unwrap();
        assert!((f(x) - 0.999).abs() < 1e-13);
        assert!((x - 1000f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn threshold_min_with_unbounded() {
        assert_eq!(Threshold::Unbounded.min_with(3.0), 3.0);
        assert_eq!(Threshold::Finite(0.5).min_with(3.0), 0.5);
    }
}

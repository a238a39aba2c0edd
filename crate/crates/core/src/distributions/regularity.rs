//! Numerical certificate for the regularity conditions on a size law:
//! two-sided ratio bounds `γ₁F(λw) ≤ F(w) ≤ γ₂F(λw)` and monotonicity of
//! `w³f(w)` on `(0, ω̄)`, plus the derived constants `M` and `α`.

use serde::{Deserialize, Serialize};

use super::SizeDistribution;
use crate::error::{Error, Result};

/// Default number of grid points.
pub const DEFAULT_GRID_SIZE: usize = 10_000;

/// The grid spans `[ω̄·10^-GRID_DECADES, ω̄]`.
const GRID_DECADES: f64 = 9.0;

/// Relative slack allowed when checking that `w³f(w)` does not decrease.
const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityCertificate {
    pub lambda: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Bound on `w₂(F(w₂)-F(w₁)) / ∫_{w₁}^{w₂} w dF` over `0 < w₁ < w₂ < ω̄`.
    pub m_constant: f64,
    /// Scaling exponent with `1/γ₂ = λ^α`.
    pub alpha: f64,
    pub omega_bar: f64,
    pub grid_checked: usize,
}

/// `w₂(F(w₂) - F(w₁)) / ∫_{w₁}^{w₂} w dF(w)`.
pub fn interval_size_ratio(d: &SizeDistribution, w1: f64, w2: f64) -> f64 {
    let mass = d.cdf(w2) - d.cdf(w1);
    let moment = d.partial_expectation(w2) - d.partial_expectation(w1);
    w2 * mass / moment
}

/// `w F(w) / ∫₀ʷ u dF(u)`, the ratio with `w₁ → 0`.
fn ratio_from_zero(d: &SizeDistribution, w: f64) -> f64 {
    w * d.cdf(w) / d.partial_expectation(w)
}

/// Scans a geometric grid on `(0, ω̄)` and certifies the regularity
/// conditions, or reports which one fails.
///
/// For fixed `w₂` the conditional mean of the size on `(w₁, w₂]` is
/// nondecreasing in `w₁`, so the `M` ratio is largest as `w₁ → 0`; `M` is
/// therefore the maximum of `wF(w)/∫₀ʷ u dF` over the grid, refined around
/// the best grid point.
pub fn verify_regularity(d: &SizeDistribution, lambda: f64, grid_size: usize) -> Result<RegularityCertificate> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if grid_size < 100 {
        return Err(Error::InvalidArgument(format!("grid size must be at least 100, got {grid_size}")));
    }
    if !d.has_density() {
        return Err(Error::RegularityViolation("distribution has an atom (no continuous density)".into()));
    }
    let omega = d.omega_bar();
    let grid: Vec<f64> = (0..grid_size)
        .map(|k| {
            let frac = k as f64 / (grid_size - 1) as f64;
            omega * 10f64.powf(-GRID_DECADES * (1.0 - frac))
        })
        .collect();

    let mut gamma1 = f64::INFINITY;
    let mut gamma2: f64 = 0.0;
    let mut prev_growth: Option<f64> = None;
    let mut best = (0usize, f64::NEG_INFINITY);

    for (k, &w) in grid.iter().enumerate() {
        let fw = d.cdf(w);
        let flw = d.cdf(lambda * w);
        if !(fw > 0.0 && flw > 0.0) {
            return Err(Error::RegularityViolation(format!(
                "F vanishes near zero (F({w:e}) = {fw:e}, F({:e}) = {flw:e})",
                lambda * w
            )));
        }
        let ratio = fw / flw;
        gamma1 = gamma1.min(ratio);
        gamma2 = gamma2.max(ratio);

        let growth = w * w * w * d.pdf(w);
        if let Some(prev) = prev_growth {
            if growth < prev * (1.0 - MONOTONE_TOL) {
                return Err(Error::RegularityViolation(format!(
                    "w^3 f(w) decreases near w = {w:e} ({prev:e} -> {growth:e})"
                )));
            }
        }
        prev_growth = Some(growth);

        let r = ratio_from_zero(d, w);
        if r > best.1 {
            best = (k, r);
        }
    }

    if !(gamma1 > 1.0) {
        return Err(Error::RegularityViolation(format!("gamma1 = {gamma1} is not above 1")));
    }

    let lo = grid[best.0.saturating_sub(1)];
    let hi = grid[(best.0 + 1).min(grid_size - 1)];
    let refined = golden_max(|w| ratio_from_zero(d, w), lo, hi, 100);
    let m_constant = best.1.max(refined);

    Ok(RegularityCertificate {
        lambda,
        gamma1,
        gamma2,
        m_constant,
        alpha: gamma2.ln() / (1.0 / lambda).ln(),
        omega_bar: omega,
        grid_checked: grid_size,
    })
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut e = a + INV_PHI * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    for _ in 0..iters {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + INV_PHI * (b - a);
            fe = f(e);
        }
        if b - a <= 1e-15 * b {
            break;
        }
    }
    fc.max(fe)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_certificate() {
        let d = SizeDistribution::uniform(0.0, 1.0).unwrap();
        let c = verify_regularity(&d, 0.5, DEFAULT_GRID_SIZE).unwrap();
        assert!((c.gamma1 - 2.0).abs() < 1e-12);
        assert!((c.gamma2 - 2.0).abs() < 1e-12);
        assert!((c.alpha - 1.0).abs() < 1e-12);
        assert!((c.m_constant - 2.0).abs() < 1e-9);
        assert_eq!(c.grid_checked, DEFAULT_GRID_SIZE);
    }

    #[test]
    fn power_certificate() {
        let d = SizeDistribution::power(1.0, 2.0, Some(1.0)).unwrap();
        let c = verify_regularity(&d, 0.5, 1000).unwrap();
        assert!((c.gamma1 - 4.0).abs() < 1e-12);
        assert!((c.gamma2 - 4.0).abs() < 1e-12);
        assert!((c.alpha - 2.0).abs() < 1e-12);
        // wF(w)/∫u dF = (alpha+1)/alpha
        assert!((c.m_constant - 1.5).abs() < 1e-9);
    }

    #[test]
    fn alpha_matches_gamma2() {
        let d = SizeDistribution::exponential(1.0).unwrap();
        let c = verify_regularity(&d, 0.3, 2000).unwrap();
        assert!((c.alpha - c.gamma2.ln() / (1.0f64 / 0.3).ln()).abs() < 1e-12);
        assert!(c.gamma1 > 1.0 && c.gamma1 <= c.gamma2);
        assert!(c.m_constant > 1.0);
    }

    #[test]
    fn atom_is_rejected() {
        let d = SizeDistribution::point_mass(0.5).unwrap();
        assert!(matches!(verify_regularity(&d, 0.5, 1000), Err(Error::RegularityViolation(_))));
        let mix = SizeDistribution::mixture(
            vec![0.5, 0.5],
            vec![SizeDistribution::uniform(0.0, 1.0).unwrap(), d],
        )
        .unwrap();
        assert!(matches!(verify_regularity(&mix, 0.5, 1000), Err(Error::RegularityViolation(_))));
    }

    #[test]
    fn shifted_uniform_is_rejected() {
        let d = SizeDistribution::uniform(0.2, 1.0).unwrap();
        assert!(matches!(verify_regularity(&d, 0.5, 1000), Err(Error::RegularityViolation(_))));
    }

    #[test]
    fn exponential_past_the_peak_is_rejected() {
        // w^3 e^{-w} peaks at w = 3
        let d = SizeDistribution::exponential(1.0).unwrap().with_omega_bar(6.0).unwrap();
        assert!(matches!(verify_regularity(&d, 0.5, 1000), Err(Error::RegularityViolation(_))));
    }

    #[test]
    fn bad_arguments() {
        let d = SizeDistribution::uniform(0.0, 1.0).unwrap();
        assert!(verify_regularity(&d, 1.0, 1000).is_err());
        assert!(verify_regularity(&d, 0.5, 10).is_err());
    }
}

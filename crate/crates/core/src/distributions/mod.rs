//! Size distributions with the analytic primitives the threshold equations
//! need: CDF, density, partial expectation `∫₀ʷ u dF(u)` and its inverse.
//!
//! Every family evaluates its CDF and partial expectation in closed form
//! (mixtures are weighted sums of their components). Small arguments are
//! handled with series or short Gauss-Legendre rules so that both quantities
//! stay accurate in relative terms near zero, where the regularity checks and
//! late-horizon thresholds live.

mod regularity;

pub use regularity::{interval_size_ratio, verify_regularity, RegularityCertificate, DEFAULT_GRID_SIZE};

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::roots::{bisect_increasing, invert_increasing, Threshold};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Upper quantile used for `ω̄` on unbounded supports.
const UNBOUNDED_OMEGA_QUANTILE: f64 = 0.999;

/// Truncated normal restricted to `(0, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedNormal {
    mean: f64,
    sd: f64,
    hi: f64,
    /// Arguments below `split` are integrated with Gauss-Legendre.
    split: f64,
    /// Unnormalized mass and first moment on `(0, split)`.
    mass_below_split: f64,
    moment_below_split: f64,
    /// Unnormalized total mass on `(0, hi)`.
    mass: f64,
}

impl TruncatedNormal {
    fn new(mean: f64, sd: f64, hi: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && hi > 0.0 && hi.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "truncated normal needs sd > 0 and hi > 0 (mean={mean}, sd={sd}, hi={hi})"
            )));
        }
        let mut tn = TruncatedNormal {
            mean,
            sd,
            hi,
            split: (0.25 * sd).min(hi),
            mass_below_split: 0.0,
            moment_below_split: 0.0,
            mass: 1.0,
        };
        tn.mass_below_split = gauss_legendre(|u| tn.density_unnormalized(u), 0.0, tn.split);
        tn.moment_below_split = gauss_legendre(|u| u * tn.density_unnormalized(u), 0.0, tn.split);
        tn.mass = tn.raw_mass(hi);
        if !(tn.mass > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "truncated normal has no mass on (0, {hi})"
            )));
        }
        Ok(tn)
    }

    pub fn mean_param(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    fn z(&self, u: f64) -> f64 {
        (u - self.mean) / self.sd
    }

    #[inline]
    fn density_unnormalized(&self, u: f64) -> f64 {
        let z = self.z(u);
        INV_SQRT_2PI * (-0.5 * z * z).exp() / self.sd
    }

    /// `∫₀ʷ φ((u-m)/s)/s du` for `0 <= w <= hi`.
    fn raw_mass(&self, w: f64) -> f64 {
        if w <= self.split {
            gauss_legendre(|u| self.density_unnormalized(u), 0.0, w)
        } else {
            self.mass_below_split + std_normal_cdf(self.z(w)) - std_normal_cdf(self.z(self.split))
        }
    }

    /// `∫₀ʷ u φ((u-m)/s)/s du` for `0 <= w <= hi`.
    fn raw_moment(&self, w: f64) -> f64 {
        if w <= self.split {
            gauss_legendre(|u| u * self.density_unnormalized(u), 0.0, w)
        } else {
            let antideriv = |x: f64| {
                let z = self.z(x);
                self.mean * std_normal_cdf(z) - self.sd * INV_SQRT_2PI * (-0.5 * z * z).exp()
            };
            self.moment_below_split + antideriv(w) - antideriv(self.split)
        }
    }
}

#[inline]
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `1 - e^{-x}(1 + x)`, accurate for small `x`.
fn exp_partial_moment(x: f64) -> f64 {
    if x < 1.0 {
        // Σ_{k≥2} (-1)^k (k-1) x^k / k!
        let mut term = x; // x^k / k! at k = 1
        let mut sum = 0.0;
        for k in 2..40 {
            term *= x / k as f64;
            let contrib = (k - 1) as f64 * term;
            if k % 2 == 0 {
                sum += contrib;
            } else {
                sum -= contrib;
            }
            if contrib < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        1.0 - (-x).exp() * (1.0 + x)
    }
}

/// A size law family together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    TruncatedNormal(TruncatedNormal),
    /// `F(x) = (x/hi)^alpha` on `(0, hi)`.
    Power { alpha: f64, hi: f64 },
    /// Convex combination; `weights` are normalized to sum to one.
    Mixture { weights: Vec<f64>, components: Vec<SizeDistribution> },
    /// Degenerate law with all mass at `at`. It has no density and exists to
    /// express atoms; it never passes the regularity check.
    PointMass { at: f64 },
}

/// A size distribution `F` with its regularity horizon `ω̄`.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeDistribution {
    family: Family,
    omega_bar: f64,
}

impl SizeDistribution {
    fn from_family(family: Family) -> Self {
        let mut d = SizeDistribution { family, omega_bar: 1.0 };
        d.omega_bar = d.default_omega_bar();
        d
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "uniform needs 0 <= lo < hi (lo={lo}, hi={hi})"
            )));
        }
        Ok(Self::from_family(Family::Uniform { lo, hi }))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidDistribution(format!("exponential needs rate > 0 (rate={rate})")));
        }
        Ok(Self::from_family(Family::Exponential { rate }))
    }

    pub fn truncated_normal(mean: f64, sd: f64, hi: f64) -> Result<Self> {
        Ok(Self::from_family(Family::TruncatedNormal(TruncatedNormal::new(mean, sd, hi)?)))
    }

    /// Power law `F(x) = A x^alpha` restricted to `(0, hi)` and renormalized,
    /// which is `(x/hi)^alpha`; `a` only matters when `hi` is omitted, in
    /// which case the support ends where `A x^alpha` reaches one.
    pub fn power(a: f64, alpha: f64, hi: Option<f64>) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "power needs A > 0 and alpha > 0 (A={a}, alpha={alpha})"
            )));
        }
        let hi = hi.unwrap_or_else(|| a.powf(-1.0 / alpha));
        if !(hi > 0.0 && hi.is_finite()) {
            return Err(Error::InvalidDistribution(format!("power needs hi > 0 (hi={hi})")));
        }
        Ok(Self::from_family(Family::Power { alpha, hi }))
    }

    pub fn mixture(weights: Vec<f64>, components: Vec<SizeDistribution>) -> Result<Self> {
        if components.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidDistribution(
                "mixture needs one weight per component and at least one component".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidDistribution("mixture weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("mixture weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self::from_family(Family::Mixture { weights, components }))
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        if !(at > 0.0 && at.is_finite()) {
            return Err(Error::InvalidDistribution(format!("point mass needs at > 0 (at={at})")));
        }
        Ok(Self::from_family(Family::PointMass { at }))
    }

    /// Overrides the regularity horizon `ω̄`.
    pub fn with_omega_bar(mut self, omega_bar: f64) -> Result<Self> {
        if !(omega_bar > 0.0 && omega_bar.is_finite()) {
            return Err(Error::InvalidDistribution(format!("omega_bar must be positive (got {omega_bar})")));
        }
        self.omega_bar = omega_bar;
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Uniform { .. } => "uniform",
            Family::Exponential { .. } => "exponential",
            Family::TruncatedNormal(_) => "truncated_normal",
            Family::Power { .. } => "power",
            Family::Mixture { .. } => "mixture",
            Family::PointMass { .. } => "point_mass",
        }
    }

    pub fn omega_bar(&self) -> f64 {
        self.omega_bar
    }

    /// The support upper bound for bounded laws, the 99.9% quantile
    /// otherwise, capped where `w³f(w)` stops increasing.
    fn default_omega_bar(&self) -> f64 {
        match &self.family {
            Family::Uniform { hi, .. } => *hi,
            Family::Power { hi, .. } => *hi,
            Family::Exponential { rate } => {
                let q = -(1.0 - UNBOUNDED_OMEGA_QUANTILE).ln() / rate;
                q.min(3.0 / rate)
            }
            Family::TruncatedNormal(tn) => {
                let m = tn.mean;
                let peak = 0.5 * (m + (m * m + 12.0 * tn.sd * tn.sd).sqrt());
                tn.hi.min(peak)
            }
            Family::Mixture { components, .. } => components
                .iter()
                .map(|c| c.omega_bar)
                .fold(f64::INFINITY, f64::min),
            Family::PointMass { at } => *at,
        }
    }

    /// True when the law has a density (no atoms).
    pub fn has_density(&self) -> bool {
        match &self.family {
            Family::PointMass { .. } => false,
            Family::Mixture { weights, components } => components
                .iter()
                .zip(weights)
                .all(|(c, w)| *w == 0.0 || c.has_density()),
            _ => true,
        }
    }

    /// Upper end of the support, `None` when unbounded.
    pub fn support_hi(&self) -> Option<f64> {
        match &self.family {
            Family::Uniform { hi, .. } => Some(*hi),
            Family::Exponential { .. } => None,
            Family::TruncatedNormal(tn) => Some(tn.hi),
            Family::Power { hi, .. } => Some(*hi),
            Family::Mixture { weights, components } => {
                let mut hi: f64 = 0.0;
                for (c, w) in components.iter().zip(weights) {
                    if *w == 0.0 {
                        continue;
                    }
                    hi = hi.max(c.support_hi()?);
                }
                Some(hi)
            }
            Family::PointMass { at } => Some(*at),
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.family {
            Family::Uniform { lo, hi } => 0.5 * (lo + hi),
            Family::Exponential { rate } => 1.0 / rate,
            Family::TruncatedNormal(tn) => tn.raw_moment(tn.hi) / tn.mass,
            Family::Power { alpha, hi } => alpha / (alpha + 1.0) * hi,
            Family::Mixture { weights, components } => {
                components.iter().zip(weights).map(|(c, w)| w * c.mean()).sum()
            }
            Family::PointMass { at } => *at,
        }
    }

    /// `F(w)`.
    pub fn cdf(&self, w: f64) -> f64 {
        if !(w > 0.0) {
            return 0.0;
        }
        match &self.family {
            Family::Uniform { lo, hi } => ((w - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Exponential { rate } => -(-rate * w).exp_m1(),
            Family::TruncatedNormal(tn) => {
                if w >= tn.hi {
                    1.0
                } else {
                    (tn.raw_mass(w) / tn.mass).clamp(0.0, 1.0)
                }
            }
            Family::Power { alpha, hi } => {
                if w >= *hi {
                    1.0
                } else {
                    (w / hi).powf(*alpha)
                }
            }
            Family::Mixture { weights, components } => components
                .iter()
                .zip(weights)
                .map(|(c, wt)| wt * c.cdf(w))
                .sum::<f64>()
                .min(1.0),
            Family::PointMass { at } => {
                if w >= *at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Density `f(w)`; zero for point masses.
    pub fn pdf(&self, w: f64) -> f64 {
        if !(w > 0.0) {
            return 0.0;
        }
        match &self.family {
            Family::Uniform { lo, hi } => {
                if w >= *lo && w <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Exponential { rate } => rate * (-rate * w).exp(),
            Family::TruncatedNormal(tn) => {
                if w > tn.hi {
                    0.0
                } else {
                    tn.density_unnormalized(w) / tn.mass
                }
            }
            Family::Power { alpha, hi } => {
                if w > *hi {
                    0.0
                } else {
                    alpha / w * (w / hi).powf(*alpha)
                }
            }
            Family::Mixture { weights, components } => {
                components.iter().zip(weights).map(|(c, wt)| wt * c.pdf(w)).sum()
            }
            Family::PointMass { .. } => 0.0,
        }
    }

    /// Partial expectation `∫₀ʷ u dF(u)`; the full mean beyond the support.
    pub fn partial_expectation(&self, w: f64) -> f64 {
        if !(w > 0.0) {
            return 0.0;
        }
        match &self.family {
            Family::Uniform { lo, hi } => {
                if w <= *lo {
                    0.0
                } else {
                    let x = w.min(*hi);
                    (x - lo) * (x + lo) / (2.0 * (hi - lo))
                }
            }
            Family::Exponential { rate } => {
                if w.is_infinite() {
                    1.0 / rate
                } else {
                    exp_partial_moment(rate * w) / rate
                }
            }
            Family::TruncatedNormal(tn) => tn.raw_moment(w.min(tn.hi)) / tn.mass,
            Family::Power { alpha, hi } => {
                let x = w.min(*hi);
                alpha / (alpha + 1.0) * x * (x / hi).powf(*alpha)
            }
            Family::Mixture { weights, components } => components
                .iter()
                .zip(weights)
                .map(|(c, wt)| wt * c.partial_expectation(w))
                .sum(),
            Family::PointMass { at } => {
                if w >= *at {
                    *at
                } else {
                    0.0
                }
            }
        }
    }

    /// Smallest `w` with `partial_expectation(w) = target`, or `Unbounded`
    /// when `target` exceeds what the law can deliver.
    pub fn inverse_partial_expectation(&self, target: f64) -> Threshold {
        invert_increasing(|w| self.partial_expectation(w), target, self.mean(), self.support_hi())
    }

    /// Inverse CDF: smallest `w` with `F(w) >= u`, for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.family {
            Family::Uniform { lo, hi } => lo + u * (hi - lo),
            Family::Exponential { rate } => -(-u).ln_1p() / rate,
            Family::Power { alpha, hi } => hi * u.powf(1.0 / alpha),
            Family::PointMass { at } => *at,
            Family::TruncatedNormal(tn) => bisect_increasing(|w| self.cdf(w), u, 0.0, tn.hi),
            Family::Mixture { weights, components } => {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for (c, w) in components.iter().zip(weights) {
                    if *w == 0.0 {
                        continue;
                    }
                    let q = c.quantile(u);
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
                if self.cdf(lo) >= u {
                    return lo;
                }
                bisect_increasing(|w| self.cdf(w), u, lo, hi)
            }
        }
    }

    /// One draw via the inverse-CDF transform of an open-interval uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cdf_examples() {
        let u = SizeDistribution::uniform(0.0, 1.0).unwrap();
        assert!(close(u.cdf(0.3), 0.3, 1e-15));
        let e = SizeDistribution::exponential(1.0).unwrap();
        assert_eq!(e.cdf(0.0), 0.0);
        let p = SizeDistribution::power(1.0, 2.0, Some(1.0)).unwrap();
        assert!(close(p.cdf(0.5), 0.25, 1e-15));
        assert_eq!(p.cdf(2.0), 1.0);
    }

    #[test]
    fn partial_expectation_examples() {
        let u = SizeDistribution::uniform(0.0, 1.0).unwrap();
        assert!(close(u.partial_expectation(0.2), 0.02, 1e-15));
        assert!(close(u.partial_expectation(5.0), 0.5, 1e-15));
        let e = SizeDistribution::exponential(1.0).unwrap();
        assert!(close(e.partial_expectation(f64::INFINITY), 1.0, 1e-15));
        assert!(close(e.partial_expectation(60.0), 1.0, 1e-15));
        for d in [u, e] {
            assert_eq!(d.partial_expectation(0.0), 0.0);
        }
    }

    #[test]
    fn exponential_small_argument_is_relatively_accurate() {
        let e = SizeDistribution::exponential(1.0).unwrap();
        let w = 1e-9;
        let pe = e.partial_expectation(w);
        assert!(((pe - w * w / 2.0) / (w * w / 2.0)).abs() < 1e-8);
        // continuity across the series / closed-form switch
        let a = e.partial_expectation(1.0 - 1e-12);
        let b = e.partial_expectation(1.0 + 1e-12);
        assert!((b - a).abs() < 1e-11);
    }

    #[test]
    fn inverse_examples() {
        let u = SizeDistribution::uniform(0.0, 1.0).unwrap();
        let w = u.inverse_partial_expectation(0.02).finite().unwrap();
        assert!(close(w, 0.2, 1e-12));
        assert_eq!(u.inverse_partial_expectation(0.6), Threshold::Unbounded);
        assert_eq!(u.inverse_partial_expectation(0.0), Threshold::Finite(0.0));
        // full mean of a bounded law is reached at the support end
        let w = u.inverse_partial_expectation(0.5).finite().unwrap();
        assert!(close(w, 1.0, 1e-12));
        let e = SizeDistribution::exponential(1.0).unwrap();
        assert_eq!(e.inverse_partial_expectation(1.0), Threshold::Unbounded);
    }

    #[test]
    fn quantile_examples() {
        let u = SizeDistribution::uniform(0.0, 1.0).unwrap();
        assert!(close(u.quantile(0.37), 0.37, 1e-15));
        let e = SizeDistribution::exponential(1.0).unwrap();
        assert!(close(e.quantile(0.5), std::f64::consts::LN_2, 1e-15));
        let p = SizeDistribution::power(1.0, 2.0, Some(1.0)).unwrap();
        assert!(close(p.quantile(0.25), 0.5, 1e-15));
    }

    #[test]
    fn truncated_normal_is_normalized() {
        let d = SizeDistribution::truncated_normal(0.5, 0.3, 1.0).unwrap();
        assert!(close(d.cdf(1.0), 1.0, 1e-15));
        assert!(close(d.cdf(0.5 - 1e-12), d.cdf(0.5 + 1e-12), 1e-10));
        let q = d.quantile(0.3);
        assert!(close(d.cdf(q), 0.3, 1e-12));
        // continuity at the quadrature / closed-form switch (0.25 sd)
        let s = 0.075;
        assert!((d.partial_expectation(s + 1e-13) - d.partial_expectation(s - 1e-13)).abs() < 1e-12);
    }

    #[test]
    fn power_from_a_only() {
        let p = SizeDistribution::power(4.0, 2.0, None).unwrap();
        assert!(close(p.support_hi().unwrap(), 0.5, 1e-15));
        assert!(close(p.cdf(0.25), 0.25, 1e-15));
    }

    #[test]
    fn omega_bar_defaults() {
        assert_eq!(SizeDistribution::uniform(0.0, 2.0).unwrap().omega_bar(), 2.0);
        let e = SizeDistribution::exponential(2.0).unwrap();
        assert!(close(e.omega_bar(), 1.5, 1e-15));
        let m = SizeDistribution::mixture(
            vec![1.0, 1.0],
            vec![SizeDistribution::uniform(0.0, 2.0).unwrap(), e],
        )
        .unwrap();
        assert!(close(m.omega_bar(), 1.5, 1e-15));
    }

    #[test]
    fn mixture_moments_are_linear() {
        let a = SizeDistribution::uniform(0.0, 1.0).unwrap();
        let b = SizeDistribution::exponential(2.0).unwrap();
        let m = SizeDistribution::mixture(vec![3.0, 1.0], vec![a.clone(), b.clone()]).unwrap();
        for w in [0.01, 0.3, 1.0, 4.0] {
            let expect = 0.75 * a.partial_expectation(w) + 0.25 * b.partial_expectation(w);
            assert!(close(m.partial_expectation(w), expect, 1e-15));
        }
        assert!(m.support_hi().is_none());
        assert!(close(m.mean(), 0.75 * 0.5 + 0.25 * 0.5, 1e-15));
        let q = m.quantile(0.6);
        assert!(close(m.cdf(q), 0.6, 1e-12));
    }

    #[test]
    fn point_mass_has_no_density() {
        let p = SizeDistribution::point_mass(0.5).unwrap();
        assert!(!p.has_density());
        assert_eq!(p.cdf(0.49), 0.0);
        assert_eq!(p.cdf(0.5), 1.0);
        assert_eq!(p.partial_expectation(0.7), 0.5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SizeDistribution::uniform(1.0, 1.0).is_err());
        assert!(SizeDistribution::exponential(0.0).is_err());
        assert!(SizeDistribution::truncated_normal(0.0, -1.0, 1.0).is_err());
        assert!(SizeDistribution::power(1.0, 0.0, Some(1.0)).is_err());
        assert!(SizeDistribution::mixture(vec![], vec![]).is_err());
        assert!(SizeDistribution::point_mass(0.0).is_err());
    }
}

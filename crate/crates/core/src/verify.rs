//! Numerical checks of the structural properties the policies rely on, plus
//! random generators for the states they are checked on.
//!
//! Every check returns a [`Tally`]; [`verify_instance`] bundles them into a
//! pass/fail report for one instance.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity_split::{check_feasible, evaluate_g, solve_split, supergradient_g};
use crate::distributions::{interval_size_ratio, verify_regularity, RegularityCertificate, SizeDistribution, DEFAULT_GRID_SIZE};
use crate::error::{Error, Result};
use crate::model::{Instance, RequestClass};
use crate::policies::{PolicyKind, PolicyState};
use crate::prophet::{hindsight_bruteforce, hindsight_sorted_greedy, pooled_upper_bound};
use crate::quadrature::adaptive_simpson;
use crate::roots::Threshold;
use crate::sim::{drive, generate_path, mean_and_std_error};
use crate::thresholds::{pooled_lhs, reward_permutation, solve_class_thresholds, solve_pooled_threshold};

/// Largest residual accepted for a threshold equation.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Relative agreement required between the supergradient and central
/// finite differences.
pub const GRADIENT_TOL: f64 = 1e-4;
/// Most negative second difference of `1/μ` accepted as convex.
pub const CONVEXITY_TOL: f64 = -1e-6;
/// Relative agreement required between the closed-form sub-problem value
/// and the discretized linear program.
pub const SUB_LP_TOL: f64 = 5e-3;
/// Number of equal-probability size cells in the discretized program.
pub const SUB_LP_CELLS: usize = 2000;

/// Outcome of one randomized check.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub checked: usize,
    pub violations: usize,
    /// Largest error metric seen (meaning depends on the check).
    pub worst: f64,
}

impl Tally {
    fn record(&mut self, error: f64, ok: bool) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
        }
        if error.is_nan() || error > self.worst {
            self.worst = error;
        }
    }

    pub fn merge(&mut self, other: Tally) {
        self.checked += other.checked;
        self.violations += other.violations;
        if other.worst.is_nan() || other.worst > self.worst {
            self.worst = other.worst;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

// ---------------------------------------------------------------------------
// Random generators

/// Number of base families produced by [`random_distribution`].
pub const FAMILY_COUNT: usize = 4;

/// A random law from family `family % 4`: uniform, exponential, truncated
/// normal, power. All draws satisfy the regularity conditions with their
/// default `ω̄`.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, family: usize) -> SizeDistribution {
    match family % FAMILY_COUNT {
        0 => SizeDistribution::uniform(0.0, rng.random_range(0.2..3.0)).unwrap(),
        1 => SizeDistribution::exponential(rng.random_range(0.3..5.0)).unwrap(),
        2 => {
            let hi = rng.random_range(0.5..3.0);
            SizeDistribution::truncated_normal(rng.random_range(0.0..hi), rng.random_range(0.1..1.0) * hi, hi).unwrap()
        }
        _ => SizeDistribution::power(1.0, rng.random_range(0.5..4.0), Some(rng.random_range(0.2..3.0))).unwrap(),
    }
}

/// A random class on `m` resources with probability `probability`.
/// Rewards occasionally tie or vanish to exercise those paths.
pub fn random_class<R: Rng + ?Sized>(rng: &mut R, m: usize, probability: f64, dist: SizeDistribution) -> RequestClass {
    let mut rewards: Vec<f64> = (0..m).map(|_| (rng.random_range(0.1..5.0f64) * 4.0).round() / 4.0).collect();
    if m > 1 && rng.random_bool(0.1) {
        rewards[m - 1] = 0.0;
    }
    let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.25..2.0)).collect();
    RequestClass::new(probability, rewards, weights, dist).unwrap()
}

/// Capacity row whose cumulative targets along the reward order are
/// `fractions` (increasing) of `p τ E[u]`.
fn row_from_fractions(class: &RequestClass, tau: f64, fractions: &[f64]) -> Vec<f64> {
    let perm = reward_permutation(&class.rewards);
    let scale = class.probability * tau * class.dist.mean();
    let mut row = vec![0.0; perm.len()];
    let mut prev = 0.0;
    for (k, &j) in perm.iter().enumerate() {
        row[j] = (fractions[k] - prev).max(0.0) * scale * class.weights[j];
        prev = fractions[k].max(prev);
    }
    row
}

/// Increasing fractions with the last one log-uniform in
/// `[10^lo_exp, hi]`.
fn random_fractions<R: Rng + ?Sized>(rng: &mut R, m: usize, lo_exp: f64, hi: f64) -> Vec<f64> {
    let top = 10f64.powf(rng.random_range(lo_exp..0.0)) * hi;
    let mut cuts: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    cuts.sort_by(f64::total_cmp);
    let last = cuts[m - 1];
    cuts.iter().map(|c| c / last * top).collect()
}

fn random_period<R: Rng + ?Sized>(rng: &mut R) -> (usize, usize) {
    let horizon = 10f64.powf(rng.random_range(0.0..4.0)).round() as usize;
    let t = rng.random_range(1..=horizon);
    (t, horizon)
}

// ---------------------------------------------------------------------------
// Threshold equations

/// Plugs returned thresholds back into their defining equations at random
/// states. The metric is the absolute residual.
pub fn threshold_residuals<R: Rng + ?Sized>(class: &RequestClass, samples: usize, rng: &mut R) -> Result<Tally> {
    let mut tally = Tally::default();
    let m = class.rewards.len();
    for _ in 0..samples {
        let (t, horizon) = random_period(rng);
        let tau = (horizon - t + 1) as f64;
        let fractions = random_fractions(rng, m, -6.0, 1.2);
        let row = row_from_fractions(class, tau, &fractions);
        let tv = solve_class_thresholds(class, &row, t, horizon)?;
        let mut cumulative = 0.0;
        for (k, &j) in tv.permutation.iter().enumerate() {
            cumulative += row[j] / class.weights[j];
            let rhs = cumulative / tau;
            match tv.mu[k] {
                Threshold::Finite(w) => {
                    let res = (class.probability * class.dist.partial_expectation(w) - rhs).abs();
                    tally.record(res, res <= RESIDUAL_TOL);
                }
                Threshold::Unbounded => {
                    // no root: the target must exceed what the law delivers
                    let ok = rhs > class.probability * class.dist.mean() * (1.0 - 1e-12);
                    tally.record(0.0, ok);
                }
            }
        }
    }
    Ok(tally)
}

/// Residuals of the pooled equation at random total capacities.
pub fn pooled_residuals<R: Rng + ?Sized>(classes: &[RequestClass], samples: usize, rng: &mut R) -> Result<Tally> {
    let mut tally = Tally::default();
    let full: f64 = classes
        .iter()
        .filter(|c| c.probability > 0.0 && c.rewards[0] > 0.0)
        .map(|c| c.probability * c.dist.mean())
        .sum();
    for _ in 0..samples {
        let (t, horizon) = random_period(rng);
        let tau = (horizon - t + 1) as f64;
        let total = 10f64.powf(rng.random_range(-6.0..0.0)) * 1.2 * full * tau;
        let rhs = total / tau;
        match solve_pooled_threshold(classes, total, t, horizon)? {
            Threshold::Finite(mu) => {
                let res = (pooled_lhs(classes, mu) - rhs).abs();
                tally.record(res, res <= RESIDUAL_TOL);
            }
            Threshold::Unbounded => tally.record(0.0, rhs > full * (1.0 - 1e-12)),
        }
    }
    Ok(tally)
}

// ---------------------------------------------------------------------------
// Sub-problem value and supergradient

/// Compares the analytic supergradient with central finite differences of
/// the closed-form value at random interior points (all thresholds finite
/// and away from the top of the support). The metric is the relative error.
pub fn supergradient_agreement<R: Rng + ?Sized>(class: &RequestClass, samples: usize, rng: &mut R) -> Result<Tally> {
    let mut tally = Tally::default();
    let m = class.rewards.len();
    for _ in 0..samples {
        let horizon = 10f64.powf(rng.random_range(0.5..4.0)).round() as usize;
        let t = rng.random_range(1..=horizon);
        let tau = (horizon - t + 1) as f64;
        let fractions = random_fractions(rng, m, -3.0, 0.9);
        let row = row_from_fractions(class, tau, &fractions);
        if row.iter().any(|c| *c <= 0.0) {
            continue;
        }
        let g = supergradient_g(class, &row, t, horizon)?;
        for j in 0..m {
            let h = 1e-6 * row[j];
            let mut up = row.clone();
            let mut down = row.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (evaluate_g(class, &up, t, horizon)? - evaluate_g(class, &down, t, horizon)?) / (2.0 * h);
            let scale = g[j].abs().max(fd.abs());
            let rel = if scale == 0.0 { 0.0 } else { (g[j] - fd).abs() / scale };
            tally.record(rel, rel <= GRADIENT_TOL);
        }
    }
    Ok(tally)
}

/// Equal-probability cells of a size law: per cell the probability and the
/// exact conditional mean.
fn size_cells(d: &SizeDistribution, cells: usize) -> Vec<f64> {
    let mut means = Vec::with_capacity(cells);
    let mut prev = 0.0;
    for k in 1..=cells {
        let pe = if k == cells { d.mean() } else { d.partial_expectation(d.quantile(k as f64 / cells as f64)) };
        means.push((pe - prev) * cells as f64);
        prev = pe;
    }
    means
}

/// Solves the class sub-problem as a linear program over a discretized
/// size law (equal-probability cells at their conditional means), with a
/// general-purpose simplex solver.
pub fn discretized_sub_lp(class: &RequestClass, c_tilde: &[f64], t: usize, horizon: usize, cells: usize) -> Result<f64> {
    if t == 0 || t > horizon {
        return Err(Error::InvalidPeriod { t, horizon });
    }
    let tau = (horizon - t + 1) as f64;
    let m = class.rewards.len();
    if class.probability <= 0.0 {
        return Ok(0.0);
    }
    let means = size_cells(&class.dist, cells);
    let mass = 1.0 / cells as f64;
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Vec<_>> = means
        .iter()
        .map(|_| (0..m).map(|j| lp.add_var(class.rewards[j] * mass, (0.0, 1.0))).collect())
        .collect();
    for row in &vars {
        let expr: Vec<_> = row.iter().map(|v| (*v, 1.0)).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, 1.0);
    }
    for j in 0..m {
        let expr: Vec<_> = vars.iter().zip(&means).map(|(row, u)| (row[j], class.weights[j] * u * mass)).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, c_tilde[j] / (class.probability * tau));
    }
    let sol = lp.solve().map_err(|e| Error::InvalidArgument(format!("discretized program failed: {e}")))?;
    Ok(tau * class.probability * sol.objective())
}

/// Closed-form value against the discretized program at random states whose
/// thresholds cover at least a tenth of the size mass. The metric is the
/// relative difference.
pub fn sub_lp_agreement<R: Rng + ?Sized>(class: &RequestClass, samples: usize, rng: &mut R) -> Result<Tally> {
    let mut tally = Tally::default();
    let m = class.rewards.len();
    let d = &class.dist;
    for _ in 0..samples {
        let (t, horizon) = random_period(rng);
        let tau = (horizon - t + 1) as f64;
        // cumulative mass levels; above 1 the threshold is unbounded
        let mut levels: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.1)).collect();
        levels.sort_by(f64::total_cmp);
        let perm = reward_permutation(&class.rewards);
        let mut row = vec![0.0; m];
        let mut prev = 0.0;
        for (k, &j) in perm.iter().enumerate() {
            let pe = if levels[k] >= 1.0 { d.mean() * levels[k] } else { d.partial_expectation(d.quantile(levels[k])) };
            row[j] = (pe - prev) * class.probability * tau * class.weights[j];
            prev = pe;
        }
        let closed = evaluate_g(class, &row, t, horizon)?;
        let lp = discretized_sub_lp(class, &row, t, horizon, SUB_LP_CELLS)?;
        let scale = closed.abs().max(lp.abs());
        let rel = if scale == 0.0 { 0.0 } else { (closed - lp).abs() / scale };
        tally.record(rel, rel <= SUB_LP_TOL);
    }
    Ok(tally)
}

// ---------------------------------------------------------------------------
// Convexity of 1/μ and the second-order estimate

/// Random capacity row with every threshold below `ω̄`.
fn row_below_omega<R: Rng + ?Sized>(class: &RequestClass, tau: f64, rng: &mut R) -> Vec<f64> {
    let d = &class.dist;
    let cap = d.partial_expectation(d.omega_bar()) / d.mean();
    let m = class.rewards.len();
    let fractions = random_fractions(rng, m, -4.0, 0.95 * cap);
    row_from_fractions(class, tau, &fractions)
}

fn inv_mu(class: &RequestClass, row: &[f64], t: usize, horizon: usize, j: usize) -> Result<Option<f64>> {
    let tv = solve_class_thresholds(class, row, t, horizon)?;
    Ok(match tv.mu[j] {
        Threshold::Finite(w) if w > 0.0 && w < class.dist.omega_bar() => Some(1.0 / w),
        _ => None,
    })
}

/// Second differences of `1/μ_j` along each capacity `c̃_{i_k}`, `k <= j`,
/// at random states below `ω̄`. The metric is the negated second
/// difference.
pub fn inverse_threshold_convexity<R: Rng + ?Sized>(class: &RequestClass, samples: usize, rng: &mut R) -> Result<Tally> {
    let mut tally = Tally::default();
    let m = class.rewards.len();
    let perm = reward_permutation(&class.rewards);
    let mut attempts = 0;
    while tally.checked < samples && attempts < 20 * samples {
        attempts += 1;
        let (t, horizon) = random_period(rng);
        let tau = (horizon - t + 1) as f64;
        let row = row_below_omega(class, tau, rng);
        let j = rng.random_range(0..m);
        let k = rng.random_range(0..=j);
        let res = perm[k];
        if row[res] <= 0.0 {
            continue;
        }
        let delta = rng.random_range(0.01..0.5) * row[res];
        let mut up = row.clone();
        let mut down = row.clone();
        up[res] += delta;
        down[res] -= delta;
        let (Some(a), Some(b), Some(c)) = (
            inv_mu(class, &down, t, horizon, j)?,
            inv_mu(class, &row, t, horizon, j)?,
            inv_mu(class, &up, t, horizon, j)?,
        ) else {
            continue;
        };
        let second = a - 2.0 * b + c;
        tally.record(-second, second >= CONVEXITY_TOL);
    }
    Ok(tally)
}

/// Checks
/// `F(μ_j(c̃)) - F(μ_j(c̃ - b_k u e_k)) <= (M-1)u² / ((c̃_k/b_k) p τ μ_j) + u / (p τ μ_j)`
/// for `u ∈ [0, c̃_k/b_k]` at random states with `μ_j(c̃) < ω̄`. The metric
/// is the ratio of the left side to the right side.
pub fn second_order_estimate<R: Rng + ?Sized>(
    class: &RequestClass,
    m_constant: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Tally> {
    let mut tally = Tally::default();
    let m = class.rewards.len();
    let perm = reward_permutation(&class.rewards);
    let mut attempts = 0;
    while tally.checked < samples && attempts < 20 * samples {
        attempts += 1;
        let (t, horizon) = random_period(rng);
        let tau = (horizon - t + 1) as f64;
        let row = row_below_omega(class, tau, rng);
        let j = rng.random_range(0..m);
        let k = rng.random_range(0..=j);
        let res = perm[k];
        let b = class.weights[res];
        let units = row[res] / b;
        if units <= 0.0 {
            continue;
        }
        let tv = solve_class_thresholds(class, &row, t, horizon)?;
        let Threshold::Finite(mu) = tv.mu[j] else { continue };
        if !(mu > 0.0 && mu < class.dist.omega_bar()) {
            continue;
        }
        let u = rng.random_range(0.0..=1.0) * units;
        let mut shrunk = row.clone();
        shrunk[res] = (row[res] - b * u).max(0.0);
        let mu_small = solve_class_thresholds(class, &shrunk, t, horizon)?.mu[j];
        let lhs = class.dist.cdf(mu) - class.dist.cdf(mu_small.value());
        let pt = class.probability * tau;
        let rhs = (m_constant - 1.0) * u * u / (units * pt * mu) + u / (pt * mu);
        let ok = lhs <= rhs * (1.0 + 1e-9) + 1e-14;
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        tally.record(ratio, ok);
    }
    Ok(tally)
}

/// Largest `w₂(F(w₂)-F(w₁)) / ∫_{w₁}^{w₂} w dF` over random pairs in
/// `(0, ω̄)` relative to the certified `M`. The metric is the ratio divided
/// by `M`.
pub fn m_constant_soundness<R: Rng + ?Sized>(d: &SizeDistribution, cert: &RegularityCertificate, samples: usize, rng: &mut R) -> Tally {
    let mut tally = Tally::default();
    let omega = d.omega_bar();
    for _ in 0..samples {
        let a = omega * 10f64.powf(rng.random_range(-6.0..0.0));
        let b = omega * 10f64.powf(rng.random_range(-6.0..0.0));
        let (w1, w2) = if a < b { (a, b) } else { (b, a) };
        if w2 - w1 <= 1e-9 * w2 {
            continue;
        }
        let r = interval_size_ratio(d, w1, w2);
        tally.record(r / cert.m_constant, r <= cert.m_constant * (1.0 + 1e-9));
    }
    tally
}

// ---------------------------------------------------------------------------
// Distribution primitives

/// Density integrates to the CDF and `u·pdf` integrates to the partial
/// expectation on a grid inside the support. The metric is the absolute
/// error.
/// Adaptive Simpson over equal panels, so that densities vanishing on most
/// of `[a, b]` (mixtures with gaps) are not mistaken for zero.
fn panel_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == PANELS { b } else { lo + h };
            adaptive_simpson(&f, lo, hi, 1e-12 / PANELS as f64)
        })
        .sum()
}

pub fn distribution_primitives(d: &SizeDistribution, points: usize) -> Tally {
    let mut tally = Tally::default();
    if !d.has_density() {
        return tally;
    }
    let top = d.support_hi().unwrap_or_else(|| d.quantile(0.999));
    for k in 1..=points {
        let w = top * k as f64 / points as f64;
        let eps = 1e-12 * w;
        let mass = panel_simpson(|x| d.pdf(x), eps, w);
        let err = (mass - (d.cdf(w) - d.cdf(eps))).abs();
        tally.record(err, err <= 1e-8);
        let moment = panel_simpson(|x| x * d.pdf(x), eps, w);
        let err = (moment - (d.partial_expectation(w) - d.partial_expectation(eps))).abs();
        tally.record(err, err <= 1e-8);
    }
    tally
}

// ---------------------------------------------------------------------------
// Prophet checks

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub upper_bound: f64,
    pub hindsight_mean: f64,
    pub std_error: f64,
    pub paths: usize,
}

impl DominationReport {
    /// One-sided test at three standard errors.
    pub fn holds(&self) -> bool {
        let slack = 1e-9 * self.upper_bound.abs().max(1.0);
        self.upper_bound + slack >= self.hindsight_mean - 3.0 * self.std_error
    }
}

/// LP upper bound against the mean hindsight optimum over `paths` paths
/// (seeds `seed, seed+1, ...`).
pub fn prophet_domination(instance: &Instance, upper_bound: f64, paths: usize, seed: u64) -> Result<DominationReport> {
    let values = (0..paths)
        .map(|r| {
            let path = generate_path(instance, instance.horizon(), seed.wrapping_add(r as u64))?;
            Ok(hindsight_bruteforce(instance, &path)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, se) = mean_and_std_error(&values);
    Ok(DominationReport { upper_bound, hindsight_mean: mean, std_error: if se.is_nan() { 0.0 } else { se }, paths })
}

/// Sorted greedy against brute force on `paths` paths. The metric is the
/// absolute value difference.
pub fn oracle_agreement(instance: &Instance, paths: usize, seed: u64) -> Result<Tally> {
    let mut tally = Tally::default();
    for r in 0..paths {
        let path = generate_path(instance, instance.horizon(), seed.wrapping_add(r as u64))?;
        let a = hindsight_sorted_greedy(instance, &path)?.value;
        let b = hindsight_bruteforce(instance, &path)?.value;
        tally.record((a - b).abs(), a == b);
    }
    Ok(tally)
}

/// ATP1 against ATP2 decision by decision on `paths` paths. The metric is
/// the number of differing decisions.
pub fn policy_coincidence(instance: &Instance, paths: usize, seed: u64) -> Result<Tally> {
    let split = solve_split(instance)?;
    let mut tally = Tally::default();
    for r in 0..paths {
        let path = generate_path(instance, instance.horizon(), seed.wrapping_add(r as u64))?;
        let mut a = PolicyState::new(instance, PolicyKind::Atp1, Some(&split))?.with_log();
        let mut b = PolicyState::new(instance, PolicyKind::Atp2, None)?.with_log();
        drive(&mut a, &path)?;
        drive(&mut b, &path)?;
        let la = a.log().unwrap_or_default();
        let lb = b.log().unwrap_or_default();
        let differing = la.iter().zip(lb).filter(|(x, y)| x.decision.action != y.decision.action).count()
            + la.len().abs_diff(lb.len());
        tally.record(differing as f64, differing == 0);
    }
    Ok(tally)
}

// ---------------------------------------------------------------------------
// Instance report

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, status: CheckStatus, detail: impl Into<String>) -> Self {
        CheckOutcome { name: name.into(), status, detail: detail.into() }
    }

    fn from_tally(name: impl Into<String>, tally: Tally, metric: &str) -> Self {
        let status = if tally.checked == 0 {
            CheckStatus::Skip
        } else if tally.passed() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        let detail = format!("{} checked, {} violations, worst {metric} {:.3e}", tally.checked, tally.violations, tally.worst);
        CheckOutcome::new(name, status, detail)
    }

    fn from_error(name: impl Into<String>, e: &Error) -> Self {
        CheckOutcome::new(name, CheckStatus::Fail, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random states per class for the threshold and gradient checks.
    pub samples: usize,
    pub lambda: f64,
    pub grid_size: usize,
    /// Sample paths for the hindsight checks.
    pub paths: usize,
    /// Horizon cap for the hindsight checks.
    pub tiny_horizon: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 0, samples: 500, lambda: 0.5, grid_size: DEFAULT_GRID_SIZE, paths: 200, tiny_horizon: 6 }
    }
}

fn tally_or_fail(name: &str, metric: &str, r: Result<Tally>) -> CheckOutcome {
    match r {
        Ok(t) => CheckOutcome::from_tally(name, t, metric),
        Err(e) => CheckOutcome::from_error(name, &e),
    }
}

/// Runs every applicable check on `instance`.
pub fn verify_instance(instance: &Instance, cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let active: Vec<(usize, &RequestClass)> =
        instance.classes().iter().enumerate().filter(|(_, c)| c.probability > 0.0).collect();

    let mut certificates = Vec::new();
    for (i, class) in &active {
        let name = format!("regularity[class {i}]");
        match verify_regularity(&class.dist, cfg.lambda, cfg.grid_size) {
            Ok(cert) => {
                let sound = m_constant_soundness(&class.dist, &cert, cfg.samples, &mut rng);
                let detail = format!(
                    "gamma1 {:.4} gamma2 {:.4} alpha {:.4} M {:.4}; {} random pairs, worst ratio/M {:.6}",
                    cert.gamma1, cert.gamma2, cert.alpha, cert.m_constant, sound.checked, sound.worst
                );
                let status = if sound.passed() { CheckStatus::Pass } else { CheckStatus::Fail };
                out.push(CheckOutcome::new(name, status, detail));
                certificates.push((*i, Some(cert)));
            }
            Err(e) => {
                out.push(CheckOutcome::from_error(name, &e));
                certificates.push((*i, None));
            }
        }
    }

    for (i, class) in &active {
        out.push(CheckOutcome::from_tally(
            format!("primitives[class {i}]"),
            distribution_primitives(&class.dist, 25),
            "abs error",
        ));
    }

    let mut residuals = Tally::default();
    let mut failure = None;
    for (_, class) in &active {
        match threshold_residuals(class, cfg.samples, &mut rng) {
            Ok(t) => residuals.merge(t),
            Err(e) => failure = Some(e),
        }
    }
    out.push(match failure {
        Some(e) => CheckOutcome::from_error("threshold residuals", &e),
        None => CheckOutcome::from_tally("threshold residuals", residuals, "residual"),
    });
    if instance.is_resource_independent() {
        out.push(tally_or_fail(
            "pooled threshold residuals",
            "residual",
            pooled_residuals(instance.classes(), cfg.samples, &mut rng),
        ));
    } else {
        out.push(CheckOutcome::new("pooled threshold residuals", CheckStatus::Skip, "instance is not resource-independent"));
    }

    for (i, class) in &active {
        if class.max_reward() <= 0.0 {
            continue;
        }
        out.push(tally_or_fail(
            &format!("supergradient[class {i}]"),
            "rel error",
            supergradient_agreement(class, cfg.samples / 5 + 1, &mut rng),
        ));
        out.push(tally_or_fail(
            &format!("sub-LP closed form[class {i}]"),
            "rel error",
            sub_lp_agreement(class, 3, &mut rng),
        ));
    }

    for (i, cert) in &certificates {
        let class = &instance.classes()[*i];
        match cert {
            Some(cert) => {
                out.push(tally_or_fail(
                    &format!("1/mu convexity[class {i}]"),
                    "negative curvature",
                    inverse_threshold_convexity(class, cfg.samples, &mut rng),
                ));
                out.push(tally_or_fail(
                    &format!("second-order estimate[class {i}]"),
                    "lhs/rhs",
                    second_order_estimate(class, cert.m_constant, cfg.samples, &mut rng),
                ));
            }
            None => {
                for name in ["1/mu convexity", "second-order estimate"] {
                    out.push(CheckOutcome::new(
                        format!("{name}[class {i}]"),
                        CheckStatus::Skip,
                        "distribution is not certified",
                    ));
                }
            }
        }
    }

    match solve_split(instance) {
        Ok(split) => {
            out.push(match check_feasible(instance, &split, 1e-9) {
                Ok(()) => CheckOutcome::new(
                    "split feasibility",
                    CheckStatus::Pass,
                    format!("LP bound {:.10}, {} iterations, gap {:.3e}", split.objective, split.iterations, split.final_gap),
                ),
                Err(e) => CheckOutcome::from_error("split feasibility", &e),
            });
            if instance.is_resource_independent() {
                out.push(match pooled_upper_bound(instance) {
                    Ok(pooled) => {
                        let ok = pooled >= split.objective * (1.0 - 1e-6);
                        CheckOutcome::new(
                            "pooled bound ordering",
                            if ok { CheckStatus::Pass } else { CheckStatus::Fail },
                            format!("pooled {pooled:.10} vs LP {:.10}", split.objective),
                        )
                    }
                    Err(e) => CheckOutcome::from_error("pooled bound ordering", &e),
                });
            }
        }
        Err(e) => out.push(CheckOutcome::from_error("split feasibility", &e)),
    }

    let m = instance.num_resources();
    let mut tiny_t = cfg.tiny_horizon.min(instance.horizon()).max(1);
    while tiny_t > 1 && ((m + 1) as f64).powi(tiny_t as i32) > 1e5 {
        tiny_t -= 1;
    }
    let tiny = instance.with_horizon(tiny_t);
    out.push(
        match solve_split(&tiny).and_then(|s| prophet_domination(&tiny, s.objective, cfg.paths, cfg.seed)) {
            Ok(rep) => CheckOutcome::new(
                "prophet domination",
                if rep.holds() { CheckStatus::Pass } else { CheckStatus::Fail },
                format!(
                    "T={tiny_t}: LP bound {:.6} vs hindsight mean {:.6} (se {:.3e}, {} paths)",
                    rep.upper_bound, rep.hindsight_mean, rep.std_error, rep.paths
                ),
            ),
            Err(e) => CheckOutcome::from_error("prophet domination", &e),
        },
    );

    let unit_rewards = instance.classes().iter().all(|c| c.rewards[0] == 1.0);
    if m == 1 && unit_rewards {
        out.push(tally_or_fail("oracle agreement", "value difference", oracle_agreement(&tiny, cfg.paths, cfg.seed)));
    } else {
        out.push(CheckOutcome::new("oracle agreement", CheckStatus::Skip, "needs one resource and unit rewards"));
    }

    if m == 1 && instance.num_classes() == 1 && instance.is_resource_independent() && unit_rewards {
        out.push(tally_or_fail(
            "ATP1/ATP2 coincidence",
            "differing decisions",
            policy_coincidence(&instance.with_horizon(instance.horizon().min(1000)), 20, cfg.seed),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    #[test]
    fn residuals_on_every_family() {
        let mut r = rng();
        for f in 0..FAMILY_COUNT {
            let d = random_distribution(&mut r, f);
            let class = random_class(&mut r, 3, 0.4, d);
            let t = threshold_residuals(&class, 50, &mut r).unwrap();
            assert!(t.passed(), "family {f}: {t:?}");
        }
    }

    #[test]
    fn discretized_program_matches_closed_form() {
        let d = SizeDistribution::uniform(0.0, 1.0).unwrap();
        let class = RequestClass::new(1.0, vec![1.0], vec![1.0], d).unwrap();
        let lp = discretized_sub_lp(&class, &[2.0], 1, 100, 500).unwrap();
        let closed = evaluate_g(&class, &[2.0], 1, 100).unwrap();
        assert!((lp - closed).abs() / closed < 1e-3, "{lp} vs {closed}");
    }

    #[test]
    fn unit_instance_verifies() {
        let d = SizeDistribution::uniform(0.0, 1.0).unwrap();
        let class = RequestClass::new(1.0, vec![1.0], vec![1.0], d).unwrap();
        let inst = Instance::new(vec![1.0], vec![class], 100).unwrap();
        let cfg = VerifyConfig { samples: 50, paths: 50, grid_size: 1000, ..VerifyConfig::default() };
        let report = verify_instance(&inst, &cfg);
        for c in &report {
            assert_ne!(c.status, CheckStatus::Fail, "{c:?}");
        }
        assert!(report.iter().any(|c| c.name == "oracle agreement" && c.status == CheckStatus::Pass));
    }

    #[test]
    fn atom_fails_regularity() {
        let d = SizeDistribution::point_mass(0.5).unwrap();
        let class = RequestClass::new(1.0, vec![1.0], vec![1.0], d).unwrap();
        let inst = Instance::new(vec![1.0], vec![class], 20).unwrap();
        let cfg = VerifyConfig { samples: 20, paths: 20, grid_size: 1000, ..VerifyConfig::default() };
        let report = verify_instance(&inst, &cfg);
        assert!(report.iter().any(|c| c.name.starts_with("regularity") && c.status == CheckStatus::Fail));
    }
}

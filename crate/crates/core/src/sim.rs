//! Seeded sample paths, policy replay and Monte Carlo regret estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity_split::{solve_split, CapacitySplit};
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::model::{Instance, PROBABILITY_SLACK};
use crate::policies::{PolicyKind, PolicyState};

/// Realized arrivals: per period `None` (no arrival) or `(class, size)`
/// with a 0-indexed class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub draws: Vec<Option<(usize, f64)>>,
    pub seed: u64,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Draws `horizon` periods: class `i` with probability `p_i` (nothing with
/// the leftover probability), then a size from that class's law.
pub fn generate_path(instance: &Instance, horizon: usize, seed: u64) -> Result<SamplePath> {
    let probs: Vec<f64> = instance.classes().iter().map(|c| c.probability).collect();
    let sum: f64 = probs.iter().sum();
    if sum > 1.0 + PROBABILITY_SLACK {
        return Err(Error::InvalidProbabilities { sum });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let v: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if v < acc {
                chosen = Some(i);
                break;
            }
        }
        draws.push(chosen.map(|i| (i, instance.classes()[i].dist.sample(&mut rng))));
    }
    Ok(SamplePath { draws, seed })
}

/// A policy with its capacity split solved once, ready to replay paths.
#[derive(Debug, Clone)]
pub struct PreparedPolicy {
    pub kind: PolicyKind,
    pub split: Option<CapacitySplit>,
}

impl PreparedPolicy {
    pub fn new(instance: &Instance, kind: PolicyKind) -> Result<Self> {
        let split = if kind.needs_split() { Some(solve_split(instance)?) } else { None };
        // Surface applicability errors before any replication runs.
        PolicyState::new(instance, kind, split.as_ref())?;
        Ok(PreparedPolicy { kind, split })
    }

    pub fn state<'a>(&self, instance: &'a Instance) -> Result<PolicyState<'a>> {
        PolicyState::new(instance, self.kind, self.split.as_ref())
    }

    /// Total reward collected on `path`.
    pub fn run(&self, instance: &Instance, path: &SamplePath) -> Result<f64> {
        let mut state = self.state(instance)?;
        drive(&mut state, path)?;
        Ok(state.collected_reward())
    }
}

/// Feeds every period of `path` to `state`.
pub fn drive(state: &mut PolicyState<'_>, path: &SamplePath) -> Result<()> {
    for d in &path.draws {
        match d {
            Some((i, u)) => {
                state.step(*i, *u)?;
            }
            None => state.idle()?,
        }
    }
    Ok(())
}

/// Total reward of `kind` on `path` (solving the split if needed).
pub fn run_policy(instance: &Instance, kind: PolicyKind, path: &SamplePath) -> Result<f64> {
    PreparedPolicy::new(instance, kind)?.run(instance, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub horizon: usize,
    pub policy: PolicyKind,
    pub upper_bound: f64,
    pub mean_reward: f64,
    pub regret: f64,
    pub std_error: f64,
    pub replications: usize,
    pub base_seed: u64,
}

/// Sum in a fixed binary tree so the result does not depend on how
/// replications were scheduled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Mean and standard error (sample standard deviation over `√n`).
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Rewards of `replications` independent paths; replication `r` uses seed
/// `base_seed + r`.
pub fn replicate(instance: &Instance, policy: &PreparedPolicy, replications: usize, base_seed: u64) -> Result<Vec<f64>> {
    (0..replications)
        .into_par_iter()
        .map(|r| {
            let path = generate_path(instance, instance.horizon(), base_seed.wrapping_add(r as u64))?;
            policy.run(instance, &path)
        })
        .collect()
}

/// Regret of `kind` against the LP upper bound.
pub fn estimate_regret(instance: &Instance, kind: PolicyKind, replications: usize, base_seed: u64) -> Result<RegretReport> {
    if replications < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replications, got {replications}")));
    }
    let split = solve_split(instance)?;
    let upper_bound = split.objective;
    let policy = PreparedPolicy { kind, split: kind.needs_split().then_some(split) };
    policy.state(instance)?;
    let rewards = replicate(instance, &policy, replications, base_seed)?;
    let (mean_reward, std_error) = mean_and_std_error(&rewards);
    Ok(RegretReport {
        horizon: instance.horizon(),
        policy: kind,
        upper_bound,
        mean_reward,
        regret: upper_bound - mean_reward,
        std_error,
        replications,
        base_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<RegretReport>,
    /// Slope of regret against `ln T`.
    pub log_t_slope: f64,
    /// Slope of `ln(mean reward)` against `ln T`.
    pub scaling_exponent: f64,
    /// Residual sum of squares of regret against `ln T`.
    pub log_fit_rss: f64,
    /// Residual sum of squares of regret against `T`.
    pub linear_fit_rss: f64,
}

/// Runs [`estimate_regret`] over a strictly increasing horizon grid with
/// capacities held fixed, and fits the growth of regret and reward.
pub fn sweep_horizons(
    template: &Instance,
    kind: PolicyKind,
    grid: &[usize],
    replications: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument(format!("horizon grid needs at least 3 points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(Error::InvalidArgument("horizon grid must be positive and strictly increasing".into()));
    }
    let points = grid
        .iter()
        .map(|&t| estimate_regret(&template.with_horizon(t), kind, replications, base_seed))
        .collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = grid.iter().map(|&t| t as f64).collect();
    let log_ts: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let regrets: Vec<f64> = points.iter().map(|p| p.regret).collect();
    let log_fit = least_squares(&log_ts, &regrets);
    let linear_fit = least_squares(&ts, &regrets);
    let scaling_exponent = if points.iter().all(|p| p.mean_reward > 0.0) {
        let log_rewards: Vec<f64> = points.iter().map(|p| p.mean_reward.ln()).collect();
        least_squares(&log_ts, &log_rewards).slope
    } else {
        f64::NAN
    };
    Ok(SweepResult {
        points,
        log_t_slope: log_fit.slope,
        scaling_exponent,
        log_fit_rss: log_fit.rss,
        linear_fit_rss: linear_fit.rss,
    })
}

//! Benchmarks for the policies: the fluid LP upper bound on the hindsight
//! optimum, the pooled bound for resource-independent instances, and two
//! exact hindsight solvers for tiny sample paths.

use serde::{Deserialize, Serialize};

use crate::capacity_split::solve_split;
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::roots::Threshold;
use crate::sim::SamplePath;
use crate::thresholds::solve_pooled_threshold;

/// Largest `(m+1)^T` the brute-force solver will enumerate.
pub const BRUTEFORCE_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HindsightMethod {
    BruteForce,
    SortedGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HindsightResult {
    pub value: f64,
    /// Per period: `None` to reject, `Some(j)` for 0-indexed resource `j`.
    pub assignment: Vec<Option<usize>>,
    pub method: HindsightMethod,
}

/// Optimal value of the capacity-split program, an upper bound on the
/// expected hindsight optimum.
pub fn lp_upper_bound(instance: &Instance) -> Result<f64> {
    Ok(solve_split(instance)?.objective)
}

/// `T Σ_i p_i r_i F_i(r_i μ(c))` with `μ(c)` the pooled threshold at `t = 1`.
pub fn pooled_upper_bound(instance: &Instance) -> Result<f64> {
    instance.require_resource_independent()?;
    let horizon = instance.horizon();
    if horizon == 0 {
        return Ok(0.0);
    }
    let mu = solve_pooled_threshold(instance.classes(), instance.total_capacity(), 1, horizon)?;
    let sum: f64 = instance
        .classes()
        .iter()
        .filter(|c| c.probability > 0.0)
        .map(|c| {
            let r = c.rewards[0];
            let f = match mu {
                Threshold::Finite(x) => c.dist.cdf(r * x),
                Threshold::Unbounded => 1.0,
            };
            c.probability * r * f
        })
        .sum();
    Ok(horizon as f64 * sum)
}

struct Search<'a> {
    instance: &'a Instance,
    path: &'a SamplePath,
    /// `suffix[t]`: best possible reward from periods `t..`.
    suffix: Vec<f64>,
    remaining: Vec<f64>,
    current: Vec<Option<usize>>,
    best_value: f64,
    best: Vec<Option<usize>>,
}

impl Search<'_> {
    fn dfs(&mut self, t: usize, value: f64) {
        if t == self.current.len() {
            if value > self.best_value {
                self.best_value = value;
                self.best.clone_from(&self.current);
            }
            return;
        }
        if value + self.suffix[t] <= self.best_value {
            return;
        }
        self.current[t] = None;
        self.dfs(t + 1, value);
        if let Some((i, u)) = self.path.draws[t] {
            let class = &self.instance.classes()[i];
            for j in 0..self.remaining.len() {
                let need = class.weights[j] * u;
                if need <= self.remaining[j] {
                    let before = self.remaining[j];
                    self.remaining[j] = before - need;
                    self.current[t] = Some(j);
                    self.dfs(t + 1, value + class.rewards[j]);
                    self.remaining[j] = before;
                }
            }
            self.current[t] = None;
        }
    }
}

/// Exact hindsight optimum by depth-first enumeration with a
/// remaining-reward bound. Among optimal assignments the lexicographically
/// smallest (reject < resource 0 < resource 1 ...) is returned.
pub fn hindsight_bruteforce(instance: &Instance, path: &SamplePath) -> Result<HindsightResult> {
    let horizon = path.draws.len();
    let states = ((instance.num_resources() + 1) as f64).powi(horizon as i32);
    if states > BRUTEFORCE_LIMIT {
        return Err(Error::TooLarge { states, limit: BRUTEFORCE_LIMIT });
    }
    let mut suffix = vec![0.0; horizon + 1];
    for t in (0..horizon).rev() {
        let gain = match path.draws[t] {
            Some((i, _)) => instance.classes()[i].max_reward(),
            None => 0.0,
        };
        suffix[t] = suffix[t + 1] + gain;
    }
    let mut search = Search {
        instance,
        path,
        suffix,
        remaining: instance.capacities().to_vec(),
        current: vec![None; horizon],
        best_value: 0.0,
        best: vec![None; horizon],
    };
    search.dfs(0, 0.0);
    Ok(HindsightResult { value: search.best_value, assignment: search.best, method: HindsightMethod::BruteForce })
}

/// Hindsight optimum for one resource and unit rewards: serve requests in
/// increasing size order while they fit.
pub fn hindsight_sorted_greedy(instance: &Instance, path: &SamplePath) -> Result<HindsightResult> {
    if instance.num_resources() != 1 {
        return Err(Error::AssumptionViolation("sorted greedy needs a single resource".into()));
    }
    if instance.classes().iter().any(|c| c.rewards[0] != 1.0) {
        return Err(Error::AssumptionViolation("sorted greedy needs unit rewards".into()));
    }
    let mut requests: Vec<(usize, f64)> = path
        .draws
        .iter()
        .enumerate()
        .filter_map(|(t, d)| d.map(|(i, u)| (t, instance.classes()[i].weights[0] * u)))
        .collect();
    requests.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut assignment = vec![None; path.draws.len()];
    let mut remaining = instance.capacities()[0];
    let mut value = 0.0;
    for (t, need) in requests {
        if need > remaining {
            break;
        }
        remaining -= need;
        assignment[t] = Some(0);
        value += 1.0;
    }
    Ok(HindsightResult { value, assignment, method: HindsightMethod::SortedGreedy })
}

/// Checks an assignment against capacities and recomputes its value.
pub fn assignment_value(instance: &Instance, path: &SamplePath, assignment: &[Option<usize>]) -> Result<f64> {
    if assignment.len() != path.draws.len() {
        return Err(Error::InvalidArgument("assignment length differs from path length".into()));
    }
    let mut used = vec![0.0; instance.num_resources()];
    let mut value = 0.0;
    for (a, d) in assignment.iter().zip(&path.draws) {
        match (a, d) {
            (None, _) => {}
            (Some(_), None) => return Err(Error::InvalidArgument("assigned a period with no arrival".into())),
            (Some(j), Some((i, u))) => {
                let class = &instance.classes()[*i];
                used[*j] += class.weights[*j] * u;
                value += class.rewards[*j];
            }
        }
    }
    for (j, (u, c)) in used.iter().zip(instance.capacities()).enumerate() {
        if *u > c * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::InvalidArgument(format!("resource {j} over capacity: {u} > {c}")));
        }
    }
    Ok(value)
}

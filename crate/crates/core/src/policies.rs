//! Online decision rules.
//!
//! * `Atp1` re-solves each class's nested thresholds on the class's own
//!   capacity row every period and assigns the first resource in reward
//!   order whose truncated threshold admits the size.
//! * `Atp2` pools all capacity (resource-independent instances only),
//!   re-solves one threshold and offers the request to the resource with
//!   the most capacity left.
//! * `Greedy` accepts whenever the request fits on its best resource.
//! * `StaticThreshold` is `Atp1` with thresholds frozen at their `t = 1`
//!   values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::capacity_split::{check_feasible, CapacitySplit};
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::roots::Threshold;
use crate::thresholds::{reward_permutation, solve_pooled_threshold, solve_with_permutation};

/// Tolerance on split feasibility accepted by [`PolicyState::atp1`].
pub const SPLIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Atp1,
    Atp2,
    Greedy,
    StaticThreshold,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [PolicyKind::Atp1, PolicyKind::Atp2, PolicyKind::Greedy, PolicyKind::StaticThreshold];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Atp1 => "atp1",
            PolicyKind::Atp2 => "atp2",
            PolicyKind::Greedy => "greedy",
            PolicyKind::StaticThreshold => "static",
        }
    }

    /// Whether the policy starts from a capacity split.
    pub fn needs_split(self) -> bool {
        matches!(self, PolicyKind::Atp1 | PolicyKind::StaticThreshold)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "atp1" => Ok(PolicyKind::Atp1),
            "atp2" => Ok(PolicyKind::Atp2),
            "greedy" => Ok(PolicyKind::Greedy),
            "static" | "static_threshold" => Ok(PolicyKind::StaticThreshold),
            other => Err(Error::InvalidArgument(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Reject,
    /// 0-indexed resource.
    Assign(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    /// Untruncated threshold that decided the request (the assigned
    /// resource's, or the loosest one on rejection).
    pub threshold_used: Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: usize,
    pub class: usize,
    pub size: f64,
    pub decision: Decision,
}

/// Running state of one policy on one sample path.
#[derive(Debug, Clone)]
pub struct PolicyState<'a> {
    instance: &'a Instance,
    kind: PolicyKind,
    /// `n x m` for split-based policies, `1 x m` otherwise.
    capacity: Vec<Vec<f64>>,
    permutations: Vec<Vec<usize>>,
    /// Thresholds frozen at `t = 1` (static policy only).
    frozen: Vec<Option<Vec<Threshold>>>,
    t: usize,
    collected_reward: f64,
    log: Option<Vec<LogEntry>>,
}

impl<'a> PolicyState<'a> {
    fn base(instance: &'a Instance, kind: PolicyKind, capacity: Vec<Vec<f64>>) -> Self {
        PolicyState {
            instance,
            kind,
            capacity,
            permutations: instance.classes().iter().map(|c| reward_permutation(&c.rewards)).collect(),
            frozen: Vec::new(),
            t: 1,
            collected_reward: 0.0,
            log: None,
        }
    }

    /// Capacity rows from a split, with rounding excess scaled away so the
    /// rows never jointly exceed a resource's capacity.
    fn split_rows(instance: &Instance, split: &CapacitySplit) -> Result<Vec<Vec<f64>>> {
        check_feasible(instance, split, SPLIT_TOL)?;
        let mut rows: Vec<Vec<f64>> = split.c_star.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect();
        for (j, &c) in instance.capacities().iter().enumerate() {
            let used: f64 = rows.iter().map(|r| r[j]).sum();
            if used > c {
                let scale = c / used;
                for r in rows.iter_mut() {
                    r[j] *= scale;
                }
            }
        }
        Ok(rows)
    }

    pub fn atp1(instance: &'a Instance, split: &CapacitySplit) -> Result<Self> {
        let rows = Self::split_rows(instance, split)?;
        Ok(Self::base(instance, PolicyKind::Atp1, rows))
    }

    pub fn atp2(instance: &'a Instance) -> Result<Self> {
        instance.require_resource_independent()?;
        Ok(Self::base(instance, PolicyKind::Atp2, vec![instance.capacities().to_vec()]))
    }

    pub fn greedy(instance: &'a Instance) -> Self {
        Self::base(instance, PolicyKind::Greedy, vec![instance.capacities().to_vec()])
    }

    pub fn static_threshold(instance: &'a Instance, split: &CapacitySplit) -> Result<Self> {
        let rows = Self::split_rows(instance, split)?;
        let mut state = Self::base(instance, PolicyKind::StaticThreshold, rows);
        let horizon = instance.horizon();
        state.frozen = instance
            .classes()
            .iter()
            .enumerate()
            .map(|(i, class)| {
                if class.probability <= 0.0 || horizon == 0 {
                    return None;
                }
                solve_with_permutation(class, &state.permutations[i], &state.capacity[i], 1, horizon)
                    .ok()
                    .map(|tv| tv.mu)
            })
            .collect();
        Ok(state)
    }

    /// Builds the state for `kind`; `split` is required for split-based
    /// policies and ignored otherwise.
    pub fn new(instance: &'a Instance, kind: PolicyKind, split: Option<&CapacitySplit>) -> Result<Self> {
        let need = || Error::InvalidArgument(format!("policy {kind} needs a capacity split"));
        match kind {
            PolicyKind::Atp1 => Self::atp1(instance, split.ok_or_else(need)?),
            PolicyKind::Atp2 => Self::atp2(instance),
            PolicyKind::Greedy => Ok(Self::greedy(instance)),
            PolicyKind::StaticThreshold => Self::static_threshold(instance, split.ok_or_else(need)?),
        }
    }

    /// Records every decision from now on.
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn capacity(&self) -> &[Vec<f64>] {
        &self.capacity
    }

    /// Current period (1-indexed); `horizon + 1` once the path is over.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn horizon(&self) -> usize {
        self.instance.horizon()
    }

    pub fn collected_reward(&self) -> f64 {
        self.collected_reward
    }

    pub fn log(&self) -> Option<&[LogEntry]> {
        self.log.as_deref()
    }

    fn check_period(&self) -> Result<()> {
        if self.t > self.instance.horizon() {
            return Err(Error::HorizonExceeded { t: self.t, horizon: self.instance.horizon() });
        }
        Ok(())
    }

    /// Advances through a period with no arrival.
    pub fn idle(&mut self) -> Result<()> {
        self.check_period()?;
        self.t += 1;
        Ok(())
    }

    /// Decides on a request of class `class` with size draw `u`, updates
    /// capacity and reward, and advances the period.
    pub fn step(&mut self, class: usize, u: f64) -> Result<Decision> {
        self.check_period()?;
        if class >= self.instance.num_classes() {
            return Err(Error::InvalidArgument(format!("class index {class} out of range")));
        }
        let decision = match self.kind {
            PolicyKind::Atp1 => self.nested_step(class, u, false)?,
            PolicyKind::StaticThreshold => self.nested_step(class, u, true)?,
            PolicyKind::Atp2 => self.pooled_step(class, u)?,
            PolicyKind::Greedy => self.greedy_step(class, u),
        };
        if let Action::Assign(j) = decision.action {
            self.collected_reward += self.instance.classes()[class].rewards[j];
        }
        if let Some(log) = self.log.as_mut() {
            log.push(LogEntry { t: self.t, class, size: u, decision });
        }
        self.t += 1;
        Ok(decision)
    }

    fn nested_step(&mut self, i: usize, u: f64, frozen: bool) -> Result<Decision> {
        let class = &self.instance.classes()[i];
        let perm = &self.permutations[i];
        let mu = if frozen {
            match &self.frozen[i] {
                Some(mu) => mu.clone(),
                None => return Ok(Decision { action: Action::Reject, threshold_used: Threshold::Finite(0.0) }),
            }
        } else {
            match solve_with_permutation(class, perm, &self.capacity[i], self.t, self.instance.horizon()) {
                Ok(tv) => tv.mu,
                Err(Error::DegenerateClass) => {
                    return Ok(Decision { action: Action::Reject, threshold_used: Threshold::Finite(0.0) })
                }
                Err(e) => return Err(e),
            }
        };
        let row = &mut self.capacity[i];
        for (k, &j) in perm.iter().enumerate() {
            let b = class.weights[j];
            let h = mu[k].min_with(row[j] / b);
            let need = b * u;
            if u <= h && need <= row[j] {
                row[j] = (row[j] - need).max(0.0);
                return Ok(Decision { action: Action::Assign(j), threshold_used: mu[k] });
            }
        }
        Ok(Decision { action: Action::Reject, threshold_used: *mu.last().unwrap() })
    }

    fn pooled_step(&mut self, i: usize, u: f64) -> Result<Decision> {
        let row = &mut self.capacity[0];
        let mut jt = 0;
        for (j, &c) in row.iter().enumerate() {
            if c > row[jt] {
                jt = j;
            }
        }
        let total: f64 = row.iter().sum();
        let mu = solve_pooled_threshold(self.instance.classes(), total, self.t, self.instance.horizon())?;
        let r = self.instance.classes()[i].rewards[0];
        let scaled = match mu {
            Threshold::Finite(x) => Threshold::Finite(r * x),
            Threshold::Unbounded => Threshold::Unbounded,
        };
        let h = scaled.min_with(row[jt]);
        if u <= h && u <= row[jt] && r > 0.0 {
            row[jt] = (row[jt] - u).max(0.0);
            return Ok(Decision { action: Action::Assign(jt), threshold_used: scaled });
        }
        Ok(Decision { action: Action::Reject, threshold_used: scaled })
    }

    fn greedy_step(&mut self, i: usize, u: f64) -> Decision {
        let class = &self.instance.classes()[i];
        let row = &mut self.capacity[0];
        for &j in &self.permutations[i] {
            let need = class.weights[j] * u;
            if class.rewards[j] > 0.0 && need <= row[j] {
                row[j] = (row[j] - need).max(0.0);
                return Decision { action: Action::Assign(j), threshold_used: Threshold::Unbounded };
            }
        }
        Decision { action: Action::Reject, threshold_used: Threshold::Unbounded }
    }
}

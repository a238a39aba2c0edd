//! Splitting each resource's capacity across request classes so that the
//! sum of the per-class fluid values is maximal.
//!
//! Each class value `G_i` is concave in its capacity row, and the feasible
//! set is a product over resources of `{x >= 0, Σ_i x_i <= c_j}`, so the
//! problem is solved by projected supergradient ascent followed by a
//! monotone backtracking phase that sharpens the best iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, RequestClass};
use crate::roots::Threshold;
use crate::thresholds::{periods_left, reward_permutation, solve_with_permutation};

/// Iteration cap of the supergradient phase.
pub const MAX_ITERATIONS: usize = 5000;

/// Iteration cap of the backtracking phase.
const MAX_POLISH_ITERATIONS: usize = 20_000;

/// Iterates are clamped to at least this fraction of `c_j` before a
/// supergradient is taken.
pub const INTERIOR_EPS: f64 = 1e-9;

/// Relative improvement below which the ascent is considered converged.
pub const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySplit {
    /// `c_star[i][j]`: capacity of resource `j` reserved for class `i`.
    pub c_star: Vec<Vec<f64>>,
    /// `Σ_i G_i(c_star[i], 1)`.
    pub objective: f64,
    pub iterations: usize,
    /// Upper bound on the distance of `objective` from the true optimum,
    /// from the linearization at the final iterate.
    pub final_gap: f64,
}

fn cdf_at(class: &RequestClass, mu: Threshold) -> f64 {
    match mu {
        Threshold::Finite(w) => class.dist.cdf(w),
        Threshold::Unbounded => 1.0,
    }
}

/// Reward drops `r_{i_j} - r_{i_{j+1}}` along the permutation.
fn reward_drops(class: &RequestClass, perm: &[usize]) -> Vec<f64> {
    (0..perm.len())
        .map(|k| {
            let next = if k + 1 < perm.len() { class.rewards[perm[k + 1]] } else { 0.0 };
            class.rewards[perm[k]] - next
        })
        .collect()
}

/// Closed-form value of the class sub-problem with capacities `c_tilde`
/// from period `t` on: `(T-t+1) p Σ_j (r_{i_j} - r_{i_{j+1}}) F(μ_j)`.
pub fn evaluate_g(class: &RequestClass, c_tilde: &[f64], t: usize, horizon: usize) -> Result<f64> {
    let tau = periods_left(t, horizon)?;
    if class.probability <= 0.0 {
        return Ok(0.0);
    }
    let perm = reward_permutation(&class.rewards);
    let tv = solve_with_permutation(class, &perm, c_tilde, t, horizon)?;
    let drops = reward_drops(class, &perm);
    let sum: f64 = drops.iter().zip(&tv.mu).map(|(d, mu)| d * cdf_at(class, *mu)).sum();
    Ok(tau * class.probability * sum)
}

/// Supergradient of [`evaluate_g`] in original resource indexing:
/// `∂G/∂c̃_{i_j} = Σ_{k≥j} (r_{i_k} - r_{i_{k+1}}) / (b_{i_j} μ_k)`, with
/// unbounded thresholds contributing nothing.
pub fn supergradient_g(class: &RequestClass, c_tilde: &[f64], t: usize, horizon: usize) -> Result<Vec<f64>> {
    periods_left(t, horizon)?;
    let m = class.rewards.len();
    if class.probability <= 0.0 {
        return Ok(vec![0.0; m]);
    }
    let perm = reward_permutation(&class.rewards);
    let tv = solve_with_permutation(class, &perm, c_tilde, t, horizon)?;
    let drops = reward_drops(class, &perm);
    for (k, mu) in tv.mu.iter().enumerate() {
        if drops[k] > 0.0 && *mu == Threshold::Finite(0.0) {
            return Err(Error::SingularCapacity { resource: perm[k] });
        }
    }
    Ok(gradient_from(class, &perm, &drops, &tv.mu))
}

/// Suffix sums of `drop_k / μ_k`, scaled per coordinate by `1/b`. Terms
/// with `μ_k = 0` are skipped; the caller guarantees they only touch
/// coordinates pinned at zero.
fn gradient_from(class: &RequestClass, perm: &[usize], drops: &[f64], mu: &[Threshold]) -> Vec<f64> {
    let m = perm.len();
    let mut g = vec![0.0; m];
    let mut suffix = 0.0;
    for k in (0..m).rev() {
        if let Threshold::Finite(w) = mu[k] {
            if drops[k] > 0.0 && w > 0.0 {
                suffix += drops[k] / w;
            }
        }
        g[perm[k]] = suffix / class.weights[perm[k]];
    }
    g
}

/// Euclidean projection of `v` onto `{x >= 0, Σx <= cap}`.
pub fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let pos: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if pos.iter().sum::<f64>() <= cap {
        return pos;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let candidate = (cumsum - cap) / (k + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Working data for one split solve: the classes that can earn reward and
/// their fixed permutations.
struct Problem<'a> {
    classes: Vec<(usize, &'a RequestClass, Vec<usize>, Vec<f64>)>,
    capacities: &'a [f64],
    tau: f64,
    horizon: usize,
}

impl Problem<'_> {
    fn class_value(&self, class: &RequestClass, perm: &[usize], drops: &[f64], row: &[f64]) -> Result<(f64, Vec<Threshold>)> {
        let tv = solve_with_permutation(class, perm, row, 1, self.horizon)?;
        let v: f64 = drops.iter().zip(&tv.mu).map(|(d, mu)| d * cdf_at(class, *mu)).sum();
        Ok((self.tau * class.probability * v, tv.mu))
    }

    fn objective(&self, x: &[Vec<f64>]) -> Result<f64> {
        let mut total = 0.0;
        for (a, (_, class, perm, drops)) in self.classes.iter().enumerate() {
            total += self.class_value(class, perm, drops, &x[a])?.0;
        }
        Ok(total)
    }

    fn clamp(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|row| row.iter().zip(self.capacities).map(|(v, c)| v.max(INTERIOR_EPS * c)).collect())
            .collect()
    }

    /// Value and supergradient at the interior-clamped point.
    fn value_and_gradient(&self, x: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
        let xc = self.clamp(x);
        let mut total = 0.0;
        let mut grad = Vec::with_capacity(xc.len());
        for (a, (_, class, perm, drops)) in self.classes.iter().enumerate() {
            let (v, mu) = self.class_value(class, perm, drops, &xc[a])?;
            total += v;
            let mut g = gradient_from(class, perm, drops, &mu);
            for (gj, c) in g.iter_mut().zip(self.capacities) {
                if *c <= 0.0 {
                    *gj = 0.0;
                }
            }
            grad.push(g);
        }
        Ok((total, grad))
    }

    fn step(&self, x: &[Vec<f64>], grad: &[Vec<f64>], scale: f64) -> Vec<Vec<f64>> {
        let n = x.len();
        let m = self.capacities.len();
        let mut out = vec![vec![0.0; m]; n];
        for j in 0..m {
            let column: Vec<f64> = (0..n).map(|a| x[a][j] + scale * grad[a][j]).collect();
            let projected = project_capped_simplex(&column, self.capacities[j]);
            for a in 0..n {
                out[a][j] = projected[a];
            }
        }
        out
    }

    /// Linearization bound `max_y g·(y - x_c) + G(x_c) - G(x)`.
    fn gap(&self, x: &[Vec<f64>], value: f64) -> Result<f64> {
        let (clamped_value, grad) = self.value_and_gradient(x)?;
        let xc = self.clamp(x);
        let mut lin = 0.0;
        for (j, c) in self.capacities.iter().enumerate() {
            let best = grad.iter().map(|g| g[j]).fold(0.0, f64::max);
            lin += c * best;
            for a in 0..grad.len() {
                lin -= grad[a][j] * xc[a][j];
            }
        }
        Ok((clamped_value + lin - value).max(0.0))
    }
}

fn norm(g: &[Vec<f64>]) -> f64 {
    g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Maximizes `Σ_i G_i(c̃_i, 1)` over all feasible capacity splits.
pub fn solve_split(instance: &Instance) -> Result<CapacitySplit> {
    let horizon = instance.horizon();
    let n = instance.num_classes();
    let m = instance.num_resources();
    let capacities = instance.capacities();
    let mut c_star = vec![vec![0.0; m]; n];
    if horizon == 0 {
        return Ok(CapacitySplit { c_star, objective: 0.0, iterations: 0, final_gap: 0.0 });
    }
    let classes: Vec<_> = instance
        .classes()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.probability > 0.0 && c.max_reward() > 0.0)
        .map(|(i, c)| {
            let perm = reward_permutation(&c.rewards);
            let drops = reward_drops(c, &perm);
            (i, c, perm, drops)
        })
        .collect();
    if classes.is_empty() {
        return Ok(CapacitySplit { c_star, objective: 0.0, iterations: 0, final_gap: 0.0 });
    }
    let problem = Problem { classes, capacities, tau: horizon as f64, horizon };

    let p_total: f64 = problem.classes.iter().map(|(_, c, _, _)| c.probability).sum();
    let mut x: Vec<Vec<f64>> = problem
        .classes
        .iter()
        .map(|(_, c, _, _)| capacities.iter().map(|cj| cj * c.probability / p_total).collect())
        .collect();

    let mut iterations = 0;
    if problem.classes.len() > 1 {
        let eta0 = capacities.iter().copied().fold(0.0, f64::max);
        let mut best_value = problem.objective(&x)?;
        let mut best = x.clone();
        let mut last_step = eta0;
        for k in 1..=MAX_ITERATIONS {
            iterations = k;
            let (_, grad) = problem.value_and_gradient(&x)?;
            let gn = norm(&grad);
            if gn == 0.0 || !gn.is_finite() {
                break;
            }
            last_step = eta0 / (k as f64).sqrt();
            x = problem.step(&x, &grad, last_step / gn);
            let v = problem.objective(&x)?;
            if v > best_value {
                best_value = v;
                best = x.clone();
            }
        }

        // Monotone backtracking from the best iterate.
        x = best;
        let mut value = best_value;
        let mut s = last_step;
        let floor = 1e-15 * eta0.max(f64::MIN_POSITIVE);
        let mut window_start = value;
        let mut converged = false;
        for it in 0..MAX_POLISH_ITERATIONS {
            iterations += 1;
            if s < floor {
                converged = true;
                break;
            }
            let (_, grad) = problem.value_and_gradient(&x)?;
            let gn = norm(&grad);
            if gn == 0.0 || !gn.is_finite() {
                converged = true;
                break;
            }
            let y = problem.step(&x, &grad, s / gn);
            let vy = problem.objective(&y)?;
            if vy > value {
                x = y;
                value = vy;
                s *= 2.0;
            } else {
                s *= 0.5;
            }
            if (it + 1) % 1000 == 0 {
                let rel = (value - window_start) / value.abs().max(f64::MIN_POSITIVE);
                if rel <= CONVERGENCE_TOL {
                    converged = true;
                    break;
                }
                window_start = value;
            }
        }
        if !converged {
            let rel = (value - window_start) / value.abs().max(f64::MIN_POSITIVE);
            if rel > CONVERGENCE_TOL {
                return Err(Error::NonConvergence { iterations, improvement: rel });
            }
        }
    } else {
        x = vec![capacities.to_vec()];
    }

    let objective = problem.objective(&x)?;
    let final_gap = problem.gap(&x, objective)?;
    for (a, (i, _, _, _)) in problem.classes.iter().enumerate() {
        c_star[*i] = x[a].clone();
    }
    Ok(CapacitySplit { c_star, objective, iterations, final_gap })
}

/// Checks `c_star >= -tol` and `Σ_i c_star[i][j] <= c_j + tol`.
pub fn check_feasible(instance: &Instance, split: &CapacitySplit, tol: f64) -> Result<()> {
    let n = instance.num_classes();
    let m = instance.num_resources();
    if split.c_star.len() != n || split.c_star.iter().any(|row| row.len() != m) {
        return Err(Error::InfeasibleSplit(format!("split must be {n}x{m}")));
    }
    for (i, row) in split.c_star.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !(*v >= -tol) {
                return Err(Error::InfeasibleSplit(format!("entry ({i}, {j}) = {v} is negative")));
            }
        }
    }
    for (j, c) in instance.capacities().iter().enumerate() {
        let used: f64 = split.c_star.iter().map(|row| row[j]).sum();
        if used > c + tol {
            return Err(Error::InfeasibleSplit(format!("resource {j} allocates {used} > capacity {c}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SizeDistribution;

    fn unif() -> SizeDistribution {
        SizeDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn g_examples() {
        let c = RequestClass::new(1.0, vec![1.0], vec![1.0], unif()).unwrap();
        assert!((evaluate_g(&c, &[0.02], 1, 100).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(evaluate_g(&c, &[0.0], 1, 100).unwrap(), 0.0);
        let z = RequestClass::new(1.0, vec![0.0, 0.0], vec![1.0, 1.0], unif()).unwrap();
        assert_eq!(evaluate_g(&z, &[0.5, 0.5], 1, 100).unwrap(), 0.0);
    }

    #[test]
    fn supergradient_examples() {
        let c = RequestClass::new(1.0, vec![1.0], vec![1.0], unif()).unwrap();
        let g = supergradient_g(&c, &[0.02], 1, 100).unwrap();
        assert!((g[0] - 50.0).abs() < 1e-8);
        assert_eq!(supergradient_g(&c, &[80.0], 1, 100).unwrap(), vec![0.0]);
        assert!(matches!(supergradient_g(&c, &[0.0], 1, 100), Err(Error::SingularCapacity { resource: 0 })));
    }

    #[test]
    fn two_resource_gradient_expansion() {
        let c = RequestClass::new(1.0, vec![2.0, 1.0], vec![1.0, 1.0], unif()).unwrap();
        let ct = [0.01, 0.02];
        let tv = crate::thresholds::solve_class_thresholds(&c, &ct, 1, 100).unwrap();
        let (m1, m2) = (tv.mu[0].value(), tv.mu[1].value());
        let g = supergradient_g(&c, &ct, 1, 100).unwrap();
        assert!((g[0] - (1.0 / m1 + 1.0 / m2)).abs() < 1e-9 * g[0]);
        assert!((g[1] - 1.0 / m2).abs() < 1e-9 * g[1]);
    }

    #[test]
    fn projection() {
        assert_eq!(project_capped_simplex(&[0.2, -0.1], 1.0), vec![0.2, 0.0]);
        let p = project_capped_simplex(&[1.0, 1.0], 1.0);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let p = project_capped_simplex(&[2.0, 0.0, -1.0], 1.0);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn single_class_takes_everything() {
        let c = RequestClass::new(0.7, vec![1.0, 3.0], vec![1.0, 2.0], unif()).unwrap();
        let inst = Instance::new(vec![1.0, 2.0], vec![c], 50).unwrap();
        let s = solve_split(&inst).unwrap();
        assert_eq!(s.c_star, vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn symmetric_split() {
        let c = RequestClass::new(0.5, vec![1.0], vec![1.0], unif()).unwrap();
        let inst = Instance::new(vec![1.0], vec![c.clone(), c], 100).unwrap();
        let s = solve_split(&inst).unwrap();
        assert!((s.c_star[0][0] - 0.5).abs() < 1e-4, "{:?}", s);
        assert!((s.c_star[1][0] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn degenerate_class_gets_nothing() {
        let a = RequestClass::new(1.0, vec![1.0], vec![1.0], unif()).unwrap();
        let b = RequestClass::new(0.0, vec![1.0], vec![1.0], unif()).unwrap();
        let inst = Instance::new(vec![1.0], vec![a, b], 100).unwrap();
        let s = solve_split(&inst).unwrap();
        assert_eq!(s.c_star[1], vec![0.0]);
        assert_eq!(s.c_star[0], vec![1.0]);
    }
}

mod common;

use atp_core::capacity_split::check_feasible;
use atp_core::{evaluate_g, solve_split, supergradient_g, CapacitySplit, Error, Instance, RequestClass, SizeDistribution};
use common::{class, instance};
use proptest::prelude::*;

fn split_value(inst: &Instance, rows: &[Vec<f64>]) -> f64 {
    inst.classes().iter().zip(rows).map(|(c, row)| evaluate_g(c, row, 1, inst.horizon()).unwrap()).sum()
}

/// Best split of one resource among `n ≤ 3` classes on a grid of step
/// `capacity / 1000`.
fn grid_optimum(inst: &Instance) -> f64 {
    let cap = inst.capacities()[0];
    let steps = 1000;
    let h = cap / steps as f64;
    let g = |i: usize, x: f64| evaluate_g(&inst.classes()[i], &[x], 1, inst.horizon()).unwrap();
    let table: Vec<Vec<f64>> = (0..inst.num_classes()).map(|i| (0..=steps).map(|k| g(i, k as f64 * h)).collect()).collect();
    let mut best = f64::NEG_INFINITY;
    match inst.num_classes() {
        2 => {
            for a in 0..=steps {
                best = best.max(table[0][a] + table[1][steps - a]);
            }
        }
        3 => {
            for a in 0..=steps {
                for b in 0..=steps - a {
                    best = best.max(table[0][a] + table[1][b] + table[2][steps - a - b]);
                }
            }
        }
        _ => unreachable!("grid oracle covers two or three classes"),
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn splits_are_feasible_and_consistent(inst in (1usize..4, 1usize..4, 10usize..2000).prop_flat_map(|(n, m, t)| instance(n, m, t))) {
        let split = solve_split(&inst).unwrap();
        check_feasible(&inst, &split, 1e-9).unwrap();
        for (j, c) in inst.capacities().iter().enumerate() {
            let used: f64 = split.c_star.iter().map(|r| r[j]).sum();
            prop_assert!(used <= c * (1.0 + 1e-9));
        }
        let value = split_value(&inst, &split.c_star);
        prop_assert!((value - split.objective).abs() <= 1e-9 * value.max(1.0));
        prop_assert!(split.final_gap >= 0.0);
    }

    #[test]
    fn split_matches_grid_search(inst in (2usize..4, 10usize..2000).prop_flat_map(|(n, t)| instance(n, 1, t))) {
        let split = solve_split(&inst).unwrap();
        let oracle = grid_optimum(&inst);
        prop_assert!(
            (split.objective - oracle).abs() <= 1e-3 * oracle.max(1e-12),
            "ascent {} vs grid {oracle}", split.objective
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn sub_problem_value_is_concave(
        c in (1usize..4).prop_flat_map(|m| (class(m, 0.6), prop::collection::vec(0.0..20.0f64, m), prop::collection::vec(0.0..20.0f64, m))),
        horizon in 1usize..2000,
    ) {
        let (class, a, b) = c;
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let ga = evaluate_g(&class, &a, 1, horizon).unwrap();
        let gb = evaluate_g(&class, &b, 1, horizon).unwrap();
        let gm = evaluate_g(&class, &mid, 1, horizon).unwrap();
        prop_assert!(gm >= 0.5 * (ga + gb) - 1e-9 * gm.abs().max(1.0), "{gm} < ({ga} + {gb}) / 2");
    }

    #[test]
    fn supergradient_supports_the_value(
        c in (1usize..4).prop_flat_map(|m| (class(m, 0.6), prop::collection::vec(0.01..20.0f64, m), prop::collection::vec(0.0..20.0f64, m))),
        horizon in 1usize..2000,
    ) {
        let (class, x, y) = c;
        let gx = evaluate_g(&class, &x, 1, horizon).unwrap();
        let gy = evaluate_g(&class, &y, 1, horizon).unwrap();
        let grad = supergradient_g(&class, &x, 1, horizon).unwrap();
        let linear: f64 = grad.iter().zip(x.iter().zip(&y)).map(|(g, (a, b))| g * (b - a)).sum();
        prop_assert!(gy <= gx + linear + 1e-9 * gx.abs().max(1.0), "{gy} > {gx} + {linear}");
    }

    #[test]
    fn supergradient_matches_finite_differences(
        c in (1usize..4).prop_flat_map(|m| (class(m, 0.6), prop::collection::vec(0.05..0.3f64, m))),
        horizon in 10usize..2000,
    ) {
        // Interior states: every cumulative target stays well below p τ E[u].
        let (class, fracs) = c;
        let scale = class.probability * horizon as f64 * class.dist.mean();
        let x: Vec<f64> = fracs.iter().zip(&class.weights).map(|(f, b)| f * scale * b / fracs.len() as f64).collect();
        let grad = supergradient_g(&class, &x, 1, horizon).unwrap();
        for j in 0..x.len() {
            let h = 1e-6 * x[j];
            let mut up = x.clone();
            up[j] += h;
            let mut down = x.clone();
            down[j] -= h;
            let fd = (evaluate_g(&class, &up, 1, horizon).unwrap() - evaluate_g(&class, &down, 1, horizon).unwrap()) / (2.0 * h);
            prop_assert!((fd - grad[j]).abs() <= 1e-4 * grad[j].abs().max(1e-8), "coordinate {j}: fd {fd} vs {}", grad[j]);
        }
    }
}

fn uniform_class(p: f64) -> RequestClass {
    RequestClass::new(p, vec![1.0], vec![1.0], SizeDistribution::uniform(0.0, 1.0).unwrap()).unwrap()
}

#[test]
fn sub_problem_examples() {
    let u = uniform_class(1.0);
    assert!((evaluate_g(&u, &[0.02], 1, 100).unwrap() - 2.0).abs() < 1e-10);
    assert_eq!(evaluate_g(&u, &[0.0], 1, 100).unwrap(), 0.0);
    let zero = RequestClass::new(1.0, vec![0.0, 0.0], vec![1.0, 1.0], SizeDistribution::uniform(0.0, 1.0).unwrap()).unwrap();
    assert_eq!(evaluate_g(&zero, &[1.0, 1.0], 1, 100).unwrap(), 0.0);
    let g = supergradient_g(&u, &[0.02], 1, 100).unwrap();
    assert!((g[0] - 50.0).abs() < 1e-8);
    assert_eq!(supergradient_g(&u, &[300.0], 1, 100).unwrap(), vec![0.0]);
}

#[test]
fn split_examples() {
    let d = SizeDistribution::exponential(2.0).unwrap();
    let one = Instance::new(vec![1.0, 2.0], vec![RequestClass::new(0.5, vec![1.0, 2.0], vec![1.0, 1.0], d).unwrap()], 100).unwrap();
    assert_eq!(solve_split(&one).unwrap().c_star, vec![vec![1.0, 2.0]]);

    let sym = Instance::new(vec![1.0], vec![uniform_class(0.5), uniform_class(0.5)], 100).unwrap();
    let s = solve_split(&sym).unwrap();
    assert!((s.c_star[0][0] - 0.5).abs() < 1e-4 && (s.c_star[1][0] - 0.5).abs() < 1e-4);

    let degenerate = Instance::new(vec![1.0], vec![uniform_class(1.0), uniform_class(0.0)], 100).unwrap();
    let s = solve_split(&degenerate).unwrap();
    assert_eq!(s.c_star[1][0], 0.0);
}

#[test]
fn negative_split_entries_are_infeasible() {
    let inst = Instance::new(vec![1.0], vec![uniform_class(0.5), uniform_class(0.5)], 100).unwrap();
    let bad = CapacitySplit { c_star: vec![vec![1.5], vec![-0.5]], objective: 0.0, iterations: 0, final_gap: 0.0 };
    assert!(matches!(check_feasible(&inst, &bad, 1e-9), Err(Error::InfeasibleSplit(_))));
}

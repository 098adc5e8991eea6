use std::sync::Arc;

use cbo_core::gp::{GpModel, Kernel, MeanFunction, PointFn, Posterior, Rbf};
use cbo_core::graph::{node_set, NodeSet};
use cbo_core::policy::{
    causal_ei, expected_improvement, hull_volume, maximize, optimize_acquisition, CostModel,
    SearchOptions,
};
use cbo_core::rng::rng_from;
use cbo_core::scenario::{self, Direction};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn synthetic_cost_configurations() {
    let g = scenario::load("synthetic").unwrap().sem.graph().clone();
    let unit = CostModel::preset("unit", &g).unwrap();
    let fixed = CostModel::preset("fixed", &g).unwrap();
    let variable = CostModel::preset("variable", &g).unwrap();
    for s in ["B", "D", "E"] {
        assert_eq!(unit.intervention_cost(&node_set([s]), &[3.0]).unwrap(), 1.0);
    }
    assert_eq!(fixed.intervention_cost(&node_set(["B", "E"]), &[1.0, -2.0]).unwrap(), 30.0);
    assert_eq!(variable.intervention_cost(&node_set(["D"]), &[-2.0]).unwrap(), 7.0);
    assert_eq!(unit.intervention_cost(&NodeSet::new(), &[]).unwrap(), 1.0);
    assert!(CostModel::preset("cheap", &g).is_err());
}

#[test]
fn ei_matches_monte_carlo() {
    let mut rng = rng_from(77);
    let normal = Normal::new(0.0, 1.0).unwrap();
    for _ in 0..50 {
        let mean = rng.random_range(-2.0..2.0);
        let s: f64 = rng.random_range(0.05..2.0);
        let y_star = rng.random_range(-2.0..2.0);
        // Stratified draws: one uniform per probability stratum, mapped
        // through the normal quantile function.
        let draws = 1_000_000;
        let (mut lo, mut hi) = (0.0, 0.0);
        for i in 0..draws {
            let u = (i as f64 + rng.random::<f64>()) / draws as f64;
            let z = normal.inverse_cdf(u.clamp(1e-300, 1.0 - 1e-16));
            let y = mean + s * z;
            lo += (y_star - y).max(0.0);
            hi += (y - y_star).max(0.0);
        }
        let post = Posterior {
            mean,
            variance: s * s,
        };
        let min = expected_improvement(post, y_star, Direction::Min);
        let max = expected_improvement(post, y_star, Direction::Max);
        assert!((min - lo / draws as f64).abs() < 1e-3, "{min} vs {}", lo / draws as f64);
        assert!((max - hi / draws as f64).abs() < 1e-3, "{max} vs {}", hi / draws as f64);
    }
}

fn bump_gp() -> GpModel {
    // Zero-data GP whose prior mean has a single dip at x = 1.3.
    let mean: PointFn = Arc::new(|x| -(-(x[0] - 1.3).powi(2)).exp());
    GpModel::new(
        &[(-2.0, 4.0)],
        MeanFunction::Function(mean),
        Kernel::Rbf(Rbf::new(0.2, 0.01).unwrap()),
        1e-5,
    )
}

#[test]
fn one_dimensional_peak_matches_grid() {
    let g = scenario::load("toy").unwrap().sem.graph().clone();
    let cost = CostModel::unit(&g);
    let set = node_set(["X"]);
    let gp = bump_gp();
    let (x, a) = optimize_acquisition(
        &gp,
        &set,
        &[(-2.0, 4.0)],
        &cost,
        -0.5,
        Direction::Min,
        3,
        &SearchOptions::default(),
    )
    .unwrap();
    let (mut gx, mut ga) = (0.0, f64::NEG_INFINITY);
    for i in 0..10_000 {
        let t = -2.0 + 6.0 * i as f64 / 9_999.0;
        let v = causal_ei(&gp, &[t], -0.5, &cost, &set, Direction::Min).unwrap();
        if v > ga {
            (gx, ga) = (t, v);
        }
    }
    assert!((x[0] - gx).abs() < 1e-2, "{x:?} vs {gx}");
    assert!(a >= ga - 1e-9);
}

#[test]
fn flat_acquisition_returns_box_point_with_zero_value() {
    let g = scenario::load("toy").unwrap().sem.graph().clone();
    let gp = GpModel::new(
        &[(-5.0, 20.0)],
        MeanFunction::Zero,
        Kernel::Rbf(Rbf::new(1.0, 1e-300).unwrap()),
        0.0,
    );
    let (x, a) = optimize_acquisition(
        &gp,
        &node_set(["Z"]),
        &[(-5.0, 20.0)],
        &CostModel::unit(&g),
        -1.0,
        Direction::Min,
        4,
        &SearchOptions::default(),
    )
    .unwrap();
    assert!((-5.0..=20.0).contains(&x[0]));
    assert_eq!(a, 0.0);
}

#[test]
fn cost_scaling_keeps_argmax() {
    let g = scenario::load("toy").unwrap().sem.graph().clone();
    let set = node_set(["X"]);
    let gp = bump_gp();
    let unit = CostModel::unit(&g);
    let mut double = CostModel::default();
    for t in g.treatments() {
        double.set(t, 2.0, false);
    }
    let run = |c: &CostModel| {
        optimize_acquisition(&gp, &set, &[(-2.0, 4.0)], c, -0.5, Direction::Min, 9, &SearchOptions::default())
            .unwrap()
    };
    let (x1, a1) = run(&unit);
    let (x2, a2) = run(&double);
    assert_eq!(x1, x2);
    assert!((a1 - 2.0 * a2).abs() < 1e-12);
    for t in [-1.0, 0.5, 2.0] {
        let u = causal_ei(&gp, &[t], -0.5, &unit, &set, Direction::Min).unwrap();
        let d = causal_ei(&gp, &[t], -0.5, &double, &set, Direction::Min).unwrap();
        assert!((u - 2.0 * d).abs() < 1e-12);
    }
}

#[test]
fn exact_3d_volume_agrees_with_sampling() {
    // The 4-D Monte Carlo path applied to points lifted onto a slab of
    // thickness 1 gives an independent estimate of the 3-D volume.
    let mut rng = rng_from(8);
    let pts: Vec<Vec<f64>> = (0..25)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let exact = hull_volume(&pts, 0).volume;
    let lifted: Vec<Vec<f64>> = pts
        .iter()
        .flat_map(|p| {
            [0.0, 1.0].map(|h| {
                let mut q = p.clone();
                q.push(h);
                q
            })
        })
        .collect();
    let mc = hull_volume(&lifted, 1);
    let se = mc.std_error.unwrap();
    assert!((mc.volume - exact).abs() < 4.0 * se + 1e-9, "{} vs {exact} (se {se})", mc.volume);
}

#[test]
fn zero_dimensional_search() {
    let (x, v) = maximize(|x| x.len() as f64 + 2.0, &[], 0, &SearchOptions::default());
    assert!(x.is_empty());
    assert_eq!(v, 2.0);
}

use cbo_core::estimation::{
    backdoor_mean, build_surface, build_surfaces, evaluate_plan, fit_regressor, frontdoor_mean, parse_estimands,
    EstimationError, EstimatorOptions,
};
use cbo_core::graph::{node_set, NodeId, NodeSet};
use cbo_core::scenario;
use cbo_core::scm::{parse_sem, Dataset, Intervention, Provenance};

fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

fn oracle(name: &str, set: &NodeSet, xs: &[f64]) -> f64 {
    let sc = scenario::load(name).unwrap();
    sc.sem
        .oracle_mean(&Intervention::from_set(set, xs), 200_000, 99)
        .unwrap()
        .mean
}

#[test]
fn regressor_recovers_noiseless_line() {
    let x: Vec<f64> = (0..1000).map(|i| i as f64 / 100.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let data = Dataset::new(vec![id("X"), id("Y")], vec![x, y], Provenance::Observational);
    let reg = fit_regressor(&data, &id("Y"), &[id("X")]).unwrap();
    assert!((reg.mean(&[3.0]) - 6.0).abs() < 0.05, "{}", reg.mean(&[3.0]));

    let unconditional = fit_regressor(&data, &id("Y"), &[]).unwrap();
    let mean = data.column("Y").unwrap().iter().sum::<f64>() / 1000.0;
    assert!((unconditional.mean(&[]) - mean).abs() < 1e-12);
}

#[test]
fn regressor_errors() {
    let data = Dataset::new(
        vec![id("X"), id("Y")],
        vec![vec![1.0; 10], (0..10).map(f64::from).collect()],
        Provenance::Observational,
    );
    assert_eq!(
        fit_regressor(&data, &id("Y"), &[id("X")]).unwrap_err(),
        EstimationError::DegenerateColumn(id("X"))
    );
    let tiny = Dataset::new(vec![id("X")], vec![vec![1.0, 2.0]], Provenance::Observational);
    assert!(matches!(
        fit_regressor(&tiny, &id("X"), &[]),
        Err(EstimationError::InsufficientData { .. })
    ));
}

#[test]
fn toy_conditional_mean_matches_analytic() {
    let sc = scenario::load("toy").unwrap();
    let data = sc.sem.sample_observational(1000, 4).unwrap();
    let reg = fit_regressor(&data, &id("Y"), &[id("Z")]).unwrap();
    let truth = 1f64.cos() - (-1.0f64 / 20.0).exp();
    assert!((reg.mean(&[1.0]) - truth).abs() < 0.15, "{} vs {truth}", reg.mean(&[1.0]));
}

#[test]
fn synthetic_backdoor_on_d_tracks_oracle() {
    let sc = scenario::load("synthetic").unwrap();
    let data = sc.sem.sample_observational(1000, 5).unwrap();
    let set = node_set(["D"]);
    for d in [-0.5, 0.0, 0.8] {
        let est = backdoor_mean(&data, &id("Y"), &set, &[d], &node_set(["C"])).unwrap();
        let truth = oracle("synthetic", &set, &[d]);
        assert!((est - truth).abs() < 0.25, "d={d}: {est} vs {truth}");
    }
}

#[test]
fn backdoor_with_empty_adjustment_is_regression() {
    let sc = scenario::load("toy").unwrap();
    let data = sc.sem.sample_observational(300, 6).unwrap();
    let reg = fit_regressor(&data, &id("Y"), &[id("Z")]).unwrap();
    let est = backdoor_mean(&data, &id("Y"), &node_set(["Z"]), &[0.5], &NodeSet::new()).unwrap();
    assert!((est - reg.mean(&[0.5])).abs() < 1e-12);
}

#[test]
fn yield_estimands_track_oracle() {
    let sc = scenario::load("yield").unwrap();
    let data = sc.sem.sample_observational(2000, 7).unwrap();
    let opts = EstimatorOptions::default();
    for (set, xs) in [
        (node_set(["Z2"]), vec![0.3]),
        (node_set(["X"]), vec![0.5]),
        (node_set(["X"]), vec![-0.5]),
    ] {
        let surface = build_surface(&sc.estimands, &data, &set, 1, &opts).unwrap();
        let est = surface.mean(&xs).unwrap();
        let truth = oracle("yield", &set, &xs);
        assert!((est - truth).abs() < 0.3, "{set:?} {xs:?}: {est} vs {truth}");
    }
}

#[test]
fn frontdoor_reduces_to_backdoor_without_mediator_link() {
    // With the X -> M link severed X has no effect at all, so the front-door
    // average over M and the back-door average over the observed confounder
    // W both collapse to E[Y].
    let sem = parse_sem(
        "node W context\nnode X treatment\nnode M context\nnode Y target\n\
         edge W -> X\nedge W -> Y\nedge M -> Y\n\
         let W = noise normal(0, 1)\nlet X = W + noise normal(0, 1)\n\
         let M = noise normal(0, 1)\n\
         let Y = W + sin(M) + noise normal(0, 0.3)\n",
    )
    .unwrap();
    let data = sem.sample_observational(1500, 8).unwrap();
    let set = node_set(["X"]);
    for x in [-0.5, 0.4] {
        let fd = frontdoor_mean(&data, &id("Y"), &set, &[x], &node_set(["M"]), 3).unwrap();
        let bd = backdoor_mean(&data, &id("Y"), &set, &[x], &node_set(["W"])).unwrap();
        assert!((fd - bd).abs() < 0.15, "x={x}: {fd} vs {bd}");
    }
    let single = Dataset::new(
        vec![id("M"), id("X"), id("Y")],
        vec![vec![0.0], vec![0.0], vec![0.0]],
        Provenance::Observational,
    );
    assert!(matches!(
        frontdoor_mean(&single, &id("Y"), &set, &[0.0], &node_set(["M"]), 3),
        Err(EstimationError::InsufficientData { .. })
    ));
}

#[test]
fn synthetic_plans_track_oracle() {
    let sc = scenario::load("synthetic").unwrap();
    let data = sc.sem.sample_observational(1000, 9).unwrap();
    let b_plan = sc.estimands.get(&node_set(["B"])).unwrap();
    let est = evaluate_plan(b_plan, &data, &[(id("B"), 0.3)], 2).unwrap().mean;
    let truth = oracle("synthetic", &node_set(["B"]), &[0.3]);
    assert!((est - truth).abs() < 0.25, "{est} vs {truth}");

    let de = sc.estimands.get(&node_set(["D", "E"])).unwrap();
    let est = evaluate_plan(de, &data, &[(id("D"), 0.2), (id("E"), 1.0)], 2).unwrap().mean;
    let truth = oracle("synthetic", &node_set(["D", "E"]), &[0.2, 1.0]);
    assert!((est - truth).abs() < 0.3, "{est} vs {truth}");

    let empty = sc.estimands.get(&NodeSet::new()).unwrap();
    let m = evaluate_plan(empty, &data, &[], 2).unwrap().mean;
    let mean = data.column("Y").unwrap().iter().sum::<f64>() / data.len() as f64;
    assert!((m - mean).abs() < 1e-12);

    assert!(matches!(
        evaluate_plan(de, &data, &[(id("D"), 0.2)], 2),
        Err(EstimationError::PlanMismatch { .. })
    ));
}

#[test]
fn evaluation_is_reproducible() {
    let sc = scenario::load("synthetic").unwrap();
    let data = sc.sem.sample_observational(200, 10).unwrap();
    let opts = EstimatorOptions::default();
    let set = node_set(["B", "E"]);
    let a = build_surface(&sc.estimands, &data, &set, 4, &opts).unwrap();
    let b = build_surface(&sc.estimands, &data, &set, 4, &opts).unwrap();
    let x = [0.7, -1.2];
    assert_eq!(a.moments(&x).unwrap(), b.moments(&x).unwrap());
    let first = a.moments(&x).unwrap();
    a.moments(&[0.0, 0.0]).unwrap();
    assert_eq!(a.moments(&x).unwrap(), first);
}

#[test]
fn shared_surfaces_agree_pointwise() {
    let sc = scenario::load("synthetic").unwrap();
    let data = sc.sem.sample_observational(200, 11).unwrap();
    let opts = EstimatorOptions::default();
    let sets = vec![node_set(["D", "E"]), node_set(["B", "D", "E"])];
    let built = build_surfaces(&sc.estimands, &data, &sets, 5, &opts);
    let de = built[0].as_ref().unwrap();
    let bde = built[1].as_ref().unwrap();
    assert!(bde.shares_plan_with(de));
    let alone = build_surface(&sc.estimands, &data, &sets[1], 5, &opts).unwrap();
    for (b, d, e) in [(0.0, 0.1, 0.2), (-3.0, 1.0, -1.0), (4.0, -2.0, 2.5)] {
        assert_eq!(bde.moments(&[b, d, e]).unwrap(), de.moments(&[d, e]).unwrap());
        assert_eq!(alone.moments(&[b, d, e]).unwrap(), de.moments(&[d, e]).unwrap());
    }
}

#[test]
fn toy_surface_follows_analytic_curve_in_support() {
    let sc = scenario::load("toy").unwrap();
    let data = sc.sem.sample_observational(1000, 12).unwrap();
    let s = build_surface(&sc.estimands, &data, &node_set(["Z"]), 1, &EstimatorOptions::default())
        .unwrap();
    for z in [0.0, 0.5, 1.0, 2.0] {
        let truth = f64::cos(z) - (-z / 20.0).exp();
        assert!((s.mean(&[z]).unwrap() - truth).abs() < 0.2, "z={z}");
        assert!(s.var(&[z]).unwrap() >= 0.0);
    }
}

#[test]
fn unregistered_set_has_no_estimand() {
    let sc = scenario::load("toy").unwrap();
    let data = sc.sem.sample_observational(50, 1).unwrap();
    let reg = parse_estimands("do() := reg(Y)").unwrap();
    assert!(matches!(
        build_surface(&reg, &data, &node_set(["Z"]), 1, &EstimatorOptions::default()),
        Err(EstimationError::NoEstimand(_))
    ));
}

#[test]
fn surface_mean_reverts_away_from_observed_levels() {
    let sc = scenario::load("toy").unwrap();
    let data = sc.sem.sample_observational(200, 8).unwrap();
    let y = data.column("Y").unwrap();
    let y_bar = y.iter().sum::<f64>() / y.len() as f64;
    let set = node_set(["Z"]);
    let plain = EstimatorOptions {
        support_weight: 0.0,
        ..EstimatorOptions::default()
    };
    let s = build_surface(&sc.estimands, &data, &set, 1, &EstimatorOptions::default()).unwrap();
    let raw = build_surface(&sc.estimands, &data, &set, 1, &plain).unwrap();
    // Far below the data the plain estimate copies the lowest rows.
    assert!((s.mean(&[-6.0]).unwrap() - y_bar).abs() < 0.01);
    assert!((raw.mean(&[-6.0]).unwrap() - y_bar).abs() > 0.5);
    // Inside the bulk of the data the pseudo-count is negligible.
    let z = data.column("Z").unwrap();
    let z_bar = z.iter().sum::<f64>() / z.len() as f64;
    assert!((s.mean(&[z_bar]).unwrap() - raw.mean(&[z_bar]).unwrap()).abs() < 0.02);
    assert_eq!(s.var(&[z_bar]).unwrap(), raw.var(&[z_bar]).unwrap());
}

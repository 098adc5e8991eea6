use std::sync::Arc;

use cbo_core::estimation::{build_surface, EstimatorOptions};
use cbo_core::gp::{causal_prior, GpModel, HyperGrid, Kernel, MeanFunction, PointFn, Rbf};
use cbo_core::graph::node_set;
use cbo_core::rng::rng_from;
use cbo_core::scenario;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

/// Inverse by Gauss-Jordan elimination with partial pivoting.
fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let d = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                let pivot = a[c].clone();
                a[r].iter_mut().zip(&pivot).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

#[test]
fn three_point_posterior_matches_dense_reference() {
    let mut rng = rng_from(3);
    let xs: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
    let ys: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let k = |a: f64, b: f64| (-(a - b) * (a - b) / 2.0).exp();
    let noise = 0.01;
    let gram: Vec<Vec<f64>> = xs
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            xs.iter()
                .enumerate()
                .map(|(j, &b)| k(a, b) + if i == j { noise } else { 0.0 })
                .collect()
        })
        .collect();
    let inv = invert(&gram);
    let gp = GpModel::new(&[(0.0, 1.0)], MeanFunction::Zero, Kernel::Rbf(Rbf::default()), noise)
        .with_data(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>(), &ys)
        .unwrap();
    for q in [0.0, 0.37, 0.9, 1.4] {
        let kq: Vec<f64> = xs.iter().map(|&x| k(x, q)).collect();
        let w: Vec<f64> = (0..3).map(|i| (0..3).map(|j| inv[i][j] * kq[j]).sum()).collect();
        let mean: f64 = w.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let var = 1.0 - w.iter().zip(&kq).map(|(a, b)| a * b).sum::<f64>();
        let p = gp.posterior(&[q]).unwrap();
        assert!((p.mean - mean).abs() < 1e-8, "{} vs {mean}", p.mean);
        assert!((p.variance - var).abs() < 1e-8, "{} vs {var}", p.variance);
    }
}

#[test]
fn noise_free_training_points_are_interpolated() {
    let mut rng = rng_from(4);
    for _ in 0..20 {
        let xs: Vec<Vec<f64>> = (0..6)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(0.0..10.0)])
            .collect();
        let ys: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let gp = GpModel::new(
            &[(-3.0, 3.0), (0.0, 10.0)],
            MeanFunction::Zero,
            Kernel::Rbf(Rbf::new(0.3, 1.0).unwrap()),
            0.0,
        )
        .with_data(&xs, &ys)
        .unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let p = gp.posterior(x).unwrap();
            assert!((p.mean - y).abs() <= 1e-6, "{} vs {y}", p.mean);
            assert!(p.variance <= 1e-6);
        }
    }
}

#[test]
fn causal_gram_matrices_are_psd() {
    let mut rng = rng_from(5);
    for _ in 0..100 {
        let n = rng.random_range(2..15);
        let d = rng.random_range(1..4);
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let sigma: PointFn =
            Arc::new(move |x| x.iter().zip(&a).map(|(v, w)| v * w).sum::<f64>().abs());
        let kernel = Kernel::Causal {
            base: Rbf::new(rng.random_range(0.1..2.0), rng.random_range(0.1..3.0)).unwrap(),
            sigma,
        };
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let g: DMatrix<f64> = kernel.gram(&pts);
        let min = SymmetricEigen::new(g.clone()).eigenvalues.min();
        assert!(min >= -1e-8 * g.trace(), "smallest eigenvalue {min}");
    }
}

#[test]
fn lengthscale_is_recovered_from_prior_draws() {
    // Draws from an RBF GP with l = 1 on [0, 5], i.e. 0.2 in box units.
    let grid = HyperGrid::default();
    let target = grid.lengthscales.iter().position(|&l| l == 0.2).unwrap() as i64;
    let mut offsets = Vec::new();
    for seed in 0..20 {
        let mut rng = rng_from(100 + seed);
        let xs: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(0.0..5.0)]).collect();
        let k = |a: f64, b: f64| (-(a - b) * (a - b) / 2.0).exp();
        let mut g = DMatrix::from_fn(40, 40, |i, j| k(xs[i][0], xs[j][0]));
        for i in 0..40 {
            g[(i, i)] += 1e-4;
        }
        let l = g.cholesky().unwrap().unpack();
        let z = nalgebra::DVector::from_fn(40, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = l * z;
        let gp = GpModel::new(&[(0.0, 5.0)], MeanFunction::Zero, Kernel::Rbf(Rbf::default()), 1e-5)
            .with_data(&xs, y.as_slice())
            .unwrap()
            .fit_hyperparameters(&grid)
            .unwrap();
        let chosen = gp.kernel().base().lengthscale;
        let idx = grid.lengthscales.iter().position(|&l| l == chosen).unwrap() as i64;
        offsets.push(idx - target);
    }
    offsets.sort();
    let median = offsets[offsets.len() / 2];
    assert!(median.abs() <= 1, "grid offsets {offsets:?}");
}

#[test]
fn constant_targets_pick_smallest_variance_and_noise() {
    let grid = HyperGrid::default();
    let mean: PointFn = Arc::new(|_| 0.7);
    let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
    let gp = GpModel::new(
        &[(0.0, 1.0)],
        MeanFunction::Function(mean),
        Kernel::Rbf(Rbf::default()),
        1e-5,
    )
    .with_data(&xs, &[0.7; 8])
    .unwrap()
    .fit_hyperparameters(&grid)
    .unwrap();
    // Residuals are zero, so the variance scale is the 1e-2 floor.
    assert!((gp.kernel().base().variance - grid.variances[0] * 1e-2).abs() < 1e-15);
    assert!((gp.noise() - grid.noises[0] * 1e-2).abs() < 1e-15);
}

#[test]
fn toy_causal_prior() {
    let sc = scenario::load("toy").unwrap();
    let data = sc.sem.sample_observational(1000, 21).unwrap();
    let surface = Arc::new(
        build_surface(&sc.estimands, &data, &node_set(["Z"]), 1, &EstimatorOptions::default())
            .unwrap(),
    );
    let (mean, kernel) = causal_prior(surface, Rbf::default());
    for z in [0.2, 1.0, 2.0] {
        let truth = f64::cos(z) - (-z / 20.0).exp();
        assert!((mean.eval(&[z]) - truth).abs() < 0.2, "z={z}");
    }
    // Observational Z bottoms out near -3; below that σ reverts towards the
    // marginal spread of Y, which exceeds the in-support noise level.
    let inside = kernel.sigma(&[1.0]);
    let probes: Vec<f64> = [-4.0, -4.5, -5.0].iter().map(|&z| kernel.sigma(&[z])).collect();
    assert!(probes.iter().all(|&p| p > inside), "{probes:?} vs {inside}");
    assert!(probes.windows(2).all(|w| w[1] >= w[0]), "{probes:?}");

    let gp = GpModel::new(&[(-5.0, 20.0)], mean, kernel.clone(), 1e-5);
    let p = gp.posterior(&[1.0]).unwrap();
    assert!((p.variance - (1.0 + inside * inside)).abs() < 1e-9);
}

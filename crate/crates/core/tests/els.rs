use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use narmax_lasso::datagen::Benchmark;
use narmax_lasso::{
    build_matrix, extended_least_squares, fit_path, generate_polynomial_dictionary, ols_solve, Dictionary, ElsConfig,
    PathConfig, RegressorTerm, TimeSeriesData,
};

fn true_structure() -> Dictionary {
    let terms: Vec<RegressorTerm> = ["y[k-1]", "u[k-1]", "e[k-1]"].iter().map(|t| t.parse().unwrap()).collect();
    Dictionary::from_terms(terms).unwrap()
}

#[test]
fn recovers_example1_coefficients_on_average() {
    let d = true_structure();
    let truth = [0.5, -0.5, 0.5];
    let mut mean = Array1::<f64>::zeros(3);
    let seeds = 20;
    for seed in 0..seeds {
        let data = Benchmark::Example1.realization(2000, 0.3, 5, seed, 0).unwrap().data;
        let fit = extended_least_squares(&data, &d, &ElsConfig::default()).unwrap();
        assert!(fit.converged, "seed {seed}");
        mean += &fit.theta;
    }
    mean /= seeds as f64;
    for (j, (m, t)) in mean.iter().zip(truth).enumerate() {
        assert!((m - t).abs() <= 0.08, "coefficient {j}: mean {m} vs {t}");
    }
}

#[test]
fn converged_residual_is_a_fixed_point() {
    let d = true_structure();
    let cfg = ElsConfig::default();
    for seed in 0..5 {
        let data = Benchmark::Example1.realization(1000, 0.3, 5, seed, 0).unwrap().data;
        let fit = extended_least_squares(&data, &d, &cfg).unwrap();
        assert!(fit.converged);
        let m = build_matrix(&d, &data, fit.residual.view()).unwrap();
        let fresh = &data.output().slice(s![m.start()..]) - &m.values().dot(&fit.theta);
        let gap = (&fresh - &fit.residual.slice(s![m.start()..]))
            .iter()
            .fold(0.0, |a: f64, b| a.max(b.abs()));
        assert!(gap <= 10.0 * cfg.tolerance, "seed {seed}: gap {gap}");
    }
}

#[test]
fn narx_dictionary_is_plain_least_squares_in_one_iteration() {
    let d = generate_polynomial_dictionary(2, &[2], 0, 2).unwrap();
    let data = Benchmark::Example2.realization(400, 0.5, 5, 4, 0).unwrap().data;
    let fit = extended_least_squares(&data, &d, &ElsConfig::default()).unwrap();
    assert_eq!(fit.iterations, 1);
    assert!(fit.converged);
    let m = build_matrix(&d, &data, data.output()).unwrap();
    let ols = ols_solve(m.values(), data.output().slice(s![m.start()..])).unwrap();
    assert_eq!(fit.theta, ols);
}

#[test]
fn ols_residual_is_orthogonal_to_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let n = rng.random_range(10..80);
        let p = rng.random_range(1..n.min(12));
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-3.0..3.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-5.0..5.0));
        let theta = ols_solve(x.view(), y.view()).unwrap();
        let r = &y - &x.dot(&theta);
        let scale = y.dot(&y).sqrt() * x.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
        for (j, c) in x.columns().into_iter().enumerate() {
            assert!(c.dot(&r).abs() <= 1e-10 * scale.max(1.0), "column {j}");
        }
    }
}

#[test]
fn duplicated_column_splits_evenly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = Array1::from_shape_fn(30, |_| rng.random_range(-1.0..1.0));
    let mut x = Array2::zeros((30, 2));
    x.column_mut(0).assign(&c);
    x.column_mut(1).assign(&c);
    let y = &c * 3.0;
    let theta = ols_solve(x.view(), y.view()).unwrap();
    assert!((theta[0] - 1.5).abs() < 1e-10 && (theta[1] - 1.5).abs() < 1e-10, "{theta}");
}

#[test]
fn tiny_penalty_path_end_approaches_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 300;
    let u = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
    let mut y = Array1::zeros(n);
    for k in 2..n {
        y[k] = 0.6 * y[k - 1] - 0.2 * y[k - 2] + u[k - 1] + 0.1 * rng.random_range(-1.0..1.0);
    }
    let data = TimeSeriesData::single_input(u, y).unwrap();
    let d = generate_polynomial_dictionary(2, &[2], 0, 1).unwrap();
    let cfg = PathConfig {
        k_points: 20,
        lambda_min_ratio: 1e-6,
        tolerance: 1e-10,
        ..PathConfig::default()
    };
    let path = fit_path(&data, &d, &cfg).unwrap();
    let last = path.entries.last().unwrap();
    let m = build_matrix(&d, &data, data.output()).unwrap();
    let ols = ols_solve(m.values(), data.output().slice(s![m.start()..])).unwrap();
    for (a, b) in last.theta.iter().zip(ols.iter()) {
        assert!((a - b).abs() <= 1e-3, "{a} vs {b}");
    }
}

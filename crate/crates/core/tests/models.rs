use proptest::prelude::*;
use stratcast::matrix::Matrix;
use stratcast::models::{fit_gbdt, fit_gbdt_multi, fit_ridge, GbdtParams, ModelSpec, TrainedModel, TrainingData};
use stratcast::Error;

fn table(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, cols), rows)
}

/// Gradient of the ridge objective (intercept unpenalized) at the fitted
/// coefficients; zero at the optimum.
fn ridge_gradient(x: &Matrix, y: &Matrix, lambda: f64, coef: &Matrix) -> f64 {
    let (n, f, m) = (x.rows(), x.cols(), y.cols());
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let resid: Vec<f64> = (0..n)
            .map(|r| coef.get(0, j) + (0..f).map(|i| x.get(r, i) * coef.get(i + 1, j)).sum::<f64>() - y.get(r, j))
            .collect();
        worst = worst.max(resid.iter().sum::<f64>().abs());
        for i in 0..f {
            let g = (0..n).map(|r| x.get(r, i) * resid[r]).sum::<f64>() + lambda * coef.get(i + 1, j);
            worst = worst.max(g.abs());
        }
    }
    worst
}

proptest! {
    #[test]
    fn ridge_satisfies_normal_equations(
        x in table(30, 4),
        y in table(30, 3),
        lambda in prop_oneof![Just(0.0), 1e-3..10.0f64],
    ) {
        let (x, y) = (Matrix::from_rows(&x), Matrix::from_rows(&y));
        let model = fit_ridge(&x, &y, lambda).unwrap();
        prop_assert!(ridge_gradient(&x, &y, lambda, &model.coefficients) < 1e-7);
        let pred = model.predict(&x).unwrap();
        prop_assert_eq!((pred.rows(), pred.cols()), (30, 3));
    }

    #[test]
    fn gbdt_training_loss_never_rises(
        x in table(60, 3),
        depth in 1usize..5,
        lr in 0.05..1.0f64,
        leaf in 1usize..6,
        seed in any::<u64>(),
    ) {
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[1].signum() + r[2].sin()).collect();
        let params = GbdtParams { n_trees: 25, max_depth: depth, learning_rate: lr, min_samples_leaf: leaf, colsample: 0.7, seed, ..Default::default() };
        let e = fit_gbdt(&Matrix::from_rows(&x), &y, &params, None).unwrap();
        prop_assert!(e.report.train_loss.windows(2).all(|w| w[1] <= w[0]));
        for t in &e.trees {
            prop_assert!(t.n_leaves() <= 1 << depth);
        }
    }
}

#[test]
fn ridge_recovers_exact_linear_map() {
    let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 7) % 11) as f64]).collect();
    let y: Vec<Vec<f64>> = x.iter().map(|r| vec![3.0 + 2.0 * r[0] - r[1]]).collect();
    let m = fit_ridge(&Matrix::from_rows(&x), &Matrix::from_rows(&y), 0.0).unwrap();
    let c = m.coefficients.column(0);
    for (a, b) in c.iter().zip([3.0, 2.0, -1.0]) {
        assert!((a - b).abs() < 1e-9, "{c:?}");
    }
}

#[test]
fn ridge_without_penalty_rejects_collinear_features() {
    let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let y = Matrix::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>());
    assert!(matches!(fit_ridge(&Matrix::from_rows(&x), &y, 0.0), Err(Error::SingularSystem)));
    assert!(fit_ridge(&Matrix::from_rows(&x), &y, 1e-3).is_ok());
}

#[test]
fn gbdt_is_deterministic_per_seed() {
    let x: Vec<Vec<f64>> = (0..80).map(|i| vec![(i % 9) as f64, (i % 5) as f64, i as f64]).collect();
    let y = Matrix::from_rows(&x.iter().map(|r| vec![r[0] * r[1], r[2]]).collect::<Vec<_>>());
    let x = Matrix::from_rows(&x);
    let p = GbdtParams {
        n_trees: 20,
        colsample: 0.5,
        seed: 4,
        ..Default::default()
    };
    let a = fit_gbdt_multi(&x, &y, &p, None).unwrap();
    let b = fit_gbdt_multi(&x, &y, &p, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.predict(&x).unwrap().cols(), 2);
}

#[test]
fn gbdt_early_stopping_cuts_back_to_best_round() {
    let x: Vec<Vec<f64>> = (0..100).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()]).collect();
    let y: Vec<f64> = (0..100).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let yv: Vec<f64> = (0..100).map(|i| ((i * 104729) % 17) as f64 - 8.0).collect();
    let x = Matrix::from_rows(&x);
    let p = GbdtParams {
        n_trees: 200,
        max_depth: 5,
        learning_rate: 0.5,
        min_samples_leaf: 1,
        early_stopping_rounds: Some(3),
        ..Default::default()
    };
    let e = fit_gbdt(&x, &y, &p, Some((&x, &yv))).unwrap();
    assert!(e.report.stopped_at < 200);
    assert_eq!(e.trees.len(), e.report.best_round);
    let best = e.report.valid_loss[e.report.best_round];
    assert!(e.report.valid_loss.iter().all(|v| *v >= best));
}

#[test]
fn trained_models_survive_a_json_round_trip() {
    let x = Matrix::from_rows(&(0..30).map(|i| vec![i as f64, (i % 4) as f64]).collect::<Vec<_>>());
    let y = Matrix::from_rows(&(0..30).map(|i| vec![i as f64 * 0.5]).collect::<Vec<_>>());
    let data = TrainingData {
        x: &x,
        y: &y,
        columns: &[],
        targets: &[],
    };
    for spec in [ModelSpec::ridge(0.1), ModelSpec::Gbdt(GbdtParams { n_trees: 5, ..Default::default() })] {
        let m = TrainedModel::fit(&spec, &data, None).unwrap();
        let (spec2, m2) = TrainedModel::from_json(&m.to_json(&spec).unwrap()).unwrap();
        assert_eq!(spec2, spec);
        assert_eq!(m2.predict(&x).unwrap(), m.predict(&x).unwrap());
    }
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(ModelSpec::ridge(-1.0).validate().is_err());
    assert!(ModelSpec::Gbdt(GbdtParams { learning_rate: 0.0, ..Default::default() }).validate().is_err());
    assert!(ModelSpec::SeasonalNaive { period: 0 }.validate().is_err());
}

#[test]
fn ridge_matches_pseudoinverse_least_squares() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let w = [[1.5, -2.0], [0.25, 3.0], [-1.0, 0.5]];
    let intercept = [0.7, -1.2];
    let x: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            (0..2)
                .map(|j| intercept[j] + (0..3).map(|i| r[i] * w[i][j]).sum::<f64>() + rng.random_range(-0.01..0.01))
                .collect()
        })
        .collect();
    let model = fit_ridge(&Matrix::from_rows(&x), &Matrix::from_rows(&y), 1e-6).unwrap();

    // least squares through an SVD pseudoinverse of [1 | X]
    let design = nalgebra::DMatrix::from_fn(20, 4, |r, c| if c == 0 { 1.0 } else { x[r][c - 1] });
    let target = nalgebra::DMatrix::from_fn(20, 2, |r, c| y[r][c]);
    let beta = design.pseudo_inverse(1e-12).unwrap() * target;
    for i in 0..4 {
        for j in 0..2 {
            let (got, want) = (model.coefficients.get(i, j), beta[(i, j)]);
            assert!((got - want).abs() < 1e-6, "coef ({i},{j}): {got} vs {want}");
            let truth = if i == 0 { intercept[j] } else { w[i - 1][j] };
            assert!((got - truth).abs() < 0.05, "coef ({i},{j}) far from the generating weight");
        }
    }
}

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmor::balancing::{balance, reduce};
use sigmor::gramians::gramian_series;
use sigmor::learning::{
    assemble_dataset, assemble_dataset_with, evaluate_pipeline, fit_c, fit_c_streaming, model_outputs, pivoted_qr_solve,
    RegressionDataset,
};
use sigmor::signature::{compute_signature, SignatureSystem};
use sigmor::{ControlSignal, ReactionDiffusion, TimeGrid, Trajectory};

fn controls(count: usize, grid: TimeGrid<f64>, seed: u64) -> Vec<ControlSignal<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            ControlSignal::from_fn(grid, 2, |t, out| {
                out[0] = c[0] * (c[1] * 3.0 * t).sin() + c[2];
                out[1] = c[3] * (c[4] * 3.0 * t).cos() + c[5] * t;
            })
        })
        .collect()
}

fn synthetic(order: usize, c_star: &DMatrix<f64>) -> impl Fn(&ControlSignal<f64>) -> sigmor::Result<Trajectory<f64>> + Sync + '_ {
    move |u| {
        let s = compute_signature(u, order, u.grid())?;
        Trajectory::new(*u.grid(), s.values() * c_star.transpose())
    }
}

fn random_readout(p: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn dataset_row_count_and_constant_column() {
    let grid = TimeGrid::horizon(1.0, 11).unwrap();
    let rd = ReactionDiffusion::<f64>::new(8).unwrap();
    let u = vec![ControlSignal::zero(grid, 2)];
    let data = assemble_dataset(&u, &rd, 2, &grid).unwrap();
    assert_eq!(data.rows(), 11);
    assert_eq!(data.targets.ncols(), 1);
    assert!(data.features.column(0).iter().all(|&v| v == 1.0));
    assert_eq!(data.provenance[10], (0, 10));
}

#[test]
fn mismatched_grid_reports_control_index() {
    let grid = TimeGrid::horizon(1.0, 11).unwrap();
    let other = TimeGrid::horizon(1.0, 21).unwrap();
    let rd = ReactionDiffusion::<f64>::new(4).unwrap();
    let u = vec![ControlSignal::zero(grid, 2), ControlSignal::zero(other, 2)];
    assert!(matches!(assemble_dataset(&u, &rd, 2, &grid), Err(sigmor::Error::ControlFailed { index: 1, .. })));
}

#[test]
fn exact_recovery_of_known_readout() {
    let order = 3;
    let grid = TimeGrid::horizon(1.0, 101).unwrap();
    let train = controls(30, grid, 1);
    let c_star = random_readout(2, 40, 2);
    let data = assemble_dataset_with(&train, order, synthetic(order, &c_star)).unwrap();
    let fit = fit_c(&data, 0.0).unwrap();
    assert_eq!(fit.rank, 40);
    let rel = (&fit.coefficients - &c_star).norm() / c_star.norm();
    assert!(rel < 1e-8, "relative error {rel:e}");
    assert!(fit.residual < 1e-16 * data.targets.norm_squared());
}

#[test]
fn streaming_fit_matches_batch_fit() {
    let order = 2;
    let grid = TimeGrid::horizon(1.0, 51).unwrap();
    let train = controls(9, grid, 3);
    let rd = ReactionDiffusion::<f64>::new(10).unwrap();
    let truth = |u: &ControlSignal<f64>| rd.simulate_output_with(u, Default::default());
    let data = assemble_dataset_with(&train, order, truth).unwrap();
    let batch = fit_c(&data, 1e-6).unwrap();
    let streamed = fit_c_streaming(&train, order, 1e-6, 4, truth).unwrap();
    assert!((&batch.coefficients - &streamed.coefficients).amax() < 1e-9 * batch.coefficients.amax());
    assert!((batch.residual - streamed.residual).abs() < 1e-9 * batch.residual.max(1e-12));
}

#[test]
fn duplicated_features_give_minimum_norm_solution() {
    let a = DMatrix::from_row_slice(3, 2, &[1.0_f64, 1.0, 2.0, 2.0, 3.0, 3.0]);
    let b = DMatrix::from_row_slice(3, 1, &[2.0, 4.0, 6.0]);
    let sol = pivoted_qr_solve(&a, &b, 1e-12).unwrap();
    assert_eq!(sol.rank, 1);
    assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
}

#[test]
fn ridge_limit_shrinks_to_zero() {
    let n = 5;
    let data = RegressionDataset {
        features: DMatrix::identity(n, n),
        targets: DMatrix::from_fn(n, 1, |i, _| i as f64 + 1.0),
        provenance: (0..n).map(|i| (0, i)).collect(),
    };
    let mut previous = f64::INFINITY;
    for lambda in [1.0, 1e3, 1e6, 1e9] {
        let c = fit_c(&data, lambda).unwrap().coefficients;
        // closed form y / (1 + λ)
        let expected = data.targets.transpose() / (1.0 + lambda);
        assert!((&c - &expected).amax() < 1e-12);
        assert!(c.norm() < previous);
        previous = c.norm();
    }
    assert!(previous < 1e-8);
}

#[test]
fn self_comparison_has_zero_error() {
    let order = 2;
    let grid = TimeGrid::horizon(1.0, 101).unwrap();
    let tests = controls(4, grid, 9);
    let sig = SignatureSystem::<f64>::for_inputs(2, order).unwrap();
    let c = random_readout(1, sig.dim(), 4);
    let full = sig.with_output(c).unwrap().to_bilinear();
    let truth = model_outputs(&full, &tests).unwrap();
    let report = evaluate_pipeline(&full, &full, &truth, &tests).unwrap();
    assert_eq!(report.e_sig, 0.0);
    assert_eq!(report.e_mor, 0.0);
}

#[test]
fn full_order_reduction_is_exact() {
    let sys = SignatureSystem::<f64>::new(1, 2)
        .unwrap()
        .with_output(DMatrix::from_row_slice(1, 3, &[0.3, -1.0, 1.0]))
        .unwrap()
        .to_bilinear();
    let g = gramian_series(&sys, 2, 1.0).unwrap();
    let bal = balance(&g.p, &g.q).unwrap();
    assert_eq!(bal.rank(), sys.dim());
    let red = reduce(&sys, &bal, sys.dim()).unwrap();
    let grid = TimeGrid::horizon(1.0, 201).unwrap();
    let tests = vec![ControlSignal::zero(grid, 0)];
    let truth = vec![Trajectory::new(grid, DMatrix::from_element(201, 1, 0.25)).unwrap()];
    let report = evaluate_pipeline(&sys, &red, &truth, &tests).unwrap();
    assert!(report.e_mor < 1e-8, "E_MOR {:e}", report.e_mor);
    assert!((report.e_red_sig - report.e_sig).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ridge_residual_non_decreasing(seed in 0u64..10_000, l1 in 0.0..10.0f64, l2 in 0.0..10.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = RegressionDataset {
            features: DMatrix::from_fn(30, 6, |_, _| rng.random_range(-1.0..1.0)),
            targets: DMatrix::from_fn(30, 2, |_, _| rng.random_range(-1.0..1.0)),
            provenance: (0..30).map(|i| (0, i)).collect(),
        };
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let r_lo = fit_c(&data, lo).unwrap().residual;
        let r_hi = fit_c(&data, hi).unwrap().residual;
        prop_assert!(r_hi >= r_lo * (1.0 - 1e-12), "{r_hi} < {r_lo}");
    }

    #[test]
    fn exact_recovery_property(seed in 0u64..10_000) {
        let order = 2;
        let grid = TimeGrid::horizon(1.0, 41).unwrap();
        let train = controls(8, grid, seed);
        let c_star = random_readout(1, 13, seed + 1);
        let data = assemble_dataset_with(&train, order, synthetic(order, &c_star)).unwrap();
        let fit = fit_c(&data, 0.0).unwrap();
        let rel = (&fit.coefficients - &c_star).norm() / c_star.norm();
        prop_assert!(rel < 1e-8, "relative error {rel:e}");
    }
}

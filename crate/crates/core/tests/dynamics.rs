use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sigmor::dynamics::{
    lipschitz_probe, simulate_nonlinear_with, simulate_output, stable_substeps, test_control, training_control, CubicExample,
    LinearSystem, NonlinearSystem, ReactionDiffusion, TruthIntegrator,
};
use sigmor::{ControlSignal, TimeGrid};

fn cubic() -> CubicExample<f64> {
    let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.4, 0.0, -0.2, -0.5, 0.3, 0.1, 0.0, -0.8]);
    CubicExample::new(3, a).unwrap()
}

fn scalar_control(grid: TimeGrid<f64>, c: &[f64]) -> ControlSignal<f64> {
    let raw = ControlSignal::from_fn(grid, 1, |t, out| out[0] = c[0] * (c[1] * t).sin() + c[2] * (c[3] * t).cos());
    let norm = raw.l2_norm_sq().sqrt();
    let limit = 2.0 * c[4];
    if norm > limit {
        let samples = raw.samples() * (limit / norm);
        ControlSignal::from_samples(grid, samples).unwrap()
    } else {
        raw
    }
}

#[test]
fn rk4_order_on_cubic_example() {
    let sys = cubic();
    let grid = TimeGrid::horizon(1.0, 11).unwrap();
    let u = ControlSignal::from_fn(grid, 1, |t, out| out[0] = 2.0 * (3.0_f64 * t).sin());
    let reference = simulate_nonlinear_with(&sys, &u, 512).unwrap().last();
    let err = |s: usize| (simulate_nonlinear_with(&sys, &u, s).unwrap().last() - &reference).norm();
    let (e1, e2, e4) = (err(1), err(2), err(4));
    let order_a = (e1 / e2).log2();
    let order_b = (e2 / e4).log2();
    assert!(order_a >= 3.5 && order_b >= 3.5, "observed orders {order_a:.3}, {order_b:.3}");
}

#[test]
fn linear_lipschitz_ratio_below_hand_bound() {
    // sup_τ ‖exp(𝒜τ)B‖ = 1 for this 𝒜, B and T = 1, so the ratio is at most 1.
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.6, 0.8]);
    let sys = LinearSystem::new(a, b, DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
    let grid = TimeGrid::horizon(1.0, 401).unwrap();
    for k in 1..=10 {
        let u = ControlSignal::from_fn(grid, 1, |t, out| out[0] = (k as f64 * t).sin());
        let v = ControlSignal::from_fn(grid, 1, |t, out| out[0] = (k as f64 * t).cos() * 0.5);
        let ratio = lipschitz_probe(&sys, &u, &v, 1).unwrap();
        assert!(ratio <= 1.0 + 1e-12 && ratio > 0.0, "k = {k}: ratio {ratio}");
    }
}

#[test]
fn probe_rejects_identical_controls() {
    let grid = TimeGrid::horizon(1.0, 11).unwrap();
    let u = ControlSignal::from_fn(grid, 1, |t, out| out[0] = t);
    assert!(lipschitz_probe(&cubic(), &u, &u, 1).is_err());
}

#[test]
fn reaction_diffusion_stays_bounded_on_test_family() {
    let rd = ReactionDiffusion::<f64>::new(100).unwrap();
    let grid = TimeGrid::horizon(1.0, 1001).unwrap();
    assert_eq!(stable_substeps(&rd, grid.step()), 17);
    for k in [1, 2, 10, 50, 200, 1000] {
        let y = simulate_output(&rd, &test_control(k, grid).unwrap(), None).unwrap();
        assert!(y.values().iter().all(|v| v.is_finite() && *v > 0.0 && *v < 10.0), "k = {k}");
    }
}

#[test]
fn exponential_integrator_agrees_with_rk4() {
    let rd = ReactionDiffusion::<f64>::new(100).unwrap();
    let grid = TimeGrid::horizon(1.0, 1001).unwrap();
    for u in [test_control(7, grid).unwrap(), training_control(42, 3, 0.2, grid, 2).unwrap()] {
        let rk = rd.simulate_output_with(&u, TruthIntegrator::default()).unwrap();
        let etd = rd.simulate_output_with(&u, TruthIntegrator::Etdrk4 { substeps: 2 }).unwrap();
        let diff = (rk.values() - etd.values()).amax();
        assert!(diff < 1e-7, "max deviation {diff:e}");
    }
}

#[test]
fn reaction_diffusion_output_at_rest() {
    let rd = ReactionDiffusion::<f64>::new(4).unwrap();
    let x0 = rd.initial_state();
    let mut y = [0.0];
    rd.output(x0.as_slice(), &mut y);
    let mean = x0.iter().sum::<f64>() / 4.0;
    assert!((y[0] - mean.exp()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cubic_one_sided_lipschitz(x in prop::collection::vec(-3.0..3.0f64, 3), z in prop::collection::vec(-3.0..3.0f64, 3)) {
        let (lhs, rhs) = cubic().one_sided_lipschitz_sides(&DVector::from_vec(x), &DVector::from_vec(z)).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0), "{lhs} > {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn lipschitz_probe_is_grid_stable(
        cu in prop::collection::vec(0.1..3.0f64, 5),
        cv in prop::collection::vec(0.1..3.0f64, 5),
    ) {
        let sys = cubic();
        let grid = TimeGrid::horizon(1.0, 201).unwrap();
        let u = scalar_control(grid, &cu);
        let v = scalar_control(grid, &cv);
        prop_assume!(u.l2_distance_sq(&v).unwrap() > 1e-6);
        let coarse = lipschitz_probe(&sys, &u, &v, 1).unwrap();
        let fine = lipschitz_probe(&sys, &u, &v, 2).unwrap();
        prop_assert!(coarse.is_finite() && coarse < 1e3);
        prop_assert!((coarse - fine).abs() < 0.05 * fine, "{coarse} vs {fine}");
    }
}

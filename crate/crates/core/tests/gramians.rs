use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmor::bilinear::BilinearSystem;
use sigmor::gramians::{
    gramian_ode, gramian_series, observability_energy_check, reachability_energy_check, reachability_series,
};
use sigmor::linalg::{relative_asymmetry, symmetric_eigen};
use sigmor::signature::SignatureSystem;
use sigmor::{ControlSignal, TimeGrid};

fn random_readout(inputs: usize, order: usize, seed: u64) -> BilinearSystem<f64> {
    let sig = SignatureSystem::<f64>::for_inputs(inputs, order).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = DMatrix::from_fn(1, sig.dim(), |_, _| rng.random_range(-1.0..1.0));
    sig.with_output(c).unwrap().to_bilinear()
}

fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn series_matches_matrix_ode() {
    for order in 1..=4 {
        let sys = random_readout(2, order, order as u64);
        let series = gramian_series(&sys, order, 1.0).unwrap();
        let ode = gramian_ode(&sys, 1.0, 2000).unwrap();
        let (ep, eq) = (rel_frobenius(&ode.p, &series.p), rel_frobenius(&ode.q, &series.q));
        assert!(ep < 1e-6 && eq < 1e-6, "N = {order}: P {ep:e}, Q {eq:e}");
    }
}

#[test]
fn shift_toy_reachability_gramian() {
    let sys = SignatureSystem::<f64>::new(1, 2).unwrap().to_bilinear();
    let p = reachability_series(&sys, 2, 1.0).unwrap();
    let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 1.0 / 6.0, 0.5, 1.0 / 3.0, 0.125, 1.0 / 6.0, 0.125, 0.05]);
    assert!((p - expected).amax() < 1e-12);
}

#[test]
fn longer_horizon_gives_larger_gramians() {
    let sys = random_readout(2, 3, 9);
    let short = gramian_series(&sys, 3, 0.5).unwrap();
    let long = gramian_series(&sys, 3, 1.0).unwrap();
    for (a, b) in [(&long.p, &short.p), (&long.q, &short.q)] {
        let (values, _) = symmetric_eigen(&(a - b)).unwrap();
        assert!(values[0] >= -1e-12 * values[values.len() - 1].abs(), "min eigenvalue {}", values[0]);
    }
}

#[test]
fn non_positive_horizon_rejected() {
    let sys = random_readout(2, 2, 1);
    assert!(gramian_series(&sys, 2, 0.0).is_err());
    assert!(gramian_ode(&sys, 1.0, 50).is_err());
}

fn smooth(grid: TimeGrid<f64>, c: &[f64]) -> ControlSignal<f64> {
    ControlSignal::from_fn(grid, 2, |t, out| {
        out[0] = c[0] * (c[1] * t).sin() + c[2];
        out[1] = c[3] * (c[4] * t + c[5]).cos();
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gramians_symmetric_psd(seed in 0u64..1000, order in 1usize..=4, horizon in 0.2..2.0f64) {
        let sys = random_readout(2, order, seed);
        let g = gramian_series(&sys, order, horizon).unwrap();
        for x in [&g.p, &g.q] {
            prop_assert!(relative_asymmetry(x) < 1e-12);
            let (values, _) = symmetric_eigen(x).unwrap();
            let top = values[values.len() - 1];
            prop_assert!(values[0] >= -1e-12 * top, "eigenvalue {} vs {}", values[0], top);
        }
    }

    #[test]
    fn energy_bounds(
        c in prop::collection::vec(-2.0..2.0f64, 6),
        seed in 0u64..1000,
        pick in 0usize..40,
        start in 0usize..200,
    ) {
        let order = 3;
        let sys = random_readout(2, order, seed);
        let g = gramian_series(&sys, order, 1.0).unwrap();
        let grid = TimeGrid::horizon(1.0, 201).unwrap();
        let u = smooth(grid, &c);
        let (lp, vp) = symmetric_eigen(&g.p).unwrap();
        let reach = reachability_energy_check(&sys, &u, &vp.column(pick).into_owned(), lp[pick]).unwrap();
        prop_assert!(reach.holds, "reachability {:?}", reach);
        let (lq, vq) = symmetric_eigen(&g.q).unwrap();
        let obs = observability_energy_check(&sys, &u, &vq.column(pick).into_owned(), lq[pick], grid.time(start)).unwrap();
        prop_assert!(obs.holds, "observability {:?}", obs);
    }
}

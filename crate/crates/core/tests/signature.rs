use nalgebra::DMatrix;
use num_rational::Rational64;
use proptest::prelude::*;
use sigmor::signature::{
    build_generator_matrices, chen_concatenate, compute_signature, nilpotent_exponential, quadrature_oracle_signature,
    signature_dimension, words, SignatureSystem, SignatureVector, SparseMatrix, WordIndex,
};
use sigmor::{ControlSignal, TimeGrid};

fn smooth_control(grid: TimeGrid<f64>, coeffs: &[(f64, f64, f64)]) -> ControlSignal<f64> {
    let per = coeffs.len() / 2;
    ControlSignal::from_fn(grid, 2, |t, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = coeffs[i * per..(i + 1) * per].iter().map(|&(a, w, p)| a * (w * t + p).sin()).sum();
        }
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, 0.5..6.0f64, 0.0..6.3f64), 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn signature_matches_quadrature_oracle(c in coeffs()) {
        let grid = TimeGrid::horizon(1.0, 201).unwrap();
        let u = smooth_control(grid, &c);
        let sig = compute_signature(&u, 3, &grid).unwrap();
        let last = SignatureVector::from_trajectory(&sig, 3, 3, grid.len() - 1).unwrap();
        for w in words(3, 3) {
            let oracle = quadrature_oracle_signature(&u, &w, 1.0).unwrap();
            let got = last.get(&w);
            prop_assert!((got - oracle).abs() <= 1e-6 * oracle.abs().max(1e-3), "word {:?}: {} vs {}", w, got, oracle);
        }
    }

    #[test]
    fn bilinear_simulation_reproduces_signature(c in coeffs(), order in 1usize..=4) {
        let grid = TimeGrid::horizon(1.0, 401).unwrap();
        let u = smooth_control(grid, &c);
        let sig = compute_signature(&u, order, &grid).unwrap();
        let sys = SignatureSystem::<f64>::for_inputs(2, order).unwrap().to_bilinear();
        let states = sys.simulate(&u, &grid).unwrap();
        let diff = (sig.values() - states.values()).amax();
        prop_assert!(diff < 1e-10, "max deviation {diff:e}");
    }

    #[test]
    fn chen_identity(c in coeffs(), split in 200usize..1800) {
        let grid = TimeGrid::horizon(1.0, 2000).unwrap();
        let u = smooth_control(grid, &c);
        let order = 3;
        let whole = compute_signature(&u, order, &grid).unwrap();
        let head = SignatureVector::from_trajectory(&whole, 3, order, split).unwrap();
        let full = SignatureVector::from_trajectory(&whole, 3, order, grid.len() - 1).unwrap();
        let tail_grid = grid.tail(split).unwrap();
        let v = smooth_control(tail_grid, &c);
        let tail_traj = compute_signature(&v, order, &tail_grid).unwrap();
        let tail = SignatureVector::from_trajectory(&tail_traj, 3, order, tail_grid.len() - 1).unwrap();
        let joined = chen_concatenate(&head, &tail).unwrap();
        let diff = (joined.data() - full.data()).amax();
        prop_assert!(diff < 1e-8, "Chen deviation {diff:e}");
    }
}

fn sparse_product(gens: &[SparseMatrix<Rational64>], word: &[usize]) -> SparseMatrix<Rational64> {
    let mut acc = SparseMatrix::identity(gens[0].dim());
    for &i in word {
        acc = gens[i].mul(&acc);
    }
    acc
}

fn all_words(alphabet: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (0..alphabet).map(move |a| [w.clone(), vec![a]].concat())).collect();
    }
    out
}

#[test]
fn generators_are_exactly_nilpotent() {
    for channels in 1..=4 {
        for order in 1..=4 {
            let gens: Vec<SparseMatrix<Rational64>> =
                build_generator_matrices(channels, order).unwrap().iter().map(|g| g.to_sparse()).collect();
            for w in all_words(channels, order + 1) {
                assert!(sparse_product(&gens, &w).is_zero(), "m_ch={channels} N={order} word {w:?}");
            }
            let longest = vec![0; order];
            assert!(!sparse_product(&gens, &longest).is_zero());
        }
    }
}

#[test]
fn dimensions() {
    assert_eq!(signature_dimension(3, 5).unwrap(), 364);
    assert_eq!(signature_dimension(3, 4).unwrap(), 121);
    assert_eq!(signature_dimension(1, 3).unwrap(), 4);
    assert!(signature_dimension(usize::MAX, 8).is_err());
}

#[test]
fn zero_control_signature_is_exact_exponential() {
    let order = 4;
    let sys = SignatureSystem::<f64>::for_inputs(2, order).unwrap();
    let a0: SparseMatrix<Rational64> = sys.generators()[0].to_sparse();
    let t = Rational64::new(1, 2);
    let e = nilpotent_exponential(&a0, t, order);
    let mut factorial = 1;
    for k in 0..=order {
        if k > 0 {
            factorial *= k as i64;
        }
        let word = WordIndex::new(3, &vec![0; k]).unwrap();
        let exact = Rational64::new(1, 2i64.pow(k as u32) * factorial);
        assert_eq!(e.get(word.flat_offset, 0), exact);
    }

    let grid = TimeGrid::horizon(0.5, 51).unwrap();
    let sig = compute_signature(&ControlSignal::zero(grid, 2), order, &grid).unwrap();
    let dense = DMatrix::from_fn(sys.dim(), 1, |r, _| {
        let v = e.get(r, 0);
        *v.numer() as f64 / *v.denom() as f64
    });
    let last = sig.values().row(grid.len() - 1).transpose();
    assert!((last - dense).amax() < 1e-15);
}

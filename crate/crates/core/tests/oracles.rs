mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mlspec_core::embed::{base, bcjse, gram_sum, BcjseConfig, Embedding};
use mlspec_core::infer::{chi2_sf, membership_test};
use mlspec_core::linalg::{self, Mat, SymMatrix};
use mlspec_core::model::{build_sim42, sample_layers, LayerSource, LayerStack, ReplicateStream};

use support::jacobi::jacobi_eigen;

fn random_symmetric(n: usize, rng: &mut impl Rng) -> Mat {
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

#[test]
fn eigensolver_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let n = 1 + case % 12;
        let a = random_symmetric(n, &mut rng);
        let row_major: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
        let (want, _) = jacobi_eigen(&row_major, n);
        let (got, vectors) = linalg::sym_eigen(&SymMatrix::new(a.clone()).unwrap()).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9, "case {case}: {g} vs {w}");
        }
        for (k, &lambda) in got.iter().enumerate() {
            let v = vectors.column(k);
            assert!((&a * v - v * lambda).norm() <= 1e-9);
        }
        assert!(linalg::orthonormality_defect(&vectors) < 1e-10);
    }
}

#[test]
fn eigensolver_handles_repeated_and_graded_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [3, 7, 12] {
        let q = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let spectrum: Vec<f64> = (0..n)
            .map(|i| if i < 2 { 5.0 } else { 10f64.powi(-(i as i32)) })
            .collect();
        let a = &q * Mat::from_diagonal(&nalgebra::DVector::from_vec(spectrum.clone())) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let (got, _) = linalg::sym_eigen(&SymMatrix::new(a).unwrap()).unwrap();
        for (g, w) in got.iter().zip(&spectrum) {
            assert!((g - w).abs() < 1e-12);
        }
        let eig = linalg::top_d_eigs(&SymMatrix::new(Mat::identity(n, n)).unwrap(), 2).unwrap();
        assert!(eig.degenerate_gap);
    }
}

fn random_stack(rng: &mut impl Rng) -> LayerStack {
    let n = rng.random_range(5..=40);
    let m = rng.random_range(1..=20);
    let p = rng.random_range(0.05..0.6);
    let layers = (0..m)
        .map(|_| {
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i..n).map(move |j| (i, j)))
                .filter(|_| rng.random::<f64>() < p)
                .collect();
            mlspec_core::model::Layer::from_upper_edges(n, &edges).unwrap()
        })
        .collect();
    LayerStack::new(layers).unwrap()
}

#[test]
fn single_pass_equals_hollowed_dense_gram() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let stack = random_stack(&mut rng);
        let n = stack.n();
        let mut dense = Mat::zeros(n, n);
        for t in 0..stack.m() {
            let a = stack.layer(t).into_inner();
            dense += &a * &a;
        }
        assert_eq!(gram_sum(&stack).as_matrix(), &dense);
        dense.fill_diagonal(0.0);
        let d = rng.random_range(1..=3);
        let want = linalg::top_d_eigs(&SymMatrix::new(dense).unwrap(), d).unwrap();
        for s in 1..=3 {
            let got = bcjse(&stack, BcjseConfig::new(d, 1, s).unwrap()).unwrap();
            assert_eq!(got.basis, want.basis);
            assert_eq!(got.eigenvalues, want.values);
        }
        assert_eq!(base(&stack, d).unwrap().basis, want.basis);
    }
}

#[test]
fn layer_file_round_trip_preserves_estimates() {
    let (model, _) = build_sim42(40, 10, 6, 0.9, 0.1, 0.5).unwrap();
    let stack = sample_layers(&model, &ReplicateStream::new(4, 2));
    let mut bytes = Vec::new();
    stack.write_to(&mut bytes).unwrap();
    let back = LayerStack::read_from(bytes.as_slice()).unwrap();
    let cfg = BcjseConfig::new(2, 2, 1).unwrap();
    assert_eq!(bcjse(&stack, cfg).unwrap(), bcjse(&back, cfg).unwrap());
}

#[test]
fn membership_test_end_to_end() {
    let (model, z) = build_sim42(60, 15, 40, 0.9, 0.1, 0.5).unwrap();
    let stack = sample_layers(&model, &ReplicateStream::new(8, 0));
    let emb = bcjse(&stack, BcjseConfig::new(2, 2, 1).unwrap()).unwrap();
    let null = membership_test(&stack, &emb, 0, 14).unwrap();
    assert_eq!(z.profile_distance(0, 14), 0.0);
    assert!(null.statistic >= 0.0 && (0.0..=1.0).contains(&null.p_value));
    assert_eq!(null.p_value, chi2_sf(2, null.statistic));
    // The most separated pair is far out in the tail at this signal level.
    let far = membership_test(&stack, &emb, 0, 15).unwrap();
    assert!(far.p_value < 1e-6, "{}", far.p_value);
    // Plug-in with the true basis runs on the same data.
    let oracle = membership_test(&stack, &Embedding::from_basis(model.basis().clone()), 0, 15).unwrap();
    assert!(oracle.statistic > 0.0);
}

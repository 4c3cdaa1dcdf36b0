//! Cross-checks against an independent dense eigensolver.

use nalgebra::DMatrix;
use qent_core::entangle::{self, StateMatrix};
use qent_core::linalg::{self, Matrix, Tridiagonal};
use qent_core::models::{build_spec, Boundary, Model, Sampler};
use qent_core::rng;
use qent_core::spectral;

fn random_symmetric(n: usize, seed: u64) -> Matrix {
    let mut r = rng::stream(seed, n as u64);
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng::normal(&mut r);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

fn reference_eigenvalues(a: &Matrix) -> Vec<f64> {
    let m = DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn eigenvalues_match_reference() {
    for &n in &[1usize, 2, 3, 5, 17, 64, 150] {
        let a = random_symmetric(n, 3);
        let ours = linalg::eigvalsh(&a).unwrap();
        let theirs = reference_eigenvalues(&a);
        let scale = a.max_abs() * n as f64;
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() <= 1e-12 * scale, "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn full_decomposition_residual_and_orthonormality() {
    for &n in &[4usize, 33, 100] {
        let a = random_symmetric(n, 8);
        let eig = linalg::eigh(&a).unwrap();
        assert!(eig.residual(&a) <= 1e-9 * a.max_abs());
        assert!(eig.orthonormality_error() <= 1e-8);
    }
}

#[test]
fn qrem_l8_residual() {
    let spec = build_spec(Model::Qrem { b: 2.0 }, 8, 0.5, 17).unwrap();
    let s = Sampler::new(&spec).sample(0);
    let eig = spectral::diagonalize(&s).unwrap();
    assert!(eig.residual(&s.matrix) <= 1e-9 * s.matrix.max_abs());
    assert!(eig.orthonormality_error() <= 1e-8);
    assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    let theirs = reference_eigenvalues(&s.matrix);
    for (x, y) in eig.values.iter().zip(&theirs) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn windowed_vectors_on_rfhm_are_eigenvectors() {
    let spec = build_spec(
        Model::Rfhm {
            j: 1.0,
            d: 1.0,
            h: 0.5,
            boundary: Boundary::Periodic,
        },
        10,
        1.0,
        4,
    )
    .unwrap();
    let s = Sampler::new(&spec).sample(1);
    let w = spectral::diagonalize_window(&s, 0.0, spectral::WindowSize::Count(12)).unwrap();
    let eig = linalg::SymmetricEigen {
        values: w.eigenvalues.clone(),
        vectors: w.eigenvectors.clone(),
    };
    assert!(eig.residual(&s.matrix) <= 1e-9 * s.matrix.max_abs());
    assert!(eig.orthonormality_error() <= 1e-8);
}

#[test]
fn clustered_spectrum_subset() {
    // Two tight clusters: inverse iteration must still return an
    // orthonormal basis of each.
    let n = 30;
    let mut d = vec![0.0; n];
    for (i, x) in d.iter_mut().enumerate() {
        *x = if i < 10 { 1.0 + 1e-11 * i as f64 } else { i as f64 };
    }
    let q = linalg::eigh(&random_symmetric(n, 5)).unwrap().vectors;
    let a = q.matmul(&Matrix::diagonal(&d)).unwrap().matmul(&q.transpose()).unwrap();
    let mut sym = a.clone();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            sym[(i, j)] = v;
            sym[(j, i)] = v;
        }
    }
    let t = Tridiagonal::new(&sym).unwrap();
    let vals = t.eigenvalues().unwrap();
    let vecs = t.eigenvectors_for(&vals[..12]).unwrap();
    let eig = linalg::SymmetricEigen {
        values: vals[..12].to_vec(),
        vectors: vecs,
    };
    assert!(eig.orthonormality_error() < 1e-8);
    assert!(eig.residual(&sym) < 1e-9 * 30.0);
}

#[test]
fn schmidt_matches_singular_values() {
    let mut r = rng::stream(99, 0);
    for &(na, nb) in &[(2usize, 2usize), (3, 5), (8, 8), (16, 16), (16, 4)] {
        let c = entangle::haar_sample(na, nb, &mut r);
        let ours = entangle::schmidt_spectrum(&c).unwrap().lambdas;
        let m = DMatrix::from_row_slice(na, nb, c.matrix().as_slice());
        let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().map(|s| s * s).collect();
        sv.resize(na, 0.0);
        sv.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in ours.iter().zip(&sv) {
            assert!((x - y).abs() < 1e-10, "{na}x{nb}: {x} vs {y}");
        }
    }
}

#[test]
fn transposed_state_has_same_spectrum() {
    let mut r = rng::stream(12, 1);
    let c = entangle::haar_sample(8, 8, &mut r);
    let ct = StateMatrix::new(c.matrix().transpose()).unwrap();
    let a = entangle::schmidt_spectrum(&c).unwrap().lambdas;
    let b = entangle::schmidt_spectrum(&ct).unwrap().lambdas;
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
}

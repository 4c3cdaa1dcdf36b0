//! Property tests for invariants that must hold for every input.

use proptest::prelude::*;
use qent_core::analysis::{self, Curve, Scale};
use qent_core::complexity::{self, Chi0Recipe, ParameterCount, PointInputs};
use qent_core::dynamics::{self, Init, LangevinConfig, StepOutcome};
use qent_core::entangle::{self, LogBase, StateMatrix};
use qent_core::linalg::{self, Matrix};
use qent_core::models::{self, build_spec, Boundary, Model, Sampler};
use qent_core::rng;

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        let mut out: Vec<f64> = v.iter().map(|x| x / s).collect();
        out.sort_by(|a, b| b.total_cmp(a));
        out
    })
}

fn state(n_a: usize, n_b: usize) -> impl Strategy<Value = StateMatrix> {
    prop::collection::vec(-1.0f64..1.0, n_a * n_b).prop_filter_map("zero state", move |v| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-3 {
            return None;
        }
        let c = Matrix::from_vec(n_a, n_b, v.iter().map(|x| x / norm).collect()).ok()?;
        StateMatrix::new(c).ok()
    })
}

fn orthogonal(n: usize, seed: u64) -> Matrix {
    let mut r = rng::stream(seed, 0);
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let x = rng::normal(&mut r);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    linalg::eigh(&a).unwrap().vectors
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schmidt_is_a_probability_vector(c in state(4, 6)) {
        let l = entangle::schmidt_spectrum(&c).unwrap().lambdas;
        prop_assert_eq!(l.len(), 4);
        prop_assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(l.iter().all(|&x| x >= 0.0));
        prop_assert!(l.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn local_rotations_leave_spectrum_unchanged(c in state(4, 4), s1 in 0u64..1000, s2 in 0u64..1000) {
        let u = orthogonal(4, s1);
        let v = orthogonal(4, s2);
        let rotated = u.matmul(c.matrix()).unwrap().matmul(&v.transpose()).unwrap();
        let a = entangle::schmidt_spectrum(&c).unwrap().lambdas;
        let b = entangle::schmidt_spectrum(&StateMatrix::new(rotated).unwrap()).unwrap().lambdas;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn both_reduced_matrices_agree(c in state(3, 5)) {
        let a = entangle::schmidt_spectrum(&c).unwrap().lambdas;
        let t = StateMatrix::new(c.matrix().transpose()).unwrap();
        let b = entangle::schmidt_spectrum(&t).unwrap().lambdas;
        for (i, x) in a.iter().enumerate() {
            prop_assert!((x - b[i]).abs() < 1e-10);
        }
        prop_assert!(b[3..].iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn renyi_is_nonincreasing(l in simplex(6), a1 in 0.05f64..4.0, da in 0.01f64..3.0) {
        let lo = entangle::renyi(&l, a1);
        let hi = entangle::renyi(&l, a1 + da);
        prop_assert!(hi <= lo + 1e-12);
        prop_assert!(entangle::von_neumann(&l) <= (6f64).ln() + 1e-12);
    }

    #[test]
    fn renyi_tends_to_von_neumann(l in simplex(5)) {
        let r1 = entangle::von_neumann(&l);
        for a in [1.0 - 1e-4, 1.0 + 1e-4] {
            prop_assert!((entangle::renyi(&l, a) - r1).abs() < 1e-3);
        }
    }

    #[test]
    fn base_two_is_rescaled_nats(l in simplex(4)) {
        let e = entangle::measures(&l, LogBase::E, &[2.0]);
        let b = entangle::measures(&l, LogBase::Two, &[2.0]);
        prop_assert!((b.r1_reported() - e.r1 / std::f64::consts::LN_2).abs() < 1e-12);
        prop_assert!((b.renyi_reported(2.0).unwrap() - e.renyi_reported(2.0).unwrap() / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn repulsion_pairs_sum_to_pair_count(l in simplex(7)) {
        // Each unordered pair contributes exactly 1 to the total.
        let a = dynamics::drift_with(&l, 0.0, 0.0, 1.0);
        prop_assert!((a.iter().sum::<f64>() - 21.0).abs() < 1e-6);
    }

    #[test]
    fn repulsion_with_degenerate_pair(x in 0.05f64..0.3) {
        let l = [x, x, 1.0 - 2.0 * x];
        let a = dynamics::drift_with(&l, 0.0, 0.0, 1.0);
        prop_assert!((a.iter().sum::<f64>() - 3.0).abs() < 1e-9);
        prop_assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn diffusion_matrix_is_psd_with_zero_rows(l in simplex(6)) {
        let d = dynamics::diffusion_matrix(&l);
        prop_assert!(d.is_symmetric());
        for i in 0..6 {
            let s: f64 = (0..6).map(|j| d[(i, j)]).sum();
            prop_assert!(s.abs() < 1e-12);
        }
        let e = linalg::eigvalsh(&d).unwrap();
        prop_assert!(e[0] > -1e-12);
    }

    #[test]
    fn projection_noise_conserves_trace(l in simplex(5), xi in prop::collection::vec(-3.0f64..3.0, 5)) {
        let n = dynamics::correlated_noise(&l, &xi, dynamics::NoiseFactor::Projection).unwrap();
        prop_assert!(n.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn langevin_step_stays_on_simplex(l in simplex(4), xi in prop::collection::vec(-3.0f64..3.0, 4), dl in 1e-6f64..1e-3) {
        let cfg = LangevinConfig::new(4, 4, Init::Uniform, vec![0.0, 1.0], 2, 0);
        match dynamics::step_with(&l, dl, &xi, &cfg).unwrap() {
            StepOutcome::Accepted(next) => {
                prop_assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(next.iter().all(|&x| x >= 0.0));
                prop_assert!(next.windows(2).all(|w| w[0] >= w[1]));
            }
            StepOutcome::Rejected => {}
        }
    }

    #[test]
    fn sampled_hamiltonians_are_symmetric(seed in any::<u64>(), idx in 0u64..50, b in 0.0f64..8.0) {
        let spec = build_spec(Model::Qrem { b }, 4, 0.5, seed).unwrap();
        let s = Sampler::new(&spec).sample(idx);
        prop_assert!(s.matrix.is_symmetric());
        for i in 0..16 {
            prop_assert!(s.matrix.offdiag_nonzeros(i) <= 4);
        }
        let rf = build_spec(Model::Rfhm { j: 1.0, d: b, h: 0.7, boundary: Boundary::Open }, 6, 1.0, seed).unwrap();
        let s = Sampler::new(&rf).sample(idx);
        prop_assert!(s.matrix.is_symmetric());
        prop_assert_eq!(s.matrix.rows(), 20);
    }

    #[test]
    fn basis_round_trips(l in 1usize..12) {
        let full = models::BasisMap::full(l);
        prop_assert!(full.is_consistent());
        if l % 2 == 0 {
            let z = models::BasisMap::zero_magnetization(l);
            prop_assert!(z.is_consistent());
            prop_assert_eq!(z.len(), models::binomial(l, l / 2));
            for i in 0..z.len() {
                prop_assert_eq!(z.index_of(z.config(i)), Some(i));
                prop_assert_eq!(z.config(i).count_ones() as usize, l / 2);
            }
        }
    }

    #[test]
    fn qrem_variances_are_bounded(b in 0.0f64..100.0, l in 1usize..9) {
        let (_, vars) = models::qrem_tables(l, b);
        for i in 0..vars.rows() {
            prop_assert!((vars[(i, i)] - l as f64 / 2.0).abs() < 1e-12);
            for j in 0..vars.cols() {
                if i != j {
                    prop_assert!((0.0..=1.0).contains(&vars[(i, j)]));
                }
            }
        }
    }

    #[test]
    fn qrem_complexity_grows_with_b(b in 0.01f64..50.0, db in 0.01f64..10.0, l in 2usize..10) {
        let y1 = complexity::y_qrem(b, l, 0.5).unwrap();
        let y2 = complexity::y_qrem(b + db, l, 0.5).unwrap();
        prop_assert!(y1 >= 0.0 && y1.is_finite());
        prop_assert!(y2 >= y1 - 1e-12 * y1.max(1.0));
    }

    #[test]
    fn generic_complexity_matches_qrem(b in 0.05f64..20.0, l in 2usize..6) {
        let (mu, var) = models::qrem_tables(l, b);
        let (mu0, var0) = models::qrem_tables(l, 0.0);
        let v: Vec<f64> = var.as_slice().to_vec();
        let v0: Vec<f64> = var0.as_slice().to_vec();
        let n = var.rows();
        let v = Matrix::from_vec(n, n, v).unwrap();
        let v0 = Matrix::from_vec(n, n, v0).unwrap();
        let g = complexity::y_generic(&v, &mu, &v0, &mu0, 0.5, 1, ParameterCount::AllEntries).unwrap();
        let q = complexity::y_qrem(b, l, 0.5).unwrap() - complexity::y_qrem(0.0, l, 0.5).unwrap();
        prop_assert!((g - q).abs() <= 1e-9 * q.abs().max(1e-9));
    }

    #[test]
    fn lambda_psi_is_nonnegative(y in 0.0f64..100.0, de in 1e-3f64..1.0, n in 16usize..1024, w in 0.0f64..1.0) {
        let omega = (1.0 / n as f64).max(w);
        let p = complexity::lambda_psi(
            PointInputs { y_minus_y0: y, delta_e: de, omega_e: omega, ipr_paper: 3.0 / (n * n) as f64, n },
            Chi0Recipe::QremMean,
            Some("QREM"),
        ).unwrap();
        prop_assert!(p.lambda >= 0.0 && p.lambda.is_finite());
        prop_assert!((p.n_lambda - n as f64 * p.lambda).abs() <= 1e-12 * p.n_lambda.max(1.0));
    }

    #[test]
    fn collapse_of_copies_is_zero(ys in prop::collection::vec(0.0f64..5.0, 6)) {
        let x: Vec<f64> = (0..6).map(|i| 1.0 + i as f64).collect();
        let c = Curve::from_points("a", x.clone(), ys.clone());
        let d = Curve::from_points("b", x, ys);
        let q = analysis::collapse_quality(&[c, d], 8, Scale::Log);
        if let Ok(q) = q {
            prop_assert!(q.abs() < 1e-12);
        }
    }

}

#[test]
fn sampling_is_deterministic() {
    let spec = build_spec(Model::Qrem { b: 1.5 }, 6, 0.5, 42).unwrap();
    let a = Sampler::new(&spec).sample(7);
    let b = Sampler::new(&spec).sample(7);
    assert_eq!(a.matrix, b.matrix);
    assert_eq!(a.seed_used, rng::stream_seed(42, 7));
    let c = Sampler::new(&spec).sample(8);
    assert_ne!(a.matrix, c.matrix);
}

#[test]
fn common_random_numbers_across_parameters() {
    // Same realization index, different b: the diagonal is shared.
    let s1 = build_spec(Model::Qrem { b: 0.5 }, 5, 0.5, 9).unwrap();
    let s2 = s1.with_model(Model::Qrem { b: 3.0 }).unwrap();
    let a = Sampler::new(&s1).sample(3);
    let b = Sampler::new(&s2).sample(3);
    for i in 0..32 {
        assert_eq!(a.matrix[(i, i)], b.matrix[(i, i)]);
    }
}

#[test]
fn langevin_trajectory_is_reproducible() {
    let mut cfg = LangevinConfig::new(2, 2, Init::Uniform, dynamics::log_grid(1e-3, 1e-1, 4), 3, 5);
    cfg.step_fraction = Some(1e-2);
    let a = dynamics::run_trajectory(&cfg, 1).unwrap();
    let b = dynamics::run_trajectory(&cfg, 1).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.checkpoints.len(), cfg.lambda_grid.len());
    for ((lam, _), g) in a.checkpoints.iter().zip(&cfg.lambda_grid) {
        assert_eq!(lam, g);
    }
}

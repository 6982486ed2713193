use drlssv::ingestion::AqiBand;
use drlssv::lssv::{kendall_tau, predict, tau_band, train_lssv, KernelSpec};
use drlssv::matrix::Matrix;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves the full (n+1)×(n+1) saddle system by explicit inversion.
fn dense_oracle(x: &Matrix, y: &[f64], gamma: f64, kernel: &KernelSpec) -> (f64, Vec<f64>) {
    let n = x.rows();
    let a = DMatrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        _ => kernel.eval(x.row(i - 1), x.row(j - 1)) + if i == j { 1.0 / gamma } else { 0.0 },
    });
    let rhs = DVector::from_fn(n + 1, |i, _| if i == 0 { 0.0 } else { y[i - 1] });
    let sol = a.try_inverse().expect("saddle matrix is invertible") * rhs;
    (sol[0], sol.iter().skip(1).copied().collect())
}

#[test]
fn eight_point_solve_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..20 {
        let x = Matrix::from_fn(8, 3, |_, _| rng.random_range(-2.0..2.0));
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..400.0)).collect();
        let kernel = if trial % 2 == 0 { KernelSpec::rbf(1.3).unwrap() } else { KernelSpec::Linear };
        let gamma = rng.random_range(0.5..50.0);
        let m = train_lssv(&x, &y, gamma, kernel).unwrap();
        let (b, a) = dense_oracle(&x, &y, gamma, &kernel);
        assert!((m.bias - b).abs() < 1e-8, "bias {} vs {b}", m.bias);
        for (got, want) in m.dual.iter().zip(&a) {
            assert!((got - want).abs() < 1e-8);
        }
    }
}

#[test]
fn two_point_linear_is_odd() {
    let x = Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
    let m = train_lssv(&x, &[-1.0, 1.0], 1.0, KernelSpec::Linear).unwrap();
    assert!((m.dual[0] + 1.0 / 3.0).abs() < 1e-12 && (m.dual[1] - 1.0 / 3.0).abs() < 1e-12);
    assert!(predict(&m, &[0.0]).unwrap().abs() < 1e-12);
}

#[test]
fn kendall_matches_pair_count_for_all_permutations_up_to_six() {
    fn perms(n: usize) -> Vec<Vec<f64>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..n {
                let mut q = p.clone();
                q.insert(i, (n - 1) as f64);
                out.push(q);
            }
        }
        out
    }
    for n in 2..=6 {
        let all = perms(n);
        for u in &all {
            for v in &all {
                let (mut c, mut d) = (0i64, 0i64);
                for i in 0..n {
                    for j in i + 1..n {
                        if (u[i] < u[j]) == (v[i] < v[j]) { c += 1 } else { d += 1 }
                    }
                }
                let want = (c - d) as f64 / (n * (n - 1) / 2) as f64;
                assert_eq!(kendall_tau(u, v).unwrap(), want);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trained_models_satisfy_the_saddle_system(
        n in 1usize..40, dim in 1usize..4, seed in any::<u64>(), log_gamma in -1.0f64..3.0, rbf in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(n, dim, |_, _| rng.random_range(-3.0..3.0));
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..500.0)).collect();
        let gamma = 10f64.powf(log_gamma);
        let kernel = if rbf { KernelSpec::rbf(rng.random_range(0.3..3.0)).unwrap() } else { KernelSpec::Linear };
        let m = train_lssv(&x, &y, gamma, kernel).unwrap();
        prop_assert!(m.kkt_residual(&y) < 1e-8);
        prop_assert!(m.dual.iter().sum::<f64>().abs() < 1e-8);
        for (k, row) in x.iter_rows().enumerate() {
            prop_assert!((y[k] - predict(&m, row).unwrap() - m.dual[k] / gamma).abs() < 1e-8);
        }
    }

    #[test]
    fn rbf_predictions_are_lipschitz(seed in any::<u64>(), sigma in 0.3f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(25, 2, |_, _| rng.random_range(-3.0..3.0));
        let y: Vec<f64> = (0..25).map(|_| rng.random_range(0.0..500.0)).collect();
        let m = train_lssv(&x, &y, 10.0, KernelSpec::rbf(sigma).unwrap()).unwrap();
        let l = m.dual.iter().map(|a| a.abs()).sum::<f64>() / (sigma * (-0.5f64).exp());
        for _ in 0..20 {
            let p: [f64; 2] = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let q: [f64; 2] = [p[0] + rng.random_range(-0.5..0.5), p[1] + rng.random_range(-0.5..0.5)];
            let dist = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            let diff = (predict(&m, &p).unwrap() - predict(&m, &q).unwrap()).abs();
            prop_assert!(diff <= l * dist + 1e-9);
        }
    }

    #[test]
    fn tau_band_is_total_on_the_unit_interval(tau in -1.0f64..=1.0) {
        let band = tau_band(tau).unwrap();
        prop_assert!(band != AqiBand::Severe);
    }

    #[test]
    fn tau_is_invariant_under_increasing_maps(
        u in prop::collection::vec(0u8..20, 2..60), seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = u.into_iter().map(f64::from).collect();
        let v: Vec<f64> = (0..u.len()).map(|_| f64::from(rng.random_range(0u8..20))).collect();
        let base = kendall_tau(&u, &v).unwrap();
        let fu: Vec<f64> = u.iter().map(|x| x.powi(3) - 4.0).collect();
        let fv: Vec<f64> = v.iter().map(|x| (x / 3.0).exp()).collect();
        prop_assert_eq!(kendall_tau(&fu, &v).unwrap(), base);
        prop_assert_eq!(kendall_tau(&u, &fv).unwrap(), base);
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use woodbury_ls::dense::{add_outer_product, condition_number, mat_mul, mat_t_vec, mat_vec, norm2};
use woodbury_ls::woodbury::{updated_normal_residual, DEFAULT_NE_TOL};
use woodbury_ls::{
    baseline_solve, build_workspace, pinv_oracle, prepare, qr_thin, solve_many, solve_updated,
    Backend, LowRankUpdate, Matrix,
};

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// `(A, U, V, b)` with `cond(A) <= 1e3` and `cond(A + UVᵀ) <= 1e3`, or `None`
/// when the draw is too close to rank deficient.
fn instance(seed: u64, m: usize, n: usize, r: usize) -> Option<(Matrix, Matrix, Matrix, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random(&mut rng, m, n);
    let u = random(&mut rng, m, r);
    let v = random(&mut rng, n, r);
    let b = random(&mut rng, m, 1).into_vec();
    let mut a_hat = a.clone();
    add_outer_product(&mut a_hat, &u, &v).unwrap();
    (condition_number(&a) <= 1e3 && condition_number(&a_hat) <= 1e3).then_some((a, u, v, b))
}

fn dims() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 5usize..=40)
        .prop_flat_map(|(seed, m)| (Just(seed), Just(m), 2usize..=m))
        .prop_flat_map(|(seed, m, n)| (Just(seed), Just(m), Just(n), 1usize..=n.min(4)))
}

fn rel(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
    norm2(&d) / norm2(y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn updated_solve_matches_scratch((seed, m, n, r) in dims()) {
        let inst = instance(seed, m, n, r);
        prop_assume!(inst.is_some());
        let (a, u, v, b) = inst.unwrap();
        let x_ref = baseline_solve(&a, &u, &v, &b).unwrap();
        let base = prepare(a, Some(&b[..]), Backend::Qr).unwrap();
        let upd = LowRankUpdate::new(u, v).unwrap();
        let ws = build_workspace(&base, &upd).unwrap();
        let x = solve_updated(&base, &upd, &ws, &b).unwrap().x;
        prop_assert!(rel(&x, &x_ref) <= 1e-10, "error {}", rel(&x, &x_ref));
    }

    #[test]
    fn solutions_satisfy_normal_equations((seed, m, n, r) in dims()) {
        let inst = instance(seed, m, n, r);
        prop_assume!(inst.is_some());
        let (a, u, v, b) = inst.unwrap();
        let base = prepare(a.clone(), Some(&b[..]), Backend::Qr).unwrap();

        // base: ‖Aᵀ(A·x0 − b)‖ ≤ tol·‖A‖²·‖x0‖, with ‖A‖_F bounding ‖A‖₂
        let x0 = base.x0().unwrap();
        let mut res = mat_vec(&a, x0).unwrap();
        for (ri, bi) in res.iter_mut().zip(&b) {
            *ri -= bi;
        }
        let g = norm2(&mat_t_vec(&a, &res).unwrap());
        prop_assert!(g <= DEFAULT_NE_TOL * a.frobenius_norm().powi(2) * norm2(x0));

        let upd = LowRankUpdate::new(u, v).unwrap();
        let ws = build_workspace(&base, &upd).unwrap();
        let out = solve_updated(&base, &upd, &ws, &b).unwrap().with_residual(&base, &upd, &b).unwrap();
        let mut a_hat = a;
        add_outer_product(&mut a_hat, upd.u(), upd.v()).unwrap();
        let bound = DEFAULT_NE_TOL * a_hat.frobenius_norm().powi(2) * norm2(&out.x);
        prop_assert!(out.ne_residual.unwrap() <= bound);
        prop_assert_eq!(out.ne_residual.unwrap(), updated_normal_residual(base.a(), &upd, &out.x, &b).unwrap());
    }

    #[test]
    fn many_rhs_columns_are_single_solves((seed, m, n, r) in dims(), k in 1usize..6) {
        let inst = instance(seed, m, n, r);
        prop_assume!(inst.is_some());
        let (a, u, v, b) = inst.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        // first column is the bound right-hand side, the others are fresh
        let mut bs = random(&mut rng, m, k);
        bs.col_mut(0).copy_from_slice(&b);
        let base = prepare(a, Some(&b[..]), Backend::Qr).unwrap();
        let upd = LowRankUpdate::new(u, v).unwrap();
        let ws = build_workspace(&base, &upd).unwrap();
        let xs = solve_many(&base, &upd, &ws, &bs).unwrap();
        for j in 0..k {
            let x = solve_updated(&base, &upd, &ws, bs.col(j)).unwrap().x;
            prop_assert_eq!(xs.col(j), &x[..]);
        }
    }

    #[test]
    fn qr_reconstructs_and_is_orthonormal(seed in any::<u64>(), m in 1usize..80, extra in 0usize..5) {
        let n = m.saturating_sub(extra).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random(&mut rng, m, n);
        prop_assume!(condition_number(&a) <= 1e6);
        let f = qr_thin(&a).unwrap();
        let qtq = mat_mul(&f.q, &f.q, true).unwrap();
        let orth = qtq.sub(&Matrix::identity(n)).unwrap().frobenius_norm();
        prop_assert!(orth <= 1e-13 * n as f64);
        let recon = mat_mul(&f.q, &f.r, false).unwrap().sub(&a).unwrap().frobenius_norm();
        prop_assert!(recon <= 1e-13 * a.frobenius_norm());
        for i in 0..n {
            prop_assert!(f.r[(i, i)] >= 0.0);
            for k in i + 1..n {
                prop_assert_eq!(f.r[(k, i)], 0.0);
            }
        }
    }

    #[test]
    fn pinv_oracle_satisfies_penrose(seed in any::<u64>(), m in 2usize..30, extra in 0usize..10) {
        let n = m.saturating_sub(extra).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random(&mut rng, m, n);
        prop_assume!(condition_number(&a) <= 1e4);
        let p = pinv_oracle(&a).unwrap();
        let ap = mat_mul(&a, &p, false).unwrap();
        let pa = mat_mul(&p, &a, false).unwrap();
        let apa = mat_mul(&ap, &a, false).unwrap();
        let pap = mat_mul(&pa, &p, false).unwrap();
        let tol = 1e-9;
        prop_assert!(apa.sub(&a).unwrap().frobenius_norm() <= tol * a.frobenius_norm());
        prop_assert!(pap.sub(&p).unwrap().frobenius_norm() <= tol * p.frobenius_norm());
        prop_assert!(ap.sub(&ap.transpose()).unwrap().frobenius_norm() <= tol * ap.frobenius_norm());
        prop_assert!(pa.sub(&pa.transpose()).unwrap().frobenius_norm() <= tol * pa.frobenius_norm());
    }
}

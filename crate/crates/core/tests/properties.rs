use dssep::cones::{certify, horn_matrix, lift_witness, witness_value, CertifyBudget, CpFactorization, Verdict};
use dssep::decomp::{sigma_xyz, state_ix, zeta_decomposition};
use dssep::matcore::{partial_transpose_second, sym_eig};
use dssep::multiqubit::{f_sequence, family_rho, pt_blocks};
use dssep::range_criterion::{range_criterion_test, DEFAULT_SUPPORT_CAP};
use dssep::{DsState, SymMatrix, Tolerance};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn ds_state(max_d: usize) -> impl Strategy<Value = DsState> {
    (2..=max_d).prop_flat_map(|d| {
        let n = d * (d + 1) / 2;
        prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.0..2.0f64], n).prop_map(move |w| {
            let mut it = w.into_iter();
            let mut pairs = Vec::new();
            for i in 0..d {
                for j in i..d {
                    pairs.push(((i, j), it.next().unwrap()));
                }
            }
            DsState::new(d, pairs, false).unwrap()
        })
    })
}

fn factor(max_d: usize, max_k: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (2..=max_d, 1..=max_k).prop_flat_map(|(d, k)| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0..1.5f64], d * k)
            .prop_map(move |v| DMatrix::from_vec(d, k, v))
    })
}

fn state_of_factor(b: &DMatrix<f64>) -> DsState {
    let m = SymMatrix::from_matrix(b * b.transpose()).unwrap();
    DsState::from_m_matrix(&m, false).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn dense_pt_min(rho: &DsState) -> f64 {
    let d = rho.d();
    let pt = partial_transpose_second(rho.full_density_matrix().as_matrix(), d, d);
    sym_eig(&SymMatrix::from_matrix(pt).unwrap()).min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn m_matrix_round_trip(rho in ds_state(7)) {
        let back = DsState::from_m_matrix(rho.m_matrix().as_sym(), false).unwrap();
        for i in 0..rho.d() {
            for j in i..rho.d() {
                prop_assert!((back.weight(i, j) - rho.weight(i, j)).abs() <= 1e-15 * (1.0 + rho.weight(i, j)));
            }
        }
    }

    #[test]
    fn m_matrix_l1_is_total_weight(rho in ds_state(7)) {
        let l1 = rho.m_matrix().as_sym().entrywise_l1();
        prop_assert!((l1 - rho.total_weight()).abs() <= 1e-12 * (1.0 + l1));
    }

    #[test]
    fn block_spectrum_matches_dense(rho in ds_state(6)) {
        let d = rho.d();
        let expected = rho.pt_spectrum().all_eigenvalues();
        let pt = partial_transpose_second(rho.full_density_matrix().as_matrix(), d, d);
        let dense = sorted(sym_eig(&SymMatrix::from_matrix(pt).unwrap()).values.iter().copied().collect());
        prop_assert_eq!(expected.len(), dense.len());
        let dist = expected.iter().zip(&dense).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        prop_assert!(dist <= 1e-8, "distance {}", dist);
    }

    #[test]
    fn is_ppt_agrees_with_dense(rho in ds_state(6)) {
        let tol = Tolerance::default();
        let min = dense_pt_min(&rho);
        let margin = 1e-7 * (1.0 + rho.total_weight());
        if min > margin {
            prop_assert!(rho.is_ppt(&tol));
        } else if min < -margin {
            prop_assert!(!rho.is_ppt(&tol));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn zeta_reconstructs_without_extra_coherences(b in factor(5, 4)) {
        let rho = state_of_factor(&b);
        let d = rho.d();
        let dec = zeta_decomposition(&CpFactorization::new(b).unwrap());
        let recon = dec.reconstruct(d);
        let target = rho.full_density_matrix();
        for r in 0..d * d {
            for c in 0..d * d {
                let t = target.get(r, c);
                let z = recon[(r, c)];
                if t == 0.0 {
                    prop_assert!(z.norm() <= 1e-10, "stray coherence {} at ({},{})", z, r, c);
                } else {
                    prop_assert!((z - Complex64::new(t, 0.0)).norm() <= 1e-9 * (1.0 + t.abs()));
                }
            }
        }
    }

    #[test]
    fn lifted_horn_is_nonnegative_on_cp(
        (b, pick) in (5..=8usize, 1..=4usize).prop_flat_map(|(d, k)| (
            prop::collection::vec(0.0..1.0f64, d * k).prop_map(move |v| DMatrix::from_vec(d, k, v)),
            prop::sample::subsequence((0..d).collect::<Vec<_>>(), 5).prop_shuffle(),
        )),
    ) {
        let d = b.nrows();
        let m = SymMatrix::from_matrix(&b * b.transpose()).unwrap();
        let w = lift_witness(&horn_matrix(), d, &pick).unwrap();
        prop_assert!(witness_value(&w, &m).unwrap() >= -1e-12 * (1.0 + m.frobenius_norm()));
    }

    #[test]
    fn range_criterion_never_rejects_cp(b in factor(6, 4)) {
        let rho = state_of_factor(&b);
        let rep = range_criterion_test(&rho, &Tolerance::default(), DEFAULT_SUPPORT_CAP);
        if let Ok(rep) = rep {
            prop_assert!(!rep.is_infeasible());
        }
    }

    #[test]
    fn state_ix_is_scale_invariant(x in prop::collection::vec(0.01..5.0f64, 2..7), c in 0.01..100.0f64) {
        let a = state_ix(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| v * c).collect();
        let b = state_ix(&y).unwrap();
        for i in 0..x.len() {
            for j in i..x.len() {
                prop_assert!((a.weight(i, j) - b.weight(i, j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sigma_ignores_phases(
        mags in prop::array::uniform3(0.0..2.0f64),
        phases in prop::array::uniform3(0.0..std::f64::consts::TAU),
        shifts in prop::array::uniform3(0.0..std::f64::consts::TAU),
    ) {
        let z = |k: usize, extra: f64| Complex64::from_polar(mags[k], phases[k] + extra);
        let a = sigma_xyz(z(0, 0.0), z(1, 0.0), z(2, 0.0));
        let b = sigma_xyz(z(0, shifts[0]), z(1, shifts[1]), z(2, shifts[2]));
        for i in 0..3 {
            for j in i..3 {
                prop_assert!((a.weight(i, j) - b.weight(i, j)).abs() <= 1e-12 * (1.0 + a.weight(i, j)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_dnn_is_separable(b in factor(4, 6), diag in prop::collection::vec(0.0..0.5f64, 4)) {
        // B B^T plus a nonnegative diagonal is DNN; for d <= 4 that is separable.
        let d = b.nrows();
        let mut m = &b * b.transpose();
        for i in 0..d {
            m[(i, i)] += diag[i];
        }
        prop_assume!(m.iter().any(|&v| v > 0.0));
        let rho = DsState::from_m_matrix(&SymMatrix::from_matrix(m).unwrap(), false).unwrap();
        let cert = certify(&rho, &CertifyBudget::default());
        prop_assert_eq!(cert.verdict, Verdict::Separable, "{:?}", cert.trace);
    }

    #[test]
    fn f_sequence_recurrence_and_closed_form(z in prop::sample::select(vec![0.01, 0.1, 1.0, 10.0, 100.0])) {
        let f = f_sequence(z, 31).unwrap();
        prop_assert_eq!(f.values[0], 1.0);
        prop_assert!((f.values[1] - (1.0 + z)).abs() <= 1e-15 * (1.0 + z));
        for k in 0..29 {
            let rec = (2.0 + z) * f.values[k + 1] - f.values[k];
            prop_assert!((rec - f.values[k + 2]).abs() <= 1e-9 * f.values[k + 2].abs());
        }
        for k in 0..=30i64 {
            let exact = f.f(k);
            prop_assert!((f.closed_form(k) - exact).abs() <= 1e-9 * exact.abs(), "k={} z={}", k, z);
            prop_assert!((f.f(-k - 1) - exact).abs() <= 1e-9 * exact.abs());
        }
        prop_assert!((f.alpha * f.beta - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn family_trace_and_interior_blocks(
        n in prop::sample::select(vec![5usize, 7, 9]),
        z in 0.05..20.0f64,
        sigma in prop::sample::select(vec![-1.0, 1.0]),
    ) {
        let state = family_rho(n, z, sigma).unwrap();
        let k = n / 2;
        let expected = 2.0 * (4.0 + z).powi(k as i32);
        prop_assert!((state.unnormalized_trace() - expected).abs() <= 1e-9 * expected);
        prop_assert!((state.trace() - 1.0).abs() <= 1e-9);
        for k_idx in 0..=n {
            prop_assert!((state.lambda(k_idx) - state.lambda(n - k_idx)).abs() <= 1e-12 * state.lambda(k_idx));
        }
        prop_assert_eq!(state.lambda(k), 1.0);
        let tol = Tolerance::default();
        for m in 1..=k {
            let dec = pt_blocks(&state, m).unwrap();
            let (lo, hi) = (-(m as i64) + 2, (n - m) as i64 - 2);
            for blk in dec.blocks.iter().filter(|b| b.n >= lo && b.n <= hi) {
                let size = blk.size();
                prop_assert_eq!(dssep::matcore::numerical_rank(&blk.a, &tol), size.min(2), "m={} n={}", m, blk.n);
                let scale = blk.h.max_abs();
                for p in 0..size.saturating_sub(2) {
                    let mut v = vec![0.0; size];
                    v[p] = 1.0;
                    v[p + 1] = -(2.0 + z);
                    v[p + 2] = 1.0;
                    for r in 0..size {
                        let s: f64 = (0..size).map(|c| blk.h.get(r, c) * v[c]).sum();
                        prop_assert!(s.abs() <= 1e-9 * scale * (3.0 + z), "m={} n={} row {}", m, blk.n, r);
                    }
                }
            }
        }
    }
}

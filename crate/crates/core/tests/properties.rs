//! Invariants checked over random inputs.

use std::sync::OnceLock;

use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use nzme::bath_thermo::{build_lambda, thermal_state, truncate_bath, EigenOptions, TruncatedBath};
use nzme::cli_io::artifacts::{csv_string, parse_csv};
use nzme::dynamics::{
    integrate_sme, min_eigenvalue3, reference_initial_state, shifted_eigenbasis, to_mat3, unitary3, DensityMatrix, Mat3,
    SmeOptions, Trajectory, TrajectoryDiagnostics, TrajectoryKind,
};
use nzme::meanfield_kernel::{double_commutator_mean, eval_w};
use nzme::observables::{compare, compute_observables, rotating_frame};
use nzme::operator::{c, CMatrix, HermitianOperator, C64};
use nzme::sme_kernel::{sme_from_x, validate_constraints, SmeKernel};
use nzme::spin_model::{build_spin1_ops, build_system_hamiltonian, SpinBathModel, SystemParams};

fn small_bath() -> &'static (TruncatedBath, f64) {
    static BATH: OnceLock<(TruncatedBath, f64)> = OnceLock::new();
    BATH.get_or_init(|| {
        let p = SystemParams {
            n_spins: 5,
            ..SystemParams::default()
        };
        let m = SpinBathModel::build(&p, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        (truncate_bath(&m.bath, 12, &EigenOptions::default()).unwrap(), p.kbt)
    })
}

fn hm(v: &[f64]) -> HermitianOperator {
    let m = CMatrix::from_fn(3, 3, |i, j| c(v[3 * i + j], v[9 + 3 * i + j]));
    HermitianOperator::symmetrized(&(&m + m.adjoint()))
}

fn system() -> (Mat3, Mat3) {
    let p = SystemParams::default();
    (to_mat3(&build_system_hamiltonian(&p)).unwrap(), to_mat3(&build_spin1_ops().sx).unwrap())
}

/// Random density matrix from a 3×3 Gram matrix.
fn density(v: &[f64]) -> Mat3 {
    let a = Mat3::from_fn(|i, j| c(v[3 * i + j], v[9 + 3 * i + j]));
    let g = a * a.adjoint() + Mat3::identity() * c(1e-3, 0.0);
    g / g.trace()
}

fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

proptest! {
    #[test]
    fn lambda_has_unit_trace(eta in prop::collection::vec(-300.0f64..300.0, 0..10)) {
        let (tb, kbt) = small_bath();
        let rho = thermal_state(tb, *kbt).unwrap();
        let lam = build_lambda(tb, &rho, &eta);
        let scale: f64 = lam.iter().map(|l| l.abs()).sum::<f64>().max(1.0);
        prop_assert!((lam.iter().sum::<f64>() - 1.0).abs() < 1e-12 * scale);
    }

    #[test]
    fn thermal_weights_normalized(kbt in 1e-5f64..1e-1) {
        let (tb, _) = small_bath();
        let w = thermal_state(tb, kbt).unwrap().weights;
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!(w.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn double_commutator_mean_matches_matrix_units(x in prop::collection::vec(-2.0f64..2.0, 18), y in prop::collection::vec(-2.0f64..2.0, 18)) {
        let (a, b) = (hm(&x), hm(&y));
        let mut s = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let mut e = CMatrix::zeros(3, 3);
                e[(i, j)] = c(1.0, 0.0);
                let inner = b.matrix() * &e - &e * b.matrix();
                let outer = a.matrix() * &inner - &inner * a.matrix();
                s += (e.adjoint() * outer).trace();
            }
        }
        prop_assert!((double_commutator_mean(&a, &b) - s.re / 9.0).abs() < 1e-10);
    }

    #[test]
    fn w_is_one_at_origin(alpha in 0.0f64..3.0, beta in 1e-3f64..3.0) {
        prop_assert!((eval_w(alpha, beta, 0.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rotating_frame_invariants(v in prop::collection::vec(-1.0f64..1.0, 18), t in 0.0f64..500.0, bb in -0.2f64..0.2) {
        let (h, s) = system();
        let rho = density(&v);
        let sigma = rotating_frame(&rho, &h, &s, bb, t);
        prop_assert!(((sigma * sigma).trace().re - (rho * rho).trace().re).abs() < 1e-12);
        let (_, u) = shifted_eigenbasis(&h, &s, bb);
        let (pr, ps) = (u.adjoint() * rho * u, u.adjoint() * sigma * u);
        for i in 0..3 {
            prop_assert!((pr[(i, i)].re - ps[(i, i)].re).abs() < 1e-12);
        }
        // Free evolution under H + 𝓑̄S is undone by the frame.
        let hs = h + s * c(bb, 0.0);
        let ut = unitary3(&hs, t);
        let back = rotating_frame(&(ut * rho * ut.adjoint()), &h, &s, bb, t);
        prop_assert!(max_abs(&(back - rho)) < 1e-10);
    }

    #[test]
    fn compare_of_identical_series_is_zero(v in prop::collection::vec(-1.0f64..1.0, 18), n in 3usize..40) {
        let (h, s) = system();
        let rho = density(&v);
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.7).collect();
        let states: Vec<Mat3> = times.iter().map(|&t| { let u = unitary3(&h, t); u * rho * u.adjoint() }).collect();
        let traj = Trajectory { kind: TrajectoryKind::Exact, times, states, diagnostics: TrajectoryDiagnostics::default() };
        let obs = compute_observables(&traj, &h, &s, 0.05);
        let rep = compare(&obs, &obs).unwrap();
        for sc in &rep.series {
            prop_assert_eq!(sc.max_abs, 0.0);
            prop_assert_eq!(sc.rel_error, 0.0);
            prop_assert_eq!(sc.long_time_rel, 0.0);
            prop_assert_eq!(sc.lag, 0.0);
        }
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 3), 0..20)) {
        let s = csv_string(&["a", "b", "c"], rows.clone());
        prop_assert_eq!(parse_csv(&s, &["a", "b", "c"]).unwrap(), rows);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn x_image_satisfies_positivity_conditions(x in prop::array::uniform4(0.0f64..200.0), k1 in 1e-6f64..1e-1) {
        let p = sme_from_x(x, k1).unwrap();
        let lam = p.lambda();
        let scale = p.mu.abs().max(p.beta_s).powi(2).max(1.0);
        prop_assert!(lam <= 0.0);
        prop_assert!(p.v0() >= -1e-12 * scale);
        prop_assert!(lam * lam / 4.0 - p.v0() >= -1e-12 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_weights_sum_to_k1_0(x in prop::array::uniform4(0.1f64..50.0), k1 in 1e-4f64..1e-2) {
        let p = sme_from_x(x, k1).unwrap();
        if let Ok(k) = SmeKernel::new(&p) {
            let sum: C64 = k.a.iter().sum();
            let scale = k.a.iter().map(|a| a.norm()).sum::<f64>().max(k1);
            prop_assert!((sum.re - k1).abs() < 1e-9 * scale, "sum {sum} vs {k1}");
            prop_assert!(sum.im.abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn sme_preserves_trace_and_hermiticity(x in prop::array::uniform4(0.5f64..20.0), k1 in 1e-4f64..2e-3, bb in 0.0f64..0.15) {
        let p = sme_from_x(x, k1).unwrap();
        prop_assume!(validate_constraints(&p).all_pass());
        let Ok(k) = SmeKernel::new(&p) else { return Ok(()) };
        let (h, s) = system();
        let rho0 = DensityMatrix::pure(&reference_initial_state()).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64).collect();
        let traj = integrate_sme(&h, &s, bb, &k, &rho0, &grid, &SmeOptions::default()).unwrap();
        for r in &traj.states {
            prop_assert!((r.trace() - c(1.0, 0.0)).norm() < 1e-9);
            prop_assert!(max_abs(&(r - r.adjoint())) < 1e-12);
            prop_assert!(min_eigenvalue3(r).is_finite());
        }
    }
}

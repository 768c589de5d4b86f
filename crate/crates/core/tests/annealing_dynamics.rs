use nalgebra::DMatrix;
use proptest::prelude::*;
use spinphonon::annealing::{
    adiabaticity_check, bloch_rhs, bloch_rhs_flat, fidelity_z, final_fidelity, integrate_anneal, AnnealOptions,
    AnnealSchedule, AnnealState, InitialOrientation,
};
use spinphonon::classical::{exact_ground_state, ClassifyOptions};
use spinphonon::couplings::exact_couplings;
use spinphonon::lattice::{chain_modes, ChainConfig, HoppingModel};

fn small_chain_couplings(n: usize, t_c: f64) -> DMatrix<f64> {
    let cfg = ChainConfig::new(n, t_c, 2.0 * std::f64::consts::PI / 3.0, HoppingModel::OpenNn);
    exact_couplings(&chain_modes(&cfg).unwrap(), &cfg).unwrap().j
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Fixed-step classical RK4, used as a reference for the adaptive integrator.
fn rk4(sched: &AnnealSchedule, j: &DMatrix<f64>, y0: &[f64], t_end: f64, steps: usize) -> Vec<f64> {
    let h = t_end / steps as f64;
    let n = y0.len();
    let f = |t: f64, y: &[f64]| {
        let mut d = vec![0.0; n];
        bloch_rhs_flat(t, y, sched, j, true, &mut d);
        d
    };
    let mut y = y0.to_vec();
    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = f(t, &y);
        let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
        let k2 = f(t + 0.5 * h, &y2);
        let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
        let k3 = f(t + 0.5 * h, &y3);
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
        let k4 = f(t + h, &y4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_is_orthogonal_to_each_bloch_vector(
        vs in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 2..8),
        t in 0.0f64..50.0,
        t_c in 0.05f64..2.0,
    ) {
        prop_assume!(vs.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3));
        let n = vs.len();
        let j = small_chain_couplings(n, t_c);
        let sched = AnnealSchedule::standard(5.0, 10.0);
        let state = AnnealState::new(t, vs.into_iter().map(unit).collect(), &sched);
        for diag in [true, false] {
            let d = bloch_rhs(&state, &sched, &j, diag).unwrap();
            for (b, db) in state.bloch.iter().zip(&d) {
                prop_assert!((b[0] * db[0] + b[1] * db[1] + b[2] * db[2]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fidelity_is_symmetric_under_global_flip(s in prop::collection::vec(prop::bool::ANY, 1..20)) {
        let s: Vec<f64> = s.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let neg: Vec<f64> = s.iter().map(|x| -x).collect();
        prop_assert!((fidelity_z(&s, &s).unwrap() - 1.0).abs() < 1e-15);
        prop_assert!((fidelity_z(&neg, &s).unwrap() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn adaptive_integrator_matches_fixed_step_reference() {
    let j = small_chain_couplings(4, 0.3);
    let sched = AnnealSchedule::standard(5.0, 3.0);
    let init = AnnealState::initial(4, &sched, InitialOrientation::AlongField).unwrap();
    let opts = AnnealOptions {
        rtol: 1e-11,
        atol: 1e-13,
        samples: 10,
        ..AnnealOptions::default()
    };
    let traj = integrate_anneal(&sched, &j, &init, &opts).unwrap();
    let y0: Vec<f64> = init.bloch.iter().flatten().copied().collect();
    let reference = rk4(&sched, &j, &y0, sched.t_final, 60_000);
    let got: Vec<f64> = traj.last().unwrap().bloch.iter().flatten().copied().collect();
    for (a, b) in got.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn free_precession_without_couplings_keeps_spins_identical() {
    let j = DMatrix::zeros(3, 3);
    let sched = AnnealSchedule::standard(5.0, 2.0);
    let init = AnnealState::initial(3, &sched, InitialOrientation::AlongField).unwrap();
    let opts = AnnealOptions {
        samples: 20,
        ..AnnealOptions::default()
    };
    let traj = integrate_anneal(&sched, &j, &init, &opts).unwrap();
    for s in &traj {
        for b in &s.bloch[1..] {
            for (x, y) in b.iter().zip(&s.bloch[0]) {
                assert!((x - y).abs() < 1e-14);
            }
        }
        assert!(s.max_norm_deviation().1 < 1e-6);
    }
}

#[test]
fn flipping_longitudinal_field_negates_y_and_z() {
    let j = small_chain_couplings(5, 0.2);
    let plus = AnnealSchedule::standard(5.0, 4.0);
    let minus = AnnealSchedule {
        omega_z0: -plus.omega_z0,
        ..plus
    };
    let opts = AnnealOptions {
        rtol: 1e-10,
        atol: 1e-12,
        samples: 8,
        ..AnnealOptions::default()
    };
    let run = |s: &AnnealSchedule| {
        let init = AnnealState::initial(5, s, InitialOrientation::AlongField).unwrap();
        integrate_anneal(s, &j, &init, &opts).unwrap()
    };
    for (a, b) in run(&plus).iter().zip(run(&minus).iter()) {
        for (p, m) in a.bloch.iter().zip(&b.bloch) {
            assert!((p[0] - m[0]).abs() < 1e-7);
            assert!((p[1] + m[1]).abs() < 1e-7);
            assert!((p[2] + m[2]).abs() < 1e-7);
        }
    }
}

#[test]
fn halving_tolerances_leaves_converged_fidelity_unchanged() {
    let j = small_chain_couplings(8, 0.1);
    let exact = exact_ground_state(&j, 2.0 * std::f64::consts::PI / 3.0, &ClassifyOptions::default()).unwrap();
    let sched = AnnealSchedule::standard(5.0, 500.0);
    let base = AnnealOptions {
        samples: 4,
        ..AnnealOptions::default()
    };
    let fine = AnnealOptions {
        rtol: 0.5 * base.rtol,
        atol: 0.5 * base.atol,
        ..base
    };
    let run =
        |o: &AnnealOptions| final_fidelity(&sched, &j, &exact.ground.s, InitialOrientation::AlongField, o).unwrap();
    let (a, drift_a) = run(&base);
    let (b, drift_b) = run(&fine);
    assert!(a > 0.99, "{a}");
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    assert!(drift_a.max(drift_b) < 1e-6);
}

#[test]
fn transverse_start_without_longitudinal_field_is_stationary() {
    let j = small_chain_couplings(6, 0.5);
    let sched = AnnealSchedule {
        omega_z0: 0.0,
        ..AnnealSchedule::standard(5.0, 20.0)
    };
    for orientation in [InitialOrientation::AlongField, InitialOrientation::AgainstField] {
        let init = AnnealState::initial(6, &sched, orientation).unwrap();
        let traj = integrate_anneal(
            &sched,
            &j,
            &init,
            &AnnealOptions {
                samples: 10,
                ..AnnealOptions::default()
            },
        )
        .unwrap();
        for s in &traj {
            assert_eq!(s.bloch, init.bloch);
        }
    }
}

#[test]
fn fast_schedule_is_flagged_non_adiabatic() {
    let j = small_chain_couplings(4, 0.3);
    let sched = AnnealSchedule::standard(5.0, 0.5);
    let init = AnnealState::initial(4, &sched, InitialOrientation::AlongField).unwrap();
    let traj = integrate_anneal(
        &sched,
        &j,
        &init,
        &AnnealOptions {
            samples: 200,
            ..AnnealOptions::default()
        },
    )
    .unwrap();
    let r = adiabaticity_check(&traj, &sched, 1.0, 0.1).unwrap();
    assert!(r.violated);
    assert!((r.tau_ratio - 2.0).abs() < 1e-12);
    assert!((r.tau_prime_ratio - 20.0).abs() < 1e-12);
}

#[test]
fn mismatched_couplings_are_rejected() {
    let sched = AnnealSchedule::standard(5.0, 10.0);
    let init = AnnealState::initial(3, &sched, InitialOrientation::AlongField).unwrap();
    assert!(integrate_anneal(&sched, &DMatrix::zeros(4, 4), &init, &AnnealOptions::default()).is_err());
}

use std::f64::consts::PI;

use diffctl::agents::{AdaptiveState, Controller, GpcState, LinearController};
use diffctl::autodiff::{jacobian_with, jvp, DiffFunction, JacobianMode, Scalar, Tape};
use diffctl::bench::{counted, CallCounter, ExperimentResult};
use diffctl::cli::parse_args;
use diffctl::envs::{disturbance_at, DisturbanceSpec, Env, Lds, Pendulum, PlanarQuadrotor, StepFunction};
use diffctl::linalg::Matrix;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    -1e6f64..1e6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wrap_lands_in_half_open_interval(theta in -1e4f64..1e4) {
        let w = theta.wrap_angle();
        prop_assert!(w > -PI && w <= PI, "{w}");
        let turns = (theta - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn forward_and_reverse_modes_agree(
        z in prop::collection::vec(-1.0f64..1.0, 8),
        v in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        let env = PlanarQuadrotor::default();
        let f = StepFunction(&env);
        let forward = jvp(&f, &z, &v).unwrap();
        let reverse = jacobian_with(&f, &z, JacobianMode::Adjoint).unwrap().jacobian.mul_vec(&v);
        for (a, b) in forward.iter().zip(&reverse) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn tape_replay_reproduces_values(theta in -10.0f64..10.0, omega in -5.0f64..5.0, u in -3.0f64..3.0) {
        let env = Pendulum::default();
        let tape = Tape::new();
        let z = tape.vars(&[theta, omega, u]);
        let _ = StepFunction(&env).eval(&z);
        prop_assert_eq!(tape.replay(), tape.values());
    }

    #[test]
    fn counting_is_transparent(
        x in prop::collection::vec(finite(), 6),
        u in prop::collection::vec(finite(), 2),
        w in prop::collection::vec(finite(), 6),
    ) {
        let env = PlanarQuadrotor::default();
        let counter = CallCounter::new();
        let wrapped = counted(&env, &counter);
        let plain: Vec<f64> = env.step(&x, &u, &w);
        let seen: Vec<f64> = wrapped.step(&x, &u, &w);
        prop_assert_eq!(plain, seen);
        prop_assert_eq!(counter.dynamics_evals(), 1);
    }

    #[test]
    fn counter_never_decreases(ops in prop::collection::vec((0u8..3, 0u64..5), 0..50)) {
        let counter = CallCounter::new();
        let env = counted(Lds::double_integrator(), &counter);
        let mut last = counter.snapshot();
        for (kind, n) in ops {
            match kind {
                0 => { let _: Vec<f64> = env.step_f64(&[0.0, 0.0], &[0.0]); }
                1 => counter.add_gradient_passes(n),
                _ => counter.add_rollouts(n),
            }
            let now = counter.snapshot();
            prop_assert!(now.dynamics_evals >= last.dynamics_evals);
            prop_assert!(now.gradient_passes >= last.gradient_passes);
            prop_assert!(now.rollouts >= last.rollouts);
            last = now;
        }
    }

    #[test]
    fn csv_and_json_round_trip(
        rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 0..20),
        seed in any::<u64>(),
    ) {
        let mut r = ExperimentResult::new("prop", &["a", "b", "c"]);
        for row in rows {
            r.push_row(row).unwrap();
        }
        r.set_meta("seed", seed);
        prop_assert_eq!(&ExperimentResult::from_csv(&r.to_csv()).unwrap(), &r);
        prop_assert_eq!(&ExperimentResult::from_json(&r.to_json()).unwrap(), &r);
    }

    #[test]
    fn rows_match_column_count(len in 0usize..6) {
        let mut r = ExperimentResult::new("prop", &["a", "b", "c"]);
        prop_assert_eq!(r.push_row(vec![0.0; len]).is_ok(), len == 3);
        prop_assert!(r.rows.iter().all(|row| row.len() == 3));
    }

    #[test]
    fn argument_parsing_never_panics(args in prop::collection::vec("[-a-z0-9=._ ]{0,12}", 0..6)) {
        let _ = parse_args(args);
    }

    #[test]
    fn disturbances_are_pure(seed in any::<u64>(), t in 0usize..10_000, dim in 1usize..8, sigma in 0.0f64..10.0) {
        let specs = [
            DisturbanceSpec::Gaussian { sigma, seed },
            DisturbanceSpec::Sinusoidal { amplitude: sigma, omega: 0.3, phase: 0.1 },
            DisturbanceSpec::Constant(sigma),
            DisturbanceSpec::Shock { inner: Box::new(DisturbanceSpec::Gaussian { sigma, seed }), start: 100, end: 200 },
        ];
        for spec in &specs {
            let a = disturbance_at(spec, t, dim);
            prop_assert_eq!(a.len(), dim);
            prop_assert_eq!(&a, &disturbance_at(spec, t, dim));
        }
    }

    #[test]
    fn adaptive_weights_form_a_floored_simplex(
        costs in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 3), 1..40),
        share in 0.0f64..0.5,
    ) {
        let experts: Vec<LinearController> = (0..3).map(|i| LinearController { k: Matrix::scalar(i as f64) }).collect();
        let mut ada = AdaptiveState::with_rates(experts, 1.0, share).unwrap();
        for c in &costs {
            ada.update_weights(c).unwrap();
            let w = ada.weights();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(w.iter().all(|&v| v >= share / 3.0 - 1e-15));
        }
    }

    #[test]
    fn gpc_stays_in_projection_ball(
        ws in prop::collection::vec(prop::collection::vec(-20.0f64..20.0, 2), 1..40),
        radius in 0.01f64..5.0,
    ) {
        let env = Lds::double_integrator();
        let mut gpc = GpcState::with_lqr(env.a.clone(), env.b.clone(), env.q.clone(), env.r.clone()).unwrap();
        gpc.radius = radius;
        let mut x = vec![0.0, 0.0];
        for w in &ws {
            let u = gpc.act(&x).unwrap();
            let next: Vec<f64> = env.step(&x, &u, w);
            gpc.update(&x, &u, &next).unwrap();
            prop_assert!(gpc.m_norm() <= radius * (1.0 + 1e-12));
            prop_assert!(gpc.history().count() <= 5);
            x = next;
        }
    }
}

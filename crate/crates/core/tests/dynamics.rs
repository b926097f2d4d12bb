//! Integrator and equations-of-motion checks against closed forms,
//! finite differences and symmetry.

use fishsim::dynamics::{derivative, derivative_driven, Launch, Mount, STATE_DIM};
use fishsim::harness::{detect_steady, run_launch, SteadyOptions};
use fishsim::params::{BodyState, TailState};
use fishsim::tail::{tail_energy, Stroke};
use fishsim::{load_params, simulate, step_rk4, FullState, RobotParams, SimConfig, TailCommand};
use proptest::prelude::*;

fn coasting_beta(p: &RobotParams) -> f64 {
    0.5 * p.fluid_density * p.cd_surge * p.frontal_area / p.surge_mass()
}

/// Surge speed after coasting from `u0` for `t_end` seconds at step `dt`.
fn coast(u0: f64, t_end: f64, dt: f64, p: &RobotParams) -> FullState {
    let mut s = FullState {
        body: BodyState { u: u0, ..BodyState::default() },
        ..FullState::default()
    };
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        s = step_rk4(&s, &TailCommand::rest(), dt, p).unwrap();
    }
    s
}

#[test]
fn coasting_matches_closed_form() {
    let p = RobotParams::default();
    let (u0, t) = (0.5, 5.0);
    let exact = u0 / (1.0 + coasting_beta(&p) * u0 * t);
    let s = coast(u0, t, 1e-3, &p);
    assert!(((s.body.u - exact) / exact).abs() < 1e-6, "{} vs {exact}", s.body.u);
    // Straight-line coasting: no sway, no turn, tail untouched.
    assert_eq!((s.body.v, s.body.r, s.body.yaw, s.body.y), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(s.tail, TailState::default());
    let x_exact = (1.0 + coasting_beta(&p) * u0 * t).ln() / coasting_beta(&p);
    assert!((s.body.x - x_exact).abs() < 1e-6);
}

#[test]
fn rk4_is_fourth_order() {
    let p = RobotParams::default();
    // At 0.5 m/s the error at the largest allowed step is already at the
    // round-off floor, so the order is measured on a faster coast.
    let (u0, t) = (2.0, 5.0);
    let exact = u0 / (1.0 + coasting_beta(&p) * u0 * t);
    let err = |dt: f64| (coast(u0, t, dt, &p).body.u - exact).abs();
    let ratio = err(0.01) / err(0.005);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn zero_command_from_rest_stays_at_rest() {
    let cfg = SimConfig { max_duration: 2.0, ..SimConfig::default() };
    let log = simulate(&FullState::default(), &TailCommand::rest(), &cfg, &RobotParams::default()).unwrap();
    assert_eq!(log.samples.len(), 101);
    for s in &log.samples {
        assert_eq!((s.body, s.tail), (BodyState::default(), TailState::default()));
    }
}

#[test]
fn mirrored_launch_is_exact_mirror() {
    let p = RobotParams::default();
    let stroke = Stroke::from_command(&TailCommand::new(50.0, 2.5));
    let init = FullState {
        body: BodyState { x: 0.3, y: 0.1, yaw: 0.2, u: 0.4, v: -0.05, r: 0.3 },
        tail: TailState { plate_angle: 0.1, plate_rate: -0.5, hinge_angle: 0.05, hinge_rate: 1.0 },
        t: 0.0,
    };
    let mut a = Launch::new(init, stroke, Mount::Free, 5e-4, p).unwrap();
    let mut b = Launch::new(init.mirrored(), stroke.inverted(), Mount::Free, 5e-4, p).unwrap();
    for _ in 0..4000 {
        let sa = *a.step().unwrap();
        let sb = *b.step().unwrap();
        assert_eq!(sa.mirrored(), sb);
    }
}

#[test]
fn identical_inputs_give_identical_logs() {
    let cfg = SimConfig { max_duration: 5.0, ..SimConfig::default() };
    let p = RobotParams::default();
    let cmd = TailCommand::new(60.0, 3.0);
    let a = simulate(&FullState::default(), &cmd, &cfg, &p).unwrap();
    let b = simulate(&FullState::default(), &cmd, &cfg, &p).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn halving_dt_barely_moves_the_endpoint() {
    let p = RobotParams::default();
    let cmd = TailCommand::new(40.0, 2.0);
    let run = |dt: f64| {
        let cfg = SimConfig { dt, max_duration: 10.0, ..SimConfig::default() };
        let log = simulate(&FullState::default(), &cmd, &cfg, &p).unwrap();
        let end = log.samples.last().unwrap().body;
        assert!(log.is_complete());
        (end.x, end.y)
    };
    let (a, b) = (run(5e-4), run(2.5e-4));
    let shift = (a.0 - b.0).hypot(a.1 - b.1);
    assert!(shift < 1e-5, "shift {shift} m");
}

#[test]
fn heading_holds_while_swimming() {
    let p = RobotParams::default();
    let cmd = TailCommand::new(40.0, 2.0);
    let log = run_launch(&cmd, &SimConfig::default(), &p).unwrap();
    let seg = detect_steady(&log, &SteadyOptions::default()).unwrap();
    let t_end = seg.t_start + 20.0 * cmd.period().unwrap();
    assert!(t_end <= log.samples.last().unwrap().t);
    let window: Vec<f64> = log
        .samples
        .iter()
        .filter(|s| s.t >= seg.t_start && s.t < t_end)
        .map(|s| s.body.yaw)
        .collect();
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    assert!(mean.abs() < 2f64.to_radians(), "mean heading {mean} rad");
}

#[test]
fn digest_tracks_every_value() {
    let p = RobotParams::default();
    assert_eq!(p.digest(), RobotParams::default().digest());
    assert_eq!(p.digest(), load_params(&p.to_config_text()).unwrap().digest());
    for (key, value) in p.entries() {
        let changed = load_params(&format!("{key}={}", value * 1.001)).unwrap();
        assert_ne!(changed.digest(), p.digest(), "{key}");
    }
}

fn arb_state() -> impl Strategy<Value = FullState> {
    (
        (-1.0f64..1.0, -1.0f64..1.0, -3.0f64..3.0),
        (-1.0f64..1.0, -0.3f64..0.3, -2.0f64..2.0),
        (-0.8f64..0.8, -5.0f64..5.0, -0.5f64..0.5, -5.0f64..5.0),
        0.0f64..2.0,
    )
        .prop_map(|((x, y, yaw), (u, v, r), (pa, pr, ha, hr), t)| FullState {
            body: BodyState { x, y, yaw, u, v, r },
            tail: TailState { plate_angle: pa, plate_rate: pr, hinge_angle: ha, hinge_rate: hr },
            t,
        })
}

fn arb_command() -> impl Strategy<Value = TailCommand> {
    (0.0f64..=80.0, 0.0f64..=7.0).prop_map(|(a, f)| TailCommand::new(a, f))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Central difference of a finely stepped trajectory reproduces the
    /// assembled derivative.
    #[test]
    fn derivative_matches_trajectory_slope(s in arb_state(), cmd in arb_command()) {
        let p = RobotParams::default();
        let h = 1e-8;
        let mut launch = Launch::new(s, Stroke::from_command(&cmd), Mount::Free, h, p).unwrap();
        let a = s;
        let mid = *launch.step().unwrap();
        let c = *launch.step().unwrap();
        let dm = derivative(&mid, &cmd, &p);
        let (va, vc) = (a.to_vector(), c.to_vector());
        for i in 0..STATE_DIM {
            let fd = (vc[i] - va[i]) / (2.0 * h);
            let scale = dm[i].abs().max(1.0);
            prop_assert!((fd - dm[i]).abs() <= 1e-4 * scale, "component {}: fd {} vs {}", i, fd, dm[i]);
        }
    }

    /// Clamped mount freezes the body rows and leaves the tail rows as in
    /// free swimming from rest.
    #[test]
    fn clamped_mount_freezes_body(s in arb_state(), cmd in arb_command()) {
        let p = RobotParams::default();
        let at_rest = FullState { body: BodyState::default(), ..s };
        let stroke = Stroke::from_command(&cmd);
        let clamped = derivative_driven(&at_rest, &stroke, Mount::Clamped, &p);
        let free = derivative_driven(&at_rest, &stroke, Mount::Free, &p);
        prop_assert_eq!(&clamped[..6], &[0.0; 6][..]);
        prop_assert_eq!(&clamped[6..], &free[6..]);
    }

    /// Unforced, from a neutral tail, the body plus tail mechanical energy
    /// only decays.
    #[test]
    fn unforced_energy_is_non_increasing(s in arb_state()) {
        let p = RobotParams::default();
        let mut launch = Launch::new(FullState { t: 0.0, tail: TailState::default(), ..s }, Stroke::from_command(&TailCommand::rest()), Mount::Free, 5e-4, p).unwrap();
        let energy = |st: &FullState| st.body_kinetic_energy(&p) + tail_energy(&st.tail, 0.0, &p);
        let mut prev = energy(launch.state());
        for _ in 0..2000 {
            let e = energy(launch.step().unwrap());
            prop_assert!(e <= prev * (1.0 + 1e-12) + 1e-15, "{} -> {}", prev, e);
            prev = e;
        }
    }
}

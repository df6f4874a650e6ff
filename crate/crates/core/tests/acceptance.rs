//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its `[PASS]`/`[FAIL]` line even when output capture is on; the
//! process exits non-zero if any criterion fails. Run with
//! `cargo test -p cdpr-core --test acceptance`.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use cdpr_core::actuation::{pulses_to_length, shaft_to_pulses, validate_limits, LimitKind, ShaftProfile};
use cdpr_core::dynamics::{energy, equilibrium_natural_lengths, integrate, SimParams, SimTrace, WinchProfile};
use cdpr_core::kinematics::{forward_kinematics_point, inverse_kinematics, static_tensions};
use cdpr_core::pipeline::{compile_maneuver, simulate_maneuver, validate_maneuver, Maneuver, ManeuverRequest};
use cdpr_core::planners::{
    pendulum_theta, plan_vertical_sinusoidal, solve_pendulum_amplitude, PendulumShape, SinusoidalProfile,
};
use cdpr_core::{default_rig, Config, MotorSpec, PayloadState, PayloadVariant, Pose, Rig, Vec3};
use common::{double_integrate, simulate_swing, theta_law};
use rand::{Rng, SeedableRng};

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { id, pass, detail }
}

fn main() {
    let criteria: [fn() -> Verdict; 7] = [
        c1_vertical_sinusoidal_profile,
        c2_end_to_end_vertical,
        c3_pendulum_law,
        c4_amplitude_solver,
        c5_physics_invariants,
        c6_kinematics_oracles,
        c7_pulse_compiler,
    ];
    let mut failed = 0;
    for (k, criterion) in criteria.iter().enumerate() {
        let v = std::panic::catch_unwind(criterion).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            let id = ["C1", "C2", "C3", "C4", "C5", "C6", "C7"][k];
            verdict(id, false, format!("panicked: {msg}"))
        });
        println!("[{}] {} {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn c1_vertical_sinusoidal_profile() -> Verdict {
    let clock = Instant::now();
    let (d, t_end) = (0.5, 1.0);
    let start = Vec3::new(0.0, 0.0, 0.3);
    let plan = plan_vertical_sinusoidal(d, t_end, start, 1e-3).unwrap();

    let acc = |s: f64| {
        let a = 4.0 * d / (t_end * t_end) * (1.0 - (4.0 * PI * s / t_end).cos());
        if s <= t_end / 2.0 {
            a
        } else {
            -a
        }
    };
    let (x_oracle, v_oracle) = double_integrate(acc, t_end, 20_000);
    let disp = plan.end().z - start.z;
    let v_end = plan.velocities.last().unwrap().z;
    let endpoint_err = (disp - d)
        .abs()
        .max(v_end.abs())
        .max((x_oracle - d).abs())
        .max(v_oracle.abs());

    let profile = SinusoidalProfile {
        distance: d,
        duration: t_end,
    };
    let pointwise = (0..plan.len())
        .map(|k| {
            let t = plan.time(k);
            (plan.accelerations[k].z - acc(t))
                .abs()
                .max((profile.acceleration(t) - acc(t)).abs())
        })
        .fold(0.0, f64::max);
    let elapsed = clock.elapsed().as_secs_f64();
    verdict(
        "C1",
        endpoint_err < 1e-9 && pointwise < 1e-12 && elapsed < 1.0,
        format!("sinusoidal lift: endpoint error {endpoint_err:.2e} (<1e-9), pointwise {pointwise:.2e} (<1e-12), {elapsed:.3} s (<1 s)"),
    )
}

fn c2_end_to_end_vertical() -> Verdict {
    let clock = Instant::now();
    let cfg = Config::default_for(PayloadVariant::A);
    assert_eq!(cfg.sim.dt, 1e-4);
    assert_eq!(cfg.rig.payload.mass, 1.5);
    assert_eq!(cfg.rig.cable.stiffness, 7e4);
    let smooth = simulate_maneuver(&ManeuverRequest::new(Maneuver::VerticalSinusoidal), &cfg).unwrap();
    let elapsed = clock.elapsed().as_secs_f64();
    let constant = simulate_maneuver(&ManeuverRequest::new(Maneuver::VerticalConstant), &cfg).unwrap();

    let s = &smooth.summary;
    let height_err = (s.final_position[2] - s.target[2]).abs();
    let ratio = constant.summary.residual_oscillation / s.residual_oscillation;
    verdict(
        "C2",
        height_err < 5e-3 && s.residual_oscillation < 5e-3 && ratio >= 5.0 && elapsed < 30.0,
        format!(
            "vertical lift (payload A): height error {height_err:.2e} m, residual {:.2e} m (<5e-3), constant/smooth residual {ratio:.1}x (>=5), {elapsed:.2} s (<30 s)",
            s.residual_oscillation
        ),
    )
}

fn c3_pendulum_law() -> Verdict {
    let (l, g, t_end, d) = (0.129, 9.8, 2.0, 0.3);
    let p = solve_pendulum_amplitude(d, t_end, l, g).unwrap();
    let shape = PendulumShape {
        amplitude: p,
        duration: t_end,
    };
    let analytic = pendulum_theta(t_end, p, t_end)
        .unwrap()
        .abs()
        .max(shape.theta_dot(t_end).abs());

    let planned = |t: f64| {
        if t <= t_end {
            shape.anchor_motion(t, l, g).2
        } else {
            0.0
        }
    };
    let smooth = simulate_swing(planned, &[], l, g, 2.0 * t_end, 1e-4);
    let (th, w) = smooth.at(t_end);
    let (th_deg, w_deg) = (th.abs().to_degrees(), w.abs().to_degrees());

    let constant = simulate_swing(
        |_| 0.0,
        &[(0.0, d / t_end), (t_end, -d / t_end)],
        l,
        g,
        2.0 * t_end,
        1e-4,
    );
    let ratio = constant.max_abs_theta_after(t_end) / smooth.max_abs_theta_after(t_end);
    verdict(
        "C3",
        analytic < 1e-15 && th_deg < 0.1 && w_deg < 0.1 && ratio >= 5.0,
        format!(
            "pendulum law: |θ(T)|,|θ̇(T)| analytic {analytic:.1e}; nonlinear end |θ| {th_deg:.2e}° |θ̇| {w_deg:.2e}°/s (<0.1); constant/shaped swing {ratio:.0}x (>=5)"
        ),
    )
}

fn c4_amplitude_solver() -> Verdict {
    let g = 9.8;
    let expected = 0.2 * PI / g;
    let p = solve_pendulum_amplitude(0.2, 2.0, 0.0, g).unwrap();
    let limit_err = (p - expected).abs();

    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let mut quad_err = 0.0f64;
    for _ in 0..200 {
        let d = rng.gen_range(-1.0..1.0);
        let l = rng.gen_range(0.0..2.0);
        let t_end = rng.gen_range(0.5..5.0);
        let p = solve_pendulum_amplitude(d, t_end, l, g).unwrap();
        let w = TAU / t_end;
        let theta_ddot = |s: f64| 2.0 * p * w * w * (w * s).sin() - 4.0 * p * w * w * (2.0 * w * s).sin();
        let (x, v) = double_integrate(|s| -l * theta_ddot(s) - g * theta_law(s, p, t_end), t_end, 20_000);
        quad_err = quad_err.max((x - d).abs()).max(v.abs());
    }
    verdict(
        "C4",
        limit_err < 1e-9 && quad_err < 1e-9,
        format!(
            "amplitude solver: l→0, 0.2 m, 2 s gives p = {p:.9} vs 0.2π/g = {expected:.9} (|Δ| {limit_err:.2e}, <1e-9); quadrature vs closed form {quad_err:.2e} (<1e-9)"
        ),
    )
}

fn drift(rig: &Rig, trace: &SimTrace) -> f64 {
    let e = |k: usize| {
        let s = &trace.samples[k];
        energy(
            &s.state,
            &rig.geometry,
            &rig.payload,
            &rig.cable,
            &s.natural_lengths,
            9.8,
        )
        .unwrap()
    };
    let e0 = e(0);
    (0..trace.samples.len())
        .map(|k| ((e(k) - e0) / e0).abs())
        .fold(0.0, f64::max)
}

fn c5_physics_invariants() -> Verdict {
    let rig = default_rig(PayloadVariant::A);
    let pose = Pose::level(rig.geometry.home_position(0.6));
    let natural = equilibrium_natural_lengths(&pose, &rig.geometry, &rig.payload, &rig.cable, 9.8).unwrap();
    let winch = WinchProfile::constant(natural, 2.0, 0.01).unwrap();
    let mut state = PayloadState::at_rest(Pose::level(pose.position + Vec3::new(2e-5, -1e-5, 2e-5)));
    state.velocity = Vec3::new(1e-3, 0.0, -1e-3);
    state.angular_velocity = Vec3::new(0.03, -0.02, 0.2);
    let run = |dt: f64| {
        integrate(
            &state,
            &winch,
            &rig.geometry,
            &rig.payload,
            &rig.cable,
            &SimParams::new(dt, 2.0),
        )
        .unwrap()
    };

    let fine = run(1e-4);
    let drift_fine = drift(&rig, &fine);
    let (coarse, half) = (run(8e-4), run(4e-4));
    let energy_ratio = drift(&rig, &coarse) / drift(&rig, &half);

    // state convergence against a dt = 2.5e-5 reference at the shared end time
    let reference = run(2.5e-5).last().unwrap().state.position;
    let state_ratio = (coarse.last().unwrap().state.position - reference).norm()
        / (half.last().unwrap().state.position - reference).norm();

    let all: Vec<&SimTrace> = vec![&fine, &coarse, &half];
    let min_tension = all
        .iter()
        .flat_map(|t| &t.samples)
        .flat_map(|s| s.tensions)
        .fold(f64::INFINITY, f64::min);
    let quat = all
        .iter()
        .flat_map(|t| &t.samples)
        .map(|s| (s.state.orientation.quaternion().norm() - 1.0).abs())
        .fold(0.0, f64::max);

    // the stated "~16x" is read as "fourth order or better": RK4 energy error on
    // an undamped oscillator decays as dt⁵ (32x), positions as dt⁴ (16x)
    let order_ok = energy_ratio >= 14.0 && (12.0..=20.0).contains(&state_ratio);
    verdict(
        "C5",
        drift_fine < 1e-4 && order_ok && min_tension >= 0.0 && quat < 1e-9,
        format!(
            "invariants: energy drift {drift_fine:.2e} (<1e-4), halving dt shrinks energy drift {energy_ratio:.1}x and state error {state_ratio:.1}x (~16), min tension {min_tension:.3} N, |q|-1 {quat:.1e}"
        ),
    )
}

fn c6_kinematics_oracles() -> Verdict {
    let rig = default_rig(PayloadVariant::B);
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let mut fk_err = 0.0f64;
    let n = 2000;
    for _ in 0..n {
        let r = rng.gen_range(0.0..0.2);
        let a = rng.gen_range(0.0..TAU);
        let p = Vec3::new(r * a.cos(), r * a.sin(), rng.gen_range(0.1..0.9));
        let l = inverse_kinematics(&Pose::level(p), &rig.geometry, &rig.payload).unwrap();
        let x = forward_kinematics_point(l, &rig.geometry, rig.geometry.home_position(0.5)).unwrap();
        fk_err = fk_err.max((x - p).norm());
    }

    let mut t_err = 0.0f64;
    for depth in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let pose = Pose::level(rig.geometry.home_position(depth));
        let st = static_tensions(&pose, &rig.geometry, &rig.payload, 9.8).unwrap();
        let cos_alpha = depth / (0.45f64 * 0.45 + depth * depth).sqrt();
        let closed = 2.7 * 9.8 / 3.0 / cos_alpha;
        t_err = st.tensions.iter().map(|t| (t - closed).abs()).fold(t_err, f64::max);
    }
    verdict(
        "C6",
        fk_err < 1e-9 && t_err < 1e-9,
        format!("kinematics: FK∘IK over {n} poses {fk_err:.2e} m (<1e-9); symmetric tensions {t_err:.2e} N (<1e-9)"),
    )
}

fn c7_pulse_compiler() -> Verdict {
    let mut roundtrip = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for m in Maneuver::ALL {
        let cfg = Config::default_for(m.default_variant());
        let c = compile_maneuver(&ManeuverRequest::new(m), &cfg).unwrap();
        let r = cfg.rig.geometry.drum_radius;
        let per_step = r * c.schedule.step_angle();
        let recon = pulses_to_length(&c.schedule, r, c.winch.natural_lengths[0]);
        for (k, l) in c.winch.natural_lengths.iter().enumerate() {
            let t = k as f64 * c.winch.sample_period;
            for i in 0..3 {
                let err = (recon.at(i, t) - l[i]).abs();
                roundtrip = roundtrip.max(err / per_step);
            }
        }
        worst_margin = worst_margin.min(per_step);
    }

    let mut smooth_ok = true;
    for m in [Maneuver::VerticalSinusoidal, Maneuver::HorizontalPendulum] {
        let cfg = Config::default_for(m.default_variant());
        let (report, _, _) = validate_maneuver(&ManeuverRequest::new(m), &cfg).unwrap();
        smooth_ok &= report.ok();
    }

    let motor = MotorSpec::new(3.0, 1200.0, 10_000).unwrap();
    let w = 1432.0 * TAU / 60.0;
    let shaft = ShaftProfile {
        sample_period: 1e-3,
        speeds: vec![[w, 0.0, 0.0]; 101],
    };
    let schedule = shaft_to_pulses(&shaft, motor.ppr, 1e-3).unwrap();
    let flagged = validate_limits(&schedule, &shaft, None, &motor, 0.02).has(LimitKind::Speed);

    verdict(
        "C7",
        roundtrip <= 1.0 && smooth_ok && flagged,
        format!(
            "pulse compiler: worst roundtrip {roundtrip:.3} steps (<=1, step {worst_margin:.2e} m); smooth maneuvers within limits: {smooth_ok}; 1432 RPM flagged: {flagged}"
        ),
    )
}

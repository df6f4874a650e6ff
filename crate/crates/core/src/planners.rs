//! Open-loop rest-to-rest maneuver laws and their conversion to winch
//! profiles.
//!
//! Two maneuvers are covered, each with a discontinuous and a smooth law:
//!
//! * vertical lift of the payload centre: constant speed, or the
//!   `1 - cos` acceleration pulse mirrored over the second half;
//! * horizontal transfer of the cable anchor point: constant speed, or the
//!   pendulum-shaped trajectory that brings the swing angle back to rest.
//!
//! For the pendulum law the suspension point obeys the linearized swing
//! equation `ẍ = -l·θ̈ - g·θ`, with the swing angle prescribed as
//!
//! ```text
//! θ(t) = -2p·sin(2πt/T) + p·sin(4πt/T)
//! ```
//!
//! Integrating twice from rest gives `x(T) = 3·g·p·T² / (4π)`. The `l·θ̈`
//! term shapes the path but integrates to `l·(θ̇(T) - θ̇(0)) = 0` at the end,
//! so the reachable displacement does not depend on `l`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::dynamics::WinchProfile;
use crate::error::{Error, Result};
use crate::kinematics::{inverse_kinematics, static_tensions};
use crate::types::{ensure_finite, ensure_positive, CableSpec, PayloadSpec, Pose, RobotGeometry, Vec3};

pub const DEFAULT_SAMPLE_PERIOD: f64 = 1.0e-3;

/// Which point of the payload a plan prescribes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferencePoint {
    PayloadCentre,
    AnchorPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub sample_period: f64,
    pub reference: ReferencePoint,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub accelerations: Vec<Vec3>,
}

pub const PLAN_CSV_HEADER: &str = "t,x,y,z,vx,vy,vz,ax,ay,az";

impl MotionPlan {
    fn sampled<F>(duration: f64, sample_period: f64, reference: ReferencePoint, f: F) -> Result<Self>
    where
        F: Fn(f64) -> (Vec3, Vec3, Vec3),
    {
        ensure_positive("duration", duration)?;
        ensure_positive("sample period", sample_period)?;
        let n = ((duration / sample_period).round() as usize).max(1);
        let dt = duration / n as f64;
        let mut plan = MotionPlan {
            sample_period: dt,
            reference,
            positions: Vec::with_capacity(n + 1),
            velocities: Vec::with_capacity(n + 1),
            accelerations: Vec::with_capacity(n + 1),
        };
        for k in 0..=n {
            let t = if k == n { duration } else { k as f64 * dt };
            let (p, v, a) = f(t);
            plan.positions.push(p);
            plan.velocities.push(v);
            plan.accelerations.push(a);
        }
        Ok(plan)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.len().saturating_sub(1)) as f64 * self.sample_period
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.sample_period
    }

    pub fn start(&self) -> Vec3 {
        self.positions[0]
    }

    pub fn end(&self) -> Vec3 {
        *self.positions.last().expect("plans are never empty")
    }

    /// Appends `extra` seconds at rest at the final position.
    pub fn with_hold(mut self, extra: f64) -> Self {
        let n = (extra / self.sample_period).round() as usize;
        let end = self.end();
        for _ in 0..n {
            self.positions.push(end);
            self.velocities.push(Vec3::zeros());
            self.accelerations.push(Vec3::zeros());
        }
        self
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{PLAN_CSV_HEADER}")?;
        for k in 0..self.len() {
            let (p, v, a) = (&self.positions[k], &self.velocities[k], &self.accelerations[k]);
            crate::io::write_row(&mut out, &[self.time(k), p.x, p.y, p.z, v.x, v.y, v.z, a.x, a.y, a.z])?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::save_with(path.as_ref(), |w| self.write_csv(w))
    }
}

/// Constant-speed ramp. Velocity jumps at both ends; the impulsive
/// accelerations there are not represented in the samples.
fn constant_speed(
    distance: f64,
    duration: f64,
    start: Vec3,
    direction: Vec3,
    sample_period: f64,
    reference: ReferencePoint,
) -> Result<MotionPlan> {
    ensure_finite("distance", distance)?;
    let speed = distance / duration;
    MotionPlan::sampled(duration, sample_period, reference, |t| {
        let v = if t > 0.0 && t < duration { speed } else { 0.0 };
        (start + direction * (speed * t), direction * v, Vec3::zeros())
    })
}

pub fn plan_vertical_constant(distance: f64, duration: f64, start: Vec3, sample_period: f64) -> Result<MotionPlan> {
    constant_speed(
        distance,
        duration,
        start,
        Vec3::z(),
        sample_period,
        ReferencePoint::PayloadCentre,
    )
}

/// Rest-to-rest profile whose acceleration is `A·(1 - cos(4πt/T))` over the
/// first half and its negative over the second, with `A = 4D/T²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidalProfile {
    pub distance: f64,
    pub duration: f64,
}

impl SinusoidalProfile {
    pub fn peak_scale(&self) -> f64 {
        4.0 * self.distance / (self.duration * self.duration)
    }

    fn omega(&self) -> f64 {
        4.0 * PI / self.duration
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        let a = self.peak_scale() * (1.0 - (self.omega() * t).cos());
        if t <= 0.5 * self.duration {
            a
        } else {
            -a
        }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let (a, w, big_t) = (self.peak_scale(), self.omega(), self.duration);
        if t <= 0.5 * big_t {
            a * (t - (w * t).sin() / w)
        } else {
            a * (big_t - t) + a * (w * t).sin() / w
        }
    }

    pub fn position(&self, t: f64) -> f64 {
        let first_half = |s: f64| {
            let (a, w) = (self.peak_scale(), self.omega());
            a * (0.5 * s * s + ((w * s).cos() - 1.0) / (w * w))
        };
        if t <= 0.5 * self.duration {
            first_half(t)
        } else {
            self.distance - first_half(self.duration - t)
        }
    }
}

pub fn plan_vertical_sinusoidal(distance: f64, duration: f64, start: Vec3, sample_period: f64) -> Result<MotionPlan> {
    ensure_finite("distance", distance)?;
    let profile = SinusoidalProfile { distance, duration };
    let up = Vec3::z();
    MotionPlan::sampled(duration, sample_period, ReferencePoint::PayloadCentre, |t| {
        (
            start + up * profile.position(t),
            up * profile.velocity(t),
            up * profile.acceleration(t),
        )
    })
}

fn check_horizontal(direction: &Vec3) -> Result<()> {
    if direction.iter().any(|c| !c.is_finite()) || direction.z.abs() > 1e-9 || (direction.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a horizontal unit vector, got ({}, {}, {})",
            direction.x, direction.y, direction.z
        )));
    }
    Ok(())
}

pub fn plan_horizontal_constant(
    distance: f64,
    duration: f64,
    start: Vec3,
    direction: Vec3,
    sample_period: f64,
) -> Result<MotionPlan> {
    check_horizontal(&direction)?;
    constant_speed(
        distance,
        duration,
        start,
        direction,
        sample_period,
        ReferencePoint::AnchorPoint,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub mass: f64,
    /// Distance from the anchor point to the centre of mass, m.
    pub length: f64,
    pub gravity: f64,
}

impl PendulumParams {
    pub fn new(mass: f64, length: f64, gravity: f64) -> Result<Self> {
        ensure_positive("pendulum mass", mass)?;
        ensure_positive("pendulum length", length)?;
        ensure_positive("gravity", gravity)?;
        Ok(Self { mass, length, gravity })
    }

    /// 2.7 kg payload hanging 12.9 cm below its anchor point.
    pub fn rig_default() -> Self {
        Self {
            mass: 2.7,
            length: 0.129,
            gravity: crate::types::GRAVITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeMode {
    /// Amplitude solved so the anchor point travels the requested distance.
    #[default]
    Solved,
    /// Fixed amplitude `p = 0.2π/g`; the distance argument is ignored and the
    /// travel becomes `3·g·p·T²/(4π)` (0.6 m for `T = 2 s`).
    Fixed,
}

pub fn fixed_amplitude(gravity: f64) -> f64 {
    0.2 * PI / gravity
}

/// Prescribed swing angle and its derivatives and integrals, time-scaled
/// onto `[0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumShape {
    pub amplitude: f64,
    pub duration: f64,
}

impl PendulumShape {
    fn w1(&self) -> f64 {
        2.0 * PI / self.duration
    }

    fn w2(&self) -> f64 {
        4.0 * PI / self.duration
    }

    pub fn theta(&self, t: f64) -> f64 {
        let p = self.amplitude;
        -2.0 * p * (self.w1() * t).sin() + p * (self.w2() * t).sin()
    }

    pub fn theta_dot(&self, t: f64) -> f64 {
        let (p, w1, w2) = (self.amplitude, self.w1(), self.w2());
        -2.0 * p * w1 * (w1 * t).cos() + p * w2 * (w2 * t).cos()
    }

    pub fn theta_ddot(&self, t: f64) -> f64 {
        let (p, w1, w2) = (self.amplitude, self.w1(), self.w2());
        2.0 * p * w1 * w1 * (w1 * t).sin() - p * w2 * w2 * (w2 * t).sin()
    }

    /// `∫₀ᵗ θ`
    pub fn theta_integral(&self, t: f64) -> f64 {
        let (p, w1, w2) = (self.amplitude, self.w1(), self.w2());
        -2.0 * p * (1.0 - (w1 * t).cos()) / w1 + p * (1.0 - (w2 * t).cos()) / w2
    }

    /// `∫₀ᵗ (t - s)·θ(s) ds`
    pub fn theta_double_integral(&self, t: f64) -> f64 {
        let (p, w1, w2) = (self.amplitude, self.w1(), self.w2());
        -2.0 * p * (t / w1 - (w1 * t).sin() / (w1 * w1)) + p * (t / w2 - (w2 * t).sin() / (w2 * w2))
    }

    /// Anchor-point displacement, velocity and acceleration from the
    /// linearized swing equation, starting at rest.
    pub fn anchor_motion(&self, t: f64, length: f64, gravity: f64) -> (f64, f64, f64) {
        let x = -length * self.theta(t) - gravity * self.theta_double_integral(t);
        let v = -length * self.theta_dot(t) - gravity * self.theta_integral(t);
        let a = -length * self.theta_ddot(t) - gravity * self.theta(t);
        (x, v, a)
    }
}

/// Swing angle of the anti-sway law at time `t ∈ [0, duration]`.
pub fn pendulum_theta(t: f64, amplitude: f64, duration: f64) -> Result<f64> {
    ensure_positive("duration", duration)?;
    let slack = 1e-12 * duration;
    if !(t >= -slack && t <= duration + slack) {
        return Err(Error::InvalidArgument(format!("t = {t} is outside [0, {duration}]")));
    }
    Ok(PendulumShape { amplitude, duration }.theta(t))
}

/// Amplitude `p` for which the anchor point travels `distance` in `duration`.
///
/// Closed form `p = 4π·D / (3·g·T²)`. `length` only validates; the endpoint
/// does not depend on it (see module docs).
pub fn solve_pendulum_amplitude(distance: f64, duration: f64, length: f64, gravity: f64) -> Result<f64> {
    ensure_finite("distance", distance)?;
    ensure_positive("duration", duration)?;
    ensure_finite("pendulum length", length)?;
    if length < 0.0 {
        return Err(Error::InvalidArgument("pendulum length must be non-negative".into()));
    }
    ensure_positive("gravity", gravity)?;
    Ok(4.0 * PI * distance / (3.0 * gravity * duration * duration))
}

/// Anchor displacement reached at `duration` for a given amplitude.
pub fn pendulum_travel(amplitude: f64, duration: f64, gravity: f64) -> f64 {
    3.0 * gravity * amplitude * duration * duration / (4.0 * PI)
}

pub fn plan_horizontal_pendulum(
    distance: f64,
    duration: f64,
    params: &PendulumParams,
    start: Vec3,
    direction: Vec3,
    mode: AmplitudeMode,
    sample_period: f64,
) -> Result<MotionPlan> {
    check_horizontal(&direction)?;
    let amplitude = match mode {
        AmplitudeMode::Solved => solve_pendulum_amplitude(distance, duration, params.length, params.gravity)?,
        AmplitudeMode::Fixed => fixed_amplitude(params.gravity),
    };
    let shape = PendulumShape { amplitude, duration };
    MotionPlan::sampled(duration, sample_period, ReferencePoint::AnchorPoint, |t| {
        let (x, v, a) = shape.anchor_motion(t, params.length, params.gravity);
        (start + direction * x, direction * v, direction * a)
    })
}

/// Cable pretension carried through a maneuver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Pretension {
    /// Static equilibrium tensions at the plan's first pose.
    #[default]
    StaticAtStart,
    Uniform(f64),
    PerCable([f64; 3]),
}

/// Natural-length commands that track the plan while each cable keeps its
/// pretension: `l_N = l(pose) - T/k`, payload held level.
pub fn plan_to_winch(
    plan: &MotionPlan,
    geom: &RobotGeometry,
    payload: &PayloadSpec,
    cable: &CableSpec,
    pretension: Pretension,
    gravity: f64,
) -> Result<WinchProfile> {
    let tensions = match pretension {
        Pretension::StaticAtStart => {
            let st = static_tensions(&Pose::level(plan.start()), geom, payload, gravity).map_err(|e| e.at(0.0))?;
            if !st.feasible {
                return Err(Error::Workspace(format!(
                    "start pose is statically infeasible, tensions {:?}",
                    st.tensions
                ))
                .at(0.0));
            }
            st.tensions
        }
        Pretension::Uniform(t) => [t; 3],
        Pretension::PerCable(t) => t,
    };
    for t in tensions {
        ensure_finite("pretension", t)?;
    }
    let stretch = tensions.map(|t| t / cable.stiffness);
    let mut lengths = Vec::with_capacity(plan.len());
    for (k, p) in plan.positions.iter().enumerate() {
        let l = inverse_kinematics(&Pose::level(*p), geom, payload).map_err(|e| e.at(plan.time(k)))?;
        lengths.push(std::array::from_fn(|i| l[i] - stretch[i]));
    }
    WinchProfile::new(plan.sample_period, lengths)
}

//! End-to-end orchestration: maneuver → plan → winch → simulation / pulses.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::actuation::{shaft_to_pulses, validate_limits, winch_to_shaft, LimitReport, PulseSchedule, ShaftProfile};
use crate::config::Config;
use crate::dynamics::{integrate, residual_oscillation, SimParams, SimTrace, WinchProfile};
use crate::error::{Error, Result};
use crate::planners::{
    plan_horizontal_constant, plan_horizontal_pendulum, plan_to_winch, plan_vertical_constant,
    plan_vertical_sinusoidal, AmplitudeMode, MotionPlan, PendulumParams, Pretension, DEFAULT_SAMPLE_PERIOD,
};
use crate::types::{PayloadSpec, PayloadState, PayloadVariant, Pose, Vec3};

/// Anchor-point to centre-of-mass distance of the point-attached payload.
pub const PENDULUM_LENGTH: f64 = 0.129;
/// Rest time simulated after the maneuver to measure residual motion.
pub const DEFAULT_SETTLE: f64 = 1.0;
/// Vertical maneuvers start this far below the anchor plane.
pub const VERTICAL_START_DEPTH: f64 = 0.7;
/// Horizontal maneuvers run in a plane this far below the anchor plane.
pub const HORIZONTAL_DEPTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Maneuver {
    VerticalConstant,
    VerticalSinusoidal,
    HorizontalConstant,
    HorizontalPendulum,
}

impl Maneuver {
    pub const ALL: [Maneuver; 4] = [
        Maneuver::VerticalConstant,
        Maneuver::VerticalSinusoidal,
        Maneuver::HorizontalConstant,
        Maneuver::HorizontalPendulum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Maneuver::VerticalConstant => "vertical-constant",
            Maneuver::VerticalSinusoidal => "vertical-sinusoidal",
            Maneuver::HorizontalConstant => "horizontal-constant",
            Maneuver::HorizontalPendulum => "horizontal-pendulum",
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Maneuver::VerticalConstant | Maneuver::VerticalSinusoidal)
    }

    pub fn is_smooth(self) -> bool {
        matches!(self, Maneuver::VerticalSinusoidal | Maneuver::HorizontalPendulum)
    }

    pub fn default_distance(self) -> f64 {
        if self.is_vertical() {
            0.5
        } else {
            0.3
        }
    }

    pub fn default_duration(self) -> f64 {
        if self.is_vertical() {
            1.0
        } else {
            2.0
        }
    }

    /// Payload used on the rig for this maneuver: A for lifts, B for transfers.
    pub fn default_variant(self) -> PayloadVariant {
        if self.is_vertical() {
            PayloadVariant::A
        } else {
            PayloadVariant::B
        }
    }
}

impl fmt::Display for Maneuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Maneuver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Maneuver::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown maneuver {s:?}; expected one of vertical-constant, vertical-sinusoidal, horizontal-constant, horizontal-pendulum"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverRequest {
    pub maneuver: Maneuver,
    pub distance: f64,
    pub duration: f64,
    pub pendulum_mode: AmplitudeMode,
    pub sample_period: f64,
    pub settle: f64,
}

impl ManeuverRequest {
    pub fn new(maneuver: Maneuver) -> Self {
        Self {
            maneuver,
            distance: maneuver.default_distance(),
            duration: maneuver.default_duration(),
            pendulum_mode: AmplitudeMode::Solved,
            sample_period: DEFAULT_SAMPLE_PERIOD,
            settle: DEFAULT_SETTLE,
        }
    }
}

pub fn start_position(config: &Config, maneuver: Maneuver) -> Vec3 {
    let depth = if maneuver.is_vertical() {
        VERTICAL_START_DEPTH
    } else {
        HORIZONTAL_DEPTH
    };
    config.rig.geometry.home_position(depth)
}

/// Horizontal maneuvers head toward proximal anchor 1.
pub fn horizontal_direction(config: &Config) -> Vec3 {
    let g = &config.rig.geometry;
    let mut d = g.proximal_anchors[0] - g.centroid();
    d.z = 0.0;
    d.normalize()
}

pub fn build_plan(req: &ManeuverRequest, config: &Config) -> Result<MotionPlan> {
    let start = start_position(config, req.maneuver);
    let sp = req.sample_period;
    match req.maneuver {
        Maneuver::VerticalConstant => plan_vertical_constant(req.distance, req.duration, start, sp),
        Maneuver::VerticalSinusoidal => plan_vertical_sinusoidal(req.distance, req.duration, start, sp),
        Maneuver::HorizontalConstant => {
            plan_horizontal_constant(req.distance, req.duration, start, horizontal_direction(config), sp)
        }
        Maneuver::HorizontalPendulum => {
            let params = PendulumParams::new(config.rig.payload.mass, PENDULUM_LENGTH, config.sim.gravity)?;
            plan_horizontal_pendulum(
                req.distance,
                req.duration,
                &params,
                start,
                horizontal_direction(config),
                req.pendulum_mode,
                sp,
            )
        }
    }
}

/// Plan extended by the settle window, converted to winch commands.
pub fn build_winch(req: &ManeuverRequest, config: &Config) -> Result<(MotionPlan, WinchProfile)> {
    let plan = build_plan(req, config)?;
    let held = plan.clone().with_hold(req.settle);
    let rig = &config.rig;
    let winch = plan_to_winch(
        &held,
        &rig.geometry,
        &rig.payload,
        &rig.cable,
        Pretension::StaticAtStart,
        config.sim.gravity,
    )?;
    Ok((plan, winch))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub maneuver: Maneuver,
    pub payload: PayloadVariant,
    pub distance: f64,
    pub duration: f64,
    pub target: [f64; 3],
    pub final_position: [f64; 3],
    /// Distance of the last simulated position from the plan's end point.
    pub final_position_error: f64,
    /// Over the settle window after the maneuver.
    pub residual_oscillation: f64,
    pub peak_tension: f64,
    pub peak_shaft_speed_rpm: f64,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "maneuver              {} (payload {})", self.maneuver, self.payload)?;
        writeln!(f, "distance / duration   {} m / {} s", self.distance, self.duration)?;
        writeln!(f, "final position error  {:.6e} m", self.final_position_error)?;
        writeln!(f, "residual oscillation  {:.6e} m", self.residual_oscillation)?;
        writeln!(f, "peak tension          {:.4} N", self.peak_tension)?;
        writeln!(f, "peak shaft speed      {:.2} RPM", self.peak_shaft_speed_rpm)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub plan: MotionPlan,
    pub winch: WinchProfile,
    pub shaft: ShaftProfile,
    pub trace: SimTrace,
    pub summary: Summary,
}

pub fn simulate_maneuver(req: &ManeuverRequest, config: &Config) -> Result<SimulationOutcome> {
    let (plan, winch) = build_winch(req, config)?;
    let rig = &config.rig;
    let state0 = PayloadState::at_rest(Pose::level(plan.start()));
    let params = SimParams::from_settings(&config.sim, winch.duration());
    let trace = integrate(&state0, &winch, &rig.geometry, &rig.payload, &rig.cable, &params)?;
    let shaft = winch_to_shaft(&winch, rig.geometry.drum_radius)?;

    let last = trace.last().expect("trace has the initial sample");
    let target = plan.end();
    let final_position = last.state.position;
    let summary = Summary {
        maneuver: req.maneuver,
        payload: rig.payload.variant,
        distance: req.distance,
        duration: req.duration,
        target: target.into(),
        final_position: final_position.into(),
        final_position_error: (final_position - target).norm(),
        residual_oscillation: residual_oscillation(&trace, plan.duration())?,
        peak_tension: trace.peak_tension(),
        peak_shaft_speed_rpm: shaft.peak_speed() * 60.0 / std::f64::consts::TAU,
    };
    Ok(SimulationOutcome {
        plan,
        winch,
        shaft,
        trace,
        summary,
    })
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub plan: MotionPlan,
    pub winch: WinchProfile,
    pub shaft: ShaftProfile,
    pub schedule: PulseSchedule,
}

pub fn compile_maneuver(req: &ManeuverRequest, config: &Config) -> Result<Compiled> {
    let (plan, winch) = build_winch(req, config)?;
    let shaft = winch_to_shaft(&winch, config.rig.geometry.drum_radius)?;
    let schedule = shaft_to_pulses(&shaft, config.rig.motor.ppr, config.sim.control_period)?;
    Ok(Compiled {
        plan,
        winch,
        shaft,
        schedule,
    })
}

/// Compiles and simulates the maneuver, then checks the motor rating.
pub fn validate_maneuver(req: &ManeuverRequest, config: &Config) -> Result<(LimitReport, Compiled, SimulationOutcome)> {
    let compiled = compile_maneuver(req, config)?;
    let outcome = simulate_maneuver(req, config)?;
    let rig = &config.rig;
    let report = validate_limits(
        &compiled.schedule,
        &compiled.shaft,
        Some(&outcome.trace),
        &rig.motor,
        rig.geometry.drum_radius,
    );
    Ok((report, compiled, outcome))
}

/// Config for a maneuver: the given one, or the default rig carrying the
/// maneuver's payload. A payload override swaps in that variant's default
/// payload when it differs from the configured one.
pub fn config_for(base: Option<&Config>, maneuver: Maneuver, payload: Option<PayloadVariant>) -> Config {
    match base {
        Some(cfg) => {
            let mut cfg = cfg.clone();
            if let Some(v) = payload {
                if cfg.rig.payload.variant != v {
                    cfg.rig.payload = PayloadSpec::default_for(v);
                }
            }
            cfg
        }
        None => Config::default_for(payload.unwrap_or(maneuver.default_variant())),
    }
}

/// Runs all four maneuvers concurrently.
pub fn run_demo(base: Option<&Config>) -> Result<Vec<SimulationOutcome>> {
    let results: Vec<Result<SimulationOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = Maneuver::ALL
            .into_iter()
            .map(|m| {
                s.spawn(move || {
                    let cfg = config_for(base, m, None);
                    simulate_maneuver(&ManeuverRequest::new(m), &cfg)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("demo worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

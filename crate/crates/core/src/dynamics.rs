//! Rigid payload suspended by three unilateral elastic cables.
//!
//! ```text
//! m·p̈ = -Σ s_i·T_i - (0, 0, m·g) - c·ṗ
//! J·ω̇ = -ω × J·ω + Rᵀ·(-Σ (b_i × s_i)·T_i)
//! T_i = k·(l_i - l_Ni)  if l_i ≥ l_Ni, else 0
//! ```
//!
//! `ω` is expressed in the body frame, `b_i` and `s_i` in the world frame.
//! Integration is fixed-step classical RK4 with the quaternion renormalized
//! after every step. Slack/taut switching is evaluated inside every stage,
//! without event location.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Quaternion, SVector, UnitQuaternion};

use crate::error::{Error, Result};
use crate::kinematics::{cable_geometry, gravity_load};
use crate::types::{ensure_finite, ensure_positive, CableSpec, PayloadSpec, PayloadState, Pose, RobotGeometry, Vec3};

/// Unilateral spring law of a single cable.
pub fn cable_tension(length: f64, natural_length: f64, stiffness: f64) -> f64 {
    if length >= natural_length {
        stiffness * (length - natural_length)
    } else {
        0.0
    }
}

/// Natural lengths sampled on a uniform grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct WinchProfile {
    pub sample_period: f64,
    pub natural_lengths: Vec<[f64; 3]>,
}

impl WinchProfile {
    pub fn new(sample_period: f64, natural_lengths: Vec<[f64; 3]>) -> Result<Self> {
        ensure_positive("winch sample period", sample_period)?;
        if natural_lengths.is_empty() {
            return Err(Error::InvalidArgument("winch profile has no samples".into()));
        }
        for (k, l) in natural_lengths.iter().enumerate() {
            if l.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidArgument(format!(
                    "winch sample {k} has a non-positive natural length: {l:?}"
                )));
            }
        }
        Ok(Self {
            sample_period,
            natural_lengths,
        })
    }

    pub fn constant(lengths: [f64; 3], duration: f64, sample_period: f64) -> Result<Self> {
        let n = (duration / sample_period).ceil() as usize + 1;
        Self::new(sample_period, vec![lengths; n])
    }

    pub fn duration(&self) -> f64 {
        (self.natural_lengths.len() - 1) as f64 * self.sample_period
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.natural_lengths.len()).map(|k| k as f64 * self.sample_period)
    }

    /// Interpolated natural lengths; held constant outside the sampled range.
    pub fn at(&self, t: f64) -> [f64; 3] {
        let last = self.natural_lengths.len() - 1;
        let s = t / self.sample_period;
        if s <= 0.0 {
            return self.natural_lengths[0];
        }
        if s >= last as f64 {
            return self.natural_lengths[last];
        }
        let k = s.floor() as usize;
        let frac = s - k as f64;
        let (a, b) = (self.natural_lengths[k], self.natural_lengths[k + 1]);
        std::array::from_fn(|i| a[i] + frac * (b[i] - a[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    pub duration: f64,
    /// N·s/m on payload translational velocity.
    pub damping: f64,
    pub gravity: f64,
    /// Record every n-th step (the final step is always recorded).
    pub decimation: usize,
}

impl SimParams {
    pub fn new(dt: f64, duration: f64) -> Self {
        Self {
            dt,
            duration,
            damping: 0.0,
            gravity: crate::types::GRAVITY,
            decimation: 1,
        }
    }

    pub fn from_settings(settings: &crate::config::SimSettings, duration: f64) -> Self {
        Self {
            dt: settings.dt,
            duration,
            damping: settings.damping,
            gravity: settings.gravity,
            decimation: settings.decimation,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure_positive("sim.dt", self.dt)?;
        ensure_finite("sim.duration", self.duration)?;
        if self.duration < 0.0 {
            return Err(Error::Validation("sim.duration must be non-negative".into()));
        }
        ensure_finite("sim.damping", self.damping)?;
        if self.damping < 0.0 {
            return Err(Error::Validation("sim.damping must be non-negative".into()));
        }
        ensure_finite("sim.gravity", self.gravity)?;
        if self.decimation == 0 {
            return Err(Error::Validation("sim.decimation must be at least 1".into()));
        }
        Ok(())
    }
}

/// Largest step accepted by [`integrate`]: one twentieth of the single-cable
/// spring period `2π/√(k/m)`.
pub fn max_stable_dt(cable: &CableSpec, payload: &PayloadSpec) -> f64 {
    0.05 * 2.0 * PI / (cable.stiffness / payload.mass).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub orientation_rate: Quaternion<f64>,
    pub angular_acceleration: Vec3,
}

type StateVector = SVector<f64, 13>;

fn pack(s: &PayloadState) -> StateVector {
    let q = s.orientation.quaternion();
    let mut x = StateVector::zeros();
    x.fixed_rows_mut::<3>(0).copy_from(&s.position);
    x.fixed_rows_mut::<3>(3).copy_from(&s.velocity);
    x[6] = q.w;
    x[7] = q.i;
    x[8] = q.j;
    x[9] = q.k;
    x.fixed_rows_mut::<3>(10).copy_from(&s.angular_velocity);
    x
}

fn unpack(x: &StateVector) -> PayloadState {
    PayloadState {
        position: x.fixed_rows::<3>(0).into(),
        velocity: x.fixed_rows::<3>(3).into(),
        orientation: UnitQuaternion::new_normalize(Quaternion::new(x[6], x[7], x[8], x[9])),
        angular_velocity: x.fixed_rows::<3>(10).into(),
    }
}

/// Everything the right-hand side needs that stays fixed over a run.
struct Model<'a> {
    geom: &'a RobotGeometry,
    payload: &'a PayloadSpec,
    stiffness: f64,
    damping: f64,
    gravity: f64,
    inertia_inv: Matrix3<f64>,
}

impl<'a> Model<'a> {
    fn new(geom: &'a RobotGeometry, payload: &'a PayloadSpec, stiffness: f64, damping: f64, gravity: f64) -> Self {
        let inertia_inv = payload.inertia.try_inverse().expect("validated inertia is invertible");
        Self {
            geom,
            payload,
            stiffness,
            damping,
            gravity,
            inertia_inv,
        }
    }

    fn derivative(&self, state: &PayloadState, natural: &[f64; 3]) -> Result<(StateDerivative, [f64; 3])> {
        let cg = cable_geometry(&state.pose(), self.geom, self.payload)?;
        let tensions: [f64; 3] = std::array::from_fn(|i| cable_tension(cg.lengths[i], natural[i], self.stiffness));

        let mut force = -gravity_load(self.payload, self.gravity) - state.velocity * self.damping;
        let mut torque_world = Vec3::zeros();
        for i in 0..3 {
            let pull = -cg.directions[i] * tensions[i];
            force += pull;
            torque_world += cg.offsets[i].cross(&pull);
        }
        let w = state.angular_velocity;
        let torque_body = state.orientation.inverse_transform_vector(&torque_world);
        let angular_acceleration = self.inertia_inv * (torque_body - w.cross(&(self.payload.inertia * w)));
        let orientation_rate = state.orientation.quaternion() * Quaternion::from_imag(w) * 0.5;

        Ok((
            StateDerivative {
                velocity: state.velocity,
                acceleration: force / self.payload.mass,
                orientation_rate,
                angular_acceleration,
            },
            tensions,
        ))
    }

    /// Derivative of the packed state. The quaternion is used unnormalized
    /// inside RK4 stages.
    fn derivative_vec(&self, x: &StateVector, natural: &[f64; 3]) -> Result<StateVector> {
        let mut state = unpack(x);
        let raw = Quaternion::new(x[6], x[7], x[8], x[9]);
        state.orientation = UnitQuaternion::new_unchecked(raw.normalize());
        let (d, _) = self.derivative(&state, natural)?;
        let q_rate = raw * Quaternion::from_imag(state.angular_velocity) * 0.5;
        let mut dx = StateVector::zeros();
        dx.fixed_rows_mut::<3>(0).copy_from(&d.velocity);
        dx.fixed_rows_mut::<3>(3).copy_from(&d.acceleration);
        dx[6] = q_rate.w;
        dx[7] = q_rate.i;
        dx[8] = q_rate.j;
        dx[9] = q_rate.k;
        dx.fixed_rows_mut::<3>(10).copy_from(&d.angular_acceleration);
        Ok(dx)
    }
}

/// Time derivative of the payload state for given natural lengths.
pub fn dynamics_rhs(
    state: &PayloadState,
    natural_lengths: &[f64; 3],
    geom: &RobotGeometry,
    payload: &PayloadSpec,
    cable: &CableSpec,
    params: &SimParams,
) -> Result<StateDerivative> {
    let model = Model::new(geom, payload, cable.stiffness, params.damping, params.gravity);
    Ok(model.derivative(state, natural_lengths)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub state: PayloadState,
    pub tensions: [f64; 3],
    pub lengths: [f64; 3],
    pub natural_lengths: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub samples: Vec<TraceSample>,
}

pub const TRACE_CSV_HEADER: &str = "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,T1,T2,T3,l1,l2,l3,lN1,lN2,lN3";

impl SimTrace {
    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    pub fn peak_tension(&self) -> f64 {
        self.samples.iter().flat_map(|s| s.tensions).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for s in &self.samples {
            let q = s.state.orientation.quaternion();
            let p = &s.state.position;
            let v = &s.state.velocity;
            let w = &s.state.angular_velocity;
            let fields = [
                s.t,
                p.x,
                p.y,
                p.z,
                v.x,
                v.y,
                v.z,
                q.w,
                q.i,
                q.j,
                q.k,
                w.x,
                w.y,
                w.z,
                s.tensions[0],
                s.tensions[1],
                s.tensions[2],
                s.lengths[0],
                s.lengths[1],
                s.lengths[2],
                s.natural_lengths[0],
                s.natural_lengths[1],
                s.natural_lengths[2],
            ];
            crate::io::write_row(&mut out, &fields)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::save_with(path.as_ref(), |w| self.write_csv(w))
    }
}

/// Fixed-step RK4 simulation driven by a winch profile.
pub fn integrate(
    state0: &PayloadState,
    winch: &WinchProfile,
    geom: &RobotGeometry,
    payload: &PayloadSpec,
    cable: &CableSpec,
    params: &SimParams,
) -> Result<SimTrace> {
    params.validate()?;
    let dt_max = max_stable_dt(cable, payload);
    if params.dt > dt_max {
        return Err(Error::Validation(format!(
            "dt = {} s is too large for cable stiffness {} N/m and mass {} kg (limit {dt_max:.3e} s)",
            params.dt, cable.stiffness, payload.mass
        )));
    }
    let grid_slack = 1e-9 * params.duration.max(1.0);
    if winch.duration() + grid_slack < params.duration {
        return Err(Error::InvalidArgument(format!(
            "winch profile covers {} s but the simulation runs {} s",
            winch.duration(),
            params.duration
        )));
    }

    let model = Model::new(geom, payload, cable.stiffness, params.damping, params.gravity);
    let steps = (params.duration / params.dt - 1e-9).ceil().max(0.0) as usize;
    let mut trace = SimTrace {
        samples: Vec::with_capacity(steps / params.decimation + 2),
    };
    let record = |trace: &mut SimTrace, t: f64, state: &PayloadState| -> Result<()> {
        let natural = winch.at(t);
        let cg = cable_geometry(&state.pose(), geom, payload).map_err(|e| e.at(t))?;
        let tensions = std::array::from_fn(|i| cable_tension(cg.lengths[i], natural[i], cable.stiffness));
        trace.samples.push(TraceSample {
            t,
            state: *state,
            tensions,
            lengths: cg.lengths,
            natural_lengths: natural,
        });
        Ok(())
    };

    let mut x = pack(state0);
    record(&mut trace, 0.0, &unpack(&x))?;
    let h = params.dt;
    for n in 0..steps {
        let t = n as f64 * h;
        let l0 = winch.at(t);
        let lm = winch.at(t + 0.5 * h);
        let l1 = winch.at(t + h);
        let f = |x: &StateVector, l: &[f64; 3]| model.derivative_vec(x, l).map_err(|e| e.at(t));
        let k1 = f(&x, &l0)?;
        let k2 = f(&(x + k1 * (0.5 * h)), &lm)?;
        let k3 = f(&(x + k2 * (0.5 * h)), &lm)?;
        let k4 = f(&(x + k3 * h), &l1)?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let qn = x.fixed_rows::<4>(6).norm();
        x.fixed_rows_mut::<4>(6).unscale_mut(qn);

        let step = n + 1;
        if step % params.decimation == 0 || step == steps {
            record(&mut trace, step as f64 * h, &unpack(&x))?;
        }
    }
    Ok(trace)
}

/// Kinetic, gravitational and elastic energy; zero potential at `z = 0`.
pub fn energy(
    state: &PayloadState,
    geom: &RobotGeometry,
    payload: &PayloadSpec,
    cable: &CableSpec,
    natural_lengths: &[f64; 3],
    gravity: f64,
) -> Result<f64> {
    let cg = cable_geometry(&state.pose(), geom, payload)?;
    let w = state.angular_velocity;
    let kinetic = 0.5 * payload.mass * state.velocity.norm_squared() + 0.5 * w.dot(&(payload.inertia * w));
    let potential = payload.mass * gravity * state.position.z;
    let elastic: f64 = (0..3)
        .map(|i| {
            let stretch = (cg.lengths[i] - natural_lengths[i]).max(0.0);
            0.5 * cable.stiffness * stretch * stretch
        })
        .sum();
    Ok(kinetic + potential + elastic)
}

/// Largest distance of the payload from its mean position over `[t_settle, end]`.
pub fn residual_oscillation(trace: &SimTrace, t_settle: f64) -> Result<f64> {
    let window: Vec<Vec3> = trace
        .samples
        .iter()
        .filter(|s| s.t >= t_settle)
        .map(|s| s.state.position)
        .collect();
    if window.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no trace samples after t_settle = {t_settle} s"
        )));
    }
    let mean = window.iter().sum::<Vec3>() / window.len() as f64;
    Ok(window.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max))
}

/// Natural lengths that hold the payload in static equilibrium at `pose`.
pub fn equilibrium_natural_lengths(
    pose: &Pose,
    geom: &RobotGeometry,
    payload: &PayloadSpec,
    cable: &CableSpec,
    gravity: f64,
) -> Result<[f64; 3]> {
    let lengths = crate::kinematics::inverse_kinematics(pose, geom, payload)?;
    let st = crate::kinematics::static_tensions(pose, geom, payload, gravity)?;
    if !st.feasible {
        return Err(Error::Workspace(format!(
            "pose is statically infeasible, tensions {:?}",
            st.tensions
        )));
    }
    Ok(std::array::from_fn(|i| lengths[i] - st.tensions[i] / cable.stiffness))
}

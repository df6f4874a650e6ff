//! Winch drum kinematics and stepper pulse compilation.
//!
//! Cable rate and shaft speed are related by the drum radius,
//! `ω = (dl_N/dt) / r`, positive when paying cable out. Speed is held
//! constant over each sample interval at the forward difference of the
//! commanded lengths, so the integrated rotation lands on every sampled
//! length exactly. It is then compiled into a table of frequency set-points,
//! one per control period, each carrying the integer number of steps to emit
//! in that period. Step counts come from rounding the exact cumulative
//! rotation, so the quantization error never exceeds half a step at any
//! interval boundary.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::{SimTrace, WinchProfile};
use crate::error::{Error, Result};
use crate::types::{ensure_positive, validate_ppr, MotorSpec};

/// Signed shaft angular velocity per motor, rad/s. `speeds[k]` holds over
/// `[k·h, (k+1)·h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShaftProfile {
    pub sample_period: f64,
    pub speeds: Vec<[f64; 3]>,
}

impl ShaftProfile {
    pub fn duration(&self) -> f64 {
        self.speeds.len() as f64 * self.sample_period
    }

    pub fn peak_speed(&self) -> f64 {
        self.speeds.iter().flatten().fold(0.0, |m, w| m.max(w.abs()))
    }

    fn speed(&self, motor: usize, k: usize) -> f64 {
        self.speeds[k][motor]
    }

    fn interval(&self, t: f64) -> usize {
        ((t / self.sample_period).max(0.0).floor() as usize).min(self.speeds.len() - 1)
    }

    /// Speed held at time `t`; the last interval extends past the end.
    pub fn at(&self, motor: usize, t: f64) -> f64 {
        self.speed(motor, self.interval(t))
    }

    /// Rotation since `t = 0`.
    pub fn angle(&self, motor: usize, t: f64) -> f64 {
        self.angle_with(&self.cumulative_angles(motor), motor, t)
    }

    fn angle_with(&self, cumulative: &[f64], motor: usize, t: f64) -> f64 {
        let k = self.interval(t);
        cumulative[k] + (t - k as f64 * self.sample_period) * self.speed(motor, k)
    }

    /// Rotation at each interval boundary.
    fn cumulative_angles(&self, motor: usize) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.speeds.len() + 1);
        out.push(0.0);
        for k in 0..self.speeds.len() {
            acc += self.speed(motor, k) * self.sample_period;
            out.push(acc);
        }
        out
    }
}

pub fn winch_to_shaft(winch: &WinchProfile, drum_radius: f64) -> Result<ShaftProfile> {
    ensure_positive("drum radius", drum_radius)?;
    let l = &winch.natural_lengths;
    let h = winch.sample_period;
    if l.len() < 2 {
        return Err(Error::InvalidArgument(
            "winch profile needs at least two samples".into(),
        ));
    }
    let speeds = l
        .windows(2)
        .map(|w| std::array::from_fn(|i| (w[1][i] - w[0][i]) / h / drum_radius))
        .collect();
    Ok(ShaftProfile {
        sample_period: h,
        speeds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseInterval {
    pub t_start: f64,
    pub duration: f64,
    /// Set-point pulse rate, `|mean ω|·ppr/2π` over the interval.
    pub frequency_hz: f64,
    /// `true` when paying cable out.
    pub payout: bool,
    /// Pulses to emit in this interval.
    pub steps: u64,
}

impl PulseInterval {
    pub fn signed_steps(&self) -> i64 {
        if self.payout {
            self.steps as i64
        } else {
            -(self.steps as i64)
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub ppr: u32,
    pub control_period: f64,
    pub motors: [Vec<PulseInterval>; 3],
}

pub const PULSE_CSV_HEADER: &str = "t_start,duration,frequency_hz,direction,steps";

impl PulseSchedule {
    pub fn step_angle(&self) -> f64 {
        TAU / self.ppr as f64
    }

    pub fn peak_frequency(&self) -> f64 {
        self.motors.iter().flatten().fold(0.0, |m, iv| m.max(iv.frequency_hz))
    }

    pub fn total_steps(&self, motor: usize) -> i64 {
        self.motors[motor].iter().map(PulseInterval::signed_steps).sum()
    }

    pub fn write_motor_csv<W: Write>(&self, motor: usize, drum_radius: f64, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# motor = {}", motor + 1)?;
        writeln!(out, "# ppr = {}", self.ppr)?;
        writeln!(out, "# drum_radius = {drum_radius:e}")?;
        writeln!(out, "# control_period = {:e}", self.control_period)?;
        writeln!(out, "{PULSE_CSV_HEADER}")?;
        for iv in &self.motors[motor] {
            writeln!(
                out,
                "{:.14e},{:.14e},{:.14e},{},{}",
                iv.t_start,
                iv.duration,
                iv.frequency_hz,
                u8::from(iv.payout),
                iv.steps
            )?;
        }
        Ok(())
    }

    /// Writes `pulses_motor{1,2,3}.csv` into `dir`.
    pub fn save_csv_dir(&self, dir: impl AsRef<Path>, drum_radius: f64) -> Result<()> {
        for m in 0..3 {
            let path = dir.as_ref().join(format!("pulses_motor{}.csv", m + 1));
            crate::io::save_with(&path, |w| self.write_motor_csv(m, drum_radius, w))?;
        }
        Ok(())
    }
}

/// Interval boundaries in `(a, b)` where the held speed changes sign.
fn sign_changes(shaft: &ShaftProfile, motor: usize, a: f64, b: f64) -> Vec<f64> {
    let h = shaft.sample_period;
    let sign = |k: usize| {
        let w = shaft.speed(motor, k);
        (w > 0.0) as i8 - (w < 0.0) as i8
    };
    let eps = 1e-9 * h;
    let first = (a / h).floor() as usize + 1;
    (first..shaft.speeds.len())
        .map(|k| (k, k as f64 * h))
        .take_while(|(_, t)| *t < b - eps)
        .filter(|(k, t)| *t > a + eps && sign(*k) != sign(*k - 1))
        .map(|(_, t)| t)
        .collect()
}

/// Quantizes shaft speed into per-period step counts.
///
/// Control periods in which the shaft reverses are split where the speed
/// changes sign, so every interval has a single direction.
pub fn shaft_to_pulses(shaft: &ShaftProfile, ppr: u32, control_period: f64) -> Result<PulseSchedule> {
    validate_ppr(ppr)?;
    ensure_positive("control period", control_period)?;
    if shaft.speeds.is_empty() {
        return Err(Error::InvalidArgument("shaft profile has no samples".into()));
    }
    let duration = shaft.duration();
    let step_angle = TAU / ppr as f64;
    let n_ctrl = (duration / control_period - 1e-9).ceil().max(0.0) as usize;
    let boundaries: Vec<f64> = (0..=n_ctrl)
        .map(|j| (j as f64 * control_period).min(duration))
        .collect();

    let motors = std::array::from_fn(|m| {
        let cumulative = shaft.cumulative_angles(m);
        let angle_at = |t: f64| shaft.angle_with(&cumulative, m, t);

        let mut intervals = Vec::with_capacity(n_ctrl);
        let mut emitted: i64 = 0;
        let mut last_payout = true;
        for pair in boundaries.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let mut cuts = vec![a];
            cuts.extend(sign_changes(shaft, m, a, b));
            cuts.push(b);
            for seg in cuts.windows(2) {
                let (u, v) = (seg[0], seg[1]);
                let delta = angle_at(v) - angle_at(u);
                let target = (angle_at(v) / step_angle).round() as i64;
                let steps = target - emitted;
                emitted = target;
                let payout = if delta > 0.0 {
                    true
                } else if delta < 0.0 {
                    false
                } else {
                    last_payout
                };
                last_payout = payout;
                intervals.push(PulseInterval {
                    t_start: u,
                    duration: v - u,
                    frequency_hz: delta.abs() / (v - u) * ppr as f64 / TAU,
                    payout,
                    steps: steps.unsigned_abs(),
                });
            }
        }
        intervals
    });

    Ok(PulseSchedule {
        ppr,
        control_period,
        motors,
    })
}

/// Cable length implied by the emitted steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthReconstruction {
    pub initial: [f64; 3],
    /// Per motor: (interval end time, length after the interval).
    pub motors: [Vec<(f64, f64)>; 3],
}

impl LengthReconstruction {
    /// Length after all intervals that ended at or before `t`.
    pub fn at(&self, motor: usize, t: f64) -> f64 {
        let tol = 1e-9;
        let series = &self.motors[motor];
        let idx = series.partition_point(|(te, _)| *te <= t + tol);
        if idx == 0 {
            self.initial[motor]
        } else {
            series[idx - 1].1
        }
    }
}

pub fn pulses_to_length(schedule: &PulseSchedule, drum_radius: f64, initial: [f64; 3]) -> LengthReconstruction {
    let per_step = drum_radius * schedule.step_angle();
    let motors = std::array::from_fn(|m| {
        let mut steps: i64 = 0;
        schedule.motors[m]
            .iter()
            .map(|iv| {
                steps += iv.signed_steps();
                (iv.t_end(), initial[m] + per_step * steps as f64)
            })
            .collect()
    });
    LengthReconstruction { initial, motors }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Speed,
    PulseFrequency,
    Torque,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: LimitKind,
    /// 1-based.
    pub motor: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub peak: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub peak_speed_rpm: f64,
    pub speed_limit_rpm: f64,
    pub peak_pulse_hz: f64,
    pub pulse_limit_hz: f64,
    /// `None` when no simulation trace was supplied.
    pub peak_torque_nm: Option<f64>,
    pub torque_limit_nm: f64,
    pub violations: Vec<Violation>,
}

impl LimitReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: LimitKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl std::fmt::Display for LimitReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "shaft speed   {:10.2} RPM   (limit {:.2} RPM)",
            self.peak_speed_rpm, self.speed_limit_rpm
        )?;
        writeln!(
            f,
            "pulse rate    {:10.1} Hz    (limit {:.1} Hz)",
            self.peak_pulse_hz, self.pulse_limit_hz
        )?;
        match self.peak_torque_nm {
            Some(tq) => writeln!(
                f,
                "drum torque   {tq:10.4} N·m  (limit {:.4} N·m)",
                self.torque_limit_nm
            )?,
            None => writeln!(f, "drum torque   n/a (no simulation trace)")?,
        }
        if self.ok() {
            writeln!(f, "status: within limits")
        } else {
            writeln!(f, "status: {} violation(s)", self.violations.len())?;
            for v in &self.violations {
                writeln!(
                    f,
                    "  {:?} motor {} from t = {:.4} s to {:.4} s: peak {:.4} > {:.4}",
                    v.kind, v.motor, v.t_start, v.t_end, v.peak, v.limit
                )?;
            }
            Ok(())
        }
    }
}

/// Merges consecutive over-limit samples into spans.
fn spans<I>(kind: LimitKind, motor: usize, limit: f64, samples: I) -> Vec<Violation>
where
    I: IntoIterator<Item = (f64, f64, f64)>,
{
    let mut out: Vec<Violation> = Vec::new();
    let mut open = false;
    for (t0, t1, value) in samples {
        if value > limit {
            match out.last_mut() {
                Some(v) if open => {
                    v.t_end = t1;
                    v.peak = v.peak.max(value);
                }
                _ => out.push(Violation {
                    kind,
                    motor,
                    t_start: t0,
                    t_end: t1,
                    peak: value,
                    limit,
                }),
            }
            open = true;
        } else {
            open = false;
        }
    }
    out
}

/// Checks shaft speed, pulse rate and (when a trace is given) drum torque
/// against the motor rating.
pub fn validate_limits(
    schedule: &PulseSchedule,
    shaft: &ShaftProfile,
    trace: Option<&SimTrace>,
    motor: &MotorSpec,
    drum_radius: f64,
) -> LimitReport {
    let to_rpm = 60.0 / TAU;
    let speed_limit = motor.max_speed_rad_s();
    let pulse_limit = motor.max_pulse_hz();
    let mut violations = Vec::new();

    for m in 0..3 {
        let h = shaft.sample_period;
        violations.extend(spans(
            LimitKind::Speed,
            m + 1,
            speed_limit * to_rpm,
            (0..shaft.speeds.len()).map(|k| (k as f64 * h, (k + 1) as f64 * h, shaft.speed(m, k).abs() * to_rpm)),
        ));
        violations.extend(spans(
            LimitKind::PulseFrequency,
            m + 1,
            pulse_limit,
            schedule.motors[m]
                .iter()
                .map(|iv| (iv.t_start, iv.t_end(), iv.frequency_hz)),
        ));
        if let Some(trace) = trace {
            violations.extend(spans(
                LimitKind::Torque,
                m + 1,
                motor.max_torque,
                trace.samples.iter().map(|s| (s.t, s.t, s.tensions[m] * drum_radius)),
            ));
        }
    }

    LimitReport {
        peak_speed_rpm: shaft.peak_speed() * to_rpm,
        speed_limit_rpm: motor.max_speed_rpm,
        peak_pulse_hz: schedule.peak_frequency(),
        pulse_limit_hz: pulse_limit,
        peak_torque_nm: trace.map(|t| t.peak_tension() * drum_radius),
        torque_limit_nm: motor.max_torque,
        violations,
    }
}

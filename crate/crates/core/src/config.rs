//! TOML configuration files.
//!
//! Every section and key is optional; omitted values fall back to the
//! default rig. See `configs/default.toml` at the repository root for the
//! full key list.

use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::inverse_kinematics;
use crate::types::{
    ensure_finite, ensure_positive, CableSpec, MotorSpec, PayloadSpec, PayloadVariant, Pose, Rig, RobotGeometry, Vec3,
    ANCHOR_CIRCUMRADIUS, ANCHOR_HEIGHT, CYLINDER_HEIGHT, CYLINDER_RADIUS, DEFAULT_CONTROL_PERIOD, DEFAULT_DT,
    DEFAULT_PPR, DRUM_RADIUS, DYNEEMA_DIAMETER_MM, DYNEEMA_STIFFNESS, FRAME_SIDE, GRAVITY, HOME_DEPTH,
    MOTOR_MAX_SPEED_RPM, MOTOR_MAX_TORQUE, PAYLOAD_A_MASS, PAYLOAD_B_MASS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    /// Viscous damping on payload translational velocity, N·s/m.
    pub damping: f64,
    pub gravity: f64,
    /// Record every n-th integration step in traces.
    pub decimation: usize,
    /// Pulse-frequency update period, s.
    pub control_period: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            damping: 0.0,
            gravity: GRAVITY,
            decimation: 1,
            control_period: DEFAULT_CONTROL_PERIOD,
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("sim.dt", self.dt)?;
        ensure_finite("sim.damping", self.damping)?;
        if self.damping < 0.0 {
            return Err(Error::Validation("sim.damping must be non-negative".into()));
        }
        ensure_finite("sim.gravity", self.gravity)?;
        if self.decimation == 0 {
            return Err(Error::Validation("sim.decimation must be at least 1".into()));
        }
        ensure_positive("sim.control_period", self.control_period)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub rig: Rig,
    pub sim: SimSettings,
}

impl Config {
    pub fn default_for(variant: PayloadVariant) -> Self {
        Self {
            rig: crate::types::default_rig(variant),
            sim: SimSettings::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_config()
    }

    /// Serializes every field explicitly, so the output parses back to an
    /// equal configuration.
    pub fn to_toml_string(&self) -> String {
        let file = ConfigFile::from_config(self);
        toml::to_string(&file).expect("config serializes")
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Config::from_toml_str(&text)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    geometry: GeometrySection,
    #[serde(default)]
    payload: PayloadSection,
    #[serde(default)]
    cable: CableSection,
    #[serde(default)]
    motor: MotorSection,
    #[serde(default)]
    sim: SimSection,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    proximal_anchors: Option<[[f64; 3]; 3]>,
    anchor_circumradius: Option<f64>,
    anchor_height: Option<f64>,
    drum_radius: Option<f64>,
    frame_side: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayloadSection {
    variant: Option<PayloadVariant>,
    mass: Option<f64>,
    inertia: Option<[[f64; 3]; 3]>,
    distal_anchors: Option<[[f64; 3]; 3]>,
    cylinder_radius: Option<f64>,
    cylinder_height: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CableSection {
    stiffness: Option<f64>,
    diameter_mm: Option<f64>,
    natural_lengths: Option<[f64; 3]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotorSection {
    max_torque: Option<f64>,
    max_speed_rpm: Option<f64>,
    ppr: Option<u32>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    dt: Option<f64>,
    damping: Option<f64>,
    gravity: Option<f64>,
    decimation: Option<usize>,
    control_period: Option<f64>,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl ConfigFile {
    fn into_config(self) -> Result<Config> {
        let g = self.geometry;
        let drum_radius = g.drum_radius.unwrap_or(DRUM_RADIUS);
        let frame_side = g.frame_side.unwrap_or(FRAME_SIDE);
        let geometry = match g.proximal_anchors {
            Some(anchors) => RobotGeometry::new(anchors.map(vec3), drum_radius, frame_side)?,
            None => {
                let radius = g.anchor_circumradius.unwrap_or(ANCHOR_CIRCUMRADIUS);
                ensure_positive("geometry.anchor_circumradius", radius)?;
                RobotGeometry::equilateral(
                    radius,
                    g.anchor_height.unwrap_or(ANCHOR_HEIGHT),
                    drum_radius,
                    frame_side,
                )?
            }
        };

        let p = self.payload;
        let variant = p.variant.unwrap_or(PayloadVariant::A);
        let mass = p.mass.unwrap_or(match variant {
            PayloadVariant::A => PAYLOAD_A_MASS,
            PayloadVariant::B => PAYLOAD_B_MASS,
        });
        let base = PayloadSpec::cylinder(
            variant,
            mass,
            p.cylinder_radius.unwrap_or(CYLINDER_RADIUS),
            p.cylinder_height.unwrap_or(CYLINDER_HEIGHT),
        )?;
        let inertia = p
            .inertia
            .map(|rows| Matrix3::from_fn(|r, c| rows[r][c]))
            .unwrap_or(base.inertia);
        let anchors = p.distal_anchors.map(|a| a.map(vec3)).unwrap_or(base.distal_anchors);
        let payload = PayloadSpec::new(variant, mass, inertia, anchors)?;

        let c = self.cable;
        let natural_lengths = match c.natural_lengths {
            Some(l) => l,
            None => inverse_kinematics(&Pose::level(geometry.home_position(HOME_DEPTH)), &geometry, &payload)
                .map_err(|e| Error::Validation(format!("cannot derive cable.natural_lengths: {e}")))?,
        };
        let cable = CableSpec::new(
            c.stiffness.unwrap_or(DYNEEMA_STIFFNESS),
            c.diameter_mm.unwrap_or(DYNEEMA_DIAMETER_MM),
            natural_lengths,
        )?;

        let m = self.motor;
        let motor = MotorSpec::new(
            m.max_torque.unwrap_or(MOTOR_MAX_TORQUE),
            m.max_speed_rpm.unwrap_or(MOTOR_MAX_SPEED_RPM),
            m.ppr.unwrap_or(DEFAULT_PPR),
        )?;

        let s = self.sim;
        let defaults = SimSettings::default();
        let sim = SimSettings {
            dt: s.dt.unwrap_or(defaults.dt),
            damping: s.damping.unwrap_or(defaults.damping),
            gravity: s.gravity.unwrap_or(defaults.gravity),
            decimation: s.decimation.unwrap_or(defaults.decimation),
            control_period: s.control_period.unwrap_or(defaults.control_period),
        };
        sim.validate()?;

        Ok(Config {
            rig: Rig {
                geometry,
                payload,
                cable,
                motor,
            },
            sim,
        })
    }

    fn from_config(config: &Config) -> Self {
        let rig = &config.rig;
        let j = &rig.payload.inertia;
        ConfigFile {
            geometry: GeometrySection {
                proximal_anchors: Some(rig.geometry.proximal_anchors.each_ref().map(arr)),
                anchor_circumradius: None,
                anchor_height: None,
                drum_radius: Some(rig.geometry.drum_radius),
                frame_side: Some(rig.geometry.frame_side),
            },
            payload: PayloadSection {
                variant: Some(rig.payload.variant),
                mass: Some(rig.payload.mass),
                inertia: Some(std::array::from_fn(|r| std::array::from_fn(|c| j[(r, c)]))),
                distal_anchors: Some(rig.payload.distal_anchors.each_ref().map(arr)),
                cylinder_radius: None,
                cylinder_height: None,
            },
            cable: CableSection {
                stiffness: Some(rig.cable.stiffness),
                diameter_mm: Some(rig.cable.diameter_mm),
                natural_lengths: Some(rig.cable.natural_lengths),
            },
            motor: MotorSection {
                max_torque: Some(rig.motor.max_torque),
                max_speed_rpm: Some(rig.motor.max_speed_rpm),
                ppr: Some(rig.motor.ppr),
            },
            sim: SimSection {
                dt: Some(config.sim.dt),
                damping: Some(config.sim.damping),
                gravity: Some(config.sim.gravity),
                decimation: Some(config.sim.decimation),
                control_period: Some(config.sim.control_period),
            },
        }
    }
}

//! Shared geometric and physical types for the rig.
//!
//! World frame: origin at the floor centre of the 1 m cube, z up. The three
//! proximal anchors (pulley exit points) sit in the top plane.

use std::f64::consts::PI;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Orientation = UnitQuaternion<f64>;

pub const GRAVITY: f64 = 9.8;
pub const DYNEEMA_STIFFNESS: f64 = 7.0e4;
pub const DYNEEMA_DIAMETER_MM: f64 = 0.9;
pub const PAYLOAD_A_MASS: f64 = 1.5;
pub const PAYLOAD_B_MASS: f64 = 2.7;
pub const FRAME_SIDE: f64 = 1.0;
pub const ANCHOR_CIRCUMRADIUS: f64 = 0.45;
pub const ANCHOR_HEIGHT: f64 = 1.0;
pub const DRUM_RADIUS: f64 = 0.02;
pub const CYLINDER_RADIUS: f64 = 0.05;
pub const CYLINDER_HEIGHT: f64 = 0.1;
pub const MOTOR_MAX_TORQUE: f64 = 3.0;
pub const MOTOR_MAX_SPEED_RPM: f64 = 1200.0;
pub const PPR_MIN: u32 = 800;
pub const PPR_MAX: u32 = 40_000;
pub const DEFAULT_PPR: u32 = 10_000;
pub const DEFAULT_DT: f64 = 1.0e-4;
pub const DEFAULT_CONTROL_PERIOD: f64 = 1.0e-3;
/// Depth of the home pose below the anchor plane.
pub const HOME_DEPTH: f64 = 0.5;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be positive, got {value}")))
    }
}

fn ensure_finite_vec(name: &str, v: &Vec3) -> Result<()> {
    for c in v.iter() {
        ensure_finite(name, *c)?;
    }
    Ok(())
}

/// Anchor positions on a circle, the first one on the +x axis.
fn ring(radius: f64, height: f64) -> [Vec3; 3] {
    std::array::from_fn(|i| {
        let angle = 2.0 * PI * i as f64 / 3.0;
        Vec3::new(radius * angle.cos(), radius * angle.sin(), height)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotGeometry {
    pub proximal_anchors: [Vec3; 3],
    pub drum_radius: f64,
    pub frame_side: f64,
}

impl RobotGeometry {
    pub fn new(proximal_anchors: [Vec3; 3], drum_radius: f64, frame_side: f64) -> Result<Self> {
        for a in &proximal_anchors {
            ensure_finite_vec("geometry.proximal_anchors", a)?;
        }
        ensure_positive("geometry.drum_radius", drum_radius)?;
        ensure_positive("geometry.frame_side", frame_side)?;
        let [a, b, c] = &proximal_anchors;
        let area2 = (b - a).cross(&(c - a)).norm();
        if area2 < 1e-9 {
            return Err(Error::Validation(
                "geometry.proximal_anchors must not be collinear".into(),
            ));
        }
        Ok(Self {
            proximal_anchors,
            drum_radius,
            frame_side,
        })
    }

    /// Equilateral triangle of the given circumradius, centred over the
    /// floor origin at the given height.
    pub fn equilateral(circumradius: f64, height: f64, drum_radius: f64, frame_side: f64) -> Result<Self> {
        Self::new(ring(circumradius, height), drum_radius, frame_side)
    }

    pub fn centroid(&self) -> Vec3 {
        self.proximal_anchors.iter().sum::<Vec3>() / 3.0
    }

    /// Unit normal of the anchor plane, oriented upward.
    pub fn plane_normal(&self) -> Vec3 {
        let [a, b, c] = &self.proximal_anchors;
        let n = (b - a).cross(&(c - a)).normalize();
        if n.z < 0.0 {
            -n
        } else {
            n
        }
    }

    /// Signed height of a point above the anchor plane.
    pub fn height_above_plane(&self, point: &Vec3) -> f64 {
        (point - self.centroid()).dot(&self.plane_normal())
    }

    /// Point on the vertical through the anchor centroid, `depth` below the plane.
    pub fn home_position(&self, depth: f64) -> Vec3 {
        self.centroid() - Vec3::new(0.0, 0.0, depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum PayloadVariant {
    /// Three distinct attachment points on the top edge of the cylinder.
    A,
    /// All three cables tied to one point at the centre of mass.
    B,
}

impl std::str::FromStr for PayloadVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(PayloadVariant::A),
            "B" | "b" => Ok(PayloadVariant::B),
            other => Err(Error::InvalidArgument(format!(
                "payload variant must be A or B, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for PayloadVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PayloadVariant::A => f.write_str("A"),
            PayloadVariant::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayloadSpec {
    pub mass: f64,
    /// Inertia about the centre of mass, body frame.
    pub inertia: Matrix3<f64>,
    /// Body-frame offsets from the centre of mass to the cable attachment points.
    pub distal_anchors: [Vec3; 3],
    pub variant: PayloadVariant,
}

impl PayloadSpec {
    pub fn new(variant: PayloadVariant, mass: f64, inertia: Matrix3<f64>, distal_anchors: [Vec3; 3]) -> Result<Self> {
        ensure_positive("payload.mass", mass)?;
        for v in inertia.iter() {
            ensure_finite("payload.inertia", *v)?;
        }
        for b in &distal_anchors {
            ensure_finite_vec("payload.distal_anchors", b)?;
        }
        let asym = (inertia - inertia.transpose()).abs().max();
        if asym > 1e-12 * inertia.abs().max().max(1.0) {
            return Err(Error::Validation("payload.inertia must be symmetric".into()));
        }
        if inertia.cholesky().is_none() {
            return Err(Error::Validation("payload.inertia must be positive definite".into()));
        }
        if variant == PayloadVariant::B && distal_anchors.iter().any(|b| b.norm() != 0.0) {
            return Err(Error::Validation(
                "payload variant B requires all distal anchors at the centre (0, 0, 0)".into(),
            ));
        }
        Ok(Self {
            mass,
            inertia,
            distal_anchors,
            variant,
        })
    }

    /// Solid cylinder with its axis along body z.
    pub fn cylinder(variant: PayloadVariant, mass: f64, radius: f64, height: f64) -> Result<Self> {
        ensure_positive("payload.cylinder_radius", radius)?;
        ensure_positive("payload.cylinder_height", height)?;
        let inertia = cylinder_inertia(mass, radius, height);
        let anchors = match variant {
            PayloadVariant::A => ring(radius, 0.5 * height),
            PayloadVariant::B => [Vec3::zeros(); 3],
        };
        Self::new(variant, mass, inertia, anchors)
    }

    pub fn default_for(variant: PayloadVariant) -> Self {
        let mass = match variant {
            PayloadVariant::A => PAYLOAD_A_MASS,
            PayloadVariant::B => PAYLOAD_B_MASS,
        };
        Self::cylinder(variant, mass, CYLINDER_RADIUS, CYLINDER_HEIGHT).expect("default payload is valid")
    }
}

pub fn cylinder_inertia(mass: f64, radius: f64, height: f64) -> Matrix3<f64> {
    let axial = 0.5 * mass * radius * radius;
    let transverse = mass * (3.0 * radius * radius + height * height) / 12.0;
    Matrix3::from_diagonal(&Vec3::new(transverse, transverse, axial))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CableSpec {
    /// N/m
    pub stiffness: f64,
    /// Informational only.
    pub diameter_mm: f64,
    /// Initial natural (unstretched) lengths, metres.
    pub natural_lengths: [f64; 3],
}

impl CableSpec {
    pub fn new(stiffness: f64, diameter_mm: f64, natural_lengths: [f64; 3]) -> Result<Self> {
        ensure_positive("cable.stiffness", stiffness)?;
        ensure_positive("cable.diameter_mm", diameter_mm)?;
        for l in natural_lengths {
            ensure_positive("cable.natural_lengths", l)?;
        }
        Ok(Self {
            stiffness,
            diameter_mm,
            natural_lengths,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotorSpec {
    /// N·m
    pub max_torque: f64,
    pub max_speed_rpm: f64,
    pub ppr: u32,
}

impl MotorSpec {
    pub fn new(max_torque: f64, max_speed_rpm: f64, ppr: u32) -> Result<Self> {
        ensure_positive("motor.max_torque", max_torque)?;
        ensure_positive("motor.max_speed_rpm", max_speed_rpm)?;
        validate_ppr(ppr)?;
        Ok(Self {
            max_torque,
            max_speed_rpm,
            ppr,
        })
    }

    pub fn max_speed_rad_s(&self) -> f64 {
        self.max_speed_rpm * 2.0 * PI / 60.0
    }

    /// Pulse rate at rated speed.
    pub fn max_pulse_hz(&self) -> f64 {
        self.max_speed_rpm / 60.0 * self.ppr as f64
    }
}

pub fn validate_ppr(ppr: u32) -> Result<()> {
    if (PPR_MIN..=PPR_MAX).contains(&ppr) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "motor.ppr must be between {PPR_MIN} and {PPR_MAX}, got {ppr}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Orientation,
}

impl Pose {
    pub fn level(position: Vec3) -> Self {
        Self {
            position,
            orientation: Orientation::identity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub orientation: Orientation,
    /// Body frame.
    pub angular_velocity: Vec3,
}

impl PayloadState {
    pub fn at_rest(pose: Pose) -> Self {
        Self {
            position: pose.position,
            velocity: Vec3::zeros(),
            orientation: pose.orientation,
            angular_velocity: Vec3::zeros(),
        }
    }

    pub fn pose(&self) -> Pose {
        Pose {
            position: self.position,
            orientation: self.orientation,
        }
    }
}

/// Complete physical description of the robot.
#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub geometry: RobotGeometry,
    pub payload: PayloadSpec,
    pub cable: CableSpec,
    pub motor: MotorSpec,
}

/// The 1 m cube rig with Dyneema cables and the chosen payload.
///
/// Natural lengths are the geometric lengths at the home pose, half a metre
/// below the centroid of the anchors.
pub fn default_rig(variant: PayloadVariant) -> Rig {
    let geometry = RobotGeometry::equilateral(ANCHOR_CIRCUMRADIUS, ANCHOR_HEIGHT, DRUM_RADIUS, FRAME_SIDE)
        .expect("default geometry is valid");
    let payload = PayloadSpec::default_for(variant);
    let home = Pose::level(geometry.home_position(HOME_DEPTH));
    let lengths =
        crate::kinematics::inverse_kinematics(&home, &geometry, &payload).expect("home pose is inside the workspace");
    let cable = CableSpec::new(DYNEEMA_STIFFNESS, DYNEEMA_DIAMETER_MM, lengths).expect("default cable is valid");
    let motor = MotorSpec::new(MOTOR_MAX_TORQUE, MOTOR_MAX_SPEED_RPM, DEFAULT_PPR).expect("default motor is valid");
    Rig {
        geometry,
        payload,
        cable,
        motor,
    }
}

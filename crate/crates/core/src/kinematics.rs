//! Cable geometry, wrench Jacobian, inverse/forward kinematics and static
//! tension distribution.
//!
//! Sign convention: `s_i` points from the proximal anchor toward the payload,
//! so a taut cable pulls the payload along `-s_i`. Translational balance is
//!
//! ```text
//! m·p̈ + F = -Σ s_i·T_i,    F = (0, 0, m·g)
//! ```
//!
//! i.e. `F` is the weight term moved to the left-hand side, and equilibrium
//! reads `S·T = -F`.

use nalgebra::{Matrix3, Matrix6x3, Vector6};

use crate::error::{Error, Result};
use crate::types::{PayloadSpec, PayloadVariant, Pose, RobotGeometry, Vec3};

const DEGENERATE_LENGTH: f64 = 1e-12;
pub const FK_TOLERANCE: f64 = 1e-10;
pub const FK_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct CableGeometry {
    pub lengths: [f64; 3],
    /// Unit vectors from proximal anchor toward the payload attachment.
    pub directions: [Vec3; 3],
    /// World-frame offsets from the centre of mass to the attachment points.
    pub offsets: [Vec3; 3],
    /// World-frame attachment points.
    pub distal_points: [Vec3; 3],
}

pub type Jacobian = Matrix6x3<f64>;

pub fn cable_geometry(pose: &Pose, geom: &RobotGeometry, payload: &PayloadSpec) -> Result<CableGeometry> {
    let offsets = payload.distal_anchors.map(|b| pose.orientation * b);
    let distal_points = offsets.map(|b| pose.position + b);
    let mut lengths = [0.0; 3];
    let mut directions = [Vec3::zeros(); 3];
    for i in 0..3 {
        let d = distal_points[i] - geom.proximal_anchors[i];
        let l = d.norm();
        if !(l > DEGENERATE_LENGTH) {
            return Err(Error::DegenerateCable { index: i + 1 });
        }
        lengths[i] = l;
        directions[i] = d / l;
    }
    Ok(CableGeometry {
        lengths,
        directions,
        offsets,
        distal_points,
    })
}

impl CableGeometry {
    /// Columns `[s_i; b_i × s_i]`.
    pub fn jacobian(&self) -> Jacobian {
        let mut h = Jacobian::zeros();
        for i in 0..3 {
            let s = self.directions[i];
            let m = self.offsets[i].cross(&s);
            h.fixed_view_mut::<3, 1>(0, i).copy_from(&s);
            h.fixed_view_mut::<3, 1>(3, i).copy_from(&m);
        }
        h
    }

    /// Direction matrix `S = [s_1 s_2 s_3]`.
    pub fn direction_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&self.directions)
    }
}

pub fn jacobian(pose: &Pose, geom: &RobotGeometry, payload: &PayloadSpec) -> Result<Jacobian> {
    Ok(cable_geometry(pose, geom, payload)?.jacobian())
}

/// Cable lengths that place the payload at `pose`.
///
/// Fails if any attachment point is at or above the anchor plane.
pub fn inverse_kinematics(pose: &Pose, geom: &RobotGeometry, payload: &PayloadSpec) -> Result<[f64; 3]> {
    let cg = cable_geometry(pose, geom, payload)?;
    for (i, p) in cg.distal_points.iter().enumerate() {
        let h = geom.height_above_plane(p);
        if h >= 0.0 {
            return Err(Error::Workspace(format!(
                "attachment point {} is {h:.6} m above the anchor plane",
                i + 1
            )));
        }
    }
    Ok(cg.lengths)
}

/// Closed-form trilateration, returning the intersection below the anchor
/// plane. `None` when the three spheres do not meet.
fn trilaterate_below(lengths: [f64; 3], geom: &RobotGeometry) -> Option<Vec3> {
    let [p1, p2, p3] = geom.proximal_anchors;
    let ex = (p2 - p1).normalize();
    let i = ex.dot(&(p3 - p1));
    let ey = (p3 - p1 - ex * i).normalize();
    let ez = ex.cross(&ey);
    let d = (p2 - p1).norm();
    let j = ey.dot(&(p3 - p1));
    let [r1, r2, r3] = lengths;
    let x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let y = (r1 * r1 - r3 * r3 + i * i + j * j) / (2.0 * j) - i / j * x;
    let z2 = r1 * r1 - x * x - y * y;
    if z2 < 0.0 {
        return None;
    }
    let base = p1 + ex * x + ey * y;
    let down = if ez.dot(&geom.plane_normal()) > 0.0 { -ez } else { ez };
    Some(base + down * z2.sqrt())
}

/// Position of a point-attached payload (variant B) from its cable lengths.
///
/// Newton iteration on `|anchor_i - x| - l_i = 0`, started from
/// `initial_guess`. Of the two mirror solutions the one below the anchor
/// plane is returned.
pub fn forward_kinematics_point(lengths: [f64; 3], geom: &RobotGeometry, initial_guess: Vec3) -> Result<Vec3> {
    for l in lengths {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cable lengths must be positive, got {lengths:?}"
            )));
        }
    }
    // Existence check; Newton alone cannot distinguish "no root" from a bad start.
    let fallback = trilaterate_below(lengths, geom).ok_or(Error::InfeasibleLengths(lengths))?;

    let mut x = initial_guess;
    if geom.height_above_plane(&x) >= 0.0 {
        x = mirror(&x, geom) - geom.plane_normal() * 1e-3;
    }
    match newton(lengths, geom, x) {
        Ok(sol) if geom.height_above_plane(&sol) < 0.0 => Ok(sol),
        Ok(sol) => newton(lengths, geom, mirror(&sol, geom)),
        Err(_) => newton(lengths, geom, fallback),
    }
}

fn mirror(x: &Vec3, geom: &RobotGeometry) -> Vec3 {
    x - geom.plane_normal() * (2.0 * geom.height_above_plane(x))
}

fn newton(lengths: [f64; 3], geom: &RobotGeometry, mut x: Vec3) -> Result<Vec3> {
    for _ in 0..FK_MAX_ITERATIONS {
        let mut residual = Vec3::zeros();
        let mut jac = Matrix3::zeros();
        for i in 0..3 {
            let d = x - geom.proximal_anchors[i];
            let n = d.norm();
            if n < DEGENERATE_LENGTH {
                return Err(Error::DegenerateCable { index: i + 1 });
            }
            residual[i] = n - lengths[i];
            jac.set_row(i, &(d / n).transpose());
        }
        if residual.amax() < FK_TOLERANCE {
            return Ok(x);
        }
        let step = jac.lu().solve(&residual).ok_or(Error::Singular)?;
        x -= step;
    }
    Err(Error::NoConvergence(FK_MAX_ITERATIONS))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticTensions {
    pub tensions: [f64; 3],
    /// All tensions non-negative.
    pub feasible: bool,
    /// Norm of `H·T + [F; 0]`; zero for an exact solve.
    pub residual: f64,
}

/// Weight term of the translational balance, `(0, 0, m·g)`.
pub fn gravity_load(payload: &PayloadSpec, gravity: f64) -> Vec3 {
    Vec3::new(0.0, 0.0, payload.mass * gravity)
}

/// Cable tensions holding the payload still at `pose`.
///
/// Variant B solves the 3×3 force balance exactly. Variant A solves the full
/// 6×3 wrench balance in the least-squares sense and reports the residual.
pub fn static_tensions(
    pose: &Pose,
    geom: &RobotGeometry,
    payload: &PayloadSpec,
    gravity: f64,
) -> Result<StaticTensions> {
    let cg = cable_geometry(pose, geom, payload)?;
    let load = gravity_load(payload, gravity);
    let tensions = match payload.variant {
        PayloadVariant::B => {
            let s = cg.direction_matrix();
            let lu = s.lu();
            if lu.determinant().abs() < 1e-12 {
                return Err(Error::Singular);
            }
            lu.solve(&(-load)).ok_or(Error::Singular)?
        }
        PayloadVariant::A => {
            let h = cg.jacobian();
            let rhs = Vector6::new(-load.x, -load.y, -load.z, 0.0, 0.0, 0.0);
            let svd = h.svd(true, true);
            if svd.singular_values.min() < 1e-12 * svd.singular_values.max().max(1.0) {
                return Err(Error::Singular);
            }
            svd.solve(&rhs, 1e-15).map_err(|_| Error::Singular)?
        }
    };
    let t = [tensions[0], tensions[1], tensions[2]];
    let wrench = cg.jacobian() * tensions + Vector6::new(load.x, load.y, load.z, 0.0, 0.0, 0.0);
    Ok(StaticTensions {
        tensions: t,
        feasible: t.iter().all(|&x| x >= 0.0),
        residual: wrench.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{default_rig, Orientation, PayloadVariant};

    fn home(depth: f64) -> Pose {
        let rig = default_rig(PayloadVariant::B);
        Pose::level(rig.geometry.home_position(depth))
    }

    #[test]
    fn centroid_lengths_pythagoras() {
        let rig = default_rig(PayloadVariant::B);
        let cg = cable_geometry(&home(0.5), &rig.geometry, &rig.payload).unwrap();
        let expected = (0.45f64 * 0.45 + 0.5 * 0.5).sqrt();
        for l in cg.lengths {
            assert!((l - expected).abs() < 1e-12);
        }
        assert!((expected - 0.67268).abs() < 1e-5);
    }

    #[test]
    fn collinear_case_below_anchor() {
        let rig = default_rig(PayloadVariant::B);
        let a1 = rig.geometry.proximal_anchors[0];
        let pose = Pose::level(a1 - Vec3::new(0.0, 0.0, 0.37));
        let cg = cable_geometry(&pose, &rig.geometry, &rig.payload).unwrap();
        assert!((cg.lengths[0] - 0.37).abs() < 1e-12);
        assert!((cg.directions[0] - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn variant_b_reduction() {
        let a = default_rig(PayloadVariant::A);
        let b = default_rig(PayloadVariant::B);
        let pose = Pose {
            position: Vec3::new(0.05, -0.02, 0.4),
            orientation: Orientation::from_euler_angles(0.1, -0.05, 0.3),
        };
        let ga = cable_geometry(&pose, &a.geometry, &a.payload).unwrap();
        let gb = cable_geometry(&pose, &b.geometry, &b.payload).unwrap();
        assert!(ga.lengths.iter().zip(gb.lengths).any(|(x, y)| (x - y).abs() > 1e-3));
        let mut zeroed = a.payload.clone();
        zeroed.distal_anchors = [Vec3::zeros(); 3];
        let gz = cable_geometry(&pose, &a.geometry, &zeroed).unwrap();
        assert_eq!(gz.lengths, gb.lengths);
    }

    #[test]
    fn degenerate_cable_reports_index() {
        let rig = default_rig(PayloadVariant::B);
        let pose = Pose::level(rig.geometry.proximal_anchors[1]);
        let err = cable_geometry(&pose, &rig.geometry, &rig.payload).unwrap_err();
        assert!(matches!(err, Error::DegenerateCable { index: 2 }));
        assert!(matches!(
            inverse_kinematics(&pose, &rig.geometry, &rig.payload).unwrap_err(),
            Error::DegenerateCable { index: 2 }
        ));
    }

    #[test]
    fn payload_b_moment_rows_zero() {
        let rig = default_rig(PayloadVariant::B);
        let h = jacobian(&home(0.3), &rig.geometry, &rig.payload).unwrap();
        assert_eq!(h.fixed_view::<3, 3>(3, 0).abs().max(), 0.0);
        for i in 0..3 {
            assert!((h.fixed_view::<3, 1>(0, i).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_pose_force_rows_sum_vertical() {
        for variant in [PayloadVariant::A, PayloadVariant::B] {
            let rig = default_rig(variant);
            let h = jacobian(&home(0.6), &rig.geometry, &rig.payload).unwrap();
            let sum: Vec3 = (0..3).map(|i| Vec3::from(h.fixed_view::<3, 1>(0, i))).sum();
            assert!(sum.x.abs() < 1e-12 && sum.y.abs() < 1e-12);
            assert!(sum.z < 0.0);
        }
    }

    #[test]
    fn ik_workspace_and_monotone() {
        let rig = default_rig(PayloadVariant::A);
        let l0 = inverse_kinematics(&home(0.5), &rig.geometry, &rig.payload).unwrap();
        assert!((l0[0] - l0[1]).abs() < 1e-12 && (l0[1] - l0[2]).abs() < 1e-12);
        let l1 = inverse_kinematics(&home(0.4), &rig.geometry, &rig.payload).unwrap();
        for i in 0..3 {
            assert!(l1[i] < l0[i]);
        }
        let above = Pose::level(rig.geometry.centroid() + Vec3::new(0.0, 0.0, 0.1));
        assert!(matches!(
            inverse_kinematics(&above, &rig.geometry, &rig.payload).unwrap_err(),
            Error::Workspace(_)
        ));
    }

    #[test]
    fn fk_centroid_from_equal_lengths() {
        let rig = default_rig(PayloadVariant::B);
        let l = (0.45f64 * 0.45 + 0.5 * 0.5).sqrt();
        let x = forward_kinematics_point([l; 3], &rig.geometry, Vec3::new(0.1, 0.1, 0.2)).unwrap();
        assert!((x - Vec3::new(0.0, 0.0, 0.5)).norm() < 1e-9);
        // guess above the plane still lands on the suspended branch
        let x = forward_kinematics_point([l; 3], &rig.geometry, Vec3::new(0.0, 0.0, 1.4)).unwrap();
        assert!((x - Vec3::new(0.0, 0.0, 0.5)).norm() < 1e-9);
    }

    #[test]
    fn fk_infeasible_lengths() {
        let rig = default_rig(PayloadVariant::B);
        let err = forward_kinematics_point([0.1; 3], &rig.geometry, Vec3::new(0.0, 0.0, 0.5)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleLengths(_)));
        assert!(forward_kinematics_point([0.5, -1.0, 0.5], &rig.geometry, Vec3::zeros()).is_err());
    }

    #[test]
    fn zero_gravity_zero_tension() {
        let rig = default_rig(PayloadVariant::B);
        let st = static_tensions(&home(0.5), &rig.geometry, &rig.payload, 0.0).unwrap();
        assert_eq!(st.tensions, [0.0; 3]);
        assert!(st.feasible);
    }

    #[test]
    fn under_anchor_one_other_cables_unloaded() {
        let rig = default_rig(PayloadVariant::B);
        let pose = Pose::level(rig.geometry.proximal_anchors[0] - Vec3::new(0.0, 0.0, 0.5));
        let st = static_tensions(&pose, &rig.geometry, &rig.payload, 9.8).unwrap();
        assert!((st.tensions[0] - 2.7 * 9.8).abs() < 1e-9);
        assert!(st.tensions[1].abs() < 1e-9 && st.tensions[2].abs() < 1e-9);
    }

    #[test]
    fn variant_a_level_pose_is_consistent() {
        let rig = default_rig(PayloadVariant::A);
        let st = static_tensions(&home(0.5), &rig.geometry, &rig.payload, 9.8).unwrap();
        assert!(st.feasible);
        assert!(st.residual < 1e-9, "{}", st.residual);
        assert!((st.tensions[0] - st.tensions[1]).abs() < 1e-9);
    }
}

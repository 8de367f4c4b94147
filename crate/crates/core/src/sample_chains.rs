//! Bundled example chains, mirrored by the JSON files under `chains/`.
//!
//! The 8-DoF arm is a generic desk-scale redundant manipulator: a torso yaw
//! under a 3-axis shoulder, elbow, 2-axis wrist and tool roll, sized so the
//! right-of-torso workspace box `[0.2, 0.85] x [-0.9, 0.0] x [0.8, 1.4]` m
//! is well covered.

use crate::chain::{JointSpec, KinematicChain};
use crate::math::{Quaternion, Transform, Vec3};

fn joint(name: &str, axis: [f64; 3], xyz: [f64; 3], lower: f64, upper: f64) -> JointSpec {
    JointSpec {
        name: name.into(),
        axis: Vec3::from_array(axis),
        origin: Transform::new(Vec3::from_array(xyz), Quaternion::IDENTITY),
        lower,
        upper,
    }
}

/// Two unit links in the xy-plane, both joints about +z.
///
/// Limits stay under pi/2 so the tip yaw never wraps: the pose-to-joints
/// map is then globally smooth, which is what a regression fixture should
/// look like (wrap-around branch cuts are a property of a robot's limit
/// choices, not of the method).
pub fn planar2() -> KinematicChain {
    KinematicChain::new(
        "planar2",
        vec![
            joint("shoulder", [0.0, 0.0, 1.0], [0.0, 0.0, 0.0], -1.5, 1.5),
            joint("elbow", [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], -1.5, 1.5),
        ],
        Transform::new(Vec3::new(1.0, 0.0, 0.0), Quaternion::IDENTITY),
    )
    .expect("planar2 is valid")
}

/// Desk-scale 4-DoF spatial arm: base yaw, shoulder pitch, one-sided elbow
/// pitch (which rules out elbow-flip ambiguity), wrist roll.
pub fn spatial4() -> KinematicChain {
    KinematicChain::new(
        "spatial4",
        vec![
            joint("base_yaw", [0.0, 0.0, 1.0], [0.0, 0.0, 0.3], -2.6, 2.6),
            joint("shoulder_pitch", [0.0, 1.0, 0.0], [0.0, 0.0, 0.2], -1.0, 1.0),
            joint("elbow_pitch", [0.0, 1.0, 0.0], [0.3, 0.0, 0.0], -2.0, 0.0),
            joint("wrist_roll", [1.0, 0.0, 0.0], [0.25, 0.0, 0.0], -2.6, 2.6),
        ],
        Transform::new(Vec3::new(0.15, 0.0, 0.0), Quaternion::IDENTITY),
    )
    .expect("spatial4 is valid")
}

/// Desk-scale 8-DoF redundant arm (representative geometry, not a replica
/// of any particular robot).
pub fn arm8() -> KinematicChain {
    KinematicChain::new(
        "arm8",
        vec![
            joint("torso_yaw", [0.0, 0.0, 1.0], [0.0, 0.0, 0.9], -1.5, 1.5),
            joint("shoulder_pitch", [0.0, 1.0, 0.0], [0.0, -0.2, 0.25], -1.7, 1.7),
            joint("shoulder_roll", [1.0, 0.0, 0.0], [0.0, 0.0, 0.0], -1.7, 1.7),
            joint("upper_arm_roll", [1.0, 0.0, 0.0], [0.15, 0.0, 0.0], -2.0, 2.0),
            joint("elbow_pitch", [0.0, 1.0, 0.0], [0.15, 0.0, 0.0], -2.2, 0.6),
            joint("wrist_pitch", [0.0, 1.0, 0.0], [0.25, 0.0, 0.0], -1.8, 1.8),
            joint("wrist_yaw", [0.0, 0.0, 1.0], [0.05, 0.0, 0.0], -1.8, 1.8),
            joint("tool_roll", [1.0, 0.0, 0.0], [0.05, 0.0, 0.0], -2.9, 2.9),
        ],
        Transform::new(Vec3::new(0.12, 0.0, 0.0), Quaternion::IDENTITY),
    )
    .expect("arm8 is valid")
}

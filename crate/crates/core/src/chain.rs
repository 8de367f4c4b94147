//! Serial-chain data model and the JSON chain-definition file format.
//!
//! A chain is an ordered list of revolute joints, each with a fixed origin
//! transform from its parent frame, a unit rotation axis, and position
//! limits, followed by a fixed tip (end-effector) offset.

use crate::math::{Quaternion, Transform, Vec3};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const AXIS_UNIT_TOL: f64 = 1e-9;

/// One revolute joint: fixed offset from the parent frame plus a rotation
/// axis with position limits in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub axis: Vec3,
    pub origin: Transform,
    pub lower: f64,
    pub upper: f64,
}

impl JointSpec {
    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// End-effector pose: position in meters plus unit orientation quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quaternion,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quaternion) -> Self {
        Pose { position, orientation }
    }

    /// Flat `[px, py, pz, qx, qy, qz, qw]` layout used by the dense nets
    /// and the file formats.
    pub fn to_vec7(self) -> [f64; 7] {
        let p = self.position;
        let q = self.orientation;
        [p.x, p.y, p.z, q.x, q.y, q.z, q.w]
    }

    pub fn from_vec7(v: [f64; 7]) -> Self {
        Pose::new(
            Vec3::new(v[0], v[1], v[2]),
            Quaternion::new(v[3], v[4], v[5], v[6]),
        )
    }
}

/// Validated serial chain. Immutable after construction; cheap to share
/// across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    pub name: String,
    joints: Vec<JointSpec>,
    tip: Transform,
}

impl KinematicChain {
    /// Validates every joint invariant: unit axis, `lower < upper`,
    /// unique names, at least one joint.
    pub fn new(name: impl Into<String>, joints: Vec<JointSpec>, tip: Transform) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::ChainFormat("chain must have at least one joint".into()));
        }
        for j in &joints {
            if (j.axis.norm() - 1.0).abs() > AXIS_UNIT_TOL {
                return Err(Error::JointInvalid {
                    joint: j.name.clone(),
                    field: "axis",
                    reason: format!("non-unit axis (norm {})", j.axis.norm()),
                });
            }
            if j.lower >= j.upper {
                return Err(Error::JointInvalid {
                    joint: j.name.clone(),
                    field: "limits",
                    reason: format!("lower {} must be < upper {}", j.lower, j.upper),
                });
            }
        }
        for (i, j) in joints.iter().enumerate() {
            if joints[..i].iter().any(|prev| prev.name == j.name) {
                return Err(Error::DuplicateJoint(j.name.clone()));
            }
        }
        Ok(KinematicChain { name: name.into(), joints, tip })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn tip(&self) -> Transform {
        self.tip
    }

    pub fn joint_limits(&self) -> Vec<(f64, f64)> {
        self.joints.iter().map(|j| (j.lower, j.upper)).collect()
    }

    /// Clamp a configuration into the joint limits, in place.
    pub fn clamp(&self, angles: &mut [f64]) {
        for (a, j) in angles.iter_mut().zip(&self.joints) {
            *a = a.clamp(j.lower, j.upper);
        }
    }

    pub fn within_limits(&self, angles: &[f64]) -> bool {
        angles.len() == self.dof()
            && angles
                .iter()
                .zip(&self.joints)
                .all(|(a, j)| *a >= j.lower && *a <= j.upper)
    }

    /// Hex SHA-256 digest of the canonical serialization. Stored in dataset
    /// and model files so mismatched chains are caught at load time.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serialize_chain(self).as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

// --- chain-definition file format ------------------------------------------

#[derive(Serialize, Deserialize)]
struct ChainDoc {
    name: String,
    joints: Vec<JointDoc>,
    tip: FrameDoc,
}

#[derive(Serialize, Deserialize)]
struct JointDoc {
    name: String,
    axis: [f64; 3],
    origin: FrameDoc,
    limits: LimitsDoc,
}

#[derive(Serialize, Deserialize)]
struct FrameDoc {
    xyz: [f64; 3],
    rpy: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct LimitsDoc {
    lower: f64,
    upper: f64,
}

/// Parse a chain-definition document (JSON). Angles are radians, lengths
/// meters; `rpy` are intrinsic roll-pitch-yaw converted to quaternions at
/// load.
pub fn parse_chain(text: &str) -> Result<KinematicChain> {
    let doc: ChainDoc =
        serde_json::from_str(text).map_err(|e| Error::ChainFormat(e.to_string()))?;
    let joints = doc
        .joints
        .into_iter()
        .map(|j| JointSpec {
            name: j.name,
            axis: Vec3::from_array(j.axis),
            origin: Transform::from_xyz_rpy(j.origin.xyz, j.origin.rpy),
            lower: j.limits.lower,
            upper: j.limits.upper,
        })
        .collect();
    KinematicChain::new(doc.name, joints, Transform::from_xyz_rpy(doc.tip.xyz, doc.tip.rpy))
}

/// Serialize a chain back to the document format. Orientations are written
/// as roll-pitch-yaw extracted from the (sign-canonicalized) quaternion.
pub fn serialize_chain(chain: &KinematicChain) -> String {
    let frame = |t: &Transform| {
        let (r, p, y) = t.rotation.canonical().to_rpy();
        // `+ 0.0` folds negative zeros from atan2 into plain zeros.
        FrameDoc { xyz: t.translation.to_array(), rpy: [r + 0.0, p + 0.0, y + 0.0] }
    };
    let doc = ChainDoc {
        name: chain.name.clone(),
        joints: chain
            .joints
            .iter()
            .map(|j| JointDoc {
                name: j.name.clone(),
                axis: j.axis.to_array(),
                origin: frame(&j.origin),
                limits: LimitsDoc { lower: j.lower, upper: j.upper },
            })
            .collect(),
        tip: frame(&chain.tip),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("chain doc serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_doc() -> &'static str {
        r#"{
            "name": "one",
            "joints": [
                {"name": "j0", "axis": [0, 0, 1],
                 "origin": {"xyz": [0, 0, 0], "rpy": [0, 0, 0]},
                 "limits": {"lower": -3.14, "upper": 3.14}}
            ],
            "tip": {"xyz": [1, 0, 0], "rpy": [0, 0, 0]}
        }"#
    }

    #[test]
    fn parses_minimal_single_joint_chain() {
        let chain = parse_chain(minimal_doc()).unwrap();
        assert_eq!(chain.dof(), 1);
        assert_eq!(chain.tip().translation, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_non_unit_axis() {
        let doc = minimal_doc().replace("[0, 0, 1]", "[0, 0, 2]");
        let err = parse_chain(&doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-unit axis") && msg.contains("j0"), "{msg}");
    }

    #[test]
    fn rejects_inverted_limits() {
        let doc = minimal_doc().replace("\"lower\": -3.14", "\"lower\": 4.0");
        let err = parse_chain(&doc).unwrap_err();
        assert!(err.to_string().contains("limits"), "{err}");
    }

    #[test]
    fn rejects_duplicate_joint_names() {
        let doc = r#"{
            "name": "dup",
            "joints": [
                {"name": "j", "axis": [0,0,1], "origin": {"xyz":[0,0,0],"rpy":[0,0,0]}, "limits": {"lower":-1,"upper":1}},
                {"name": "j", "axis": [0,1,0], "origin": {"xyz":[0,0,0],"rpy":[0,0,0]}, "limits": {"lower":-1,"upper":1}}
            ],
            "tip": {"xyz": [0,0,0], "rpy": [0,0,0]}
        }"#;
        let err = parse_chain(doc).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn rejects_malformed_document() {
        assert!(parse_chain("{ not json").is_err());
    }

    #[test]
    fn serializes_and_reparses_field_for_field() {
        let chain = crate::sample_chains::arm8();
        let text = serialize_chain(&chain);
        let back = parse_chain(&text).unwrap();
        assert_eq!(back.dof(), chain.dof());
        assert_eq!(back.name, chain.name);
        for (a, b) in back.joints().iter().zip(chain.joints()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.lower, b.lower);
            assert_eq!(a.upper, b.upper);
            assert!((a.axis - b.axis).norm() < 1e-12);
            assert!((a.origin.translation - b.origin.translation).norm() < 1e-12);
            assert!(a.origin.rotation.dot(b.origin.rotation).abs() > 1.0 - 1e-12);
        }
        // Digest is stable across a round trip.
        assert_eq!(back.digest(), chain.digest());
    }
}

//! [-1, 1] normalization for pose inputs and joint outputs.

use crate::chain::{KinematicChain, Pose};
use crate::dataset::WorkspaceBounds;
use serde::{Deserialize, Serialize};

/// Maps poses into the network's [-1, 1] input interval and network outputs
/// back into the joint limits.
///
/// Because the final layer is tanh-bounded, a denormalized joint value can
/// never fall outside its limits, whatever the pre-activations were.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    /// Per-dimension (min, max) for the 7-D pose. Quaternion components are
    /// already in [-1, 1] and map through unchanged.
    pub pose_bounds: [(f64, f64); 7],
    /// Per-joint (lower, upper), radians.
    pub joint_limits: Vec<(f64, f64)>,
}

impl Normalizer {
    pub fn new(bounds: &WorkspaceBounds, chain: &KinematicChain) -> Self {
        Normalizer {
            pose_bounds: bounds.pose_bounds(),
            joint_limits: chain.joint_limits(),
        }
    }

    pub fn dof(&self) -> usize {
        self.joint_limits.len()
    }

    // Symmetric forms: for (lo, hi) = (-1, 1) both maps reduce to v/1,
    // so quaternion components pass through bit-exactly.
    #[inline]
    fn to_unit(v: f64, lo: f64, hi: f64) -> f64 {
        (2.0 * v - (lo + hi)) / (hi - lo)
    }

    #[inline]
    fn from_unit(y: f64, lo: f64, hi: f64) -> f64 {
        (y * (hi - lo) + lo + hi) * 0.5
    }

    /// The quaternion sign is canonicalized (`w >= 0`) first: q and -q are
    /// the same rotation, and feeding both encodings would force the
    /// network to learn the map twice.
    pub fn normalize_pose(&self, pose: &Pose) -> [f64; 7] {
        let canonical = Pose::new(pose.position, pose.orientation.canonical());
        let v = canonical.to_vec7();
        let mut out = [0.0; 7];
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.pose_bounds[i];
            *o = Self::to_unit(v[i], lo, hi);
        }
        out
    }

    pub fn denormalize_pose(&self, v: &[f64; 7]) -> [f64; 7] {
        let mut out = [0.0; 7];
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.pose_bounds[i];
            *o = Self::from_unit(v[i], lo, hi);
        }
        out
    }

    /// Network output in [-1, 1] to joint angles inside the limits. The
    /// final clamp only trims sub-ulp rounding at the interval ends; the
    /// map itself lands inside [lower, upper].
    pub fn denormalize_joints(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.joint_limits.len());
        y.iter()
            .zip(&self.joint_limits)
            .map(|(&v, &(lo, hi))| Self::from_unit(v, lo, hi).clamp(lo, hi))
            .collect()
    }

    /// Joint angles to normalized coordinates in [-1, 1].
    pub fn normalize_joints(&self, angles: &[f64]) -> Vec<f64> {
        debug_assert_eq!(angles.len(), self.joint_limits.len());
        angles
            .iter()
            .zip(&self.joint_limits)
            .map(|(&a, &(lo, hi))| Self::to_unit(a, lo, hi))
            .collect()
    }

    /// d(theta_j)/d(y_j): the denormalization slope per joint.
    pub fn joint_slope(&self, j: usize) -> f64 {
        let (lo, hi) = self.joint_limits[j];
        0.5 * (hi - lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Quaternion, Vec3};
    use crate::sample_chains::arm8;

    fn normalizer() -> Normalizer {
        let bounds = WorkspaceBounds::new([0.2, -0.9, 0.8], [0.85, 0.0, 1.4]).unwrap();
        Normalizer::new(&bounds, &arm8())
    }

    #[test]
    fn pose_round_trip_is_identity() {
        let n = normalizer();
        let pose = Pose::new(
            Vec3::new(0.5, -0.3, 1.2),
            Quaternion::from_rpy(0.2, -0.4, 1.0),
        );
        let norm = n.normalize_pose(&pose);
        let back = n.denormalize_pose(&norm);
        let orig = pose.to_vec7();
        for i in 0..7 {
            assert!((back[i] - orig[i]).abs() < 1e-12);
        }
        // Quaternion components pass through unchanged.
        for i in 3..7 {
            assert_eq!(norm[i], orig[i]);
        }
    }

    #[test]
    fn joint_round_trip_is_identity() {
        let n = normalizer();
        let angles: Vec<f64> = n
            .joint_limits
            .iter()
            .map(|&(lo, hi)| lo + 0.37 * (hi - lo))
            .collect();
        let y = n.normalize_joints(&angles);
        let back = n.denormalize_joints(&y);
        for (a, b) in angles.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tanh_outputs_always_land_inside_limits() {
        let n = normalizer();
        // Even fully saturated tanh outputs stay on the closed interval.
        for y in [-1.0, 1.0, (1e6f64).tanh(), (-1e6f64).tanh()] {
            let angles = n.denormalize_joints(&vec![y; n.dof()]);
            for (a, &(lo, hi)) in angles.iter().zip(&n.joint_limits) {
                assert!(*a >= lo && *a <= hi);
            }
        }
    }
}

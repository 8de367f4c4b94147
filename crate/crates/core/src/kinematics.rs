//! Forward kinematics, the analytic 7-D pose Jacobian, and pose errors.
//!
//! These are pure functions of immutable inputs: the same chain and
//! configuration always produce bit-identical results within one build,
//! so batches can safely fan out across threads.

use crate::chain::{KinematicChain, Pose};
use crate::math::{quat_angle_deg, Quaternion, Transform, Vec3};

/// Joint configuration: one angle in radians per joint, chain order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig {
    pub angles: Vec<f64>,
}

impl JointConfig {
    pub fn new(angles: Vec<f64>) -> Self {
        JointConfig { angles }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(angles: Vec<f64>) -> Self {
        JointConfig { angles }
    }
}

/// Partials of the 7-D pose w.r.t. each joint angle.
///
/// Rows are `(p_x, p_y, p_z, q_x, q_y, q_z, q_w)`, columns are joints,
/// stored dense (dof <= 8 in practice).
#[derive(Debug, Clone)]
pub struct PoseJacobian {
    pub rows: [Vec<f64>; 7],
}

impl PoseJacobian {
    fn zeros(dof: usize) -> Self {
        PoseJacobian { rows: std::array::from_fn(|_| vec![0.0; dof]) }
    }

    pub fn dof(&self) -> usize {
        self.rows[0].len()
    }

    /// `J^T g` for a 7-vector `g`: gradient pullback from pose space to
    /// joint space.
    pub fn transpose_apply(&self, g: &[f64; 7]) -> Vec<f64> {
        let dof = self.dof();
        let mut out = vec![0.0; dof];
        for (r, row) in self.rows.iter().enumerate() {
            let gr = g[r];
            if gr != 0.0 {
                for (o, v) in out.iter_mut().zip(row) {
                    *o += gr * v;
                }
            }
        }
        out
    }
}

/// Tip pose of the chain in the base frame.
pub fn fk(chain: &KinematicChain, config: &[f64]) -> Pose {
    assert_eq!(
        config.len(),
        chain.dof(),
        "config has {} angles, chain has {} joints",
        config.len(),
        chain.dof()
    );
    let mut t = Transform::IDENTITY;
    for (joint, &angle) in chain.joints().iter().zip(config) {
        t = t.compose(joint.origin);
        t = t.compose(Transform::new(
            Vec3::ZERO,
            Quaternion::from_axis_angle(joint.axis, angle),
        ));
    }
    t = t.compose(chain.tip());
    Pose::new(t.translation, t.rotation.normalized())
}

/// Analytic pose Jacobian at `config`.
///
/// Positional rows use the geometric Jacobian (world axis crossed with the
/// lever arm to the tip); quaternion rows use the product rule
/// `dq/dtheta_i = 0.5 * (world axis as pure quaternion) * q`.
pub fn fk_jacobian(chain: &KinematicChain, config: &[f64]) -> PoseJacobian {
    assert_eq!(
        config.len(),
        chain.dof(),
        "config has {} angles, chain has {} joints",
        config.len(),
        chain.dof()
    );
    let dof = chain.dof();
    let mut world_axes = Vec::with_capacity(dof);
    let mut joint_origins = Vec::with_capacity(dof);

    let mut t = Transform::IDENTITY;
    for (joint, &angle) in chain.joints().iter().zip(config) {
        t = t.compose(joint.origin);
        world_axes.push(t.rotation.rotate(joint.axis));
        joint_origins.push(t.translation);
        t = t.compose(Transform::new(
            Vec3::ZERO,
            Quaternion::from_axis_angle(joint.axis, angle),
        ));
    }
    t = t.compose(chain.tip());
    let tip_pos = t.translation;
    let tip_rot = t.rotation.normalized();

    let mut jac = PoseJacobian::zeros(dof);
    for i in 0..dof {
        let lever = tip_pos - joint_origins[i];
        let dp = world_axes[i].cross(lever);
        jac.rows[0][i] = dp.x;
        jac.rows[1][i] = dp.y;
        jac.rows[2][i] = dp.z;

        let a = world_axes[i];
        let dq = Quaternion::new(a.x, a.y, a.z, 0.0).mul_raw(tip_rot);
        jac.rows[3][i] = 0.5 * dq.x;
        jac.rows[4][i] = 0.5 * dq.y;
        jac.rows[5][i] = 0.5 * dq.z;
        jac.rows[6][i] = 0.5 * dq.w;
    }
    jac
}

/// Position and rotation error between a target and a reached pose.
#[derive(Debug, Clone, Copy)]
pub struct PoseError {
    /// Euclidean position distance in millimeters.
    pub pos_mm: f64,
    /// Geodesic rotation angle in degrees.
    pub rot_deg: f64,
    /// Per-axis breakdown for axis-averaged reporting: position differences
    /// in millimeters plus roll-pitch-yaw of the relative rotation in
    /// degrees, all absolute values.
    pub per_axis: [f64; 6],
}

/// Errors of `reached` against `target`. The rotational part is symmetric
/// and double-cover safe.
pub fn pose_error(target: &Pose, reached: &Pose) -> PoseError {
    let d = reached.position - target.position;
    let pos_mm = d.norm() * 1000.0;
    let rot_deg = quat_angle_deg(target.orientation, reached.orientation);

    let mut rel = target.orientation.conjugate().mul_raw(reached.orientation).normalized();
    if rel.w < 0.0 {
        rel = -rel;
    }
    let (roll, pitch, yaw) = rel.to_rpy();
    let per_axis = [
        d.x.abs() * 1000.0,
        d.y.abs() * 1000.0,
        d.z.abs() * 1000.0,
        roll.abs().to_degrees(),
        pitch.abs().to_degrees(),
        yaw.abs().to_degrees(),
    ];
    PoseError { pos_mm, rot_deg, per_axis }
}

//! Weighted multi-objective goals.
//!
//! A goal set combines Cartesian goals (position / rotation reconstruction
//! error of the reached pose) with joint-space goals, each with a positive
//! weight. The same weighted sum drives the training loss, the genetic
//! algorithm's cost ranking, and the per-solution costs reported by the
//! evaluators. Cartesian terms are mean absolute errors; joint terms are
//! mean squared, which keeps small residuals from dominating the posture
//! objective.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CartesianGoalKind {
    /// Mean absolute error over the 3 position components, meters.
    PositionMae,
    /// Mean absolute error over the 4 quaternion components, sign-resolved.
    RotationMae,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianGoal {
    pub kind: CartesianGoalKind,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointGoalKind {
    /// Mean squared displacement of the selected joints from zero, rad^2.
    ZeroController,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointGoal {
    pub kind: JointGoalKind,
    pub joint_indices: Vec<usize>,
    pub weight: f64,
}

/// The full constraint set applied per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSet {
    pub cartesian: Vec<CartesianGoal>,
    pub joint: Vec<JointGoal>,
}

impl GoalSet {
    /// Position 1.0 / rotation 0.5, no joint goals.
    pub fn cartesian_default() -> Self {
        GoalSet {
            cartesian: vec![
                CartesianGoal { kind: CartesianGoalKind::PositionMae, weight: 1.0 },
                CartesianGoal { kind: CartesianGoalKind::RotationMae, weight: 0.5 },
            ],
            joint: Vec::new(),
        }
    }

    /// Position-only goal, used when the task leaves orientation free.
    pub fn position_only() -> Self {
        GoalSet {
            cartesian: vec![CartesianGoal { kind: CartesianGoalKind::PositionMae, weight: 1.0 }],
            joint: Vec::new(),
        }
    }

    /// Desk default: Cartesian goals plus a weight-0.05 zero-displacement
    /// goal over the trailing `dof - 6` redundant joints (none for chains
    /// of 6 DoF or fewer).
    pub fn desk_default(dof: usize) -> Self {
        let mut goals = Self::cartesian_default();
        if dof > 6 {
            goals.joint.push(JointGoal {
                kind: JointGoalKind::ZeroController,
                joint_indices: (6..dof).collect(),
                weight: 0.05,
            });
        }
        goals
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        if self.cartesian.is_empty() && self.joint.is_empty() {
            return Err(Error::InvalidArgument("goal set is empty".into()));
        }
        for g in &self.cartesian {
            if !(g.weight > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "cartesian goal weight must be positive, got {}",
                    g.weight
                )));
            }
        }
        for g in &self.joint {
            if !(g.weight > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "joint goal weight must be positive, got {}",
                    g.weight
                )));
            }
            if g.joint_indices.is_empty() {
                return Err(Error::InvalidArgument("joint goal selects no joints".into()));
            }
            if let Some(&bad) = g.joint_indices.iter().find(|&&i| i >= dof) {
                return Err(Error::InvalidArgument(format!(
                    "joint goal index {bad} out of range for a {dof}-DoF chain"
                )));
            }
        }
        Ok(())
    }

    pub fn scale_weights(&mut self, factor: f64) {
        for g in &mut self.cartesian {
            g.weight *= factor;
        }
        for g in &mut self.joint {
            g.weight *= factor;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_default_selects_redundant_joints() {
        let g = GoalSet::desk_default(8);
        assert_eq!(g.joint.len(), 1);
        assert_eq!(g.joint[0].joint_indices, vec![6, 7]);
        assert!(GoalSet::desk_default(4).joint.is_empty());
    }

    #[test]
    fn validation_catches_bad_weights_and_indices() {
        let mut g = GoalSet::cartesian_default();
        g.cartesian[0].weight = 0.0;
        assert!(g.validate(4).is_err());

        let mut g = GoalSet::desk_default(8);
        g.joint[0].joint_indices = vec![9];
        assert!(g.validate(8).is_err());
        assert!(GoalSet::desk_default(8).validate(8).is_ok());
    }

    #[test]
    fn goal_sets_round_trip_through_json() {
        let g = GoalSet::desk_default(8);
        let text = serde_json::to_string(&g).unwrap();
        let back: GoalSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        assert!(text.contains("zero_controller"));
        assert!(text.contains("position_mae"));
    }
}

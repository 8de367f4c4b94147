//! Shared test fixtures: random chains and an independent homogeneous
//! 4x4 matrix-chain implementation of forward kinematics.
//!
//! The oracle deliberately avoids the crate's quaternion algebra: rotations
//! are built with Rodrigues' formula and composed as plain matrices.

#![allow(dead_code)]

use ngik_core::chain::{JointSpec, KinematicChain};
use ngik_core::math::{Quaternion, Transform, Vec3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub type Mat4 = [[f64; 4]; 4];

pub fn mat4_identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// Rodrigues rotation about a unit axis, embedded in a homogeneous matrix.
pub fn mat4_axis_angle(axis: [f64; 3], angle: f64) -> Mat4 {
    let (x, y, z) = (axis[0], axis[1], axis[2]);
    let k = [[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]];
    let mut k2 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                k2[i][j] += k[i][l] * k[l][j];
            }
        }
    }
    let (s, c) = angle.sin_cos();
    let mut m = mat4_identity();
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (if i == j { 1.0 } else { 0.0 }) + s * k[i][j] + (1.0 - c) * k2[i][j];
        }
    }
    m
}

/// Intrinsic roll-pitch-yaw as a matrix product Rx * Ry * Rz, with
/// translation.
pub fn mat4_from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Mat4 {
    let rx = mat4_axis_angle([1.0, 0.0, 0.0], rpy[0]);
    let ry = mat4_axis_angle([0.0, 1.0, 0.0], rpy[1]);
    let rz = mat4_axis_angle([0.0, 0.0, 1.0], rpy[2]);
    let mut m = mat4_mul(&mat4_mul(&rx, &ry), &rz);
    m[0][3] = xyz[0];
    m[1][3] = xyz[1];
    m[2][3] = xyz[2];
    m
}

fn transform_to_mat4(t: &Transform) -> Mat4 {
    let r = t.rotation.to_matrix();
    let mut m = mat4_identity();
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = r[i][j];
        }
    }
    m[0][3] = t.translation.x;
    m[1][3] = t.translation.y;
    m[2][3] = t.translation.z;
    m
}

/// Oracle FK: chain of 4x4 matrix products.
pub fn fk_oracle(chain: &KinematicChain, config: &[f64]) -> Mat4 {
    let mut m = mat4_identity();
    for (joint, &angle) in chain.joints().iter().zip(config) {
        m = mat4_mul(&m, &transform_to_mat4(&joint.origin));
        m = mat4_mul(&m, &mat4_axis_angle(joint.axis.to_array(), angle));
    }
    mat4_mul(&m, &transform_to_mat4(&chain.tip()))
}

pub fn random_unit_axis(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 {
            return v.scaled(1.0 / n);
        }
    }
}

/// Random serial chain with the given DoF: arbitrary unit axes, origins
/// within half a meter, and generous limits.
pub fn random_chain(dof: usize, rng: &mut ChaCha8Rng) -> KinematicChain {
    let joints = (0..dof)
        .map(|i| JointSpec {
            name: format!("j{i}"),
            axis: random_unit_axis(rng),
            origin: Transform::new(
                Vec3::new(
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                ),
                Quaternion::from_rpy(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ),
            ),
            lower: rng.random_range(-3.0..-0.5),
            upper: rng.random_range(0.5..3.0),
        })
        .collect();
    let tip = Transform::new(
        Vec3::new(rng.random_range(0.05..0.3), 0.0, 0.0),
        Quaternion::IDENTITY,
    );
    KinematicChain::new(format!("random{dof}"), joints, tip).unwrap()
}

pub fn random_config(chain: &KinematicChain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    chain
        .joints()
        .iter()
        .map(|j| rng.random_range(j.lower..=j.upper))
        .collect()
}

//! Forward kinematics and Jacobian against independent oracles.

mod common;

use common::{fk_oracle, random_chain, random_config};
use ngik_core::kinematics::{fk, fk_jacobian, pose_error};
use ngik_core::math::Vec3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[test]
fn fk_matches_matrix_chain_oracle_across_dofs() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = std::time::Instant::now();
    // 1000 (chain, config) pairs spread over 2..8 DoF.
    for round in 0..250 {
        for dof in [2usize, 4, 6, 8] {
            let chain = random_chain(dof, &mut rng);
            let config = random_config(&chain, &mut rng);
            let pose = fk(&chain, &config);
            let m = fk_oracle(&chain, &config);

            let p = [m[0][3], m[1][3], m[2][3]];
            let d = (pose.position - Vec3::new(p[0], p[1], p[2])).norm();
            assert!(d < 1e-10, "round {round} dof {dof}: position off by {d}");

            let r = pose.orientation.to_matrix();
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (r[i][j] - m[i][j]).abs() < 1e-10,
                        "round {round} dof {dof}: rotation entry ({i},{j})"
                    );
                }
            }
        }
    }
    assert!(
        start.elapsed().as_secs_f64() < 1.0,
        "oracle comparison took {:?}",
        start.elapsed()
    );
}

#[test]
fn jacobian_matches_central_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let h = 1e-6;
    for dof in [2usize, 4, 8] {
        let chain = random_chain(dof, &mut rng);
        for _ in 0..100 {
            let config = random_config(&chain, &mut rng);
            let jac = fk_jacobian(&chain, &config);
            for j in 0..dof {
                let mut up = config.clone();
                up[j] += h;
                let mut down = config.clone();
                down[j] -= h;
                let pu = fk(&chain, &up).to_vec7();
                let pd = fk(&chain, &down).to_vec7();

                let mut diff2 = 0.0;
                let mut norm2 = 0.0;
                for r in 0..7 {
                    let fd = (pu[r] - pd[r]) / (2.0 * h);
                    let an = jac.rows[r][j];
                    diff2 += (fd - an) * (fd - an);
                    norm2 += an * an;
                }
                let rel = diff2.sqrt() / norm2.sqrt().max(1e-9);
                assert!(rel < 1e-4, "dof {dof} column {j}: rel err {rel}");
            }
        }
    }
}

#[test]
fn rotation_error_matches_matrix_log_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let chain = random_chain(6, &mut rng);
        let a = fk(&chain, &random_config(&chain, &mut rng));
        let b = fk(&chain, &random_config(&chain, &mut rng));
        let e = pose_error(&a, &b);

        // Matrix-log angle: acos((trace(Ra^T Rb) - 1) / 2).
        let ra = a.orientation.to_matrix();
        let rb = b.orientation.to_matrix();
        let mut trace = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                trace += ra[k][i] * rb[k][i];
            }
        }
        let oracle_deg = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
        assert!(
            (e.rot_deg - oracle_deg).abs() < 1e-9,
            "{} vs oracle {}",
            e.rot_deg,
            oracle_deg
        );
    }
}

#[test]
fn fk_batch_runtime_is_fast() {
    let chain = ngik_core::sample_chains::arm8();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let configs: Vec<Vec<f64>> = (0..1000).map(|_| random_config(&chain, &mut rng)).collect();

    // Warm-up.
    let mut acc = 0.0;
    for c in &configs {
        acc += fk(&chain, c).position.x;
    }
    let start = std::time::Instant::now();
    for c in &configs {
        acc += fk(&chain, c).position.x;
    }
    let elapsed = start.elapsed();
    assert!(acc.is_finite());
    assert!(
        elapsed.as_secs_f64() < 0.010,
        "1000 FK calls took {elapsed:?}, expected under 10 ms"
    );
}

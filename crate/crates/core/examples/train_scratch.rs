//! Scratch driver for sizing training runs. Not part of the test suite.

use ngik_core::dataset::{accept_all, generate, split, WorkspaceBounds};
use ngik_core::goals::GoalSet;
use ngik_core::neural::{mlp_preset, DenseNet, Normalizer, Workspace};
use ngik_core::sample_chains::planar2;
use ngik_core::training::{train_mlp, Adam, TrainConfig};
use ngik_core::{fk, pose_error};
use rand::prelude::*;

fn percentiles(mut v: Vec<f64>) -> (f64, f64, f64, f64) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    (v[n / 2], v[(n as f64 * 0.9) as usize], v[(n as f64 * 0.99) as usize], v[n - 1])
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("cycle");
    let n: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(5000);
    let epochs: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(10);

    let spatial = std::env::var("CHAIN").map(|c| c == "spatial4").unwrap_or(false);
    let chain = if spatial { ngik_core::sample_chains::spatial4() } else { planar2() };
    let bounds = if spatial {
        WorkspaceBounds::new([-0.8, -0.8, -0.3], [0.8, 0.8, 1.1]).unwrap()
    } else {
        WorkspaceBounds::new([-2.5, -2.5, -1.0], [2.5, 2.5, 1.0]).unwrap()
    };
    let records = generate(&chain, bounds, n, 7, &accept_all).unwrap();
    let (train, _test, val) = split(records, 0.10, 0.01, 7).unwrap();
    let normalizer = Normalizer::new(&bounds, &chain);

    let preset = std::env::var("PRESET").is_ok();
    let net: DenseNet = if preset {
        mlp_preset(Workspace::Small, chain.dof(), 0.1)
    } else {
        {
        let tails: usize = std::env::var("TAILS").map(|s| s.parse().unwrap()).unwrap_or(2);
        let w: usize = std::env::var("WIDTH").map(|s| s.parse().unwrap()).unwrap_or(128);
        DenseNet::with_tanh_tail(vec![7, w, w, w / 2, 2], tails)
    }
    };
    println!("net layers {:?} params {}", net.layer_sizes(), net.num_params());

    let mut cfg = TrainConfig::desk_mlp(Workspace::Small);
    cfg.epochs = epochs;
    cfg.rng_seed = 1;
    if let Ok(lr) = std::env::var("LR") {
        cfg.lr0 = lr.parse().unwrap();
    }
    if let Ok(b) = std::env::var("BATCH") {
        cfg.batch_size = b.parse().unwrap();
    }

    match mode {
        "cycle" => {
            let goals = GoalSet::cartesian_default();
            let t0 = std::time::Instant::now();
            let (model, report) =
                train_mlp(&chain, &train, &val, &net, &normalizer, &cfg, &goals).unwrap();
            println!("trained in {:?}", t0.elapsed());
            for e in report.epochs.iter().rev().take(3).rev() {
                println!(
                    "epoch {:3}  loss {:.5}  val_pos {:.3} mm  val_rot {:.3} deg",
                    e.epoch, e.train_loss, e.val_pos_mm, e.val_rot_deg
                );
            }
            // Error percentiles + output spread on validation.
            let mut pos = Vec::new();
            let mut outs = Vec::new();
            for rec in &val {
                let theta = model.solve_batch(&[rec.pose], &[]).remove(0);
                outs.push(theta.clone());
                let e = pose_error(&rec.pose, &fk(&chain, &theta));
                pos.push(e.pos_mm);
            }
            let (p50, p90, p99, max) = percentiles(pos);
            println!("val pos mm: p50 {p50:.2} p90 {p90:.2} p99 {p99:.2} max {max:.2}");
            let mean0 = outs.iter().map(|o| o[0]).sum::<f64>() / outs.len() as f64;
            let var0 = outs.iter().map(|o| (o[0] - mean0).powi(2)).sum::<f64>() / outs.len() as f64;
            let mean1 = outs.iter().map(|o| o[1]).sum::<f64>() / outs.len() as f64;
            let var1 = outs.iter().map(|o| (o[1] - mean1).powi(2)).sum::<f64>() / outs.len() as f64;
            println!("output spread: theta0 mean {mean0:.3} var {var0:.3}; theta1 mean {mean1:.3} var {var1:.3}");
        }
        "supervised" => {
            // Plain MSE regression onto the normalized ground-truth angles:
            // checks the net/optimizer independent of the cycle loss.
            let mut net = net.clone();
            net.init_uniform(42);
            let mut adam = Adam::new(&net);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            let t0 = std::time::Instant::now();
            for epoch in 0..cfg.epochs {
                let lr = cfg.lr0 * (1.0 - epoch as f64 / cfg.epochs as f64);
                let mut order: Vec<usize> = (0..train.len()).collect();
                for i in (1..order.len()).rev() {
                    let j = rng.random_range(0..=i);
                    order.swap(i, j);
                }
                let mut loss_acc = 0.0;
                let mut steps = 0;
                for chunk in order.chunks(cfg.batch_size) {
                    let batch = chunk.len();
                    let mut inputs = vec![0.0; batch * 7];
                    let mut targets = vec![0.0; batch * 2];
                    for (r, &i) in chunk.iter().enumerate() {
                        inputs[r * 7..(r + 1) * 7]
                            .copy_from_slice(&normalizer.normalize_pose(&train[i].pose));
                        targets[r * 2..(r + 1) * 2]
                            .copy_from_slice(&normalizer.normalize_joints(&train[i].config.angles));
                    }
                    let (y, tape) = net.forward(&inputs);
                    let mut grad = vec![0.0; y.len()];
                    let mut loss = 0.0;
                    for i in 0..y.len() {
                        let d = y[i] - targets[i];
                        loss += d * d;
                        grad[i] = 2.0 * d / y.len() as f64;
                    }
                    loss_acc += loss / y.len() as f64;
                    steps += 1;
                    let grads = net.backward(tape, &grad);
                    adam.step(&mut net, &grads, lr);
                }
                if epoch % 5 == 0 || epoch == cfg.epochs - 1 {
                    let mut pos = Vec::new();
                    for rec in &val {
                        let y = net.infer(&normalizer.normalize_pose(&rec.pose));
                        let theta = normalizer.denormalize_joints(&y);
                        pos.push(pose_error(&rec.pose, &fk(&chain, &theta)).pos_mm);
                    }
                    let mean = pos.iter().sum::<f64>() / pos.len() as f64;
                    println!(
                        "epoch {:3}  mse {:.6}  val_pos {:.2} mm",
                        epoch,
                        loss_acc / steps as f64,
                        mean
                    );
                }
            }
            println!("supervised trained in {:?}", t0.elapsed());
        }
        other => panic!("unknown mode {other}"),
    }
}

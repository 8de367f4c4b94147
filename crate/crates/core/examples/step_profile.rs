//! One-off step-time breakdown probe.
use ngik_core::dataset::{accept_all, generate, WorkspaceBounds};
use ngik_core::goals::GoalSet;
use ngik_core::neural::{mlp_preset, Normalizer, Workspace};
use ngik_core::sample_chains::planar2;
use ngik_core::training::{cycle_loss, Adam};

fn main() {
    let chain = planar2();
    let bounds = WorkspaceBounds::new([-2.5, -2.5, -1.0], [2.5, 2.5, 1.0]).unwrap();
    let records = generate(&chain, bounds, 64, 7, &accept_all).unwrap();
    let normalizer = Normalizer::new(&bounds, &chain);
    let mut net = mlp_preset(Workspace::Small, 2, 0.1);
    net.init_uniform(1);
    let goals = GoalSet::cartesian_default();
    let poses: Vec<_> = records.iter().take(32).map(|r| r.pose).collect();

    let inputs: Vec<f64> = poses.iter().flat_map(|p| normalizer.normalize_pose(p)).collect();
    let reps = 200;

    let t = std::time::Instant::now();
    for _ in 0..reps { let _ = net.infer(&inputs); }
    println!("infer:       {:.3} ms", t.elapsed().as_secs_f64() * 1000.0 / reps as f64);

    let t = std::time::Instant::now();
    for _ in 0..reps { let _ = net.forward(&inputs); }
    println!("forward:     {:.3} ms", t.elapsed().as_secs_f64() * 1000.0 / reps as f64);

    let (y, _) = net.forward(&inputs);
    let grad_out = vec![0.001; y.len()];
    let t = std::time::Instant::now();
    for _ in 0..reps {
        let (_, tape) = net.forward(&inputs);
        let _ = net.backward(tape, &grad_out);
    }
    println!("fwd+bwd:     {:.3} ms", t.elapsed().as_secs_f64() * 1000.0 / reps as f64);

    let mut adam = Adam::new(&net);
    let (_, tape) = net.forward(&inputs);
    let grads = net.backward(tape, &grad_out);
    let t = std::time::Instant::now();
    for _ in 0..reps { adam.step(&mut net, &grads, 1e-12); }
    println!("adam:        {:.3} ms", t.elapsed().as_secs_f64() * 1000.0 / reps as f64);

    let t = std::time::Instant::now();
    for _ in 0..reps { let _ = cycle_loss(&chain, &net, &normalizer, &poses, &[], 0, &goals); }
    println!("cycle_loss:  {:.3} ms", t.elapsed().as_secs_f64() * 1000.0 / reps as f64);
}

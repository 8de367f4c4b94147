//! One-off kernel throughput probe.
use ngik_core::neural::matmul::{forward_affine, grad_input, grad_weights};

fn main() {
    let (n, k, m) = (32usize, 338usize, 225usize);
    let x: Vec<f64> = (0..n * k).map(|i| (i as f64).sin()).collect();
    let w: Vec<f64> = (0..k * m).map(|i| (i as f64).cos()).collect();
    let b = vec![0.1; m];
    let mut z = vec![0.0; n * m];
    let dz: Vec<f64> = (0..n * m).map(|i| (i as f64 * 0.3).sin()).collect();
    let mut dw = vec![0.0; k * m];
    let mut dx = vec![0.0; n * k];

    let reps = 2000;
    let flops = (2 * n * k * m * reps) as f64;

    let t = std::time::Instant::now();
    for _ in 0..reps { forward_affine(&x, &w, &b, n, k, m, &mut z); }
    println!("forward: {:.2} GFLOP/s", flops / t.elapsed().as_secs_f64() / 1e9);

    let t = std::time::Instant::now();
    for _ in 0..reps { grad_weights(&x, &dz, n, k, m, &mut dw); }
    println!("grad_w:  {:.2} GFLOP/s", flops / t.elapsed().as_secs_f64() / 1e9);

    let t = std::time::Instant::now();
    for _ in 0..reps { grad_input(&dz, &w, n, k, m, &mut dx); }
    println!("grad_x:  {:.2} GFLOP/s", flops / t.elapsed().as_secs_f64() / 1e9);
    println!("checksum {}", z[7] + dw[9] + dx[11]);
}

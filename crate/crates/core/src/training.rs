//! Cycle-consistent training.
//!
//! Joint space is treated as a semi-hidden domain: the network maps target
//! poses to joint angles, forward kinematics maps them back, and the loss
//! is the weighted multi-objective cost of the reconstructed pose against
//! the target. The generator variant adds a variance-matching term that
//! spreads a batch of solutions for one pose over the nullspace instead of
//! collapsing to a single configuration.

use crate::chain::{KinematicChain, Pose};
use crate::goals::{CartesianGoalKind, GoalSet, JointGoalKind};
use crate::kinematics::{fk, fk_jacobian};
use crate::neural::{DenseNet, Gradients, ModelKind, NeuralModel, Normalizer};
use crate::rngutil::{derive_seed, stream_rng};
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Gradient norms above this count as exploding even while still finite.
const DIVERGENCE_GRAD_NORM: f64 = 1e6;

/// Hyperparameters for one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr0: f64,
    pub epochs: usize,
    /// Global-norm gradient clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    /// Re-initializations allowed after a divergent run.
    pub restarts: u32,
    pub rng_seed: u64,
    /// Weight of the variance-matching term (generator only).
    pub variance_weight: f64,
    /// Noise vector width (generator only).
    pub noise_dim: usize,
}

impl TrainConfig {
    /// Full-scale regressor presets: the tuned reference hyperparameters
    /// for million-sample training runs.
    pub fn full_scale_mlp(workspace: crate::neural::Workspace) -> Self {
        let (batch_size, lr0, epochs) = match workspace {
            crate::neural::Workspace::Small => (150, 1.6e-4, 300),
            crate::neural::Workspace::Full => (300, 1.0e-4, 100),
        };
        TrainConfig {
            batch_size,
            lr0,
            epochs,
            grad_clip: Some(1.0),
            restarts: 2,
            rng_seed: 0,
            variance_weight: 0.0,
            noise_dim: 0,
        }
    }

    /// Full-scale generator presets. No gradient clipping: it would stop
    /// the variance term from being minimized properly.
    pub fn full_scale_gan(workspace: crate::neural::Workspace) -> Self {
        let (batch_size, lr0, noise_dim) = match workspace {
            crate::neural::Workspace::Small => (350, 2.1e-4, 8),
            crate::neural::Workspace::Full => (300, 1.9e-4, 10),
        };
        TrainConfig {
            batch_size,
            lr0,
            epochs: 50,
            grad_clip: None,
            restarts: 9,
            rng_seed: 0,
            variance_weight: 0.5,
            noise_dim,
        }
    }

    /// Desk-scale regressor defaults for 50k-sample runs: smaller batches
    /// and a larger learning rate make up for the collapsed step count,
    /// with the desk default of 30 epochs.
    pub fn desk_mlp(workspace: crate::neural::Workspace) -> Self {
        TrainConfig {
            batch_size: 64,
            lr0: 4e-3,
            epochs: 30,
            ..Self::full_scale_mlp(workspace)
        }
    }

    /// Desk-scale generator defaults.
    pub fn desk_gan(workspace: crate::neural::Workspace) -> Self {
        TrainConfig {
            batch_size: 64,
            lr0: 3e-3,
            epochs: 30,
            ..Self::full_scale_gan(workspace)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(self.lr0 >= 0.0) {
            return Err(Error::InvalidArgument("lr0 must be non-negative".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch validation metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_pos_mm: f64,
    pub val_rot_deg: f64,
}

/// Outcome of a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Set when any loss or gradient became non-finite (or exploded past
    /// the divergence norm) in the final attempt.
    pub diverged: bool,
    pub restarts_used: u32,
    pub best_epoch: usize,
    pub wall_time_ms: f64,
}

impl TrainReport {
    /// Equality ignoring wall time, for reproducibility checks.
    pub fn same_outcome(&self, other: &TrainReport) -> bool {
        self.epochs == other.epochs
            && self.diverged == other.diverged
            && self.restarts_used == other.restarts_used
            && self.best_epoch == other.best_epoch
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_loss,val_pos_mm,val_rot_deg\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                e.epoch, e.lr, e.train_loss, e.val_pos_mm, e.val_rot_deg
            ));
        }
        out
    }
}

// --- losses -----------------------------------------------------------------

/// Per-sample weighted cost of a reached pose/configuration against a
/// target, plus the gradient w.r.t. the 7-D reached pose and the raw joint
/// angles.
struct SampleCost {
    cost: f64,
    d_pose: [f64; 7],
    d_theta: Vec<f64>,
}

fn sample_cost_and_grads(
    target: &Pose,
    reached: &Pose,
    theta: &[f64],
    goals: &GoalSet,
) -> SampleCost {
    let tv = target.to_vec7();
    let rv = reached.to_vec7();
    let mut cost = 0.0;
    let mut d_pose = [0.0; 7];
    let mut d_theta = vec![0.0; theta.len()];

    // Resolve the quaternion double cover once per sample: compare the
    // reconstruction against the closer of q and -q.
    let direct: f64 = (3..7).map(|i| (rv[i] - tv[i]).abs()).sum();
    let flipped: f64 = (3..7).map(|i| (rv[i] + tv[i]).abs()).sum();
    let sign = if flipped < direct { -1.0 } else { 1.0 };

    for g in &goals.cartesian {
        match g.kind {
            CartesianGoalKind::PositionMae => {
                let mut acc = 0.0;
                for i in 0..3 {
                    let d = rv[i] - tv[i];
                    acc += d.abs();
                    d_pose[i] += g.weight * d.signum() / 3.0;
                }
                cost += g.weight * acc / 3.0;
            }
            CartesianGoalKind::RotationMae => {
                let mut acc = 0.0;
                for i in 3..7 {
                    let d = sign * rv[i] - tv[i];
                    acc += d.abs();
                    d_pose[i] += g.weight * sign * d.signum() / 4.0;
                }
                cost += g.weight * acc / 4.0;
            }
        }
    }
    for g in &goals.joint {
        match g.kind {
            JointGoalKind::ZeroController => {
                let n = g.joint_indices.len() as f64;
                let mut acc = 0.0;
                for &j in &g.joint_indices {
                    acc += theta[j] * theta[j];
                    d_theta[j] += g.weight * 2.0 * theta[j] / n;
                }
                cost += g.weight * acc / n;
            }
        }
    }
    SampleCost { cost, d_pose, d_theta }
}

/// Weighted multi-objective cost of a single configuration against a
/// target pose (no gradients). Shared by the solvers and evaluators.
pub fn config_cost(
    chain: &KinematicChain,
    config: &[f64],
    target: &Pose,
    goals: &GoalSet,
) -> f64 {
    let reached = fk(chain, config);
    sample_cost_and_grads(target, &reached, config, goals).cost
}

/// Cycle loss over a batch: infer joint angles, map back through FK, apply
/// the weighted goals. Returns the scalar loss and the parameter gradients.
///
/// `noise` must hold `targets.len() * noise_dim` values; pass an empty
/// slice (and zero width) for the plain regressor.
pub fn cycle_loss(
    chain: &KinematicChain,
    net: &DenseNet,
    normalizer: &Normalizer,
    targets: &[Pose],
    noise: &[f64],
    noise_dim: usize,
    goals: &GoalSet,
) -> (f64, Gradients) {
    assert!(!targets.is_empty(), "cycle loss needs a non-empty batch");
    let batch = targets.len();
    let dof = normalizer.dof();
    let in_dim = net.input_dim();
    assert_eq!(in_dim, 7 + noise_dim, "network input width mismatch");
    assert_eq!(noise.len(), batch * noise_dim, "noise shape mismatch");

    let mut inputs = vec![0.0; batch * in_dim];
    for (r, t) in targets.iter().enumerate() {
        inputs[r * in_dim..r * in_dim + 7].copy_from_slice(&normalizer.normalize_pose(t));
        if noise_dim > 0 {
            inputs[r * in_dim + 7..(r + 1) * in_dim]
                .copy_from_slice(&noise[r * noise_dim..(r + 1) * noise_dim]);
        }
    }

    let (y, tape) = net.forward(&inputs);

    let mut costs = vec![0.0; batch];
    let mut d_y = vec![0.0; batch * dof];
    costs
        .par_iter_mut()
        .zip(d_y.par_chunks_mut(dof))
        .enumerate()
        .for_each(|(r, (cost, dy_row))| {
            let theta = normalizer.denormalize_joints(&y[r * dof..(r + 1) * dof]);
            let reached = fk(chain, &theta);
            let jac = fk_jacobian(chain, &theta);
            let sc = sample_cost_and_grads(&targets[r], &reached, &theta, goals);
            *cost = sc.cost;
            let mut d_theta = jac.transpose_apply(&sc.d_pose);
            for (dt, extra) in d_theta.iter_mut().zip(&sc.d_theta) {
                *dt += extra;
            }
            for j in 0..dof {
                dy_row[j] = d_theta[j] * normalizer.joint_slope(j) / batch as f64;
            }
        });

    let loss = costs.iter().sum::<f64>() / batch as f64;
    let grads = net.backward(tape, &d_y);
    (loss, grads)
}

/// Variance-matching loss: squared difference between the mean per-dimension
/// variance of the normalized solution batch and of the noise batch.
/// Variances are population variances over the batch rows.
pub fn variance_loss(
    theta_norm: &[f64],
    dof: usize,
    noise: &[f64],
    noise_dim: usize,
) -> Result<f64> {
    let batch = theta_norm.len() / dof.max(1);
    if batch < 2 || theta_norm.len() != batch * dof {
        return Err(Error::InvalidArgument(
            "variance loss needs at least two solution rows".into(),
        ));
    }
    if noise_dim == 0 || noise.len() != batch * noise_dim {
        return Err(Error::InvalidArgument("noise batch shape mismatch".into()));
    }
    let v_theta = mean_dim_variance(theta_norm, batch, dof);
    let v_noise = mean_dim_variance(noise, batch, noise_dim);
    let d = v_theta - v_noise;
    Ok(d * d)
}

fn mean_dim_variance(data: &[f64], rows: usize, cols: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..cols {
        let mut mean = 0.0;
        for r in 0..rows {
            mean += data[r * cols + c];
        }
        mean /= rows as f64;
        let mut var = 0.0;
        for r in 0..rows {
            let d = data[r * cols + c] - mean;
            var += d * d;
        }
        acc += var / rows as f64;
    }
    acc / cols as f64
}

/// Gradient of [`variance_loss`] w.r.t. the normalized solutions.
fn variance_loss_grad(theta_norm: &[f64], dof: usize, noise: &[f64], noise_dim: usize) -> (f64, Vec<f64>) {
    let batch = theta_norm.len() / dof;
    let v_theta = mean_dim_variance(theta_norm, batch, dof);
    let v_noise = mean_dim_variance(noise, batch, noise_dim);
    let d = v_theta - v_noise;

    let mut means = vec![0.0; dof];
    for r in 0..batch {
        for c in 0..dof {
            means[c] += theta_norm[r * dof + c];
        }
    }
    for m in means.iter_mut() {
        *m /= batch as f64;
    }
    let scale = 2.0 * d * 2.0 / (batch as f64 * dof as f64);
    let grad = (0..batch * dof)
        .map(|i| scale * (theta_norm[i] - means[i % dof]))
        .collect();
    (d * d, grad)
}

// --- optimizer ---------------------------------------------------------------

/// Adam: per-parameter first/second moment scaling, decay 0.9 / 0.999,
/// epsilon 1e-8.
pub struct Adam {
    t: u64,
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    pub fn new(net: &DenseNet) -> Self {
        Adam {
            t: 0,
            m_w: net.weights().iter().map(|w| vec![0.0; w.len()]).collect(),
            v_w: net.weights().iter().map(|w| vec![0.0; w.len()]).collect(),
            m_b: net.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
            v_b: net.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for l in 0..net.num_layers() {
            update(&mut net.weights_mut()[l], &grads.d_weights[l], &mut self.m_w[l], &mut self.v_w[l], lr, bc1, bc2);
            update(&mut net.biases_mut()[l], &grads.d_biases[l], &mut self.m_b[l], &mut self.v_b[l], lr, bc1, bc2);
        }

        fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, bc1: f64, bc2: f64) {
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
            }
        }
    }
}

// --- training loops -----------------------------------------------------------

/// Train the single-solution regressor. On divergence the parameters are
/// re-initialized and the run restarts, up to `cfg.restarts` times; the
/// returned model carries the best-validation-error parameters.
pub fn train_mlp(
    chain: &KinematicChain,
    train_set: &[crate::dataset::SampleRecord],
    val_set: &[crate::dataset::SampleRecord],
    net: &DenseNet,
    normalizer: &Normalizer,
    cfg: &TrainConfig,
    goals: &GoalSet,
) -> Result<(NeuralModel, TrainReport)> {
    run_training(chain, train_set, val_set, net, normalizer, cfg, goals, ModelKind::Mlp)
}

/// Train the noise-conditioned generator: the cycle loss runs on fresh
/// noise per row, then one pose is drawn from the batch, tiled, and pushed
/// through again to apply the variance-matching term. Gradient clipping,
/// when configured, applies to the cycle term only.
pub fn train_gan(
    chain: &KinematicChain,
    train_set: &[crate::dataset::SampleRecord],
    val_set: &[crate::dataset::SampleRecord],
    net: &DenseNet,
    normalizer: &Normalizer,
    cfg: &TrainConfig,
    goals: &GoalSet,
) -> Result<(NeuralModel, TrainReport)> {
    if cfg.noise_dim == 0 {
        return Err(Error::InvalidArgument("generator training needs noise_dim > 0".into()));
    }
    run_training(chain, train_set, val_set, net, normalizer, cfg, goals, ModelKind::Gan)
}

#[allow(clippy::too_many_arguments)]
fn run_training(
    chain: &KinematicChain,
    train_set: &[crate::dataset::SampleRecord],
    val_set: &[crate::dataset::SampleRecord],
    net_template: &DenseNet,
    normalizer: &Normalizer,
    cfg: &TrainConfig,
    goals: &GoalSet,
    kind: ModelKind,
) -> Result<(NeuralModel, TrainReport)> {
    cfg.validate()?;
    goals.validate(chain.dof())?;
    assert_eq!(
        *net_template.activations().last().unwrap(),
        crate::neural::Activation::Tanh,
        "output layer must be tanh so joints stay inside their limits"
    );
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidArgument("training and validation sets must be non-empty".into()));
    }
    let start = std::time::Instant::now();
    let noise_dim = if kind == ModelKind::Gan { cfg.noise_dim } else { 0 };

    // Fixed validation noise so per-epoch metrics are comparable.
    let val_noise: Vec<f64> = {
        let mut rng = stream_rng(cfg.rng_seed, 0xF1DE);
        (0..val_set.len() * noise_dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    };

    let mut last_err_report = None;
    for attempt in 0..=cfg.restarts {
        let mut net = net_template.clone();
        net.init_uniform(derive_seed(cfg.rng_seed, 0x5EED + attempt as u64));
        let mut adam = Adam::new(&net);
        let mut rng = stream_rng(cfg.rng_seed, 0xA11 + attempt as u64);

        let mut report = TrainReport {
            epochs: Vec::with_capacity(cfg.epochs),
            diverged: false,
            restarts_used: attempt,
            best_epoch: 0,
            wall_time_ms: 0.0,
        };
        let mut best: Option<(f64, DenseNet)> = None;
        let mut diverged = false;

        'epochs: for epoch in 0..cfg.epochs {
            let lr = cfg.lr0 * (1.0 - epoch as f64 / cfg.epochs as f64);

            let mut order: Vec<usize> = (0..train_set.len()).collect();
            for i in (1..order.len()).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }

            let mut loss_acc = 0.0;
            let mut steps = 0usize;
            for batch_idx in order.chunks(cfg.batch_size) {
                let targets: Vec<Pose> = batch_idx.iter().map(|&i| train_set[i].pose).collect();
                let noise: Vec<f64> = (0..targets.len() * noise_dim)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();

                let (cycle, mut grads) =
                    cycle_loss(chain, &net, normalizer, &targets, &noise, noise_dim, goals);
                let mut step_loss = cycle;
                if let Some(clip) = cfg.grad_clip {
                    grads.clip_global_norm(clip);
                }

                if kind == ModelKind::Gan {
                    let pick = rng.random_range(0..targets.len());
                    let tiled = vec![targets[pick]; targets.len()];
                    let tile_noise: Vec<f64> = (0..tiled.len() * noise_dim)
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect();
                    let (var_value, var_grads) = variance_pass(
                        &net, normalizer, &tiled, &tile_noise, noise_dim,
                    );
                    step_loss += cfg.variance_weight * var_value;
                    // The variance term is never clipped.
                    grads.add_scaled(&var_grads, cfg.variance_weight);
                }

                let grad_norm = grads.global_norm();
                if !step_loss.is_finite() || !grads.is_finite() || grad_norm > DIVERGENCE_GRAD_NORM
                {
                    diverged = true;
                    break 'epochs;
                }
                adam.step(&mut net, &grads, lr);
                loss_acc += step_loss;
                steps += 1;
            }

            let (val_pos_mm, val_rot_deg) =
                validation_errors(chain, &net, normalizer, val_set, &val_noise, noise_dim);
            if !val_pos_mm.is_finite() || !val_rot_deg.is_finite() {
                diverged = true;
                break 'epochs;
            }
            report.epochs.push(EpochStats {
                epoch,
                lr,
                train_loss: loss_acc / steps.max(1) as f64,
                val_pos_mm,
                val_rot_deg,
            });
            if best.as_ref().map(|(b, _)| val_pos_mm < *b).unwrap_or(true) {
                best = Some((val_pos_mm, net.clone()));
                report.best_epoch = epoch;
            }
        }

        report.diverged = diverged;
        report.wall_time_ms = start.elapsed().as_secs_f64() * 1000.0;
        if !diverged {
            let (_, best_net) = best.expect("at least one epoch ran");
            let model = NeuralModel {
                net: best_net,
                normalizer: normalizer.clone(),
                kind,
                noise_dim,
                chain_hash: chain.digest(),
                rng_seed: cfg.rng_seed,
            };
            return Ok((model, report));
        }
        last_err_report = Some(report);
    }

    Err(Error::TrainingDiverged {
        restarts: cfg.restarts,
        report: Box::new(last_err_report.expect("at least one attempt ran")),
    })
}

/// Forward the tiled batch and return the variance term plus its parameter
/// gradients.
fn variance_pass(
    net: &DenseNet,
    normalizer: &Normalizer,
    tiled: &[Pose],
    noise: &[f64],
    noise_dim: usize,
) -> (f64, Gradients) {
    let batch = tiled.len();
    let in_dim = net.input_dim();
    let dof = normalizer.dof();
    let mut inputs = vec![0.0; batch * in_dim];
    for (r, t) in tiled.iter().enumerate() {
        inputs[r * in_dim..r * in_dim + 7].copy_from_slice(&normalizer.normalize_pose(t));
        inputs[r * in_dim + 7..(r + 1) * in_dim]
            .copy_from_slice(&noise[r * noise_dim..(r + 1) * noise_dim]);
    }
    let (y, tape) = net.forward(&inputs);
    let (value, d_y) = variance_loss_grad(&y, dof, noise, noise_dim);
    let grads = net.backward(tape, &d_y);
    (value, grads)
}

fn validation_errors(
    chain: &KinematicChain,
    net: &DenseNet,
    normalizer: &Normalizer,
    val_set: &[crate::dataset::SampleRecord],
    val_noise: &[f64],
    noise_dim: usize,
) -> (f64, f64) {
    let in_dim = net.input_dim();
    let dof = normalizer.dof();
    let mut inputs = vec![0.0; val_set.len() * in_dim];
    for (r, rec) in val_set.iter().enumerate() {
        inputs[r * in_dim..r * in_dim + 7].copy_from_slice(&normalizer.normalize_pose(&rec.pose));
        if noise_dim > 0 {
            inputs[r * in_dim + 7..(r + 1) * in_dim]
                .copy_from_slice(&val_noise[r * noise_dim..(r + 1) * noise_dim]);
        }
    }
    let y = net.infer(&inputs);
    let errors: Vec<(f64, f64)> = (0..val_set.len())
        .into_par_iter()
        .map(|r| {
            let theta = normalizer.denormalize_joints(&y[r * dof..(r + 1) * dof]);
            let reached = fk(chain, &theta);
            let e = crate::kinematics::pose_error(&val_set[r].pose, &reached);
            (e.pos_mm, e.rot_deg)
        })
        .collect();
    let n = errors.len() as f64;
    let pos = errors.iter().map(|e| e.0).sum::<f64>() / n;
    let rot = errors.iter().map(|e| e.1).sum::<f64>() / n;
    (pos, rot)
}

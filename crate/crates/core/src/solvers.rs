//! The hybrid solver stack: neural seeding, a genetic algorithm with the
//! weighted partial cost function, and damped least-squares refinement.
//!
//! Cost evaluation fans out across workers; selection, crossover and
//! mutation consume a single sequential RNG stream, so results do not
//! depend on worker count.

use crate::chain::{KinematicChain, Pose};
use crate::goals::{CartesianGoalKind, GoalSet, JointGoalKind};
use crate::kinematics::{fk, fk_jacobian, pose_error};
use crate::neural::{ModelKind, NeuralModel};
use crate::rngutil::stream_rng;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A set of candidate configurations with their per-solution errors and
/// weighted costs.
#[derive(Debug, Clone, Default)]
pub struct SolutionBatch {
    pub configs: Vec<Vec<f64>>,
    pub pos_err_mm: Vec<f64>,
    pub rot_err_deg: Vec<f64>,
    pub cost: Vec<f64>,
}

impl SolutionBatch {
    /// Evaluate errors and costs for a list of configurations.
    pub fn from_configs(
        chain: &KinematicChain,
        target: &Pose,
        goals: &GoalSet,
        configs: Vec<Vec<f64>>,
    ) -> Self {
        let evals: Vec<(f64, f64, f64)> = configs
            .par_iter()
            .map(|c| {
                let reached = fk(chain, c);
                let e = pose_error(target, &reached);
                (e.pos_mm, e.rot_deg, weighted_cost(chain, c, target, goals))
            })
            .collect();
        SolutionBatch {
            configs,
            pos_err_mm: evals.iter().map(|e| e.0).collect(),
            rot_err_deg: evals.iter().map(|e| e.1).collect(),
            cost: evals.iter().map(|e| e.2).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Index of the lowest-cost row (first on ties).
    pub fn best(&self) -> usize {
        let mut best = 0;
        for i in 1..self.cost.len() {
            if self.cost[i] < self.cost[best] {
                best = i;
            }
        }
        best
    }

    /// Stable sort by cost; ties keep insertion order.
    pub fn sort_by_cost(&mut self) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.cost[a].partial_cmp(&self.cost[b]).unwrap());
        self.configs = order.iter().map(|&i| std::mem::take(&mut self.configs[i])).collect();
        self.pos_err_mm = order.iter().map(|&i| self.pos_err_mm[i]).collect();
        self.rot_err_deg = order.iter().map(|&i| self.rot_err_deg[i]).collect();
        self.cost = order.iter().map(|&i| self.cost[i]).collect();
    }
}

/// Weighted partial cost of one configuration against a target pose.
///
/// Mean absolute position error (m) and sign-resolved mean absolute
/// quaternion-component error, plus mean squared displacement of the
/// selected joints from zero, each scaled by its goal weight. This is the
/// same per-sample value the training loss uses.
pub fn weighted_cost(
    chain: &KinematicChain,
    config: &[f64],
    target: &Pose,
    goals: &GoalSet,
) -> f64 {
    let reached = fk(chain, config);
    let tv = target.to_vec7();
    let rv = reached.to_vec7();

    let direct: f64 = (3..7).map(|i| (rv[i] - tv[i]).abs()).sum();
    let flipped: f64 = (3..7).map(|i| (rv[i] + tv[i]).abs()).sum();
    let quat_l1 = direct.min(flipped);

    let mut cost = 0.0;
    for g in &goals.cartesian {
        match g.kind {
            CartesianGoalKind::PositionMae => {
                let acc: f64 = (0..3).map(|i| (rv[i] - tv[i]).abs()).sum();
                cost += g.weight * acc / 3.0;
            }
            CartesianGoalKind::RotationMae => {
                cost += g.weight * quat_l1 / 4.0;
            }
        }
    }
    for g in &goals.joint {
        match g.kind {
            JointGoalKind::ZeroController => {
                let acc: f64 = g.joint_indices.iter().map(|&j| config[j] * config[j]).sum();
                cost += g.weight * acc / g.joint_indices.len() as f64;
            }
        }
    }
    cost
}

/// Genetic-algorithm parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Fraction of the initial population filled from seeds (the rest is
    /// uniform random within the joint limits).
    pub seed_fraction: f64,
    pub elitism: usize,
    pub tournament_k: usize,
    pub crossover_rate: f64,
    /// Mutation standard deviation as a fraction of each joint's range.
    pub mutation_sigma: f64,
    /// Optional wall-clock budget, checked per generation. Disabled by
    /// default so solver outputs stay reproducible.
    pub timeout_ms: Option<f64>,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 256,
            generations: 100,
            seed_fraction: 0.5,
            elitism: 2,
            tournament_k: 3,
            crossover_rate: 0.7,
            mutation_sigma: 0.05,
            timeout_ms: None,
            rng_seed: 0,
        }
    }
}

/// Bookkeeping from one GA run, used by the seeding experiments.
#[derive(Debug, Clone)]
pub struct GaRunStats {
    pub generations_run: usize,
    pub cost_evals: u64,
    /// Best cost after the initial evaluation (entry 0) and after each
    /// generation.
    pub best_cost_trace: Vec<f64>,
    /// Cumulative cost evaluations aligned with `best_cost_trace`.
    pub evals_trace: Vec<u64>,
    pub timed_out: bool,
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; one sample per call keeps the stream layout simple.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Evolve a population toward the target. Always returns the full final
/// population sorted by cost: callers get a best-effort answer even for
/// unreachable targets.
///
/// Elite individuals carry over unchanged with cached costs, so the best
/// cost is non-increasing across generations.
pub fn ga_solve(
    chain: &KinematicChain,
    target: &Pose,
    goals: &GoalSet,
    cfg: &GaConfig,
    seeds: Option<&SolutionBatch>,
) -> (SolutionBatch, GaRunStats) {
    assert!(cfg.population >= 2, "population must be at least 2");
    assert!(cfg.elitism < cfg.population, "elitism must leave room for offspring");
    assert!(cfg.tournament_k >= 1, "tournament size must be positive");
    let start = std::time::Instant::now();
    let mut rng = stream_rng(cfg.rng_seed, 0x6A);
    let dof = chain.dof();

    let max_seeds = (cfg.seed_fraction * cfg.population as f64).floor() as usize;
    let mut population: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
    if let Some(batch) = seeds {
        for config in batch.configs.iter().take(max_seeds) {
            let mut c = config.clone();
            chain.clamp(&mut c);
            population.push(c);
        }
    }
    while population.len() < cfg.population {
        population.push(
            chain
                .joints()
                .iter()
                .map(|j| rng.random_range(j.lower..=j.upper))
                .collect(),
        );
    }

    let eval = |configs: &[Vec<f64>]| -> Vec<f64> {
        configs
            .par_iter()
            .map(|c| weighted_cost(chain, c, target, goals))
            .collect()
    };

    let mut costs = eval(&population);
    let mut evals = cfg.population as u64;
    let mut stats = GaRunStats {
        generations_run: 0,
        cost_evals: evals,
        best_cost_trace: vec![costs.iter().cloned().fold(f64::INFINITY, f64::min)],
        evals_trace: vec![evals],
        timed_out: false,
    };

    for _gen in 0..cfg.generations {
        if let Some(budget) = cfg.timeout_ms {
            if start.elapsed().as_secs_f64() * 1000.0 > budget {
                stats.timed_out = true;
                break;
            }
        }

        // Elite indices by cost, ties by index.
        let mut order: Vec<usize> = (0..cfg.population).collect();
        order.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap());
        let elites = &order[..cfg.elitism];

        let mut next: Vec<Vec<f64>> = elites.iter().map(|&i| population[i].clone()).collect();
        let mut next_costs: Vec<f64> = elites.iter().map(|&i| costs[i]).collect();

        let mut children: Vec<Vec<f64>> = Vec::with_capacity(cfg.population - cfg.elitism);
        while next.len() + children.len() < cfg.population {
            let a = tournament(&costs, cfg.tournament_k, cfg.population, &mut rng);
            let mut child = population[a].clone();
            if rng.random::<f64>() < cfg.crossover_rate {
                let b = tournament(&costs, cfg.tournament_k, cfg.population, &mut rng);
                for j in 0..dof {
                    if rng.random::<f64>() < 0.5 {
                        child[j] = population[b][j];
                    }
                }
            }
            // Multi-scale Gaussian mutation: a log-uniform factor in
            // [1e-3, 1] lets the search both explore and polish.
            let scale = 10f64.powf(rng.random_range(-3.0..0.0));
            for (j, joint) in chain.joints().iter().enumerate() {
                child[j] += standard_normal(&mut rng) * cfg.mutation_sigma * joint.range() * scale;
            }
            chain.clamp(&mut child);
            children.push(child);
        }

        let child_costs = eval(&children);
        evals += children.len() as u64;
        next.extend(children);
        next_costs.extend(child_costs);

        population = next;
        costs = next_costs;
        stats.generations_run += 1;
        stats.cost_evals = evals;
        stats
            .best_cost_trace
            .push(costs.iter().cloned().fold(f64::INFINITY, f64::min));
        stats.evals_trace.push(evals);
    }

    let mut batch = SolutionBatch::from_configs(chain, target, goals, population);
    batch.sort_by_cost();
    (batch, stats)
}

fn tournament(costs: &[f64], k: usize, population: usize, rng: &mut impl Rng) -> usize {
    let mut best = rng.random_range(0..population);
    for _ in 1..k {
        let c = rng.random_range(0..population);
        if costs[c] < costs[best] {
            best = c;
        }
    }
    best
}

/// Damped least-squares (Gauss-Newton) refinement of one configuration.
///
/// Iterates on the 7-D pose residual with fixed damping 1e-4, halving the
/// step when it does not improve, clamping to the joint limits, and
/// stopping at 1e-6 m / 1e-4 rad or after `max_iters`. Accepted iterates
/// never increase the residual. When the goal set has no rotation goal the
/// residual is position-only.
pub fn refine(
    chain: &KinematicChain,
    config: &[f64],
    target: &Pose,
    goals: &GoalSet,
    max_iters: usize,
) -> Vec<f64> {
    const LAMBDA: f64 = 1e-4;
    const POS_TOL_M: f64 = 1e-6;
    const ROT_TOL_RAD: f64 = 1e-4;

    let use_rotation = goals
        .cartesian
        .iter()
        .any(|g| g.kind == CartesianGoalKind::RotationMae);
    let dof = chain.dof();
    let mut theta = config.to_vec();
    chain.clamp(&mut theta);

    let residual = |theta: &[f64]| -> (Vec<f64>, f64, f64) {
        let reached = fk(chain, theta);
        let tv = target.to_vec7();
        let rv = reached.to_vec7();
        let sign = if target.orientation.dot(reached.orientation) < 0.0 { -1.0 } else { 1.0 };
        let mut r: Vec<f64> = (0..3).map(|i| rv[i] - tv[i]).collect();
        if use_rotation {
            r.extend((3..7).map(|i| sign * rv[i] - tv[i]));
        }
        let pos_m = ((0..3).map(|i| (rv[i] - tv[i]).powi(2)).sum::<f64>()).sqrt();
        let rot_rad = crate::math::quat_angle_rad(target.orientation, reached.orientation);
        (r, pos_m, rot_rad)
    };

    let (mut r, mut pos_m, mut rot_rad) = residual(&theta);
    for _ in 0..max_iters {
        if pos_m < POS_TOL_M && (!use_rotation || rot_rad < ROT_TOL_RAD) {
            break;
        }
        let jac = fk_jacobian(chain, &theta);
        let rows = if use_rotation { 7 } else { 3 };
        let sign = {
            let reached = fk(chain, &theta);
            if target.orientation.dot(reached.orientation) < 0.0 { -1.0 } else { 1.0 }
        };

        // Normal equations: (J^T J + lambda I) delta = -J^T r.
        let mut jtj = vec![0.0; dof * dof];
        let mut jtr = vec![0.0; dof];
        for row in 0..rows {
            let row_scale = if row >= 3 { sign } else { 1.0 };
            for a in 0..dof {
                let ja = row_scale * jac.rows[row][a];
                jtr[a] += ja * r[row];
                for b in a..dof {
                    jtj[a * dof + b] += ja * row_scale * jac.rows[row][b];
                }
            }
        }
        for a in 0..dof {
            jtj[a * dof + a] += LAMBDA;
            for b in 0..a {
                jtj[a * dof + b] = jtj[b * dof + a];
            }
        }
        let mut delta = match solve_spd(&jtj, &jtr, dof) {
            Some(d) => d,
            None => break,
        };
        for d in delta.iter_mut() {
            *d = -*d;
        }

        // Step halving: accept only improving iterates.
        let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
        let current = norm(&r);
        let mut accepted = false;
        let mut step = 1.0;
        for _ in 0..30 {
            let mut cand = theta.clone();
            for j in 0..dof {
                cand[j] += step * delta[j];
            }
            chain.clamp(&mut cand);
            let (cr, cp, crot) = residual(&cand);
            if norm(&cr) < current {
                theta = cand;
                r = cr;
                pos_m = cp;
                rot_rad = crot;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    theta
}

/// Cholesky solve for a small symmetric positive-definite system.
fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // Forward then back substitution.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// Which stages of the hybrid pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    NeuralOnly,
    NeuralGa,
    NeuralGaRefine,
}

/// Hybrid pipeline parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridConfig {
    pub pipeline: Pipeline,
    /// Noise draws per pose for generator models.
    pub samples: usize,
    pub ga: GaConfig,
    pub refine_iters: usize,
    /// Seed for the generator's noise draws.
    pub rng_seed: u64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            pipeline: Pipeline::NeuralOnly,
            samples: 500,
            ga: GaConfig::default(),
            refine_iters: 50,
            rng_seed: 0,
        }
    }
}

/// Uniform noise rows in [-1, 1], derived deterministically from the seed.
pub fn noise_batch(seed: u64, rows: usize, noise_dim: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0x2015E);
    (0..rows * noise_dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Solve one target with the configured pipeline. The regressor yields
/// exactly one neural solution, the generator `cfg.samples`; the GA stage
/// seeds half its population with them and the refine stage polishes the
/// GA's best row.
pub fn hybrid_solve(
    chain: &KinematicChain,
    target: &Pose,
    goals: &GoalSet,
    model: &NeuralModel,
    cfg: &HybridConfig,
) -> Result<SolutionBatch> {
    if model.dof() != chain.dof() {
        return Err(Error::InvalidArgument(format!(
            "model solves a {}-DoF chain, target chain has {} DoF",
            model.dof(),
            chain.dof()
        )));
    }
    if model.chain_hash != chain.digest() {
        return Err(Error::InvalidArgument(
            "model was trained for a different chain (hash mismatch)".into(),
        ));
    }

    let neural_configs = match model.kind {
        ModelKind::Mlp => model.solve_batch(&[*target], &[]),
        ModelKind::Gan => {
            if cfg.samples < 1 {
                return Err(Error::InvalidArgument("samples must be >= 1".into()));
            }
            let noise = noise_batch(cfg.rng_seed, cfg.samples, model.noise_dim);
            model.solve_batch(&vec![*target; cfg.samples], &noise)
        }
    };
    let mut neural = SolutionBatch::from_configs(chain, target, goals, neural_configs);
    neural.sort_by_cost();

    match cfg.pipeline {
        Pipeline::NeuralOnly => Ok(neural),
        Pipeline::NeuralGa => {
            let (batch, _) = ga_solve(chain, target, goals, &cfg.ga, Some(&neural));
            Ok(batch)
        }
        Pipeline::NeuralGaRefine => {
            let (mut batch, _) = ga_solve(chain, target, goals, &cfg.ga, Some(&neural));
            let refined = refine(chain, &batch.configs[0], target, goals, cfg.refine_iters);
            let polished = SolutionBatch::from_configs(chain, target, goals, vec![refined]);
            batch.configs.insert(0, polished.configs[0].clone());
            batch.pos_err_mm.insert(0, polished.pos_err_mm[0]);
            batch.rot_err_deg.insert(0, polished.rot_err_deg[0]);
            batch.cost.insert(0, polished.cost[0]);
            batch.sort_by_cost();
            Ok(batch)
        }
    }
}

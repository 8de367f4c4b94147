//! Test-set evaluation and runtime measurement.
//!
//! A solution counts as a success at 10 mm positional and 20 degrees
//! rotational error; both comparisons are inclusive, so exact-boundary
//! errors succeed.

use crate::chain::{KinematicChain, Pose};
use crate::goals::GoalSet;
use crate::neural::NeuralModel;
use crate::solvers::{noise_batch, SolutionBatch};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const SUCCESS_POS_MM: f64 = 10.0;
pub const SUCCESS_ROT_DEG: f64 = 20.0;

pub fn is_success(pos_mm: f64, rot_deg: f64) -> bool {
    pos_mm <= SUCCESS_POS_MM && rot_deg <= SUCCESS_ROT_DEG
}

/// One evaluated test pose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerPoseRow {
    pub index: usize,
    /// Error of the best solution (single-solution protocol) or the batch
    /// mean (multi-solution protocol).
    pub pos_mm: f64,
    pub rot_deg: f64,
    pub cost: f64,
    pub success: bool,
    /// Error of the per-pose best solution; multi-solution protocol only.
    pub best_pos_mm: Option<f64>,
    pub best_rot_deg: Option<f64>,
}

/// Aggregated evaluation results, one row per test pose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub avg_pos_mm: f64,
    pub min_pos_mm: f64,
    pub max_pos_mm: f64,
    pub avg_rot_deg: f64,
    pub min_rot_deg: f64,
    pub max_rot_deg: f64,
    /// Percent of poses meeting the success definition.
    pub success_rate: f64,
    pub mean_solve_time_ms: f64,
    /// Mean over poses of the per-pose best error (multi-solution only).
    pub avg_min_pos_mm: Option<f64>,
    pub avg_min_rot_deg: Option<f64>,
    pub rows: Vec<PerPoseRow>,
}

impl EvalReport {
    fn aggregate(rows: Vec<PerPoseRow>, mean_solve_time_ms: f64, multi: bool) -> Self {
        let n = rows.len() as f64;
        let mut report = EvalReport {
            avg_pos_mm: 0.0,
            min_pos_mm: f64::INFINITY,
            max_pos_mm: f64::NEG_INFINITY,
            avg_rot_deg: 0.0,
            min_rot_deg: f64::INFINITY,
            max_rot_deg: f64::NEG_INFINITY,
            success_rate: 0.0,
            mean_solve_time_ms,
            avg_min_pos_mm: multi.then_some(0.0),
            avg_min_rot_deg: multi.then_some(0.0),
            rows,
        };
        let mut successes = 0usize;
        for row in &report.rows {
            report.avg_pos_mm += row.pos_mm;
            report.avg_rot_deg += row.rot_deg;
            report.min_pos_mm = report.min_pos_mm.min(row.pos_mm);
            report.max_pos_mm = report.max_pos_mm.max(row.pos_mm);
            report.min_rot_deg = report.min_rot_deg.min(row.rot_deg);
            report.max_rot_deg = report.max_rot_deg.max(row.rot_deg);
            if row.success {
                successes += 1;
            }
            if let (Some(acc), Some(v)) = (report.avg_min_pos_mm.as_mut(), row.best_pos_mm) {
                *acc += v;
            }
            if let (Some(acc), Some(v)) = (report.avg_min_rot_deg.as_mut(), row.best_rot_deg) {
                *acc += v;
            }
        }
        report.avg_pos_mm /= n;
        report.avg_rot_deg /= n;
        report.success_rate = 100.0 * successes as f64 / n;
        if let Some(acc) = report.avg_min_pos_mm.as_mut() {
            *acc /= n;
        }
        if let Some(acc) = report.avg_min_rot_deg.as_mut() {
            *acc /= n;
        }
        report
    }

    /// Per-pose rows as CSV. Deliberately excludes timing so reruns with
    /// the same seed are byte-identical.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from(
            "index,pos_mm,rot_deg,cost,success,best_pos_mm,best_rot_deg\n",
        );
        for r in &self.rows {
            let best_pos = r.best_pos_mm.map(|v| format!("{v:.16e}")).unwrap_or_default();
            let best_rot = r.best_rot_deg.map(|v| format!("{v:.16e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{},{},{}\n",
                r.index, r.pos_mm, r.rot_deg, r.cost, r.success, best_pos, best_rot
            ));
        }
        out
    }
}

/// Single-solution protocol: per pose, score the best solution by weighted
/// cost; aggregate over the pose set.
pub fn evaluate_single<S>(solver: S, test_poses: &[Pose]) -> Result<EvalReport>
where
    S: Fn(&Pose) -> SolutionBatch + Sync,
{
    if test_poses.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let results: Vec<(PerPoseRow, f64)> = test_poses
        .par_iter()
        .enumerate()
        .map(|(index, pose)| {
            let t0 = std::time::Instant::now();
            let batch = solver(pose);
            let ms = t0.elapsed().as_secs_f64() * 1000.0;
            assert!(!batch.is_empty(), "solver must return at least one solution");
            let best = batch.best();
            let (pos_mm, rot_deg) = (batch.pos_err_mm[best], batch.rot_err_deg[best]);
            (
                PerPoseRow {
                    index,
                    pos_mm,
                    rot_deg,
                    cost: batch.cost[best],
                    success: is_success(pos_mm, rot_deg),
                    best_pos_mm: None,
                    best_rot_deg: None,
                },
                ms,
            )
        })
        .collect();

    let mean_ms = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    let rows = results.into_iter().map(|r| r.0).collect();
    Ok(EvalReport::aggregate(rows, mean_ms, false))
}

/// Multi-solution protocol for generator models: per pose, draw
/// `samples_per_pose` solutions; batch means feed the average columns and
/// the success definition, the per-pose best (by cost) feeds the reported
/// average-minimum columns. With `success_on_best` the success definition
/// uses the per-pose best instead of the mean.
pub fn evaluate_multi(
    chain: &KinematicChain,
    model: &NeuralModel,
    goals: &GoalSet,
    test_poses: &[Pose],
    samples_per_pose: usize,
    rng_seed: u64,
    success_on_best: bool,
) -> Result<EvalReport> {
    if test_poses.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if samples_per_pose < 2 {
        return Err(Error::InvalidArgument("samples_per_pose must be at least 2".into()));
    }
    let results: Vec<(PerPoseRow, f64)> = test_poses
        .par_iter()
        .enumerate()
        .map(|(index, pose)| {
            let t0 = std::time::Instant::now();
            let noise = noise_batch(
                crate::rngutil::derive_seed(rng_seed, index as u64),
                samples_per_pose,
                model.noise_dim,
            );
            let configs = model.solve_batch(&vec![*pose; samples_per_pose], &noise);
            let batch = SolutionBatch::from_configs(chain, pose, goals, configs);
            let ms = t0.elapsed().as_secs_f64() * 1000.0;

            let n = batch.len() as f64;
            let mean_pos = batch.pos_err_mm.iter().sum::<f64>() / n;
            let mean_rot = batch.rot_err_deg.iter().sum::<f64>() / n;
            let mean_cost = batch.cost.iter().sum::<f64>() / n;
            let best = batch.best();
            let (best_pos, best_rot) = (batch.pos_err_mm[best], batch.rot_err_deg[best]);
            let success = if success_on_best {
                is_success(best_pos, best_rot)
            } else {
                is_success(mean_pos, mean_rot)
            };
            (
                PerPoseRow {
                    index,
                    pos_mm: mean_pos,
                    rot_deg: mean_rot,
                    cost: mean_cost,
                    success,
                    best_pos_mm: Some(best_pos),
                    best_rot_deg: Some(best_rot),
                },
                ms,
            )
        })
        .collect();

    let mean_ms = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    let rows = results.into_iter().map(|r| r.0).collect();
    Ok(EvalReport::aggregate(rows, mean_ms, true))
}

/// Wall-time statistics over repeated solves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingStats {
    pub median_ms: f64,
    pub p95_ms: f64,
    pub mean_ms: f64,
    pub samples: usize,
}

/// Time `solver` over every pose for `repetitions` rounds, excluding one
/// warm-up call. Runs on the calling thread to avoid contention noise.
pub fn bench_runtime<S>(solver: S, poses: &[Pose], repetitions: usize) -> Result<TimingStats>
where
    S: Fn(&Pose) -> SolutionBatch,
{
    if repetitions < 3 {
        return Err(Error::InvalidArgument(format!(
            "repetitions must be at least 3, got {repetitions}"
        )));
    }
    if poses.is_empty() {
        return Err(Error::InvalidArgument("empty pose set".into()));
    }
    let _ = solver(&poses[0]); // warm-up, excluded

    let mut times = Vec::with_capacity(poses.len() * repetitions);
    for _ in 0..repetitions {
        for pose in poses {
            let t0 = std::time::Instant::now();
            let _ = solver(pose);
            times.push(t0.elapsed().as_secs_f64() * 1000.0);
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_ms = times[times.len() / 2];
    let p95_ms = times[((times.len() as f64 * 0.95) as usize).min(times.len() - 1)];
    let mean_ms = times.iter().sum::<f64>() / times.len() as f64;
    Ok(TimingStats { median_ms, p95_ms, mean_ms, samples: times.len() })
}

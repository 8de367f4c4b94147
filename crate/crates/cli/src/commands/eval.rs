//! `ngik eval`

use crate::common::{init_workers, load_chain, load_goals};
use crate::manifest::RunManifest;
use anyhow::{Context, Result};
use ngik_core::dataset::read_dataset;
use ngik_core::evalbench::{evaluate_multi, evaluate_single, EvalReport};
use ngik_core::neural::{load_model, ModelKind};
use ngik_core::solvers::{hybrid_solve, GaConfig, HybridConfig, Pipeline, SolutionBatch};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalPipeline {
    /// Score the model's own solutions.
    NeuralOnly,
    /// Seed the genetic algorithm with the model's solutions.
    NeuralGa,
    /// Full pipeline including local refinement.
    NeuralGaRefine,
    /// Return each test pose's recorded configuration: a plumbing check
    /// that must score zero error and 100% success.
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Protocol {
    /// Best-solution accounting (regressors and hybrid pipelines).
    Single,
    /// Batch-mean accounting over noise draws (generators).
    Multi,
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub chain: PathBuf,
    /// Trained model file; not needed for the oracle pipeline.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset directory; the test split is evaluated.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for report.json and perpose.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "neural-only")]
    pub pipeline: EvalPipeline,
    /// Accounting protocol; defaults to multi for generator models with
    /// the neural-only pipeline, single otherwise.
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Judge multi-protocol success on the per-pose best instead of the
    /// batch mean.
    #[arg(long, default_value_t = false)]
    pub success_on_best: bool,
    #[arg(long)]
    pub goals: Option<PathBuf>,
    /// Evaluate only the first N test poses.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = false)]
    pub verify: bool,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Summary document mirroring the usual results-table columns. Timing is
/// deliberately left to the manifest so reruns stay byte-identical.
#[derive(Serialize)]
struct Summary {
    poses: usize,
    avg_pos_mm: f64,
    min_pos_mm: f64,
    max_pos_mm: f64,
    avg_rot_deg: f64,
    min_rot_deg: f64,
    max_rot_deg: f64,
    success_rate_percent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    avg_min_pos_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    avg_min_rot_deg: Option<f64>,
}

#[derive(Serialize)]
struct EffectiveConfig {
    pipeline: String,
    protocol: String,
    samples: usize,
    seed: u64,
    success_on_best: bool,
    limit: Option<usize>,
}

pub fn run(args: Args) -> Result<()> {
    let started = std::time::Instant::now();
    init_workers(args.workers);
    let chain = load_chain(&args.chain)?;

    let test_path = args.data.join("test.csv");
    let (mut test_set, _) = read_dataset(&test_path, &chain, args.verify)
        .with_context(|| format!("loading {}", test_path.display()))?;
    if let Some(limit) = args.limit {
        test_set.truncate(limit);
    }
    let goals = load_goals(args.goals.as_deref(), chain.dof())?;
    let poses: Vec<ngik_core::Pose> = test_set.iter().map(|r| r.pose).collect();

    let model = match args.pipeline {
        EvalPipeline::Oracle => None,
        _ => {
            let path = args
                .model
                .as_ref()
                .context("--model is required for non-oracle pipelines")?;
            Some(load_model(path)?)
        }
    };

    let protocol = args.protocol.unwrap_or({
        match (&model, args.pipeline) {
            (Some(m), EvalPipeline::NeuralOnly) if m.kind == ModelKind::Gan => Protocol::Multi,
            _ => Protocol::Single,
        }
    });

    let report: EvalReport = match (protocol, args.pipeline) {
        (Protocol::Multi, EvalPipeline::NeuralOnly) => {
            let model = model.as_ref().unwrap();
            evaluate_multi(
                &chain,
                model,
                &goals,
                &poses,
                args.samples,
                args.seed,
                args.success_on_best,
            )?
        }
        (Protocol::Multi, _) => {
            anyhow::bail!("the multi protocol only applies to the neural-only pipeline")
        }
        (Protocol::Single, EvalPipeline::Oracle) => {
            let configs: Vec<Vec<f64>> = test_set.iter().map(|r| r.config.angles.clone()).collect();
            evaluate_single(
                |pose: &ngik_core::Pose| {
                    let i = poses
                        .iter()
                        .position(|p| p.position == pose.position)
                        .expect("pose from the test set");
                    SolutionBatch::from_configs(&chain, pose, &goals, vec![configs[i].clone()])
                },
                &poses,
            )?
        }
        (Protocol::Single, pipeline) => {
            let model = model.as_ref().unwrap();
            let hybrid_pipeline = match pipeline {
                EvalPipeline::NeuralOnly => Pipeline::NeuralOnly,
                EvalPipeline::NeuralGa => Pipeline::NeuralGa,
                EvalPipeline::NeuralGaRefine => Pipeline::NeuralGaRefine,
                EvalPipeline::Oracle => unreachable!(),
            };
            let mut ga = GaConfig { rng_seed: args.seed, ..GaConfig::default() };
            if let Some(v) = args.population {
                ga.population = v;
            }
            if let Some(v) = args.generations {
                ga.generations = v;
            }
            let cfg = HybridConfig {
                pipeline: hybrid_pipeline,
                samples: args.samples,
                ga,
                refine_iters: 50,
                rng_seed: args.seed,
            };
            evaluate_single(
                |pose: &ngik_core::Pose| {
                    hybrid_solve(&chain, pose, &goals, model, &cfg)
                        .expect("model/chain compatibility checked at load")
                },
                &poses,
            )?
        }
    };

    std::fs::create_dir_all(&args.out)?;
    let summary = Summary {
        poses: report.rows.len(),
        avg_pos_mm: report.avg_pos_mm,
        min_pos_mm: report.min_pos_mm,
        max_pos_mm: report.max_pos_mm,
        avg_rot_deg: report.avg_rot_deg,
        min_rot_deg: report.min_rot_deg,
        max_rot_deg: report.max_rot_deg,
        success_rate_percent: report.success_rate,
        avg_min_pos_mm: report.avg_min_pos_mm,
        avg_min_rot_deg: report.avg_min_rot_deg,
    };
    std::fs::write(
        args.out.join("report.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    std::fs::write(args.out.join("perpose.csv"), report.rows_csv())?;

    let pipeline_name = match args.pipeline {
        EvalPipeline::NeuralOnly => "neural-only",
        EvalPipeline::NeuralGa => "neural-ga",
        EvalPipeline::NeuralGaRefine => "neural-ga-refine",
        EvalPipeline::Oracle => "oracle",
    };
    let config = EffectiveConfig {
        pipeline: pipeline_name.into(),
        protocol: if matches!(protocol, Protocol::Multi) { "multi" } else { "single" }.into(),
        samples: args.samples,
        seed: args.seed,
        success_on_best: args.success_on_best,
        limit: args.limit,
    };
    let mut manifest = RunManifest::new(&config, &chain.digest(), vec![args.seed], started);
    manifest.timing = Some(serde_json::json!({
        "mean_solve_time_ms": report.mean_solve_time_ms,
    }));
    manifest.write(&args.out.join("manifest.json"))?;

    println!(
        "{} poses: avg {:.3} mm / {:.3} deg, success {:.2}%",
        report.rows.len(),
        report.avg_pos_mm,
        report.avg_rot_deg,
        report.success_rate
    );
    Ok(())
}

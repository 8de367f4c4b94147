//! `ngik bench`

use crate::common::{init_workers, load_chain, load_goals};
use crate::manifest::RunManifest;
use anyhow::{Context, Result};
use ngik_core::dataset::read_dataset;
use ngik_core::evalbench::bench_runtime;
use ngik_core::neural::load_model;
use ngik_core::solvers::{hybrid_solve, GaConfig, HybridConfig, Pipeline};
use serde::Serialize;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "neural-only")]
    pub pipeline: super::solve::PipelineArg,
    /// Repetitions over the pose set (at least 3; one extra warm-up solve
    /// is excluded).
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Number of test poses to time.
    #[arg(long, default_value_t = 20)]
    pub poses: usize,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BenchDoc {
    pipeline: String,
    poses: usize,
    repetitions: usize,
    median_ms: f64,
    p95_ms: f64,
    mean_ms: f64,
    samples: usize,
}

pub fn run(args: Args) -> Result<()> {
    let started = std::time::Instant::now();
    // Timing runs stay single-threaded to avoid contention noise.
    init_workers(Some(1));
    let chain = load_chain(&args.chain)?;
    let model = load_model(&args.model)?;
    let goals = load_goals(None, chain.dof())?;

    let test_path = args.data.join("test.csv");
    let (test_set, _) = read_dataset(&test_path, &chain, false)
        .with_context(|| format!("loading {}", test_path.display()))?;
    let poses: Vec<ngik_core::Pose> =
        test_set.iter().take(args.poses).map(|r| r.pose).collect();

    let cfg = HybridConfig {
        pipeline: Pipeline::from(args.pipeline),
        samples: args.samples,
        ga: GaConfig { rng_seed: args.seed, ..GaConfig::default() },
        refine_iters: 50,
        rng_seed: args.seed,
    };
    let stats = bench_runtime(
        |pose: &ngik_core::Pose| {
            hybrid_solve(&chain, pose, &goals, &model, &cfg).expect("compatibility checked")
        },
        &poses,
        args.reps,
    )?;

    let doc = BenchDoc {
        pipeline: format!("{:?}", cfg.pipeline),
        poses: poses.len(),
        repetitions: args.reps,
        median_ms: stats.median_ms,
        p95_ms: stats.p95_ms,
        mean_ms: stats.mean_ms,
        samples: stats.samples,
    };
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            let manifest = RunManifest::new(&doc, &chain.digest(), vec![args.seed], started);
            manifest.write(&path.with_extension("manifest.json"))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

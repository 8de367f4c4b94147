//! `ngik solve`

use crate::common::{init_workers, load_chain, load_goals, parse_pose};
use crate::manifest::RunManifest;
use anyhow::{bail, Context, Result};
use ngik_core::goals::GoalSet;
use ngik_core::neural::load_model;
use ngik_core::solvers::{hybrid_solve, GaConfig, HybridConfig, Pipeline};
use ngik_core::Pose;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PipelineArg {
    NeuralOnly,
    NeuralGa,
    NeuralGaRefine,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Pipeline {
        match p {
            PipelineArg::NeuralOnly => Pipeline::NeuralOnly,
            PipelineArg::NeuralGa => Pipeline::NeuralGa,
            PipelineArg::NeuralGaRefine => Pipeline::NeuralGaRefine,
        }
    }
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Target pose as px,py,pz,qx,qy,qz,qw (meters / unit quaternion).
    #[arg(long, allow_hyphen_values = true)]
    pub pose: Option<String>,
    /// Solve-request JSON document; explicit flags override its fields.
    #[arg(long)]
    pub request: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub pipeline: Option<PipelineArg>,
    /// Noise draws per pose for generator models.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub timeout_ms: Option<f64>,
    #[arg(long)]
    pub goals: Option<PathBuf>,
    /// Write the response here instead of stdout (also records a manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Maximum solutions to include in the response document.
    #[arg(long, default_value_t = 32)]
    pub max_rows: usize,
}

/// Solve-request document.
#[derive(Default, Deserialize)]
pub struct Request {
    pub pose: Option<[f64; 7]>,
    pub pipeline: Option<Pipeline>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub goals: Option<GoalSet>,
    pub ga: Option<GaConfig>,
}

#[derive(Serialize)]
struct SolutionRow {
    config: Vec<f64>,
    pos_err_mm: f64,
    rot_err_deg: f64,
    cost: f64,
}

#[derive(Serialize)]
struct Response {
    target: [f64; 7],
    pipeline: Pipeline,
    solutions: Vec<SolutionRow>,
    total_solutions: usize,
    solve_time_ms: f64,
}

#[derive(Serialize)]
struct EffectiveConfig<'a> {
    pipeline: Pipeline,
    target: [f64; 7],
    hybrid: &'a HybridConfig,
    goals: &'a GoalSet,
}

pub fn run(args: Args) -> Result<()> {
    let started = std::time::Instant::now();
    init_workers(args.workers);
    let chain = load_chain(&args.chain)?;
    let model = load_model(&args.model)?;

    let request: Request = match &args.request {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading request {}", path.display()))?;
            serde_json::from_str(&text).context("parsing request document")?
        }
        None => Request::default(),
    };

    let target: Pose = match (&args.pose, request.pose) {
        (Some(text), _) => parse_pose(text)?,
        (None, Some(v)) => {
            parse_pose(&v.map(|x| x.to_string()).join(","))?
        }
        (None, None) => bail!("no target pose: pass --pose or a --request document"),
    };

    let goals = match (&args.goals, request.goals) {
        (Some(path), _) => load_goals(Some(path), chain.dof())?,
        (None, Some(g)) => {
            g.validate(chain.dof())?;
            g
        }
        (None, None) => load_goals(None, chain.dof())?,
    };

    let mut ga = request.ga.unwrap_or_default();
    if let Some(v) = args.population {
        ga.population = v;
    }
    if let Some(v) = args.generations {
        ga.generations = v;
    }
    if args.timeout_ms.is_some() {
        ga.timeout_ms = args.timeout_ms;
    }
    let seed = args.seed.or(request.seed).unwrap_or(0);
    ga.rng_seed = seed;

    let cfg = HybridConfig {
        pipeline: args
            .pipeline
            .map(Pipeline::from)
            .or(request.pipeline)
            .unwrap_or(Pipeline::NeuralOnly),
        samples: args.samples.or(request.samples).unwrap_or(500),
        ga,
        refine_iters: 50,
        rng_seed: seed,
    };

    let t0 = std::time::Instant::now();
    let batch = hybrid_solve(&chain, &target, &goals, &model, &cfg)?;
    let solve_ms = t0.elapsed().as_secs_f64() * 1000.0;

    let total = batch.len();
    let rows: Vec<SolutionRow> = (0..total.min(args.max_rows))
        .map(|i| SolutionRow {
            config: batch.configs[i].clone(),
            pos_err_mm: batch.pos_err_mm[i],
            rot_err_deg: batch.rot_err_deg[i],
            cost: batch.cost[i],
        })
        .collect();
    let response = Response {
        target: target.to_vec7(),
        pipeline: cfg.pipeline,
        solutions: rows,
        total_solutions: total,
        solve_time_ms: solve_ms,
    };
    let text = serde_json::to_string_pretty(&response)? + "\n";

    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            let config = EffectiveConfig {
                pipeline: cfg.pipeline,
                target: target.to_vec7(),
                hybrid: &cfg,
                goals: &goals,
            };
            let manifest = RunManifest::new(&config, &chain.digest(), vec![seed], started);
            manifest.write(&path.with_extension("manifest.json"))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

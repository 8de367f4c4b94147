//! `ngik gen-data`

use crate::common::{init_workers, load_chain, parse_bounds};
use crate::manifest::RunManifest;
use anyhow::{Context, Result};
use ngik_core::dataset::{accept_all, generate, split, DatasetMeta, WorkspaceBounds};
use serde::Serialize;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Chain-definition file (JSON).
    #[arg(long)]
    pub chain: PathBuf,
    /// Workspace box as xmin,ymin,zmin,xmax,ymax,zmax (meters).
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: String,
    /// Total number of samples before splitting.
    #[arg(long, default_value_t = 50_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; receives train/test/val CSVs plus metadata.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.10)]
    pub test_frac: f64,
    #[arg(long, default_value_t = 0.01)]
    pub val_frac: f64,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Serialize)]
struct EffectiveConfig<'a> {
    chain: &'a str,
    bounds: WorkspaceBounds,
    count: usize,
    seed: u64,
    test_frac: f64,
    val_frac: f64,
}

pub fn run(args: Args) -> Result<()> {
    let started = std::time::Instant::now();
    init_workers(args.workers);
    let chain = load_chain(&args.chain)?;
    let bounds = parse_bounds(&args.bounds)?;

    let records = generate(&chain, bounds, args.count, args.seed, &accept_all)?;
    let (train, test, val) = split(records, args.test_frac, args.val_frac, args.seed)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    for (name, set) in [("train", &train), ("test", &test), ("val", &val)] {
        let meta = DatasetMeta::for_records(&chain, bounds, args.seed, set);
        let path = args.out.join(format!("{name}.csv"));
        ngik_core::dataset::write_dataset(set, &meta, &path)?;
    }

    let config = EffectiveConfig {
        chain: args.chain.to_str().unwrap_or(""),
        bounds,
        count: args.count,
        seed: args.seed,
        test_frac: args.test_frac,
        val_frac: args.val_frac,
    };
    let manifest = RunManifest::new(&config, &chain.digest(), vec![args.seed], started);
    manifest.write(&args.out.join("manifest.json"))?;

    println!(
        "wrote {} train / {} test / {} val samples to {}",
        train.len(),
        test.len(),
        val.len(),
        args.out.display()
    );
    Ok(())
}

//! `ngik train-mlp` and `ngik train-gan`

use crate::common::{init_workers, load_chain, load_config_layer, load_goals};
use crate::manifest::RunManifest;
use anyhow::{bail, Context, Result};
use ngik_core::dataset::read_dataset;
use ngik_core::goals::GoalSet;
use ngik_core::neural::{
    gan_preset, mlp_preset, save_model, ModelKind, NeuralModel, Normalizer, Workspace,
};
use ngik_core::training::{train_gan, train_mlp, TrainConfig, TrainReport};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PresetArg {
    Small,
    Full,
}

impl From<PresetArg> for Workspace {
    fn from(p: PresetArg) -> Workspace {
        match p {
            PresetArg::Small => Workspace::Small,
            PresetArg::Full => Workspace::Full,
        }
    }
}

#[derive(clap::Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub chain: PathBuf,
    /// Dataset directory from `gen-data` (train.csv / val.csv are used).
    #[arg(long)]
    pub data: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Workspace preset selecting network layout and batch/learning-rate
    /// defaults.
    #[arg(long, value_enum, default_value = "small")]
    pub preset: PresetArg,
    /// Width scale on the preset layer sizes (1.0 reproduces the
    /// full-scale layouts).
    #[arg(long, default_value_t = 0.1)]
    pub width_factor: f64,
    /// JSON config mirroring the training parameters; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Goal-set JSON file (defaults to the desk goal set).
    #[arg(long)]
    pub goals: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grad_clip: Option<f64>,
    /// Disable gradient clipping even if the preset enables it.
    #[arg(long, default_value_t = false)]
    pub no_grad_clip: bool,
    #[arg(long)]
    pub restarts: Option<u32>,
    /// Re-derive every stored pose through FK while loading (slower).
    #[arg(long, default_value_t = false)]
    pub verify: bool,
    /// Write the freshly initialized model without training.
    #[arg(long, default_value_t = false)]
    pub init_only: bool,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(clap::Args)]
pub struct MlpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(clap::Args)]
pub struct GanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub variance_weight: Option<f64>,
    #[arg(long)]
    pub noise_dim: Option<usize>,
}

/// File form of the training configuration; any field may be omitted.
#[derive(Default, Deserialize)]
pub struct FileConfig {
    pub batch_size: Option<usize>,
    pub lr0: Option<f64>,
    pub epochs: Option<usize>,
    pub grad_clip: Option<f64>,
    pub restarts: Option<u32>,
    pub rng_seed: Option<u64>,
    pub variance_weight: Option<f64>,
    pub noise_dim: Option<usize>,
    pub goals: Option<GoalSet>,
}

#[derive(Serialize)]
struct EffectiveConfig<'a> {
    kind: &'a str,
    preset: &'a str,
    width_factor: f64,
    train: &'a TrainConfig,
    goals: &'a GoalSet,
}

fn merge_config(base: TrainConfig, file: &FileConfig, args: &CommonArgs) -> TrainConfig {
    let mut cfg = base;
    if let Some(v) = file.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = file.lr0 {
        cfg.lr0 = v;
    }
    if let Some(v) = file.epochs {
        cfg.epochs = v;
    }
    if file.grad_clip.is_some() {
        cfg.grad_clip = file.grad_clip;
    }
    if let Some(v) = file.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = file.rng_seed {
        cfg.rng_seed = v;
    }
    if let Some(v) = file.variance_weight {
        cfg.variance_weight = v;
    }
    if let Some(v) = file.noise_dim {
        cfg.noise_dim = v;
    }
    // Flags override the file.
    if let Some(v) = args.batch {
        cfg.batch_size = v;
    }
    if let Some(v) = args.lr {
        cfg.lr0 = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.grad_clip {
        cfg.grad_clip = Some(v);
    }
    if args.no_grad_clip {
        cfg.grad_clip = None;
    }
    if let Some(v) = args.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = args.seed {
        cfg.rng_seed = v;
    }
    cfg
}

fn write_report(report: &TrainReport, out: &Path) -> Result<()> {
    let json_path = out.with_extension("report.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(report)? + "\n")?;
    let csv_path = out.with_extension("metrics.csv");
    std::fs::write(&csv_path, report.metrics_csv())?;
    Ok(())
}

#[derive(Clone, Copy, Default)]
struct GanOverrides {
    variance_weight: Option<f64>,
    noise_dim: Option<usize>,
}

fn run(kind: ModelKind, args: CommonArgs, gan_extra: Option<GanOverrides>) -> Result<()> {
    let started = std::time::Instant::now();
    init_workers(args.workers);
    let chain = load_chain(&args.chain)?;
    let workspace: Workspace = args.preset.into();

    let file_cfg: FileConfig = load_config_layer(args.config.as_deref())?;
    let goals = match (&file_cfg.goals, &args.goals) {
        (_, Some(path)) => load_goals(Some(path), chain.dof())?,
        (Some(g), None) => {
            g.validate(chain.dof())?;
            g.clone()
        }
        (None, None) => load_goals(None, chain.dof())?,
    };

    let (net, base_cfg, noise_dim) = match kind {
        ModelKind::Mlp => (
            mlp_preset(workspace, chain.dof(), args.width_factor),
            TrainConfig::desk_mlp(workspace),
            0,
        ),
        ModelKind::Gan => {
            let (net, preset_noise) = gan_preset(workspace, chain.dof(), args.width_factor);
            let mut cfg = TrainConfig::desk_gan(workspace);
            cfg.noise_dim = preset_noise;
            (net, cfg, preset_noise)
        }
    };
    let mut cfg = merge_config(base_cfg, &file_cfg, &args);
    let mut net = net;
    if let Some(overrides) = gan_extra {
        if let Some(v) = overrides.variance_weight {
            cfg.variance_weight = v;
        }
        if let Some(v) = overrides.noise_dim {
            cfg.noise_dim = v;
        }
        if cfg.noise_dim != noise_dim {
            // Rebuild the net for the requested noise width.
            let mut sizes = net.layer_sizes().to_vec();
            sizes[0] = 7 + cfg.noise_dim;
            let tanh_tail = net
                .activations()
                .iter()
                .rev()
                .take_while(|&&a| a == ngik_core::neural::Activation::Tanh)
                .count();
            net = ngik_core::neural::DenseNet::with_tanh_tail(sizes, tanh_tail);
        }
    }

    let train_path = args.data.join("train.csv");
    let val_path = args.data.join("val.csv");
    let (train_set, meta) = read_dataset(&train_path, &chain, args.verify)
        .with_context(|| format!("loading {}", train_path.display()))?;
    let (val_set, _) = read_dataset(&val_path, &chain, args.verify)
        .with_context(|| format!("loading {}", val_path.display()))?;
    let normalizer = Normalizer::new(&meta.bounds, &chain);

    if args.init_only {
        let mut init_net = net.clone();
        init_net.init_uniform(ngik_core::rngutil::derive_seed(cfg.rng_seed, 0x5EED));
        let model = NeuralModel {
            net: init_net,
            normalizer,
            kind,
            noise_dim: if kind == ModelKind::Gan { cfg.noise_dim } else { noise_dim },
            chain_hash: chain.digest(),
            rng_seed: cfg.rng_seed,
        };
        save_model(&model, &args.out)?;
        println!("wrote initialized model to {}", args.out.display());
        return Ok(());
    }

    let result = match kind {
        ModelKind::Mlp => train_mlp(&chain, &train_set, &val_set, &net, &normalizer, &cfg, &goals),
        ModelKind::Gan => train_gan(&chain, &train_set, &val_set, &net, &normalizer, &cfg, &goals),
    };
    let (model, report) = match result {
        Ok(ok) => ok,
        Err(ngik_core::Error::TrainingDiverged { restarts, report }) => {
            write_report(&report, &args.out)?;
            bail!("training diverged after {restarts} restart(s); report written");
        }
        Err(e) => return Err(e.into()),
    };

    save_model(&model, &args.out)?;
    write_report(&report, &args.out)?;

    let config = EffectiveConfig {
        kind: match kind {
            ModelKind::Mlp => "mlp",
            ModelKind::Gan => "gan",
        },
        preset: match workspace {
            Workspace::Small => "small",
            Workspace::Full => "full",
        },
        width_factor: args.width_factor,
        train: &cfg,
        goals: &goals,
    };
    let manifest = RunManifest::new(&config, &chain.digest(), vec![cfg.rng_seed], started);
    manifest.write(&args.out.with_extension("manifest.json"))?;

    let last = report.epochs.last().expect("at least one epoch");
    println!(
        "trained {} epochs (best {}): validation {:.3} mm / {:.3} deg; model at {}",
        report.epochs.len(),
        report.best_epoch,
        last.val_pos_mm,
        last.val_rot_deg,
        args.out.display()
    );
    Ok(())
}

pub fn run_mlp(args: MlpArgs) -> Result<()> {
    run(ModelKind::Mlp, args.common, None)
}

pub fn run_gan(args: GanArgs) -> Result<()> {
    let overrides = GanOverrides {
        variance_weight: args.variance_weight,
        noise_dim: args.noise_dim,
    };
    run(ModelKind::Gan, args.common, Some(overrides))
}

//! Run manifests: every artifact-producing command drops one next to its
//! outputs so the run can be reproduced from the recorded configuration
//! and seeds.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config_digest: String,
    pub chain_hash: String,
    pub rng_seeds: Vec<u64>,
    pub tool_version: String,
    /// Wall time of the run; timing lives here (and only here) so the data
    /// artifacts themselves stay byte-identical across reruns.
    pub wall_time_ms: f64,
    /// Timing extras such as evaluation solve times.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        config: &C,
        chain_hash: &str,
        rng_seeds: Vec<u64>,
        started: std::time::Instant,
    ) -> Self {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        RunManifest {
            command: std::env::args().collect(),
            config_digest: digest,
            chain_hash: chain_hash.to_string(),
            rng_seeds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: started.elapsed().as_secs_f64() * 1000.0,
            timing: None,
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

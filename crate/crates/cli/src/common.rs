//! Shared argument handling: chain loading, pose parsing, goal files.

use anyhow::{bail, Context, Result};
use ngik_core::goals::GoalSet;
use ngik_core::math::{Quaternion, Vec3};
use ngik_core::{parse_chain, KinematicChain, Pose};
use std::path::Path;

pub fn load_chain(path: &Path) -> Result<KinematicChain> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading chain file {}", path.display()))?;
    Ok(parse_chain(&text)?)
}

/// Parse `px,py,pz,qx,qy,qz,qw`. Quaternions within 1e-6 of unit norm are
/// renormalized (with a warning when they were off); anything further out
/// is rejected.
pub fn parse_pose(text: &str) -> Result<Pose> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 7 {
        bail!("pose needs 7 comma-separated values, got {}", parts.len());
    }
    let mut v = [0.0f64; 7];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p.trim().parse().with_context(|| format!("bad pose component '{p}'"))?;
    }
    let q = Quaternion::new(v[3], v[4], v[5], v[6]);
    let norm = q.norm();
    if (norm - 1.0).abs() > 1e-6 {
        bail!("quaternion norm {norm} is more than 1e-6 from unit; refusing to guess");
    }
    if (norm - 1.0).abs() > 1e-12 {
        eprintln!("warning: renormalizing input quaternion (norm {norm})");
    }
    Ok(Pose::new(Vec3::new(v[0], v[1], v[2]), q.normalized()))
}

/// Parse `xmin,ymin,zmin,xmax,ymax,zmax`.
pub fn parse_bounds(text: &str) -> Result<ngik_core::dataset::WorkspaceBounds> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 6 {
        bail!("bounds need 6 comma-separated values, got {}", parts.len());
    }
    let mut v = [0.0f64; 6];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p.trim().parse().with_context(|| format!("bad bounds component '{p}'"))?;
    }
    Ok(ngik_core::dataset::WorkspaceBounds::new(
        [v[0], v[1], v[2]],
        [v[3], v[4], v[5]],
    )?)
}

pub fn load_goals(path: Option<&Path>, dof: usize) -> Result<GoalSet> {
    let goals = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading goal file {}", p.display()))?;
            serde_json::from_str(&text).context("parsing goal file")?
        }
        None => GoalSet::desk_default(dof),
    };
    goals.validate(dof)?;
    Ok(goals)
}

/// Optional JSON config file whose fields are overridden by explicit
/// flags: flags win, then the file, then built-in defaults.
pub fn load_config_layer<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            serde_json::from_str(&text).context("parsing config file")
        }
        None => Ok(T::default()),
    }
}

pub fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("worker pool initialized once");
    }
}

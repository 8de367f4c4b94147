//! Dataset generation and persistence.
//!
//! Configurations are drawn uniformly per joint within the limits and
//! rejection-sampled until the tip position lands inside the workspace
//! bounds and an optional validity predicate passes. Every sample index
//! owns a derived RNG substream, so output files are byte-identical
//! regardless of worker count.

use crate::chain::{KinematicChain, Pose};
use crate::hull::convex_hull_volume_cm3;
use crate::kinematics::{fk, JointConfig};
use crate::math::{Quaternion, Vec3};
use crate::rngutil::stream_rng;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

/// Axis-aligned Cartesian workspace box, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl WorkspaceBounds {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if min[axis] >= max[axis] {
                return Err(Error::InvalidArgument(format!(
                    "workspace bounds: min {} >= max {} on axis {}",
                    min[axis],
                    max[axis],
                    ["x", "y", "z"][axis]
                )));
            }
        }
        Ok(WorkspaceBounds { min, max })
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let a = p.to_array();
        (0..3).all(|i| a[i] >= self.min[i] && a[i] <= self.max[i])
    }

    /// Per-dimension (min, max) pairs for the 7-D pose normalizer:
    /// position from the box, quaternion components fixed at [-1, 1].
    pub fn pose_bounds(&self) -> [(f64, f64); 7] {
        [
            (self.min[0], self.max[0]),
            (self.min[1], self.max[1]),
            (self.min[2], self.max[2]),
            (-1.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 1.0),
        ]
    }
}

/// One dataset row: a configuration and the pose it reaches.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub config: JointConfig,
    pub pose: Pose,
}

/// Sidecar metadata written next to each dataset file.
///
/// `volume_cm3` is the convex-hull volume of the sampled positions; it is
/// `None` for planar chains, whose positions have no 3-D hull.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub chain_hash: String,
    pub bounds: WorkspaceBounds,
    pub count: usize,
    pub rng_seed: u64,
    pub volume_cm3: Option<f64>,
    pub density: Option<f64>,
}

impl DatasetMeta {
    pub fn for_records(
        chain: &KinematicChain,
        bounds: WorkspaceBounds,
        rng_seed: u64,
        records: &[SampleRecord],
    ) -> Self {
        let positions: Vec<Vec3> = records.iter().map(|r| r.pose.position).collect();
        let volume_cm3 = convex_hull_volume_cm3(&positions).ok();
        let density = volume_cm3.map(|v| records.len() as f64 / v);
        DatasetMeta {
            chain_hash: chain.digest(),
            bounds,
            count: records.len(),
            rng_seed,
            volume_cm3,
            density,
        }
    }
}

/// Anything that can veto a sampled configuration (collision checkers plug
/// in here); the default accepts everything inside the joint limits.
pub type Validity<'a> = &'a (dyn Fn(&[f64]) -> bool + Sync);

pub fn accept_all(_: &[f64]) -> bool {
    true
}

const ABORT_WINDOW: u64 = 1_000_000;
const MIN_ACCEPT_RATE: f64 = 1e-3;

/// Draw exactly `count` samples. Deterministic for a given `rng_seed`.
///
/// Aborts with [`Error::BoundsUnreachable`] when the acceptance rate over a
/// million-attempt window falls below 0.1%.
pub fn generate(
    chain: &KinematicChain,
    bounds: WorkspaceBounds,
    count: usize,
    rng_seed: u64,
    validity: Validity<'_>,
) -> Result<Vec<SampleRecord>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let attempts = AtomicU64::new(0);
    let accepts = AtomicU64::new(0);
    let aborted = AtomicBool::new(false);

    let samples: Vec<Option<SampleRecord>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(rng_seed, i as u64);
            loop {
                if aborted.load(Ordering::Relaxed) {
                    return None;
                }
                let total = attempts.fetch_add(1, Ordering::Relaxed) + 1;
                if total % ABORT_WINDOW == 0 {
                    let rate = accepts.load(Ordering::Relaxed) as f64 / total as f64;
                    if rate < MIN_ACCEPT_RATE {
                        aborted.store(true, Ordering::Relaxed);
                        return None;
                    }
                }
                let config: Vec<f64> = chain
                    .joints()
                    .iter()
                    .map(|j| rng.random_range(j.lower..=j.upper))
                    .collect();
                let pose = fk(chain, &config);
                if bounds.contains(pose.position) && validity(&config) {
                    accepts.fetch_add(1, Ordering::Relaxed);
                    return Some(SampleRecord { config: JointConfig::new(config), pose });
                }
            }
        })
        .collect();

    if aborted.load(Ordering::Relaxed) {
        let total = attempts.load(Ordering::Relaxed);
        let rate = accepts.load(Ordering::Relaxed) as f64 / total as f64;
        return Err(Error::BoundsUnreachable { rate, window: total });
    }
    Ok(samples.into_iter().map(|s| s.expect("not aborted")).collect())
}

/// Shuffle and partition into (train, test, val). Sizes round down;
/// deterministic for a given seed.
pub fn split(
    records: Vec<SampleRecord>,
    test_frac: f64,
    val_frac: f64,
    rng_seed: u64,
) -> Result<(Vec<SampleRecord>, Vec<SampleRecord>, Vec<SampleRecord>)> {
    if !(0.0..1.0).contains(&test_frac)
        || !(0.0..1.0).contains(&val_frac)
        || test_frac <= 0.0
        || val_frac <= 0.0
        || test_frac + val_frac >= 1.0
    {
        return Err(Error::InvalidArgument(format!(
            "split fractions must lie in (0,1) and sum below 1, got {test_frac} and {val_frac}"
        )));
    }
    let n = records.len();
    let n_test = (n as f64 * test_frac).floor() as usize;
    let n_val = (n as f64 * val_frac).floor() as usize;
    if n_test == 0 || n_val == 0 {
        return Err(Error::InvalidArgument(format!(
            "{n} records are too few for non-empty test/validation splits"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(rng_seed, 0xB00C);
    // Fisher-Yates.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }

    let mut slots: Vec<Option<SampleRecord>> = records.into_iter().map(Some).collect();
    let take = |idx: &[usize], slots: &mut Vec<Option<SampleRecord>>| {
        idx.iter().map(|&i| slots[i].take().expect("disjoint")).collect::<Vec<_>>()
    };
    let test = take(&order[..n_test], &mut slots);
    let val = take(&order[n_test..n_test + n_val], &mut slots);
    let train = take(&order[n_test + n_val..], &mut slots);
    Ok((train, test, val))
}

/// Convex-hull volume of the sample positions, cm^3.
pub fn estimate_volume(records: &[SampleRecord]) -> Result<f64> {
    let positions: Vec<Vec3> = records.iter().map(|r| r.pose.position).collect();
    convex_hull_volume_cm3(&positions)
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("meta.json")
}

/// Write the CSV (17 significant digits) plus the sidecar metadata
/// document. Quaternions are sign-canonicalized to `w >= 0`.
pub fn write_dataset(records: &[SampleRecord], meta: &DatasetMeta, path: &Path) -> Result<()> {
    let dof = records.first().map(|r| r.config.len()).unwrap_or(0);
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);

    let mut header: Vec<String> = (0..dof).map(|i| format!("j{i}")).collect();
    header.extend(["px", "py", "pz", "qx", "qy", "qz", "qw"].map(String::from));
    writeln!(w, "{}", header.join(","))?;

    for rec in records {
        let mut fields: Vec<String> =
            rec.config.angles.iter().map(|v| format!("{v:.16e}")).collect();
        let mut v7 = rec.pose.to_vec7();
        let q = rec.pose.orientation.canonical();
        v7[3] = q.x;
        v7[4] = q.y;
        v7[5] = q.z;
        v7[6] = q.w;
        fields.extend(v7.iter().map(|v| format!("{v:.16e}")));
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;

    let meta_text = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Dataset(format!("metadata serialization: {e}")))?;
    std::fs::write(meta_path(path), meta_text + "\n")?;
    Ok(())
}

/// Read a dataset and its sidecar, checking the chain hash and row shape.
/// With `verify`, every stored pose is re-derived through FK and must match
/// within 1e-10.
pub fn read_dataset(
    path: &Path,
    chain: &KinematicChain,
    verify: bool,
) -> Result<(Vec<SampleRecord>, DatasetMeta)> {
    let meta_text = std::fs::read_to_string(meta_path(path))?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Dataset(format!("metadata parse: {e}")))?;
    let expected = chain.digest();
    if meta.chain_hash != expected {
        return Err(Error::ChainHashMismatch { found: meta.chain_hash, expected });
    }

    let dof = chain.dof();
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Dataset("empty dataset file".into()))??;
    let width = header.split(',').count();
    if width != dof + 7 {
        return Err(Error::Dataset(format!(
            "header has {width} columns, expected {} for a {dof}-DoF chain",
            dof + 7
        )));
    }

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dof + 7 {
            return Err(Error::DatasetRow {
                row: i + 1,
                reason: format!("{} columns, expected {}", fields.len(), dof + 7),
            });
        }
        let mut values = Vec::with_capacity(dof + 7);
        for f in &fields {
            values.push(f.parse::<f64>().map_err(|e| Error::DatasetRow {
                row: i + 1,
                reason: format!("bad float '{f}': {e}"),
            })?);
        }
        let config = JointConfig::new(values[..dof].to_vec());
        let pose = Pose::new(
            Vec3::new(values[dof], values[dof + 1], values[dof + 2]),
            Quaternion::new(values[dof + 3], values[dof + 4], values[dof + 5], values[dof + 6]),
        );
        if verify {
            let derived = fk(chain, &config.angles);
            let pos_ok = (derived.position - pose.position).norm() < 1e-10;
            let q = pose.orientation;
            let d = derived.orientation;
            let rot_ok = quat_component_dist(d, q) < 1e-10;
            if !pos_ok || !rot_ok {
                return Err(Error::DatasetRow {
                    row: i + 1,
                    reason: "stored pose does not match FK of stored config".into(),
                });
            }
        }
        records.push(SampleRecord { config, pose });
    }
    Ok((records, meta))
}

/// Component-wise distance between quaternions, minimized over sign.
pub fn quat_component_dist(a: Quaternion, b: Quaternion) -> f64 {
    let direct = (a.x - b.x).abs() + (a.y - b.y).abs() + (a.z - b.z).abs() + (a.w - b.w).abs();
    let flipped = (a.x + b.x).abs() + (a.y + b.y).abs() + (a.z + b.z).abs() + (a.w + b.w).abs();
    direct.min(flipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample_chains::{arm8, planar2};

    fn small_bounds() -> WorkspaceBounds {
        WorkspaceBounds::new([0.2, -0.9, 0.8], [0.85, 0.0, 1.4]).unwrap()
    }

    #[test]
    fn samples_stay_inside_bounds() {
        let chain = arm8();
        let bounds = small_bounds();
        let records = generate(&chain, bounds, 500, 11, &accept_all).unwrap();
        assert_eq!(records.len(), 500);
        for r in &records {
            assert!(bounds.contains(r.pose.position));
            assert!(chain.within_limits(&r.config.angles));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let chain = arm8();
        let bounds = small_bounds();
        let a = generate(&chain, bounds, 200, 42, &accept_all).unwrap();
        let b = generate(&chain, bounds, 200, 42, &accept_all).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn open_bounds_accept_nearly_everything() {
        let chain = planar2();
        let bounds = WorkspaceBounds::new([-3.0, -3.0, -1.0], [3.0, 3.0, 1.0]).unwrap();
        let records = generate(&chain, bounds, 1000, 3, &accept_all).unwrap();
        assert_eq!(records.len(), 1000);
    }

    #[test]
    fn unreachable_bounds_abort_with_diagnostic() {
        let chain = planar2();
        let bounds = WorkspaceBounds::new([50.0, 50.0, 50.0], [51.0, 51.0, 51.0]).unwrap();
        let err = generate(&chain, bounds, 10, 1, &accept_all).unwrap_err();
        assert!(matches!(err, Error::BoundsUnreachable { .. }), "{err}");
    }

    #[test]
    fn validity_predicate_is_honored() {
        let chain = planar2();
        let bounds = WorkspaceBounds::new([-3.0, -3.0, -1.0], [3.0, 3.0, 1.0]).unwrap();
        let only_positive_first = |c: &[f64]| c[0] > 0.0;
        let records = generate(&chain, bounds, 300, 5, &only_positive_first).unwrap();
        assert!(records.iter().all(|r| r.config.angles[0] > 0.0));
    }

    #[test]
    fn split_sizes_and_partition() {
        let chain = planar2();
        let bounds = WorkspaceBounds::new([-3.0, -3.0, -1.0], [3.0, 3.0, 1.0]).unwrap();
        let records = generate(&chain, bounds, 1000, 9, &accept_all).unwrap();
        let (train, test, val) = split(records.clone(), 0.10, 0.01, 9).unwrap();
        assert_eq!(train.len(), 890);
        assert_eq!(test.len(), 100);
        assert_eq!(val.len(), 10);

        // Exact partition: every input record appears exactly once.
        let mut all: Vec<&SampleRecord> = train.iter().chain(&test).chain(&val).collect();
        assert_eq!(all.len(), 1000);
        let key = |r: &SampleRecord| {
            r.config.angles.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        all.sort_by_key(|r| key(r));
        let mut orig: Vec<&SampleRecord> = records.iter().collect();
        orig.sort_by_key(|r| key(r));
        for (a, b) in all.iter().zip(&orig) {
            assert_eq!(a.config, b.config);
        }
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let chain = planar2();
        let bounds = WorkspaceBounds::new([-3.0, -3.0, -1.0], [3.0, 3.0, 1.0]).unwrap();
        let records = generate(&chain, bounds, 50, 2, &accept_all).unwrap();
        assert!(split(records.clone(), 0.5, 0.6, 1).is_err());
        // 50 records: 1% of 50 rounds down to zero -> error.
        assert!(split(records, 0.10, 0.01, 1).is_err());
    }

    #[test]
    fn round_trip_preserves_records() {
        let chain = arm8();
        let bounds = small_bounds();
        let records = generate(&chain, bounds, 100, 23, &accept_all).unwrap();
        let meta = DatasetMeta::for_records(&chain, bounds, 23, &records);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_dataset(&records, &meta, &path).unwrap();
        let (back, back_meta) = read_dataset(&path, &chain, true).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            assert_eq!(a.config, b.config);
            assert_eq!(a.pose.position, b.pose.position);
            assert!(quat_component_dist(a.pose.orientation, b.pose.orientation) == 0.0);
        }
        assert_eq!(back_meta.count, meta.count);
        assert_eq!(back_meta.chain_hash, meta.chain_hash);
    }

    #[test]
    fn tampered_hash_is_rejected() {
        let chain = arm8();
        let bounds = small_bounds();
        let records = generate(&chain, bounds, 20, 31, &accept_all).unwrap();
        let mut meta = DatasetMeta::for_records(&chain, bounds, 31, &records);
        meta.chain_hash = "deadbeef".into();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_dataset(&records, &meta, &path).unwrap();
        let err = read_dataset(&path, &chain, false).unwrap_err();
        assert!(matches!(err, Error::ChainHashMismatch { .. }), "{err}");
    }

    #[test]
    fn short_rows_are_rejected() {
        let chain = arm8();
        let bounds = small_bounds();
        let records = generate(&chain, bounds, 5, 37, &accept_all).unwrap();
        let meta = DatasetMeta::for_records(&chain, bounds, 37, &records);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_dataset(&records, &meta, &path).unwrap();

        // Drop one column from the second data row.
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let truncated = lines[2].rsplit_once(',').unwrap().0.to_string();
        lines[2] = truncated;
        std::fs::write(&path, lines.join("\n")).unwrap();

        let err = read_dataset(&path, &chain, false).unwrap_err();
        assert!(matches!(err, Error::DatasetRow { row: 2, .. }), "{err}");
    }

    #[test]
    fn meta_density_is_consistent() {
        let chain = arm8();
        let bounds = small_bounds();
        let records = generate(&chain, bounds, 300, 77, &accept_all).unwrap();
        let meta = DatasetMeta::for_records(&chain, bounds, 77, &records);
        let volume = meta.volume_cm3.expect("8-DoF samples span a volume");
        let density = meta.density.unwrap();
        assert!((density - 300.0 / volume).abs() / density < 1e-6);

        // Hull volume can never exceed the bounding box volume.
        let box_cm3 = 0.65 * 0.9 * 0.6 * 1e6;
        assert!(volume <= box_cm3);
    }

    #[test]
    fn planar_chain_has_no_volume() {
        let chain = planar2();
        let bounds = WorkspaceBounds::new([-3.0, -3.0, -1.0], [3.0, 3.0, 1.0]).unwrap();
        let records = generate(&chain, bounds, 50, 8, &accept_all).unwrap();
        assert!(estimate_volume(&records).is_err());
        let meta = DatasetMeta::for_records(&chain, bounds, 8, &records);
        assert!(meta.volume_cm3.is_none());
    }
}

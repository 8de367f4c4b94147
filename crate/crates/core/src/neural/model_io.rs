//! Model persistence.
//!
//! Layout: an 8-byte magic, a little-endian u32 manifest length, the JSON
//! manifest (layer sizes, activation tags, normalizer bounds, version,
//! seed), then a flat little-endian f64 parameter blob, per layer weights
//! first and biases second.

use super::{Activation, DenseNet, ModelKind, NeuralModel, Normalizer};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"NGIKMDL\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    kind: ModelKind,
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    noise_dim: usize,
    normalizer: Normalizer,
    chain_hash: String,
    rng_seed: u64,
}

pub fn save_model(model: &NeuralModel, path: &Path) -> Result<()> {
    let manifest = Manifest {
        version: VERSION,
        kind: model.kind,
        layer_sizes: model.net.layer_sizes().to_vec(),
        activations: model.net.activations().to_vec(),
        noise_dim: model.noise_dim,
        normalizer: model.normalizer.clone(),
        chain_hash: model.chain_hash.clone(),
        rng_seed: model.rng_seed,
    };
    let manifest_bytes = serde_json::to_vec(&manifest)
        .map_err(|e| Error::ModelFormat(format!("manifest serialization: {e}")))?;

    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&(manifest_bytes.len() as u32).to_le_bytes())?;
    file.write_all(&manifest_bytes)?;
    for l in 0..model.net.num_layers() {
        for &v in &model.net.weights()[l] {
            file.write_all(&v.to_le_bytes())?;
        }
        for &v in &model.net.biases()[l] {
            file.write_all(&v.to_le_bytes())?;
        }
    }
    file.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<NeuralModel> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)
        .map_err(|_| Error::ModelFormat("file too short for header".into()))?;
    if &magic != MAGIC {
        return Err(Error::ModelFormat("bad magic bytes".into()));
    }
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)?;
    let manifest_len = u32::from_le_bytes(len_bytes) as usize;
    let mut manifest_bytes = vec![0u8; manifest_len];
    file.read_exact(&mut manifest_bytes)
        .map_err(|_| Error::ModelFormat("truncated manifest".into()))?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)
        .map_err(|e| Error::ModelFormat(format!("manifest parse: {e}")))?;
    if manifest.version != VERSION {
        return Err(Error::ModelVersion { found: manifest.version, expected: VERSION });
    }

    let mut net = DenseNet::new(manifest.layer_sizes, manifest.activations);
    let mut read_f64s = |out: &mut [f64]| -> Result<()> {
        let mut buf = vec![0u8; out.len() * 8];
        file.read_exact(&mut buf)
            .map_err(|_| Error::ModelFormat("truncated parameter blob".into()))?;
        for (i, v) in out.iter_mut().enumerate() {
            *v = f64::from_le_bytes(buf[i * 8..i * 8 + 8].try_into().unwrap());
        }
        Ok(())
    };
    for l in 0..net.num_layers() {
        let mut w = std::mem::take(&mut net.weights_mut()[l]);
        read_f64s(&mut w)?;
        net.weights_mut()[l] = w;
        let mut b = std::mem::take(&mut net.biases_mut()[l]);
        read_f64s(&mut b)?;
        net.biases_mut()[l] = b;
    }

    Ok(NeuralModel {
        net,
        normalizer: manifest.normalizer,
        kind: manifest.kind,
        noise_dim: manifest.noise_dim,
        chain_hash: manifest.chain_hash,
        rng_seed: manifest.rng_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::WorkspaceBounds;
    use crate::sample_chains::spatial4;

    fn sample_model() -> NeuralModel {
        let chain = spatial4();
        let bounds = WorkspaceBounds::new([-1.0, -1.0, -0.5], [1.0, 1.0, 1.5]).unwrap();
        let mut net = DenseNet::with_tanh_tail(vec![7, 24, 16, 4], 2);
        net.init_uniform(77);
        NeuralModel {
            net,
            normalizer: Normalizer::new(&bounds, &chain),
            kind: ModelKind::Mlp,
            noise_dim: 0,
            chain_hash: chain.digest(),
            rng_seed: 77,
        }
    }

    #[test]
    fn round_trip_preserves_forward_outputs_bitwise() {
        let model = sample_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ngm");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.net, model.net);
        assert_eq!(back.normalizer, model.normalizer);

        let input = [0.1, -0.4, 0.9, 0.0, 0.0, 0.0, 1.0];
        let a = model.net.infer(&input);
        let b = back.net.infer(&input);
        assert_eq!(a, b);
    }

    #[test]
    fn file_size_matches_parameter_count() {
        let model = sample_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ngm");
        save_model(&model, &path).unwrap();

        let size = std::fs::metadata(&path).unwrap().len() as usize;
        let manifest_len = {
            let bytes = std::fs::read(&path).unwrap();
            u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize
        };
        assert_eq!(size, 8 + 4 + manifest_len + 8 * model.net.num_params());
    }

    #[test]
    fn wrong_version_is_rejected() {
        let model = sample_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ngm");
        save_model(&model, &path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        let manifest_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let manifest = String::from_utf8(bytes[12..12 + manifest_len].to_vec()).unwrap();
        let tampered = manifest.replace("\"version\":1", "\"version\":9");
        assert_ne!(manifest, tampered);
        bytes.splice(12..12 + manifest_len, tampered.into_bytes());
        std::fs::write(&path, &bytes).unwrap();

        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::ModelVersion { found: 9, .. }), "{err}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let model = sample_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ngm");
        save_model(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::ModelFormat(_)), "{err}");
    }
}

//! `manifest.json` plus one raw little-endian `f32` file per tensor.
//!
//! ```text
//! { "version": 1, "tensors": [ { "name": "utterances", "file": "utterances.bin",
//!   "dtype": "f32", "shape": [rows, dim], "row_keys": ["d1#0", ...] } ] }
//! ```

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use emotrans_core::corpus::normalize_label;
use emotrans_core::{EmbeddingMatrix, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
pub const DTYPE: &str = "f32";

/// Tensor names starting with this prefix hold emotion prototypes keyed by
/// word; every other tensor holds utterance rows.
pub const PROTOTYPE_PREFIX: &str = "prototypes.";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    file: String,
    dtype: String,
    shape: Vec<usize>,
    row_keys: Vec<String>,
}

fn file_name_for(name: &str) -> String {
    let stem: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{stem}.bin")
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

fn check_common_dim(matrices: &[EmbeddingMatrix], path: &Path) -> Result<()> {
    if let Some(first) = matrices.first() {
        if let Some(m) = matrices.iter().find(|m| m.dim != first.dim) {
            return Err(Error::format(
                path,
                format!(
                    "tensor '{}' has dim {} but '{}' has dim {}",
                    m.name, m.dim, first.name, first.dim
                ),
            ));
        }
    }
    Ok(())
}

/// Writes `matrices` into `dir`, which all share one embedding width.
pub fn write_manifest(matrices: &[EmbeddingMatrix], dir: &Path) -> Result<PathBuf> {
    check_common_dim(matrices, &dir.join(MANIFEST_FILE))?;
    write_tensors(matrices, dir)
}

/// Like [`write_manifest`] without the shared-width requirement; used for
/// checkpoints whose tensors have unrelated shapes.
pub fn write_tensors(matrices: &[EmbeddingMatrix], dir: &Path) -> Result<PathBuf> {
    let manifest = dir.join(MANIFEST_FILE);
    let mut names = HashSet::new();
    let mut files = HashSet::new();
    let mut entries = Vec::with_capacity(matrices.len());
    for m in matrices {
        m.validate()?;
        let file = file_name_for(&m.name);
        if !names.insert(m.name.as_str()) || !files.insert(file.clone()) {
            return Err(Error::format(
                &manifest,
                format!("duplicate tensor name '{}'", m.name),
            ));
        }
        entries.push(TensorEntry {
            name: m.name.clone(),
            file,
            dtype: DTYPE.to_string(),
            shape: vec![m.rows, m.dim],
            row_keys: m.row_keys.clone(),
        });
    }

    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    for (m, e) in matrices.iter().zip(&entries) {
        let bytes: Vec<u8> = m.data.iter().flat_map(|x| x.to_le_bytes()).collect();
        let path = dir.join(&e.file);
        fs::write(&path, bytes).map_err(Error::io(&path))?;
    }
    let mut json = serde_json::to_string_pretty(&Manifest {
        version: MANIFEST_VERSION,
        tensors: entries,
    })
    .expect("manifest serializes");
    json.push('\n');
    fs::write(&manifest, json).map_err(Error::io(&manifest))?;
    Ok(manifest)
}

/// Reads a manifest (or the directory holding one), requiring a shared
/// embedding width across tensors.
pub fn read_manifest(path: &Path) -> Result<Vec<EmbeddingMatrix>> {
    let matrices = read_tensors(path)?;
    check_common_dim(&matrices, &manifest_path(path))?;
    Ok(matrices)
}

pub fn read_tensors(path: &Path) -> Result<Vec<EmbeddingMatrix>> {
    let manifest = manifest_path(path);
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(&manifest).map_err(Error::io(&manifest))?;
    let parsed: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format(&manifest, e.to_string()))?;
    if parsed.version != MANIFEST_VERSION {
        return Err(Error::format(
            &manifest,
            format!("unsupported version {}", parsed.version),
        ));
    }
    let mut out = Vec::with_capacity(parsed.tensors.len());
    for e in parsed.tensors {
        if e.dtype != DTYPE {
            return Err(Error::format(
                &manifest,
                format!(
                    "tensor '{}' has dtype '{}', only '{DTYPE}' is supported",
                    e.name, e.dtype
                ),
            ));
        }
        let [rows, dim] = e.shape[..] else {
            return Err(Error::format(
                &manifest,
                format!("tensor '{}' shape must have two entries", e.name),
            ));
        };
        if e.row_keys.len() != rows {
            return Err(Error::format(
                &manifest,
                format!(
                    "tensor '{}' has {} row keys for {rows} rows",
                    e.name,
                    e.row_keys.len()
                ),
            ));
        }
        let plain = Path::new(&e.file)
            .file_name()
            .is_some_and(|f| f == e.file.as_str());
        if !plain {
            return Err(Error::format(
                &manifest,
                format!("tensor file '{}' must be a bare file name", e.file),
            ));
        }
        let bin = dir.join(&e.file);
        let bytes = fs::read(&bin).map_err(Error::io(&bin))?;
        let expected = (rows as u64)
            .checked_mul(dim as u64)
            .and_then(|v| v.checked_mul(4))
            .ok_or_else(|| {
                Error::format(&manifest, format!("tensor '{}' shape overflows", e.name))
            })?;
        if bytes.len() as u64 != expected {
            return Err(Error::Corruption {
                path: bin,
                expected,
                found: bytes.len() as u64,
            });
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push(EmbeddingMatrix::new(e.name, rows, dim, data, e.row_keys)?);
    }
    Ok(out)
}

/// Embedding manifest indexed for lookup by utterance key and by
/// prototype word.
#[derive(Debug)]
pub struct EmbeddingStore {
    matrices: Vec<EmbeddingMatrix>,
    utterances: HashMap<String, (usize, usize)>,
}

impl EmbeddingStore {
    pub fn open(path: &Path) -> Result<Self> {
        Self::from_matrices(read_manifest(path)?, &manifest_path(path))
    }

    pub fn from_matrices(matrices: Vec<EmbeddingMatrix>, origin: &Path) -> Result<Self> {
        let mut utterances = HashMap::new();
        for (t, m) in matrices.iter().enumerate() {
            if m.name.starts_with(PROTOTYPE_PREFIX) {
                continue;
            }
            for (r, key) in m.row_keys.iter().enumerate() {
                if utterances.insert(key.clone(), (t, r)).is_some() {
                    return Err(Error::format(
                        origin,
                        format!("utterance key '{key}' appears twice"),
                    ));
                }
            }
        }
        Ok(EmbeddingStore {
            matrices,
            utterances,
        })
    }

    pub fn dim(&self) -> Option<usize> {
        self.matrices.first().map(|m| m.dim)
    }

    pub fn matrices(&self) -> &[EmbeddingMatrix] {
        &self.matrices
    }

    pub fn tensor(&self, name: &str) -> Result<&EmbeddingMatrix> {
        self.matrices
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::MissingTensor {
                name: name.to_string(),
                available: self
                    .matrices
                    .iter()
                    .map(|m| m.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    /// Rows for utterance `keys`, in order.
    pub fn utterance_rows<S: AsRef<str>>(&self, keys: &[S]) -> Result<Matrix> {
        let dim = self.dim().unwrap_or(0);
        let mut data = Vec::with_capacity(keys.len() * dim);
        for key in keys {
            let key = key.as_ref();
            let &(t, r) = self.utterances.get(key).ok_or_else(|| Error::MissingRow {
                tensor: "<utterances>".into(),
                key: key.to_string(),
            })?;
            data.extend(self.matrices[t].row(r).iter().map(|&x| x as f64));
        }
        Ok(Matrix::from_vec(keys.len(), dim, data)?)
    }

    /// Rows of prototype tensor `name` for `words`, matched after label
    /// normalization.
    pub fn prototype_rows<S: AsRef<str>>(&self, name: &str, words: &[S]) -> Result<Matrix> {
        let t = self.tensor(name)?;
        let index: HashMap<String, usize> = t
            .row_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (normalize_label(k), i))
            .collect();
        let mut data = Vec::with_capacity(words.len() * t.dim);
        for w in words {
            let w = w.as_ref();
            let &r = index
                .get(&normalize_label(w))
                .ok_or_else(|| Error::MissingRow {
                    tensor: name.to_string(),
                    key: w.to_string(),
                })?;
            data.extend(t.row(r).iter().map(|&x| x as f64));
        }
        Ok(Matrix::from_vec(words.len(), t.dim, data)?)
    }
}

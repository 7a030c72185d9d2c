//! Checkpoint directory: a tensor manifest with `transitions`,
//! `adapter.weight` and `adapter.bias`, plus `config.json`.
//!
//! Parameters are stored as `f32`. The trainer already rounds its snapshots
//! to `f32`, so a saved and reloaded checkpoint predicts bit-identically.

use std::fs;
use std::path::Path;

use emotrans_core::trainer::SelectionMetric;
use emotrans_core::{
    AdapterParams, Checkpoint, EmbeddingMatrix, LabelSet, Matrix, Model, TrainConfig,
    TransitionModel,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_store::{read_tensors, write_tensors};

pub const CONFIG_FILE: &str = "config.json";
const VERSION: u32 = 1;

pub const START_KEY: &str = "<start>";
pub const END_KEY: &str = "<end>";

#[derive(Debug, Serialize, Deserialize)]
struct ConfigBlock {
    version: u32,
    epoch: usize,
    score: f64,
    metric: SelectionMetric,
    seen_labels: Vec<String>,
    adapter_enabled: bool,
    train: TrainConfig,
}

pub fn save_checkpoint(dir: &Path, ckpt: &Checkpoint, seen: &LabelSet) -> Result<()> {
    let model = &ckpt.model;
    if seen.len() != model.num_labels() {
        return Err(emotrans_core::Error::Shape {
            what: "seen labels",
            expected: model.num_labels(),
            found: seen.len(),
        }
        .into());
    }
    let mut state_keys = vec![START_KEY.to_string()];
    state_keys.extend(seen.words().iter().cloned());
    state_keys.push(END_KEY.to_string());
    let d = model.dim();
    let dim_keys: Vec<String> = (0..d).map(|i| i.to_string()).collect();
    let bias = Matrix::from_vec(1, d, model.adapter.bias.clone())?;
    let tensors = [
        EmbeddingMatrix::from_matrix("transitions", model.transitions.scores(), state_keys)?,
        EmbeddingMatrix::from_matrix("adapter.weight", &model.adapter.weight, dim_keys)?,
        EmbeddingMatrix::from_matrix("adapter.bias", &bias, vec!["bias".to_string()])?,
    ];
    write_tensors(&tensors, dir)?;

    let block = ConfigBlock {
        version: VERSION,
        epoch: ckpt.epoch,
        score: ckpt.score,
        metric: ckpt.metric,
        seen_labels: seen.words().to_vec(),
        adapter_enabled: model.adapter.enabled,
        train: ckpt.config.clone(),
    };
    let mut json = serde_json::to_string_pretty(&block)
        .map_err(|e| Error::format(dir.join(CONFIG_FILE), e.to_string()))?;
    json.push('\n');
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, json).map_err(Error::io(&path))?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<(Checkpoint, LabelSet)> {
    let config_path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&config_path).map_err(Error::io(&config_path))?;
    let block: ConfigBlock =
        serde_json::from_str(&text).map_err(|e| Error::format(&config_path, e.to_string()))?;
    if block.version != VERSION {
        return Err(Error::format(
            &config_path,
            format!("unsupported version {}", block.version),
        ));
    }
    let seen = LabelSet::seen(&block.seen_labels)?;

    let tensors = read_tensors(dir)?;
    let get = |name: &str| {
        tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::format(dir, format!("checkpoint lacks tensor '{name}'")))
    };
    let transitions = get("transitions")?;
    let n = seen.len();
    if transitions.rows != n + 2 || transitions.dim != n + 2 {
        return Err(Error::format(
            dir,
            format!("transitions must be {0}x{0}", n + 2),
        ));
    }
    let weight = get("adapter.weight")?;
    let bias = get("adapter.bias")?;
    let d = weight.rows;
    if weight.dim != d || bias.rows != 1 || bias.dim != d {
        return Err(Error::format(dir, "adapter shapes disagree"));
    }
    let model = Model {
        transitions: TransitionModel::from_scores(transitions.to_matrix())?,
        adapter: AdapterParams {
            weight: weight.to_matrix(),
            bias: bias.to_matrix().as_slice().to_vec(),
            enabled: block.adapter_enabled,
        },
    };
    let ckpt = Checkpoint {
        model,
        config: block.train,
        epoch: block.epoch,
        score: block.score,
        metric: block.metric,
    };
    Ok((ckpt, seen))
}

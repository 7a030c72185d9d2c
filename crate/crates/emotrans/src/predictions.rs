//! Per-utterance prediction records, one JSON object per line.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use emotrans_core::{Conversation, LabelSet, Prediction};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub conversation_id: String,
    pub index: usize,
    pub predicted: String,
    /// Seen label on the decoded path (or the per-utterance argmax without
    /// the CRF).
    pub seen_label: String,
    /// Row of transfer weights over seen labels; absent without the CRF.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<Vec<f64>>,
    /// Cosine to every unseen prototype.
    pub cosines: Vec<f64>,
}

/// Records for one decoded conversation.
pub fn records_for(
    conv: &Conversation,
    pred: &Prediction,
    seen: &LabelSet,
    unseen: &LabelSet,
) -> Vec<PredictionRecord> {
    (0..conv.len())
        .map(|i| PredictionRecord {
            conversation_id: conv.id.clone(),
            index: i,
            predicted: unseen
                .word(pred.unseen_pred[i])
                .unwrap_or_default()
                .to_string(),
            seen_label: seen
                .word(pred.seen_labels[i])
                .unwrap_or_default()
                .to_string(),
            transfer: pred.decode.as_ref().map(|d| d.transfer.row(i).to_vec()),
            cosines: pred.unseen_cosines.row(i).to_vec(),
        })
        .collect()
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::format(path, e.to_string()))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(Error::io(path))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Pairs gold labels in `conversations` with predicted unseen label ids.
/// Utterances without a gold label are skipped; every labelled utterance
/// needs a prediction.
pub fn align(
    conversations: &[Conversation],
    records: &[PredictionRecord],
    unseen: &LabelSet,
    path: &Path,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let by_key: HashMap<(&str, usize), &PredictionRecord> = records
        .iter()
        .map(|r| ((r.conversation_id.as_str(), r.index), r))
        .collect();
    let (mut gold, mut pred) = (Vec::new(), Vec::new());
    for c in conversations {
        for (i, u) in c.utterances.iter().enumerate() {
            let Some(g) = u.gold_label else { continue };
            let r = by_key
                .get(&(c.id.as_str(), i))
                .ok_or_else(|| Error::format(path, format!("no prediction for {}#{i}", c.id)))?;
            let p = unseen.index_of(&r.predicted).ok_or_else(|| {
                Error::format(
                    path,
                    format!("predicted label '{}' is not an unseen label", r.predicted),
                )
            })?;
            gold.push(g);
            pred.push(p);
        }
    }
    Ok((gold, pred))
}

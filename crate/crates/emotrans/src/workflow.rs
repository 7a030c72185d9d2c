//! Glue between files on disk and the core pipeline.

use std::path::Path;

use emotrans_core::corpus::{validate_split, SplitReport};
use emotrans_core::{
    Checkpoint, Conversation, DescriptionMode, EmotionPrototype, EncodedConversation, LabelSet,
    Matrix, Prediction,
};

use crate::descriptions;
use crate::error::Result;
use crate::tensor_store::EmbeddingStore;

/// Embeddings and gold labels for each conversation.
pub fn encode_corpus(
    store: &EmbeddingStore,
    conversations: &[Conversation],
) -> Result<Vec<EncodedConversation>> {
    conversations
        .iter()
        .map(|c| {
            Ok(EncodedConversation {
                id: c.id.clone(),
                embeddings: store.utterance_rows(&c.utterance_keys())?,
                labels: c.utterances.iter().map(|u| u.gold_label).collect(),
            })
        })
        .collect()
}

pub fn prototype_matrix(
    store: &EmbeddingStore,
    mode: DescriptionMode,
    labels: &LabelSet,
) -> Result<Matrix> {
    store.prototype_rows(&mode.tensor_name(), labels.words())
}

/// Unseen labels: the explicit list if given, otherwise every described
/// word outside the seen set, in file order.
pub fn unseen_labels(
    explicit: &[String],
    described: Option<&[EmotionPrototype]>,
    seen: &LabelSet,
) -> Result<LabelSet> {
    let words: Vec<String> = if !explicit.is_empty() {
        explicit.to_vec()
    } else if let Some(protos) = described {
        protos
            .iter()
            .map(|p| p.word.clone())
            .filter(|w| seen.index_of(w).is_none())
            .collect()
    } else {
        Vec::new()
    };
    let unseen = LabelSet::unseen(&words)?;
    unseen.check_usable()?;
    if let SplitReport::Overlap(shared) = validate_split(seen, &unseen) {
        return Err(emotrans_core::Error::Argument(format!(
            "seen and unseen labels overlap: {}",
            shared.join(", ")
        ))
        .into());
    }
    Ok(unseen)
}

/// Checks the description file covers `labels` in `mode`.
pub fn check_descriptions(
    path: &Path,
    protos: &[EmotionPrototype],
    labels: &LabelSet,
    mode: DescriptionMode,
) -> Result<()> {
    descriptions::check_coverage(protos, labels.words(), mode, path)
}

/// Zero-shot predictions for every conversation under a checkpoint.
pub fn predict_corpus(
    ckpt: &Checkpoint,
    seen: &LabelSet,
    unseen: &LabelSet,
    store: &EmbeddingStore,
    conversations: &[Conversation],
) -> Result<Vec<Prediction>> {
    let mode = ckpt.config.led_mode;
    let seen_p = prototype_matrix(store, mode, seen)?;
    let unseen_p = prototype_matrix(store, mode, unseen)?;
    let cfg = ckpt.config.pipeline();
    encode_corpus(store, conversations)?
        .iter()
        .map(|c| {
            Ok(ckpt
                .model
                .predict(&c.embeddings, &seen_p, &unseen_p, &cfg)?)
        })
        .collect()
}

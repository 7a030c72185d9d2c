//! Conversations, utterances and emotion label vocabularies.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelRole {
    Seen,
    Unseen,
}

/// Ordered vocabulary of emotion words.
///
/// Words are stored trimmed and lower-cased; lookups normalize the same way,
/// so `"Joy "` resolves to `"joy"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<String>,
    role: LabelRole,
}

pub fn normalize_label(word: &str) -> String {
    word.trim().to_lowercase()
}

impl LabelSet {
    pub fn new<S: AsRef<str>>(words: &[S], role: LabelRole) -> Result<Self> {
        let mut labels: Vec<String> = Vec::with_capacity(words.len());
        for w in words {
            let w = normalize_label(w.as_ref());
            if w.is_empty() {
                return Err(Error::argument("empty emotion word in label set"));
            }
            if labels.contains(&w) {
                return Err(Error::argument(format!("duplicate emotion word '{w}'")));
            }
            labels.push(w);
        }
        Ok(LabelSet { labels, role })
    }

    pub fn seen<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        Self::new(words, LabelRole::Seen)
    }

    pub fn unseen<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        Self::new(words, LabelRole::Unseen)
    }

    pub fn role(&self) -> LabelRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.labels
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    /// Index of `word` after normalization.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        let w = normalize_label(word);
        self.labels.iter().position(|l| *l == w)
    }

    /// Checks the size requirement for the set's role: training needs at
    /// least two seen labels, prediction at least one unseen label.
    pub fn check_usable(&self) -> Result<()> {
        let min = match self.role {
            LabelRole::Seen => 2,
            LabelRole::Unseen => 1,
        };
        if self.len() < min {
            return Err(Error::argument(format!(
                "{:?} label set needs at least {min} labels, has {}",
                self.role,
                self.len()
            )));
        }
        Ok(())
    }
}

/// Outcome of checking that the seen and unseen vocabularies are disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitReport {
    Disjoint,
    /// Every word present in both sets, in seen-set order.
    Overlap(Vec<String>),
}

impl SplitReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, SplitReport::Disjoint)
    }
}

pub fn validate_split(seen: &LabelSet, unseen: &LabelSet) -> SplitReport {
    let shared: Vec<String> = seen
        .words()
        .iter()
        .filter(|w| unseen.index_of(w).is_some())
        .cloned()
        .collect();
    if shared.is_empty() {
        SplitReport::Disjoint
    } else {
        SplitReport::Overlap(shared)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub text: String,
    /// Kept for provenance; no computation reads it.
    pub speaker_id: String,
    pub gold_label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    pub id: String,
    pub utterances: Vec<Utterance>,
}

impl Conversation {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Embedding row key of the `index`-th utterance (0-based).
    pub fn utterance_key(&self, index: usize) -> String {
        utterance_key(&self.id, index)
    }

    pub fn utterance_keys(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.utterance_key(i)).collect()
    }

    /// Gold labels, or `None` if any utterance lacks one.
    pub fn gold_labels(&self) -> Option<Vec<usize>> {
        self.utterances.iter().map(|u| u.gold_label).collect()
    }
}

pub fn utterance_key(conversation_id: &str, index: usize) -> String {
    let mut key = conversation_id.to_string();
    key.push('#');
    key.push_str(&index.to_string());
    key
}

//! Emotion description files: one JSON object per line,
//! `{"word": .., "dict": .., "llm": [..]}`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use emotrans_core::corpus::normalize_label;
use emotrans_core::led::assemble_description;
use emotrans_core::{DescriptionMode, EmotionPrototype};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptionRecord {
    pub word: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dict: Option<String>,
    #[serde(default)]
    pub llm: Vec<String>,
}

impl From<DescriptionRecord> for EmotionPrototype {
    fn from(r: DescriptionRecord) -> Self {
        EmotionPrototype {
            word: r.word,
            dict_description: r.dict,
            llm_sentences: r.llm,
            embedding: None,
        }
    }
}

impl From<&EmotionPrototype> for DescriptionRecord {
    fn from(p: &EmotionPrototype) -> Self {
        DescriptionRecord {
            word: p.word.clone(),
            dict: p.dict_description.clone(),
            llm: p.llm_sentences.clone(),
        }
    }
}

pub fn parse_descriptions(text: &str, path: &Path) -> Result<Vec<EmotionPrototype>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let record: DescriptionRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let key = normalize_label(&record.word);
        if key.is_empty() {
            return Err(Error::format(
                path,
                format!("line {}: empty emotion word", i + 1),
            ));
        }
        if !seen.insert(key) {
            return Err(Error::format(
                path,
                format!("line {}: duplicate emotion word '{}'", i + 1, record.word),
            ));
        }
        out.push(record.into());
    }
    Ok(out)
}

pub fn load_descriptions(path: &Path) -> Result<Vec<EmotionPrototype>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_descriptions(&text, path)
}

pub fn write_descriptions(prototypes: &[EmotionPrototype]) -> String {
    let mut out = String::new();
    for p in prototypes {
        out.push_str(
            &serde_json::to_string(&DescriptionRecord::from(p)).expect("record serializes"),
        );
        out.push('\n');
    }
    out
}

/// Finds the prototype for `word` after label normalization.
pub fn find<'a>(prototypes: &'a [EmotionPrototype], word: &str) -> Option<&'a EmotionPrototype> {
    let key = normalize_label(word);
    prototypes.iter().find(|p| normalize_label(&p.word) == key)
}

/// Checks that every word has a description usable under `mode`.
pub fn check_coverage<S: AsRef<str>>(
    prototypes: &[EmotionPrototype],
    words: &[S],
    mode: DescriptionMode,
    path: &Path,
) -> Result<()> {
    for w in words {
        let w = w.as_ref();
        let p = find(prototypes, w)
            .ok_or_else(|| Error::format(path, format!("no description for '{w}'")))?;
        assemble_description(p, mode).map_err(|e| Error::format(path, format!("'{w}': {e}")))?;
    }
    Ok(())
}

/// Input line for the encoder: which tensor and row a text belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderInput {
    pub tensor: String,
    pub key: String,
    pub text: String,
}

/// Assembled description texts for every prototype under `mode`.
pub fn encoder_inputs(
    prototypes: &[EmotionPrototype],
    mode: DescriptionMode,
) -> emotrans_core::Result<Vec<EncoderInput>> {
    prototypes
        .iter()
        .map(|p| {
            Ok(EncoderInput {
                tensor: mode.tensor_name(),
                key: normalize_label(&p.word),
                text: assemble_description(p, mode)?,
            })
        })
        .collect()
}

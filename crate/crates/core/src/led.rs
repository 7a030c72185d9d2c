//! Emotion descriptions: prompt construction for generated example sentences
//! and assembly of the text that is encoded into an emotion prototype.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROMPT_TEMPLATE: &str = "Write two sentences expressing [MASK]'s emotions.";
const MASK: &str = "[MASK]";

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

/// Default number of generated sentences per emotion.
pub const DEFAULT_DESCRIPTION_COUNT: usize = 2;

/// One emotion label with its dictionary gloss and generated sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionPrototype {
    pub word: String,
    pub dict_description: Option<String>,
    pub llm_sentences: Vec<String>,
    #[serde(skip)]
    pub embedding: Option<Vec<f64>>,
}

/// Which parts of an [`EmotionPrototype`] go into the encoded text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DescriptionMode {
    /// Word, dictionary gloss and the first `count` generated sentences.
    Full { count: usize },
    /// Word and dictionary gloss only.
    DictOnly,
    /// The bare emotion word.
    WordOnly,
}

impl Default for DescriptionMode {
    fn default() -> Self {
        DescriptionMode::Full {
            count: DEFAULT_DESCRIPTION_COUNT,
        }
    }
}

impl DescriptionMode {
    /// Tensor name under which prototypes encoded in this mode are stored.
    pub fn tensor_name(&self) -> String {
        match self {
            DescriptionMode::Full { count } => format!("prototypes.full{count}"),
            DescriptionMode::DictOnly => "prototypes.dict".into(),
            DescriptionMode::WordOnly => "prototypes.word".into(),
        }
    }
}

/// Fills the prompt template with `word`.
pub fn build_prompt(word: &str) -> Result<String> {
    if word.is_empty() {
        return Err(Error::argument("emotion word must not be empty"));
    }
    Ok(PROMPT_TEMPLATE.replacen(MASK, word, 1))
}

/// Space-joined `[CLS] word dict sentences... [SEP]` text for the given mode.
pub fn assemble_description(proto: &EmotionPrototype, mode: DescriptionMode) -> Result<String> {
    if proto.word.is_empty() {
        return Err(Error::argument("emotion word must not be empty"));
    }
    let mut parts: Vec<&str> = Vec::with_capacity(6);
    parts.push(CLS);
    parts.push(&proto.word);
    match mode {
        DescriptionMode::WordOnly => {}
        DescriptionMode::DictOnly | DescriptionMode::Full { .. } => {
            let dict = proto.dict_description.as_deref().ok_or_else(|| {
                Error::argument(format!("'{}' has no dictionary description", proto.word))
            })?;
            parts.push(dict);
        }
    }
    if let DescriptionMode::Full { count } = mode {
        if count == 0 {
            return Err(Error::argument("description count must be positive"));
        }
        if proto.llm_sentences.len() < count {
            return Err(Error::argument(format!(
                "'{}' has {} generated sentences, mode needs {count}",
                proto.word,
                proto.llm_sentences.len()
            )));
        }
        parts.extend(proto.llm_sentences[..count].iter().map(String::as_str));
    }
    parts.push(SEP);
    Ok(parts.join(" "))
}

//! Tab-separated corpus files, one utterance per line:
//! `conversation_id \t speaker_id \t label_or_- \t text`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use emotrans_core::corpus::normalize_label;
use emotrans_core::{Conversation, LabelSet, Utterance};

use crate::error::{Error, Result};

/// Marks an utterance without a gold label.
pub const NO_LABEL: &str = "-";

/// What to do with a label word outside the given vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownLabels {
    Reject,
    /// Keep the utterance with no gold label.
    Drop,
}

struct Record<'a> {
    conversation: &'a str,
    speaker: &'a str,
    label: &'a str,
    text: &'a str,
}

fn split_record<'a>(line: &'a str, path: &Path, line_no: usize) -> Result<Record<'a>> {
    let parse_err = |message: &str| Error::Parse {
        path: path.to_path_buf(),
        line: line_no,
        message: message.to_string(),
    };
    let mut fields = line.splitn(4, '\t');
    let (Some(conversation), Some(speaker), Some(label), Some(text)) =
        (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err(parse_err("expected 4 tab-separated fields"));
    };
    if conversation.is_empty() {
        return Err(parse_err("empty conversation id"));
    }
    if label.trim().is_empty() {
        return Err(parse_err("empty label field (use '-' for none)"));
    }
    if text.is_empty() {
        return Err(parse_err("empty utterance text"));
    }
    Ok(Record {
        conversation,
        speaker,
        label,
        text,
    })
}

fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses corpus text; `path` only labels diagnostics.
pub fn parse_corpus(
    text: &str,
    labels: &LabelSet,
    unknown: UnknownLabels,
    path: &Path,
) -> Result<Vec<Conversation>> {
    let mut out: Vec<Conversation> = Vec::new();
    let mut finished = std::collections::HashSet::new();
    for (line_no, line) in records(text) {
        let r = split_record(line, path, line_no)?;
        let gold = if r.label == NO_LABEL {
            None
        } else {
            match (labels.index_of(r.label), unknown) {
                (Some(id), _) => Some(id),
                (None, UnknownLabels::Drop) => None,
                (None, UnknownLabels::Reject) => {
                    return Err(Error::Vocabulary {
                        path: path.to_path_buf(),
                        line: line_no,
                        word: r.label.trim().to_string(),
                    })
                }
            }
        };
        let utterance = Utterance {
            text: r.text.to_string(),
            speaker_id: r.speaker.to_string(),
            gold_label: gold,
        };
        match out.last_mut() {
            Some(c) if c.id == r.conversation => c.utterances.push(utterance),
            _ => {
                if let Some(prev) = out.last() {
                    finished.insert(prev.id.clone());
                }
                if finished.contains(r.conversation) {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!(
                            "records of conversation '{}' are not contiguous",
                            r.conversation
                        ),
                    });
                }
                out.push(Conversation {
                    id: r.conversation.to_string(),
                    utterances: vec![utterance],
                });
            }
        }
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::io(path))
}

/// Loads a corpus whose every gold label must be in `labels`.
pub fn load_corpus(path: &Path, labels: &LabelSet) -> Result<Vec<Conversation>> {
    parse_corpus(&read(path)?, labels, UnknownLabels::Reject, path)
}

/// Loads a corpus keeping only gold labels found in `labels`.
pub fn load_corpus_lenient(path: &Path, labels: &LabelSet) -> Result<Vec<Conversation>> {
    parse_corpus(&read(path)?, labels, UnknownLabels::Drop, path)
}

/// Distinct normalized label words in order of first appearance.
pub fn scan_labels(path: &Path) -> Result<Vec<String>> {
    let text = read(path)?;
    let mut words: Vec<String> = Vec::new();
    for (line_no, line) in records(&text) {
        let r = split_record(line, path, line_no)?;
        if r.label != NO_LABEL {
            let w = normalize_label(r.label);
            if !words.contains(&w) {
                words.push(w);
            }
        }
    }
    Ok(words)
}

/// Serializes conversations back to corpus text.
pub fn write_corpus(
    conversations: &[Conversation],
    labels: &LabelSet,
) -> emotrans_core::Result<String> {
    let invalid = |what: String| emotrans_core::Error::Argument(what);
    let mut out = String::new();
    for c in conversations {
        if c.id.is_empty() || c.id.contains(['\t', '\n', '\r']) {
            return Err(invalid(format!(
                "conversation id '{}' cannot be written",
                c.id
            )));
        }
        for u in &c.utterances {
            if u.speaker_id.contains(['\t', '\n', '\r'])
                || u.text.is_empty()
                || u.text.contains(['\n', '\r'])
            {
                return Err(invalid(format!(
                    "utterance in '{}' cannot be written",
                    c.id
                )));
            }
            let label = match u.gold_label {
                None => NO_LABEL,
                Some(id) => labels
                    .word(id)
                    .ok_or_else(|| invalid(format!("label id {id} outside vocabulary")))?,
            };
            writeln!(out, "{}\t{}\t{}\t{}", c.id, u.speaker_id, label, u.text)
                .expect("string write");
        }
    }
    Ok(out)
}

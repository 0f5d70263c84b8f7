//! Score-log data model: per-token confidence scores of one model on one
//! dataset, plus the QA dataset records they were computed from.
//!
//! On disk a score log is line-delimited JSON. The first line is a header
//! naming the model, the dataset and their roles; every following line is
//! one [`ScoreEntry`].

mod align;
mod record;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

pub use align::{align_core_tokens, normalize_token, CoreAlignment};
pub use record::{load_dataset, parse_dataset, write_dataset, MultipleChoice, QARecord};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelRole {
    #[serde(rename = "M_o")]
    Original,
    #[serde(rename = "M_t")]
    Target,
    #[serde(rename = "M_u")]
    Unlearned,
    #[serde(rename = "M_r")]
    Retrained,
    #[serde(rename = "other")]
    Other,
}

impl ModelRole {
    pub fn label(self) -> &'static str {
        match self {
            ModelRole::Original => "M_o",
            ModelRole::Target => "M_t",
            ModelRole::Unlearned => "M_u",
            ModelRole::Retrained => "M_r",
            ModelRole::Other => "other",
        }
    }
}

impl fmt::Display for ModelRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetRole {
    #[serde(rename = "D_f")]
    Forget,
    #[serde(rename = "D_v")]
    Validation,
    #[serde(rename = "D_r")]
    Retain,
    #[serde(rename = "D_u")]
    Update,
    #[serde(rename = "holdout")]
    Holdout,
    #[serde(rename = "other")]
    Other,
}

impl DatasetRole {
    pub fn label(self) -> &'static str {
        match self {
            DatasetRole::Forget => "D_f",
            DatasetRole::Validation => "D_v",
            DatasetRole::Retain => "D_r",
            DatasetRole::Update => "D_u",
            DatasetRole::Holdout => "holdout",
            DatasetRole::Other => "other",
        }
    }
}

impl fmt::Display for DatasetRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    model_id: String,
    model_role: ModelRole,
    dataset_id: String,
    dataset_role: DatasetRole,
    tokenizer_id: String,
    format_version: String,
}

/// Token confidence scores of one gold answer under teacher forcing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreEntry {
    pub record_id: String,
    pub answer_tokens: Vec<String>,
    pub token_probs: Vec<f64>,
    pub core_token_indices: Vec<usize>,
}

impl ScoreEntry {
    fn validate(&self, line: usize) -> Result<()> {
        let id = &self.record_id;
        if id.is_empty() {
            return Err(Error::invalid(line, id, "record_id", "must be non-empty"));
        }
        if self.answer_tokens.len() != self.token_probs.len() {
            return Err(Error::invalid(
                line,
                id,
                "token_probs",
                format!(
                    "length {} does not match {} answer tokens",
                    self.token_probs.len(),
                    self.answer_tokens.len()
                ),
            ));
        }
        for (i, &p) in self.token_probs.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(
                    line,
                    id,
                    "token_probs",
                    format!("probability {p} at position {i} is outside (0, 1]"),
                ));
            }
        }
        let len = self.answer_tokens.len();
        let mut prev: Option<usize> = None;
        for &idx in &self.core_token_indices {
            if idx >= len {
                return Err(Error::invalid(
                    line,
                    id,
                    "core_token_indices",
                    format!("index {idx} out of range for {len} tokens"),
                ));
            }
            if prev.is_some_and(|p| idx <= p) {
                return Err(Error::invalid(
                    line,
                    id,
                    "core_token_indices",
                    "indices must be strictly increasing",
                ));
            }
            prev = Some(idx);
        }
        Ok(())
    }
}

/// Per-example token confidence scores of one model on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenScoreLog {
    pub model_id: String,
    pub model_role: ModelRole,
    pub dataset_id: String,
    pub dataset_role: DatasetRole,
    pub tokenizer_id: String,
    entries: Vec<ScoreEntry>,
}

impl TokenScoreLog {
    /// Builds a log, enforcing the same invariants as the file reader.
    pub fn new(
        model_id: impl Into<String>,
        model_role: ModelRole,
        dataset_id: impl Into<String>,
        dataset_role: DatasetRole,
        tokenizer_id: impl Into<String>,
        entries: Vec<ScoreEntry>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, entry) in entries.iter().enumerate() {
            // line numbers as they would appear in the written file
            let line = i + 2;
            entry.validate(line)?;
            if !seen.insert(entry.record_id.as_str()) {
                return Err(Error::DuplicateRecord {
                    line,
                    record_id: entry.record_id.clone(),
                });
            }
        }
        Ok(TokenScoreLog {
            model_id: model_id.into(),
            model_role,
            dataset_id: dataset_id.into(),
            dataset_role,
            tokenizer_id: tokenizer_id.into(),
            entries,
        })
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Serializes to the line-delimited file format.
    pub fn write(&self) -> String {
        let header = Header {
            model_id: self.model_id.clone(),
            model_role: self.model_role,
            dataset_id: self.dataset_id.clone(),
            dataset_role: self.dataset_role,
            tokenizer_id: self.tokenizer_id.clone(),
            format_version: FORMAT_VERSION.to_string(),
        };
        let mut out = jsonl::to_line(&header);
        for entry in &self.entries {
            out.push_str(&jsonl::to_line(entry));
        }
        out
    }
}

/// Parses score-log text. Errors carry the 1-based line number.
pub fn parse_score_log(text: &str) -> Result<TokenScoreLog> {
    let mut lines = jsonl::numbered_lines(text);
    let (hline, hraw) = lines
        .next()
        .ok_or_else(|| Error::malformed(1, "missing header line"))?;
    let header: Header = jsonl::parse_line(hline, hraw)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::malformed(
            hline,
            format!(
                "unsupported format_version '{}' (expected '{FORMAT_VERSION}')",
                header.format_version
            ),
        ));
    }

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in lines {
        let entry: ScoreEntry = jsonl::parse_line(line, raw)?;
        entry.validate(line)?;
        if !seen.insert(entry.record_id.clone()) {
            return Err(Error::DuplicateRecord {
                line,
                record_id: entry.record_id,
            });
        }
        entries.push(entry);
    }

    Ok(TokenScoreLog {
        model_id: header.model_id,
        model_role: header.model_role,
        dataset_id: header.dataset_id,
        dataset_role: header.dataset_role,
        tokenizer_id: header.tokenizer_id,
        entries,
    })
}

pub fn load_score_log(path: impl AsRef<Path>) -> Result<TokenScoreLog> {
    parse_score_log(&jsonl::read_to_string(path.as_ref())?)
}

/// Core-token confidence scores pooled over a whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CtcsSample {
    pub model_id: String,
    pub dataset_id: String,
    values: Vec<f64>,
    /// Entries dropped because they had no aligned core tokens.
    pub skipped_entries: usize,
}

impl CtcsSample {
    pub fn new(
        model_id: impl Into<String>,
        dataset_id: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let model_id = model_id.into();
        if values.is_empty() {
            return Err(Error::EmptySample(format!("CTCS of model '{model_id}'")));
        }
        if let Some(v) = values.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "CTCS value {v} of model '{model_id}' is outside (0, 1]"
            )));
        }
        Ok(CtcsSample {
            model_id,
            dataset_id: dataset_id.into(),
            values,
            skipped_entries: 0,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Pools the probabilities at core-token positions, in entry order then
/// index order. Entries without core tokens are skipped and counted.
pub fn extract_ctcs(log: &TokenScoreLog) -> Result<CtcsSample> {
    let mut values = Vec::new();
    let mut skipped = 0;
    for entry in &log.entries {
        if entry.core_token_indices.is_empty() {
            skipped += 1;
            continue;
        }
        values.extend(
            entry
                .core_token_indices
                .iter()
                .map(|&i| entry.token_probs[i]),
        );
    }
    if values.is_empty() {
        return Err(Error::EmptySample(format!(
            "no core tokens in log of model '{}' on dataset '{}' ({} entries skipped)",
            log.model_id, log.dataset_id, skipped
        )));
    }
    Ok(CtcsSample {
        model_id: log.model_id.clone(),
        dataset_id: log.dataset_id.clone(),
        values,
        skipped_entries: skipped,
    })
}

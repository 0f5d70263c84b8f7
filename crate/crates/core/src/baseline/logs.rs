//! Generation and truth-ratio logs consumed by the baseline metrics.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::score_log::{DatasetRole, ModelRole, FORMAT_VERSION};
use crate::stats::text_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Qa,
    FillBlank,
    Adversarial,
    PrefixContinuation,
    MultipleChoice,
}

impl PromptKind {
    pub fn label(self) -> &'static str {
        match self {
            PromptKind::Qa => "qa",
            PromptKind::FillBlank => "fill_blank",
            PromptKind::Adversarial => "adversarial",
            PromptKind::PrefixContinuation => "prefix_continuation",
            PromptKind::MultipleChoice => "multiple_choice",
        }
    }
}

/// Which half of the forget set a multiple-choice entry belongs to when a
/// model was fine-tuned on part of it before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Heldout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogHeader {
    model_id: String,
    model_role: ModelRole,
    dataset_id: String,
    dataset_role: DatasetRole,
    format_version: String,
    log_kind: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    post_finetune: bool,
}

impl LogHeader {
    fn check(&self, line: usize, kind: &str) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::malformed(
                line,
                format!("unsupported format_version '{}'", self.format_version),
            ));
        }
        if self.log_kind != kind {
            return Err(Error::malformed(
                line,
                format!("expected log_kind '{kind}', found '{}'", self.log_kind),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationEntry {
    pub record_id: String,
    pub prompt_kind: PromptKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_option: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_option: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl GenerationEntry {
    pub fn text(
        record_id: impl Into<String>,
        kind: PromptKind,
        generated: impl Into<String>,
        reference: impl Into<String>,
    ) -> Self {
        GenerationEntry {
            record_id: record_id.into(),
            prompt_kind: kind,
            generated_text: Some(generated.into()),
            reference_text: Some(reference.into()),
            chosen_option: None,
            correct_option: None,
            split: None,
        }
    }

    pub fn choice(
        record_id: impl Into<String>,
        chosen: u8,
        correct: u8,
        split: Option<Split>,
    ) -> Self {
        GenerationEntry {
            record_id: record_id.into(),
            prompt_kind: PromptKind::MultipleChoice,
            generated_text: None,
            reference_text: None,
            chosen_option: Some(chosen),
            correct_option: Some(correct),
            split,
        }
    }

    fn validate(&self, line: usize) -> Result<()> {
        let id = &self.record_id;
        if id.is_empty() {
            return Err(Error::invalid(line, id, "record_id", "must be non-empty"));
        }
        let option_ok = |o: Option<u8>| o.is_some_and(|k| (1..=4).contains(&k));
        match self.prompt_kind {
            PromptKind::MultipleChoice => {
                if !option_ok(self.chosen_option) {
                    return Err(Error::invalid(
                        line,
                        id,
                        "chosen_option",
                        "must be one of 1..=4",
                    ));
                }
                if !option_ok(self.correct_option) {
                    return Err(Error::invalid(
                        line,
                        id,
                        "correct_option",
                        "must be one of 1..=4",
                    ));
                }
                if self.generated_text.is_some() || self.reference_text.is_some() {
                    return Err(Error::invalid(
                        line,
                        id,
                        "generated_text",
                        "not allowed on multiple_choice entries",
                    ));
                }
            }
            _ => {
                if self.generated_text.is_none() {
                    return Err(Error::invalid(
                        line,
                        id,
                        "generated_text",
                        "required for text prompts",
                    ));
                }
                match &self.reference_text {
                    Some(r) if !text_tokens(r).is_empty() => {}
                    _ => {
                        return Err(Error::invalid(
                            line,
                            id,
                            "reference_text",
                            "required and must contain at least one token",
                        ))
                    }
                }
                if self.chosen_option.is_some()
                    || self.correct_option.is_some()
                    || self.split.is_some()
                {
                    return Err(Error::invalid(
                        line,
                        id,
                        "chosen_option",
                        "option fields only apply to multiple_choice entries",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationLog {
    pub model_id: String,
    pub model_role: ModelRole,
    pub dataset_id: String,
    pub dataset_role: DatasetRole,
    /// Set when the generations come from a copy of the model that was
    /// fine-tuned on the `train` half of the forget set.
    pub post_finetune: bool,
    entries: Vec<GenerationEntry>,
}

impl GenerationLog {
    pub fn new(
        model_id: impl Into<String>,
        model_role: ModelRole,
        dataset_id: impl Into<String>,
        dataset_role: DatasetRole,
        post_finetune: bool,
        entries: Vec<GenerationEntry>,
    ) -> Result<Self> {
        check_generation_entries(entries.iter().enumerate().map(|(i, e)| (i + 2, e)))?;
        Ok(GenerationLog {
            model_id: model_id.into(),
            model_role,
            dataset_id: dataset_id.into(),
            dataset_role,
            post_finetune,
            entries,
        })
    }

    pub fn entries(&self) -> &[GenerationEntry] {
        &self.entries
    }

    pub fn of_kind(&self, kind: PromptKind) -> impl Iterator<Item = &GenerationEntry> {
        self.entries.iter().filter(move |e| e.prompt_kind == kind)
    }

    pub fn write(&self) -> String {
        let header = LogHeader {
            model_id: self.model_id.clone(),
            model_role: self.model_role,
            dataset_id: self.dataset_id.clone(),
            dataset_role: self.dataset_role,
            format_version: FORMAT_VERSION.into(),
            log_kind: GENERATION_KIND.into(),
            post_finetune: self.post_finetune,
        };
        let mut out = jsonl::to_line(&header);
        out.extend(self.entries.iter().map(jsonl::to_line));
        out
    }
}

const GENERATION_KIND: &str = "generation";
const TRUTH_RATIO_KIND: &str = "truth_ratio";

fn check_generation_entries<'a>(
    entries: impl Iterator<Item = (usize, &'a GenerationEntry)>,
) -> Result<()> {
    let mut seen = HashSet::new();
    for (line, e) in entries {
        e.validate(line)?;
        if !seen.insert((e.record_id.as_str(), e.prompt_kind)) {
            return Err(Error::DuplicateRecord {
                line,
                record_id: format!("{} ({})", e.record_id, e.prompt_kind.label()),
            });
        }
    }
    Ok(())
}

pub fn parse_generation_log(text: &str) -> Result<GenerationLog> {
    let mut lines = jsonl::numbered_lines(text);
    let (hline, hraw) = lines
        .next()
        .ok_or_else(|| Error::malformed(1, "missing header line"))?;
    let header: LogHeader = jsonl::parse_line(hline, hraw)?;
    header.check(hline, GENERATION_KIND)?;
    let mut numbered = Vec::new();
    for (line, raw) in lines {
        numbered.push((line, jsonl::parse_line::<GenerationEntry>(line, raw)?));
    }
    check_generation_entries(numbered.iter().map(|(l, e)| (*l, e)))?;
    Ok(GenerationLog {
        model_id: header.model_id,
        model_role: header.model_role,
        dataset_id: header.dataset_id,
        dataset_role: header.dataset_role,
        post_finetune: header.post_finetune,
        entries: numbered.into_iter().map(|(_, e)| e).collect(),
    })
}

pub fn load_generation_log(path: impl AsRef<Path>) -> Result<GenerationLog> {
    parse_generation_log(&jsonl::read_to_string(path.as_ref())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthRatioEntry {
    record_id: String,
    truth_ratio: f64,
}

/// One truth-ratio value per forget-set record, for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRatioLog {
    pub model_id: String,
    pub model_role: ModelRole,
    pub dataset_id: String,
    values: Vec<f64>,
}

impl TruthRatioLog {
    pub fn new(
        model_id: impl Into<String>,
        model_role: ModelRole,
        dataset_id: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample("truth-ratio log".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("truth-ratio values"));
        }
        Ok(TruthRatioLog {
            model_id: model_id.into(),
            model_role,
            dataset_id: dataset_id.into(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn parse_truth_ratio_log(text: &str) -> Result<TruthRatioLog> {
    let mut lines = jsonl::numbered_lines(text);
    let (hline, hraw) = lines
        .next()
        .ok_or_else(|| Error::malformed(1, "missing header line"))?;
    let header: LogHeader = jsonl::parse_line(hline, hraw)?;
    header.check(hline, TRUTH_RATIO_KIND)?;
    if header.post_finetune {
        return Err(Error::malformed(
            hline,
            "post_finetune does not apply to truth-ratio logs",
        ));
    }
    let mut values = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in lines {
        let e: TruthRatioEntry = jsonl::parse_line(line, raw)?;
        if e.record_id.is_empty() {
            return Err(Error::invalid(
                line,
                &e.record_id,
                "record_id",
                "must be non-empty",
            ));
        }
        if !e.truth_ratio.is_finite() {
            return Err(Error::invalid(
                line,
                &e.record_id,
                "truth_ratio",
                "must be finite",
            ));
        }
        if !seen.insert(e.record_id.clone()) {
            return Err(Error::DuplicateRecord {
                line,
                record_id: e.record_id,
            });
        }
        values.push(e.truth_ratio);
    }
    TruthRatioLog::new(
        header.model_id,
        header.model_role,
        header.dataset_id,
        values,
    )
}

pub fn load_truth_ratio_log(path: impl AsRef<Path>) -> Result<TruthRatioLog> {
    parse_truth_ratio_log(&jsonl::read_to_string(path.as_ref())?)
}

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

/// One question-answer pair with its extracted core words and the
/// optional evaluation variants derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QARecord {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub core_words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill_blank: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_choice: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial_question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial_type: Option<String>,
}

/// A validated four-option multiple-choice block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipleChoice<'a> {
    pub options: [&'a str; 4],
    /// 1-based index of the correct option.
    pub correct: u8,
}

impl QARecord {
    /// Records without core words cannot contribute to DCUE.
    pub fn has_core_words(&self) -> bool {
        self.core_words.iter().any(|w| !w.trim().is_empty())
    }

    pub fn multiple_choice(&self) -> Option<MultipleChoice<'_>> {
        let choices = self.choices.as_ref()?;
        let correct = self.correct_choice?;
        if choices.len() != 4 || !(1..=4).contains(&correct) {
            return None;
        }
        Some(MultipleChoice {
            options: [&choices[0], &choices[1], &choices[2], &choices[3]],
            correct,
        })
    }

    fn validate(&self, line: usize) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invalid(line, &self.id, "id", "must be non-empty"));
        }
        match (&self.choices, self.correct_choice) {
            (None, None) => {}
            (Some(c), Some(k)) => {
                if c.len() != 4 {
                    return Err(Error::invalid(
                        line,
                        &self.id,
                        "choices",
                        format!("expected exactly 4 options, found {}", c.len()),
                    ));
                }
                if !(1..=4).contains(&k) {
                    return Err(Error::invalid(
                        line,
                        &self.id,
                        "correct_choice",
                        format!("{k} is not one of 1, 2, 3, 4"),
                    ));
                }
            }
            (Some(_), None) => {
                return Err(Error::invalid(
                    line,
                    &self.id,
                    "correct_choice",
                    "required when choices are present",
                ))
            }
            (None, Some(_)) => {
                return Err(Error::invalid(
                    line,
                    &self.id,
                    "choices",
                    "required when correct_choice is present",
                ))
            }
        }
        if self.adversarial_type.is_some() && self.adversarial_question.is_none() {
            return Err(Error::invalid(
                line,
                &self.id,
                "adversarial_question",
                "required when adversarial_type is present",
            ));
        }
        Ok(())
    }
}

/// Parses a line-delimited QA dataset (no header line).
pub fn parse_dataset(text: &str) -> Result<Vec<QARecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in jsonl::numbered_lines(text) {
        let record: QARecord = jsonl::parse_line(line, raw)?;
        record.validate(line)?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateRecord {
                line,
                record_id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<QARecord>> {
    parse_dataset(&jsonl::read_to_string(path.as_ref())?)
}

pub fn write_dataset(records: &[QARecord]) -> String {
    records.iter().map(jsonl::to_line).collect()
}

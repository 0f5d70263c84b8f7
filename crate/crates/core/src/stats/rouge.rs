use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RougeMode {
    Recall,
    F1,
}

/// Longest common subsequence length, two-row dynamic programme.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Rouge-L between token sequences.
pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T], mode: RougeMode) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidArgument(
            "Rouge-L reference must be non-empty".into(),
        ));
    }
    let l = lcs_len(candidate, reference) as f64;
    let recall = l / reference.len() as f64;
    Ok(match mode {
        RougeMode::Recall => recall,
        RougeMode::F1 => {
            let precision = if candidate.is_empty() {
                0.0
            } else {
                l / candidate.len() as f64
            };
            if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            }
        }
    })
}

/// Lowercased whitespace tokens.
pub fn text_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

pub fn rouge_l_text(candidate: &str, reference: &str, mode: RougeMode) -> Result<f64> {
    rouge_l(&text_tokens(candidate), &text_tokens(reference), mode)
}

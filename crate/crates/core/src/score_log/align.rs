use std::collections::BTreeSet;

/// Leading whitespace markers emitted by common subword tokenizers.
const WORD_MARKERS: [char; 3] = ['\u{2581}', '\u{0120}', ' '];

fn has_marker(token: &str) -> bool {
    token.starts_with(WORD_MARKERS)
}

/// Strips leading whitespace markers ("▁", "Ġ", space); case is kept.
pub fn normalize_token(token: &str) -> &str {
    token.trim_start_matches(WORD_MARKERS)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoreAlignment {
    /// Strictly increasing token positions covered by some core word.
    pub indices: Vec<usize>,
    /// Core words with no matching token run.
    pub unmatched_words: Vec<String>,
}

impl CoreAlignment {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Maps core words onto answer-token positions.
///
/// A core word matches a contiguous run of tokens whose normalized texts
/// concatenate to exactly the word. Only the first token of a run may carry
/// a whitespace marker, so runs never straddle a word break. Every
/// occurrence of every word is included.
pub fn align_core_tokens<S: AsRef<str>, W: AsRef<str>>(
    answer_tokens: &[S],
    core_words: &[W],
) -> CoreAlignment {
    let mut hits = BTreeSet::new();
    let mut unmatched = Vec::new();

    for word in core_words {
        let word = word.as_ref().trim();
        if word.is_empty() {
            continue;
        }
        let mut found = false;
        for start in 0..answer_tokens.len() {
            let head = normalize_token(answer_tokens[start].as_ref());
            if head.is_empty() || !word.starts_with(head) {
                continue;
            }
            let mut acc = head.len();
            let mut end = start;
            loop {
                if acc == word.len() {
                    hits.extend(start..=end);
                    found = true;
                    break;
                }
                let Some(next) = answer_tokens.get(end + 1).map(AsRef::as_ref) else {
                    break;
                };
                if has_marker(next) || next.is_empty() || !word[acc..].starts_with(next) {
                    break;
                }
                acc += next.len();
                end += 1;
            }
        }
        if !found {
            unmatched.push(word.to_string());
        }
    }

    CoreAlignment {
        indices: hits.into_iter().collect(),
        unmatched_words: unmatched,
    }
}

//! Rule-based sentence segmentation.
//!
//! Text is whitespace-collapsed, then split at a space that follows a run of
//! terminators (plus any closing quotes or brackets). A `.` directly after a
//! token from the abbreviation list does not split. Because every split
//! happens at a single space of the collapsed text, joining the output with
//! spaces reproduces the collapsed input exactly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Paragraph, Sentence};
use crate::text::{collapse_whitespace, coverage_divergence};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    pub terminators: BTreeSet<char>,
    pub abbreviation_list: BTreeSet<String>,
    pub min_sentence_chars: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            // U+061F Arabic question mark, U+061B Arabic semicolon, U+2026 ellipsis.
            terminators: ['.', '!', '?', '\u{061F}', '\u{061B}', '\u{2026}']
                .into_iter()
                .collect(),
            abbreviation_list: ["Mr", "Mrs", "Dr", "Prof", "St", "etc", "e.g", "i.e", "vs"]
                .into_iter()
                .map(String::from)
                .collect(),
            min_sentence_chars: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("terminator set is empty")]
    NoTerminators,
    #[error("min_sentence_chars must be at least 1")]
    MinChars,
    #[error("terminator {0:?} is whitespace")]
    WhitespaceTerminator(char),
}

impl SegmenterConfig {
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.terminators.is_empty() {
            return Err(ConfigError::NoTerminators);
        }
        if self.min_sentence_chars == 0 {
            return Err(ConfigError::MinChars);
        }
        if let Some(c) = self.terminators.iter().find(|c| c.is_whitespace()) {
            return Err(ConfigError::WhitespaceTerminator(*c));
        }
        Ok(())
    }
}

fn is_closer(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | ')' | ']' | '}' | '\u{201D}' | '\u{2019}' | '\u{00BB}' | '\u{203A}'
    )
}

/// The abbreviation candidate ending just before `end`: letters and inner
/// periods, bounded on the left by a non-letter.
fn token_before(chars: &[char], end: usize) -> String {
    let mut start = end;
    while start > 0 && (chars[start - 1].is_alphabetic() || chars[start - 1] == '.') {
        start -= 1;
    }
    let token: String = chars[start..end].iter().collect();
    token.trim_start_matches('.').to_string()
}

/// Splits `raw_text` into sentences.
///
/// `_language` is accepted for interface stability; the rules are currently
/// the same for every language and are driven entirely by `config`.
pub fn segment(raw_text: &str, _language: &str, config: &SegmenterConfig) -> Vec<String> {
    let text = collapse_whitespace(raw_text);
    if text.is_empty() {
        return Vec::new();
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<String> = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !config.terminators.contains(&chars[i]) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && config.terminators.contains(&chars[i]) {
            i += 1;
        }
        while i < chars.len() && is_closer(chars[i]) {
            i += 1;
        }
        if i < chars.len() && chars[i] != ' ' {
            continue;
        }
        if chars[run_start] == '.'
            && config
                .abbreviation_list
                .contains(&token_before(&chars, run_start))
        {
            continue;
        }
        if i - start < config.min_sentence_chars {
            continue;
        }
        out.push(chars[start..i].iter().collect());
        // skip the single separating space
        start = i + 1;
        i = start;
    }
    if start < chars.len() {
        let tail: String = chars[start..].iter().collect();
        match out.last_mut() {
            Some(prev) if tail.chars().count() < config.min_sentence_chars => {
                prev.push(' ');
                prev.push_str(&tail);
            }
            _ => out.push(tail),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttachError {
    #[error("sentences diverge from paragraph {para} text at offset {offset}")]
    Coverage { para: String, offset: usize },
    #[error("sentence {index} of paragraph {para} is empty")]
    EmptySentence { para: String, index: usize },
}

/// Replaces the sentences of `paragraph` with `texts`, numbered
/// `<para_id>-s1..sk`. Texts are trimmed.
pub fn attach_sentences<S: AsRef<str>>(paragraph: &Paragraph, texts: &[S]) -> Result<Paragraph, AttachError> {
    let trimmed: Vec<&str> = texts.iter().map(|t| t.as_ref().trim()).collect();
    if let Some(index) = trimmed.iter().position(|t| t.is_empty()) {
        return Err(AttachError::EmptySentence {
            para: paragraph.id.to_string(),
            index,
        });
    }
    if let Some(offset) = coverage_divergence(&paragraph.raw_text, &trimmed) {
        return Err(AttachError::Coverage {
            para: paragraph.id.to_string(),
            offset,
        });
    }
    Ok(Paragraph {
        id: paragraph.id,
        raw_text: paragraph.raw_text.clone(),
        sentences: trimmed
            .iter()
            .enumerate()
            .map(|(k, t)| Sentence {
                id: paragraph.id.child(k as u32 + 1),
                text: t.to_string(),
            })
            .collect(),
    })
}

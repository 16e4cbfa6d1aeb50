//! Segment identifiers.
//!
//! Paragraphs are `p<i>` and sentences `p<i>-s<k>`, both 1-based with no
//! leading zeros. Source and target documents share the grammar; the document
//! role disambiguates them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Granularity of a segment or of an alignment link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Paragraph,
    Sentence,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Paragraph => "paragraph",
            Level::Sentence => "sentence",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paragraph" => Ok(Level::Paragraph),
            "sentence" => Ok(Level::Sentence),
            other => Err(format!("unknown level `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed segment id `{0}`")]
pub struct MalformedId(pub String);

/// A paragraph or sentence identifier.
///
/// Ordering follows document order: `p1 < p1-s1 < p1-s2 < p2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegmentId {
    para: u32,
    sent: Option<u32>,
}

impl SegmentId {
    /// Panics if `index` is zero.
    pub fn paragraph(index: u32) -> Self {
        assert!(index >= 1, "paragraph index is 1-based");
        SegmentId { para: index, sent: None }
    }

    /// Panics if either index is zero.
    pub fn sentence(para: u32, sent: u32) -> Self {
        assert!(para >= 1 && sent >= 1, "segment indices are 1-based");
        SegmentId { para, sent: Some(sent) }
    }

    /// 1-based paragraph number.
    pub fn para_index(&self) -> u32 {
        self.para
    }

    /// 1-based sentence number within its paragraph, if this is a sentence id.
    pub fn sent_index(&self) -> Option<u32> {
        self.sent
    }

    pub fn level(&self) -> Level {
        if self.sent.is_some() {
            Level::Sentence
        } else {
            Level::Paragraph
        }
    }

    /// The paragraph this id belongs to (itself for paragraph ids).
    pub fn parent(&self) -> SegmentId {
        SegmentId { para: self.para, sent: None }
    }

    /// The `k`-th sentence id under this paragraph.
    pub fn child(&self, k: u32) -> SegmentId {
        SegmentId::sentence(self.para, k)
    }
}

fn parse_index(digits: &str) -> Option<u32> {
    let first = digits.chars().next()?;
    if !('1'..='9').contains(&first) || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

impl FromStr for SegmentId {
    type Err = MalformedId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MalformedId(s.to_string());
        let rest = s.strip_prefix('p').ok_or_else(bad)?;
        match rest.split_once("-s") {
            Some((p, k)) => Ok(SegmentId {
                para: parse_index(p).ok_or_else(bad)?,
                sent: Some(parse_index(k).ok_or_else(bad)?),
            }),
            None => Ok(SegmentId {
                para: parse_index(rest).ok_or_else(bad)?,
                sent: None,
            }),
        }
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sent {
            Some(k) => write!(f, "p{}-s{}", self.para, k),
            None => write!(f, "p{}", self.para),
        }
    }
}

impl Serialize for SegmentId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SegmentId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

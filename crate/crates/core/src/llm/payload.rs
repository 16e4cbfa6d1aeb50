//! Strict validation of structured segmentation/alignment suggestions.
//!
//! The expected document is
//!
//! ```json
//! {"source_sentences": [{"id": "p1-s1", "text": "..."}],
//!  "target_sentences": [{"id": "p1-s1", "text": "..."}],
//!  "links": [{"source_ids": ["p1-s1"], "target_ids": ["p1-s1"], "confidence": 0.9}]}
//! ```
//!
//! Sentence ids must be `<para_id>-s1..sk` of the paragraph they segment, in
//! order. `confidence` may be omitted or null; unknown fields are rejected.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ids::SegmentId;
use crate::model::Paragraph;
use crate::text::coverage_divergence;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadSentence {
    pub id: SegmentId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadLink {
    pub source_ids: Vec<SegmentId>,
    pub target_ids: Vec<SegmentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionPayload {
    pub source_sentences: Vec<PayloadSentence>,
    pub target_sentences: Vec<PayloadSentence>,
    pub links: Vec<PayloadLink>,
}

impl SuggestionPayload {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("payload serializes")
    }
}

/// Rule broken by a rejected payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadRule {
    InvalidJson,
    WrongType,
    MissingField,
    UnknownField,
    MalformedId,
    ForeignId,
    DuplicateId,
    IdSequence,
    EmptyText,
    Coverage,
    EmptyLink,
    DanglingLinkId,
    DuplicateLinkMember,
    ConfidenceOutOfRange,
}

impl PayloadRule {
    pub fn code(self) -> &'static str {
        match self {
            PayloadRule::InvalidJson => "invalid-json",
            PayloadRule::WrongType => "wrong-type",
            PayloadRule::MissingField => "missing-field",
            PayloadRule::UnknownField => "unknown-field",
            PayloadRule::MalformedId => "malformed-id",
            PayloadRule::ForeignId => "foreign-id",
            PayloadRule::DuplicateId => "duplicate-id",
            PayloadRule::IdSequence => "id-sequence",
            PayloadRule::EmptyText => "empty-text",
            PayloadRule::Coverage => "coverage",
            PayloadRule::EmptyLink => "empty-link",
            PayloadRule::DanglingLinkId => "dangling-link-id",
            PayloadRule::DuplicateLinkMember => "duplicate-link-member",
            PayloadRule::ConfidenceOutOfRange => "confidence-out-of-range",
        }
    }
}

impl fmt::Display for PayloadRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// First rule violated by a payload, with the JSON path where it was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub rule: PayloadRule,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{} at {}", self.message, self.path)
        }
    }
}

impl std::error::Error for ValidationFailure {}

fn fail<T>(rule: PayloadRule, path: impl Into<String>, message: impl Into<String>) -> Result<T, ValidationFailure> {
    Err(ValidationFailure {
        rule,
        path: path.into(),
        message: message.into(),
    })
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ValidationFailure> {
    v.as_object().map_or_else(
        || fail(PayloadRule::WrongType, path, format!("expected object, found {}", kind_of(v))),
        Ok,
    )
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, ValidationFailure> {
    v.as_array().map_or_else(
        || fail(PayloadRule::WrongType, path, format!("expected array, found {}", kind_of(v))),
        Ok,
    )
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, ValidationFailure> {
    v.as_str().map_or_else(
        || fail(PayloadRule::WrongType, path, format!("expected string, found {}", kind_of(v))),
        Ok,
    )
}

/// Checks the exact key set of an object; `optional` keys may be absent.
fn check_keys<'a>(
    obj: &'a Map<String, Value>,
    path: &str,
    required: &[&str],
    optional: &[&str],
) -> Result<(), ValidationFailure> {
    for key in obj.keys() {
        if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
            return fail(PayloadRule::UnknownField, join(path, key), format!("unknown field `{key}`"));
        }
    }
    for key in required {
        if !obj.contains_key(*key) {
            return fail(PayloadRule::MissingField, join(path, key), format!("missing field `{key}`"));
        }
    }
    Ok(())
}

fn parse_id(v: &Value, path: &str) -> Result<SegmentId, ValidationFailure> {
    let s = as_str(v, path)?;
    s.parse().map_or_else(
        |_| fail(PayloadRule::MalformedId, path, format!("malformed id `{s}`")),
        Ok,
    )
}

fn sentences(v: &Value, key: &str, para: &Paragraph) -> Result<Vec<PayloadSentence>, ValidationFailure> {
    let items = as_array(v, key)?;
    let mut out: Vec<PayloadSentence> = Vec::with_capacity(items.len());
    let mut seen = BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        let path = format!("{key}[{i}]");
        let obj = as_object(item, &path)?;
        check_keys(obj, &path, &["id", "text"], &[])?;
        let id_path = join(&path, "id");
        let id = parse_id(&obj["id"], &id_path)?;
        if id.sent_index().is_none() || id.parent() != para.id {
            return fail(
                PayloadRule::ForeignId,
                id_path,
                format!("id {id} is not a sentence of paragraph {}", para.id),
            );
        }
        if !seen.insert(id) {
            return fail(PayloadRule::DuplicateId, id_path, format!("duplicate id {id}"));
        }
        let expected = para.id.child(i as u32 + 1);
        if id != expected {
            return fail(PayloadRule::IdSequence, id_path, format!("expected {expected}, found {id}"));
        }
        let text_path = join(&path, "text");
        let text = as_str(&obj["text"], &text_path)?.trim();
        if text.is_empty() {
            return fail(PayloadRule::EmptyText, text_path, "sentence text is empty");
        }
        out.push(PayloadSentence { id, text: text.to_string() });
    }
    let texts: Vec<&str> = out.iter().map(|s| s.text.as_str()).collect();
    if let Some(offset) = coverage_divergence(&para.raw_text, &texts) {
        return fail(
            PayloadRule::Coverage,
            key,
            format!("sentences diverge from paragraph {} at offset {offset}", para.id),
        );
    }
    Ok(out)
}

fn link_side(
    v: &Value,
    path: &str,
    declared: &BTreeSet<SegmentId>,
) -> Result<Vec<SegmentId>, ValidationFailure> {
    let items = as_array(v, path)?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let p = format!("{path}[{i}]");
        let id = parse_id(item, &p)?;
        if !declared.contains(&id) {
            return fail(PayloadRule::DanglingLinkId, p, "dangling link id");
        }
        if out.contains(&id) {
            return fail(PayloadRule::DuplicateLinkMember, p, format!("{id} listed twice"));
        }
        out.push(id);
    }
    Ok(out)
}

/// Parses and checks a raw model response against both paragraphs.
pub fn validate_payload(
    raw: &str,
    src_paragraph: &Paragraph,
    tgt_paragraph: &Paragraph,
) -> Result<SuggestionPayload, ValidationFailure> {
    let root: Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(e) => return fail(PayloadRule::InvalidJson, "", format!("invalid JSON: {e}")),
    };
    let obj = as_object(&root, "")?;
    check_keys(obj, "", &["source_sentences", "target_sentences", "links"], &[])?;
    let source_sentences = sentences(&obj["source_sentences"], "source_sentences", src_paragraph)?;
    let target_sentences = sentences(&obj["target_sentences"], "target_sentences", tgt_paragraph)?;
    let src_declared: BTreeSet<SegmentId> = source_sentences.iter().map(|s| s.id).collect();
    let tgt_declared: BTreeSet<SegmentId> = target_sentences.iter().map(|s| s.id).collect();

    let items = as_array(&obj["links"], "links")?;
    let mut links = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let path = format!("links[{i}]");
        let link = as_object(item, &path)?;
        check_keys(link, &path, &["source_ids", "target_ids"], &["confidence"])?;
        let source_ids = link_side(&link["source_ids"], &join(&path, "source_ids"), &src_declared)?;
        let target_ids = link_side(&link["target_ids"], &join(&path, "target_ids"), &tgt_declared)?;
        if source_ids.is_empty() && target_ids.is_empty() {
            return fail(PayloadRule::EmptyLink, path, "link has no source or target ids");
        }
        let confidence = match link.get("confidence") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let c_path = join(&path, "confidence");
                let Some(c) = v.as_f64() else {
                    return fail(PayloadRule::WrongType, c_path, format!("expected number, found {}", kind_of(v)));
                };
                if !(0.0..=1.0).contains(&c) {
                    return fail(PayloadRule::ConfidenceOutOfRange, c_path, format!("confidence {c} outside [0,1]"));
                }
                Some(c)
            }
        };
        links.push(PayloadLink {
            source_ids,
            target_ids,
            confidence,
        });
    }
    Ok(SuggestionPayload {
        source_sentences,
        target_sentences,
        links,
    })
}

/// Strips one surrounding Markdown code fence, if present.
pub fn strip_code_fence(response: &str) -> &str {
    let t = response.trim();
    let Some(inner) = t.strip_prefix("```") else {
        return t;
    };
    let Some(inner) = inner.strip_suffix("```") else {
        return t;
    };
    // drop an info string such as `json`
    match inner.split_once('\n') {
        Some((info, body)) if !info.contains('{') => body.trim(),
        _ => inner.trim(),
    }
}

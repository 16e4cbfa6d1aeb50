//! Prompt templates with `{{identifier}}` placeholders.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("malformed placeholder `{text}` at byte {offset}")]
    MalformedPlaceholder { offset: usize, text: String },
    #[error("missing binding for {}", .0.join(", "))]
    MissingBinding(Vec<String>),
    #[error("required placeholder(s) not present in body: {}", .0.join(", "))]
    RequiredNotInBody(Vec<String>),
}

impl TemplateError {
    pub fn code(&self) -> &'static str {
        match self {
            TemplateError::MalformedPlaceholder { .. } => "malformed-placeholder",
            TemplateError::MissingBinding(_) => "missing-binding",
            TemplateError::RequiredNotInBody(_) => "malformed-placeholder",
        }
    }
}

fn default_required() -> BTreeSet<String> {
    ["language", "paragraph"].iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    pub name: String,
    pub body: String,
    #[serde(default = "default_required")]
    pub required_placeholders: BTreeSet<String>,
    #[serde(default)]
    pub description: String,
}

/// One piece of a parsed template body.
#[derive(Debug, PartialEq, Eq)]
enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c == '_' || c.is_ascii_alphabetic())
        && chars.all(|c| c == '_' || c.is_ascii_alphanumeric())
}

fn parse(body: &str) -> Result<Vec<Piece<'_>>, TemplateError> {
    let mut pieces = Vec::new();
    let mut rest = body;
    let mut consumed = 0;
    while let Some(start) = rest.find("{{") {
        if start > 0 {
            pieces.push(Piece::Literal(&rest[..start]));
        }
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else {
            return Err(TemplateError::MalformedPlaceholder {
                offset: consumed + start,
                text: rest[start..].chars().take(24).collect(),
            });
        };
        let name = &after[..end];
        if !is_identifier(name) {
            return Err(TemplateError::MalformedPlaceholder {
                offset: consumed + start,
                text: format!("{{{{{name}}}}}"),
            });
        }
        pieces.push(Piece::Placeholder(name));
        let advance = start + 2 + end + 2;
        consumed += advance;
        rest = &rest[advance..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Literal(rest));
    }
    Ok(pieces)
}

impl PromptTemplate {
    /// A template requiring the default `{language, paragraph}` placeholders.
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        PromptTemplate {
            template_id: uuid::Uuid::new_v4().simple().to_string(),
            name: name.into(),
            body: body.into(),
            required_placeholders: default_required(),
            description: String::new(),
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Result<Vec<String>, TemplateError> {
        let mut seen = BTreeSet::new();
        Ok(parse(&self.body)?
            .into_iter()
            .filter_map(|p| match p {
                Piece::Placeholder(name) if seen.insert(name) => Some(name.to_string()),
                _ => None,
            })
            .collect())
    }

    /// Checks the well-formedness invariants of the template.
    pub fn check(&self) -> Result<(), TemplateError> {
        let present: BTreeSet<String> = self.placeholders()?.into_iter().collect();
        let absent: Vec<String> = self
            .required_placeholders
            .difference(&present)
            .cloned()
            .collect();
        if absent.is_empty() {
            Ok(())
        } else {
            Err(TemplateError::RequiredNotInBody(absent))
        }
    }

    /// Substitutes every placeholder in a single pass. Binding values are
    /// inserted verbatim and never re-expanded.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
        let pieces = parse(&self.body)?;
        let mut missing: BTreeSet<&str> = self
            .required_placeholders
            .iter()
            .map(String::as_str)
            .filter(|r| !bindings.contains_key(*r))
            .collect();
        let mut out = String::with_capacity(self.body.len());
        for piece in &pieces {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Placeholder(name) => match bindings.get(*name) {
                    Some(value) => out.push_str(value),
                    None => {
                        missing.insert(name);
                    }
                },
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(TemplateError::MissingBinding(
                missing.into_iter().map(str::to_string).collect(),
            ))
        }
    }
}

/// The template used when a project defines none.
pub fn default_template() -> PromptTemplate {
    PromptTemplate {
        template_id: "default-segment-align".into(),
        name: "Segment and align".into(),
        description: "Segments both paragraphs into sentences and aligns them.".into(),
        required_placeholders: default_required(),
        body: DEFAULT_BODY.into(),
    }
}

const DEFAULT_BODY: &str = r#"You are assisting with a {{language}} to {{target_language}} parallel corpus.

Split the source paragraph ({{source_paragraph_id}}) and the target paragraph ({{target_paragraph_id}}) into sentences, then align the sentences. A link may join any number of source sentences to any number of target sentences (1:1, 1:N, N:1, M:N); a sentence with no counterpart gets a link with an empty list on the other side.

Rules:
- Copy sentence text exactly from the paragraph. Do not translate, correct, drop, or add text.
- Number sentences in order: the source sentences are {{source_paragraph_id}}-s1, {{source_paragraph_id}}-s2, ... and the target sentences are {{target_paragraph_id}}-s1, {{target_paragraph_id}}-s2, ...
- confidence is a number between 0 and 1.

Respond with one JSON object and nothing else, with exactly these fields:
{"source_sentences": [{"id": "...", "text": "..."}],
 "target_sentences": [{"id": "...", "text": "..."}],
 "links": [{"source_ids": ["..."], "target_ids": ["..."], "confidence": 0.9}]}

Source paragraph ({{language}}):
{{paragraph}}

Target paragraph ({{target_language}}):
{{target_paragraph}}
"#;

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn substitutes_placeholders() {
        let t = PromptTemplate::new("t", "Segment this {{language}} text: {{paragraph}}");
        let out = t.render(&bind(&[("language", "Arabic"), ("paragraph", "X")])).unwrap();
        assert_eq!(out, "Segment this Arabic text: X");
    }

    #[test]
    fn missing_binding_is_reported() {
        let mut t = PromptTemplate::new("t", "Text: {{paragraph}}");
        t.required_placeholders = ["paragraph".to_string()].into();
        let err = t.render(&bind(&[("language", "en")])).unwrap_err();
        assert_eq!(err, TemplateError::MissingBinding(vec!["paragraph".into()]));
    }

    #[test]
    fn unknown_placeholder_without_binding_errors() {
        let t = PromptTemplate::new("t", "{{language}} {{paragraph}} {{genre}}");
        let err = t.render(&bind(&[("language", "en"), ("paragraph", "p")])).unwrap_err();
        assert_eq!(err, TemplateError::MissingBinding(vec!["genre".into()]));
    }

    #[test]
    fn values_are_not_re_expanded() {
        let t = PromptTemplate::new("t", "{{paragraph}} in {{language}}");
        let out = t
            .render(&bind(&[("language", "en"), ("paragraph", "say {{language}}")]))
            .unwrap();
        assert_eq!(out, "say {{language}} in en");
    }

    #[test]
    fn malformed_placeholders() {
        for body in ["{{ language }}", "{{1abc}}", "{{lang-uage}}", "open {{paragraph", "{{}}"] {
            let t = PromptTemplate::new("t", body);
            assert!(
                matches!(t.placeholders(), Err(TemplateError::MalformedPlaceholder { .. })),
                "{body}"
            );
        }
    }

    #[test]
    fn single_braces_are_literal() {
        let t = PromptTemplate::new("t", r#"{"a": 1} {{language}} {{paragraph}} }}"#);
        assert_eq!(t.placeholders().unwrap(), ["language", "paragraph"]);
        assert!(t.check().is_ok());
    }

    #[test]
    fn required_must_appear_in_body() {
        let t = PromptTemplate::new("t", "only {{language}}");
        assert_eq!(t.check(), Err(TemplateError::RequiredNotInBody(vec!["paragraph".into()])));
    }

    #[test]
    fn default_template_is_well_formed() {
        let t = default_template();
        t.check().unwrap();
        let names = t.placeholders().unwrap();
        assert!(names.contains(&"target_paragraph".to_string()));
    }

    proptest::proptest! {
        #[test]
        fn injective_in_binding(a in "[^{}]{0,12}", b in "[^{}]{0,12}") {
            let t = PromptTemplate::new("t", "x {{language}} y {{paragraph}} z");
            let ra = t.render(&bind(&[("language", "en"), ("paragraph", &a)])).unwrap();
            let rb = t.render(&bind(&[("language", "en"), ("paragraph", &b)])).unwrap();
            proptest::prop_assert_eq!(a == b, ra == rb);
        }
    }
}

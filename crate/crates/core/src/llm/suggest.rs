//! Prompt, call, validate, repair; fall back to the rule-based pipeline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::payload::{strip_code_fence, validate_payload, PayloadLink, PayloadSentence, SuggestionPayload};
use super::provider::{HttpProvider, LlmProvider, LlmProviderConfig, ProviderError, RequestLog};
use super::template::{PromptTemplate, TemplateError};
use crate::aligner::{align, AlignerParams};
use crate::ids::SegmentId;
use crate::model::Paragraph;
use crate::segmenter::{segment, SegmenterConfig};

/// A source/target paragraph pair with the languages needed for prompting.
#[derive(Debug, Clone, Copy)]
pub struct ParagraphPair<'a> {
    pub source: &'a Paragraph,
    pub target: &'a Paragraph,
    pub source_language: &'a str,
    pub target_language: &'a str,
}

impl ParagraphPair<'_> {
    /// Values offered to templates.
    pub fn bindings(&self) -> BTreeMap<String, String> {
        [
            ("language", self.source_language),
            ("source_language", self.source_language),
            ("target_language", self.target_language),
            ("paragraph", self.source.raw_text.as_str()),
            ("source_paragraph", self.source.raw_text.as_str()),
            ("target_paragraph", self.target.raw_text.as_str()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .chain([
            ("source_paragraph_id".to_string(), self.source.id.to_string()),
            ("target_paragraph_id".to_string(), self.target.id.to_string()),
        ])
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackReason {
    /// Network or HTTP failures on every attempt.
    ProviderUnreachable,
    /// The provider answered but never produced a valid payload.
    ValidationExhausted,
    /// The key environment variable is not set.
    MissingCredentials,
    /// No provider configured.
    NoProvider,
}

impl FallbackReason {
    pub fn code(self) -> &'static str {
        match self {
            FallbackReason::ProviderUnreachable => "provider-unreachable",
            FallbackReason::ValidationExhausted => "validation-exhausted",
            FallbackReason::MissingCredentials => "missing-credentials",
            FallbackReason::NoProvider => "no-provider",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackResult {
    pub reason: FallbackReason,
    /// Description of the last failure, if any attempt was made.
    pub last_error: Option<String>,
    pub attempts: u32,
    pub payload: SuggestionPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "lowercase")]
pub enum SuggestOutcome {
    Llm {
        payload: SuggestionPayload,
        /// Attempts beyond the first.
        retry_count: u32,
    },
    Baseline(FallbackResult),
}

impl SuggestOutcome {
    pub fn payload(&self) -> &SuggestionPayload {
        match self {
            SuggestOutcome::Llm { payload, .. } => payload,
            SuggestOutcome::Baseline(f) => &f.payload,
        }
    }
}

/// Settings for the rule-based fallback path.
#[derive(Debug, Clone, Default)]
pub struct FallbackConfig {
    pub segmenter: SegmenterConfig,
    pub aligner: AlignerParams,
}

/// Segments both paragraphs with the rule-based segmenter and aligns the
/// sentences by length. Links carry no confidence.
pub fn baseline_payload(pair: &ParagraphPair<'_>, config: &FallbackConfig) -> SuggestionPayload {
    let split = |para: &Paragraph, lang: &str| -> Vec<PayloadSentence> {
        segment(&para.raw_text, lang, &config.segmenter)
            .into_iter()
            .enumerate()
            .map(|(k, text)| PayloadSentence {
                id: para.id.child(k as u32 + 1),
                text,
            })
            .collect()
    };
    let source_sentences = split(pair.source, pair.source_language);
    let target_sentences = split(pair.target, pair.target_language);
    let texts = |s: &[PayloadSentence]| s.iter().map(|x| x.text.clone()).collect::<Vec<_>>();
    let beads = align(&texts(&source_sentences), &texts(&target_sentences), &config.aligner);
    let ids = |s: &[PayloadSentence], r: std::ops::Range<usize>| -> Vec<SegmentId> {
        s[r].iter().map(|x| x.id).collect()
    };
    let links = beads
        .into_iter()
        .map(|b| PayloadLink {
            source_ids: ids(&source_sentences, b.source),
            target_ids: ids(&target_sentences, b.target),
            confidence: None,
        })
        .collect();
    SuggestionPayload {
        source_sentences,
        target_sentences,
        links,
    }
}

fn repair_prompt(base: &str, failure: &str) -> String {
    format!(
        "{base}\n\nYour previous response was rejected: {failure}. \
         Respond again with only the corrected JSON object."
    )
}

/// Runs the bounded prompt/validate/repair loop against `provider`.
///
/// Makes at most `max_retries + 1` calls. Validation failures are fed back in
/// the next prompt; transport failures retry the same prompt. Every returned
/// payload has passed [`validate_payload`].
pub fn suggest_with(
    pair: &ParagraphPair<'_>,
    template: &PromptTemplate,
    provider: &dyn LlmProvider,
    max_retries: u32,
    fallback: &FallbackConfig,
) -> Result<SuggestOutcome, TemplateError> {
    let base = template.render(&pair.bindings())?;
    let mut prompt = base.clone();
    let mut last_error = None;
    let mut only_transport_failures = true;
    for attempt in 0..=max_retries {
        match provider.complete(&prompt) {
            Ok(text) => {
                only_transport_failures = false;
                match validate_payload(strip_code_fence(&text), pair.source, pair.target) {
                    Ok(payload) => {
                        return Ok(SuggestOutcome::Llm {
                            payload,
                            retry_count: attempt,
                        })
                    }
                    Err(failure) => {
                        let description = failure.to_string();
                        prompt = repair_prompt(&base, &description);
                        last_error = Some(description);
                    }
                }
            }
            Err(ProviderError::MissingCredentials(var)) => {
                return Ok(SuggestOutcome::Baseline(FallbackResult {
                    reason: FallbackReason::MissingCredentials,
                    last_error: Some(format!("environment variable `{var}` is not set")),
                    attempts: attempt,
                    payload: baseline_payload(pair, fallback),
                }));
            }
            Err(e) => last_error = Some(e.to_string()),
        }
    }
    Ok(SuggestOutcome::Baseline(FallbackResult {
        reason: if only_transport_failures {
            FallbackReason::ProviderUnreachable
        } else {
            FallbackReason::ValidationExhausted
        },
        last_error,
        attempts: max_retries + 1,
        payload: baseline_payload(pair, fallback),
    }))
}

/// [`suggest_with`] over an HTTP chat-completion endpoint.
pub fn suggest(
    pair: &ParagraphPair<'_>,
    template: &PromptTemplate,
    provider: &LlmProviderConfig,
    log: Option<RequestLog>,
    fallback: &FallbackConfig,
) -> Result<SuggestOutcome, TemplateError> {
    let mut client = HttpProvider::new(provider.clone());
    if let Some(log) = log {
        client = client.with_log(log);
    }
    suggest_with(pair, template, &client, provider.max_retries, fallback)
}

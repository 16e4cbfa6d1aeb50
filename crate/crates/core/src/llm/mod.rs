//! Template-driven LLM suggestions for sentence segmentation and alignment.

mod payload;
mod provider;
mod suggest;
mod template;

pub use payload::{
    strip_code_fence, validate_payload, PayloadLink, PayloadRule, PayloadSentence, SuggestionPayload,
    ValidationFailure,
};
pub use provider::{
    first_choice_text, ConfigError, HttpProvider, LlmProvider, LlmProviderConfig, ProviderError, RequestLog,
};
pub use suggest::{
    baseline_payload, suggest, suggest_with, FallbackConfig, FallbackReason, FallbackResult, ParagraphPair,
    SuggestOutcome,
};
pub use template::{default_template, PromptTemplate, TemplateError};

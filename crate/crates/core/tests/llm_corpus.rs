use lata_core::aligner::{align, AlignerParams};
use lata_core::llm::{
    baseline_payload, strip_code_fence, suggest, validate_payload, FallbackConfig, FallbackReason, LlmProviderConfig,
    ParagraphPair, PayloadRule, RequestLog, SuggestOutcome,
};
use lata_core::segmenter::segment;
use lata_core::testkit::{fixture_paragraphs, payload_mutation_corpus, valid_payload_fixtures};
use proptest::prelude::*;

#[test]
fn mutation_corpus_is_rejected_with_expected_rule() {
    let (src, tgt) = fixture_paragraphs();
    let corpus = payload_mutation_corpus();
    assert!(corpus.len() >= 30);
    for case in &corpus {
        let failure = validate_payload(strip_code_fence(&case.raw), &src, &tgt)
            .expect_err(case.name);
        assert_eq!(failure.rule, case.expected, "{}: {failure}", case.name);
        if let Some(offset) = case.expected_offset {
            assert!(failure.message.ends_with(&format!("at offset {offset}")), "{}: {failure}", case.name);
        }
    }
}

#[test]
fn valid_fixtures_are_accepted_and_stable() {
    let (src, tgt) = fixture_paragraphs();
    let fixtures = valid_payload_fixtures();
    assert_eq!(fixtures.len(), 10);
    for raw in fixtures {
        let payload = validate_payload(strip_code_fence(&raw), &src, &tgt).unwrap();
        assert_eq!(validate_payload(&payload.to_json(), &src, &tgt).unwrap(), payload);
    }
}

#[test]
fn dangling_id_message() {
    let (src, tgt) = fixture_paragraphs();
    let case = payload_mutation_corpus().into_iter().find(|c| c.name == "undeclared-source").unwrap();
    let failure = validate_payload(&case.raw, &src, &tgt).unwrap_err();
    assert_eq!(failure.rule, PayloadRule::DanglingLinkId);
    assert_eq!(failure.to_string(), "dangling link id at links[0].source_ids[0]");
}

#[test]
fn unreachable_endpoint_falls_back_to_baseline() {
    let (src, tgt) = fixture_paragraphs();
    let dir = tempfile::tempdir().unwrap();
    let provider = LlmProviderConfig {
        endpoint_url: "http://127.0.0.1:9/v1/chat/completions".into(),
        model_name: "any".into(),
        api_key_env_var: String::new(),
        timeout_seconds: 2,
        max_retries: 1,
    };
    let pair = ParagraphPair { source: &src, target: &tgt, source_language: "en", target_language: "ar" };
    let fallback = FallbackConfig::default();
    let log = RequestLog::new(dir.path().join("project.log"));
    let out = suggest(&pair, &lata_core::llm::default_template(), &provider, Some(log), &fallback).unwrap();
    let SuggestOutcome::Baseline(result) = out else { panic!("expected fallback") };
    assert_eq!(result.reason, FallbackReason::ProviderUnreachable);
    assert_eq!(result.attempts, 2);

    let s = segment(&src.raw_text, "en", &fallback.segmenter);
    let t = segment(&tgt.raw_text, "ar", &fallback.segmenter);
    let beads = align(&s, &t, &AlignerParams::default());
    assert_eq!(result.payload.links.len(), beads.len());
    for (link, bead) in result.payload.links.iter().zip(&beads) {
        let src_ids: Vec<String> = bead.source.clone().map(|k| format!("p1-s{}", k + 1)).collect();
        let tgt_ids: Vec<String> = bead.target.clone().map(|k| format!("p1-s{}", k + 1)).collect();
        assert_eq!(link.source_ids.iter().map(|i| i.to_string()).collect::<Vec<_>>(), src_ids);
        assert_eq!(link.target_ids.iter().map(|i| i.to_string()).collect::<Vec<_>>(), tgt_ids);
        assert!(link.confidence.is_none());
    }
    assert_eq!(result.payload, baseline_payload(&pair, &fallback));
    let logged = std::fs::read_to_string(dir.path().join("project.log")).unwrap();
    assert!(logged.contains("llm-request"));
}

proptest! {
    #[test]
    fn validation_is_stable_under_reserialization(pick in 0usize..10) {
        let (src, tgt) = fixture_paragraphs();
        let raw = &valid_payload_fixtures()[pick];
        let first = validate_payload(strip_code_fence(raw), &src, &tgt).unwrap();
        let second = validate_payload(&first.to_json(), &src, &tgt).unwrap();
        prop_assert_eq!(first, second);
    }
}

use lata_core::segmenter::{segment, SegmenterConfig};
use lata_core::testkit::reference_divergence;
use proptest::prelude::*;

fn text_strategy() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[A-Za-z]{1,8}",
        "[\u{0621}-\u{064A}]{1,8}",
        Just("Dr".to_string()),
        Just("e.g".to_string()),
        Just("\u{200F}".to_string()),
        Just("\u{200E}".to_string()),
        Just("\u{060C}".to_string()),
        prop::sample::select(vec![".", "!", "?", "\u{061F}", "\u{061B}", "\u{2026}", "...", "\"", ")", "]", "'"])
            .prop_map(str::to_string),
        prop::sample::select(vec![" ", "  ", "\n", "\t", "\r\n", "\u{00A0}", "\u{3000}"]).prop_map(str::to_string),
    ];
    prop::collection::vec(piece, 0..40).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn non_lossy_trimmed_and_idempotent(text in text_strategy()) {
        let config = SegmenterConfig::default();
        let out = segment(&text, "en", &config);
        for s in &out {
            prop_assert!(!s.is_empty());
            prop_assert_eq!(s.trim(), s.as_str());
        }
        let refs: Vec<&str> = out.iter().map(String::as_str).collect();
        prop_assert_eq!(reference_divergence(&text, &refs), None);
        prop_assert_eq!(segment(&out.join(" "), "en", &config), out.clone());
        prop_assert_eq!(segment(&text, "en", &config), out);
    }

    #[test]
    fn min_chars_keeps_coverage(text in text_strategy(), min in 1usize..12) {
        let config = SegmenterConfig { min_sentence_chars: min, ..Default::default() };
        let out = segment(&text, "ar", &config);
        let refs: Vec<&str> = out.iter().map(String::as_str).collect();
        prop_assert_eq!(reference_divergence(&text, &refs), None);
    }
}

#[test]
fn arabic_comma_does_not_split() {
    let out = segment("\u{0642}\u{0627}\u{0644}\u{060C} \u{062B}\u{0645} \u{0630}\u{0647}\u{0628}.", "ar", &Default::default());
    assert_eq!(out.len(), 1);
}

#[test]
fn arabic_semicolon_splits_by_default() {
    let out = segment("\u{0623}\u{0648}\u{0644}\u{061B} \u{062B}\u{0627}\u{0646}.", "ar", &Default::default());
    assert_eq!(out, ["\u{0623}\u{0648}\u{0644}\u{061B}", "\u{062B}\u{0627}\u{0646}."]);
}

use unicode_normalization::UnicodeNormalization;

/// NFC-normalizes `text` and splits it into paragraphs: maximal runs of
/// non-blank lines, joined with `\n`. Trailing carriage returns are dropped.
pub fn split_paragraphs(text: &str) -> Vec<String> {
    let text: String = text.nfc().collect();
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.split('\n') {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(current.join("\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_lines_separate_paragraphs() {
        assert_eq!(
            split_paragraphs("One.\nStill one.\r\n\r\n \nTwo.\n"),
            ["One.\nStill one.", "Two."]
        );
        assert!(split_paragraphs("\n \n").is_empty());
    }

    #[test]
    fn normalizes_to_nfc() {
        assert_eq!(split_paragraphs("e\u{301}t\u{e9}"), ["\u{e9}t\u{e9}"]);
    }
}

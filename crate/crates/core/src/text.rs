//! Whitespace normalization and the sentence coverage check.

/// Collapses every run of whitespace to a single ASCII space and trims both ends.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Checks that `sentences`, joined with single spaces, tile `raw` modulo
/// whitespace runs.
///
/// Returns `None` when they do, otherwise the character offset (into the
/// whitespace-collapsed form of `raw`) of the first divergence.
pub fn coverage_divergence<S: AsRef<str>>(raw: &str, sentences: &[S]) -> Option<usize> {
    let expected = collapse_whitespace(raw);
    let joined = collapse_whitespace(
        &sentences
            .iter()
            .map(|s| s.as_ref())
            .collect::<Vec<_>>()
            .join(" "),
    );
    if expected == joined {
        return None;
    }
    let mut lhs = expected.chars();
    let mut rhs = joined.chars();
    let mut offset = 0;
    loop {
        match (lhs.next(), rhs.next()) {
            (Some(a), Some(b)) if a == b => offset += 1,
            _ => return Some(offset),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_trims_and_squeezes() {
        assert_eq!(collapse_whitespace("  a\n\t b  c "), "a b c");
        assert_eq!(collapse_whitespace(" \n "), "");
        assert_eq!(collapse_whitespace("ما\u{00A0}هذا"), "ما هذا");
    }

    #[test]
    fn coverage_ok_and_offsets() {
        assert_eq!(coverage_divergence("A. B.", &["A.", "B."]), None);
        assert_eq!(coverage_divergence("A.\n\nB.", &["A.", "B."]), None);
        assert_eq!(coverage_divergence("A. B.", &["A."]), Some(2));
        assert_eq!(coverage_divergence("A. B.", &["A.", "C."]), Some(3));
        assert_eq!(coverage_divergence("AB", &["A", "B"]), Some(1));
        assert_eq!(coverage_divergence("", &[] as &[&str]), None);
    }
}

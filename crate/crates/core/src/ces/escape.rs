//! XML escaping.

/// Escapes element content. `\r` becomes a character reference so parsers
/// do not fold it into `\n`.
pub fn text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

/// Escapes an attribute value, protecting whitespace from normalization.
pub fn attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\n' => out.push_str("&#10;"),
            '\t' => out.push_str("&#9;"),
            c => out.push_str(&text(c.encode_utf8(&mut [0; 4]))),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes() {
        assert_eq!(text("a < b & 'c' \"d\" >"), "a &lt; b &amp; &apos;c&apos; &quot;d&quot; &gt;");
        assert_eq!(text("x\r\ny\tz"), "x&#13;\ny\tz");
        assert_eq!(attr("x\r\ny\tz"), "x&#13;&#10;y&#9;z");
    }
}

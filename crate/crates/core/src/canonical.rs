//! Canonical JSON form of a project used for equality checks.
//!
//! Keys are sorted, ID sets are already ordered, lines end in LF and
//! `updated_at` is left out.

use serde_json::{Map, Value};

use crate::model::Project;

fn sorted(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sorted(v))).collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

/// Canonical value of `project`.
pub fn canonical_value(project: &Project) -> Value {
    let mut value = serde_json::to_value(project).expect("project serializes");
    if let Value::Object(map) = &mut value {
        map.remove("updated_at");
    }
    sorted(value)
}

/// Pretty-printed canonical form with a trailing newline.
pub fn canonical_json(project: &Project) -> String {
    let mut out = serde_json::to_string_pretty(&canonical_value(project)).expect("value serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DocumentMeta;

    #[test]
    fn ignores_updated_at_and_sorts_keys() {
        let p = Project::new("x", DocumentMeta::with_language("en"), DocumentMeta::with_language("fr"));
        let mut q = p.clone();
        q.updated_at = "2001-01-01T00:00:00.000Z".into();
        assert_eq!(canonical_json(&p), canonical_json(&q));
        let text = canonical_json(&p);
        assert!(!text.contains("updated_at"));
        assert!(text.find("\"created_at\"").unwrap() < text.find("\"links\"").unwrap());
        assert!(text.ends_with("}\n") && !text.contains('\r'));
    }
}

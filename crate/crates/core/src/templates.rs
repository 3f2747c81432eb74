//! Frozen conversation strings, loaded from `data/templates.json`.
//!
//! Placeholders are written `{name}` and substituted verbatim by [`fill`].

use std::sync::OnceLock;

use serde::Deserialize;

const TEMPLATE_FILE: &str = include_str!("../data/templates.json");

#[derive(Debug, Deserialize)]
pub struct Templates {
    pub system: String,
    pub user_sync: String,
    pub user_sync_no_decision: String,
    pub user_game: String,
    pub listener_preamble: String,
    pub listener_answer: String,
    pub trace_no_data: String,
    pub trace_sync: String,
    pub trace_sync_fact: String,
    pub trace_sync_empty: String,
    pub trace_inverse: String,
    pub trace_inverse_known: String,
    pub trace_inverse_unknown: String,
    pub trace_match: String,
    pub fact_separator: String,
}

pub fn templates() -> &'static Templates {
    static CELL: OnceLock<Templates> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(TEMPLATE_FILE).expect("bundled templates parse"))
}

/// Replace each `{key}` in `template` with its value.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (key, value) in vars {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    debug_assert!(!has_placeholder(&out), "unfilled placeholder in `{out}`");
    out
}

fn has_placeholder(s: &str) -> bool {
    s.match_indices('{').any(|(i, _)| {
        s[i + 1..]
            .find('}')
            .map(|end| {
                let key = &s[i + 1..i + 1 + end];
                !key.is_empty() && key.chars().all(|c| c.is_ascii_lowercase() || c == '_')
            })
            .unwrap_or(false)
    })
}

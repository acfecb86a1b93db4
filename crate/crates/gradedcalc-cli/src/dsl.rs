//! Problem-document parser: sections `[algebra]`, `[action]`, `[operator]`,
//! `[symbol]`, `[command]` with `key = value` entries, `#` comments, and
//! line/column diagnostics.

use crate::expr::ParseError;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum DslValue {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    List(Vec<DslValue>),
}

impl DslValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            DslValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            DslValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            DslValue::Float(v) => Some(*v),
            DslValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_u32_list(&self) -> Option<Vec<u32>> {
        match self {
            DslValue::List(items) => items
                .iter()
                .map(|v| v.as_int().and_then(|x| u32::try_from(x).ok()))
                .collect(),
            _ => None,
        }
    }

    pub fn as_usize_list(&self) -> Option<Vec<usize>> {
        match self {
            DslValue::List(items) => items
                .iter()
                .map(|v| v.as_int().and_then(|x| usize::try_from(x).ok()))
                .collect(),
            _ => None,
        }
    }

    pub fn as_str_list(&self) -> Option<Vec<String>> {
        match self {
            DslValue::List(items) => items
                .iter()
                .map(|v| v.as_str().map(|s| s.to_string()))
                .collect(),
            _ => None,
        }
    }
}

/// One `key = value` with its source line (for expression diagnostics).
#[derive(Debug, Clone)]
pub struct Entry {
    pub value: DslValue,
    pub line: usize,
}

/// A parsed document: sections in order of appearance.
#[derive(Debug, Clone, Default)]
pub struct Document {
    pub sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Document {
    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, Entry>> {
        self.sections.get(name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section)?.get(key)
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.get(section, key)?.value.as_str()
    }
}

fn err(message: impl Into<String>, line: usize, col: usize) -> ParseError {
    ParseError {
        message: message.into(),
        line,
        col,
    }
}

/// Parses a value: quoted string, list, boolean, integer or float.
fn parse_value(raw: &str, line: usize, col: usize) -> Result<DslValue, ParseError> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(err("missing value", line, col));
    }
    if let Some(inner) = s.strip_prefix('"') {
        let Some(body) = inner.strip_suffix('"') else {
            return Err(err("unterminated string literal", line, col));
        };
        return Ok(DslValue::Str(body.to_string()));
    }
    if s.starts_with('[') {
        let Some(body) = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')) else {
            return Err(err("unterminated list", line, col));
        };
        let mut items = Vec::new();
        // Split on top-level commas (no nested lists in this format).
        for part in split_top_level(body) {
            let trimmed = part.trim();
            if trimmed.is_empty() {
                continue;
            }
            items.push(parse_value(trimmed, line, col)?);
        }
        return Ok(DslValue::List(items));
    }
    match s {
        "true" => return Ok(DslValue::Bool(true)),
        "false" => return Ok(DslValue::Bool(false)),
        _ => {}
    }
    if let Ok(v) = s.parse::<i64>() {
        return Ok(DslValue::Int(v));
    }
    if let Ok(v) = s.parse::<f64>() {
        return Ok(DslValue::Float(v));
    }
    Err(err(
        format!("cannot parse value `{s}` (strings need quotes)"),
        line,
        col,
    ))
}

fn split_top_level(body: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut in_str = false;
    let mut current = String::new();
    for c in body.chars() {
        match c {
            '"' => {
                in_str = !in_str;
                current.push(c);
            }
            '[' if !in_str => {
                depth += 1;
                current.push(c);
            }
            ']' if !in_str => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if !in_str && depth == 0 => {
                parts.push(std::mem::take(&mut current));
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        parts.push(current);
    }
    parts
}

/// Parses a document; keys within a section must be unique.
pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    let mut doc = Document::default();
    let mut current: Option<String> = None;
    for (lineno0, raw_line) in text.lines().enumerate() {
        let lineno = lineno0 + 1;
        let line = match raw_line.find('#') {
            // Keep # inside string literals.
            Some(pos) if !raw_line[..pos].contains('"')
                || raw_line[..pos].matches('"').count() % 2 == 0 =>
            {
                &raw_line[..pos]
            }
            _ => raw_line,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(err("unterminated section header", lineno, 1));
            };
            let name = name.trim().to_string();
            if name.is_empty() {
                return Err(err("empty section name", lineno, 1));
            }
            doc.sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some(eq) = trimmed.find('=') else {
            return Err(err(
                format!("expected `key = value`, found `{trimmed}`"),
                lineno,
                1,
            ));
        };
        let key = trimmed[..eq].trim().to_string();
        if key.is_empty() {
            return Err(err("missing key before `=`", lineno, 1));
        }
        let Some(section) = current.clone() else {
            return Err(err(
                format!("entry `{key}` appears before any [section]"),
                lineno,
                1,
            ));
        };
        let col = raw_line.find('=').map(|p| p + 2).unwrap_or(1);
        let value = parse_value(&trimmed[eq + 1..], lineno, col)?;
        let entries = doc.sections.get_mut(&section).unwrap();
        if entries.contains_key(&key) {
            return Err(err(
                format!("duplicate key `{key}` in section [{section}]"),
                lineno,
                1,
            ));
        }
        entries.insert(key, Entry { value, line: lineno });
    }
    Ok(doc)
}

/// Renders a document back to text (sections and keys in stored order).
#[cfg(test)]
pub fn print_document(doc: &Document) -> String {
    let mut out = String::new();
    for (name, entries) in &doc.sections {
        out.push_str(&format!("[{name}]\n"));
        for (key, entry) in entries {
            out.push_str(&format!("{key} = {}\n", print_value(&entry.value)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
fn print_value(v: &DslValue) -> String {
    match v {
        DslValue::Str(s) => format!("\"{s}\""),
        DslValue::Int(i) => i.to_string(),
        DslValue::Float(f) => format!("{f}"),
        DslValue::Bool(b) => b.to_string(),
        DslValue::List(items) => {
            let body: Vec<String> = items.iter().map(print_value).collect();
            format!("[{}]", body.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let doc = parse_document(
            r#"
# a Heisenberg problem
[algebra]
builtin = "heisenberg"
n = 1

[operator]
expr = "-Xhat(1)^2 - Xhat(2)^2 + x(3)^2"

[command]
name = "spectrum"
truncations = [10, 14, 18]
eigenvalues = 5
tolerance = 1e-4
"#,
        )
        .unwrap();
        assert_eq!(doc.get_str("algebra", "builtin"), Some("heisenberg"));
        assert_eq!(doc.get("algebra", "n").unwrap().value.as_int(), Some(1));
        assert_eq!(
            doc.get("command", "truncations")
                .unwrap()
                .value
                .as_usize_list(),
            Some(vec![10, 14, 18])
        );
        assert_eq!(
            doc.get("command", "tolerance").unwrap().value.as_f64(),
            Some(1e-4)
        );
    }

    #[test]
    fn diagnostics_carry_positions() {
        let errp = parse_document("[algebra]\nbuiltin = heisenberg\n").unwrap_err();
        assert_eq!(errp.line, 2);
        assert!(errp.message.contains("quotes"));
        let err2 = parse_document("x = 1\n").unwrap_err();
        assert_eq!(err2.line, 1);
    }

    #[test]
    fn round_trip_on_bundled_corpus() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("problems");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap().flatten() {
            let path = entry.path();
            if path.extension().map(|e| e == "gc") != Some(true) {
                continue;
            }
            seen += 1;
            let text = std::fs::read_to_string(&path).unwrap();
            let doc = parse_document(&text).unwrap_or_else(|e| {
                panic!("{} does not parse: {e}", path.display())
            });
            let printed = print_document(&doc);
            let doc2 = parse_document(&printed).unwrap();
            assert_eq!(
                doc.sections.keys().collect::<Vec<_>>(),
                doc2.sections.keys().collect::<Vec<_>>()
            );
            for (section, entries) in &doc.sections {
                for (key, entry) in entries {
                    assert_eq!(
                        doc2.get(section, key).map(|e| &e.value),
                        Some(&entry.value),
                        "{}: [{section}] {key}",
                        path.display()
                    );
                }
            }
        }
        assert!(seen >= 10, "corpus should not shrink silently");
    }

    #[test]
    fn round_trip_print_parse() {
        let text = r#"
[algebra]
builtin = "engel"

[action]
beta = [1, 1, 1, 1]
builtin = "double_dilation"

[command]
name = "check-R"
"#;
        let doc = parse_document(text).unwrap();
        let printed = print_document(&doc);
        let doc2 = parse_document(&printed).unwrap();
        for (section, entries) in &doc.sections {
            for (key, entry) in entries {
                assert_eq!(
                    doc2.get(section, key).map(|e| &e.value),
                    Some(&entry.value)
                );
            }
        }
    }
}

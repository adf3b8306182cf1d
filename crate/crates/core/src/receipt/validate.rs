//! Document validation against the embedded schema.
//!
//! The validator interprets the keyword subset the receipt schema uses
//! (`type`, `const`, `enum`, `required`, `properties`,
//! `additionalProperties`, `items`, `$ref`, `minLength`, `minimum`,
//! `uniqueItems`, `format`) and classifies every failure into one of a
//! handful of kinds so callers can act on them.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::consistency::{check_consistency, Warning};
use super::model::{RouteReceipt, Timestamp};
use super::schema::schema_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    MissingRequired,
    UnknownField,
    BadEnum,
    BadType,
    BadFormat,
    BadConst,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub path: String,
    pub kind: ErrorKind,
    pub detail: String,
}

/// Outcome of validating one document. Valid iff `errors` is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    fn push(&mut self, path: &str, kind: ErrorKind, detail: impl Into<String>) {
        self.errors.push(ValidationError {
            path: path.to_owned(),
            kind,
            detail: detail.into(),
        });
    }

    /// Report for input that is not parseable at all.
    pub fn malformed(detail: impl Into<String>) -> Self {
        let mut report = ValidationReport::default();
        report.push("", ErrorKind::BadType, detail);
        report
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.errors.is_empty() {
            write!(f, "valid")?;
        } else {
            write!(f, "{} error(s)", self.errors.len())?;
            for e in &self.errors {
                let path = if e.path.is_empty() { "/" } else { &e.path };
                write!(f, "; {path}: {:?}: {}", e.kind, e.detail)?;
            }
        }
        Ok(())
    }
}

/// Validates receipt text. Malformed JSON yields a single root `bad_type`
/// error; a schema-valid document also gets its consistency warnings.
pub fn validate_document(text: &str) -> ValidationReport {
    match serde_json::from_str::<Value>(text) {
        Ok(doc) => validate_value(&doc),
        Err(e) => ValidationReport::malformed(format!("not a JSON document: {e}")),
    }
}

/// Validates an already-parsed document.
pub fn validate_value(doc: &Value) -> ValidationReport {
    let mut report = schema_errors(doc);
    if report.is_valid() {
        match serde_json::from_value::<RouteReceipt>(doc.clone()) {
            Ok(receipt) => report.warnings = check_consistency(&receipt),
            // Unreachable while the model mirrors the schema; surfaced rather than hidden.
            Err(e) => report.push("", ErrorKind::BadType, format!("does not map onto a receipt: {e}")),
        }
    }
    report
}

/// Schema errors only, without the typed consistency pass.
pub fn schema_errors(doc: &Value) -> ValidationReport {
    let root = schema_value();
    let mut report = ValidationReport::default();
    check(root, root, doc, "", &mut report);
    report
}

fn escape(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

fn type_matches(expected: &str, value: &Value) -> bool {
    match expected {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "integer" => value.is_i64() || value.is_u64(),
        "number" => value.is_number(),
        "null" => value.is_null(),
        _ => false,
    }
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) if n.is_f64() => "number",
        Value::Number(_) => "integer",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn check(root: &Value, schema: &Value, value: &Value, path: &str, report: &mut ValidationReport) {
    if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
        let target = reference
            .strip_prefix('#')
            .and_then(|pointer| root.pointer(pointer))
            .unwrap_or_else(|| panic!("embedded schema has dangling $ref {reference}"));
        check(root, target, value, path, report);
        return;
    }

    if let Some(expected) = schema.get("type").and_then(Value::as_str) {
        if !type_matches(expected, value) {
            report.push(
                path,
                ErrorKind::BadType,
                format!("expected {expected}, found {}", type_name(value)),
            );
            return;
        }
    }

    if let Some(constant) = schema.get("const") {
        if value != constant {
            report.push(path, ErrorKind::BadConst, format!("must equal {constant}"));
        }
    }

    if let Some(members) = schema.get("enum").and_then(Value::as_array) {
        if !members.contains(value) {
            report.push(
                path,
                ErrorKind::BadEnum,
                format!("{value} is not one of {}", Value::from(members.clone())),
            );
        }
    }

    match value {
        Value::String(s) => check_string(schema, s, path, report),
        Value::Number(_) => {
            if let (Some(min), Some(n)) = (schema.get("minimum").and_then(Value::as_i64), value.as_i64()) {
                if n < min {
                    report.push(path, ErrorKind::BadFormat, format!("{n} is below the minimum {min}"));
                }
            }
        }
        Value::Array(items) => {
            if schema.get("uniqueItems").and_then(Value::as_bool) == Some(true) {
                let duplicated = items.iter().enumerate().find(|(i, item)| items[..*i].contains(item));
                if let Some((_, item)) = duplicated {
                    report.push(path, ErrorKind::BadFormat, format!("duplicate item {item}"));
                }
            }
            if let Some(item_schema) = schema.get("items") {
                for (i, item) in items.iter().enumerate() {
                    check(root, item_schema, item, &format!("{path}/{i}"), report);
                }
            }
        }
        Value::Object(fields) => {
            let properties = schema.get("properties").and_then(Value::as_object);
            if let Some(required) = schema.get("required").and_then(Value::as_array) {
                for name in required.iter().filter_map(Value::as_str) {
                    if !fields.contains_key(name) {
                        report.push(
                            &format!("{path}/{}", escape(name)),
                            ErrorKind::MissingRequired,
                            format!("`{name}` is required"),
                        );
                    }
                }
            }
            let closed = schema.get("additionalProperties") == Some(&Value::Bool(false));
            for (name, field) in fields {
                let child = format!("{path}/{}", escape(name));
                match properties.and_then(|p| p.get(name)) {
                    Some(field_schema) => check(root, field_schema, field, &child, report),
                    None if closed => report.push(
                        &child,
                        ErrorKind::UnknownField,
                        format!("`{name}` is not a receipt field"),
                    ),
                    None => {}
                }
            }
        }
        Value::Null | Value::Bool(_) => {}
    }
}

fn check_string(schema: &Value, s: &str, path: &str, report: &mut ValidationReport) {
    if let Some(min) = schema.get("minLength").and_then(Value::as_u64) {
        if (s.chars().count() as u64) < min {
            report.push(path, ErrorKind::BadFormat, format!("shorter than {min} character(s)"));
        }
    }
    if schema.get("format").and_then(Value::as_str) == Some("date-time") {
        if let Err(e) = s.parse::<Timestamp>() {
            report.push(path, ErrorKind::BadFormat, e.to_string());
        }
    }
}

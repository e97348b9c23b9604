//! Certificate documents and their deterministic serialisation.

use inclusion_teleport::{CMatrix64, Report};
use serde::Serialize;
use serde_json::{json, Map, Value};

/// Accumulates the checks and derived quantities of one command.
#[derive(Debug, Default)]
pub struct Certificate {
    checks: Vec<Value>,
    passed: bool,
    derived: Map<String, Value>,
    notes: Vec<String>,
    error: Option<String>,
}

impl Certificate {
    pub fn new() -> Self {
        Self { passed: true, ..Self::default() }
    }

    pub fn checks(&mut self, prefix: &str, report: &Report) {
        for c in report.checks() {
            self.passed &= c.passed;
            self.checks.push(json!({
                "name": format!("{prefix}.{}", c.name),
                "residual": finite(c.residual),
                "bound": finite(c.bound),
                "passed": c.passed,
            }));
        }
    }

    pub fn derive(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("derived quantities serialise");
        self.derived.insert(key.to_owned(), value);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// A computation that could not finish counts as a failed check.
    pub fn fail(&mut self, error: impl ToString) {
        self.passed = false;
        self.error = Some(error.to_string());
    }

    pub fn passed(&self) -> bool {
        self.passed
    }

    pub fn into_document(self, command: &[String], seed: u64, tol: f64) -> Value {
        let mut doc = json!({
            "command": command,
            "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
            "seed": seed,
            "tolerance": tol,
            "checks": self.checks,
            "passed": self.passed,
            "derived": Value::Object(self.derived),
            "notes": self.notes,
        });
        if let Some(e) = self.error {
            doc["error"] = Value::String(e);
        }
        doc
    }
}

/// Infinite bounds (checks recorded for information only) become `null`.
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn matrix(m: &CMatrix64) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

/// Pretty-printed with `indent` spaces, or compact for zero. Keys come out sorted
/// because `serde_json` maps are ordered.
pub fn render(doc: &Value, indent: usize) -> String {
    if indent == 0 {
        return serde_json::to_string(doc).expect("JSON values serialise");
    }
    let pad = vec![b' '; indent];
    let mut buf = Vec::new();
    let formatter = serde_json::ser::PrettyFormatter::with_indent(&pad);
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    doc.serialize(&mut ser).expect("JSON values serialise");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_sorted_and_indent_respected() {
        let mut c = Certificate::new();
        c.derive("zeta", 1);
        c.derive("alpha", 2);
        let doc = c.into_document(&["x".into()], 42, 1e-9);
        let text = render(&doc, 3);
        assert!(text.find("\"alpha\"").unwrap() < text.find("\"zeta\"").unwrap());
        assert!(text.contains("\n   \"checks\""));
        assert!(!render(&doc, 0).contains('\n'));
    }

    #[test]
    fn failed_checks_and_errors_clear_the_verdict() {
        let mut r = Report::new();
        r.record("ok", 0.0, 1.0);
        let mut c = Certificate::new();
        c.checks("a", &r);
        assert!(c.passed());
        r.record("bad", 2.0, 1.0);
        c.checks("b", &r);
        assert!(!c.passed());

        let mut e = Certificate::new();
        e.fail("boom");
        let doc = e.into_document(&[], 0, 0.0);
        assert_eq!(doc["error"], "boom");
        assert_eq!(doc["passed"], false);
    }

    #[test]
    fn infinite_bounds_serialise_as_null() {
        let mut r = Report::new();
        r.record("info", 0.5, f64::INFINITY);
        let mut c = Certificate::new();
        c.checks("x", &r);
        let doc = c.into_document(&[], 0, 0.0);
        assert!(doc["checks"][0]["bound"].is_null());
    }
}

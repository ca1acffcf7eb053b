use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::check::{overall, Check, Status};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub checks: BTreeMap<String, Check>,
    pub data: BTreeMap<String, Value>,
    pub summary: Status,
}

impl Report {
    pub fn new(command: &str, config: &impl Serialize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            checks: BTreeMap::new(),
            data: BTreeMap::new(),
            summary: Status::Pass,
        }
    }

    /// Adds a check; a repeated name gets a numeric suffix.
    pub fn push(&mut self, check: Check) {
        let mut name = check.name.clone();
        let mut k = 2;
        while self.checks.contains_key(&name) {
            name = format!("{}#{k}", check.name);
            k += 1;
        }
        self.checks.insert(name.clone(), Check { name, ..check });
        self.summary = overall(&self.checks.values().cloned().collect::<Vec<_>>());
    }

    pub fn extend(&mut self, prefix: &str, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            let name = if prefix.is_empty() {
                c.name.clone()
            } else {
                format!("{prefix}/{}", c.name)
            };
            self.push(Check { name, ..c });
        }
    }

    pub fn data(&mut self, key: &str, value: impl Serialize) {
        self.data
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// 0 pass, 1 a failed check, 3 a numeric error.
    pub fn exit_code(&self) -> i32 {
        match self.summary {
            Status::Pass | Status::Skip => 0,
            Status::Fail => 1,
            Status::Error => 3,
        }
    }

    pub fn render_structured(&self) -> String {
        let mut v = serde_json::to_value(self).unwrap_or(Value::Null);
        round_floats(&mut v);
        let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.tool, self.version, self.command);
        let width = self.checks.keys().map(|k| k.len()).max().unwrap_or(0);
        for (name, c) in &self.checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Skip => "SKIP",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            let _ = write!(s, "{status:<5}  {name:<width$}");
            if let Some(m) = c.measured {
                let _ = write!(s, "  measured={}", fmt12(m));
            }
            if let Some(t) = c.tolerance {
                let _ = write!(s, "  tol={}", fmt12(t));
            }
            if let Some(d) = &c.detail {
                let _ = write!(s, "  ({d})");
            }
            s.push('\n');
        }
        let summary = match self.summary {
            Status::Pass | Status::Skip => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        };
        let _ = writeln!(s, "summary: {summary}");
        s
    }
}

/// Twelve significant digits.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.11e}")
}

fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round12(x))) {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_tracks_worst_check() {
        let mut r = Report::new("analyze", &());
        r.push(Check::at_most("a", 0.0, 1.0));
        assert_eq!(r.exit_code(), 0);
        r.push(Check::at_most("a", 2.0, 1.0));
        assert_eq!(r.checks.len(), 2);
        assert!(r.checks.contains_key("a#2"));
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn structured_output_rounds_to_twelve_digits() {
        let mut r = Report::new("x", &());
        r.data("v", 0.1 + 0.2);
        let s = r.render_structured();
        assert!(s.contains("0.3"), "{s}");
        assert!(!s.contains("0.30000000000000004"));
        assert_eq!(fmt12(1.0 / 3.0), "3.33333333333e-1");
    }
}

//! Run reports. Field order is fixed and every number is written with 17
//! significant digits, so identical runs give identical bytes.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::error::{HarnessError, Result};

/// One check: what was measured, the bound it was held to, and the
/// inequality it instantiates.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// The inequality this check instantiates, by content.
    pub anchor: String,
    pub pass: bool,
    pub measured: Vec<(String, f64)>,
}

impl Check {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>) -> Self {
        Check { name: name.into(), anchor: anchor.into(), pass: true, measured: Vec::new() }
    }

    pub fn value(mut self, key: impl Into<String>, v: f64) -> Self {
        self.measured.push((key.into(), v));
        self
    }

    pub fn pass(mut self, ok: bool) -> Self {
        self.pass = ok;
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.measured.iter().find(|(k, _)| k == key).map(|e| e.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub config: String,
    pub seed: u64,
    pub checks: Vec<Check>,
}

/// `v` with 17 significant digits; non-finite values become strings.
pub fn number(v: f64) -> Value {
    if v.is_finite() {
        let text = format!("{v:.16e}");
        match text.parse::<Number>() {
            Ok(n) => Value::Number(n),
            Err(_) => Value::String(text),
        }
    } else {
        Value::String(format!("{v}"))
    }
}

impl RunReport {
    pub fn new(command: impl Into<String>, config: impl Into<String>, seed: u64) -> Self {
        RunReport { command: command.into(), config: config.into(), seed, checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: RunReport) {
        self.checks.extend(other.checks);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_value(&self) -> Value {
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.clone()));
        root.insert("config".into(), Value::String(self.config.clone()));
        root.insert("seed".into(), Value::Number(self.seed.into()));
        root.insert("pass".into(), Value::Bool(self.pass()));
        let checks = self
            .checks
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("name".into(), Value::String(c.name.clone()));
                m.insert("anchor".into(), Value::String(c.anchor.clone()));
                m.insert("pass".into(), Value::Bool(c.pass));
                let mut vals = Map::new();
                for (k, v) in &c.measured {
                    vals.insert(k.clone(), number(*v));
                }
                m.insert("measured".into(), Value::Object(vals));
                Value::Object(m)
            })
            .collect();
        root.insert("checks".into(), Value::Array(checks));
        Value::Object(root)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_value()).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    /// CSV: one row per measured value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| HarnessError::Parse(e.to_string());
        w.write_record(["check", "anchor", "pass", "key", "value"]).map_err(io)?;
        for c in &self.checks {
            let pass = c.pass.to_string();
            if c.measured.is_empty() {
                w.write_record([c.name.as_str(), c.anchor.as_str(), pass.as_str(), "", ""]).map_err(io)?;
            }
            for (k, v) in &c.measured {
                let v = format!("{v:.16e}");
                w.write_record([c.name.as_str(), c.anchor.as_str(), pass.as_str(), k.as_str(), v.as_str()])
                    .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let vals: Vec<String> = c.measured.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
            s.push_str(&format!("{} {} [{}]\n", if c.pass { "PASS" } else { "FAIL" }, c.name, vals.join(", ")));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        let mut r = RunReport::new("suite", "x", 3);
        r.push(Check::new("a", "b").value("v", 0.1));
        let j = r.to_json().unwrap();
        assert!(j.contains("1.0000000000000001e-1"), "{j}");
        let back: Value = serde_json::from_str(&j).unwrap();
        assert_eq!(back["checks"][0]["measured"]["v"].as_f64(), Some(0.1));
    }
}

//! Tabular reports rendered as JSON, CSV or text.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Json,
    Csv,
    #[default]
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format {s:?}; expected json, csv or text")),
        }
    }
}

/// One measured quantity against its target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub section: String,
    pub name: String,
    pub value: String,
    pub target: String,
    pub deviation: Option<f64>,
    pub threshold: Option<f64>,
    pub passed: bool,
}

impl Check {
    /// A numeric check passing when `deviation <= threshold`.
    pub fn measured(section: &str, name: &str, value: f64, target: &str, deviation: f64, threshold: f64) -> Self {
        Self {
            section: section.into(),
            name: name.into(),
            value: format!("{value:.15}"),
            target: target.into(),
            deviation: Some(deviation),
            threshold: Some(threshold),
            passed: deviation <= threshold,
        }
    }

    /// A non-numeric statement.
    pub fn fact(section: &str, name: &str, value: impl Into<String>, target: impl Into<String>, passed: bool) -> Self {
        Self {
            section: section.into(),
            name: name.into(),
            value: value.into(),
            target: target.into(),
            deviation: None,
            threshold: None,
            passed,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub title: String,
    pub checks: Vec<Check>,
    /// Free text appended to text output.
    pub notes: Vec<String>,
    /// Extra JSON fields.
    pub extra: serde_json::Map<String, Value>,
}

impl Table {
    pub fn new(title: &str) -> Self {
        Self {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn render(&self, format: Format, metadata: &Value, meta_lines: &[String]) -> String {
        match format {
            Format::Json => {
                let mut obj = serde_json::Map::new();
                obj.insert("metadata".into(), metadata.clone());
                obj.insert("title".into(), json!(self.title));
                obj.insert("checks".into(), json!(self.checks));
                obj.insert("passed".into(), json!(self.passed()));
                obj.insert("total".into(), json!(self.checks.len()));
                for (k, v) in &self.extra {
                    obj.insert(k.clone(), v.clone());
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut out = String::new();
                for line in meta_lines {
                    let _ = writeln!(out, "# {line}");
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["section", "name", "value", "target", "deviation", "threshold", "passed"])
                    .expect("in-memory write");
                for c in &self.checks {
                    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
                    w.write_record([
                        c.section.as_str(),
                        c.name.as_str(),
                        c.value.as_str(),
                        c.target.as_str(),
                        &opt(c.deviation),
                        &opt(c.threshold),
                        if c.passed { "true" } else { "false" },
                    ])
                    .expect("in-memory write");
                }
                out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
                out
            }
            Format::Text => {
                let mut out = String::new();
                for line in meta_lines {
                    let _ = writeln!(out, "# {line}");
                }
                let _ = writeln!(out, "{}", self.title);
                let mut section = "";
                for c in &self.checks {
                    if c.section != section {
                        section = &c.section;
                        let _ = writeln!(out, "\n[{section}]");
                    }
                    let mark = if c.passed { "ok  " } else { "FAIL" };
                    let dev = match (c.deviation, c.threshold) {
                        (Some(d), Some(t)) => format!("  (deviation {d:.2e}, limit {t:.2e})"),
                        _ => String::new(),
                    };
                    let target = if c.target.is_empty() {
                        String::new()
                    } else {
                        format!(" (target {})", c.target)
                    };
                    let _ = writeln!(out, "  {mark} {}: {}{target}{dev}", c.name, c.value);
                }
                if !self.notes.is_empty() {
                    out.push('\n');
                    for n in &self.notes {
                        let _ = writeln!(out, "{n}");
                    }
                }
                let _ = writeln!(out, "\n{}/{} checks passed", self.passed(), self.checks.len());
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_parse() {
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("yaml".parse::<Format>().is_err());
    }

    #[test]
    fn render_all_formats() {
        let mut t = Table::new("demo");
        t.push(Check::measured("s", "x", 0.5, "1/2", 0.0, 1e-12));
        t.push(Check::fact("s", "y", "no", "yes", false));
        let meta = json!({"version": "0"});
        let lines = vec!["v=0".to_string()];
        let j: Value = serde_json::from_str(&t.render(Format::Json, &meta, &lines)).unwrap();
        assert_eq!(j["passed"], 1);
        let csv = t.render(Format::Csv, &meta, &lines);
        assert!(csv.starts_with("# v=0\nsection,"));
        assert_eq!(csv.lines().count(), 4);
        let text = t.render(Format::Text, &meta, &lines);
        assert!(text.contains("FAIL y"));
        assert_eq!(t.first_failure().unwrap().name, "y");
    }
}

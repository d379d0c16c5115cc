//! Report documents and their JSON and Markdown renderings.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct FixtureInfo {
    pub name: String,
    pub path: String,
    pub sha256: String,
}

impl FixtureInfo {
    pub fn new(name: &str, path: &str, bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        FixtureInfo { name: name.to_string(), path: path.to_string(), sha256 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, ok: bool) -> Self {
        CheckLine { name: name.into(), ok, detail: None }
    }

    pub fn with(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        CheckLine { name: name.into(), ok, detail: Some(detail.into()) }
    }

    /// `value <= tol`, with the value recorded.
    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::with(name, value <= tol, format!("{value:.3e} <= {tol:.1e}"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Section {
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    pub checks: Vec<CheckLine>,
    pub data: Value,
}

impl Section {
    pub fn new(title: impl Into<String>, fixture: Option<&str>) -> Self {
        Section { title: title.into(), fixture: fixture.map(str::to_string), checks: Vec::new(), data: Value::Object(Default::default()) }
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report data serialises");
        self.data.as_object_mut().expect("data is an object").insert(key.to_string(), v);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub fixtures: Vec<FixtureInfo>,
    pub passed: bool,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig, fixtures: Vec<FixtureInfo>, sections: Vec<Section>) -> Self {
        let passed = sections.iter().all(Section::passed);
        Report { command: command.to_string(), config: config.clone(), fixtures, passed, sections }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serialises") + "\n",
            Format::Md => self.to_markdown(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("# cpdual {}\n\n", self.command);
        out += &format!("**Result:** {}\n\n", if self.passed { "PASS" } else { "FAIL" });
        if !self.fixtures.is_empty() {
            out += "| fixture | path | sha256 |\n|---|---|---|\n";
            for f in &self.fixtures {
                out += &format!("| {} | {} | `{}` |\n", f.name, f.path, f.sha256);
            }
            out += "\n";
        }
        out += "## Configuration\n\n```toml\n";
        out += &self.config.to_toml();
        out += "```\n\n";
        for s in &self.sections {
            out += &format!("## {}", s.title);
            if let Some(f) = &s.fixture {
                out += &format!(" ({f})");
            }
            out += "\n\n";
            if !s.checks.is_empty() {
                out += "| check | result | detail |\n|---|---|---|\n";
                for c in &s.checks {
                    out += &format!("| {} | {} | {} |\n", c.name, if c.ok { "pass" } else { "FAIL" }, c.detail.as_deref().unwrap_or(""));
                }
                out += "\n";
            }
            if let Value::Object(map) = &s.data {
                for (k, v) in map {
                    out += &format!("### {k}\n\n");
                    out += &markdown_value(v);
                    out += "\n";
                }
            }
        }
        out
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.replace('|', "\\|"),
        Value::Array(xs) if xs.iter().all(|x| !x.is_object() && !x.is_array()) => {
            format!("[{}]", xs.iter().map(scalar).collect::<Vec<_>>().join(", "))
        }
        other => other.to_string().replace('|', "\\|"),
    }
}

/// Arrays of objects become tables; objects become key lists.
fn markdown_value(v: &Value) -> String {
    match v {
        Value::Array(rows) if !rows.is_empty() && rows.iter().all(Value::is_object) => {
            let mut cols: Vec<String> = Vec::new();
            for r in rows {
                for k in r.as_object().unwrap().keys() {
                    if !cols.contains(k) {
                        cols.push(k.clone());
                    }
                }
            }
            let mut out = format!("| {} |\n|{}\n", cols.join(" | "), "---|".repeat(cols.len()));
            for r in rows {
                let o = r.as_object().unwrap();
                let cells: Vec<String> = cols.iter().map(|c| o.get(c).map_or(String::new(), scalar)).collect();
                out += &format!("| {} |\n", cells.join(" | "));
            }
            out
        }
        Value::Object(map) => map.iter().map(|(k, v)| format!("- {k}: {}\n", scalar(v))).collect(),
        other => format!("{}\n", scalar(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markdown_tables() {
        let mut s = Section::new("demo", Some("loop"));
        s.checks.push(CheckLine::below("residual", 1e-12, 1e-8));
        s.put("rows", serde_json::json!([{"l": 8, "norm": 0.3}, {"l": 16, "norm": 0.2}]));
        let r = Report::new("demo", &RunConfig::default(), vec![FixtureInfo::new("loop", "x.json", b"{}")], vec![s]);
        let md = r.to_markdown();
        assert!(md.contains("| l | norm |"));
        assert!(md.contains("| residual | pass |"));
        assert!(r.passed);
        assert_eq!(r.fixtures[0].sha256, "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a");
    }
}

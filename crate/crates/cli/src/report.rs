//! Demo output: one record type rendered either as JSON or as an aligned
//! text table carrying the same fields.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub rendered: Vec<String>,
    pub bits: Vec<u32>,
    /// Oracle or check outcome for the row, when one was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    /// Further numeric fields (gaps, timings, losses).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(label: impl Into<String>) -> Self {
        Row {
            label: label.into(),
            rendered: vec![],
            bits: vec![],
            verdict: None,
            metrics: BTreeMap::new(),
        }
    }

    pub fn rendered(mut self, text: impl Into<String>) -> Self {
        self.rendered.push(text.into());
        self
    }

    pub fn bits(mut self, bits: u32) -> Self {
        self.bits.push(bits);
        self
    }

    pub fn verdict(mut self, verdict: impl Into<String>) -> Self {
        self.verdict = Some(verdict.into());
        self
    }

    pub fn metric(mut self, name: &str, v: f64) -> Self {
        self.metrics.insert(name.into(), v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub demo: String,
    pub params: BTreeMap<String, Value>,
    pub rows: Vec<Row>,
}

impl DemoReport {
    pub fn new(demo: &str) -> Self {
        DemoReport {
            demo: demo.into(),
            params: BTreeMap::new(),
            rows: vec![],
        }
    }

    pub fn param(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.params.insert(name.into(), v.into());
        self
    }

    pub fn row(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn find(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    /// Header with the parameters, then one line per row:
    /// label, rendered strings, bits, metrics, verdict.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "{} {}", self.demo, params.join(" "));
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut c = vec![r.label.clone()];
                c.extend(r.rendered.iter().cloned());
                if !r.bits.is_empty() {
                    let b: Vec<String> = r.bits.iter().map(|b| b.to_string()).collect();
                    c.push(format!("bits={}", b.join(",")));
                }
                c.extend(r.metrics.iter().map(|(k, v)| format!("{k}={v}")));
                if let Some(v) = &r.verdict {
                    c.push(v.clone());
                }
                c
            })
            .collect();
        let cols = cells.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|i| cells.iter().filter_map(|c| c.get(i)).map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        for c in &cells {
            let line: Vec<String> = c
                .iter()
                .enumerate()
                .map(|(i, s)| format!("{s:<w$}", w = widths[i]))
                .collect();
            let _ = writeln!(out, "  {}", line.join("  ").trim_end());
        }
        out
    }
}

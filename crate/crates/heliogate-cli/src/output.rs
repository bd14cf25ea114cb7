//! Deterministic CSV and JSON emitters. Floats carry 10 significant digits;
//! identical configurations produce byte-identical artifacts.

use std::io::Write;
use std::path::Path;

use crate::config::OutputFormat;

#[derive(Debug, Clone)]
pub enum Value {
    Str(String),
    Num(f64),
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Str(s) => {
                if s.contains(',') || s.contains('"') || s.contains('\n') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Value::Num(x) => fmt_num(*x),
        }
    }

    fn json(&self) -> String {
        match self {
            Value::Str(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            Value::Num(x) => {
                if x.is_finite() {
                    format!("\"{}\"", fmt_num(*x))
                } else {
                    format!("\"{x}\"")
                }
            }
        }
    }
}

/// 10 significant digits, scientific.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.9e}")
}

/// A tabular artifact: metadata lines plus a header row and data rows.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: String) {
        self.meta.push((key.to_string(), value));
    }

    pub fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.header.len());
        self.rows.push(values);
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.render_csv(),
            OutputFormat::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Value::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn render_json(&self) -> String {
        let mut s = String::from("{\n  \"meta\": {");
        for (i, (k, v)) in self.meta.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("\n    \"{k}\": \"{v}\""));
        }
        if !self.meta.is_empty() {
            s.push_str("\n  ");
        }
        s.push_str("},\n  \"rows\": [");
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str("\n    {");
            for (j, (name, value)) in self.header.iter().zip(row.iter()).enumerate() {
                if j > 0 {
                    s.push_str(", ");
                }
                s.push_str(&format!("\"{name}\": {}", value.json()));
            }
            s.push('}');
        }
        if !self.rows.is_empty() {
            s.push_str("\n  ");
        }
        s.push_str("]\n}\n");
        s
    }

    /// Write to the given path or stdout.
    pub fn emit(&self, format: OutputFormat, out: Option<&Path>) -> std::io::Result<()> {
        let rendered = self.render(format);
        match out {
            Some(path) => std::fs::write(path, rendered),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(rendered.as_bytes())
            }
        }
    }
}

//! Long-format tables with their metadata, written as CSV or JSON.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::config::{Format, RunConfig};

/// One number. `channel`, `energy` and `t` are blank when they do not apply.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    pub channel: Option<usize>,
    pub energy: Option<f64>,
    pub t: Option<f64>,
    pub value: f64,
    pub unit: &'static str,
}

impl Row {
    pub fn new(quantity: &str, value: f64, unit: &'static str) -> Self {
        Self {
            quantity: quantity.to_string(),
            channel: None,
            energy: None,
            t: None,
            value,
            unit,
        }
    }

    pub fn channel(mut self, j: usize) -> Self {
        self.channel = Some(j);
        self
    }

    pub fn energy(mut self, e: f64) -> Self {
        self.energy = Some(e);
        self
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Output {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    /// Structured report of the command, JSON only.
    pub report: serde_json::Value,
}

impl Output {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("command".into(), command.into());
        metadata.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        metadata.insert("seed".into(), cfg.seed.to_string());
        metadata.insert("mu".into(), cfg.thermal.mu.to_string());
        metadata.insert("temperature".into(), cfg.thermal.temperature.to_string());
        if let Some(model) = &cfg.model {
            metadata.insert("model".into(), model.kind().into());
        }
        if let Ok(serde_json::Value::Object(q)) = serde_json::to_value(&cfg.quadrature) {
            for (key, value) in q {
                metadata.insert(format!("quadrature.{key}"), value.to_string());
            }
        }
        Self {
            metadata,
            rows: Vec::new(),
            report: serde_json::Value::Null,
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            Format::Csv => {
                for (key, value) in &self.metadata {
                    writeln!(out, "# {key}={value}")?;
                }
                let mut w = csv::Writer::from_writer(out);
                w.write_record(["quantity", "channel", "energy", "t", "value", "unit"])?;
                let opt = |x: Option<f64>| x.map(number).unwrap_or_default();
                for r in &self.rows {
                    w.write_record([
                        r.quantity.clone(),
                        r.channel.map(|j| j.to_string()).unwrap_or_default(),
                        opt(r.energy),
                        opt(r.t),
                        number(r.value),
                        r.unit.to_string(),
                    ])?;
                }
                w.flush()
            }
        }
    }
}

/// Shortest round-trip text, in exponent form for very small or large magnitudes.
fn number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

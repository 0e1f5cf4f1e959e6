//! CSV and JSON writers.
//!
//! Every CSV starts with `# key=value` lines echoing the resolved inputs,
//! then a header row. Numbers use `{:.14e}` and lines end in `\n`.

use serde::Serialize;
use serde_json::{Map, Value};
use std::io::{self, Write};

use crate::analysis::SweepTable;
use crate::current::TofSignal;

/// Ordered `key=value` metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(Vec<(String, String)>);

impl Metadata {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_owned(), value.to_string()));
    }

    /// Shortest round-trip scientific form.
    pub fn num(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:e}"));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.0
    }

    fn write(&self, out: &mut impl Write) -> io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(out, "# {k}={v}")?;
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .0
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        Value::Object(map)
    }
}

pub const SIGNAL_HEADER: &str = "t_s,pi_per_s";
pub const CHANNEL_HEADER: &str = ",j1,j2,cross,p12,delta";

pub fn write_signal_csv(out: &mut impl Write, meta: &Metadata, signal: &TofSignal) -> io::Result<()> {
    meta.write(out)?;
    match &signal.channels {
        None => {
            writeln!(out, "{SIGNAL_HEADER}")?;
            for (i, p) in signal.pi.iter().enumerate() {
                writeln!(out, "{:.14e},{:.14e}", signal.grid.time(i), p)?;
            }
        }
        Some(ch) => {
            writeln!(out, "{SIGNAL_HEADER}{CHANNEL_HEADER}")?;
            for (i, (p, c)) in signal.pi.iter().zip(ch).enumerate() {
                writeln!(
                    out,
                    "{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e}",
                    signal.grid.time(i),
                    p,
                    c.j1,
                    c.j2,
                    c.cross,
                    c.p12,
                    c.delta
                )?;
            }
        }
    }
    Ok(())
}

/// Curve samples `(t, value)` under the shared two-column header.
pub fn write_curve_csv(out: &mut impl Write, meta: &Metadata, t: &[f64], values: &[f64]) -> io::Result<()> {
    meta.write(out)?;
    writeln!(out, "{SIGNAL_HEADER}")?;
    for (t, v) in t.iter().zip(values) {
        writeln!(out, "{t:.14e},{v:.14e}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Channels {
    j1: Vec<f64>,
    j2: Vec<f64>,
    cross: Vec<f64>,
    p12: Vec<f64>,
    delta: Vec<f64>,
}

pub fn write_signal_json(out: &mut impl Write, meta: &Metadata, signal: &TofSignal) -> io::Result<()> {
    let mut doc = Map::new();
    doc.insert("metadata".into(), meta.to_json());
    doc.insert("t_s".into(), serde_json::to_value(signal.times())?);
    doc.insert("pi_per_s".into(), serde_json::to_value(&signal.pi)?);
    if let Some(ch) = &signal.channels {
        let channels = Channels {
            j1: ch.iter().map(|c| c.j1).collect(),
            j2: ch.iter().map(|c| c.j2).collect(),
            cross: ch.iter().map(|c| c.cross).collect(),
            p12: ch.iter().map(|c| c.p12).collect(),
            delta: ch.iter().map(|c| c.delta).collect(),
        };
        doc.insert("channels".into(), serde_json::to_value(channels)?);
    }
    write_json(out, &Value::Object(doc))
}

pub fn write_json(out: &mut impl Write, value: &impl Serialize) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

/// Two-column curve as JSON, with extra top-level entries.
pub fn curve_json(meta: &Metadata, t: &[f64], values: &[f64]) -> Map<String, Value> {
    let mut doc = Map::new();
    doc.insert("metadata".into(), meta.to_json());
    doc.insert("t_s".into(), Value::from(t.to_vec()));
    doc.insert("pi_per_s".into(), Value::from(values.to_vec()));
    doc
}

pub const SWEEP_HEADER: &str =
    "value,n_maxima,n_fringes,visibility,max_contrast,mean_arrival_s,total_prob,peak_value_per_s,peak_time_s,error";

pub fn write_sweep_csv(out: &mut impl Write, meta: &Metadata, table: &SweepTable) -> io::Result<()> {
    meta.write(out)?;
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in &table.rows {
        match (&row.report, row.error_kind) {
            (Some(r), _) => writeln!(
                out,
                "{:.14e},{},{},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},",
                row.value,
                r.n_maxima,
                r.n_fringes,
                r.visibility,
                r.max_contrast,
                r.mean_arrival,
                r.total_prob,
                r.peak_value,
                r.peak_time
            )?,
            (None, kind) => writeln!(out, "{:.14e},,,,,,,,,{}", row.value, kind.unwrap_or("Error"))?,
        }
    }
    Ok(())
}

pub fn sweep_json(meta: &Metadata, table: &SweepTable) -> Value {
    let mut doc = Map::new();
    doc.insert("metadata".into(), meta.to_json());
    doc.insert("table".into(), serde_json::to_value(table).expect("sweep table serializes"));
    Value::Object(doc)
}

//! CSV and JSON writers. Every file starts with the same provenance block:
//! `#`-prefixed lines in CSV, a `metadata` object in JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::SimTrace;
use crate::spectral::{CpsdCurve, HarmonicEstimate};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Metadata {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Metadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.into(),
            seed,
        }
    }

    fn write_csv_header(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# tool: {} {}", self.tool, self.version)?;
        writeln!(w, "# config_hash: {}", self.config_hash)?;
        writeln!(w, "# seed: {}", self.seed)
    }
}

/// Writes a numeric table. Values use the shortest round-trip decimal form.
pub fn write_csv<I, R>(path: &Path, meta: &Metadata, columns: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = BufWriter::new(File::create(path)?);
    meta.write_csv_header(&mut w)?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let mut first = true;
        for v in row.as_ref() {
            if !first {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, e, e_r, u_r, u, y`.
pub fn write_trace_csv(path: &Path, meta: &Metadata, trace: &SimTrace) -> Result<()> {
    let ch = trace.channels();
    let names: Vec<&str> = ch.iter().map(|c| c.0).collect();
    let rows = (0..trace.len()).map(|k| ch.iter().map(|c| c.1[k]).collect::<Vec<_>>());
    write_csv(path, meta, &names, rows)
}

/// Columns `t_event, pre_0.., post_0..`.
pub fn write_events_csv(path: &Path, meta: &Metadata, trace: &SimTrace) -> Result<()> {
    let order = trace.events.first().map_or(1, |e| e.pre_state.len());
    let mut names = vec!["t_event".to_string()];
    names.extend((0..order).map(|i| format!("pre_{i}")));
    names.extend((0..order).map(|i| format!("post_{i}")));
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows = trace.events.iter().map(|e| {
        let mut r = vec![e.time];
        r.extend(&e.pre_state);
        r.extend(&e.post_state);
        r
    });
    write_csv(path, meta, &names, rows)
}

/// Columns `frequency_hz, cumulative_power`.
pub fn write_cpsd_csv(path: &Path, meta: &Metadata, curve: &CpsdCurve) -> Result<()> {
    let rows = curve.frequency_hz.iter().zip(&curve.cumulative).map(|(f, c)| [*f, *c]);
    write_csv(path, meta, &["frequency_hz", "cumulative_power"], rows)
}

/// Columns `n, magnitude, phase_deg`.
pub fn write_harmonics_csv(path: &Path, meta: &Metadata, harmonics: &[HarmonicEstimate]) -> Result<()> {
    let rows = harmonics.iter().map(|h| [h.order as f64, h.magnitude(), h.phase_deg()]);
    write_csv(path, meta, &["n", "magnitude", "phase_deg"], rows)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    metadata: &'a Metadata,
    data: &'a T,
}

/// Writes `{"metadata": ..., "data": ...}`, pretty-printed.
pub fn write_json<T: Serialize>(path: &Path, meta: &Metadata, data: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &Envelope { metadata: meta, data })
        .map_err(|e| crate::Error::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads the data rows of a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| crate::Error::Io(format!("{} has no header", path.display())))?;
    let columns = header.split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().map_err(|e| crate::Error::Io(format!("{v}: {e}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((columns, rows))
}

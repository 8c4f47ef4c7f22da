//! CSV and JSON serialization of sweep records and trend points.

use std::io::{Read, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use cpr_core::sweep::Trend;
use cpr_core::{MeasureRecord, ProtocolKind, SweepRecord, TrendPoint};
use serde::Serialize;

use crate::CliError;

pub const SWEEP_HEADER: [&str; 8] = [
    "protocol",
    "k",
    "lambda",
    "t",
    "log_negativity",
    "probability",
    "non_gaussianity",
    "rate",
];

pub const TREND_HEADER: [&str; 4] = ["k", "t_max", "e_max", "p_at_max"];

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord], footer: &[String]) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in records {
        let (e, p, g, rate) = match r.measures {
            Some(m) => (
                fmt_f64(m.log_negativity),
                fmt_f64(m.probability),
                fmt_f64(m.non_gaussianity),
                fmt_f64(m.rate),
            ),
            None => (String::new(), fmt_f64(0.0), String::new(), String::new()),
        };
        w.write_record([
            r.protocol.label().to_string(),
            r.k.to_string(),
            fmt_f64(r.lambda),
            fmt_f64(r.t),
            e,
            p,
            g,
            rate,
        ])?;
    }
    let mut out = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    for line in footer {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(row: usize, name: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Parse(format!("row {row}: bad {name} '{raw}'")))
}

/// Reads a sweep CSV back, skipping `#` comment lines.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(CliError::Parse(format!("unexpected header {header:?}")));
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let protocol: ProtocolKind = row[0]
            .parse()
            .map_err(|_| CliError::Parse(format!("row {line}: bad protocol '{}'", &row[0])))?;
        let measures = if row[4].is_empty() {
            None
        } else {
            Some(MeasureRecord {
                log_negativity: parse_field(line, "log_negativity", &row[4])?,
                probability: parse_field(line, "probability", &row[5])?,
                non_gaussianity: parse_field(line, "non_gaussianity", &row[6])?,
                rate: parse_field(line, "rate", &row[7])?,
            })
        };
        records.push(SweepRecord {
            protocol,
            k: parse_field(line, "k", &row[1])?,
            lambda: parse_field(line, "lambda", &row[2])?,
            t: parse_field(line, "t", &row[3])?,
            measures,
        });
    }
    Ok(records)
}

pub fn write_trend_csv<W: Write>(out: W, trend: &Trend) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(TREND_HEADER)?;
    for p in &trend.points {
        w.write_record([
            p.k.to_string(),
            fmt_f64(p.t_max),
            fmt_f64(p.e_max),
            fmt_f64(p.p_at_max),
        ])?;
    }
    let mut out = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    match trend.slope {
        Some(s) => writeln!(out, "# slope_log10_p_vs_k={}", fmt_f64(s))?,
        None => writeln!(out, "# slope_log10_p_vs_k=")?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct JsonSweepRow {
    protocol: ProtocolKind,
    k: usize,
    lambda: f64,
    t: f64,
    log_negativity: Option<f64>,
    probability: f64,
    non_gaussianity: Option<f64>,
    rate: Option<f64>,
}

impl From<&SweepRecord> for JsonSweepRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            protocol: r.protocol,
            k: r.k,
            lambda: r.lambda,
            t: r.t,
            log_negativity: r.measures.map(|m| m.log_negativity),
            probability: r.probability(),
            non_gaussianity: r.measures.map(|m| m.non_gaussianity),
            rate: r.measures.map(|m| m.rate),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a, C: Serialize> {
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl<'a, C: Serialize> Metadata<'a, C> {
    pub fn new(command: &'a str, config: &'a C) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

pub fn write_sweep_json<W: Write, C: Serialize>(
    out: W,
    meta: &Metadata<'_, C>,
    records: &[SweepRecord],
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Doc<'a, C: Serialize> {
        metadata: &'a Metadata<'a, C>,
        records: Vec<JsonSweepRow>,
    }
    let doc = Doc {
        metadata: meta,
        records: records.iter().map(JsonSweepRow::from).collect(),
    };
    write_json(out, &doc)
}

pub fn write_trend_json<W: Write, C: Serialize>(
    out: W,
    meta: &Metadata<'_, C>,
    trend: &Trend,
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Doc<'a, C: Serialize> {
        metadata: &'a Metadata<'a, C>,
        records: &'a [TrendPoint],
        slope_log10_p_vs_k: Option<f64>,
    }
    let doc = Doc {
        metadata: meta,
        records: &trend.points,
        slope_log10_p_vs_k: trend.slope,
    };
    write_json(out, &doc)
}

fn write_json<W: Write, T: Serialize>(mut out: W, doc: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, doc).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use super::runner::{ChannelDump, MetricsRecord};
use super::ScenarioError;
use crate::array::{ArrayGeometry, Cut};
use crate::units::linear_to_db;

/// Column order of the metrics CSV; JSON objects use the same keys.
pub const CSV_HEADER: [&str; 12] = [
    "trial",
    "sweep_value",
    "pair",
    "mutual_information_bps_hz",
    "absolute_error",
    "normalized_error",
    "normalized_error_db",
    "snr_db",
    "transmit_power_dbm",
    "path_loss_db",
    "received_power_dbm",
    "noise_power_dbm",
];

const PATTERN_SAMPLES: usize = 361;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// 17 significant digits, enough to round-trip any `f64`. Non-finite values
/// print as `NaN`, `inf` and `-inf`, which `str::parse::<f64>` accepts.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(context: &str, e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Io(format!("{context}: {e}"))
}

fn record_fields(r: &MetricsRecord) -> [String; 12] {
    [
        r.trial.to_string(),
        format_float(r.sweep_value),
        r.pair.clone(),
        format_float(r.mutual_information_bps_hz),
        format_float(r.absolute_error),
        format_float(r.normalized_error),
        format_float(r.normalized_error_db),
        format_float(r.snr_db),
        format_float(r.transmit_power_dbm),
        format_float(r.path_loss_db),
        format_float(r.received_power_dbm),
        format_float(r.noise_power_dbm),
    ]
}

pub fn write_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(|e| io_err("writing csv", e))?;
    for r in records {
        w.write_record(record_fields(r)).map_err(|e| io_err("writing csv", e))?;
    }
    w.flush().map_err(|e| io_err("writing csv", e))
}

/// Inverse of [`write_csv`]; the header must match [`CSV_HEADER`] exactly.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricsRecord>, ScenarioError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| io_err("reading csv", e))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(ScenarioError::Io(format!("unexpected csv header: {header:?}")));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| io_err("reading csv", e))?;
        let float = |i: usize| -> Result<f64, ScenarioError> {
            row[i]
                .parse::<f64>()
                .map_err(|e| io_err(&format!("row {}, column {}", line + 1, CSV_HEADER[i]), e))
        };
        out.push(MetricsRecord {
            trial: row[0]
                .parse()
                .map_err(|e| io_err(&format!("row {}, column trial", line + 1), e))?,
            sweep_value: float(1)?,
            pair: row[2].to_string(),
            mutual_information_bps_hz: float(3)?,
            absolute_error: float(4)?,
            normalized_error: float(5)?,
            normalized_error_db: float(6)?,
            snr_db: float(7)?,
            transmit_power_dbm: float(8)?,
            path_loss_db: float(9)?,
            received_power_dbm: float(10)?,
            noise_power_dbm: float(11)?,
        });
    }
    Ok(out)
}

fn json_number(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else {
        "null".to_string()
    }
}

/// JSON array of records. Non-finite floats become `null`.
pub fn write_json<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<(), ScenarioError> {
    let mut s = String::from("[");
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let fields = record_fields(r);
        s.push_str("\n  {");
        for (k, (name, value)) in CSV_HEADER.iter().zip(fields).enumerate() {
            if k > 0 {
                s.push_str(", ");
            }
            let value = match k {
                0 => value,
                2 => serde_json::to_string(&r.pair).expect("strings serialize"),
                _ => json_number(value.parse().expect("formatted above")),
            };
            s.push_str(&format!("\"{name}\": {value}"));
        }
        s.push('}');
    }
    s.push_str(if records.is_empty() { "]\n" } else { "\n]\n" });
    out.write_all(s.as_bytes()).map_err(|e| io_err("writing json", e))?;
    out.flush().map_err(|e| io_err("writing json", e))
}

/// Writes to `destination`, or to stdout when it is `None`.
pub fn emit_results(
    records: &[MetricsRecord],
    format: OutputFormat,
    destination: Option<&Path>,
) -> Result<(), ScenarioError> {
    let sink: Box<dyn Write> = match destination {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_err(&format!("cannot write {}", p.display()), e))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        OutputFormat::Csv => write_csv(records, sink),
        OutputFormat::Json => write_json(records, sink),
    }
}

/// One row per matrix entry of every dumped realization.
pub fn write_channels_csv<W: Write>(channels: &[ChannelDump], out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e| io_err("writing channel dump", e);
    w.write_record([
        "trial",
        "sweep_value",
        "source",
        "destination",
        "gain",
        "row",
        "col",
        "re",
        "im",
    ])
    .map_err(err)?;
    for c in channels {
        for j in 0..c.matrix.ncols() {
            for i in 0..c.matrix.nrows() {
                let h = c.matrix[(i, j)];
                w.write_record([
                    c.trial.to_string(),
                    format_float(c.sweep_value),
                    c.source.clone(),
                    c.destination.clone(),
                    format_float(c.gain),
                    i.to_string(),
                    j.to_string(),
                    format_float(h.re),
                    format_float(h.im),
                ])
                .map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| io_err("writing channel dump", e))
}

/// Azimuth and elevation cuts of an array's weighted gain.
pub fn write_pattern_csv<W: Write>(array: &ArrayGeometry, out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e| io_err("writing pattern", e);
    w.write_record(["cut", "angle_rad", "gain_re", "gain_im", "gain_db"])
        .map_err(err)?;
    for (cut, label) in [(Cut::Azimuth, "azimuth"), (Cut::Elevation, "elevation")] {
        let samples = array
            .pattern_cut(cut, PATTERN_SAMPLES)
            .map_err(|e| ScenarioError::runtime("pattern cut", e))?;
        for (angle, g) in samples {
            w.write_record([
                label.to_string(),
                format_float(angle),
                format_float(g.re),
                format_float(g.im),
                format_float(linear_to_db(g.norm_sqr())),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| io_err("writing pattern", e))
}

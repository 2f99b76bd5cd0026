use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const RECORD_HEADER: [&str; 8] = [
    "replicate",
    "seed",
    "rho",
    "subject",
    "metric",
    "value",
    "status",
    "note",
];
pub const SUMMARY_HEADER: [&str; 6] = ["rho", "subject", "statistic", "value", "successes", "replicates"];
const SUMMARY_SCHEMA: &str = "mlspec.summary/1";
const MANIFEST_SCHEMA: &str = "mlspec.manifest/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed => "failed",
        }
    }
}

/// One measured value from one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub replicate: u64,
    pub seed: u64,
    pub rho: f64,
    /// Estimator name, vertex pair `"i1-i2"`, or vertex.
    pub subject: String,
    pub metric: String,
    pub value: f64,
    pub status: Status,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub rho: f64,
    pub subject: String,
    pub statistic: String,
    pub value: f64,
    pub successes: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub replicate: u64,
    pub rho: f64,
    pub subject: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<McRecord>,
    pub summary: Vec<SummaryRow>,
    pub timings: Vec<Timing>,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.status == Status::Failed).count()
    }

    pub fn summary_value(&self, rho: f64, subject: &str, statistic: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.rho == rho && r.subject == subject && r.statistic == statistic)
    }
}

/// Round-trip float text: 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_records_csv(records: &[McRecord], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.replicate.to_string(),
            r.seed.to_string(),
            format_float(r.rho),
            r.subject.clone(),
            r.metric.clone(),
            format_float(r.value),
            r.status.as_str().to_string(),
            r.note.clone(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

pub fn read_records_csv(input: impl Read) -> io::Result<Vec<McRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_error)?;
        let field = |i: usize| row.get(i).ok_or_else(|| invalid(format!("short row {row:?}")));
        let num = |i: usize| -> io::Result<f64> { field(i)?.parse().map_err(|e| invalid(format!("bad float: {e}"))) };
        let int = |i: usize| -> io::Result<u64> { field(i)?.parse().map_err(|e| invalid(format!("bad integer: {e}"))) };
        out.push(McRecord {
            replicate: int(0)?,
            seed: int(1)?,
            rho: num(2)?,
            subject: field(3)?.to_string(),
            metric: field(4)?.to_string(),
            value: num(5)?,
            status: match field(6)? {
                "ok" => Status::Ok,
                "failed" => Status::Failed,
                s => return Err(invalid(format!("unknown status {s:?}"))),
            },
            note: field(7)?.to_string(),
        });
    }
    Ok(out)
}

pub fn write_summary_csv(rows: &[SummaryRow], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            format_float(r.rho),
            r.subject.clone(),
            r.statistic.clone(),
            format_float(r.value),
            r.successes.to_string(),
            r.replicates.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

fn write_timings_csv(rows: &[Timing], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replicate", "rho", "subject", "seconds"])
        .map_err(csv_error)?;
    for t in rows {
        w.write_record([
            t.replicate.to_string(),
            format_float(t.rho),
            t.subject.clone(),
            format!("{:.6}", t.seconds),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

/// SHA-256 of the canonical config JSON, hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'a str,
    software: &'a str,
    version: &'a str,
    kind: &'a str,
    seed: u64,
    config_sha256: String,
    records: usize,
    failed_records: usize,
    files: [&'a str; 4],
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    schema: &'a str,
    kind: &'a str,
    rows: &'a [SummaryRow],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub records: PathBuf,
    pub summary_csv: PathBuf,
    pub summary_json: PathBuf,
    pub timings: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `records.csv`, `summary.csv`, `summary.json`, `timings.csv` and
/// `manifest.json` into `dir`. Everything except `timings.csv` depends only
/// on the config.
pub fn emit(out: &RunOutput, cfg: &ExperimentConfig, dir: &Path) -> io::Result<EmittedFiles> {
    fs::create_dir_all(dir)?;
    let files = EmittedFiles {
        records: dir.join("records.csv"),
        summary_csv: dir.join("summary.csv"),
        summary_json: dir.join("summary.json"),
        timings: dir.join("timings.csv"),
        manifest: dir.join("manifest.json"),
    };
    write_records_csv(&out.records, io::BufWriter::new(fs::File::create(&files.records)?))?;
    write_summary_csv(&out.summary, io::BufWriter::new(fs::File::create(&files.summary_csv)?))?;
    write_timings_csv(&out.timings, io::BufWriter::new(fs::File::create(&files.timings)?))?;
    let summary = SummaryDoc {
        schema: SUMMARY_SCHEMA,
        kind: cfg.kind.as_str(),
        rows: &out.summary,
    };
    fs::write(&files.summary_json, to_json(&summary)?)?;
    let mut canonical = cfg.clone();
    canonical.output = None;
    canonical.threads = 1;
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        kind: cfg.kind.as_str(),
        seed: cfg.seed,
        config_sha256: config_hash(cfg),
        records: out.records.len(),
        failed_records: out.failures(),
        files: ["records.csv", "summary.csv", "summary.json", "timings.csv"],
        config: &canonical,
    };
    fs::write(&files.manifest, to_json(&manifest)?)?;
    Ok(files)
}

fn to_json(value: &impl Serialize) -> io::Result<String> {
    // NaN is not JSON; failed cells become null.
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    Ok(text)
}

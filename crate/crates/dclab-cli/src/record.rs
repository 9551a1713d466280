//! Run records: a config snapshot plus results, written atomically into a
//! timestamped directory. All numeric CSV output carries 17 significant
//! digits so records round-trip bitwise.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

pub const RECORD_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub results: Value,
    pub timings_ms: Value,
    pub timestamp: String,
}

/// Formats a float with 17 significant digits (exact round trip).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// UTC timestamp `YYYYMMDDTHHMMSSZ` from the system clock.
pub fn utc_timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let days = (secs / 86400) as i64;
    let rem = secs % 86400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    let (year, month, day) = civil_from_days(days);
    format!("{year:04}{month:02}{day:02}T{h:02}{m:02}{s:02}Z")
}

/// Gregorian date from days since 1970-01-01 (Hinnant's algorithm).
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

/// Creates `<out>/<timestamp>-<command>/`, appending a counter on collision.
pub fn create_run_dir(out: &Path, command: &str) -> std::io::Result<PathBuf> {
    let stamp = utc_timestamp();
    let mut dir = out.join(format!("{stamp}-{command}"));
    let mut counter = 1;
    while dir.exists() {
        counter += 1;
        dir = out.join(format!("{stamp}-{command}-{counter}"));
    }
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Writes bytes to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// JSON formatter printing every float with 17 significant digits, so the
/// textual record round-trips bitwise.
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn record_to_json(record: &RunRecord) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    serde::Serialize::serialize(record, &mut ser).expect("record serializes");
    String::from_utf8(out).expect("record is utf-8")
}

pub fn write_record(dir: &Path, record: &RunRecord) -> std::io::Result<()> {
    write_atomic(&dir.join("record.json"), record_to_json(record).as_bytes())
}

pub fn write_log(dir: &Path, lines: &[String]) -> std::io::Result<()> {
    write_atomic(&dir.join("log.txt"), (lines.join("\n") + "\n").as_bytes())
}

/// Writes a CSV table with RFC 4180 quoting; numeric cells are preformatted
/// by the caller through [`fmt17`].
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner()?;
    write_atomic(path, &bytes)?;
    Ok(())
}

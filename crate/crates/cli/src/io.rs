//! File formats: daily input detection, CSV/JSON writers and checksums.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use cojump::series::to_log_returns;
use cojump::{PriceSeries, ReturnSeries, Units};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Reads a daily CSV. A `date,price` file yields decimal log returns; a file
/// whose second column is `return` (as written by `simulate`) is read as
/// percent returns.
pub fn read_daily(path: &Path) -> CliResult<ReturnSeries> {
    let mut text = String::new();
    File::open(path)
        .map_err(|e| CliError::io(path, e))?
        .read_to_string(&mut text)
        .map_err(|e| CliError::io(path, e))?;
    let header = text.lines().next().unwrap_or("").to_ascii_lowercase();
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    match cols.as_slice() {
        ["date", "price", ..] => {
            let prices = PriceSeries::from_csv_reader(text.as_bytes())?;
            Ok(to_log_returns(&prices)?)
        }
        ["date", "return", ..] => {
            let mut rdr = csv::Reader::from_reader(text.as_bytes());
            let (mut dates, mut values) = (Vec::new(), Vec::new());
            for (n, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let bad = |what: &str| CliError::Input(format!("{}: line {}: bad {what}", path.display(), n + 2));
                dates.push(NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d").map_err(|_| bad("date"))?);
                values.push(rec[1].trim().parse::<f64>().map_err(|_| bad("return"))?);
            }
            Ok(ReturnSeries::new(dates, values, Units::Percent)?)
        }
        _ => Err(CliError::Input(format!(
            "{}: expected a 'date,price' or 'date,return' header, got '{header}'",
            path.display()
        ))),
    }
}

pub fn open_input(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes `header` then one line per row; cells are written as given.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<PathBuf> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(path.to_path_buf())
}

/// Shortest round-trip decimal form; empty for missing values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

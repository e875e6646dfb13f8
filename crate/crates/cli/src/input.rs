//! Input loading: file or stdin, with optional calendar-time remapping.

use std::fs;
use std::io::Read;

use didbracket::{Error, PanelDataset, Result};

/// Read the raw bytes of `path`, with `-` meaning stdin.
pub fn read_source(path: &str) -> Result<Vec<u8>> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Error::Format(format!("cannot read stdin: {e}")))?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| Error::Format(format!("cannot read {path}: {e}")))
    }
}

/// Load a dataset, optionally remapping the `time` column first.
///
/// `remap` lists the calendar times in study order; the first entry
/// becomes period 1, the second period 2, and so on. Rows whose time is
/// not listed are an error: remapping must account for every row.
pub fn load_dataset(path: &str, remap: Option<&[String]>) -> Result<PanelDataset> {
    let bytes = read_source(path)?;
    match remap {
        None => PanelDataset::load_long_csv(&bytes[..]),
        Some(times) => {
            let rewritten = remap_times(&bytes, times)?;
            PanelDataset::load_long_csv(&rewritten[..])
        }
    }
}

fn remap_times(bytes: &[u8], times: &[String]) -> Result<Vec<u8>> {
    let position = |token: &str| -> Result<usize> {
        times
            .iter()
            .position(|t| t == token)
            .map(|i| i + 1)
            .ok_or_else(|| {
                Error::Format(format!(
                    "time {token:?} not listed in --remap-times ({})",
                    times.join(",")
                ))
            })
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("cannot read CSV header: {e}")))?
        .clone();
    let time_col = headers
        .iter()
        .position(|h| h == "time")
        .ok_or_else(|| Error::Format("no `time` column to remap".into()))?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(&headers)
        .map_err(|e| Error::Format(format!("rewrite error: {e}")))?;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(format!("CSV parse error: {e}")))?;
        let mut fields: Vec<String> = record.iter().map(str::to_string).collect();
        if let Some(field) = fields.get_mut(time_col) {
            *field = position(field)?.to_string();
        }
        writer
            .write_record(&fields)
            .map_err(|e| Error::Format(format!("rewrite error: {e}")))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Format(format!("rewrite error: {e}")))
}

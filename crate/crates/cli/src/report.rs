use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::args::Format;

/// One scored separation. Code parameters are empty for modes that do not
/// hash.
#[derive(Serialize, Debug, Clone)]
pub struct ScoreRow {
    pub utterance_id: String,
    pub noise_id: String,
    pub mode: String,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub sdr: f64,
    pub sir: f64,
    pub sar: f64,
}

pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_rows<T: Serialize>(rows: &[T], format: Format, out: Box<dyn Write>) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Square matrix with a header row and a leading column of frame indices.
pub fn write_matrix(
    path: &Path,
    frames: &[usize],
    get: impl Fn(usize, usize) -> f64,
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["frame".to_string()];
    header.extend(frames.iter().map(usize::to_string));
    w.write_record(&header)?;
    for (i, f) in frames.iter().enumerate() {
        let mut record = vec![f.to_string()];
        record.extend((0..frames.len()).map(|j| get(i, j).to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

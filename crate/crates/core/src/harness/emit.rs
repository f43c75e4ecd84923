use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{invalid, LoadingError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = LoadingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(LoadingError::Config(format!("unknown format `{other}`"))),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LoadingError + '_ {
    move |source| LoadingError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `records` as CSV (header plus one row each) or as a JSON array.
pub fn write_records<T: Serialize, W: Write>(
    records: &[T],
    writer: W,
    format: OutputFormat,
) -> std::result::Result<(), std::io::Error> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            for r in records {
                w.serialize(r)?;
            }
            w.flush()
        }
        OutputFormat::Json => {
            let mut writer = writer;
            serde_json::to_writer_pretty(&mut writer, records)?;
            writeln!(writer)?;
            writer.flush()
        }
    }
}

/// Writes `records` to `path`. Errors name the path.
pub fn emit<T: Serialize>(records: &[T], path: &Path, format: OutputFormat) -> Result<()> {
    if records.is_empty() {
        return Err(invalid("nothing to write"));
    }
    let file = File::create(path).map_err(io_err(path))?;
    write_records(records, BufWriter::new(file), format).map_err(io_err(path))
}

pub fn read_records<T: DeserializeOwned>(path: &Path, format: OutputFormat) -> Result<Vec<T>> {
    let parse_err = |message: String| LoadingError::Parse {
        path: path.to_path_buf(),
        message,
    };
    match format {
        OutputFormat::Csv => {
            let mut r = csv::Reader::from_path(path).map_err(|e| parse_err(e.to_string()))?;
            r.deserialize()
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| parse_err(e.to_string()))
        }
        OutputFormat::Json => {
            let file = File::open(path).map_err(io_err(path))?;
            serde_json::from_reader(std::io::BufReader::new(file))
                .map_err(|e| parse_err(e.to_string()))
        }
    }
}

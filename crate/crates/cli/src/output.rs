use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use gasketlab::{Error, Result};
use serde::Serialize;
use serde_json::Value;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(io::Error::other(format!("{other:?}"))),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Io(io::Error::other(e))
}

/// Converts to a JSON tree; object keys come out sorted.
pub fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(json_error)
}

/// Pretty JSON with a trailing newline, to `path` or stdout.
pub fn write_json(value: &Value, path: Option<&Path>) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(json_error)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn write_text(text: &str, path: Option<&Path>) -> Result<()> {
    let mut out = sink(path)?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

/// RFC-4180 CSV with a header row.
pub fn write_csv<H, R, I>(header: &[H], rows: I, path: Option<&Path>) -> Result<()>
where
    H: AsRef<str>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::Writer::from_writer(sink(path)?);
    w.write_record(header.iter().map(AsRef::as_ref)).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

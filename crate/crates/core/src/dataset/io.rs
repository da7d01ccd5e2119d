//! Dataset files.
//!
//! Binary (`MSD1`), all integers little-endian:
//!
//! ```text
//! b"MSD1" | u32 N | u32 D | u8 has_labels | N*D f64 (row-major) | N i32 labels (if flagged)
//! ```
//!
//! CSV: comma separated, `.` decimal point, one row per line. A first line
//! that does not parse as numbers is taken as a header. With
//! [`CsvOptions::label_column`] the last column holds integer labels.
//! Values are written with 17 significant digits, which round-trips f64.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::Dataset;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MSD1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    /// `.bin`/`.msd` map to binary, everything else to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("msd") => Format::Binary,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "binary" | "bin" => Ok(Format::Binary),
            other => Err(Error::Format(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Treat the last column as integer class labels.
    pub label_column: bool,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("data")
        .to_string()
}

/// Loads a dataset. CSV files are read without a label column; use
/// [`load_csv`] to pick the label column.
pub fn load(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
    let path = path.as_ref();
    match format {
        Format::Binary => {
            let mut buf = Vec::new();
            File::open(path)?.read_to_end(&mut buf)?;
            Ok(decode_binary(&buf)?.with_name(stem(path)))
        }
        Format::Csv => load_csv(path, CsvOptions::default()),
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    Ok(parse_csv(reader, opts)?.with_name(stem(path)))
}

pub fn write(data: &Dataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        Format::Binary => out.write_all(&encode_binary(data))?,
        Format::Csv => write_csv(data, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn encode_binary(data: &Dataset) -> Vec<u8> {
    let labels = data.labels();
    let mut buf = Vec::with_capacity(13 + data.points().len() * 8 + data.n() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(data.n() as u32).to_le_bytes());
    buf.extend_from_slice(&(data.dim() as u32).to_le_bytes());
    buf.push(u8::from(labels.is_some()));
    for v in data.points() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(l) = labels {
        for v in l {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub(crate) fn decode_binary(buf: &[u8]) -> Result<Dataset> {
    if buf.len() < 13 || &buf[..4] != MAGIC {
        return Err(Error::Format("missing MSD1 magic".into()));
    }
    let n = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let has_labels = match buf[12] {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("bad label flag {other}"))),
    };
    let payload = n * dim * 8;
    let expected = 13 + payload + if has_labels { n * 4 } else { 0 };
    if buf.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for {n}x{dim}, found {}",
            buf.len()
        )));
    }
    let points = buf[13..13 + payload]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let labels = has_labels.then(|| {
        buf[13 + payload..]
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    });
    Dataset::new(n, dim, points, labels, "binary")
}

fn write_csv<W: Write>(data: &Dataset, out: &mut W) -> Result<()> {
    let header: Vec<String> = (0..data.dim()).map(|c| format!("x{c}")).collect();
    write!(out, "{}", header.join(","))?;
    if data.labels().is_some() {
        write!(out, ",label")?;
    }
    writeln!(out)?;
    for i in 0..data.n() {
        for (c, v) in data.row(i).iter().enumerate() {
            if c > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{v:.16e}")?;
        }
        if let Some(l) = data.labels() {
            write!(out, ",{}", l[i])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub(crate) fn parse_csv<R: BufRead>(reader: R, opts: CsvOptions) -> Result<Dataset> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if rows == 0 && width.is_none() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            // header row
            width = Some(fields.len());
            continue;
        }
        match width {
            Some(w) if w != fields.len() => {
                return Err(Error::Format(format!(
                    "line {}: {} fields, expected {w}",
                    lineno + 1,
                    fields.len()
                )))
            }
            _ => width = Some(fields.len()),
        }
        let ncoord = if opts.label_column {
            if fields.len() < 2 {
                return Err(Error::Format("label column needs at least 2 columns".into()));
            }
            let raw = fields[fields.len() - 1];
            let label = raw.parse::<i32>().map_err(|_| {
                Error::Format(format!("line {}: bad label '{raw}'", lineno + 1))
            })?;
            labels.push(label);
            fields.len() - 1
        } else {
            fields.len()
        };
        for (col, f) in fields[..ncoord].iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad number '{f}'", lineno + 1)))?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: rows, col });
            }
            points.push(v);
        }
        rows += 1;
    }
    let dim = width.map_or(0, |w| w - usize::from(opts.label_column));
    let labels = opts.label_column.then_some(labels);
    Dataset::new(rows, dim, points, labels, "csv")
}

/// Reads one integer per line (blank lines skipped), e.g. a label file.
pub fn read_int_column(path: impl AsRef<Path>) -> Result<Vec<i32>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<i32>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() && lineno == 0 => continue,
            Err(_) => return Err(Error::Format(format!("line {}: bad integer '{t}'", lineno + 1))),
        }
    }
    Ok(out)
}

//! Binary field records with a short text header.
//!
//! ```text
//! HYBRIDCAST-FIELD 1
//! endian le
//! n_lat 8
//! n_lon 16
//! variables z t
//! time_index 42
//! end
//! <n_vars × n_lat × n_lon little-endian f64, variable-major, lat-major>
//! ```
//!
//! A file may hold several records back to back (a trajectory).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &str = "HYBRIDCAST-FIELD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub variables: Vec<String>,
    pub n_lat: usize,
    pub n_lon: usize,
    pub time_index: u64,
    pub values: Vec<f64>,
}

impl FieldRecord {
    fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::Format("record has no variables".into()));
        }
        if let Some(v) = self
            .variables
            .iter()
            .find(|v| v.is_empty() || v.chars().any(char::is_whitespace))
        {
            return Err(Error::Format(format!(
                "variable name `{v}` is empty or contains whitespace"
            )));
        }
        let expected = self.variables.len() * self.n_lat * self.n_lon;
        if self.values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "field record payload",
                expected,
                found: self.values.len(),
            });
        }
        Ok(())
    }
}

pub fn write_record<W: Write>(out: &mut W, record: &FieldRecord) -> Result<()> {
    record.validate()?;
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "endian le")?;
    writeln!(out, "n_lat {}", record.n_lat)?;
    writeln!(out, "n_lon {}", record.n_lon)?;
    writeln!(out, "variables {}", record.variables.join(" "))?;
    writeln!(out, "time_index {}", record.time_index)?;
    writeln!(out, "end")?;
    for v in &record.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn header_line<R: BufRead>(input: &mut R) -> Result<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim_end_matches('\n').to_string()))
}

fn expect_key<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Format(format!("expected `{key} ...`, found `{line}`")))
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("bad {key} `{s}`")))
}

/// Read the next record, or `None` at a clean end of input.
pub fn read_record<R: BufRead>(input: &mut R) -> Result<Option<FieldRecord>> {
    let Some(first) = header_line(input)? else {
        return Ok(None);
    };
    let version = expect_key(&first, MAGIC)?;
    if version != VERSION.to_string() {
        return Err(Error::Format(format!(
            "unsupported field file version `{version}` (expected {VERSION})"
        )));
    }
    let mut next =
        || -> Result<String> { header_line(input)?.ok_or_else(|| Error::Format("header ended early".into())) };
    let endian = next()?;
    if expect_key(&endian, "endian")? != "le" {
        return Err(Error::Format(format!("unsupported byte order in `{endian}`")));
    }
    let n_lat: usize = parse_num(expect_key(&next()?, "n_lat")?, "n_lat")?;
    let n_lon: usize = parse_num(expect_key(&next()?, "n_lon")?, "n_lon")?;
    let variables: Vec<String> = expect_key(&next()?, "variables")?
        .split(' ')
        .map(str::to_string)
        .collect();
    let time_index: u64 = parse_num(expect_key(&next()?, "time_index")?, "time_index")?;
    let end = next()?;
    if end != "end" {
        return Err(Error::Format(format!("expected `end`, found `{end}`")));
    }
    let count = variables.len() * n_lat * n_lon;
    let mut bytes = Vec::with_capacity(count * 8);
    input.take((count * 8) as u64).read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Truncated {
            expected: count * 8,
            found: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of eight")))
        .collect();
    Ok(Some(FieldRecord {
        variables,
        n_lat,
        n_lon,
        time_index,
        values,
    }))
}

pub fn write_fields(path: &Path, records: &[FieldRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        write_record(&mut out, r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_fields(path: &Path) -> Result<Vec<FieldRecord>> {
    let mut input = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    while let Some(r) = read_record(&mut input)? {
        records.push(r);
    }
    Ok(records)
}

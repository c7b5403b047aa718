//! Adapters from public line dataset annotation files to [`RawAnnotation`].
//!
//! Two layouts are read: the Wireframe JSON records (`filename`, `width`,
//! `height`, `lines` as `[x1, y1, x2, y2]`), either one record or an array
//! of them, and York Urban style plain-text lists with one `x1 y1 x2 y2`
//! line segment per row (whitespace or comma separated). Fields outside
//! these are reported, not interpreted.

use serde_json::{Map, Value};

use crate::canon::RawAnnotation;
use crate::error::{Error, Result};
use crate::graph::Junction;

#[derive(Debug, Clone, PartialEq)]
pub struct Imported {
    pub name: Option<String>,
    pub annotation: RawAnnotation,
    /// Record fields the adapter did not recognise.
    pub unknown_fields: Vec<String>,
    /// Zero-length lines that were skipped.
    pub skipped: usize,
}

fn from_lines(width: u32, height: u32, lines: &[[f64; 4]]) -> Result<(RawAnnotation, usize)> {
    let mut a = RawAnnotation {
        width,
        height,
        junctions: Vec::with_capacity(lines.len() * 2),
        segments: Vec::with_capacity(lines.len()),
    };
    let mut skipped = 0;
    for &[x1, y1, x2, y2] in lines {
        if x1 == x2 && y1 == y2 {
            skipped += 1;
            continue;
        }
        let base = a.junctions.len();
        a.junctions.push(Junction::new(x1, y1));
        a.junctions.push(Junction::new(x2, y2));
        a.segments.push((base, base + 1));
    }
    a.validate()?;
    Ok((a, skipped))
}

fn dimension(record: &Map<String, Value>, key: &str, fallback: Option<u32>) -> Result<u32> {
    match record.get(key) {
        Some(v) => v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::invalid(format!("field {key} must be a positive integer, got {v}"))),
        None => fallback.ok_or_else(|| Error::invalid(format!("record has no {key} and none was given"))),
    }
}

fn wireframe_record(v: &Value, size: Option<(u32, u32)>) -> Result<Imported> {
    let record = v
        .as_object()
        .ok_or_else(|| Error::invalid("wireframe record must be a JSON object"))?;
    let width = dimension(record, "width", size.map(|s| s.0))?;
    let height = dimension(record, "height", size.map(|s| s.1))?;
    let raw_lines = record
        .get("lines")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::invalid("wireframe record has no lines array"))?;
    let mut lines = Vec::with_capacity(raw_lines.len());
    for (n, l) in raw_lines.iter().enumerate() {
        let coords: Option<Vec<f64>> = l.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect());
        match coords.as_deref() {
            Some(&[x1, y1, x2, y2]) => lines.push([x1, y1, x2, y2]),
            _ => return Err(Error::invalid(format!("line {n} is not [x1, y1, x2, y2]: {l}"))),
        }
    }
    let name = record.get("filename").and_then(Value::as_str).map(str::to_owned);
    let unknown_fields: Vec<String> = record
        .keys()
        .filter(|k| !matches!(k.as_str(), "filename" | "width" | "height" | "lines"))
        .cloned()
        .collect();
    if !unknown_fields.is_empty() {
        log::warn!(
            "{}: ignoring unrecognised fields {:?}",
            name.as_deref().unwrap_or("record"),
            unknown_fields
        );
    }
    let (annotation, skipped) = from_lines(width, height, &lines)?;
    Ok(Imported {
        name,
        annotation,
        unknown_fields,
        skipped,
    })
}

/// Reads a Wireframe JSON file. `size` supplies the frame for records
/// that do not carry one.
pub fn wireframe_json(text: &str, size: Option<(u32, u32)>) -> Result<Vec<Imported>> {
    let v: Value = serde_json::from_str(text)?;
    match &v {
        Value::Array(records) => records.iter().map(|r| wireframe_record(r, size)).collect(),
        _ => Ok(vec![wireframe_record(&v, size)?]),
    }
}

/// Reads a plain-text segment list. Blank lines and `#` comments are
/// skipped.
pub fn york_lines(text: &str, width: u32, height: u32) -> Result<Imported> {
    let mut lines = Vec::new();
    for (n, row) in text.lines().enumerate() {
        let row = row.split('#').next().unwrap_or("").trim();
        if row.is_empty() {
            continue;
        }
        let values: std::result::Result<Vec<f64>, _> = row
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse::<f64>)
            .collect();
        match values.as_deref() {
            Ok(&[x1, y1, x2, y2]) => lines.push([x1, y1, x2, y2]),
            _ => {
                return Err(Error::Json {
                    line: n + 1,
                    column: 1,
                    message: format!("expected four numbers, got {row:?}"),
                })
            }
        }
    }
    let (annotation, skipped) = from_lines(width, height, &lines)?;
    Ok(Imported {
        name: None,
        annotation,
        unknown_fields: Vec::new(),
        skipped,
    })
}

//! Plain-text field snapshots.
//!
//! ```text
//! # d=3 Nz=401 Z=12.5 sphere=s2:8x8 params={"lambda":1.0}
//! 1.2345678901234567e-1
//! ...
//! ```
//!
//! One value per line with 17 significant digits, row-major.

use std::io::{BufRead, Write};

use serde_json::Value;

use super::{Field, SphereGrid};
use crate::error::{CknError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub d: u32,
    pub nz: usize,
    pub half_length: f64,
    pub sphere: String,
    pub params: Value,
}

/// Formats `x` with 17 significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_snapshot<W: Write>(mut w: W, header: &SnapshotHeader, field: &Field) -> Result<()> {
    let params = serde_json::to_string(&header.params).map_err(|e| CknError::Io(e.to_string()))?;
    writeln!(
        w,
        "# d={} Nz={} Z={} sphere={} params={}",
        header.d,
        header.nz,
        crate::json::format_g17(header.half_length),
        header.sphere,
        params
    )?;
    for v in &field.values {
        writeln!(w, "{}", format_value(*v))?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<(SnapshotHeader, Field)> {
    let mut lines = r.lines();
    let head = lines
        .next()
        .ok_or_else(|| CknError::Parse("empty snapshot".into()))??;
    let head = head
        .strip_prefix("# ")
        .ok_or_else(|| CknError::Parse("snapshot header must start with `# `".into()))?;
    let (fields, params) = head
        .split_once(" params=")
        .ok_or_else(|| CknError::Parse("snapshot header lacks params".into()))?;
    let mut d = None;
    let mut nz = None;
    let mut half = None;
    let mut sphere = None;
    for tok in fields.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| CknError::Parse(format!("bad header token `{tok}`")))?;
        let perr = |_| CknError::Parse(format!("bad value in `{tok}`"));
        match k {
            "d" => d = Some(v.parse::<u32>().map_err(|e| perr(e.to_string()))?),
            "Nz" => nz = Some(v.parse::<usize>().map_err(|e| perr(e.to_string()))?),
            "Z" => half = Some(v.parse::<f64>().map_err(|e| perr(e.to_string()))?),
            "sphere" => sphere = Some(v.to_string()),
            _ => return Err(CknError::Parse(format!("unknown header key `{k}`"))),
        }
    }
    let missing = |k: &str| CknError::Parse(format!("snapshot header lacks `{k}`"));
    let header = SnapshotHeader {
        d: d.ok_or_else(|| missing("d"))?,
        nz: nz.ok_or_else(|| missing("Nz"))?,
        half_length: half.ok_or_else(|| missing("Z"))?,
        sphere: sphere.ok_or_else(|| missing("sphere"))?,
        params: serde_json::from_str(params).map_err(|e| CknError::Parse(e.to_string()))?,
    };
    let cols = SphereGrid::from_description(&header.sphere)?.len();
    let mut values = Vec::with_capacity(header.nz * cols);
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|_| CknError::Parse(format!("bad value `{line}`")))?,
        );
    }
    let field = Field::new(values, header.nz, cols)?;
    Ok((header, field))
}

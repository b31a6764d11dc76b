use std::fmt::Write;

use crate::geom::Cell;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub index: usize,
    pub length_m: f64,
    pub cells: Vec<Cell>,
}

pub fn write_paths(records: &[PathRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = write!(out, "{} {:?} ", r.index, r.length_m);
        for (i, c) in r.cells.iter().enumerate() {
            let _ = write!(out, "{}{},{}", if i > 0 { ";" } else { "" }, c.row, c.col);
        }
        out.push('\n');
    }
    out
}

pub fn parse_paths(text: &str) -> Result<Vec<PathRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: n, msg: msg.to_string() };
        let mut parts = line.split_whitespace();
        let index = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("expected path index"))?;
        let length_m: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("expected path length"))?;
        if !(length_m.is_finite() && length_m >= 0.0) {
            return Err(err("path length must be finite and non-negative"));
        }
        let list = parts.next().ok_or_else(|| err("expected cell list"))?;
        if parts.next().is_some() {
            return Err(err("trailing fields"));
        }
        let cells = list
            .split(';')
            .map(|pair| {
                let (r, c) = pair.split_once(',').ok_or_else(|| err("expected row,col"))?;
                Ok(Cell::new(r.parse().map_err(|_| err("bad row"))?, c.parse().map_err(|_| err("bad col"))?))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(PathRecord { index, length_m, cells });
    }
    Ok(out)
}

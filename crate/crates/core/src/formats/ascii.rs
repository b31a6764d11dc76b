use std::fmt::Write;

use crate::world::{Floorplan, Terrain};
use crate::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses the text floorplan format. Blank lines are ignored.
pub fn parse_floorplan(text: &str) -> Result<Floorplan> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))).filter(|(_, l)| !l.trim().is_empty());
    let (n, header) = lines.next().ok_or_else(|| parse_err(1, "empty floorplan"))?;
    let cell_size: f64 = header
        .strip_prefix("cell_size_m=")
        .ok_or_else(|| parse_err(n, "expected cell_size_m=<meters>"))?
        .trim()
        .parse()
        .map_err(|e| parse_err(n, format!("cell size: {e}")))?;
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(parse_err(n, "cell size must be positive"));
    }
    let mut origin = (0.0, 0.0);
    let mut cells = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (n, line) in lines {
        if let Some(rest) = line.strip_prefix("origin_m=") {
            if rows > 0 {
                return Err(parse_err(n, "origin must precede the grid"));
            }
            let (x, z) = rest.split_once(',').ok_or_else(|| parse_err(n, "expected origin_m=<x>,<z>"))?;
            let x: f64 = x.trim().parse().map_err(|e| parse_err(n, format!("origin x: {e}")))?;
            let z: f64 = z.trim().parse().map_err(|e| parse_err(n, format!("origin z: {e}")))?;
            if !(x.is_finite() && z.is_finite()) {
                return Err(parse_err(n, "origin must be finite"));
            }
            origin = (x, z);
            continue;
        }
        let width = line.chars().count();
        if *cols.get_or_insert(width) != width {
            return Err(parse_err(n, format!("row has {width} cells, expected {}", cols.unwrap_or(0))));
        }
        for ch in line.chars() {
            cells.push(match ch {
                '#' => Terrain::Occupied,
                '.' => Terrain::Free,
                other => return Err(parse_err(n, format!("unexpected character {other:?}"))),
            });
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(1, "floorplan has no rows"))?;
    Floorplan::new(rows, cols, cell_size, origin, cells)
}

pub fn write_floorplan(fp: &Floorplan) -> String {
    let mut out = String::with_capacity(fp.rows() * (fp.cols() + 1) + 64);
    let _ = writeln!(out, "cell_size_m={}", fp.cell_size());
    if fp.origin() != (0.0, 0.0) {
        let _ = writeln!(out, "origin_m={},{}", fp.origin().0, fp.origin().1);
    }
    for row in fp.cells().chunks(fp.cols()) {
        out.extend(row.iter().map(|t| if *t == Terrain::Free { '.' } else { '#' }));
        out.push('\n');
    }
    out
}

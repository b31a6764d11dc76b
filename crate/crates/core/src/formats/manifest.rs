use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One dataset pair: grid files relative to the manifest directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub input: String,
    pub target: String,
    pub floorplan: u64,
    pub episode: usize,
    pub waypoint: usize,
}

pub fn write_manifest<W: Write>(w: W, rows: &[ManifestRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a manifest. File names must be plain relative names without
/// parent-directory components.
pub fn read_manifest<R: Read>(r: R) -> Result<Vec<ManifestRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let row: ManifestRow = rec?;
        for name in [&row.input, &row.target] {
            if name.is_empty() || name.starts_with('/') || name.split(['/', '\\']).any(|p| p == "..") {
                return Err(Error::Format(format!("unsafe file name {name:?} in manifest")));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

use crate::mapping::{CellClass, GlobalMap, ProbGrid};
use crate::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"OCGR";
pub const LABEL_MAGIC: &[u8; 4] = b"OCLB";
const VERSION: u32 = 1;
const GRID_HEADER: usize = 4 + 4 + 4 + 4 + 8 * 3;
const LABEL_HEADER: usize = 4 + 4 + 4 + 4;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| Error::Format("truncated input".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn header(r: &mut Reader, magic: &[u8; 4]) -> Result<(usize, usize)> {
    if r.take(4)? != magic {
        return Err(Error::Format("bad magic".into()));
    }
    let v = r.u32()?;
    if v != VERSION {
        return Err(Error::Format(format!("unsupported version {v}")));
    }
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    Ok((rows, cols))
}

fn body_len(rows: usize, cols: usize, per_cell: usize) -> Result<usize> {
    rows.checked_mul(cols).and_then(|n| n.checked_mul(per_cell)).ok_or_else(|| Error::Format("grid too large".into()))
}

pub fn encode_grid(map: &GlobalMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(GRID_HEADER + map.h() * map.w() * 12);
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(map.h() as u32).to_le_bytes());
    out.extend_from_slice(&(map.w() as u32).to_le_bytes());
    for v in [map.cell_size, map.origin.0, map.origin.1] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for d in map.probs.cells() {
        for v in d {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

/// Decodes a probability grid. The payload length is checked against the
/// header before anything is allocated, and every cell must be a finite,
/// non-negative distribution summing to one.
pub fn decode_grid(bytes: &[u8]) -> Result<GlobalMap> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (rows, cols) = header(&mut r, GRID_MAGIC)?;
    let cell_size = r.f64()?;
    let origin = (r.f64()?, r.f64()?);
    if !(cell_size.is_finite() && cell_size > 0.0 && origin.0.is_finite() && origin.1.is_finite()) {
        return Err(Error::Format("invalid grid geometry".into()));
    }
    let len = body_len(rows, cols, 12)?;
    if bytes.len() - r.pos != len {
        return Err(Error::Format(format!("expected {len} payload bytes, found {}", bytes.len() - r.pos)));
    }
    let mut cells = Vec::with_capacity(rows * cols);
    for chunk in r.take(len)?.chunks_exact(12) {
        let mut d = [0.0; 3];
        for (k, v) in d.iter_mut().enumerate() {
            *v = f64::from(f32::from_le_bytes(chunk[4 * k..4 * k + 4].try_into().expect("4 bytes")));
        }
        if d.iter().any(|v| !v.is_finite() || *v < 0.0) || (d.iter().sum::<f64>() - 1.0).abs() > 1e-4 {
            return Err(Error::Format(format!("cell {} is not a distribution", cells.len())));
        }
        cells.push(d);
    }
    Ok(GlobalMap { probs: ProbGrid::from_cells(rows, cols, cells)?, cell_size, origin })
}

pub fn encode_labels(rows: usize, cols: usize, labels: &[CellClass]) -> Result<Vec<u8>> {
    if labels.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!("{} labels for a {rows}x{cols} grid", labels.len())));
    }
    let mut out = Vec::with_capacity(LABEL_HEADER + labels.len());
    out.extend_from_slice(LABEL_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out.extend(labels.iter().map(|c| c.index() as u8));
    Ok(out)
}

pub fn decode_labels(bytes: &[u8]) -> Result<(usize, usize, Vec<CellClass>)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let (rows, cols) = header(&mut r, LABEL_MAGIC)?;
    let len = body_len(rows, cols, 1)?;
    if bytes.len() - r.pos != len {
        return Err(Error::Format(format!("expected {len} label bytes, found {}", bytes.len() - r.pos)));
    }
    let labels = r
        .take(len)?
        .iter()
        .map(|&b| CellClass::from_index(usize::from(b)).ok_or_else(|| Error::Format(format!("invalid label byte {b}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, cols, labels))
}

//! On-disk formats.
//!
//! | kind | layout |
//! |------|--------|
//! | floorplan | text: `cell_size_m=<f>`, optional `origin_m=<x>,<z>`, then one line per row of `#` (occupied) and `.` (free) |
//! | prob grid | binary: `OCGR`, u32 version, u32 rows, u32 cols, f64 cell size, f64 origin x, f64 origin z, then rows·cols·3 f32; all little-endian |
//! | labels | binary: `OCLB`, u32 version, u32 rows, u32 cols, then one byte per cell (0 unknown, 1 occupied, 2 free) |
//! | weights | text: `occnav-weights v1`, `init_seed <u64>`, `features <n>`, then one line per class: name and n weights |
//! | manifest | CSV with header `input,target,floorplan,episode,waypoint` |
//! | paths | text: one line per path, `<index> <length_m> r,c;r,c;...` |

mod ascii;
mod binary;
mod manifest;
mod paths;
mod render;
mod weights;

pub use ascii::{parse_floorplan, write_floorplan};
pub use binary::{decode_grid, decode_labels, encode_grid, encode_labels, GRID_MAGIC, LABEL_MAGIC};
pub use manifest::{read_manifest, write_manifest, ManifestRow};
pub use paths::{parse_paths, write_paths, PathRecord};
pub use render::{render_svg, write_pgm, SvgScene};
pub use weights::{parse_weights, write_weights, WEIGHTS_HEADER};

use std::fmt::Write;

use crate::world::Floorplan;

/// Plain (P2) PGM of `values` scaled from `[0, max]` to `[0, 255]`. NaN and
/// negative values render black.
pub fn write_pgm(rows: usize, cols: usize, values: &[f64], max: f64) -> String {
    let mut out = format!("P2\n{cols} {rows}\n255\n");
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    for row in values.chunks(cols.max(1)).take(rows) {
        let line: Vec<String> = row.iter().map(|v| ((v.max(0.0) * scale).round().min(255.0) as u8).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Everything drawn on a trajectory render, in world meters.
#[derive(Debug, Clone, Default)]
pub struct SvgScene {
    pub trajectory: Vec<(f64, f64)>,
    pub paths: Vec<Vec<(f64, f64)>>,
    pub selected: Option<usize>,
    pub short_term_goals: Vec<(f64, f64)>,
    pub goal: Option<(f64, f64)>,
}

const PX_PER_CELL: f64 = 4.0;

fn polyline(out: &mut String, fp: &Floorplan, pts: &[(f64, f64)], style: &str) {
    let to_px = |(x, z): (f64, f64)| ((x - fp.origin().0) / fp.cell_size() * PX_PER_CELL, (z - fp.origin().1) / fp.cell_size() * PX_PER_CELL);
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = to_px(*p);
            format!("{x:.1},{y:.1}")
        })
        .collect();
    let _ = writeln!(out, r#"<polyline points="{}" {style}/>"#, coords.join(" "));
}

fn dot(out: &mut String, fp: &Floorplan, p: (f64, f64), r: f64, fill: &str) {
    let x = (p.0 - fp.origin().0) / fp.cell_size() * PX_PER_CELL;
    let y = (p.1 - fp.origin().1) / fp.cell_size() * PX_PER_CELL;
    let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="{r}" fill="{fill}"/>"#);
}

/// Top-down SVG: walls, candidate paths (selected one highlighted), the
/// trajectory, short-term goals and the final goal.
pub fn render_svg(fp: &Floorplan, scene: &SvgScene) -> String {
    let (w, h) = (fp.cols() as f64 * PX_PER_CELL, fp.rows() as f64 * PX_PER_CELL);
    let mut out = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    out.push('\n');
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    // one rect per horizontal run of wall cells
    for (r, row) in fp.cells().chunks(fp.cols()).enumerate() {
        let mut c = 0;
        while c < row.len() {
            if row[c] == crate::world::Terrain::Occupied {
                let start = c;
                while c < row.len() && row[c] == crate::world::Terrain::Occupied {
                    c += 1;
                }
                let _ = writeln!(
                    out,
                    r##"<rect x="{}" y="{}" width="{}" height="{PX_PER_CELL}" fill="#333"/>"##,
                    start as f64 * PX_PER_CELL,
                    r as f64 * PX_PER_CELL,
                    (c - start) as f64 * PX_PER_CELL
                );
            } else {
                c += 1;
            }
        }
    }
    for (i, p) in scene.paths.iter().enumerate() {
        if Some(i) != scene.selected {
            polyline(&mut out, fp, p, r##"fill="none" stroke="#9ab" stroke-width="1""##);
        }
    }
    if let Some(p) = scene.selected.and_then(|i| scene.paths.get(i)) {
        polyline(&mut out, fp, p, r##"fill="none" stroke="#0a0" stroke-width="2.5""##);
    }
    if !scene.trajectory.is_empty() {
        polyline(&mut out, fp, &scene.trajectory, r##"fill="none" stroke="#06c" stroke-width="1.5""##);
        dot(&mut out, fp, scene.trajectory[0], 4.0, "#06c");
    }
    for &p in &scene.short_term_goals {
        dot(&mut out, fp, p, 2.5, "#d00");
    }
    if let Some(g) = scene.goal {
        dot(&mut out, fp, g, 5.0, "#fa0");
    }
    out.push_str("</svg>\n");
    out
}

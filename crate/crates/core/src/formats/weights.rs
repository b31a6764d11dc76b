use std::fmt::Write;

use crate::mapping::CellClass;
use crate::predictor::{PredictorParams, N_CLASSES, N_FEATURES};
use crate::{Error, Result};

pub const WEIGHTS_HEADER: &str = "occnav-weights v1";

fn class_name(c: CellClass) -> &'static str {
    match c {
        CellClass::Unknown => "unknown",
        CellClass::Occupied => "occupied",
        CellClass::Free => "free",
    }
}

/// Text weights file. Values use Rust's shortest round-trip formatting, so
/// parsing the output reproduces the weights exactly.
pub fn write_weights(p: &PredictorParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{WEIGHTS_HEADER}");
    let _ = writeln!(out, "init_seed {}", p.init_seed);
    let _ = writeln!(out, "features {N_FEATURES}");
    for c in CellClass::ALL {
        let _ = write!(out, "{}", class_name(c));
        for w in &p.weights[c.index()] {
            let _ = write!(out, " {w:?}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_weights(text: &str) -> Result<PredictorParams> {
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| lines.next().ok_or_else(|| err(0, format!("missing {what}")));
    let (n, header) = next("header")?;
    if header != WEIGHTS_HEADER {
        return Err(err(n, format!("expected header {WEIGHTS_HEADER:?}")));
    }
    let (n, seed) = next("init_seed")?;
    let init_seed = seed.strip_prefix("init_seed ").and_then(|s| s.trim().parse().ok()).ok_or_else(|| err(n, "expected init_seed <u64>".into()))?;
    let (n, feats) = next("features")?;
    let count: usize = feats.strip_prefix("features ").and_then(|s| s.trim().parse().ok()).ok_or_else(|| err(n, "expected features <n>".into()))?;
    if count != N_FEATURES {
        return Err(err(n, format!("expected {N_FEATURES} features, found {count}")));
    }
    let mut weights = [[0.0; N_FEATURES]; N_CLASSES];
    for c in CellClass::ALL {
        let (n, line) = next(class_name(c))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(class_name(c)) {
            return Err(err(n, format!("expected weights for {}", class_name(c))));
        }
        let vals: Vec<f64> = parts.map(|s| s.parse::<f64>().map_err(|e| err(n, format!("weight {s:?}: {e}")))).collect::<Result<_>>()?;
        if vals.len() != N_FEATURES || vals.iter().any(|v| !v.is_finite()) {
            return Err(err(n, format!("expected {N_FEATURES} finite weights")));
        }
        weights[c.index()].copy_from_slice(&vals);
    }
    if let Some((n, _)) = lines.next() {
        return Err(err(n, "trailing content".into()));
    }
    Ok(PredictorParams { weights, init_seed })
}

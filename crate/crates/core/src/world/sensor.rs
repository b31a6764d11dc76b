//! Planar raycast range sensor standing in for a forward depth camera.

use serde::{Deserialize, Serialize};

use super::floorplan::Floorplan;
use super::AgentPose;
use crate::geom::sin_cos_deg;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub n_rays: usize,
    pub max_range_m: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { fov_deg: 90.0, n_rays: 128, max_range_m: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    /// Relative to the heading, clockwise positive.
    pub bearing_deg: f64,
    pub range_m: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeScan {
    pub rays: Vec<Ray>,
    pub fov_deg: f64,
    pub max_range_m: f64,
}

/// Casts `n_rays` evenly spaced rays across the field of view. For a full
/// 360° sweep the last bearing stops one step short of wrapping onto the first.
pub fn sense(fp: &Floorplan, pose: &AgentPose, cfg: &SensorConfig) -> Result<RangeScan> {
    if cfg.n_rays < 2 || !(cfg.fov_deg > 0.0 && cfg.fov_deg <= 360.0) || !(cfg.max_range_m > 0.0) {
        return Err(Error::InvalidParam(format!("sensor config {cfg:?}")));
    }
    if !fp.is_free_at(pose.x_m, pose.z_m) {
        return Err(Error::NotFree { x: pose.x_m, z: pose.z_m });
    }
    let full = cfg.fov_deg >= 360.0;
    let spacing = if full { 360.0 / cfg.n_rays as f64 } else { cfg.fov_deg / (cfg.n_rays - 1) as f64 };
    let rays = (0..cfg.n_rays)
        .map(|i| {
            let bearing_deg = -cfg.fov_deg / 2.0 + i as f64 * spacing;
            let (range_m, hit) = cast_ray(fp, pose.x_m, pose.z_m, pose.heading_deg + bearing_deg, cfg.max_range_m);
            Ray { bearing_deg, range_m, hit }
        })
        .collect();
    Ok(RangeScan { rays, fov_deg: cfg.fov_deg, max_range_m: cfg.max_range_m })
}

/// Grid traversal (Amanatides–Woo) to the boundary of the first occupied
/// cell. Returns `(max_range, false)` when nothing is hit in range.
pub(crate) fn cast_ray(fp: &Floorplan, x: f64, z: f64, angle_deg: f64, max_range: f64) -> (f64, bool) {
    let r = fp.cell_size();
    let (ox, oz) = fp.origin();
    let (dz, dx) = sin_cos_deg(angle_deg);
    let gx = (x - ox) / r;
    let gz = (z - oz) / r;
    let mut col = gx.floor() as i64;
    let mut row = gz.floor() as i64;
    let step_c: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_r: i64 = if dz > 0.0 { 1 } else { -1 };
    let t_delta_c = if dx != 0.0 { (1.0 / dx).abs() } else { f64::INFINITY };
    let t_delta_r = if dz != 0.0 { (1.0 / dz).abs() } else { f64::INFINITY };
    let mut t_max_c = if dx > 0.0 {
        ((col + 1) as f64 - gx) / dx
    } else if dx < 0.0 {
        (gx - col as f64) / -dx
    } else {
        f64::INFINITY
    };
    let mut t_max_r = if dz > 0.0 {
        ((row + 1) as f64 - gz) / dz
    } else if dz < 0.0 {
        (gz - row as f64) / -dz
    } else {
        f64::INFINITY
    };
    let max_t = max_range / r;
    loop {
        let t_entry;
        if t_max_c < t_max_r {
            t_entry = t_max_c;
            col += step_c;
            t_max_c += t_delta_c;
        } else {
            t_entry = t_max_r;
            row += step_r;
            t_max_r += t_delta_r;
        }
        if t_entry > max_t {
            return (max_range, false);
        }
        let free = row >= 0 && col >= 0 && row < fp.rows() as i64 && col < fp.cols() as i64 && fp.is_free(crate::Cell::new(row as i32, col as i32));
        if !free {
            return (t_entry * r, true);
        }
    }
}

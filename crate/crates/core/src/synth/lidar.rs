use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::SceneSpec;
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, RigidTransform};
use crate::grid::DepthMap;
use crate::kitti::LidarScan;

/// Allowed absolute gap between requested and achieved density.
pub const DENSITY_TOLERANCE: f64 = 0.01;

const MAX_REFINEMENTS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarPattern {
    /// Target fraction of nonzero pixels.
    pub density: f64,
    /// Number of equally spaced scanline bands.
    pub beam_rows: usize,
}

impl Default for LidarPattern {
    fn default() -> Self {
        LidarPattern {
            density: 0.06,
            beam_rows: 64,
        }
    }
}

/// Keeps pixels of `dense` on `beam_rows` equally spaced rows, shifted
/// together by a random sub-band offset. Each band gets a random phase and
/// every point a random column jitter within its stratum. The per-band
/// point count is refined until the nonzero fraction is within
/// [`DENSITY_TOLERANCE`] of `density_target`.
pub fn sample_lidar_pattern(
    dense: &DepthMap,
    density_target: f64,
    beam_rows: usize,
    seed: u64,
) -> Result<DepthMap> {
    if !(density_target > 0.0 && density_target <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density {density_target} must be in (0, 1]"
        )));
    }
    if (dense.density() - density_target).abs() <= DENSITY_TOLERANCE {
        return Ok(dense.clone());
    }
    let (w, h) = dense.dims();
    if beam_rows == 0 || beam_rows > h {
        return Err(Error::InvalidArgument(format!(
            "{beam_rows} beam rows do not fit a {h}-row image"
        )));
    }
    let total = (w * h) as f64;
    let mut per_band = density_target * total / beam_rows as f64;
    for _ in 0..MAX_REFINEMENTS {
        let n = (per_band.round() as usize).clamp(1, w);
        let out = sample_bands(dense, beam_rows, n, seed);
        let achieved = out.density();
        if (achieved - density_target).abs() <= DENSITY_TOLERANCE {
            return Ok(out);
        }
        if achieved < density_target && n == w {
            break;
        }
        if achieved > density_target && n == 1 {
            break;
        }
        per_band = (per_band * density_target / achieved.max(1.0 / total)).max(1.0);
    }
    Err(Error::InvalidArgument(format!(
        "density {density_target} is unreachable with {beam_rows} beam rows on this map"
    )))
}

fn sample_bands(dense: &DepthMap, beam_rows: usize, per_band: usize, seed: u64) -> DepthMap {
    let (w, h) = dense.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DepthMap::zeros(w, h);
    let spacing = w as f64 / per_band as f64;
    let offset: f64 = rng.gen();
    for b in 0..beam_rows {
        let row = (((b as f64 + offset) * h as f64 / beam_rows as f64) as usize).min(h - 1);
        let phase: f64 = rng.gen();
        for k in 0..per_band {
            let jitter: f64 = rng.gen();
            let col = (((k as f64 + 0.5 * (phase + jitter)) * spacing) as usize).min(w - 1);
            let d = *dense.get(col, row);
            if d > 0.0 {
                out.set(col, row, d).expect("copied from a valid map");
            }
        }
    }
    out
}

/// Rotating multi-beam lidar.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamModel {
    /// Beam elevations, degrees above the horizontal.
    pub elevations_deg: Vec<f64>,
    /// Firings per revolution.
    pub azimuth_steps: usize,
    /// Returns farther than this are discarded, meters.
    pub max_range: f64,
}

impl BeamModel {
    /// 64 beams from +2° to −24.33° (1/3° spacing in the upper block,
    /// 1/2° in the lower), 2000 firings per turn.
    pub fn hdl64e() -> Self {
        let upper = (0..32).map(|i| 2.0 - i as f64 / 3.0);
        let lower = (0..32).map(|i| -8.83 - 0.5 * i as f64);
        BeamModel {
            elevations_deg: upper.chain(lower).collect(),
            azimuth_steps: 2000,
            max_range: 120.0,
        }
    }
}

/// Simulated sweep of `scene` by a lidar (x forward, y left, z up) placed at
/// `world_from_lidar`. Points are returned in the lidar frame.
pub fn simulate_scan(scene: &SceneSpec, world_from_lidar: &RigidTransform, model: &BeamModel) -> LidarScan {
    let origin = *world_from_lidar.translation();
    let rot = world_from_lidar.rotation();
    let steps = model.azimuth_steps;
    let points: Vec<Vector3<f64>> = model
        .elevations_deg
        .par_iter()
        .flat_map_iter(|elev| {
            let (se, ce) = elev.to_radians().sin_cos();
            (0..steps).filter_map(move |a| {
                let az = std::f64::consts::TAU * a as f64 / steps as f64;
                let dir = Vector3::new(ce * az.cos(), ce * az.sin(), se);
                let hit = scene.cast(&origin, &(rot * dir))?;
                (hit.t <= model.max_range).then(|| dir * hit.t)
            })
        })
        .collect();
    let reflectance = vec![0.0; points.len()];
    LidarScan {
        cloud: PointCloud { points },
        reflectance,
    }
}

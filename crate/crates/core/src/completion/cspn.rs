use rayon::prelude::*;

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid, Intensity};

const NEIGHBORHOOD: [(isize, isize); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Normalized 3×3 affinities per pixel; out-of-image neighbors get 0.
fn affinities(guide: &Intensity, bandwidth: f64) -> Vec<[f64; 9]> {
    let (w, h) = guide.dims();
    let g = guide.as_slice();
    let inv_bw2 = 1.0 / (bandwidth * bandwidth);
    (0..w * h)
        .into_par_iter()
        .map(|p| {
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            let mut a = [0.0; 9];
            let mut sum = 0.0;
            for (k, (dx, dy)) in NEIGHBORHOOD.iter().enumerate() {
                let (qx, qy) = (x + dx, y + dy);
                if qx < 0 || qy < 0 || qx >= w as isize || qy >= h as isize {
                    continue;
                }
                let diff = g[p] - g[qy as usize * w + qx as usize];
                a[k] = (-diff * diff * inv_bw2).exp();
                sum += a[k];
            }
            for v in &mut a {
                *v /= sum;
            }
            a
        })
        .collect()
}

/// Affinity propagation: pixels with a positive anchor start at, and stay
/// at, that anchor. Every iteration replaces each other pixel by the
/// affinity-weighted mean of its 3×3 neighborhood. Affinities fall off with the squared
/// guide difference over `bandwidth²`.
pub fn cspn_refine(
    coarse: &DepthMap,
    guide: &Intensity,
    anchors: &DepthMap,
    cfg: &PipelineConfig,
) -> Result<DepthMap> {
    Error::check_dims(coarse.dims(), guide.dims())?;
    Error::check_dims(coarse.dims(), anchors.dims())?;
    let (w, h) = coarse.dims();
    let anchor = anchors.as_slice();
    let mut cur: Vec<f64> = coarse
        .as_slice()
        .iter()
        .zip(anchor)
        .map(|(&c, &a)| if a > 0.0 { a } else { c })
        .collect();
    if cfg.iterations == 0 {
        return Ok(DepthMap::from_grid_unchecked(Grid::from_vec(w, h, cur)?));
    }
    let aff = affinities(guide, cfg.bandwidth);
    let mut next = vec![0.0; w * h];
    for _ in 0..cfg.iterations {
        next.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                let p = y * w + x;
                if anchor[p] > 0.0 {
                    *out = anchor[p];
                    continue;
                }
                let centre = cur[p];
                let (mut acc, mut lo, mut hi) = (0.0, centre, centre);
                for (k, (dx, dy)) in NEIGHBORHOOD.iter().enumerate() {
                    let a = aff[p][k];
                    if a == 0.0 {
                        continue;
                    }
                    let q = (y as isize + dy) as usize * w + (x as isize + dx) as usize;
                    let v = cur[q];
                    acc += a * (v - centre);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                // rounding must not leave the neighborhood's range
                *out = (centre + acc).clamp(lo, hi);
            }
        });
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(DepthMap::from_grid_unchecked(Grid::from_vec(w, h, cur)?))
}

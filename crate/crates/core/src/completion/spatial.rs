use rayon::prelude::*;

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid};

/// Fills every empty pixel of `seed` by inverse-square-distance
/// interpolation of the valid pixels within `fill_radius`, each donor also
/// scaled by its weight. Pixels with no donor in reach take the value of
/// the same pixel in a half-resolution copy completed the same way, so the
/// reach doubles at every level until a donor is found.
pub fn spatial_complete(seed: &DepthMap, weights: &Grid<f64>, cfg: &PipelineConfig) -> Result<DepthMap> {
    Error::check_dims(seed.dims(), weights.dims())?;
    if seed.valid_count() == 0 {
        return Err(Error::EmptySeed);
    }
    if cfg.fill_radius < 1 {
        return Err(Error::InvalidArgument("fill_radius must be at least 1".into()));
    }
    let (w, h) = seed.dims();
    let wts: Vec<f64> = seed
        .as_slice()
        .iter()
        .zip(weights.as_slice())
        .map(|(&d, &c)| if d > 0.0 { c.max(f64::MIN_POSITIVE) } else { 0.0 })
        .collect();
    let kernel = disk(cfg.fill_radius);
    let dense = complete_level(seed.as_slice(), &wts, w, h, &kernel);
    Ok(DepthMap::from_grid_unchecked(Grid::from_vec(w, h, dense)?))
}

/// Offsets within `r` and their inverse squared distances.
fn disk(r: usize) -> Vec<(isize, isize, f64)> {
    let r = r as isize;
    let mut k = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = dx * dx + dy * dy;
            if d2 > 0 && d2 <= r * r {
                k.push((dx, dy, 1.0 / d2 as f64));
            }
        }
    }
    k
}

fn complete_level(depth: &[f64], wts: &[f64], w: usize, h: usize, kernel: &[(isize, isize, f64)]) -> Vec<f64> {
    let mut out = depth.to_vec();
    let unreached: Vec<usize> = out
        .par_chunks_mut(w)
        .enumerate()
        .flat_map_iter(|(y, row)| {
            let mut miss = Vec::new();
            for (x, v) in row.iter_mut().enumerate() {
                if *v > 0.0 {
                    continue;
                }
                // offsets from the first donor keep a lone donor value exact
                let (mut base, mut num, mut den) = (0.0, 0.0, 0.0);
                for &(dx, dy, inv) in kernel {
                    let (qx, qy) = (x as isize + dx, y as isize + dy);
                    if qx < 0 || qy < 0 || qx >= w as isize || qy >= h as isize {
                        continue;
                    }
                    let q = qy as usize * w + qx as usize;
                    let c = wts[q];
                    if c > 0.0 {
                        if den == 0.0 {
                            base = depth[q];
                        }
                        num += c * inv * (depth[q] - base);
                        den += c * inv;
                    }
                }
                if den > 0.0 {
                    *v = base + num / den;
                } else {
                    miss.push(y * w + x);
                }
            }
            miss
        })
        .collect();
    if unreached.is_empty() {
        return out;
    }
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let mut base = vec![0.0; cw * ch];
    let mut cd = vec![0.0; cw * ch];
    let mut cwts = vec![0.0; cw * ch];
    for y in 0..h {
        for x in 0..w {
            let c = wts[y * w + x];
            if c > 0.0 {
                let j = (y / 2) * cw + x / 2;
                if cwts[j] == 0.0 {
                    base[j] = depth[y * w + x];
                }
                cd[j] += c * (depth[y * w + x] - base[j]);
                cwts[j] += c;
            }
        }
    }
    for ((d, c), b) in cd.iter_mut().zip(&cwts).zip(&base) {
        if *c > 0.0 {
            *d = b + *d / c;
        }
    }
    let coarse = complete_level(&cd, &cwts, cw, ch, kernel);
    for i in unreached {
        let (x, y) = (i % w, i / w);
        out[i] = coarse[(y / 2) * cw + x / 2];
    }
    out
}

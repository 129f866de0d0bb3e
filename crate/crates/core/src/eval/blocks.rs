use std::path::Path;

use serde::Serialize;

use super::turbo::turbo_colormap;
use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid};
use crate::kitti::write_rgb_png;

/// Per-block difference of mean absolute errors, in millimeters. `None`
/// marks blocks without valid ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDiffMap {
    pub block: usize,
    pub image_width: usize,
    pub image_height: usize,
    pub values: Grid<Option<f64>>,
}

fn block_dims(w: usize, h: usize, block: usize) -> (usize, usize) {
    (w.div_ceil(block), h.div_ceil(block))
}

/// Mean absolute error of `a` minus that of `b` in every `block`×`block`
/// tile, counted over pixels with valid ground truth.
pub fn block_error_diff(a: &DepthMap, b: &DepthMap, gt: &DepthMap, block: usize) -> Result<BlockDiffMap> {
    if block == 0 {
        return Err(Error::InvalidArgument("block size must be at least 1".into()));
    }
    Error::check_dims(gt.dims(), a.dims())?;
    Error::check_dims(gt.dims(), b.dims())?;
    let (w, h) = gt.dims();
    let (bw, bh) = block_dims(w, h, block);
    let mut sum_a = vec![0.0; bw * bh];
    let mut sum_b = vec![0.0; bw * bh];
    let mut count = vec![0usize; bw * bh];
    for y in 0..h {
        for x in 0..w {
            let g = *gt.get(x, y);
            if g <= 0.0 {
                continue;
            }
            let i = (y / block) * bw + x / block;
            sum_a[i] += (a.get(x, y) - g).abs();
            sum_b[i] += (b.get(x, y) - g).abs();
            count[i] += 1;
        }
    }
    let values = (0..bw * bh)
        .map(|i| {
            (count[i] > 0).then(|| {
                let n = count[i] as f64;
                1000.0 * (sum_a[i] / n) - 1000.0 * (sum_b[i] / n)
            })
        })
        .collect();
    Ok(BlockDiffMap {
        block,
        image_width: w,
        image_height: h,
        values: Grid::from_vec(bw, bh, values)?,
    })
}

/// Averages block maps over frames, each block over the frames where it
/// is nonempty.
#[derive(Debug, Clone)]
pub struct BlockDiffAccumulator {
    block: usize,
    image_width: usize,
    image_height: usize,
    sum: Vec<f64>,
    frames: Vec<usize>,
}

impl BlockDiffAccumulator {
    pub fn new(image_width: usize, image_height: usize, block: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::InvalidArgument("block size must be at least 1".into()));
        }
        let (bw, bh) = block_dims(image_width, image_height, block);
        Ok(BlockDiffAccumulator {
            block,
            image_width,
            image_height,
            sum: vec![0.0; bw * bh],
            frames: vec![0; bw * bh],
        })
    }

    pub fn add(&mut self, map: &BlockDiffMap) -> Result<()> {
        if map.block != self.block {
            return Err(Error::InvalidArgument(format!(
                "block size {} does not match {}",
                map.block, self.block
            )));
        }
        Error::check_dims(
            (self.image_width, self.image_height),
            (map.image_width, map.image_height),
        )?;
        for (i, v) in map.values.as_slice().iter().enumerate() {
            if let Some(v) = v {
                self.sum[i] += v;
                self.frames[i] += 1;
            }
        }
        Ok(())
    }

    pub fn finish(&self) -> BlockDiffMap {
        let (bw, bh) = block_dims(self.image_width, self.image_height, self.block);
        let values = self
            .sum
            .iter()
            .zip(&self.frames)
            .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
            .collect();
        BlockDiffMap {
            block: self.block,
            image_width: self.image_width,
            image_height: self.image_height,
            values: Grid::from_vec(bw, bh, values).expect("sized from the same dims"),
        }
    }
}

impl BlockDiffMap {
    /// Largest absolute block value, 0 for an all-empty map.
    pub fn max_abs(&self) -> f64 {
        self.values.as_slice().iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Full-resolution RGB image. Values map linearly onto the colormap with
    /// 0 at its center and ±`range` at its ends; empty blocks are black.
    /// A `range` of `None` uses [`max_abs`](Self::max_abs).
    pub fn render(&self, range: Option<f64>) -> Grid<[u8; 3]> {
        let range = range.unwrap_or_else(|| self.max_abs());
        Grid::from_fn(self.image_width, self.image_height, |x, y| {
            match self.values.get(x / self.block, y / self.block) {
                None => [0, 0, 0],
                Some(v) => {
                    let t = if range > 0.0 { 0.5 + 0.5 * v / range } else { 0.5 };
                    turbo_colormap(t)
                }
            }
        })
    }

    pub fn write_png(&self, path: impl AsRef<Path>, range: Option<f64>) -> Result<()> {
        let img = self.render(range);
        let bytes: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
        write_rgb_png(path, img.width(), img.height(), &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_predictions_give_zero() {
        let gt = DepthMap::from_fn(20, 10, |x, _| 1.0 + x as f64).unwrap();
        let p = DepthMap::from_fn(20, 10, |_, y| 2.0 + y as f64).unwrap();
        let d = block_error_diff(&p, &p, &gt, 8).unwrap();
        assert_eq!(d.values.dims(), (3, 2));
        assert!(d.values.as_slice().iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn perfect_versus_one_meter_off() {
        let gt = DepthMap::from_fn(16, 16, |x, y| if (x + y) % 3 == 0 { 5.0 } else { 0.0 }).unwrap();
        let off = DepthMap::from_fn(16, 16, |x, y| *gt.get(x, y) + 1.0).unwrap();
        let d = block_error_diff(&gt, &off, &gt, 8).unwrap();
        for v in d.values.as_slice() {
            assert!((v.unwrap() + 1000.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_blocks_are_excluded_from_averages() {
        let mut gt = DepthMap::zeros(16, 8);
        gt.set(0, 0, 4.0).unwrap();
        let a = DepthMap::from_fn(16, 8, |_, _| 5.0).unwrap();
        let b = DepthMap::from_fn(16, 8, |_, _| 4.0).unwrap();
        let d = block_error_diff(&a, &b, &gt, 8).unwrap();
        assert_eq!(d.values.as_slice(), &[Some(1000.0), None]);

        let mut acc = BlockDiffAccumulator::new(16, 8, 8).unwrap();
        acc.add(&d).unwrap();
        let full = DepthMap::from_fn(16, 8, |_, _| 4.0).unwrap();
        acc.add(&block_error_diff(&a, &b, &full, 8).unwrap()).unwrap();
        let mean = acc.finish();
        assert_eq!(mean.values.as_slice(), &[Some(1000.0), Some(1000.0)]);
    }

    #[test]
    fn render_of_zero_map_is_mid_colormap() {
        let gt = DepthMap::from_fn(9, 9, |_, _| 3.0).unwrap();
        let img = block_error_diff(&gt, &gt, &gt, 4).unwrap().render(None);
        assert_eq!(img.dims(), (9, 9));
        let mid = turbo_colormap(0.5);
        assert!(img.as_slice().iter().all(|c| *c == mid));
    }
}

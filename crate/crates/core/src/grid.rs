//! Row-major pixel grids.
//!
//! [`Grid`] is the generic container used for guide images, weights and
//! gradients. [`DepthMap`] wraps a `Grid<f64>` and keeps every value finite
//! and non-negative, with `0.0` meaning "no depth".

use std::ops::{Deref, Index, IndexMut};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Guide image with intensities in `[0, 1]`.
pub type Intensity = Grid<f64>;

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fill a {width}x{height} grid",
                data.len()
            )));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index_of(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[self.index_of(x, y)]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        let i = self.index_of(x, y);
        &mut self.data[i]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, T> {
        self.data.chunks(self.width.max(1))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> Index<usize> for Grid<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for Grid<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

/// Pixel offsets removed by a crop, needed to shift the principal point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropOffset {
    pub left: usize,
    pub top: usize,
}

impl CropOffset {
    /// Offsets of the bottom-center window of size `out_w`×`out_h`.
    pub fn bottom_center(
        (width, height): (usize, usize),
        out_w: usize,
        out_h: usize,
    ) -> Result<Self> {
        if out_w > width || out_h > height {
            return Err(Error::InvalidArgument(format!(
                "crop {out_w}x{out_h} is larger than the {width}x{height} input"
            )));
        }
        Ok(CropOffset {
            left: (width - out_w) / 2,
            top: height - out_h,
        })
    }
}

impl<T: Clone> Grid<T> {
    pub fn window(&self, offset: CropOffset, out_w: usize, out_h: usize) -> Grid<T> {
        let mut data = Vec::with_capacity(out_w * out_h);
        for y in offset.top..offset.top + out_h {
            let start = y * self.width + offset.left;
            data.extend_from_slice(&self.data[start..start + out_w]);
        }
        Grid {
            width: out_w,
            height: out_h,
            data,
        }
    }

    /// Keeps the bottom `out_h` rows and the horizontally centered `out_w`
    /// columns.
    pub fn bottom_center_crop(&self, out_w: usize, out_h: usize) -> Result<(Grid<T>, CropOffset)> {
        let offset = CropOffset::bottom_center(self.dims(), out_w, out_h)?;
        Ok((self.window(offset, out_w, out_h), offset))
    }
}

/// Per-pixel depth in meters. `0.0` marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap(Grid<f64>);

impl DepthMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        DepthMap(Grid::filled(width, height, 0.0))
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_grid(Grid::from_vec(width, height, values)?)
    }

    pub fn from_grid(grid: Grid<f64>) -> Result<Self> {
        if let Some(i) = grid.as_slice().iter().position(|v| !is_depth(*v)) {
            return Err(Error::Range(format!(
                "depth value {} at pixel {i} is not finite and non-negative",
                grid[i]
            )));
        }
        Ok(DepthMap(grid))
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_grid(Grid::from_fn(width, height, f))
    }

    pub(crate) fn from_grid_unchecked(grid: Grid<f64>) -> Self {
        debug_assert!(grid.as_slice().iter().all(|v| is_depth(*v)));
        DepthMap(grid)
    }

    pub fn set(&mut self, x: usize, y: usize, depth: f64) -> Result<()> {
        if !is_depth(depth) {
            return Err(Error::Range(format!("invalid depth {depth}")));
        }
        *self.0.get_mut(x, y) = depth;
        Ok(())
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.get(x, y) > 0.0
    }

    pub fn valid_count(&self) -> usize {
        self.as_slice().iter().filter(|v| **v > 0.0).count()
    }

    /// Fraction of pixels holding a depth.
    pub fn density(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.valid_count() as f64 / self.len() as f64
        }
    }

    pub fn as_grid(&self) -> &Grid<f64> {
        &self.0
    }

    pub fn into_grid(self) -> Grid<f64> {
        self.0
    }

    pub fn bottom_center_crop(&self, out_w: usize, out_h: usize) -> Result<(DepthMap, CropOffset)> {
        let (grid, offset) = self.0.bottom_center_crop(out_w, out_h)?;
        Ok((DepthMap(grid), offset))
    }
}

impl Deref for DepthMap {
    type Target = Grid<f64>;

    fn deref(&self) -> &Grid<f64> {
        &self.0
    }
}

#[inline]
pub(crate) fn is_depth(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

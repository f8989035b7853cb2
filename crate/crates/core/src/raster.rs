use alloc::vec;
use alloc::vec::Vec;

/// Row-major boolean image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRaster {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitRaster {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as `false`.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Sets a `side` x `side` square with top-left corner `(x0, y0)`, clipped
    /// to the raster.
    pub fn fill_square(&mut self, x0: i64, y0: i64, side: u32) {
        let x_start = x0.clamp(0, self.width as i64) as usize;
        let y_start = y0.clamp(0, self.height as i64) as usize;
        let x_end = (x0 + side as i64).clamp(0, self.width as i64) as usize;
        let y_end = (y0 + side as i64).clamp(0, self.height as i64) as usize;
        for y in y_start..y_end {
            let row = y * self.width;
            self.bits[row + x_start..row + x_end].fill(true);
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Rotation by 90 degrees clockwise.
    pub fn rotated_cw(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut out = Self::new(h, w);
        for y in 0..h {
            for x in 0..w {
                out.set(h - 1 - y, x, self.get(x, y));
            }
        }
        out
    }

    /// Intersection over union; `None` when both rasters are empty or the
    /// dimensions differ.
    pub fn iou(&self, other: &Self) -> Option<f64> {
        if self.width != other.width || self.height != other.height {
            return None;
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        (union > 0).then(|| inter as f64 / union as f64)
    }
}

/// Summed-area table with a zero first row and column.
pub(crate) struct Integral {
    stride: usize,
    sums: Vec<u32>,
}

impl Integral {
    pub(crate) fn new(width: usize, height: usize) -> Self {
        Self { stride: width + 1, sums: vec![0; (width + 1) * (height + 1)] }
    }

    /// Refills the table from `value(x, y)`.
    pub(crate) fn fill(&mut self, width: usize, height: usize, mut value: impl FnMut(usize, usize) -> bool) {
        let stride = self.stride;
        for y in 0..height {
            let mut row_sum = 0u32;
            for x in 0..width {
                row_sum += value(x, y) as u32;
                self.sums[(y + 1) * stride + x + 1] = self.sums[y * stride + x + 1] + row_sum;
            }
        }
    }

    pub(crate) fn from_raster(raster: &BitRaster) -> Self {
        let mut table = Self::new(raster.width(), raster.height());
        table.fill(raster.width(), raster.height(), |x, y| raster.get(x, y));
        table
    }

    /// Sum over `[x0, x1) x [y0, y1)`; bounds must already be clipped.
    #[inline]
    pub(crate) fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u32 {
        let s = self.stride;
        self.sums[y1 * s + x1] + self.sums[y0 * s + x0] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0]
    }
}

//! Image-domain decoder for rendered anaglyphs.
//!
//! Works only from the pixels: the two eye rasters are split out of the RGB
//! image, the dot size is read from run lengths, and every block of the cyan
//! (right-eye) raster is matched against horizontally displaced windows of
//! the red (left-eye) raster by normalized cross-correlation. Lags are
//! reported as the displacement of red relative to cyan, positive rightward,
//! and blocks are anchored in cyan coordinates so the segmented figure lines
//! up with the undisplaced figure mask.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::raster::{BitRaster, Integral};
use crate::renderer::{channel, AnaglyphImage, Eye, FigureMask, Orientation};
use crate::{Error, Result};

/// Blocks whose correlation peak falls below this carry no usable match.
pub const CONFIDENCE_THRESHOLD: f64 = 0.5;
/// Block side in dots.
pub const BLOCK_DOTS: usize = 4;

/// Per-block horizontal lag estimates on a half-overlapping block grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityMap {
    pub image_width: usize,
    pub image_height: usize,
    pub dot_px: usize,
    pub block_px: usize,
    pub stride_px: usize,
    pub cols: usize,
    pub rows: usize,
    pub search_range: u32,
    /// Row-major, `rows * cols`.
    pub lags: Vec<i32>,
    /// Correlation peak per block, clamped to `[0, 1]`.
    pub confidence: Vec<f64>,
}

impl DisparityMap {
    pub fn lag(&self, col: usize, row: usize) -> i32 {
        self.lags[row * self.cols + col]
    }

    pub fn confident(&self, i: usize) -> bool {
        self.confidence[i] >= CONFIDENCE_THRESHOLD
    }

    /// Block center in image pixels.
    pub fn block_center(&self, col: usize, row: usize) -> (f64, f64) {
        let half = self.block_px as f64 / 2.0;
        ((col * self.stride_px) as f64 + half, (row * self.stride_px) as f64 + half)
    }

    /// Number of confident blocks per lag, from `-search_range` upward.
    pub fn lag_histogram(&self) -> Vec<(i32, usize)> {
        let r = self.search_range as i32;
        let mut counts = vec![0usize; (2 * r + 1) as usize];
        for (i, &lag) in self.lags.iter().enumerate() {
            if self.confident(i) {
                counts[(lag + r) as usize] += 1;
            }
        }
        (-r..=r).zip(counts).filter(|&(_, n)| n > 0).collect()
    }

    /// Most frequent non-zero lag among confident blocks.
    pub fn dominant_figure_lag(&self) -> Option<i32> {
        self.lag_histogram()
            .into_iter()
            .filter(|&(lag, _)| lag != 0)
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.abs().cmp(&a.0.abs())))
            .map(|(lag, _)| lag)
    }
}

/// Smallest horizontal run of set pixels that is common in the raster.
///
/// Every square dot contributes a run of at least its side to each row it
/// crosses, so isolated dots reveal the side exactly. Runs touching the image
/// border are skipped because they may be clipped.
pub fn estimate_dot_size(raster: &BitRaster) -> Option<usize> {
    let w = raster.width();
    let mut histogram: Vec<usize> = Vec::new();
    let mut total = 0usize;
    for y in 0..raster.height() {
        let mut x = 0;
        while x < w {
            if !raster.get(x, y) {
                x += 1;
                continue;
            }
            let start = x;
            while x < w && raster.get(x, y) {
                x += 1;
            }
            if start > 0 && x < w {
                let len = x - start;
                if histogram.len() <= len {
                    histogram.resize(len + 1, 0);
                }
                histogram[len] += 1;
                total += 1;
            }
        }
    }
    let floor = (total / 100).max(1);
    histogram.iter().position(|&n| n >= floor)
}

/// Block matching between the eye rasters of `img` over lags
/// `-search_range..=search_range`.
pub fn estimate_disparity(img: &AnaglyphImage, search_range: u32) -> Result<DisparityMap> {
    let left = channel(img, Eye::LeftRed);
    let right = channel(img, Eye::RightCyan);
    let (w, h) = (img.width(), img.height());
    let dot_px = estimate_dot_size(&right).or_else(|| estimate_dot_size(&left)).unwrap_or(1);
    let block = BLOCK_DOTS * dot_px;
    let stride = block / 2;
    if block > w || block > h {
        return Err(Error::ImageTooSmall { width: w, height: h, block });
    }
    let cols = (w - block) / stride + 1;
    let rows = (h - block) / stride + 1;
    let n = (block * block) as f64;

    let right_sums = Integral::from_raster(&right);
    let left_sums = Integral::from_raster(&left);
    let mut product = Integral::new(w, h);

    let blocks = cols * rows;
    let mut best_score = vec![f64::NEG_INFINITY; blocks];
    let mut best_lag = vec![0i32; blocks];

    let r = search_range as i64;
    // 0, 1, -1, 2, -2, ...: on equal scores the smallest displacement wins.
    let lags = core::iter::once(0).chain((1..=r).flat_map(|k| [k, -k]));
    for lag in lags {
        product.fill(w, h, |x, y| right.get(x, y) && left.get_signed(x as i64 + lag, y as i64));
        for row in 0..rows {
            let y0 = row * stride;
            let y1 = y0 + block;
            for col in 0..cols {
                let x0 = col * stride;
                let x1 = x0 + block;
                let sr = right_sums.sum(x0, y0, x1, y1) as f64;
                let lx0 = (x0 as i64 + lag).clamp(0, w as i64) as usize;
                let lx1 = (x1 as i64 + lag).clamp(0, w as i64) as usize;
                let sl = left_sums.sum(lx0, y0, lx1, y1) as f64;
                let slr = product.sum(x0, y0, x1, y1) as f64;
                let var = (n * sl - sl * sl) * (n * sr - sr * sr);
                let score = if var > 0.0 { (n * slr - sl * sr) / libm::sqrt(var) } else { 0.0 };
                let i = row * cols + col;
                if score > best_score[i] {
                    best_score[i] = score;
                    best_lag[i] = lag as i32;
                }
            }
        }
    }

    let confidence: Vec<f64> = best_score.iter().map(|&s| s.clamp(0.0, 1.0)).collect();
    let low = confidence.iter().filter(|&&c| c < CONFIDENCE_THRESHOLD).count();
    if 2 * low > blocks {
        return Err(Error::LowConfidence { low, total: blocks });
    }
    Ok(DisparityMap {
        image_width: w,
        image_height: h,
        dot_px,
        block_px: block,
        stride_px: stride,
        cols,
        rows,
        search_range,
        lags: best_lag,
        confidence,
    })
}

/// Result of [`detect_orientation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationEstimate {
    pub orientation: Orientation,
    /// Blocks in the segmented figure.
    pub region_blocks: usize,
    /// Agreement of the segmented blocks with the best gapped-disk template.
    pub template_iou: f64,
    /// Pixel IoU of the segmented region against a supplied ground truth.
    pub iou: Option<f64>,
}

/// Segments the confident blocks at `expected_shift`, keeps the largest
/// connected piece and picks the gap direction whose gapped-disk template
/// fits it best.
pub fn detect_orientation(
    map: &DisparityMap,
    expected_shift: i32,
    truth: Option<&FigureMask>,
) -> Result<OrientationEstimate> {
    if expected_shift == 0 {
        // A zero-lag figure cannot be told apart from the background.
        return Err(Error::NoFigure);
    }
    let selected: Vec<bool> = (0..map.lags.len())
        .map(|i| map.confident(i) && map.lags[i] == expected_shift)
        .collect();
    let component = largest_component(&selected, map.cols, map.rows);
    let size = component.iter().filter(|&&b| b).count();
    if size == 0 {
        return Err(Error::NoFigure);
    }

    let cell_area = (map.stride_px * map.stride_px) as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for row in 0..map.rows {
        for col in 0..map.cols {
            if component[row * map.cols + col] {
                let (x, y) = map.block_center(col, row);
                sx += x;
                sy += y;
            }
        }
    }
    let centroid = (sx / size as f64, sy / size as f64);
    let radius = libm::sqrt(size as f64 * cell_area / (0.75 * core::f64::consts::PI));
    // Removing a 90 degree sector moves the centroid away from the gap by
    // 4*sqrt(2)/(9*pi) of the radius.
    let offset = 4.0 * core::f64::consts::SQRT_2 / (9.0 * core::f64::consts::PI) * radius;

    let mut best: Option<(Orientation, f64)> = None;
    for orientation in Orientation::ALL {
        let (ux, uy) = orientation.image_direction();
        let center = (centroid.0 + offset * ux, centroid.1 + offset * uy);
        let (mut inter, mut template) = (0usize, 0usize);
        for row in 0..map.rows {
            for col in 0..map.cols {
                let (x, y) = map.block_center(col, row);
                let (dx, dy) = (x - center.0, y - center.1);
                let inside = dx * dx + dy * dy <= radius * radius && !in_gap(orientation, dx, dy);
                if inside {
                    template += 1;
                    inter += component[row * map.cols + col] as usize;
                }
            }
        }
        let union = template + size - inter;
        let score = inter as f64 / union as f64;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((orientation, score));
        }
    }
    let (orientation, template_iou) = best.expect("four candidates");

    let iou = truth.and_then(|mask| segmented_region(map, &component).iou(&mask.raster));
    Ok(OrientationEstimate { orientation, region_blocks: size, template_iou, iou })
}

/// Pixel raster of a block selection: each block owns the central
/// `stride x stride` cell of its footprint.
pub fn segmented_region(map: &DisparityMap, blocks: &[bool]) -> BitRaster {
    let mut region = BitRaster::new(map.image_width, map.image_height);
    let s = map.stride_px;
    let margin = s / 2;
    for row in 0..map.rows {
        for col in 0..map.cols {
            if blocks[row * map.cols + col] {
                let x0 = col * s + margin;
                let y0 = row * s + margin;
                for y in y0..(y0 + s).min(map.image_height) {
                    for x in x0..(x0 + s).min(map.image_width) {
                        region.set(x, y, true);
                    }
                }
            }
        }
    }
    region
}

/// Image coordinates (y down), relative to the disk center.
fn in_gap(orientation: Orientation, dx: f64, dy: f64) -> bool {
    let (along, across) = match orientation {
        Orientation::Up => (-dy, dx),
        Orientation::Right => (dx, dy),
        Orientation::Down => (dy, dx),
        Orientation::Left => (-dx, dy),
    };
    along > 0.0 && libm::fabs(across) < along
}

fn largest_component(selected: &[bool], cols: usize, rows: usize) -> Vec<bool> {
    let mut label = vec![usize::MAX; selected.len()];
    let mut best: (usize, usize) = (usize::MAX, 0);
    let mut queue = VecDeque::new();
    let mut next = 0;
    for start in 0..selected.len() {
        if !selected[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (c, r) = (i % cols, i / cols);
            let neighbours = [
                (c > 0).then(|| i - 1),
                (c + 1 < cols).then(|| i + 1),
                (r > 0).then(|| i - cols),
                (r + 1 < rows).then(|| i + cols),
            ];
            for j in neighbours.into_iter().flatten() {
                if selected[j] && label[j] == usize::MAX {
                    label[j] = next;
                    queue.push_back(j);
                }
            }
        }
        if size > best.1 {
            best = (next, size);
        }
        next += 1;
    }
    label.iter().zip(selected).map(|(&l, &s)| s && l == best.0).collect()
}

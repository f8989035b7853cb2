//! Red/cyan random-dot anaglyphs.
//!
//! Both half-images share one random dot field. Dots whose centers fall in the
//! gapped-disk figure are moved right by the level's pixel shift in the red
//! (left-eye) half only, which puts the figure in crossed disparity. The strip
//! the figure uncovers is refilled with fresh dots and the strip it covers
//! drops its background dots, so the dot density of each half stays uniform
//! and the figure is invisible to either eye alone.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, DisparityLevel, DisplayProfile};
use crate::raster::BitRaster;
use crate::{Error, Result};

pub const BACKGROUND: [u8; 3] = [0, 0, 0];
pub const RED: [u8; 3] = [255, 0, 0];
pub const CYAN: [u8; 3] = [0, 255, 255];
pub const WHITE: [u8; 3] = [255, 255, 255];

pub const DEFAULT_DOT_COVERAGE: f64 = 0.25;
/// Background margin around the figure, in dots, on each side.
pub const MARGIN_DOTS: u32 = 10;

const BASE_STREAM: u64 = 0;
const REFILL_STREAM: u64 = 1;

/// Direction the gap in the disk points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Up,
    Right,
    Down,
    Left,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation::Up, Orientation::Right, Orientation::Down, Orientation::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index % 4]
    }

    pub fn rotated_cw(self) -> Self {
        Self::from_index(self.index() + 1)
    }

    /// Unit vector in image coordinates (y grows downward).
    pub fn image_direction(self) -> (f64, f64) {
        match self {
            Orientation::Up => (0.0, -1.0),
            Orientation::Right => (1.0, 0.0),
            Orientation::Down => (0.0, 1.0),
            Orientation::Left => (-1.0, 0.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Up => "up",
            Orientation::Right => "right",
            Orientation::Down => "down",
            Orientation::Left => "left",
        }
    }

    /// Whether a point, relative to the disk center with y pointing up, lies
    /// in the 90 degree wedge around this direction. Points exactly on the
    /// wedge edges stay in the figure.
    fn wedge_contains(self, dx: f64, dy_up: f64) -> bool {
        let (along, across) = match self {
            Orientation::Up => (dy_up, dx),
            Orientation::Right => (dx, dy_up),
            Orientation::Down => (-dy_up, dx),
            Orientation::Left => (-dx, dy_up),
        };
        along > 0.0 && libm::fabs(across) < along
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or(Error::InvalidSpec("orientation must be one of up, right, down, left"))
    }
}

/// Everything needed to draw one stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StereogramSpec {
    pub profile: DisplayProfile,
    pub distance_m: f64,
    pub level: DisparityLevel,
    pub orientation: Orientation,
    pub dot_coverage: f64,
    pub seed: u64,
    /// Side of the square canvas; defaults to the figure plus a margin of
    /// [`MARGIN_DOTS`] dots on every side.
    pub canvas_px: Option<u32>,
}

impl StereogramSpec {
    pub fn new(
        profile: DisplayProfile,
        distance_m: f64,
        level: DisparityLevel,
        orientation: Orientation,
        seed: u64,
    ) -> Self {
        Self {
            profile,
            distance_m,
            level,
            orientation,
            dot_coverage: DEFAULT_DOT_COVERAGE,
            seed,
            canvas_px: None,
        }
    }

    pub fn layout(&self) -> Result<Layout> {
        let stimulus_px = geometry::stimulus_size_px(&self.profile)?;
        let dot_px = geometry::dot_size_px(&self.profile, self.distance_m)?;
        let canvas_px = self.canvas_px.unwrap_or(stimulus_px + 2 * MARGIN_DOTS * dot_px);
        if canvas_px < stimulus_px {
            return Err(Error::StimulusTooLarge { needed: stimulus_px, available: canvas_px });
        }
        if !(self.dot_coverage > 0.0 && self.dot_coverage < 1.0) {
            return Err(Error::InvalidSpec("dot coverage must lie strictly between 0 and 1"));
        }
        Ok(Layout { canvas_px, stimulus_px, dot_px })
    }
}

/// Pixel dimensions resolved from a [`StereogramSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub canvas_px: u32,
    pub stimulus_px: u32,
    pub dot_px: u32,
}

/// The figure region: a centered disk with one 90 degree wedge removed.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureMask {
    pub raster: BitRaster,
    pub diameter_px: u32,
    pub orientation: Orientation,
}

impl FigureMask {
    pub fn gapped_disk(canvas_px: u32, diameter_px: u32, orientation: Orientation) -> Self {
        let center = canvas_px as f64 / 2.0;
        let radius = diameter_px as f64 / 2.0;
        let r2 = radius * radius;
        let side = canvas_px as usize;
        let raster = BitRaster::from_fn(side, side, |x, y| {
            let dx = x as f64 + 0.5 - center;
            let dy_up = center - (y as f64 + 0.5);
            dx * dx + dy_up * dy_up <= r2 && !orientation.wedge_contains(dx, dy_up)
        });
        Self { raster, diameter_px, orientation }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.raster.get_signed(x, y)
    }
}

pub fn ground_truth_mask(spec: &StereogramSpec) -> Result<FigureMask> {
    let layout = spec.layout()?;
    Ok(FigureMask::gapped_disk(layout.canvas_px, layout.stimulus_px, spec.orientation))
}

/// Rendered stimulus: row-major 8-bit RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnaglyphImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl AnaglyphImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return Err(Error::InvalidSpec("pixel buffer length must be width * height * 3"));
        }
        Ok(Self { width, height, pixels })
    }

    /// Composes the two eye rasters: red, cyan, white where both, black elsewhere.
    pub fn compose(left_red: &BitRaster, right_cyan: &BitRaster) -> Self {
        let (width, height) = (left_red.width(), left_red.height());
        let mut pixels = Vec::with_capacity(width * height * 3);
        for (&r, &c) in left_red.bits().iter().zip(right_cyan.bits()) {
            let rgb = match (r, c) {
                (true, true) => WHITE,
                (true, false) => RED,
                (false, true) => CYAN,
                (false, false) => BACKGROUND,
            };
            pixels.extend_from_slice(&rgb);
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// True when every pixel is background, red, cyan or white.
    pub fn uses_anaglyph_palette(&self) -> bool {
        self.pixels.chunks_exact(3).all(|p| [BACKGROUND, RED, CYAN, WHITE].iter().any(|c| c == p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Eye {
    /// Seen through the red filter.
    LeftRed,
    /// Seen through the cyan filter.
    RightCyan,
}

/// Dot presence as seen by one eye. Thresholds at mid-scale so that
/// re-encoded or lightly processed images still separate.
pub fn channel(img: &AnaglyphImage, eye: Eye) -> BitRaster {
    let rgb = img.as_bytes();
    BitRaster::from_fn(img.width(), img.height(), |x, y| {
        let i = (y * img.width() + x) * 3;
        match eye {
            Eye::LeftRed => rgb[i] >= 128,
            Eye::RightCyan => rgb[i + 1] >= 128 && rgb[i + 2] >= 128,
        }
    })
}

pub fn render(spec: &StereogramSpec) -> Result<AnaglyphImage> {
    let (left, right) = render_eyes(spec)?;
    Ok(AnaglyphImage::compose(&left, &right))
}

/// The two dot rasters before color composition: (left/red, right/cyan).
pub fn render_eyes(spec: &StereogramSpec) -> Result<(BitRaster, BitRaster)> {
    let layout = spec.layout()?;
    let mask = FigureMask::gapped_disk(layout.canvas_px, layout.stimulus_px, spec.orientation);
    let dot = layout.dot_px;
    let side = layout.canvas_px as usize;
    let presence = presence_for_coverage(spec.dot_coverage, dot)?;
    let shift = spec.level.pixel_shift as i64;
    let half = (dot / 2) as i64;

    let base = jittered_dots(spec.seed, BASE_STREAM, layout.canvas_px, dot, presence);
    let refill = jittered_dots(spec.seed, REFILL_STREAM, layout.canvas_px, dot, presence);

    let mut right = BitRaster::new(side, side);
    let mut left = BitRaster::new(side, side);
    for &(x0, y0) in &base {
        right.fill_square(x0, y0, dot);
        let (cx, cy) = (x0 + half, y0 + half);
        if mask.contains(cx, cy) {
            left.fill_square(x0 + shift, y0, dot);
        } else if !mask.contains(cx - shift, cy) {
            left.fill_square(x0, y0, dot);
        }
        // Otherwise the center lies where the shifted figure now sits.
    }
    if shift != 0 {
        for &(x0, y0) in &refill {
            let (cx, cy) = (x0 + half, y0 + half);
            if mask.contains(cx, cy) && !mask.contains(cx - shift, cy) {
                left.fill_square(x0, y0, dot);
            }
        }
    }
    Ok((left, right))
}

/// Top-left corners of dots on a jittered grid of `dot`-sized cells. Cells
/// start one row and column outside the canvas so the edges get full cover.
fn jittered_dots(seed: u64, stream: u64, canvas_px: u32, dot: u32, presence: f64) -> Vec<(i64, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let cells = canvas_px.div_ceil(dot) as i64;
    let d = dot as i64;
    let mut dots = Vec::new();
    for cy in -1..cells {
        for cx in -1..cells {
            let present = rng.random::<f64>() < presence;
            let jx = rng.random_range(0..dot) as i64;
            let jy = rng.random_range(0..dot) as i64;
            if present {
                dots.push((cx * d + jx, cy * d + jy));
            }
        }
    }
    dots
}

/// Expected pixel coverage of the jittered grid at per-cell presence `p`.
///
/// A pixel at offset `(u, v)` inside its cell can be covered by the dot of its
/// own cell or of the cells to the left, above and above-left.
pub fn expected_coverage(presence: f64, dot: u32) -> f64 {
    let d = dot as f64;
    let mut total = 0.0;
    for v in 0..dot {
        for u in 0..dot {
            let qx = [(u + 1) as f64 / d, (dot - 1 - u) as f64 / d];
            let qy = [(v + 1) as f64 / d, (dot - 1 - v) as f64 / d];
            let mut uncovered = 1.0;
            for a in qx {
                for b in qy {
                    uncovered *= 1.0 - presence * a * b;
                }
            }
            total += 1.0 - uncovered;
        }
    }
    total / (d * d)
}

/// Per-cell dot probability that yields `coverage` on average.
pub fn presence_for_coverage(coverage: f64, dot: u32) -> Result<f64> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::InvalidSpec("dot coverage must lie strictly between 0 and 1"));
    }
    if expected_coverage(1.0, dot) < coverage {
        return Err(Error::InvalidSpec("dot coverage is higher than the dot grid can reach"));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_coverage(mid, dot) < coverage {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_level_table;

    fn ipad() -> DisplayProfile {
        DisplayProfile::new(264.0, 2048, 1536).unwrap()
    }

    fn spec(distance: f64, index: usize, orientation: Orientation, seed: u64) -> StereogramSpec {
        let table = build_level_table(&ipad(), distance, 10).unwrap();
        StereogramSpec::new(ipad(), distance, *table.level(index).unwrap(), orientation, seed)
    }

    #[test]
    fn mask_area_is_three_quarters_of_disk() {
        let figure = FigureMask::gapped_disk(1063, 1023, Orientation::Up).raster.count_ones();
        let full = BitRaster::from_fn(1063, 1063, |x, y| {
            let dx = x as f64 + 0.5 - 531.5;
            let dy = y as f64 + 0.5 - 531.5;
            dx * dx + dy * dy <= 511.5 * 511.5
        })
        .count_ones();
        let ratio = figure as f64 / full as f64;
        assert!((ratio - 0.75).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn rotating_masks_cycles_orientations() {
        for canvas in [64, 65, 1063] {
            let mut mask = FigureMask::gapped_disk(canvas, canvas - 6, Orientation::Up);
            for _ in 0..4 {
                let next = FigureMask::gapped_disk(canvas, canvas - 6, mask.orientation.rotated_cw());
                assert_eq!(mask.raster.rotated_cw(), next.raster);
                mask = next;
            }
        }
    }

    #[test]
    fn up_gap_is_empty_in_upward_cone() {
        let mask = FigureMask::gapped_disk(301, 281, Orientation::Up);
        let c = 150.5;
        for y in 0..301 {
            for x in 0..301 {
                let dx = x as f64 + 0.5 - c;
                let dy = c - (y as f64 + 0.5);
                let angle_from_up = libm::atan2(dx.abs(), dy).to_degrees();
                if dy > 0.0 && angle_from_up < 15.0 {
                    assert!(!mask.raster.get(x, y));
                }
            }
        }
    }

    #[test]
    fn orientation_parsing() {
        assert_eq!("Left".parse::<Orientation>().unwrap(), Orientation::Left);
        assert!("diagonal".parse::<Orientation>().is_err());
        assert_eq!(Orientation::Left.rotated_cw(), Orientation::Up);
    }

    #[test]
    fn coverage_solver() {
        for dot in [1, 2, 5, 12] {
            for target in [0.15, 0.25, 0.4] {
                let p = presence_for_coverage(target, dot).unwrap();
                assert!((expected_coverage(p, dot) - target).abs() < 1e-9);
            }
        }
        assert!((presence_for_coverage(0.3, 1).unwrap() - 0.3).abs() < 1e-12);
        assert!(presence_for_coverage(0.95, 12).is_err());
        assert!(presence_for_coverage(0.0, 2).is_err());
    }

    #[test]
    fn zero_shift_gives_identical_eyes() {
        let mut s = spec(0.5, 1, Orientation::Left, 3);
        s.level.pixel_shift = 0;
        let img = render(&s).unwrap();
        assert_eq!(channel(&img, Eye::LeftRed), channel(&img, Eye::RightCyan));
    }

    #[test]
    fn render_is_deterministic_and_uses_palette() {
        let s = spec(3.0, 4, Orientation::Down, 99);
        let a = render(&s).unwrap();
        let b = render(&s).unwrap();
        assert_eq!(a, b);
        assert!(a.uses_anaglyph_palette());
        assert_eq!(a.width(), 1023 + 2 * 10 * 12);
        let other = render(&StereogramSpec { seed: 100, ..s }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn achieved_coverage_matches_target() {
        let mut s = spec(0.5, 3, Orientation::Up, 5);
        for target in [0.15, 0.25, 0.4] {
            s.dot_coverage = target;
            let (_, right) = render_eyes(&s).unwrap();
            let got = right.count_ones() as f64 / (right.width() * right.height()) as f64;
            assert!((got - target).abs() < 0.01, "target {target} got {got}");
        }
    }

    #[test]
    fn channel_overlap_rule() {
        let img = AnaglyphImage::new(2, 1, alloc::vec![255, 255, 255, 0, 0, 0]).unwrap();
        assert!(channel(&img, Eye::LeftRed).get(0, 0));
        assert!(channel(&img, Eye::RightCyan).get(0, 0));
        assert!(!channel(&img, Eye::LeftRed).get(1, 0));
        let dark = AnaglyphImage::new(3, 3, alloc::vec![0; 27]).unwrap();
        assert_eq!(channel(&dark, Eye::LeftRed).count_ones(), 0);
        assert_eq!(channel(&dark, Eye::RightCyan).count_ones(), 0);
        assert!(AnaglyphImage::new(2, 2, alloc::vec![0; 5]).is_err());
    }

    #[test]
    fn small_canvas_is_rejected() {
        let mut s = spec(0.5, 1, Orientation::Up, 1);
        s.canvas_px = Some(500);
        assert_eq!(render(&s), Err(Error::StimulusTooLarge { needed: 1023, available: 500 }));
        s.canvas_px = None;
        s.profile.height_px = 800;
        assert!(matches!(render(&s), Err(Error::StimulusTooLarge { .. })));
    }

    #[test]
    fn shifted_figure_matches_right_eye_inside_mask() {
        let s = spec(0.5, 5, Orientation::Right, 11);
        let (left, right) = render_eyes(&s).unwrap();
        let mask = ground_truth_mask(&s).unwrap();
        let shift = s.level.pixel_shift as usize;
        let dot = 2usize;
        // Away from the figure border the left eye is the right eye moved by `shift`.
        let eroded = |x: usize, y: usize| {
            (x.saturating_sub(3 * dot)..=x + 3 * dot)
                .all(|xx| (y.saturating_sub(3 * dot)..=y + 3 * dot).all(|yy| mask.contains(xx as i64, yy as i64)))
        };
        let mut checked = 0;
        for y in (0..right.height()).step_by(7) {
            for x in (0..right.width() - shift).step_by(7) {
                if eroded(x, y) {
                    assert_eq!(left.get(x + shift, y), right.get(x, y));
                    checked += 1;
                }
            }
        }
        assert!(checked > 1000);
    }
}

//! Pixel-quantized random-dot stereoacuity testing.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO. It covers:
//!
//! * [`geometry`]: disparity arithmetic for a display at a viewing distance,
//!   the ten-step level tables, dot and stimulus sizing, and the two-rod
//!   (Howard–Dolman) conversion.
//! * [`renderer`]: red/cyan random-dot anaglyphs carrying a gapped disk in
//!   crossed disparity.
//! * [`oracle`]: an image-domain decoder that recovers disparity and gap
//!   orientation from a rendered anaglyph.
//! * [`staircase`]: the adaptive threshold procedure and simulated observers.
//! * [`stats`]: ordinal recoding, weighted kappa, Wilcoxon signed-rank and the
//!   dataset report.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod acuity;
mod error;
pub mod geometry;
pub mod oracle;
pub mod raster;
pub mod renderer;
pub mod staircase;
pub mod stats;

pub use acuity::Acuity;
pub use error::{Error, Result};
pub use geometry::{DisparityLevel, DisplayProfile, LevelTable, ViewingGeometry};
pub use renderer::{AnaglyphImage, FigureMask, Orientation, StereogramSpec};
pub use staircase::{StaircaseOutcome, StaircaseState, TrialRecord};

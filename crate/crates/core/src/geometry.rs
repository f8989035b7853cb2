//! Disparity arithmetic.
//!
//! A horizontal displacement of `i` whole pixels between the two half-images,
//! seen from distance `z`, subtends `i * pitch / z` radians of binocular
//! disparity (small-angle form). Everything here is a pure function of a
//! [`DisplayProfile`] and distances in meters.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Acuity, Error, Result};

/// 180 * 3600 / pi.
pub const ARCSEC_PER_RADIAN: f64 = 206_264.806_247;
pub const METERS_PER_INCH: f64 = 0.0254;
pub const DEFAULT_REFERENCE_DISTANCE_M: f64 = 0.5;
pub const DEFAULT_IPD_M: f64 = 0.06;
pub const DEFAULT_LEVELS: usize = 10;
/// Angular side of one random dot (0.125 logMAR).
pub const DOT_ANGLE_ARCMIN: f64 = 1.32;
/// Full angular size of the figure at [`STIMULUS_DESIGN_DISTANCE_M`].
pub const STIMULUS_ANGLE_DEG: f64 = 1.88;
pub const STIMULUS_DESIGN_DISTANCE_M: f64 = 3.0;
/// Number of settings averaged by the two-rod protocol.
pub const HD_MEASURES: usize = 6;
/// Two-rod readings above this are reported as outside limits.
pub const HD_LIMIT_ARCSEC: f64 = 66.0;

const INTEGER_TOLERANCE: f64 = 1e-9;

/// Physical description of a screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayProfile {
    pub ppi: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl DisplayProfile {
    pub fn new(ppi: f64, width_px: u32, height_px: u32) -> Result<Self> {
        let profile = Self { ppi, width_px, height_px };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ppi.is_finite() && self.ppi > 0.0) {
            return Err(Error::InvalidProfile("ppi must be a positive finite number"));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidProfile("screen resolution must be non-zero"));
        }
        Ok(())
    }

    /// Side of one pixel in meters.
    pub fn pixel_pitch_m(&self) -> Result<f64> {
        pixel_pitch(self)
    }

    pub fn min_side_px(&self) -> u32 {
        self.width_px.min(self.height_px)
    }
}

/// Viewing distances and interpupillary distance, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewingGeometry {
    pub distance_m: f64,
    pub reference_distance_m: f64,
    pub ipd_m: f64,
}

impl ViewingGeometry {
    pub fn new(distance_m: f64) -> Result<Self> {
        let geometry = Self {
            distance_m,
            reference_distance_m: DEFAULT_REFERENCE_DISTANCE_M,
            ipd_m: DEFAULT_IPD_M,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive(self.distance_m, "distance must be positive")?;
        check_positive(self.reference_distance_m, "reference distance must be positive")?;
        check_positive(self.ipd_m, "interpupillary distance must be positive")
    }
}

/// One step of a disparity scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisparityLevel {
    /// 1 is the finest level.
    pub index: usize,
    pub pixel_shift: u32,
    pub arcsec: f64,
    pub arcsec_rounded: u32,
}

/// The ordered disparity scale available at one viewing distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTable {
    pub distance_m: f64,
    pub reference_distance_m: f64,
    /// Finest first.
    pub levels: Vec<DisparityLevel>,
    /// `distance / reference` when that ratio is an integer.
    pub scale_k: Option<u32>,
}

impl LevelTable {
    /// Level `j` shifts by `j` pixels, for `j` in `1..=n_levels`.
    pub fn build(profile: &DisplayProfile, geometry: &ViewingGeometry, n_levels: usize) -> Result<Self> {
        geometry.validate()?;
        if n_levels == 0 {
            return Err(Error::EmptyTable);
        }
        let levels = (1..=n_levels)
            .map(|index| {
                let pixel_shift = index as u32;
                let arcsec = disparity_arcsec(pixel_shift, profile, geometry.distance_m)?;
                Ok(DisparityLevel {
                    index,
                    pixel_shift,
                    arcsec,
                    arcsec_rounded: round_half_up(arcsec) as u32,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            distance_m: geometry.distance_m,
            reference_distance_m: geometry.reference_distance_m,
            levels,
            scale_k: distance_scale_k(geometry.distance_m, geometry.reference_distance_m).ok(),
        })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level by its 1-based index.
    pub fn level(&self, index: usize) -> Result<&DisparityLevel> {
        index
            .checked_sub(1)
            .and_then(|i| self.levels.get(i))
            .ok_or(Error::LevelOutOfRange { index, len: self.levels.len() })
    }

    pub fn finest(&self) -> Option<&DisparityLevel> {
        self.levels.first()
    }

    pub fn coarsest(&self) -> Option<&DisparityLevel> {
        self.levels.last()
    }

    pub fn rounded_arcsec(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.arcsec_rounded).collect()
    }
}

/// Level table at `distance_m` against the default 0.5 m reference.
pub fn build_level_table(profile: &DisplayProfile, distance_m: f64, n_levels: usize) -> Result<LevelTable> {
    LevelTable::build(profile, &ViewingGeometry::new(distance_m)?, n_levels)
}

pub fn pixel_pitch(profile: &DisplayProfile) -> Result<f64> {
    if !(profile.ppi.is_finite() && profile.ppi > 0.0) {
        return Err(Error::InvalidProfile("ppi must be a positive finite number"));
    }
    Ok(METERS_PER_INCH / profile.ppi)
}

/// Disparity of a `shift_px` displacement viewed from `distance_m`.
pub fn disparity_arcsec(shift_px: u32, profile: &DisplayProfile, distance_m: f64) -> Result<f64> {
    let pitch = pixel_pitch(profile)?;
    check_positive(distance_m, "distance must be positive")?;
    Ok(shift_px as f64 * pitch / distance_m * ARCSEC_PER_RADIAN)
}

/// Inverse of [`disparity_arcsec`], rounded to whole pixels.
pub fn shift_for_arcsec(arcsec: f64, profile: &DisplayProfile, distance_m: f64) -> Result<u32> {
    let pitch = pixel_pitch(profile)?;
    check_positive(distance_m, "distance must be positive")?;
    if !(arcsec.is_finite() && arcsec >= 0.0) {
        return Err(Error::InvalidGeometry("disparity must be finite and non-negative"));
    }
    Ok(round_half_up(arcsec / ARCSEC_PER_RADIAN * distance_m / pitch) as u32)
}

/// Integer multiplier `k = distance / reference` that keeps a pixel shift's
/// disparity constant when both the shift and the distance scale by `k`.
pub fn distance_scale_k(distance_m: f64, reference_m: f64) -> Result<u32> {
    check_positive(distance_m, "distance must be positive")?;
    check_positive(reference_m, "reference distance must be positive")?;
    let ratio = distance_m / reference_m;
    let nearest = round_half_up(ratio);
    if nearest >= 1.0 && libm::fabs(ratio - nearest) <= INTEGER_TOLERANCE {
        Ok(nearest as u32)
    } else {
        Err(Error::NotIntegerMultiple { ratio })
    }
}

/// Two-rod disparity `ipd * |dz| / z^2`, in arcsec.
pub fn hd_arcsec(ipd_m: f64, delta_z_m: f64, distance_m: f64) -> Result<f64> {
    check_positive(ipd_m, "interpupillary distance must be positive")?;
    check_positive(distance_m, "distance must be positive")?;
    if !delta_z_m.is_finite() {
        return Err(Error::InvalidGeometry("rod offset must be finite"));
    }
    Ok(ipd_m * libm::fabs(delta_z_m) / (distance_m * distance_m) * ARCSEC_PER_RADIAN)
}

/// Six signed rod offsets from one two-rod session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdMeasurement {
    pub delta_z_m: Vec<f64>,
    pub ipd_m: f64,
    pub distance_m: f64,
}

/// Mean of the per-setting disparities; above `ol_limit_arcsec` the result is
/// [`Acuity::OutsideLimits`].
pub fn hd_protocol(measurement: &HdMeasurement, ol_limit_arcsec: f64) -> Result<Acuity> {
    if measurement.delta_z_m.len() != HD_MEASURES {
        return Err(Error::ProtocolViolation {
            expected: HD_MEASURES,
            got: measurement.delta_z_m.len(),
        });
    }
    let mut total = 0.0;
    for &dz in &measurement.delta_z_m {
        total += hd_arcsec(measurement.ipd_m, dz, measurement.distance_m)?;
    }
    let mean = total / HD_MEASURES as f64;
    Ok(if mean > ol_limit_arcsec {
        Acuity::OutsideLimits
    } else {
        Acuity::Arcsec(mean)
    })
}

/// Dot side in pixels so that one dot subtends 1.32 arcmin at `distance_m`.
pub fn dot_size_px(profile: &DisplayProfile, distance_m: f64) -> Result<u32> {
    let pitch = pixel_pitch(profile)?;
    check_positive(distance_m, "distance must be positive")?;
    let side_m = distance_m * libm::tan(DOT_ANGLE_ARCMIN / 60.0 * core::f64::consts::PI / 180.0);
    Ok((round_half_up(side_m / pitch) as u32).max(1))
}

/// Figure diameter in pixels. The physical size is fixed (1.88 degrees at
/// 3 m), so the angular size shrinks with distance.
pub fn stimulus_size_px(profile: &DisplayProfile) -> Result<u32> {
    profile.validate()?;
    let needed = stimulus_diameter_px(profile)?;
    let available = profile.min_side_px();
    if needed > available {
        return Err(Error::StimulusTooLarge { needed, available });
    }
    Ok(needed)
}

pub(crate) fn stimulus_diameter_px(profile: &DisplayProfile) -> Result<u32> {
    let pitch = pixel_pitch(profile)?;
    let half_angle = STIMULUS_ANGLE_DEG / 2.0 * core::f64::consts::PI / 180.0;
    let side_m = 2.0 * STIMULUS_DESIGN_DISTANCE_M * libm::tan(half_angle);
    Ok(round_half_up(side_m / pitch) as u32)
}

/// Nearest integer, halves rounded up (inputs here are non-negative).
pub fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5)
}

fn check_positive(value: f64, message: &'static str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(message))
    }
}

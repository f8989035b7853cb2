use serde::{Deserialize, Serialize};

use super::WeightScheme;
use crate::geometry::round_half_up;
use crate::{Acuity, Error, Result};

/// Test levels seen at near (both instruments). Inputs snap to the nearest
/// of these before banding; equidistant inputs snap to the finer level.
pub const NEAR_LISTED_LEVELS: [f64; 17] = [
    15.0, 30.0, 40.0, 60.0, 79.0, 119.0, 120.0, 159.0, 198.0, 199.0, 238.0, 240.0, 278.0, 318.0, 357.0, 397.0, 480.0,
];
/// Upper bounds of near categories 1..=4; OL is category 5.
const NEAR_BAND_UPPER: [f64; 4] = [60.0, 120.0, 240.0, 480.0];
/// Inclusive upper bounds (integer arcsec) of far categories 1..=10; OL is 11.
pub const FAR_BAND_UPPER: [u32; 10] = [9, 17, 23, 29, 36, 43, 49, 55, 62, 66];

/// Ordinal scale a test's values are recoded onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Categories 1..=5.
    Near,
    /// Categories 1..=11.
    Far,
}

impl Scale {
    pub fn categories(self) -> usize {
        match self {
            Scale::Near => 5,
            Scale::Far => 11,
        }
    }

    /// Quadratic at near, where the steps grow unevenly; linear at far.
    pub fn weights(self) -> WeightScheme {
        match self {
            Scale::Near => WeightScheme::Quadratic,
            Scale::Far => WeightScheme::Linear,
        }
    }

    pub fn recode(self, value: Acuity) -> Result<usize> {
        match self {
            Scale::Near => recode_near(value),
            Scale::Far => recode_far(value),
        }
    }
}

/// Near values onto 1..=5: 15-60, 79-120, 159-240, 278-480, OL.
pub fn recode_near(value: Acuity) -> Result<usize> {
    let Acuity::Arcsec(v) = value else {
        return Ok(5);
    };
    if !(v.is_finite() && (0.0..=480.0).contains(&v)) {
        return Err(Error::UnmappableValue(v));
    }
    let mut snapped = NEAR_LISTED_LEVELS[0];
    for level in NEAR_LISTED_LEVELS {
        if libm::fabs(level - v) < libm::fabs(snapped - v) {
            snapped = level;
        }
    }
    let band = NEAR_BAND_UPPER.iter().position(|&upper| snapped <= upper).expect("snapped within 480");
    Ok(band + 1)
}

/// Far values onto 1..=11, after rounding to whole arcsec.
pub fn recode_far(value: Acuity) -> Result<usize> {
    let Acuity::Arcsec(v) = value else {
        return Ok(11);
    };
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::UnmappableValue(v));
    }
    let rounded = round_half_up(v);
    Ok(FAR_BAND_UPPER
        .iter()
        .position(|&upper| rounded <= upper as f64)
        .map_or(11, |band| band + 1))
}

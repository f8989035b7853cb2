//! Named display profiles.

use stereo_core::DisplayProfile;

use crate::{HarnessError, Result};

pub const DEFAULT_WIDTH_PX: u32 = 2048;
pub const DEFAULT_HEIGHT_PX: u32 = 1536;

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub ppi: f64,
    pub width_px: u32,
    pub height_px: u32,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "ipad-retina-264", ppi: 264.0, width_px: 2048, height_px: 1536 },
    Preset { name: "ipad-mini-326", ppi: 326.0, width_px: 2048, height_px: 1536 },
];

pub fn lookup(name: &str) -> Option<Preset> {
    let name = name.trim().to_ascii_lowercase();
    PRESETS.iter().copied().find(|p| p.name == name || p.name.ends_with(&format!("-{name}")))
}

/// A preset by name, or a bare ppi on the default screen size.
pub fn resolve(profile: Option<&str>, ppi: Option<f64>, size: Option<(u32, u32)>) -> Result<DisplayProfile> {
    let (ppi, (w, h)) = match (profile, ppi) {
        (Some(_), Some(_)) => return Err(HarnessError::Usage("give either a profile name or --ppi, not both".into())),
        (Some(name), None) => {
            let p = lookup(name).ok_or_else(|| HarnessError::Usage(format!("unknown display profile {name:?}")))?;
            (p.ppi, size.unwrap_or((p.width_px, p.height_px)))
        }
        (None, Some(ppi)) => (ppi, size.unwrap_or((DEFAULT_WIDTH_PX, DEFAULT_HEIGHT_PX))),
        (None, None) => return Err(HarnessError::Usage("a display profile or --ppi is required".into())),
    };
    Ok(DisplayProfile::new(ppi, w, h)?)
}

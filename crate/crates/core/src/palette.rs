//! Deterministic, distinct display colors for concepts.

use alloc::string::String;
use alloc::vec::Vec;

use crate::vocab::{ConceptId, ConceptVocabulary};

/// Golden-angle hue increment in degrees.
pub const HUE_STEP: f64 = 137.508;
pub const SATURATION: f64 = 0.8;
pub const VALUE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaletteEntry {
    pub concept_id: ConceptId,
    pub label: String,
    pub color: [u8; 3],
}

/// Hue of concept `id`, `id · 137.508° mod 360°`.
pub fn hue(id: ConceptId) -> f64 {
    libm::fmod(f64::from(id) * HUE_STEP, 360.0)
}

/// HSV (`h` in degrees, `s`, `v` in `[0, 1]`) to 8-bit RGB.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = libm::fmod(h, 360.0) / 60.0;
    let x = c * (1.0 - libm::fabs(libm::fmod(hp, 2.0) - 1.0));
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to_u8 = |t: f64| libm::round((t + m) * 255.0) as u8;
    [to_u8(r), to_u8(g), to_u8(b)]
}

pub fn concept_color(id: ConceptId) -> [u8; 3] {
    hsv_to_rgb(hue(id), SATURATION, VALUE)
}

/// One entry per concept, in id order.
pub fn palette(vocab: &ConceptVocabulary) -> Vec<PaletteEntry> {
    vocab
        .concepts()
        .iter()
        .map(|c| PaletteEntry { concept_id: c.id, label: c.label.clone(), color: concept_color(c.id) })
        .collect()
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::glyphs::{GlyphSet, CELL_H, CELL_W};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CANVAS_H: usize = 32;
pub const CANVAS_W: usize = 128;
pub const N_SLOTS: usize = 8;
pub const SLOT_W: usize = 14;
/// Left edge of slot 1.
pub const SLOT_X0: usize = 8;
/// Glyph cell inset inside its slot.
const GLYPH_INSET: usize = (SLOT_W - CELL_W) / 2;
const GLYPH_Y0: usize = (CANVAS_H - CELL_H) / 2;
pub const MAX_X_JITTER: i32 = 8;
pub const MAX_Y_JITTER: i32 = 4;

const CENTER_X: f32 = CANVAS_W as f32 / 2.0;
const CENTER_Y: f32 = CANVAS_H as f32 / 2.0;

/// Eight slot symbols; `None` is a blank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SlotString(pub [Option<u8>; N_SLOTS]);

impl SlotString {
    pub fn parse(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != N_SLOTS {
            return Err(Error::InvalidArgument(format!(
                "slot string {s:?} must have exactly {N_SLOTS} symbols"
            )));
        }
        let mut slots = [None; N_SLOTS];
        for (slot, ch) in slots.iter_mut().zip(chars) {
            *slot = GlyphSet::symbol_index(ch)
                .ok_or(Error::UnknownSymbol(ch))?
                .map(|i| i as u8);
        }
        Ok(SlotString(slots))
    }

    /// Place `word` starting at 0-based slot `offset`.
    pub fn place(word: &str, offset: usize) -> Result<Self> {
        let len = word.chars().count();
        if len == 0 || offset + len > N_SLOTS {
            return Err(Error::InvalidArgument(format!(
                "word {word:?} does not fit at slot offset {offset}"
            )));
        }
        let mut slots = [None; N_SLOTS];
        for (i, ch) in word.chars().enumerate() {
            slots[offset + i] = Some(
                GlyphSet::symbol_index(ch)
                    .flatten()
                    .ok_or(Error::UnknownSymbol(ch))? as u8,
            );
        }
        Ok(SlotString(slots))
    }

    pub fn blank() -> Self {
        SlotString([None; N_SLOTS])
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| (i, s as usize)))
    }

    pub fn n_symbols(&self) -> usize {
        self.0.iter().filter(|s| s.is_some()).count()
    }
}

impl fmt::Display for SlotString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.0 {
            let c = match s {
                Some(i) => GlyphSet::symbol_char(i as usize),
                None => '-',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scale {
    X100,
    X125,
    X150,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::X100, Scale::X125, Scale::X150];

    pub fn factor(self) -> f32 {
        match self {
            Scale::X100 => 1.0,
            Scale::X125 => 1.25,
            Scale::X150 => 1.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RenderSpec {
    pub slots: SlotString,
    pub x_jitter: i32,
    pub y_jitter: i32,
    pub scale: Scale,
    pub style: usize,
    pub alt_case: bool,
}

impl RenderSpec {
    /// Zero jitter, base scale, style 0, first case form.
    pub fn canonical(slots: SlotString) -> Self {
        RenderSpec {
            slots,
            x_jitter: 0,
            y_jitter: 0,
            scale: Scale::X100,
            style: 0,
            alt_case: false,
        }
    }
}

fn to_canvas(u: f32, center: f32, scale: f32, jitter: i32) -> f32 {
    center + scale * (u - center) + jitter as f32
}

fn from_canvas(p: f32, center: f32, scale: f32, jitter: i32) -> f32 {
    center + (p - jitter as f32 - center) / scale
}

/// Left edge of the glyph cell in 0-based slot `k`, unscaled.
pub fn glyph_x0(k: usize) -> usize {
    SLOT_X0 + SLOT_W * k + GLYPH_INSET
}

/// Whether the glyph cells of slots `first..=last` stay on the canvas at
/// `scale` for every jitter inside the allowed range.
pub fn span_fits(first: usize, last: usize, scale: Scale) -> bool {
    let s = scale.factor();
    let left = to_canvas(glyph_x0(first) as f32, CENTER_X, s, -MAX_X_JITTER);
    let right = to_canvas((glyph_x0(last) + CELL_W) as f32, CENTER_X, s, MAX_X_JITTER);
    let top = to_canvas(GLYPH_Y0 as f32, CENTER_Y, s, -MAX_Y_JITTER);
    let bottom = to_canvas((GLYPH_Y0 + CELL_H) as f32, CENTER_Y, s, MAX_Y_JITTER);
    left >= 0.0 && right <= CANVAS_W as f32 && top >= 0.0 && bottom <= CANVAS_H as f32
}

/// Render one stimulus: 1 x 32 x 128, background 1.0, ink 0.0.
///
/// Glyph bitmaps are scaled about the canvas center by nearest-neighbour
/// sampling at pixel centers, so at scale 1 with integer jitter a glyph is
/// copied exactly. Specs whose ink would leave the canvas are rejected.
pub fn render(glyphs: &GlyphSet, spec: &RenderSpec) -> Result<Tensor> {
    if spec.style >= glyphs.n_styles() {
        return Err(Error::InvalidArgument(format!(
            "style {} not available ({} styles)",
            spec.style,
            glyphs.n_styles()
        )));
    }
    let s = spec.scale.factor();
    let mut canvas = vec![1.0f32; CANVAS_H * CANVAS_W];
    for (k, symbol) in spec.slots.occupied() {
        let bitmap = glyphs.glyph(spec.style, spec.alt_case, symbol);
        let gx0 = glyph_x0(k) as f32;
        let gy0 = GLYPH_Y0 as f32;
        let px_lo = to_canvas(gx0, CENTER_X, s, spec.x_jitter).floor() as i32 - 1;
        let px_hi = to_canvas(gx0 + CELL_W as f32, CENTER_X, s, spec.x_jitter).ceil() as i32 + 1;
        let py_lo = to_canvas(gy0, CENTER_Y, s, spec.y_jitter).floor() as i32 - 1;
        let py_hi = to_canvas(gy0 + CELL_H as f32, CENTER_Y, s, spec.y_jitter).ceil() as i32 + 1;
        for py in py_lo..py_hi {
            let v = from_canvas(py as f32 + 0.5, CENTER_Y, s, spec.y_jitter) - gy0;
            if v < 0.0 || v >= CELL_H as f32 {
                continue;
            }
            let row = &bitmap.cells[v as usize];
            for px in px_lo..px_hi {
                let u = from_canvas(px as f32 + 0.5, CENTER_X, s, spec.x_jitter) - gx0;
                if u < 0.0 || u >= CELL_W as f32 || !row[u as usize] {
                    continue;
                }
                if px < 0 || py < 0 || px >= CANVAS_W as i32 || py >= CANVAS_H as i32 {
                    return Err(Error::Clipped(format!(
                        "{} at scale {} jitter ({}, {})",
                        spec.slots,
                        s,
                        spec.x_jitter,
                        spec.y_jitter
                    )));
                }
                canvas[py as usize * CANVAS_W + px as usize] = 0.0;
            }
        }
    }
    Tensor::new(vec![1, CANVAS_H, CANVAS_W], canvas)
}

/// Number of ink (0.0) pixels.
pub fn ink_count(image: &Tensor) -> usize {
    image.data().iter().filter(|&&v| v < 0.5).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimgen::glyphs::Script;
    use sha2::{Digest, Sha256};

    fn glyphs() -> GlyphSet {
        GlyphSet::new(Script::A)
    }

    #[test]
    fn blank_is_white() {
        let img = render(&glyphs(), &RenderSpec::canonical(SlotString::blank())).unwrap();
        assert_eq!(img.shape(), &[1, 32, 128]);
        assert!(img.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn slot_shift_is_fourteen_pixels() {
        let g = glyphs();
        let a = render(&g, &RenderSpec::canonical(SlotString::parse("Q-------").unwrap())).unwrap();
        let b = render(&g, &RenderSpec::canonical(SlotString::parse("-Q------").unwrap())).unwrap();
        for r in 0..CANVAS_H {
            for c in 0..CANVAS_W - SLOT_W {
                assert_eq!(a.at(&[0, r, c]), b.at(&[0, r, c + SLOT_W]));
            }
        }
        assert!(ink_count(&a) > 0);
        assert_eq!(ink_count(&a), ink_count(&b));
    }

    #[test]
    fn slot_shift_scales_with_size() {
        let g = glyphs();
        let mut spec = RenderSpec::canonical(SlotString::parse("---K----").unwrap());
        spec.scale = Scale::X150;
        let a = render(&g, &spec).unwrap();
        spec.slots = SlotString::parse("----K---").unwrap();
        let b = render(&g, &spec).unwrap();
        for r in 0..CANVAS_H {
            for c in 0..CANVAS_W - 21 {
                assert_eq!(a.at(&[0, r, c]), b.at(&[0, r, c + 21]));
            }
        }
    }

    #[test]
    fn deterministic_bytes() {
        let g = glyphs();
        let spec = RenderSpec {
            slots: SlotString::parse("--WORD--").unwrap(),
            x_jitter: -3,
            y_jitter: 2,
            scale: Scale::X125,
            style: 1,
            alt_case: true,
        };
        let hash = |t: &Tensor| {
            let mut h = Sha256::new();
            for v in t.data() {
                h.update(v.to_le_bytes());
            }
            h.finalize().to_vec()
        };
        assert_eq!(hash(&render(&g, &spec).unwrap()), hash(&render(&g, &spec).unwrap()));
    }

    #[test]
    fn unknown_symbol_rejected() {
        assert!(matches!(SlotString::parse("AB?-----"), Err(Error::UnknownSymbol('?'))));
        assert!(SlotString::parse("ABC").is_err());
    }

    #[test]
    fn base_scale_never_clips() {
        let g = glyphs();
        let full = SlotString::parse("WMWMWMWM").unwrap();
        for jx in [-MAX_X_JITTER, MAX_X_JITTER] {
            for jy in [-MAX_Y_JITTER, MAX_Y_JITTER] {
                let spec = RenderSpec {
                    x_jitter: jx,
                    y_jitter: jy,
                    style: 1,
                    ..RenderSpec::canonical(full)
                };
                assert!(render(&g, &spec).is_ok());
            }
        }
        assert!(span_fits(0, 7, Scale::X100));
        assert!(!span_fits(0, 7, Scale::X150));
    }

    #[test]
    fn oversized_spec_is_rejected() {
        let spec = RenderSpec {
            scale: Scale::X150,
            x_jitter: -8,
            ..RenderSpec::canonical(SlotString::parse("M-------").unwrap())
        };
        assert!(matches!(render(&glyphs(), &spec), Err(Error::Clipped(_))));
    }

    #[test]
    fn display_roundtrip() {
        let s = SlotString::parse("oxxx----").unwrap();
        assert_eq!(s.to_string(), "OXXX----");
        assert_eq!(SlotString::place("WORD", 2).unwrap().to_string(), "--WORD--");
    }
}

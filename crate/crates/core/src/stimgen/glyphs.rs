//! Bitmap alphabets.
//!
//! Glyphs are defined as stroke skeletons on a 5 x 7 lattice (x 0..4,
//! y 0..6, y down) and rasterized once into 10 x 12 cells. A style is a
//! stroke radius plus a horizontal shear, so every style of a script shares
//! the same skeletons and cell size.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const CELL_W: usize = 10;
pub const CELL_H: usize = 12;
pub const N_SYMBOLS: usize = 26;
pub const N_STYLES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Script {
    A,
    B,
}

impl Script {
    pub fn name(self) -> &'static str {
        match self {
            Script::A => "A",
            Script::B => "B",
        }
    }
}

/// One rasterized glyph, row-major, `true` = ink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmap {
    pub cells: [[bool; CELL_W]; CELL_H],
}

impl Bitmap {
    pub fn ink(&self) -> usize {
        self.cells.iter().flatten().filter(|&&b| b).count()
    }
}

#[derive(Clone, Copy, Debug)]
struct Style {
    radius: f32,
    shear: f32,
}

/// Styles 0 and 1 are used for training, style 2 only for testing.
const STYLES: [Style; N_STYLES] = [
    Style {
        radius: 0.62,
        shear: 0.0,
    },
    Style {
        radius: 1.05,
        shear: 0.0,
    },
    Style {
        radius: 0.85,
        shear: 0.22,
    },
];

type Stroke = &'static [(f32, f32)];

const UPPER: [&[Stroke]; N_SYMBOLS] = [
    &[&[(0., 6.), (0., 2.), (2., 0.), (4., 2.), (4., 6.)], &[(0., 3.5), (4., 3.5)]],
    &[
        &[(0., 0.), (0., 6.), (3., 6.), (4., 5.), (4., 4.), (3., 3.), (0., 3.)],
        &[(0., 0.), (3., 0.), (4., 1.), (4., 2.), (3., 3.)],
    ],
    &[&[(4., 1.), (3., 0.), (1., 0.), (0., 1.), (0., 5.), (1., 6.), (3., 6.), (4., 5.)]],
    &[&[(0., 0.), (0., 6.), (2., 6.), (4., 4.), (4., 2.), (2., 0.), (0., 0.)]],
    &[&[(4., 0.), (0., 0.), (0., 6.), (4., 6.)], &[(0., 3.), (3., 3.)]],
    &[&[(4., 0.), (0., 0.), (0., 6.)], &[(0., 3.), (3., 3.)]],
    &[&[
        (4., 1.),
        (3., 0.),
        (1., 0.),
        (0., 1.),
        (0., 5.),
        (1., 6.),
        (3., 6.),
        (4., 5.),
        (4., 3.),
        (2., 3.),
    ]],
    &[&[(0., 0.), (0., 6.)], &[(4., 0.), (4., 6.)], &[(0., 3.), (4., 3.)]],
    &[&[(1., 0.), (3., 0.)], &[(2., 0.), (2., 6.)], &[(1., 6.), (3., 6.)]],
    &[&[(2., 0.), (4., 0.)], &[(3., 0.), (3., 5.), (2., 6.), (1., 6.), (0., 5.)]],
    &[&[(0., 0.), (0., 6.)], &[(4., 0.), (0., 4.)], &[(1., 3.), (4., 6.)]],
    &[&[(0., 0.), (0., 6.), (4., 6.)]],
    &[&[(0., 6.), (0., 0.), (2., 3.), (4., 0.), (4., 6.)]],
    &[&[(0., 6.), (0., 0.), (4., 6.), (4., 0.)]],
    &[&[
        (1., 0.),
        (3., 0.),
        (4., 1.),
        (4., 5.),
        (3., 6.),
        (1., 6.),
        (0., 5.),
        (0., 1.),
        (1., 0.),
    ]],
    &[&[(0., 6.), (0., 0.), (3., 0.), (4., 1.), (4., 2.), (3., 3.), (0., 3.)]],
    &[
        &[
            (1., 0.),
            (3., 0.),
            (4., 1.),
            (4., 5.),
            (3., 6.),
            (1., 6.),
            (0., 5.),
            (0., 1.),
            (1., 0.),
        ],
        &[(2., 4.), (4., 6.)],
    ],
    &[
        &[(0., 6.), (0., 0.), (3., 0.), (4., 1.), (4., 2.), (3., 3.), (0., 3.)],
        &[(2., 3.), (4., 6.)],
    ],
    &[&[
        (4., 1.),
        (3., 0.),
        (1., 0.),
        (0., 1.),
        (0., 2.),
        (1., 3.),
        (3., 3.),
        (4., 4.),
        (4., 5.),
        (3., 6.),
        (1., 6.),
        (0., 5.),
    ]],
    &[&[(0., 0.), (4., 0.)], &[(2., 0.), (2., 6.)]],
    &[&[(0., 0.), (0., 5.), (1., 6.), (3., 6.), (4., 5.), (4., 0.)]],
    &[&[(0., 0.), (2., 6.), (4., 0.)]],
    &[&[(0., 0.), (1., 6.), (2., 3.), (3., 6.), (4., 0.)]],
    &[&[(0., 0.), (4., 6.)], &[(4., 0.), (0., 6.)]],
    &[&[(0., 0.), (2., 3.), (4., 0.)], &[(2., 3.), (2., 6.)]],
    &[&[(0., 0.), (4., 0.), (0., 6.), (4., 6.)]],
];

const LOWER: [&[Stroke]; N_SYMBOLS] = [
    &[
        &[(1., 2.), (3., 2.), (4., 3.), (4., 6.)],
        &[(4., 4.), (1., 4.), (0., 5.), (1., 6.), (4., 6.)],
    ],
    &[&[(0., 0.), (0., 6.), (3., 6.), (4., 5.), (4., 3.), (3., 2.), (0., 2.)]],
    &[&[(4., 2.), (1., 2.), (0., 3.), (0., 5.), (1., 6.), (4., 6.)]],
    &[&[(4., 0.), (4., 6.), (1., 6.), (0., 5.), (0., 3.), (1., 2.), (4., 2.)]],
    &[&[
        (0., 4.),
        (4., 4.),
        (4., 3.),
        (3., 2.),
        (1., 2.),
        (0., 3.),
        (0., 5.),
        (1., 6.),
        (4., 6.),
    ]],
    &[&[(4., 0.), (3., 0.), (2., 1.), (2., 6.)], &[(1., 3.), (3., 3.)]],
    &[&[
        (4., 4.5),
        (1., 4.5),
        (0., 3.5),
        (0., 3.),
        (1., 2.),
        (4., 2.),
        (4., 6.),
        (1., 6.),
    ]],
    &[&[(0., 0.), (0., 6.)], &[(0., 3.), (1., 2.), (3., 2.), (4., 3.), (4., 6.)]],
    &[&[(2., 2.5), (2., 6.)], &[(2., 0.), (2., 0.6)]],
    &[&[(3., 2.5), (3., 5.), (2., 6.), (0., 6.)], &[(3., 0.), (3., 0.6)]],
    &[&[(0., 0.), (0., 6.)], &[(3.5, 2.), (0., 5.)], &[(1.2, 4.), (3.5, 6.)]],
    &[&[(1., 0.), (2., 0.), (2., 6.)], &[(1., 6.), (3., 6.)]],
    &[
        &[(0., 6.), (0., 2.)],
        &[(0., 3.), (1., 2.), (2., 3.), (2., 6.)],
        &[(2., 3.), (3., 2.), (4., 3.), (4., 6.)],
    ],
    &[&[(0., 6.), (0., 2.)], &[(0., 3.), (1., 2.), (3., 2.), (4., 3.), (4., 6.)]],
    &[&[
        (1., 2.),
        (3., 2.),
        (4., 3.),
        (4., 5.),
        (3., 6.),
        (1., 6.),
        (0., 5.),
        (0., 3.),
        (1., 2.),
    ]],
    &[&[(0., 6.), (0., 2.), (3., 2.), (4., 3.), (3., 4.), (0., 4.)]],
    &[&[(4., 6.), (4., 2.), (1., 2.), (0., 3.), (1., 4.), (4., 4.)]],
    &[&[(0., 6.), (0., 2.)], &[(0., 4.), (2., 2.), (4., 2.)]],
    &[&[
        (4., 2.),
        (1., 2.),
        (0., 3.),
        (1., 4.),
        (3., 4.),
        (4., 5.),
        (3., 6.),
        (0., 6.),
    ]],
    &[&[(2., 0.), (2., 5.), (3., 6.), (4., 6.)], &[(0., 2.), (4., 2.)]],
    &[&[(0., 2.), (0., 5.), (1., 6.), (3., 6.), (4., 5.)], &[(4., 2.), (4., 6.)]],
    &[&[(0., 2.), (2., 6.), (4., 2.)]],
    &[&[(0., 2.), (1., 6.), (2., 4.), (3., 6.), (4., 2.)]],
    &[&[(0., 2.), (4., 6.)], &[(4., 2.), (0., 6.)]],
    &[&[(0., 2.), (2., 4.5)], &[(4., 2.), (1., 6.)]],
    &[&[(0., 2.), (4., 2.), (0., 6.), (4., 6.)]],
];

// Script B symbols combine one upper and one lower component built from
// hooks, loops and zigzags that the Latin skeletons above never use.
const B_UPPER: [Stroke; 6] = [
    &[(0., 2.5), (1., 0.5), (2., 2.5), (3., 0.5), (4., 2.5)],
    &[(0.5, 3.), (0.5, 1.), (1.5, 0.), (3., 0.), (3.5, 1.), (2.5, 2.)],
    &[(0., 0.), (1.5, 1.5), (0., 3.)],
    &[(1., 2.5), (3., 0.5), (4., 1.5), (2., 2.5)],
    &[(4., 0.), (2.5, 1.5), (4., 3.)],
    &[(0., 1.), (1., 0.), (2., 1.), (3., 0.), (4., 1.)],
];

const B_LOWER: [Stroke; 5] = [
    &[(0., 3.5), (1., 5.5), (2., 3.5), (3., 5.5), (4., 3.5)],
    &[(2., 3.), (3.5, 4.), (3.5, 5.5), (1.5, 6.), (0.5, 5.)],
    &[(0., 6.), (2., 3.5), (4., 6.)],
    &[(4., 3.5), (1.5, 4.5), (4., 6.)],
    &[(0.5, 4.), (1.5, 6.), (2.5, 4.), (3.5, 6.)],
];

fn script_b_strokes(symbol: usize) -> [Stroke; 2] {
    // 30 combinations, first 26 used; the mapping is a fixed bijection.
    let combo = (symbol * 7) % 30;
    [B_UPPER[combo / 5], B_LOWER[combo % 5]]
}

fn dist_to_segment(p: (f32, f32), a: (f32, f32), b: (f32, f32)) -> f32 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

fn rasterize(strokes: &[Stroke], style: Style, mirror: bool) -> Bitmap {
    // lattice -> pixel coordinates: x in [1, 8] (mirrored if requested), y in [1, 10.5]
    let map = |(x, y): (f32, f32)| {
        let x = if mirror { 4.0 - x } else { x };
        let py = 0.75 + y * 1.75;
        let px = 1.0 + x * 1.75 + style.shear * (6.0 - y) * 1.2;
        (px, py)
    };
    let mut cells = [[false; CELL_W]; CELL_H];
    for (r, row) in cells.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            let p = (c as f32 + 0.5, r as f32 + 0.5);
            *cell = strokes.iter().any(|s| {
                if s.len() == 1 {
                    return dist_to_segment(p, map(s[0]), map(s[0])) <= style.radius;
                }
                s.windows(2)
                    .any(|w| dist_to_segment(p, map(w[0]), map(w[1])) <= style.radius)
            });
        }
    }
    Bitmap { cells }
}

/// All glyphs of one script: `[style][variant][symbol]`, variant 1 being the
/// second case form.
#[derive(Clone, Debug)]
pub struct GlyphSet {
    script: Script,
    glyphs: Vec<[Vec<Bitmap>; 2]>,
}

impl GlyphSet {
    pub fn new(script: Script) -> Self {
        let glyphs = STYLES
            .iter()
            .map(|&style| {
                let variant = |alt: bool| -> Vec<Bitmap> {
                    (0..N_SYMBOLS)
                        .map(|s| match script {
                            Script::A => rasterize(if alt { LOWER[s] } else { UPPER[s] }, style, false),
                            Script::B => rasterize(&script_b_strokes(s), style, alt),
                        })
                        .collect()
                };
                [variant(false), variant(true)]
            })
            .collect();
        GlyphSet { script, glyphs }
    }

    pub fn script(&self) -> Script {
        self.script
    }

    pub fn n_styles(&self) -> usize {
        self.glyphs.len()
    }

    pub fn glyph(&self, style: usize, alt_case: bool, symbol: usize) -> &Bitmap {
        &self.glyphs[style][alt_case as usize][symbol]
    }

    /// Symbol index for a slot character; letters name symbols in both
    /// scripts (case-insensitive), `-` is the blank.
    pub fn symbol_index(ch: char) -> Option<Option<usize>> {
        match ch {
            '-' => Some(None),
            'A'..='Z' => Some(Some(ch as usize - 'A' as usize)),
            'a'..='z' => Some(Some(ch as usize - 'a' as usize)),
            _ => None,
        }
    }

    pub fn symbol_char(symbol: usize) -> char {
        (b'A' + symbol as u8) as char
    }

    /// Sheet of every glyph of one style/variant as a binary PGM (P5),
    /// 26 cells in a row separated by one blank column.
    pub fn sheet_pgm(&self, style: usize, alt_case: bool) -> Vec<u8> {
        let w = N_SYMBOLS * (CELL_W + 1);
        let mut pix = vec![255u8; w * CELL_H];
        for s in 0..N_SYMBOLS {
            let g = self.glyph(style, alt_case, s);
            for r in 0..CELL_H {
                for c in 0..CELL_W {
                    if g.cells[r][c] {
                        pix[r * w + s * (CELL_W + 1) + c] = 0;
                    }
                }
            }
        }
        let mut out = String::new();
        let _ = write!(out, "P5\n{w} {CELL_H}\n255\n");
        let mut bytes = out.into_bytes();
        bytes.extend_from_slice(&pix);
        bytes
    }
}

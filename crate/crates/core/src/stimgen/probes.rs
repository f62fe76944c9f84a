use rand::Rng;

use super::dataset::sample_word_spec;
use super::glyphs::{GlyphSet, N_STYLES, N_SYMBOLS};
use super::render::{render, RenderSpec, SlotString, N_SLOTS};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::tensor::Tensor;

pub const FACTORIAL_POSITIONS: usize = 5;
pub const FACTORIAL_ORDINALS: usize = 4;
pub const SPACED_POSITIONS: usize = 4;
pub const SPACED_ORDINALS: usize = 3;

/// Probe images with their (word_position, ordinal) cell, both 1-based,
/// listed row-major.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pub slots: Vec<SlotString>,
    pub cells: Vec<(usize, usize)>,
    pub images: Vec<Tensor>,
}

impl ProbeSet {
    fn push(&mut self, glyphs: &GlyphSet, slots: SlotString, cell: (usize, usize)) -> Result<()> {
        self.images.push(render(glyphs, &RenderSpec::canonical(slots))?);
        self.slots.push(slots);
        self.cells.push(cell);
        Ok(())
    }

    fn empty() -> Self {
        ProbeSet {
            slots: Vec::new(),
            cells: Vec::new(),
            images: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

fn check_pair(preferred: usize, unpreferred: usize) -> Result<()> {
    if preferred >= N_SYMBOLS || unpreferred >= N_SYMBOLS {
        return Err(Error::InvalidArgument("symbol index out of range".into()));
    }
    if preferred == unpreferred {
        return Err(Error::InvalidArgument(
            "preferred and unpreferred symbols must differ".into(),
        ));
    }
    Ok(())
}

pub fn factorial_slots(preferred: usize, unpreferred: usize, w: usize, o: usize) -> SlotString {
    let mut slots = [None; N_SLOTS];
    for i in 0..FACTORIAL_ORDINALS {
        let sym = if i + 1 == o { preferred } else { unpreferred };
        slots[w - 1 + i] = Some(sym as u8);
    }
    SlotString(slots)
}

pub fn spaced_slots(preferred: usize, unpreferred: usize, w: usize, o: usize) -> SlotString {
    let mut slots = [None; N_SLOTS];
    for i in 0..SPACED_ORDINALS {
        let sym = if i + 1 == o { preferred } else { unpreferred };
        slots[w - 1 + 2 * i] = Some(sym as u8);
    }
    SlotString(slots)
}

/// 5 x 4 design: a four-letter string at word position w (slots w..w+3)
/// with the preferred symbol at ordinal o.
pub fn factorial_probe(glyphs: &GlyphSet, preferred: usize, unpreferred: usize) -> Result<ProbeSet> {
    check_pair(preferred, unpreferred)?;
    let mut set = ProbeSet::empty();
    for w in 1..=FACTORIAL_POSITIONS {
        for o in 1..=FACTORIAL_ORDINALS {
            set.push(glyphs, factorial_slots(preferred, unpreferred, w, o), (w, o))?;
        }
    }
    Ok(set)
}

/// 4 x 3 design: three letters separated by blanks, spanning slots w..w+4.
pub fn spaced_probe(glyphs: &GlyphSet, preferred: usize, unpreferred: usize) -> Result<ProbeSet> {
    check_pair(preferred, unpreferred)?;
    let mut set = ProbeSet::empty();
    for w in 1..=SPACED_POSITIONS {
        for o in 1..=SPACED_ORDINALS {
            set.push(glyphs, spaced_slots(preferred, unpreferred, w, o), (w, o))?;
        }
    }
    Ok(set)
}

/// Every symbol alone at every slot, symbol-major.
pub fn letter_grid(glyphs: &GlyphSet) -> Result<Vec<Tensor>> {
    let mut images = Vec::with_capacity(N_SYMBOLS * N_SLOTS);
    for symbol in 0..N_SYMBOLS {
        for slot in 0..N_SLOTS {
            let mut slots = [None; N_SLOTS];
            slots[slot] = Some(symbol as u8);
            images.push(render(glyphs, &RenderSpec::canonical(SlotString(slots)))?);
        }
    }
    Ok(images)
}

/// All ordered pairs of the first `n_symbols` symbols at slots 4 and 5.
pub fn bigram_set(glyphs: &GlyphSet, n_symbols: usize) -> Result<Vec<Tensor>> {
    if n_symbols == 0 || n_symbols > N_SYMBOLS {
        return Err(Error::InvalidArgument(format!(
            "n_symbols must be in 1..={N_SYMBOLS}"
        )));
    }
    let mut out = Vec::with_capacity(n_symbols * n_symbols);
    for a in 0..n_symbols {
        for b in 0..n_symbols {
            let mut slots = [None; N_SLOTS];
            slots[3] = Some(a as u8);
            slots[4] = Some(b as u8);
            out.push(render(glyphs, &RenderSpec::canonical(SlotString(slots)))?);
        }
    }
    Ok(out)
}

/// Render the listed two-symbol strings at slots 4 and 5.
pub fn bigram_images(glyphs: &GlyphSet, bigrams: &[String]) -> Result<Vec<Tensor>> {
    bigrams
        .iter()
        .map(|b| {
            if b.chars().count() != 2 {
                return Err(Error::InvalidArgument(format!("{b:?} is not a bigram")));
            }
            render(glyphs, &RenderSpec::canonical(SlotString::place(b, 3)?))
        })
        .collect()
}

pub fn center_offset(len: usize) -> usize {
    (N_SLOTS - len.min(N_SLOTS)) / 2
}

/// A word centered on the slot grid in canonical style.
pub fn centered_word(glyphs: &GlyphSet, word: &str) -> Result<Tensor> {
    let len = word.chars().count();
    render(glyphs, &RenderSpec::canonical(SlotString::place(word, center_offset(len))?))
}

/// `n` word images drawn from `words` with random placement in any style.
pub fn random_word_images(
    glyphs: &GlyphSet,
    words: &[String],
    n: usize,
    seed: u64,
) -> Result<Vec<Tensor>> {
    if words.is_empty() {
        return Err(Error::InvalidArgument("empty word list".into()));
    }
    let mut rng = substream(seed, "selection-words");
    (0..n)
        .map(|_| {
            let w = &words[rng.random_range(0..words.len())];
            let style = rng.random_range(0..N_STYLES);
            render(glyphs, &sample_word_spec(w, style, &mut rng)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimgen::glyphs::Script;
    use crate::stimgen::render::{glyph_x0, ink_count, CANVAS_W};

    const O: usize = 14;
    const X: usize = 23;

    #[test]
    fn factorial_layout() {
        let g = GlyphSet::new(Script::A);
        let p = factorial_probe(&g, O, X).unwrap();
        assert_eq!(p.len(), 20);
        assert_eq!(p.slots[0].to_string(), "OXXX----");
        assert_eq!(p.cells[19], (5, 4));
        assert_eq!(p.slots[19].to_string(), "----XXXO");
        let ink = ink_count(&p.images[0]);
        assert!(p.images.iter().all(|im| ink_count(im) == ink));
        for s in &p.slots {
            assert_eq!(s.occupied().filter(|&(_, sym)| sym == O).count(), 1);
        }
    }

    #[test]
    fn spaced_layout() {
        let g = GlyphSet::new(Script::A);
        let p = spaced_probe(&g, O, X).unwrap();
        assert_eq!(p.len(), 12);
        assert_eq!(p.slots[1].to_string(), "X-O-X---");
        assert_eq!(p.cells[9], (4, 1));
        assert_eq!(p.slots[9].to_string(), "---O-X-X");
        assert!(p.slots.iter().all(|s| s.n_symbols() == 3));
    }

    #[test]
    fn probe_rejects_same_symbol() {
        let g = GlyphSet::new(Script::A);
        assert!(factorial_probe(&g, 3, 3).is_err());
    }

    #[test]
    fn letter_grid_geometry() {
        for script in [Script::A, Script::B] {
            let g = GlyphSet::new(script);
            let grid = letter_grid(&g).unwrap();
            assert_eq!(grid.len(), 208);
            let img = &grid[2];
            let (lo, hi) = (glyph_x0(2), glyph_x0(2) + 10);
            for (i, &v) in img.data().iter().enumerate() {
                if v < 0.5 {
                    let x = i % CANVAS_W;
                    assert!((lo..hi).contains(&x));
                }
            }
            assert!(ink_count(img) > 0);
        }
    }

    #[test]
    fn bigrams() {
        let g = GlyphSet::new(Script::A);
        let set = bigram_set(&g, 25).unwrap();
        assert_eq!(set.len(), 625);
        let aa = bigram_images(&g, &["AA".to_string()]).unwrap();
        assert_eq!(aa[0], set[0]);
        assert!(bigram_set(&g, 27).is_err());
    }

    #[test]
    fn centering() {
        assert_eq!(center_offset(4), 2);
        assert_eq!(center_offset(3), 2);
        assert_eq!(center_offset(8), 0);
    }
}

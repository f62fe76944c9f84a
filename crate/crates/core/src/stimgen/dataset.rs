use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::glyphs::GlyphSet;
use super::render::{render, span_fits, RenderSpec, Scale, SlotString, CANVAS_H, CANVAS_W, MAX_X_JITTER, MAX_Y_JITTER, N_SLOTS};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::tensor::lxt::read_u32;
use crate::tensor::Tensor;

pub const TRAIN_STYLES: [usize; 2] = [0, 1];
pub const TEST_STYLE: usize = 2;
pub const IMAGE_LEN: usize = CANVAS_H * CANVAS_W;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Images stored contiguously (count x 1 x 32 x 128) with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub pixels: Vec<f32>,
    pub labels: Vec<u32>,
    /// Glyph style per image; `None` for non-text stimuli.
    pub styles: Vec<Option<u8>>,
    pub class_names: Vec<String>,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(class_names: Vec<String>, split: Split) -> Self {
        LabeledDataset {
            pixels: Vec::new(),
            labels: Vec::new(),
            styles: Vec::new(),
            class_names,
            split,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f32] {
        &self.pixels[i * IMAGE_LEN..(i + 1) * IMAGE_LEN]
    }

    pub fn image_tensor(&self, i: usize) -> Tensor {
        Tensor::new(vec![1, CANVAS_H, CANVAS_W], self.image(i).to_vec()).expect("image size")
    }

    pub fn push(&mut self, image: &Tensor, label: u32, style: Option<u8>) {
        assert_eq!(image.len(), IMAGE_LEN);
        assert!((label as usize) < self.class_names.len());
        self.pixels.extend_from_slice(image.data());
        self.labels.push(label);
        self.styles.push(style);
    }

    pub fn count_label(&self, label: u32) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Write the LXDS binary to `path` and its JSON sidecar next to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::with_capacity(24 + self.len() * (4 + IMAGE_LEN * 4));
        out.extend_from_slice(LXDS_MAGIC);
        for v in [LXDS_VERSION, self.len() as u32, 1, CANVAS_H as u32, CANVAS_W as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for i in 0..self.len() {
            out.extend_from_slice(&self.labels[i].to_le_bytes());
            for v in self.image(i) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;
        let side = Sidecar {
            format: "LXDS".into(),
            version: LXDS_VERSION,
            count: self.len(),
            class_names: self.class_names.clone(),
            split: self.split,
            styles: self.styles.clone(),
        };
        let sp = sidecar_path(path);
        fs::write(&sp, serde_json::to_vec_pretty(&side)?).map_err(|e| Error::io(&sp, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let sp = sidecar_path(path);
        let side: Sidecar =
            serde_json::from_slice(&fs::read(&sp).map_err(|e| Error::io(&sp, e))?)?;
        let bad = |d: String| Error::Format {
            kind: "LXDS",
            detail: d,
        };
        if bytes.len() < 4 || &bytes[..4] != LXDS_MAGIC {
            return Err(bad("missing LXDS magic".into()));
        }
        let mut at = 4;
        let mut header = [0u32; 5];
        for h in header.iter_mut() {
            *h = read_u32(&bytes, &mut at).ok_or_else(|| bad("truncated header".into()))?;
        }
        let [version, count, c, h, w] = header;
        if version != LXDS_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        if (c, h, w) != (1, CANVAS_H as u32, CANVAS_W as u32) {
            return Err(bad(format!("unexpected image dims {c}x{h}x{w}")));
        }
        let count = count as usize;
        let rec = 4 + IMAGE_LEN * 4;
        if bytes.len() - at != count * rec {
            return Err(bad(format!(
                "payload has {} bytes, {count} records need {}",
                bytes.len() - at,
                count * rec
            )));
        }
        if side.count != count || side.styles.len() != count {
            return Err(bad("sidecar count disagrees with binary".into()));
        }
        let mut ds = LabeledDataset::new(side.class_names, side.split);
        ds.pixels.reserve(count * IMAGE_LEN);
        for r in 0..count {
            let base = at + r * rec;
            let label = u32::from_le_bytes(bytes[base..base + 4].try_into().unwrap());
            if label as usize >= ds.class_names.len() {
                return Err(bad(format!("label {label} out of range")));
            }
            ds.labels.push(label);
            ds.pixels.extend(
                bytes[base + 4..base + rec]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            );
        }
        ds.styles = side.styles;
        Ok(ds)
    }
}

pub const LXDS_MAGIC: &[u8; 4] = b"LXDS";
pub const LXDS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    version: u32,
    count: usize,
    class_names: Vec<String>,
    split: Split,
    styles: Vec<Option<u8>>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Scales at which a word of `len` symbols fits somewhere on the slot grid.
fn feasible_placements(len: usize) -> Vec<(Scale, Vec<usize>)> {
    Scale::ALL
        .iter()
        .filter_map(|&scale| {
            let offsets: Vec<usize> = (0..=N_SLOTS - len)
                .filter(|&o| span_fits(o, o + len - 1, scale))
                .collect();
            (!offsets.is_empty()).then_some((scale, offsets))
        })
        .collect()
}

/// Draw one random rendering of `word`.
pub fn sample_word_spec(word: &str, style: usize, rng: &mut impl Rng) -> Result<RenderSpec> {
    let len = word.chars().count();
    if !(1..=N_SLOTS).contains(&len) {
        return Err(Error::InvalidArgument(format!(
            "word {word:?} must have 1..={N_SLOTS} symbols"
        )));
    }
    let placements = feasible_placements(len);
    let (scale, offsets) = &placements[rng.random_range(0..placements.len())];
    let offset = offsets[rng.random_range(0..offsets.len())];
    Ok(RenderSpec {
        slots: SlotString::place(word, offset)?,
        x_jitter: rng.random_range(-MAX_X_JITTER..=MAX_X_JITTER),
        y_jitter: rng.random_range(-MAX_Y_JITTER..=MAX_Y_JITTER),
        scale: *scale,
        style,
        alt_case: rng.random_bool(0.5),
    })
}

/// Train/test word datasets. Training images use styles 0 and 1, test
/// images style 2; position, scale, jitter and case are drawn per image.
pub fn build_word_dataset(
    glyphs: &GlyphSet,
    words: &[String],
    n_train_per_word: usize,
    n_test_per_word: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    for w in words {
        let len = w.chars().count();
        if len > N_SLOTS {
            return Err(Error::InvalidArgument(format!(
                "word {w:?} is longer than {N_SLOTS} symbols"
            )));
        }
        if len == 0 {
            return Err(Error::InvalidArgument("empty word".into()));
        }
    }
    let names: Vec<String> = words.to_vec();
    let mut train = LabeledDataset::new(names.clone(), Split::Train);
    let mut test = LabeledDataset::new(names, Split::Test);
    let mut rng = substream(seed, &format!("words-{}", glyphs.script().name()));
    for (label, w) in words.iter().enumerate() {
        for _ in 0..n_train_per_word {
            let style = TRAIN_STYLES[rng.random_range(0..TRAIN_STYLES.len())];
            let spec = sample_word_spec(w, style, &mut rng)?;
            train.push(&render(glyphs, &spec)?, label as u32, Some(style as u8));
        }
        for _ in 0..n_test_per_word {
            let spec = sample_word_spec(w, TEST_STYLE, &mut rng)?;
            test.push(&render(glyphs, &spec)?, label as u32, Some(TEST_STYLE as u8));
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimgen::glyphs::Script;
    use std::collections::HashSet;

    fn words(n: usize) -> Vec<String> {
        crate::stimgen::words::WORDS[..n].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counts_and_split_rule() {
        let g = GlyphSet::new(Script::A);
        let (train, test) = build_word_dataset(&g, &words(20), 6, 2, 3).unwrap();
        assert_eq!(train.len(), 120);
        assert_eq!(test.len(), 40);
        for l in 0..20 {
            assert_eq!(train.count_label(l), 6);
            assert_eq!(test.count_label(l), 2);
        }
        let train_styles: HashSet<_> = train.styles.iter().collect();
        let test_styles: HashSet<_> = test.styles.iter().collect();
        assert!(train_styles.is_disjoint(&test_styles));
        assert_eq!(test_styles.len(), 1);
    }

    #[test]
    fn full_default_set_counts() {
        let g = GlyphSet::new(Script::A);
        let (train, _) = build_word_dataset(
            &g,
            &crate::stimgen::words::WORDS.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            60,
            0,
            1,
        )
        .unwrap();
        assert_eq!(train.len(), 12_000);
        assert!((0..200).all(|l| train.count_label(l) == 60));
    }

    #[test]
    fn same_seed_same_dataset() {
        let g = GlyphSet::new(Script::B);
        let a = build_word_dataset(&g, &words(10), 3, 1, 9).unwrap();
        let b = build_word_dataset(&g, &words(10), 3, 1, 9).unwrap();
        let c = build_word_dataset(&g, &words(10), 3, 1, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0.pixels, c.0.pixels);
    }

    #[test]
    fn too_long_word_rejected() {
        let g = GlyphSet::new(Script::A);
        assert!(build_word_dataset(&g, &["ABCDEFGHI".to_string()], 1, 1, 0).is_err());
    }

    #[test]
    fn every_length_has_a_placement() {
        for len in 1..=8 {
            assert!(!feasible_placements(len).is_empty(), "{len}");
        }
        // an 8-letter word only fits at base scale on the full grid
        let p = feasible_placements(8);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].1, vec![0]);
    }

    #[test]
    fn lxds_roundtrip_and_rejects_truncation() {
        let g = GlyphSet::new(Script::A);
        let (train, _) = build_word_dataset(&g, &words(3), 2, 0, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.lxds");
        train.save(&p).unwrap();
        let back = LabeledDataset::load(&p).unwrap();
        assert_eq!(back, train);
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"LXDS");
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(LabeledDataset::load(&p).is_err());
    }
}

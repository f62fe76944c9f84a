//! Synthetic stimuli: two bitmap scripts, the slot renderer, word and object
//! datasets, and the probe sets used by the analyses.

pub mod dataset;
pub mod glyphs;
pub mod objects;
pub mod probes;
pub mod render;
pub mod words;

pub use dataset::{build_word_dataset, LabeledDataset, Split};
pub use glyphs::{GlyphSet, Script};
pub use objects::{build_object_dataset, nonword_groups};
pub use probes::{bigram_images, bigram_set, factorial_probe, letter_grid, spaced_probe, ProbeSet};
pub use render::{render, RenderSpec, Scale, SlotString};

use std::f32::consts::PI;

use rand::Rng;

use super::dataset::{LabeledDataset, Split};
use super::render::{CANVAS_H, CANVAS_W};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::tensor::Tensor;

pub const N_OBJECT_CLASSES: usize = 20;
pub const N_NONWORD_GROUPS: usize = 4;

/// Base radius of a shape in pixels before scale jitter.
const BASE_RADIUS: f32 = 10.0;
const MAX_ROTATION: f32 = 25.0 * PI / 180.0;

pub const FAMILY_NAMES: [&str; N_OBJECT_CLASSES] = [
    "disc", "ring", "square", "frame", "triangle", "wedge-outline", "plus", "saltire",
    "h-stripes", "v-stripes", "checker", "star", "crescent", "ellipse", "dot-grid", "zigzag",
    "spiral", "target", "hexagon", "chevron",
];

/// Placement of one object instance on the canvas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectSpec {
    pub family: usize,
    pub cx: f32,
    pub cy: f32,
    pub scale: f32,
    pub rotation: f32,
}

fn seg_dist(p: (f32, f32), a: (f32, f32), b: (f32, f32)) -> f32 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

fn triangle(u: f32, v: f32, size: f32) -> bool {
    v <= 0.8 * size && u.abs() <= (v + 0.9 * size) * 0.55
}

fn plus(u: f32, v: f32, arm: f32, half: f32) -> bool {
    (u.abs() <= half && v.abs() <= arm) || (v.abs() <= half && u.abs() <= arm)
}

fn hexagon(u: f32, v: f32) -> f32 {
    (u.abs() * 0.866 + v.abs() * 0.5).max(v.abs())
}

/// Membership test in shape-local coordinates (unit radius, y down).
fn inside(family: usize, u: f32, v: f32) -> bool {
    let r = (u * u + v * v).sqrt();
    let cheb = u.abs().max(v.abs());
    match family {
        0 => r <= 1.0,
        1 => (0.6..=1.0).contains(&r),
        2 => cheb <= 0.85,
        3 => (0.55..=0.9).contains(&cheb),
        4 => triangle(u, v, 1.0),
        5 => triangle(u, v, 1.1) && !triangle(u, v + 0.05, 0.55),
        6 => plus(u, v, 1.0, 0.25),
        7 => {
            let s = std::f32::consts::FRAC_1_SQRT_2;
            plus((u + v) * s, (u - v) * s, 1.0, 0.22)
        }
        8 => u.abs() <= 1.4 && v.abs() <= 0.9 && ((v + 0.9) / 0.36).floor() as i32 % 2 == 0,
        9 => u.abs() <= 1.4 && v.abs() <= 0.9 && ((u + 1.4) / 0.4).floor() as i32 % 2 == 0,
        10 => {
            cheb <= 0.9 && (((u + 0.9) / 0.45).floor() as i32 + ((v + 0.9) / 0.45).floor() as i32) % 2 == 0
        }
        11 => {
            let phi = v.atan2(u);
            let lobe = ((5.0 * phi).cos() + 1.0) / 2.0;
            r <= 0.35 + 0.65 * lobe * lobe
        }
        12 => r <= 1.0 && ((u - 0.45).powi(2) + (v + 0.1).powi(2)).sqrt() > 0.8,
        13 => (u / 1.5).powi(2) + (v / 0.5).powi(2) <= 1.0,
        14 => {
            let g = |x: f32| x - (x / 0.7).round() * 0.7;
            cheb <= 0.95 && (g(u).powi(2) + g(v).powi(2)).sqrt() <= 0.22
        }
        15 => {
            let phase = (u / 0.5).rem_euclid(2.0);
            let tri = 0.6 * (1.0 - 2.0 * (phase - 1.0).abs());
            u.abs() <= 1.5 && (v - tri).abs() <= 0.18
        }
        16 => {
            let phi = v.atan2(u) / (2.0 * PI) + 0.5;
            let turn = (r / 0.33 - phi).rem_euclid(1.0);
            r <= 1.0 && turn < 0.45
        }
        17 => r <= 1.0 && (r / 0.25).floor() as i32 % 2 == 0,
        18 => hexagon(u, v) <= 0.9 && hexagon(u, v) >= 0.45,
        19 => {
            let p = (u, v);
            seg_dist(p, (-0.8, -0.8), (0.6, 0.0)).min(seg_dist(p, (0.6, 0.0), (-0.8, 0.8))) <= 0.22
        }
        _ => false,
    }
}

pub fn render_object(spec: &ObjectSpec) -> Result<Tensor> {
    if spec.family >= N_OBJECT_CLASSES {
        return Err(Error::InvalidArgument(format!(
            "object family {} out of range",
            spec.family
        )));
    }
    let (sin, cos) = spec.rotation.sin_cos();
    let radius = BASE_RADIUS * spec.scale;
    let img = Tensor::from_fn(&[1, CANVAS_H, CANVAS_W], |i| {
        let (py, px) = (i / CANVAS_W, i % CANVAS_W);
        let dx = px as f32 + 0.5 - spec.cx;
        let dy = py as f32 + 0.5 - spec.cy;
        let u = (cos * dx + sin * dy) / radius;
        let v = (-sin * dx + cos * dy) / radius;
        if inside(spec.family, u, v) {
            0.0
        } else {
            1.0
        }
    });
    Ok(img)
}

pub fn sample_object_spec(family: usize, rng: &mut impl Rng) -> ObjectSpec {
    ObjectSpec {
        family,
        cx: rng.random_range(24.0..104.0),
        cy: rng.random_range(13.0..19.0),
        scale: rng.random_range(0.8..1.25),
        rotation: rng.random_range(-MAX_ROTATION..MAX_ROTATION),
    }
}

/// Procedural object categories. Train and test splits draw from separate
/// substreams of `seed`.
pub fn build_object_dataset(
    n_classes: usize,
    per_class: usize,
    seed: u64,
    split: Split,
) -> Result<LabeledDataset> {
    if n_classes == 0 || n_classes > N_OBJECT_CLASSES {
        return Err(Error::InvalidArgument(format!(
            "object classes must be in 1..={N_OBJECT_CLASSES}, got {n_classes}"
        )));
    }
    let names = FAMILY_NAMES[..n_classes].iter().map(|s| s.to_string()).collect();
    let mut ds = LabeledDataset::new(names, split);
    let tag = match split {
        Split::Train => "objects-train",
        Split::Test => "objects-test",
    };
    let mut rng = substream(seed, tag);
    for family in 0..n_classes {
        for _ in 0..per_class {
            let spec = sample_object_spec(family, &mut rng);
            ds.push(&render_object(&spec)?, family as u32, None);
        }
    }
    Ok(ds)
}

/// Four disjoint nonword categories, each pooling five consecutive object
/// families, with `per_group` fresh renderings per category.
pub fn nonword_groups(per_group: usize, seed: u64) -> Result<Vec<Vec<Tensor>>> {
    let per_family = N_OBJECT_CLASSES / N_NONWORD_GROUPS;
    if per_group < per_family {
        return Err(Error::InvalidArgument(format!(
            "need at least {per_family} images per nonword group"
        )));
    }
    let mut rng = substream(seed, "nonword");
    let mut groups = Vec::with_capacity(N_NONWORD_GROUPS);
    for g in 0..N_NONWORD_GROUPS {
        let mut images = Vec::with_capacity(per_group);
        for i in 0..per_group {
            let family = g * per_family + i % per_family;
            images.push(render_object(&sample_object_spec(family, &mut rng))?);
        }
        groups.push(images);
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimgen::render::ink_count;

    #[test]
    fn counts() {
        let ds = build_object_dataset(20, 100, 5, Split::Train).unwrap();
        assert_eq!(ds.len(), 2000);
        assert!((0..20).all(|l| ds.count_label(l) == 100));
    }

    #[test]
    fn every_family_draws_ink_and_jitter_varies() {
        let mut rng = substream(1, "t");
        for f in 0..N_OBJECT_CLASSES {
            let a = render_object(&sample_object_spec(f, &mut rng)).unwrap();
            let b = render_object(&sample_object_spec(f, &mut rng)).unwrap();
            assert!(ink_count(&a) > 20, "{}", FAMILY_NAMES[f]);
            assert_ne!(a, b);
        }
    }

    #[test]
    fn families_differ_at_canonical_pose() {
        let imgs: Vec<Tensor> = (0..N_OBJECT_CLASSES)
            .map(|family| {
                render_object(&ObjectSpec {
                    family,
                    cx: 64.0,
                    cy: 16.0,
                    scale: 1.0,
                    rotation: 0.0,
                })
                .unwrap()
            })
            .collect();
        for i in 0..imgs.len() {
            for j in i + 1..imgs.len() {
                assert_ne!(imgs[i], imgs[j], "{i} vs {j}");
            }
        }
    }

    #[test]
    fn deterministic_and_split_dependent() {
        let a = build_object_dataset(3, 4, 2, Split::Train).unwrap();
        let b = build_object_dataset(3, 4, 2, Split::Train).unwrap();
        let c = build_object_dataset(3, 4, 2, Split::Test).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.pixels, c.pixels);
    }

    #[test]
    fn nonword_group_shape() {
        let g = nonword_groups(100, 3).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.iter().all(|x| x.len() == 100));
        assert!(nonword_groups(2, 3).is_err());
    }
}

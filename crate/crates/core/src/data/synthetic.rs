//! Procedurally drawn 16x16 digit glyphs, used when no IDX files are at hand.
//!
//! Each class is a fixed polyline skeleton in the unit square. Every sample
//! applies a random affine jitter (scale, rotation, shear, shift), a random
//! stroke width, and low-amplitude background noise.

use std::f64::consts::TAU;

use rand::Rng as _;

use crate::rng;

use super::dataset::LabeledDataset;

pub const SYNTHETIC_SIDE: usize = 16;
pub const SYNTHETIC_CLASSES: usize = 10;

type Point = (f64, f64);

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64) -> Vec<Point> {
    (0..=24)
        .map(|i| {
            let t = TAU * i as f64 / 24.0;
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

fn glyph(class: usize) -> Vec<Vec<Point>> {
    match class {
        0 => vec![ellipse(0.5, 0.5, 0.24, 0.34)],
        1 => vec![vec![(0.36, 0.3), (0.52, 0.15), (0.52, 0.86)]],
        2 => vec![vec![
            (0.28, 0.3),
            (0.4, 0.17),
            (0.6, 0.17),
            (0.72, 0.3),
            (0.7, 0.45),
            (0.28, 0.85),
            (0.76, 0.85),
        ]],
        3 => vec![vec![
            (0.28, 0.18),
            (0.72, 0.18),
            (0.48, 0.45),
            (0.7, 0.58),
            (0.7, 0.76),
            (0.52, 0.87),
            (0.27, 0.8),
        ]],
        4 => vec![
            vec![(0.64, 0.86), (0.64, 0.14), (0.24, 0.62), (0.8, 0.62)],
        ],
        5 => vec![vec![
            (0.72, 0.15),
            (0.32, 0.15),
            (0.29, 0.47),
            (0.58, 0.44),
            (0.73, 0.6),
            (0.66, 0.82),
            (0.28, 0.85),
        ]],
        6 => vec![vec![
            (0.66, 0.14),
            (0.38, 0.4),
            (0.3, 0.66),
            (0.42, 0.86),
            (0.63, 0.83),
            (0.71, 0.64),
            (0.56, 0.51),
            (0.33, 0.6),
        ]],
        7 => vec![vec![(0.24, 0.15), (0.76, 0.15), (0.42, 0.86)], vec![(0.38, 0.5), (0.66, 0.5)]],
        8 => vec![ellipse(0.5, 0.31, 0.18, 0.16), ellipse(0.5, 0.68, 0.22, 0.19)],
        9 => vec![ellipse(0.48, 0.34, 0.2, 0.18), vec![(0.68, 0.36), (0.6, 0.86)]],
        _ => unreachable!("glyph class out of range"),
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

fn render(class: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let side = SYNTHETIC_SIDE as f64;
    let scale = rng.random_range(0.85..1.1);
    let angle: f64 = rng.random_range(-0.18..0.18);
    let shear: f64 = rng.random_range(-0.15..0.15);
    let shift = (rng.random_range(-1.5..1.5) / side, rng.random_range(-1.5..1.5) / side);
    let half_width = rng.random_range(0.55..0.9) / side;
    let (sin, cos) = angle.sin_cos();
    let transform = |(x, y): Point| {
        let (x, y) = (x - 0.5, y - 0.5);
        let x = x + shear * y;
        let (x, y) = (cos * x - sin * y, sin * x + cos * y);
        (0.5 + scale * x + shift.0, 0.5 + scale * y + shift.1)
    };
    let strokes: Vec<Vec<Point>> = glyph(class)
        .into_iter()
        .map(|s| s.into_iter().map(transform).collect())
        .collect();

    let mut img = Vec::with_capacity(SYNTHETIC_SIDE * SYNTHETIC_SIDE);
    for r in 0..SYNTHETIC_SIDE {
        for c in 0..SYNTHETIC_SIDE {
            let p = ((c as f64 + 0.5) / side, (r as f64 + 0.5) / side);
            let dist = strokes
                .iter()
                .flat_map(|s| s.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
                .fold(f64::INFINITY, f64::min);
            // one-pixel linear falloff outside the stroke core
            let ink = (1.0 - (dist - half_width) * side).clamp(0.0, 1.0);
            let noise = rng.random_range(0.0..0.1);
            img.push((ink + noise).min(1.0));
        }
    }
    img
}

/// `n` images, labels cycling `0..10` so classes stay balanced; a pure
/// function of `(n, seed)`.
pub fn synthetic_digits(n: usize, seed: u64) -> LabeledDataset {
    let mut pixels = Vec::with_capacity(n * SYNTHETIC_SIDE * SYNTHETIC_SIDE);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % SYNTHETIC_CLASSES;
        pixels.extend(render(class, &mut rng::stream(seed, i as u64)));
        labels.push(class as u8);
    }
    LabeledDataset::new(vec![SYNTHETIC_SIDE, SYNTHETIC_SIDE], pixels, labels)
        .expect("generator emits pixels in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let a = synthetic_digits(30, 4);
        assert_eq!(a, synthetic_digits(30, 4));
        assert_ne!(a, synthetic_digits(30, 5));
        assert_eq!(a.label_histogram(), vec![3; 10]);
        let ten = synthetic_digits(10, 0);
        assert_eq!(ten.labels(), &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn glyphs_have_ink() {
        let ds = synthetic_digits(10, 1);
        for i in 0..10 {
            let ink = ds.image(i).iter().filter(|&&v| v > 0.5).count();
            assert!((10..150).contains(&ink), "class {i} has {ink} inked pixels");
        }
    }
}

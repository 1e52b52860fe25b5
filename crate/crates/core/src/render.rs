//! Heatmaps as binary PPM/PGM and a small SVG plot for delta sweeps.
//!
//! Diverging (P6): with `m = max|v|`, positive values fade from white to
//! red as `(255, 255 - round(255 v/m), 255 - round(255 v/m))`, negative
//! values likewise toward blue. Absolute (P5): gray level
//! `255 - round(255 |v|/m)`, so zero is white and the peak is black.
//! A map with `m = 0` renders all white. Inputs with more than two
//! dimensions are summed over the leading (channel) axes first.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::attribution::SaliencyMap;
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::theory::TheoryResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapStyle {
    Diverging,
    AbsoluteValue,
}

impl HeatmapStyle {
    pub fn extension(self) -> &'static str {
        match self {
            HeatmapStyle::Diverging => "ppm",
            HeatmapStyle::AbsoluteValue => "pgm",
        }
    }
}

impl FromStr for HeatmapStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diverging" => Ok(Self::Diverging),
            "absolute" | "abs" => Ok(Self::AbsoluteValue),
            other => Err(Error::InvalidArgument(format!("unknown style '{other}' (diverging|absolute)"))),
        }
    }
}

/// Collapses scores to a `(height, width, values)` plane.
pub fn reduce_channels(scores: &Tensor) -> (usize, usize, Vec<f64>) {
    let shape = scores.shape();
    match shape.len() {
        1 => (1, shape[0], scores.data().to_vec()),
        2 => (shape[0], shape[1], scores.data().to_vec()),
        _ => {
            let (h, w) = (shape[shape.len() - 2], shape[shape.len() - 1]);
            let mut plane = vec![0.0; h * w];
            for chunk in scores.data().chunks_exact(h * w) {
                plane.iter_mut().zip(chunk).for_each(|(p, v)| *p += v);
            }
            (h, w, plane)
        }
    }
}

fn fade(v: f64, m: f64) -> u8 {
    255 - (255.0 * (v.abs() / m)).round().clamp(0.0, 255.0) as u8
}

pub fn encode_heatmap(scores: &Tensor, style: HeatmapStyle) -> Vec<u8> {
    let (h, w, plane) = reduce_channels(scores);
    let m = plane.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let magic = match style {
        HeatmapStyle::Diverging => "P6",
        HeatmapStyle::AbsoluteValue => "P5",
    };
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    for &v in &plane {
        let level = if m > 0.0 { fade(v, m) } else { 255 };
        match style {
            HeatmapStyle::Diverging => {
                let px = if v > 0.0 && m > 0.0 {
                    [255, level, level]
                } else if v < 0.0 && m > 0.0 {
                    [level, level, 255]
                } else {
                    [255, 255, 255]
                };
                out.extend_from_slice(&px);
            }
            HeatmapStyle::AbsoluteValue => out.push(level),
        }
    }
    out
}

pub fn write_heatmap(scores: &Tensor, style: HeatmapStyle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_heatmap(scores, style)).map_err(|e| Error::io(path, e))
}

pub fn render_heatmap(map: &SaliencyMap, style: HeatmapStyle, path: impl AsRef<Path>) -> Result<()> {
    write_heatmap(&map.scores, style, path)
}

/// c1 and c2 against delta, with one-stderr bars.
pub fn sweep_svg(results: &[TheoryResult]) -> String {
    let (width, height, pad) = (480.0, 320.0, 48.0);
    let xs: Vec<f64> = results.iter().map(|r| r.config.delta).collect();
    let x_max = xs.iter().cloned().fold(0.0, f64::max).max(1e-9);
    let y_max = results
        .iter()
        .flat_map(|r| [r.c1.mean + r.c1.stderr, r.c2.mean + r.c2.stderr])
        .fold(0.0, f64::max)
        .max(1e-9);
    let y_min = results
        .iter()
        .flat_map(|r| [r.c1.mean - r.c1.stderr, r.c2.mean - r.c2.stderr])
        .fold(0.0, f64::min);
    let px = |x: f64| pad + (width - 2.0 * pad) * x / x_max;
    let py = |y: f64| height - pad - (height - 2.0 * pad) * (y - y_min) / (y_max - y_min);

    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">"#).unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<line x1="{pad}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#,
        py(0.0),
        width - pad
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{0:.2}" stroke="black"/>"#,
        height - pad
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{0:.2}" y="{1:.2}" font-size="12" text-anchor="middle">delta</text>"#,
        width / 2.0,
        height - 12.0
    )
    .unwrap();
    for (name, color, pick) in [
        ("c1", "#c0392b", (|r: &TheoryResult| r.c1) as fn(&TheoryResult) -> _),
        ("c2", "#2471a3", |r: &TheoryResult| r.c2),
    ] {
        let points: Vec<String> = results
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.config.delta), py(pick(r).mean)))
            .collect();
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        for r in results {
            let s = pick(r);
            let x = px(r.config.delta);
            writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                py(s.mean - s.stderr),
                py(s.mean + s.stderr)
            )
            .unwrap();
        }
        let last = results.last().map_or(0.0, |r| pick(r).mean);
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{name}</text>"#,
            width - pad + 4.0,
            py(last)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixels(bytes: &[u8], header: usize) -> &[u8] {
        &bytes[header..]
    }

    #[test]
    fn zero_map_is_white() {
        let t = Tensor::zeros(vec![2, 3]);
        let ppm = encode_heatmap(&t, HeatmapStyle::Diverging);
        assert!(ppm.starts_with(b"P6\n3 2\n255\n"));
        assert!(pixels(&ppm, 11).iter().all(|&b| b == 255));
        let pgm = encode_heatmap(&t, HeatmapStyle::AbsoluteValue);
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(pixels(&pgm, 11), &[255; 6]);
    }

    #[test]
    fn golden_diverging_and_absolute() {
        let t = Tensor::new(vec![1, 4], vec![2.0, -1.0, 0.0, -2.0]).unwrap();
        let ppm = encode_heatmap(&t, HeatmapStyle::Diverging);
        let mut golden = b"P6\n4 1\n255\n".to_vec();
        golden.extend_from_slice(&[255, 0, 0, 127, 127, 255, 255, 255, 255, 0, 0, 255]);
        assert_eq!(ppm, golden);
        let pgm = encode_heatmap(&t, HeatmapStyle::AbsoluteValue);
        let mut golden = b"P5\n4 1\n255\n".to_vec();
        golden.extend_from_slice(&[0, 127, 255, 0]);
        assert_eq!(pgm, golden);
    }

    #[test]
    fn negation_swaps_red_and_blue() {
        let v = vec![0.3, -0.7, 0.1, 0.0, -0.05, 0.9];
        let t = Tensor::new(vec![2, 3], v.clone()).unwrap();
        let n = Tensor::new(vec![2, 3], v.iter().map(|x| -x).collect()).unwrap();
        let a = encode_heatmap(&t, HeatmapStyle::Diverging);
        let b = encode_heatmap(&n, HeatmapStyle::Diverging);
        for (pa, pb) in pixels(&a, 11).chunks(3).zip(pixels(&b, 11).chunks(3)) {
            assert_eq!([pa[2], pa[1], pa[0]], [pb[0], pb[1], pb[2]]);
        }
    }

    #[test]
    fn channels_are_summed() {
        let t = Tensor::new(vec![2, 1, 2], vec![1.0, -1.0, 1.0, 3.0]).unwrap();
        let (h, w, plane) = reduce_channels(&t);
        assert_eq!((h, w), (1, 2));
        assert_eq!(plane, vec![2.0, 2.0]);
    }
}

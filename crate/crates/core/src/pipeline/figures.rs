//! Minimal SVG figures: grayscale heatmaps and line plots.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const CELL: usize = 18;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Gray level for `v` on a linear min..max scale; darker is higher.
pub fn shade(v: f64, min: f64, max: f64) -> u8 {
    if max > min {
        255 - (((v - min) / (max - min)).clamp(0.0, 1.0) * 255.0).round() as u8
    } else {
        128
    }
}

/// Row-major `rows x cols` matrix as grayscale cells with labels and the
/// min/max of the scale written under the grid.
pub fn render_heatmap(values: &[f64], rows: usize, cols: usize, row_labels: &[String], col_labels: &[String], title: &str) -> Result<String> {
    if rows == 0 || cols == 0 || values.len() != rows * cols {
        return Err(Error::shape("render_heatmap", format!("{} values for {rows} x {cols}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("heatmap values must be finite".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let left = if row_labels.is_empty() { 4 } else { 8 + 7 * row_labels.iter().map(|l| l.len()).max().unwrap_or(0) };
    let top = if col_labels.is_empty() { 22 } else { 36 };
    let (w, h) = ((left + cols * CELL + 8).max(160), top + rows * CELL + 22);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="monospace" font-size="10">"#);
    let _ = writeln!(s, r#"<text x="4" y="12">{}</text>"#, escape(title));
    for (c, l) in col_labels.iter().enumerate().take(cols) {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + c * CELL + CELL / 2, top - 4, escape(l));
    }
    for r in 0..rows {
        if let Some(l) = row_labels.get(r) {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 4, top + r * CELL + 13, escape(l));
        }
        for c in 0..cols {
            let v = values[r * cols + c];
            let g = shade(v, min, max);
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({g},{g},{g})" stroke="#999"><title>{v:.4}</title></rect>"##,
                left + c * CELL,
                top + r * CELL
            );
        }
    }
    let note = if max > min { format!("min {min:.4}  max {max:.4}") } else { format!("constant {min:.4}") };
    let _ = writeln!(s, r#"<text x="4" y="{}">{note}</text>"#, h - 6);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Curves sharing an x axis of `len` points; `None` entries are skipped.
pub fn render_curves(curves: &[Option<Vec<f64>>], title: &str) -> String {
    let (w, h, pad) = (360.0, 200.0, 24.0);
    let len = curves.iter().flatten().map(Vec::len).max().unwrap_or(1).max(2);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="monospace" font-size="10">"#);
    let _ = writeln!(s, r#"<text x="4" y="12">{}</text>"#, escape(title));
    let _ = writeln!(s, r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#999"/>"##, w - 2.0 * pad, h - 2.0 * pad);
    for (i, c) in curves.iter().enumerate() {
        let Some(c) = c else { continue };
        let pts: Vec<String> = c
            .iter()
            .enumerate()
            .map(|(x, y)| {
                let px = pad + x as f64 / (len - 1) as f64 * (w - 2.0 * pad);
                let py = h - pad - y.clamp(0.0, 1.0) * (h - 2.0 * pad);
                format!("{px:.1},{py:.1}")
            })
            .collect();
        let g = 40 + (i * 160 / curves.len().max(1)) as u8;
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="rgb({g},{g},{g})"><title>curve {}</title></polyline>"#, pts.join(" "), i + 1);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_cell_and_constant() {
        let one = render_heatmap(&[2.0], 1, 1, &[], &[], "x").unwrap();
        assert_eq!(one.matches("<rect").count(), 1);
        let flat = render_heatmap(&[3.0; 6], 2, 3, &[], &[], "flat").unwrap();
        assert_eq!(flat.matches("rgb(128,128,128)").count(), 6);
        assert!(flat.contains("constant 3.0000"));
        assert!(render_heatmap(&[], 0, 0, &[], &[], "").is_err());
        assert!(render_heatmap(&[f64::NAN], 1, 1, &[], &[], "").is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let s = render_heatmap(&[0.0, 1.0], 1, 2, &["r<1>".into()], &["a".into(), "b".into()], "t&").unwrap();
        assert!(s.contains("r&lt;1&gt;") && s.contains("t&amp;"));
    }

    proptest! {
        #[test]
        fn larger_is_never_lighter(a in -5.0f64..5.0, b in -5.0f64..5.0, lo in -6.0f64..-5.0, hi in 5.0f64..6.0) {
            if a <= b {
                prop_assert!(shade(a, lo, hi) >= shade(b, lo, hi));
            }
        }
    }
}

//! PGM images and drive tables.

use std::path::Path;

use super::DriveRanking;
use crate::error::{Error, Result};

/// 8-bit binary PGM of values in [0, 1], each pixel repeated `scale` times.
pub fn pgm_bytes(values: &[f64], width: usize, height: usize, scale: usize) -> Result<Vec<u8>> {
    if values.len() != width * height || scale == 0 {
        return Err(Error::shape("pgm", format!("{} values for {width} x {height}", values.len())));
    }
    let (w, h) = (width * scale, height * scale);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            let v = values[(y / scale) * width + x / scale];
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, values: &[f64], width: usize, height: usize, scale: usize) -> Result<()> {
    std::fs::write(path, pgm_bytes(values, width, height, scale)?).map_err(|e| Error::io(path, e))
}

pub fn write_drive_csv(path: &Path, rankings: &[DriveRanking]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["unit", "channel", "weight_sum", "activation", "drive", "rank"])?;
    for r in rankings {
        for (rank, &ch) in r.ranking.iter().enumerate() {
            w.write_record([
                r.unit.to_string(),
                ch.to_string(),
                format!("{:.6}", r.weight_sums[ch]),
                format!("{:.6}", r.activations[ch]),
                format!("{:.6}", r.drives[ch]),
                (rank + 1).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

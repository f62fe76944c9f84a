//! CSV tables for unit profiles, encoding fits, the census and RDMs.

use std::path::Path;

use super::census::{CensusRow, UnitProfile};
use super::classify::UnitClass;
use super::encoding::EncodingFit;
use super::rdm::Rdm;
use super::UnitRef;
use crate::error::{Error, Result};
use crate::stimgen::glyphs::GlyphSet;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn cell(u: &UnitRef) -> (String, String) {
    match u.cell {
        Some((r, c)) => (r.to_string(), c.to_string()),
        None => (String::new(), String::new()),
    }
}

pub fn write_units_csv(path: &Path, profiles: &[UnitProfile]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "layer", "channel", "row", "col", "class", "preferred", "least", "r_diagonal", "diagonal_slot", "r_vertical",
        "vertical_column", "r_space", "r_ordinal", "ordinal_candidate", "unresponsive",
    ])?;
    for p in profiles {
        let (row, col) = cell(&p.unit);
        let c = &p.classification;
        w.write_record([
            p.unit.layer.to_string(),
            p.unit.channel.to_string(),
            row,
            col,
            c.class.to_string(),
            GlyphSet::symbol_char(p.preferred).to_string(),
            GlyphSet::symbol_char(p.least).to_string(),
            format!("{:.6}", c.r_diagonal),
            c.diagonal_slot.to_string(),
            format!("{:.6}", c.r_vertical),
            c.vertical_column.to_string(),
            opt(c.r_space),
            opt(c.r_ordinal),
            c.ordinal_candidate.to_string(),
            c.degenerate.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_encoding_csv(path: &Path, fits: &[(UnitRef, Vec<EncodingFit>)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["unit", "scheme", "r_cv", "lambda", "degenerate"])?;
    for (u, per_scheme) in fits {
        for f in per_scheme {
            w.write_record([
                u.to_string(),
                f.scheme.to_string(),
                format!("{:.6}", f.r_cv),
                format!("{:.6e}", f.lambda),
                f.degenerate.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_census_csv(path: &Path, rows: &[CensusRow]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec![
        "layer".to_string(),
        "units".into(),
        "selective".into(),
        "selective_fraction".into(),
        "unresponsive".into(),
    ];
    for c in UnitClass::ALL {
        header.push(c.to_string());
        header.push(format!("{c}_fraction"));
    }
    header.extend(["ordinal_candidates".into(), "candidates_space".into(), "candidates_ordinal".into()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.layer.to_string(),
            r.n_units.to_string(),
            r.n_selective.to_string(),
            format!("{:.6}", r.selective_fraction),
            r.n_unresponsive.to_string(),
        ];
        for c in UnitClass::ALL {
            rec.push(r.count(c).to_string());
            rec.push(opt(r.fraction(c)));
        }
        rec.extend([r.ordinal_candidates.to_string(), r.candidates_space.to_string(), r.candidates_ordinal.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Square matrix with a label column; undefined entries are left empty.
pub fn write_rdm_csv(path: &Path, rdm: &Rdm, labels: &[String]) -> Result<()> {
    if labels.len() != rdm.n {
        return Err(Error::InvalidArgument(format!("{} labels for {} stimuli", labels.len(), rdm.n)));
    }
    let mut w = writer(path)?;
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (i, l) in labels.iter().enumerate() {
        let mut rec = vec![l.clone()];
        rec.extend((0..rdm.n).map(|j| opt(rdm.get(i, j))));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

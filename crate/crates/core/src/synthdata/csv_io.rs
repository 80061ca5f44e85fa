//! Dataset CSV: header `domain,label,f0..f{d-1}`, one row per sample.
//!
//! Features are written with 17 significant digits, which round-trips every
//! finite `f64` exactly. A label of `-1` marks a target row in the label-free
//! training view.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use super::dataset::{Dataset, Domain};
use super::split::LabelSplit;
use crate::error::{Error, Result};
use crate::ndcore::Matrix;

/// Target rows as loaded from CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetRows {
    Labeled(Dataset),
    /// Label-free training view.
    Unlabeled(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDatasets {
    pub source: Dataset,
    pub target: TargetRows,
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes both domains. With `hide_target_labels`, target labels are written as `-1`.
pub fn write_dataset_csv<W: Write>(out: W, source: &Dataset, target: &Dataset, hide_target_labels: bool) -> Result<()> {
    if source.dim() != target.dim() {
        return Err(Error::shape("write_dataset_csv", "source and target dims differ"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["domain".to_string(), "label".to_string()];
    header.extend((0..source.dim()).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for (ds, hide) in [(source, false), (target, hide_target_labels)] {
        for (row, &label) in ds.features().iter_rows().zip(ds.hidden_labels()) {
            let mut rec = Vec::with_capacity(row.len() + 2);
            rec.push(ds.domain().as_str().to_string());
            rec.push(if hide { "-1".to_string() } else { label.to_string() });
            rec.extend(row.iter().map(|&v| format_f64(v)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset CSV. The label split is inferred from the label sets unless `split` is
/// given; a file whose target labels are hidden needs an explicit split.
pub fn read_dataset_csv<R: Read>(input: R, split: Option<LabelSplit>) -> Result<LoadedDatasets> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "domain" || &header[1] != "label" {
        return Err(Error::Schema(format!(
            "expected header `domain,label,f0,..`, got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let dim = header.len() - 2;
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{i}") {
            return Err(Error::Schema(format!("column {} should be `f{i}`, got `{name}`", i + 2)));
        }
    }

    let mut src = (Vec::new(), Vec::new());
    let mut tgt = (Vec::new(), Vec::new());
    let mut hidden = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Schema(format!("data row {}: {what}", line + 1));
        let label: i64 = rec[1].trim().parse().map_err(|_| bad("label is not an integer"))?;
        let feats = rec
            .iter()
            .skip(2)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("feature is not a number"))?;
        if feats.len() != dim {
            return Err(bad("wrong number of features"));
        }
        let slot = match &rec[0] {
            "source" => {
                if label < 0 {
                    return Err(bad("source rows must be labelled"));
                }
                &mut src
            }
            "target" => {
                if label < 0 {
                    hidden += 1;
                }
                &mut tgt
            }
            other => return Err(bad(&format!("unknown domain `{other}`"))),
        };
        slot.0.extend(feats);
        slot.1.push(label);
    }

    if hidden != 0 && hidden != tgt.1.len() {
        return Err(Error::Schema("target labels must be all present or all hidden".into()));
    }
    let src_labels: Vec<usize> = src.1.iter().map(|&l| l as usize).collect();
    let src_x = Matrix::new(src_labels.len(), dim, src.0)?;
    let tgt_x = Matrix::new(tgt.1.len(), dim, tgt.0)?;

    if hidden > 0 {
        let split = split.ok_or_else(|| {
            Error::Schema("target labels are hidden; the label split must be supplied".into())
        })?;
        return Ok(LoadedDatasets {
            source: Dataset::new(src_x, src_labels, Domain::Source, split)?,
            target: TargetRows::Unlabeled(tgt_x),
        });
    }

    let tgt_labels: Vec<usize> = tgt.1.iter().map(|&l| l as usize).collect();
    let src_set: BTreeSet<usize> = src_labels.iter().copied().collect();
    let tgt_set: BTreeSet<usize> = tgt_labels.iter().copied().collect();
    let split = match split {
        Some(s) => s,
        None => LabelSplit::infer(&src_set, &tgt_set)?,
    };
    Ok(LoadedDatasets {
        source: Dataset::new(src_x, src_labels, Domain::Source, split)?,
        target: TargetRows::Labeled(Dataset::new(tgt_x, tgt_labels, Domain::Target, split)?),
    })
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CandidateLink;
use crate::error::{Error, Result};

/// One row per candidate link, columns in a fixed named order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub links: Vec<CandidateLink>,
    pub values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<String>, links: Vec<CandidateLink>, values: Vec<Vec<f64>>) -> Result<Self> {
        if links.len() != values.len() {
            return Err(Error::Invariant(format!(
                "{} links but {} feature rows",
                links.len(),
                values.len()
            )));
        }
        if let Some((i, row)) = values.iter().enumerate().find(|(_, r)| r.len() != columns.len()) {
            return Err(Error::Invariant(format!(
                "row {i} has {} values, expected {}",
                row.len(),
                columns.len()
            )));
        }
        Ok(FeatureMatrix { columns, links, values })
    }

    pub fn num_rows(&self) -> usize {
        self.values.len()
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.links.iter().map(|l| l.label).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Keeps the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::Data(format!("unknown feature column '{n}'")))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            columns: names.to_vec(),
            links: self.links.clone(),
            values: self
                .values
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
        })
    }

    /// Replaces NaN and infinities with 0.
    pub fn impute(&mut self) {
        for row in &mut self.values {
            for v in row.iter_mut() {
                if !v.is_finite() {
                    *v = 0.0;
                }
            }
        }
    }

    /// Min-max scales every column to [0,1] and returns the bounds used.
    pub fn normalize(&mut self) -> Normalization {
        let norm = Normalization::fit(self);
        norm.apply(self);
        norm
    }

    /// CSV: optional `#` comment line, header
    /// `source_id,target_id,<columns>,label`, floats with 9 significant
    /// digits, label as 0/1.
    pub fn to_csv(&self, comment: Option<&str>) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        if let Some(c) = comment {
            buf.extend_from_slice(format!("#{c}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let mut header = vec!["source_id".to_owned(), "target_id".to_owned()];
            header.extend(self.columns.iter().cloned());
            header.push("label".to_owned());
            w.write_record(&header).map_err(csv_err)?;
            for (link, row) in self.links.iter().zip(&self.values) {
                let mut rec = vec![link.source_id.clone(), link.target_id.clone()];
                rec.extend(row.iter().map(|&v| format_sig9(v)));
                rec.push(if link.label { "1" } else { "0" }.to_owned());
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Data(e.to_string()))?;
        }
        Ok(buf)
    }

    pub fn write_csv(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        fs::write(path, self.to_csv(comment)?).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(bytes);
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        if header.len() < 3
            || header[0] != "source_id"
            || header[1] != "target_id"
            || header.last().map(String::as_str) != Some("label")
        {
            return Err(Error::Data("feature CSV header must be source_id,target_id,...,label".into()));
        }
        let columns = header[2..header.len() - 1].to_vec();
        let mut links = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != header.len() {
                return Err(Error::Data(format!("feature CSV row {} has {} fields", i + 1, rec.len())));
            }
            let label = match &rec[rec.len() - 1] {
                "1" => true,
                "0" => false,
                other => return Err(Error::Data(format!("bad label '{other}' in row {}", i + 1))),
            };
            let row = (2..rec.len() - 1)
                .map(|j| {
                    rec[j]
                        .parse::<f64>()
                        .map_err(|e| Error::Data(format!("row {} column {}: {e}", i + 1, header[j])))
                })
                .collect::<Result<Vec<f64>>>()?;
            links.push(CandidateLink {
                source_id: rec[0].to_owned(),
                target_id: rec[1].to_owned(),
                label,
            });
            values.push(row);
        }
        FeatureMatrix::new(columns, links, values)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

/// Formats with 9 significant digits in scientific notation.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        "0".to_owned()
    } else {
        format!("{v:.8e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnBounds {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Per-column min/max, reusable for links featurized later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub columns: Vec<ColumnBounds>,
}

impl Normalization {
    pub fn fit(m: &FeatureMatrix) -> Self {
        let columns = m
            .columns
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let (min, max) = m.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[j]), hi.max(r[j]))
                });
                let (min, max) = if min.is_finite() { (min, max) } else { (0.0, 0.0) };
                ColumnBounds { name: name.clone(), min, max }
            })
            .collect();
        Normalization { columns }
    }

    /// Constant columns map to 0; values outside the fitted range clamp.
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let b = &self.columns[j];
        let span = b.max - b.min;
        if span > 0.0 {
            ((v - b.min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn apply(&self, m: &mut FeatureMatrix) {
        for row in &mut m.values {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.scale(j, *v);
            }
        }
    }

    pub fn to_json(&self, config_hash: Option<&str>) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "config_hash": config_hash,
            "columns": self.columns,
        }))
        .expect("bounds serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Sidecar {
            columns: Vec<ColumnBounds>,
        }
        let s: Sidecar = serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        Ok(Normalization { columns: s.columns })
    }
}

//! Labeled feature tables and the steps that make them training-ready:
//! CSV I/O, deduplication, normalization, undersampling, composition across
//! sources and stratified fold assignment.

mod compose;
mod folds;
mod manifest;
mod normalize;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compose::{compose, derive_seed, ClassTargets, ComposeError, CompositionPlan, TABLE_SOURCES};
pub use folds::{stratified_kfold, FoldError, FoldPlan};
pub use manifest::{sha256_file, InputDigest, Manifest};
pub use normalize::{fit_normalizer, CatalogMismatch, EmptyTrain, Normalizer, NormalizerRange};

use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Legitimate = 0,
    Malicious = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_u8()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("label must be 0 or 1, got {0:?}")]
pub struct BadLabel(pub String);

impl TryFrom<u8> for Label {
    type Error = BadLabel;

    fn try_from(v: u8) -> Result<Self, BadLabel> {
        match v {
            0 => Ok(Label::Legitimate),
            1 => Ok(Label::Malicious),
            _ => Err(BadLabel(v.to_string())),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = BadLabel;

    fn from_str(s: &str) -> Result<Self, BadLabel> {
        match s.trim() {
            "0" => Ok(Label::Legitimate),
            "1" => Ok(Label::Malicious),
            other => Err(BadLabel(other.to_string())),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// One row of a feature table. Values line up with the owning dataset's columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub session_id: String,
    pub values: Vec<f64>,
    pub label: Label,
    pub source_dataset: String,
}

/// A feature table: shared column names plus labeled rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub catalog_version: String,
    pub columns: Vec<String>,
    pub rows: Vec<LabeledRow>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: {reason}")]
    BadRow { line: u64, reason: String },
}

const ID_COLUMN: &str = "session_id";
const LABEL_COLUMN: &str = "label";
const SOURCE_COLUMN: &str = "source_dataset";

impl Dataset {
    pub fn new(columns: Vec<String>, catalog_version: impl Into<String>) -> Dataset {
        Dataset {
            catalog_version: catalog_version.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let mal = self.rows.iter().filter(|r| r.label == Label::Malicious).count();
        (self.rows.len() - mal, mal)
    }

    /// Same columns, the given rows in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            catalog_version: self.catalog_version.clone(),
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Keeps only the named columns, in the given order.
    pub fn project(&self, columns: &[String]) -> Result<Dataset, CatalogMismatch> {
        let idx: Vec<usize> = columns
            .iter()
            .map(|c| {
                self.column_index(c)
                    .ok_or_else(|| CatalogMismatch(format!("missing column {c:?}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Dataset {
            catalog_version: self.catalog_version.clone(),
            columns: columns.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| LabeledRow {
                    values: idx.iter().map(|&i| r.values[i]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    pub fn feature_vector(&self, row: usize) -> FeatureVector {
        let mut v = FeatureVector::new(self.catalog_version.clone());
        for (c, x) in self.columns.iter().zip(&self.rows[row].values) {
            v.values.insert(c.clone(), *x);
        }
        v
    }

    /// Appends a row computed against the same columns.
    pub fn push_vector(
        &mut self,
        session_id: impl Into<String>,
        v: &FeatureVector,
        label: Label,
        source: impl Into<String>,
    ) -> Result<(), CatalogMismatch> {
        if v.values.len() != self.columns.len() || v.values.keys().zip(&self.columns).any(|(a, b)| a != b) {
            return Err(CatalogMismatch("vector columns differ from dataset columns".into()));
        }
        self.rows.push(LabeledRow {
            session_id: session_id.into(),
            values: v.values.values().copied().collect(),
            label,
            source_dataset: source.into(),
        });
        Ok(())
    }

    /// Feature CSV: `session_id`, the feature columns, `label`, `source_dataset`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = Vec::with_capacity(self.columns.len() + 3);
        header.push(ID_COLUMN);
        header.extend(self.columns.iter().map(String::as_str));
        header.push(LABEL_COLUMN);
        header.push(SOURCE_COLUMN);
        w.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for r in &self.rows {
            rec.clear();
            rec.push(r.session_id.clone());
            // Shortest representation that round-trips exactly.
            rec.extend(r.values.iter().map(|x| format!("{x:?}")));
            rec.push(r.label.to_string());
            rec.push(r.source_dataset.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, catalog_version: impl Into<String>) -> Result<Dataset, DatasetError> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        let n = header.len();
        if n < 3 || &header[0] != ID_COLUMN || &header[n - 2] != LABEL_COLUMN || &header[n - 1] != SOURCE_COLUMN {
            return Err(DatasetError::BadHeader(format!(
                "expected {ID_COLUMN}, features..., {LABEL_COLUMN}, {SOURCE_COLUMN}"
            )));
        }
        let columns: Vec<String> = header.iter().skip(1).take(n - 3).map(str::to_owned).collect();
        let unique: HashSet<&String> = columns.iter().collect();
        if unique.len() != columns.len() {
            return Err(DatasetError::BadHeader("duplicate column names".into()));
        }
        let mut ds = Dataset::new(columns, catalog_version);
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |reason: String| DatasetError::BadRow { line, reason };
            if rec.len() != n {
                return Err(bad(format!("expected {n} fields, got {}", rec.len())));
            }
            let mut values = Vec::with_capacity(n - 3);
            for (i, field) in rec.iter().enumerate().skip(1).take(n - 3) {
                let x: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("column {:?}: not a number: {field:?}", &header[i])))?;
                if !x.is_finite() {
                    return Err(bad(format!("column {:?}: non-finite value", &header[i])));
                }
                values.push(x);
            }
            let label: Label = rec[n - 2].parse().map_err(|e: BadLabel| bad(e.to_string()))?;
            let source = rec[n - 1].to_string();
            if source.is_empty() {
                return Err(bad("empty source_dataset".into()));
            }
            ds.rows.push(LabeledRow {
                session_id: rec[0].to_string(),
                values,
                label,
                source_dataset: source,
            });
        }
        Ok(ds)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub removed_count: usize,
    /// Distinct feature vectors seen with both labels. Such rows are all kept.
    pub conflict_count: usize,
}

fn value_key(values: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 compare equal.
    values.iter().map(|x| if *x == 0.0 { 0 } else { x.to_bits() }).collect()
}

/// Collapses rows with identical feature values and label, keeping the first.
pub fn deduplicate(ds: &Dataset) -> (Dataset, DedupReport) {
    let mut seen: HashMap<Vec<u64>, [bool; 2]> = HashMap::new();
    let mut keep = Vec::with_capacity(ds.rows.len());
    let mut report = DedupReport::default();
    for (i, r) in ds.rows.iter().enumerate() {
        let labels = seen.entry(value_key(&r.values)).or_insert([false; 2]);
        let slot = r.label.as_u8() as usize;
        if labels[slot] {
            report.removed_count += 1;
            continue;
        }
        labels[slot] = true;
        if labels[0] && labels[1] {
            report.conflict_count += 1;
        }
        keep.push(i);
    }
    (ds.subset(&keep), report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("undersampling needs both classes")]
pub struct SingleClass;

/// Randomly drops majority-class rows until both classes have the minority
/// count. Row order is preserved.
pub fn balance_undersample(ds: &Dataset, seed: u64) -> Result<Dataset, SingleClass> {
    let (leg, mal) = ds.class_counts();
    if leg == 0 || mal == 0 {
        return Err(SingleClass);
    }
    if leg == mal {
        return Ok(ds.clone());
    }
    let majority = if mal > leg { Label::Malicious } else { Label::Legitimate };
    let majority_rows: Vec<usize> = (0..ds.rows.len()).filter(|&i| ds.rows[i].label == majority).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: HashSet<usize> = sample(&mut rng, majority_rows.len(), leg.min(mal))
        .into_iter()
        .map(|k| majority_rows[k])
        .collect();
    let keep: Vec<usize> = (0..ds.rows.len())
        .filter(|i| ds.rows[*i].label != majority || chosen.contains(i))
        .collect();
    Ok(ds.subset(&keep))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn table(rows: &[(&[f64], u8)]) -> Dataset {
        let width = rows.first().map_or(1, |r| r.0.len());
        let mut ds = Dataset::new((0..width).map(|i| format!("f{i}")).collect(), "test");
        for (i, (v, l)) in rows.iter().enumerate() {
            ds.rows.push(LabeledRow {
                session_id: format!("s{i}"),
                values: v.to_vec(),
                label: Label::try_from(*l).unwrap(),
                source_dataset: "t".into(),
            });
        }
        ds
    }

    #[test]
    fn csv_round_trip() {
        let ds = table(&[(&[1.5, 0.1 + 0.2], 1), (&[-3.0, 1e-300], 0)]);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("session_id,f0,f1,label,source_dataset\n"));
        assert_eq!(Dataset::read_csv(&buf[..], "test").unwrap(), ds);
    }

    #[test]
    fn header_only_csv() {
        let ds = Dataset::new(vec!["a".into()], "v");
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "session_id,a,label,source_dataset\n"
        );
        assert!(Dataset::read_csv(&buf[..], "v").unwrap().is_empty());
    }

    #[test]
    fn csv_rejects_bad_rows() {
        let bad_label = "session_id,a,label,source_dataset\nx,1,2,s\n";
        assert!(matches!(
            Dataset::read_csv(bad_label.as_bytes(), "v"),
            Err(DatasetError::BadRow { .. })
        ));
        let nan = "session_id,a,label,source_dataset\nx,NaN,1,s\n";
        assert!(Dataset::read_csv(nan.as_bytes(), "v").is_err());
        let header = "id,a,label,source_dataset\n";
        assert!(matches!(
            Dataset::read_csv(header.as_bytes(), "v"),
            Err(DatasetError::BadHeader(_))
        ));
    }

    #[test]
    fn dedup_identical_rows() {
        let (out, rep) = deduplicate(&table(&[(&[1.0, 2.0], 1), (&[1.0, 2.0], 1)]));
        assert_eq!(out.len(), 1);
        assert_eq!(rep.removed_count, 1);
        assert_eq!(out.rows[0].session_id, "s0");
    }

    #[test]
    fn dedup_keeps_label_conflicts() {
        let (out, rep) = deduplicate(&table(&[(&[1.0, 2.0], 1), (&[1.0, 2.0], 0)]));
        assert_eq!(out.len(), 2);
        assert_eq!(
            rep,
            DedupReport {
                removed_count: 0,
                conflict_count: 1
            }
        );
    }

    #[test]
    fn undersample_majority() {
        let rows: Vec<(Vec<f64>, u8)> = (0..160).map(|i| (vec![i as f64], u8::from(i < 100))).collect();
        let refs: Vec<(&[f64], u8)> = rows.iter().map(|(v, l)| (&v[..], *l)).collect();
        let ds = table(&refs);
        let a = balance_undersample(&ds, 7).unwrap();
        assert_eq!(a.class_counts(), (60, 60));
        assert_eq!(a, balance_undersample(&ds, 7).unwrap());
        assert_ne!(a, balance_undersample(&ds, 8).unwrap());
        let balanced = table(&[(&[1.0], 0), (&[2.0], 1)]);
        assert_eq!(balance_undersample(&balanced, 1).unwrap(), balanced);
        assert_eq!(balance_undersample(&table(&[(&[1.0], 1)]), 1), Err(SingleClass));
    }
}

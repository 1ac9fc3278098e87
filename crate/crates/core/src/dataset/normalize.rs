//! Min-max scaling fitted on training rows only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Dataset;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerRange {
    /// [0, 1]
    #[default]
    ZeroOne,
    /// [-1, 1]
    SymOne,
}

impl NormalizerRange {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            NormalizerRange::ZeroOne => (0.0, 1.0),
            NormalizerRange::SymOne => (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot fit a normalizer on zero rows")]
pub struct EmptyTrain;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("catalog mismatch: {0}")]
pub struct CatalogMismatch(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub range: NormalizerRange,
    pub columns: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Per-column min and max over `rows`.
pub fn fit_normalizer<'a>(
    columns: &[String],
    rows: impl IntoIterator<Item = &'a [f64]>,
    range: NormalizerRange,
) -> Result<Normalizer, EmptyTrain> {
    let mut lo = vec![f64::INFINITY; columns.len()];
    let mut hi = vec![f64::NEG_INFINITY; columns.len()];
    let mut any = false;
    for row in rows {
        any = true;
        for ((l, h), x) in lo.iter_mut().zip(hi.iter_mut()).zip(row) {
            *l = l.min(*x);
            *h = h.max(*x);
        }
    }
    if !any {
        return Err(EmptyTrain);
    }
    Ok(Normalizer {
        range,
        columns: columns.to_vec(),
        lo,
        hi,
    })
}

impl Normalizer {
    pub fn fit(ds: &Dataset, range: NormalizerRange) -> Result<Normalizer, EmptyTrain> {
        fit_normalizer(&ds.columns, ds.rows.iter().map(|r| &r.values[..]), range)
    }

    /// Maps one value of column `j` into the range, clamped. Constant
    /// columns map to the lower bound.
    pub fn transform_value(&self, j: usize, x: f64) -> f64 {
        let (a, b) = self.range.bounds();
        let span = self.hi[j] - self.lo[j];
        if !(span > 0.0) {
            return a;
        }
        let t = ((x - self.lo[j]) / span).clamp(0.0, 1.0);
        a + t * (b - a)
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for (j, x) in row.iter_mut().enumerate() {
            *x = self.transform_value(j, *x);
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset, CatalogMismatch> {
        if ds.columns != self.columns {
            return Err(CatalogMismatch("dataset columns differ from the fitted columns".into()));
        }
        let mut out = ds.clone();
        for r in &mut out.rows {
            self.transform_row(&mut r.values);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::table;
    use proptest::prelude::*;

    #[test]
    fn two_four_six() {
        let ds = table(&[(&[2.0], 0), (&[4.0], 1), (&[6.0], 0)]);
        let n = Normalizer::fit(&ds, NormalizerRange::ZeroOne).unwrap();
        assert_eq!((n.lo[0], n.hi[0]), (2.0, 6.0));
        let out = n.apply(&ds).unwrap();
        let got: Vec<f64> = out.rows.iter().map(|r| r.values[0]).collect();
        assert_eq!(got, vec![0.0, 0.5, 1.0]);
        assert_eq!(n.transform_value(0, 10.0), 1.0);
        assert_eq!(n.transform_value(0, -10.0), 0.0);
    }

    #[test]
    fn constant_column_goes_to_lower_bound() {
        let ds = table(&[(&[3.0], 0), (&[3.0], 1), (&[3.0], 0)]);
        for range in [NormalizerRange::ZeroOne, NormalizerRange::SymOne] {
            let n = Normalizer::fit(&ds, range).unwrap();
            let out = n.apply(&ds).unwrap();
            assert!(out.rows.iter().all(|r| r.values[0] == range.bounds().0));
        }
    }

    #[test]
    fn identity_on_unit_range() {
        let n = Normalizer {
            range: NormalizerRange::ZeroOne,
            columns: vec!["a".into()],
            lo: vec![0.0],
            hi: vec![1.0],
        };
        for x in [0.0, 0.25, 0.7, 1.0] {
            assert_eq!(n.transform_value(0, x), x);
        }
    }

    #[test]
    fn empty_and_mismatch() {
        let ds = Dataset::new(vec!["a".into()], "v");
        assert_eq!(Normalizer::fit(&ds, NormalizerRange::ZeroOne), Err(EmptyTrain));
        let n = Normalizer::fit(&table(&[(&[1.0, 2.0], 0)]), NormalizerRange::ZeroOne).unwrap();
        assert!(n.apply(&table(&[(&[1.0], 0)])).is_err());
    }

    proptest! {
        #[test]
        fn training_cells_in_range_and_monotone(
            cells in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 3), 1..40),
            sym in any::<bool>(),
        ) {
            let range = if sym { NormalizerRange::SymOne } else { NormalizerRange::ZeroOne };
            let cols: Vec<String> = (0..3).map(|i| format!("c{i}")).collect();
            let n = fit_normalizer(&cols, cells.iter().map(|r| &r[..]), range).unwrap();
            let (a, b) = range.bounds();
            for row in &cells {
                for (j, x) in row.iter().enumerate() {
                    let t = n.transform_value(j, *x);
                    prop_assert!(a <= t && t <= b);
                }
            }
            for j in 0..3 {
                let mut col: Vec<f64> = cells.iter().map(|r| r[j]).collect();
                col.sort_by(f64::total_cmp);
                for w in col.windows(2) {
                    prop_assert!(n.transform_value(j, w[0]) <= n.transform_value(j, w[1]));
                }
            }
        }
    }
}

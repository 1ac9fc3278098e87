//! Generated feature tables for smoke runs and sanity checks.

use encdetect_core::dataset::{Dataset, Label, LabeledRow};
use encdetect_core::features::CATALOG_VERSION;
use encdetect_core::pipeline::full_columns;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every column j holds `scale_j * (u + offset + separation * label)` with
/// `u` uniform on [0, 1) and `scale_j` in 1..=7. Classes alternate, so the
/// table is balanced.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub rows: usize,
    pub window_size: usize,
    pub separation: f64,
    pub offset: f64,
    pub source: String,
    pub seed: u64,
    /// Replace the alternating labels with seeded coin flips.
    pub random_labels: bool,
}

impl Synthetic {
    pub fn new(rows: usize, source: &str, seed: u64) -> Synthetic {
        Synthetic {
            rows,
            window_size: 15,
            separation: 0.0,
            offset: 0.0,
            source: source.to_string(),
            seed,
            random_labels: false,
        }
    }

    pub fn generate(&self) -> Dataset {
        let columns = full_columns(self.window_size);
        let width = columns.len();
        let mut ds = Dataset::new(columns, CATALOG_VERSION);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for i in 0..self.rows {
            let label = if self.random_labels {
                if rng.random_bool(0.5) {
                    Label::Malicious
                } else {
                    Label::Legitimate
                }
            } else if i % 2 == 1 {
                Label::Malicious
            } else {
                Label::Legitimate
            };
            let values = (0..width)
                .map(|j| {
                    let scale = (1 + j % 7) as f64;
                    scale * (rng.random::<f64>() + self.offset + self.separation * label.as_f64())
                })
                .collect();
            ds.rows.push(LabeledRow {
                session_id: format!("{}-{i:06}", self.source),
                values,
                label,
                source_dataset: self.source.clone(),
            });
        }
        ds
    }
}

/// Rows of `parts` concatenated; all must share columns.
pub fn concat(parts: &[Dataset]) -> Dataset {
    let mut out = Dataset::new(parts[0].columns.clone(), parts[0].catalog_version.clone());
    for p in parts {
        assert_eq!(p.columns, out.columns, "concatenated tables must share columns");
        out.rows.extend(p.rows.iter().cloned());
    }
    out
}

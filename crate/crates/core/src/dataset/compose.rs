//! Seeded per-source, per-class sampling into one composed dataset.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Dataset, Label};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTargets {
    pub malicious_sessions: usize,
    pub legitimate_sessions: usize,
}

impl ClassTargets {
    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Malicious => self.malicious_sessions,
            Label::Legitimate => self.legitimate_sessions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionPlan {
    pub targets: BTreeMap<String, ClassTargets>,
    pub seed: u64,
}

/// Session counts (malicious, legitimate) drawn from each public source in
/// the reference composition.
pub const TABLE_SOURCES: [(&str, usize, usize); 5] = [
    ("unsw_iot_2019", 12_900, 13_300),
    ("cicids_2017", 13_000, 13_500),
    ("cic_andmal_2017", 12_403, 12_400),
    ("mcfp", 13_600, 12_180),
    ("cicids_2012", 7_613, 6_731),
];

impl CompositionPlan {
    /// The reference composition scaled by `factor`, rounded to whole sessions.
    pub fn reference_scaled(factor: f64, seed: u64) -> CompositionPlan {
        let scale = |n: usize| (n as f64 * factor).round().max(0.0) as usize;
        CompositionPlan {
            targets: TABLE_SOURCES
                .iter()
                .map(|&(name, mal, leg)| {
                    (
                        name.to_string(),
                        ClassTargets {
                            malicious_sessions: scale(mal),
                            legitimate_sessions: scale(leg),
                        },
                    )
                })
                .collect(),
            seed,
        }
    }

    pub fn total(&self) -> usize {
        self.targets
            .values()
            .map(|t| t.malicious_sessions + t.legitimate_sessions)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("source {source_name:?} has {have} {class} rows, plan needs {need}")]
    InsufficientRows {
        source_name: String,
        class: Label,
        have: usize,
        need: usize,
    },
    #[error("source {0:?} has different columns from the other sources")]
    ColumnMismatch(String),
}

/// Deterministic sub-seed for one named purpose.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Samples each (source, class) target exactly, without replacement. Output
/// rows are grouped by source in name order, keep their original relative
/// order and are tagged with the source name.
pub fn compose(sources: &BTreeMap<String, Dataset>, plan: &CompositionPlan) -> Result<Dataset, ComposeError> {
    let template = sources.values().next();
    let mut out = Dataset::new(
        template.map(|d| d.columns.clone()).unwrap_or_default(),
        template.map(|d| d.catalog_version.clone()).unwrap_or_default(),
    );
    for (name, ds) in sources {
        if ds.columns != out.columns {
            return Err(ComposeError::ColumnMismatch(name.clone()));
        }
    }
    for (name, targets) in &plan.targets {
        let ds = sources.get(name);
        let mut chosen: Vec<usize> = Vec::new();
        for class in [Label::Malicious, Label::Legitimate] {
            let need = targets.get(class);
            if need == 0 {
                continue;
            }
            let pool: Vec<usize> = ds
                .map(|d| (0..d.rows.len()).filter(|&i| d.rows[i].label == class).collect())
                .unwrap_or_default();
            if pool.len() < need {
                return Err(ComposeError::InsufficientRows {
                    source_name: name.clone(),
                    class,
                    have: pool.len(),
                    need,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, &[name, &class.to_string()]));
            chosen.extend(sample(&mut rng, pool.len(), need).into_iter().map(|k| pool[k]));
        }
        chosen.sort_unstable();
        if let Some(ds) = ds {
            out.rows.extend(chosen.into_iter().map(|i| {
                let mut r = ds.rows[i].clone();
                r.source_dataset = name.clone();
                r
            }));
        }
    }
    Ok(out)
}

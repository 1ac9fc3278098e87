use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use encdetect_core::dataset::{compose, deduplicate, CompositionPlan};
use serde::{Deserialize, Serialize};

use crate::config::resolve;
use crate::output::{digest, manifest_beside, read_dataset, write_dataset, write_manifest, ManifestParts};
use crate::CliError;

#[derive(Args, Debug, Serialize)]
pub struct ComposeArgs {
    /// JSON composition plan: {"targets": {source: {malicious_sessions, legitimate_sessions}}, "seed": N}.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Use the reference five-source composition scaled by this factor instead of --plan.
    #[arg(long)]
    reference_scale: Option<f64>,
    /// Source feature tables as NAME=PATH.
    #[arg(long, num_args = 1..)]
    inputs: Vec<String>,
    /// Overrides the plan's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Collapse rows with identical features and label after sampling.
    #[arg(long)]
    dedup: bool,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComposeRun {
    #[serde(default)]
    plan: Option<PathBuf>,
    #[serde(default)]
    reference_scale: Option<f64>,
    inputs: Vec<String>,
    #[serde(default)]
    seed: Option<u64>,
    out: PathBuf,
    #[serde(default)]
    dedup: bool,
    /// Filled in once the plan is loaded, so the manifest holds it verbatim.
    #[serde(default)]
    resolved_plan: Option<CompositionPlan>,
}

pub fn run(args: ComposeArgs) -> Result<(), CliError> {
    let mut cfg: ComposeRun = resolve(args.config.as_deref(), &args)?;
    let mut plan = match (&cfg.plan, cfg.reference_scale) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<CompositionPlan>(&text)
                .map_err(|e| CliError::Usage(format!("plan {}: {e}", path.display())))?
        }
        (None, Some(f)) if f.is_finite() && f >= 0.0 => CompositionPlan::reference_scaled(f, 0),
        (None, Some(f)) => return Err(CliError::Usage(format!("--reference-scale {f} must be >= 0"))),
        (Some(_), Some(_)) => return Err(CliError::Usage("give --plan or --reference-scale, not both".into())),
        (None, None) => match cfg.resolved_plan.take() {
            // a manifest's config replayed as a config file
            Some(p) => p,
            None => return Err(CliError::Usage("one of --plan or --reference-scale is required".into())),
        },
    };
    if let Some(seed) = cfg.seed {
        plan.seed = seed;
    }

    let mut sources = BTreeMap::new();
    let mut digests = Vec::new();
    for spec in &cfg.inputs {
        let Some((name, path)) = spec.split_once('=') else {
            return Err(CliError::Usage(format!("--inputs entry {spec:?} is not NAME=PATH")));
        };
        let path = PathBuf::from(path);
        digests.push(digest(&path)?);
        if sources.insert(name.to_string(), read_dataset(&path)?).is_some() {
            return Err(CliError::Usage(format!("source {name:?} given twice")));
        }
    }
    let mut out = compose(&sources, &plan).map_err(anyhow::Error::from)?;
    let mut counts = BTreeMap::new();
    counts.insert("sampled_rows".to_string(), out.len());
    if cfg.dedup {
        let (d, report) = deduplicate(&out);
        counts.insert("duplicates_removed".into(), report.removed_count);
        counts.insert("label_conflicts".into(), report.conflict_count);
        out = d;
    }
    let (leg, mal) = out.class_counts();
    counts.insert("rows".into(), out.len());
    counts.insert("legitimate".into(), leg);
    counts.insert("malicious".into(), mal);
    write_dataset(&cfg.out, &out)?;
    let seed = plan.seed;
    cfg.resolved_plan = Some(plan);
    write_manifest(
        &manifest_beside(&cfg.out),
        ManifestParts {
            command: "compose",
            config: &cfg,
            seed: Some(seed),
            inputs: digests,
            row_counts: counts,
            outputs: vec![cfg.out.display().to_string()],
        },
    )?;
    Ok(())
}

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use encdetect_core::features::FeatureSetName;
use encdetect_eval::render::{cross_csv, cross_markdown, reports_json};
use encdetect_eval::run_cross_dataset;
use encdetect_learners::{Algorithm, ModelSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::resolve;
use crate::output::{digest, read_dataset, write_manifest, write_text, ManifestParts};
use crate::CliError;

#[derive(Args, Debug, Serialize)]
pub struct CrossArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = |s: &str| s.parse::<Algorithm>().map(|a| a.as_str().to_string()))]
    algo: Option<String>,
    #[arg(long, value_parser = |s: &str| s.parse::<FeatureSetName>().map(|f| f.as_str().to_string()))]
    set: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; without it the table is printed.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn rf() -> String {
    "RF".into()
}

fn fos() -> String {
    "FOS".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrossRun {
    data: PathBuf,
    #[serde(default = "rf")]
    algo: String,
    #[serde(default = "fos")]
    set: String,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    hyperparameters: BTreeMap<String, Value>,
}

pub fn run(args: CrossArgs) -> Result<(), CliError> {
    let cfg: CrossRun = resolve(args.config.as_deref(), &args)?;
    let algorithm: Algorithm = cfg
        .algo
        .parse()
        .map_err(|e: encdetect_learners::UnknownAlgorithm| CliError::Usage(e.to_string()))?;
    let set: FeatureSetName = cfg
        .set
        .parse()
        .map_err(|e: encdetect_core::features::UnknownSet| CliError::Usage(e.to_string()))?;
    let spec =
        ModelSpec::new(algorithm, cfg.hyperparameters.clone(), cfg.seed).map_err(|e| CliError::Usage(e.to_string()))?;

    let data_digest = digest(&cfg.data)?;
    let data = read_dataset(&cfg.data)?;
    let reports = run_cross_dataset(&spec, &data, set, cfg.seed).map_err(anyhow::Error::from)?;
    let table = cross_markdown(&reports);
    let Some(dir) = &cfg.out else {
        print!("{table}");
        return Ok(());
    };
    let mut outputs = Vec::new();
    for (name, text) in [
        ("cross.json", reports_json(&reports)),
        ("cross.md", table),
        ("cross.csv", cross_csv(&reports)),
    ] {
        write_text(&dir.join(name), &text)?;
        outputs.push(name.to_string());
    }
    let mut counts = BTreeMap::new();
    counts.insert("rows".to_string(), data.len());
    counts.insert("cells".to_string(), reports.iter().map(|r| r.cells.len()).sum());
    write_manifest(
        &dir.join("manifest.json"),
        ManifestParts {
            command: "crossdataset",
            config: &cfg,
            seed: Some(cfg.seed),
            inputs: vec![data_digest],
            row_counts: counts,
            outputs,
        },
    )?;
    Ok(())
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use encdetect_core::features::FeatureSetName;
use encdetect_eval::render::{grid_csv, grid_markdown, reports_json, roc_csv};
use encdetect_eval::{experiment_grid_detailed, fos_vs_fots, EvalReport, FoldScores, GridConfig, Schedule};
use encdetect_learners::Algorithm;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::resolve;
use crate::output::{digest, read_dataset, write_manifest, write_text, ManifestParts};
use crate::CliError;

fn algo_name(s: &str) -> Result<String, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok("all".into());
    }
    s.parse::<Algorithm>()
        .map(|a| a.as_str().to_string())
        .map_err(|e| e.to_string())
}

fn set_name(s: &str) -> Result<String, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok("all".into());
    }
    s.parse::<FeatureSetName>()
        .map(|f| f.as_str().to_string())
        .map_err(|e| e.to_string())
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Feature CSV to evaluate.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Algorithm name(s) or `all`.
    #[arg(long, value_delimiter = ',', value_parser = algo_name)]
    algo: Vec<String>,
    /// Feature set name(s) or `all` (the five protocol-agnostic sets).
    #[arg(long, value_delimiter = ',', value_parser = set_name)]
    set: Vec<String>,
    /// Folds.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TLS feature CSV (same session ids); adds the FOS vs FOTS comparison.
    #[arg(long)]
    fots: Option<PathBuf>,
    /// Write per-fold ROC points under <out>/roc/.
    #[arg(long)]
    roc: bool,
    /// Run every cell, fold and model on one thread.
    #[arg(long)]
    sequential: bool,
    /// Hyperparameter override ALGO.key=value (value parsed as JSON, else string).
    #[arg(long, value_name = "ALGO.KEY=VALUE")]
    #[serde(skip)]
    hyper: Vec<String>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn all() -> Vec<String> {
    vec!["all".into()]
}

fn five() -> usize {
    5
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalRun {
    data: PathBuf,
    #[serde(default = "all")]
    algo: Vec<String>,
    #[serde(default = "all")]
    set: Vec<String>,
    #[serde(default = "five")]
    k: usize,
    #[serde(default)]
    seed: u64,
    out: PathBuf,
    #[serde(default)]
    fots: Option<PathBuf>,
    #[serde(default)]
    roc: bool,
    #[serde(default)]
    sequential: bool,
    #[serde(default)]
    hyperparameters: BTreeMap<Algorithm, BTreeMap<String, Value>>,
}

fn parse_hyper(entry: &str) -> Result<(Algorithm, String, Value), CliError> {
    let bad = || CliError::Usage(format!("--hyper {entry:?} is not ALGO.key=value"));
    let (lhs, value) = entry.split_once('=').ok_or_else(bad)?;
    let (algo, key) = lhs.split_once('.').ok_or_else(bad)?;
    let algo: Algorithm = algo
        .parse()
        .map_err(|e: encdetect_learners::UnknownAlgorithm| CliError::Usage(e.to_string()))?;
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((algo, key.to_string(), value))
}

fn expand<T: Copy>(
    names: &[String],
    everything: &[T],
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Vec<T>, CliError> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(everything.to_vec());
    }
    names.iter().map(|n| parse(n).map_err(CliError::Usage)).collect()
}

fn write_roc(
    dir: &Path,
    prefix: &str,
    cells: &[(EvalReport, Vec<FoldScores>)],
    outputs: &mut Vec<String>,
) -> anyhow::Result<()> {
    for (r, scores) in cells {
        let name = format!("roc/{prefix}{}_{}.csv", r.feature_set, r.spec.algorithm);
        write_text(&dir.join(&name), &roc_csv(scores)?)?;
        outputs.push(name);
    }
    Ok(())
}

fn write_tables(dir: &Path, prefix: &str, reports: &[EvalReport], outputs: &mut Vec<String>) -> anyhow::Result<()> {
    for (name, text) in [
        (format!("{prefix}reports.json"), reports_json(&reports)),
        (format!("{prefix}table.md"), grid_markdown(reports)),
        (format!("{prefix}table.csv"), grid_csv(reports)),
    ] {
        write_text(&dir.join(&name), &text)?;
        outputs.push(name);
    }
    Ok(())
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let mut cfg: EvalRun = resolve(args.config.as_deref(), &args)?;
    for h in &args.hyper {
        let (algo, key, value) = parse_hyper(h)?;
        cfg.hyperparameters.entry(algo).or_default().insert(key, value);
    }
    let algorithms = expand(&cfg.algo, &Algorithm::ALL, |n| {
        n.parse::<Algorithm>().map_err(|e| e.to_string())
    })?;
    let feature_sets = expand(&cfg.set, &FeatureSetName::NUMERIC, |n| {
        n.parse::<FeatureSetName>().map_err(|e| e.to_string())
    })?;
    if cfg.k < 2 {
        return Err(CliError::Usage("--k must be at least 2".into()));
    }
    let grid = GridConfig {
        algorithms,
        feature_sets,
        k: cfg.k,
        seed: cfg.seed,
        hyperparameters: cfg.hyperparameters.clone(),
        schedule: if cfg.sequential {
            Schedule::Sequential
        } else {
            Schedule::Parallel
        },
    };
    for a in &grid.algorithms {
        grid.spec(*a).map_err(|e| CliError::Usage(e.to_string()))?;
    }

    let data_digest = digest(&cfg.data)?;
    let data = read_dataset(&cfg.data)?;
    let dataset_ref = format!("sha256:{}", data_digest.sha256);
    let mut inputs = vec![data_digest];
    let mut counts = BTreeMap::new();
    counts.insert("rows".to_string(), data.len());

    let mut cells = experiment_grid_detailed(&data, &grid).map_err(anyhow::Error::from)?;
    for (r, _) in &mut cells {
        r.dataset = Some(dataset_ref.clone());
    }
    let reports: Vec<EvalReport> = cells.iter().map(|(r, _)| r.clone()).collect();
    counts.insert("reports".into(), reports.len());
    let mut outputs = Vec::new();
    write_tables(&cfg.out, "", &reports, &mut outputs)?;
    if cfg.roc {
        write_roc(&cfg.out, "", &cells, &mut outputs)?;
    }

    if let Some(path) = &cfg.fots {
        let tls_digest = digest(path)?;
        let tls = read_dataset(path)?;
        let mut pair = fos_vs_fots(&data, &tls, &grid).map_err(anyhow::Error::from)?;
        for (r, _) in &mut pair {
            r.dataset = Some(format!("sha256:{}+sha256:{}", inputs[0].sha256, tls_digest.sha256));
        }
        let reports: Vec<EvalReport> = pair.iter().map(|(r, _)| r.clone()).collect();
        counts.insert("fots_rows".into(), tls.len());
        counts.insert(
            "joined_rows".into(),
            reports.first().map_or(0, |r| r.folds.iter().map(|f| f.n_test).sum()),
        );
        write_tables(&cfg.out, "fots_", &reports, &mut outputs)?;
        if cfg.roc {
            write_roc(&cfg.out, "fots_", &pair, &mut outputs)?;
        }
        inputs.push(tls_digest);
    }

    write_manifest(
        &cfg.out.join("manifest.json"),
        ManifestParts {
            command: "eval",
            config: &cfg,
            seed: Some(cfg.seed),
            inputs,
            row_counts: counts,
            outputs,
        },
    )?;
    Ok(())
}

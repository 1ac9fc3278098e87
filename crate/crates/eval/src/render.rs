//! Markdown, CSV and JSON renderings of reports.

use std::fmt::Write;

use encdetect_core::features::FeatureSetName;

use crate::cross::CrossDatasetReport;
use crate::cv::{EvalReport, FoldScores};
use crate::metrics::{roc_points, MetricError};

/// Column headers after the algorithm column, in table order.
pub const TABLE_HEADER: [&str; 8] = ["accuracy", "STD", "roc-auc", "STD", "FPR", "STD", "TPR", "STD"];

fn groups(reports: &[EvalReport]) -> Vec<(FeatureSetName, Vec<&EvalReport>)> {
    let mut out: Vec<(FeatureSetName, Vec<&EvalReport>)> = Vec::new();
    for r in reports {
        match out.iter_mut().find(|(s, _)| *s == r.feature_set) {
            Some((_, v)) => v.push(r),
            None => out.push((r.feature_set, vec![r])),
        }
    }
    out
}

fn cells(r: &EvalReport) -> [f64; 8] {
    [
        r.mean.accuracy,
        r.std.accuracy,
        r.mean.roc_auc,
        r.std.roc_auc,
        r.mean.fpr,
        r.std.fpr,
        r.mean.tpr,
        r.std.tpr,
    ]
}

/// One table per feature set, one row per algorithm, four decimals.
pub fn grid_markdown(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    for (i, (set, rs)) in groups(reports).into_iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "### {set}\n");
        let _ = writeln!(s, "| Algorithm | {} |", TABLE_HEADER.join(" | "));
        let _ = writeln!(s, "|---|{}", "---:|".repeat(TABLE_HEADER.len()));
        for r in rs {
            let vals: Vec<String> = cells(r).iter().map(|v| format!("{v:.4}")).collect();
            let _ = writeln!(s, "| {} | {} |", r.spec.algorithm, vals.join(" | "));
        }
    }
    s
}

/// Every mean and STD at full precision.
pub fn grid_csv(reports: &[EvalReport]) -> String {
    let mut s =
        String::from("feature_set,algorithm,accuracy,accuracy_std,roc_auc,roc_auc_std,fpr,fpr_std,tpr,tpr_std\n");
    for r in reports {
        let vals: Vec<String> = cells(r).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{},{},{}", r.feature_set, r.spec.algorithm, vals.join(","));
    }
    s
}

pub fn reports_json<T: serde::Serialize>(reports: &T) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
    s.push('\n');
    s
}

/// One row per source: accuracy, roc-auc, FPR and TPR for each direction.
pub fn cross_markdown(reports: &[CrossDatasetReport]) -> String {
    let mut s = String::new();
    let mut header = String::from("| Dataset A |");
    let mut rule = String::from("|---|");
    for r in reports {
        for m in ["accuracy", "roc-auc", "FPR", "TPR"] {
            let _ = write!(header, " {} {m} |", r.direction.as_str());
            rule.push_str("---:|");
        }
    }
    let _ = writeln!(s, "{header}\n{rule}");
    let sources: Vec<&str> = reports
        .first()
        .map(|r| r.cells.iter().map(|c| c.source.as_str()).collect())
        .unwrap_or_default();
    for (i, src) in sources.iter().enumerate() {
        let _ = write!(s, "| {src} |");
        for r in reports {
            let m = r.cells[i].metrics;
            let _ = write!(
                s,
                " {:.4} | {:.4} | {:.4} | {:.4} |",
                m.accuracy, m.roc_auc, m.fpr, m.tpr
            );
        }
        s.push('\n');
    }
    s
}

pub fn cross_csv(reports: &[CrossDatasetReport]) -> String {
    let mut s = String::from("direction,source,n_train,n_test,accuracy,roc_auc,fpr,tpr\n");
    for r in reports {
        for c in &r.cells {
            let m = c.metrics;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.direction.as_str(),
                c.source,
                c.n_train,
                c.n_test,
                m.accuracy,
                m.roc_auc,
                m.fpr,
                m.tpr
            );
        }
    }
    s
}

/// ROC points of every fold: `fold,threshold,fpr,tpr`.
pub fn roc_csv(folds: &[FoldScores]) -> Result<String, MetricError> {
    let mut s = String::from("fold,threshold,fpr,tpr\n");
    for f in folds {
        for p in roc_points(&f.scores, &f.truth)? {
            let _ = writeln!(s, "{},{},{},{}", f.fold, p.threshold, p.fpr, p.tpr);
        }
    }
    Ok(s)
}

//! Result rows and deterministic emitters (CSV, JSON, markdown table).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One experiment outcome: dataset, learner, the hyperparameters selected by
/// cross-validation, and the test AUC over repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub learner: String,
    pub loss: String,
    pub order: String,
    pub eta: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub d_features: usize,
    pub gamma: String,
    pub p: f64,
    pub folds: usize,
    pub repeats: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub mean_auc: f64,
    /// Unbiased standard error over repeats.
    pub std_err: f64,
    /// Wall-clock seconds around the learner loops; 0 unless timing enabled.
    pub seconds: f64,
    pub failed_grid_points: usize,
    pub trace_path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

pub const RESULT_CSV_HEADER: &str = "dataset,learner,loss,order,eta,lambda,sigma,d_features,\
gamma,p,folds,repeats,train_fraction,seed,mean_auc,std_err,seconds,failed_grid_points,trace_path";

fn csv_line(r: &ResultRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.dataset,
        r.learner,
        r.loss,
        r.order,
        r.eta,
        r.lambda,
        r.sigma,
        r.d_features,
        r.gamma,
        r.p,
        r.folds,
        r.repeats,
        r.train_fraction,
        r.seed,
        r.mean_auc,
        r.std_err,
        r.seconds,
        r.failed_grid_points,
        r.trace_path.as_deref().unwrap_or("")
    )
}

/// Renders rows in deterministic (dataset, learner) order.
pub fn report(rows: &[ResultRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no result rows to report".into()));
    }
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (&a.dataset, &a.learner).cmp(&(&b.dataset, &b.learner)));
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(RESULT_CSV_HEADER);
            out.push('\n');
            for r in sorted {
                out.push_str(&csv_line(r));
                out.push('\n');
            }
            Ok(out)
        }
        ReportFormat::Json => {
            let owned: Vec<ResultRow> = sorted.into_iter().cloned().collect();
            let mut text = serde_json::to_string_pretty(&owned)?;
            text.push('\n');
            Ok(text)
        }
        ReportFormat::Markdown => {
            // Datasets as rows, learners as columns, cells "AUC±err" x100.
            let mut datasets: Vec<&str> = sorted.iter().map(|r| r.dataset.as_str()).collect();
            datasets.dedup();
            let mut learners: Vec<&str> = sorted.iter().map(|r| r.learner.as_str()).collect();
            learners.sort_unstable();
            learners.dedup();

            let mut out = String::from("| dataset |");
            for l in &learners {
                out.push_str(&format!(" {l} |"));
            }
            out.push_str("\n|---|");
            for _ in &learners {
                out.push_str("---|");
            }
            out.push('\n');
            for ds in datasets {
                out.push_str(&format!("| {ds} |"));
                for l in &learners {
                    let cell = sorted
                        .iter()
                        .find(|r| r.dataset == ds && r.learner == *l)
                        .map(|r| format!("{:.2}±{:.2}", 100.0 * r.mean_auc, 100.0 * r.std_err))
                        .unwrap_or_else(|| "-".into());
                    out.push_str(&format!(" {cell} |"));
                }
                out.push('\n');
            }
            Ok(out)
        }
    }
}

/// File-system friendly run identifier.
pub fn run_id(dataset: &str, learner: &str, seed: u64) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect()
    };
    format!("{}_{}_s{}", clean(dataset), clean(learner), seed)
}

use serde::{Deserialize, Serialize};

use crate::optimizer::AttackConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Attacked,
    /// The clean image was already misclassified; not attacked.
    SkippedMisclassified,
    /// The oracle failed (pre-check or mid-attack).
    Failed,
}

/// One row of the campaign: everything but the images and traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary {
    pub index: usize,
    pub label: usize,
    pub status: ItemStatus,
    pub clean_prediction: Option<usize>,
    pub success: bool,
    pub queries_used: usize,
    pub iterations: usize,
    pub final_prediction: Option<usize>,
    #[serde(with = "crate::serde_util::opt_finite_or_inf")]
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    /// With saved adversarials: whether re-scoring the 8-bit PNG gives the
    /// same success flag as the float image.
    pub png_reproduces_success: Option<bool>,
    pub error: Option<String>,
}

/// Configuration echo stored in `report.json`. Execution details (worker
/// count, output directory) are left out so reports are comparable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: String,
    pub oracle: String,
    pub attack: AttackConfig,
    pub max_items: usize,
    pub save_adversarials: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: ConfigEcho,
    /// Items read from the dataset (at most `max_items`).
    pub items_total: usize,
    /// Items that entered the attack loop; the ASR denominator.
    pub items_attempted: usize,
    pub items_skipped_misclassified: usize,
    pub items_failed: usize,
    pub successes: usize,
    pub asr: f64,
    /// Mean queries over successful attacks.
    #[serde(with = "crate::serde_util::opt_finite_or_inf")]
    pub avg_q: Option<f64>,
    /// Lower median of queries over successful attacks.
    #[serde(with = "crate::serde_util::opt_finite_or_inf")]
    pub med_q: Option<f64>,
    /// Mean PSNR over successful attacks.
    #[serde(with = "crate::serde_util::opt_finite_or_inf")]
    pub mean_psnr: Option<f64>,
    /// Mean SSIM over successful attacks.
    #[serde(with = "crate::serde_util::opt_finite_or_inf")]
    pub mean_ssim: Option<f64>,
    /// One clean-image query per item, outside every attack's budget.
    pub precheck_queries: usize,
    pub attack_queries: usize,
    /// Saved PNGs whose re-score disagrees with the float success flag;
    /// `None` when nothing was saved.
    pub png_mismatches: Option<usize>,
    pub notes: Vec<String>,
    pub per_item: Vec<ItemSummary>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Lower median (element `(n−1)/2` of the sorted values).
pub fn lower_median(values: &[usize]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted
        .get(sorted.len().saturating_sub(1) / 2)
        .map(|&v| v as f64)
}

impl CampaignReport {
    pub fn aggregate(config: ConfigEcho, per_item: Vec<ItemSummary>, notes: Vec<String>) -> Self {
        let count = |s: ItemStatus| per_item.iter().filter(|i| i.status == s).count();
        let attempted: Vec<&ItemSummary> = per_item
            .iter()
            .filter(|i| {
                i.status == ItemStatus::Attacked
                    || (i.status == ItemStatus::Failed && i.clean_prediction.is_some())
            })
            .collect();
        let successes: Vec<&ItemSummary> = per_item.iter().filter(|i| i.success).collect();
        let queries: Vec<usize> = successes.iter().map(|i| i.queries_used).collect();
        let psnrs: Vec<f64> = successes.iter().filter_map(|i| i.psnr).collect();
        let ssims: Vec<f64> = successes.iter().filter_map(|i| i.ssim).collect();
        let asr = if attempted.is_empty() {
            0.0
        } else {
            successes.len() as f64 / attempted.len() as f64
        };
        CampaignReport {
            items_total: per_item.len(),
            items_attempted: attempted.len(),
            items_skipped_misclassified: count(ItemStatus::SkippedMisclassified),
            items_failed: count(ItemStatus::Failed),
            successes: successes.len(),
            asr,
            avg_q: mean(&queries.iter().map(|&q| q as f64).collect::<Vec<_>>()),
            med_q: lower_median(&queries),
            mean_psnr: mean(&psnrs),
            mean_ssim: mean(&ssims),
            precheck_queries: per_item
                .iter()
                .filter(|i| i.clean_prediction.is_some())
                .count(),
            attack_queries: per_item.iter().map(|i| i.queries_used).sum(),
            png_mismatches: per_item
                .iter()
                .any(|i| i.png_reproduces_success.is_some())
                .then(|| {
                    per_item
                        .iter()
                        .filter(|i| i.png_reproduces_success == Some(false))
                        .count()
                }),
            config,
            notes,
            per_item,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `per_item.csv` contents.
    pub fn per_item_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "index",
            "label",
            "status",
            "clean_prediction",
            "success",
            "queries_used",
            "iterations",
            "final_prediction",
            "psnr",
            "ssim",
            "png_reproduces_success",
            "error",
        ])
        .expect("in-memory csv");
        let opt = |v: Option<String>| v.unwrap_or_default();
        for i in &self.per_item {
            let status = match i.status {
                ItemStatus::Attacked => "attacked",
                ItemStatus::SkippedMisclassified => "skipped_misclassified",
                ItemStatus::Failed => "failed",
            };
            w.write_record([
                i.index.to_string(),
                i.label.to_string(),
                status.to_string(),
                opt(i.clean_prediction.map(|v| v.to_string())),
                i.success.to_string(),
                i.queries_used.to_string(),
                i.iterations.to_string(),
                opt(i.final_prediction.map(|v| v.to_string())),
                opt(i.psnr.map(fmt_real)),
                opt(i.ssim.map(fmt_real)),
                opt(i.png_reproduces_success.map(|v| v.to_string())),
                opt(i.error.clone()),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 csv")
    }
}

fn fmt_real(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

/// Query budgets at which the ASR curve is sampled: 50, 100, ... up to
/// `q_max`, plus `q_max` itself when it is not a multiple of 50.
pub fn curve_budgets(q_max: usize) -> Vec<usize> {
    let mut budgets: Vec<usize> = (1..=q_max / 50).map(|k| 50 * k).collect();
    if !q_max.is_multiple_of(50) {
        budgets.push(q_max);
    }
    budgets
}

/// Empirical ASR-versus-budget curve as CSV (`query_budget,asr`):
/// `asr(b)` is the fraction of attempted items that succeeded within `b`
/// queries.
pub fn emit_plot_data(report: &CampaignReport) -> String {
    let mut out = String::from("query_budget,asr\n");
    let denom = report.items_attempted;
    for b in curve_budgets(report.config.attack.q_max) {
        let hits = report
            .per_item
            .iter()
            .filter(|i| i.success && i.queries_used <= b)
            .count();
        let asr = if denom == 0 {
            0.0
        } else {
            hits as f64 / denom as f64
        };
        out.push_str(&format!("{b},{asr}\n"));
    }
    out
}

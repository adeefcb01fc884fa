//! Attack campaigns over a dataset: clean pre-check, per-item attacks,
//! aggregate metrics, report files, transfer checks and ASR curves.
//!
//! Output directory layout:
//!
//! ```text
//! report.json            aggregate metrics, config echo, per-item summaries
//! per_item.csv           the per-item summaries as CSV
//! asr_curve.csv          written by `stba curve`
//! adversarials/          with --save-adversarials:
//!   item_00003.json      full AttackResult (image as base64 f32, flow, traces)
//!   item_00003.png       8-bit rendering of the adversarial image
//! ```

mod report;
mod transfer;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;

use crate::error::{Result, StbaError};
use crate::fixtures;
use crate::imagecore::{
    load_cifar10_file, load_png_dir, save_png, unit_from_u8, Image, LabeledImage,
};
use crate::optimizer::{run_attack, AttackConfig, AttackResult};
use crate::oracle::{CountedOracle, HttpOracle, MlpOracle, Oracle, DEFAULT_HTTP_TIMEOUT};
use crate::rng;

pub use report::{
    curve_budgets, emit_plot_data, lower_median, CampaignReport, ConfigEcho, ItemStatus,
    ItemSummary,
};
pub use transfer::{transfer_check, TransferOutcome};

pub const REPORT_FILE: &str = "report.json";
pub const PER_ITEM_FILE: &str = "per_item.csv";
pub const CURVE_FILE: &str = "asr_curve.csv";
pub const ADVERSARIAL_DIR: &str = "adversarials";

/// Where campaign items come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    /// `cifar10:<batch.bin>`
    Cifar10(PathBuf),
    /// `pngdir:<dir>` with a `labels.csv` sidecar.
    PngDir(PathBuf),
    /// `synthetic:<seed>:<count>`, the built-in 3×8×8 fixture set.
    Synthetic { seed: u64, count: usize },
}

impl FromStr for DatasetSource {
    type Err = StbaError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || StbaError::InvalidConfig(format!("unrecognized dataset descriptor `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "cifar10" => Ok(DatasetSource::Cifar10(rest.into())),
            "pngdir" => Ok(DatasetSource::PngDir(rest.into())),
            "synthetic" => {
                let (seed, count) = rest.split_once(':').ok_or_else(bad)?;
                Ok(DatasetSource::Synthetic {
                    seed: seed.parse().map_err(|_| bad())?,
                    count: count.parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Cifar10(p) => write!(f, "cifar10:{}", p.display()),
            DatasetSource::PngDir(p) => write!(f, "pngdir:{}", p.display()),
            DatasetSource::Synthetic { seed, count } => write!(f, "synthetic:{seed}:{count}"),
        }
    }
}

/// Which black box to attack.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleSource {
    /// `json:<weights.json>`
    Json(PathBuf),
    /// `http:<url>` (a bare `http://...` URL is accepted too).
    Http(String),
    /// `fixture`, the shipped texture victim.
    Fixture,
}

impl FromStr for OracleSource {
    type Err = StbaError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "fixture" {
            return Ok(OracleSource::Fixture);
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(OracleSource::Http(s.to_string()));
        }
        match s.split_once(':') {
            Some(("json", path)) => Ok(OracleSource::Json(path.into())),
            Some(("http", url)) if url.starts_with("//") => Ok(OracleSource::Http(s.to_string())),
            Some(("http", url)) => Ok(OracleSource::Http(url.to_string())),
            _ => Err(StbaError::InvalidConfig(format!(
                "unrecognized model descriptor `{s}`"
            ))),
        }
    }
}

impl fmt::Display for OracleSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSource::Json(p) => write!(f, "json:{}", p.display()),
            OracleSource::Http(u) => write!(f, "http:{u}"),
            OracleSource::Fixture => f.write_str("fixture"),
        }
    }
}

impl OracleSource {
    pub fn resolve(&self, timeout: Duration) -> Result<Box<dyn Oracle>> {
        Ok(match self {
            OracleSource::Json(path) => {
                let bytes = std::fs::read(path).map_err(|e| StbaError::io(path, e))?;
                Box::new(MlpOracle::from_json(&bytes)?)
            }
            OracleSource::Http(url) => Box::new(HttpOracle::connect(url, timeout)?),
            OracleSource::Fixture => Box::new(fixtures::texture_oracle()),
        })
    }
}

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub dataset: DatasetSource,
    pub oracle: OracleSource,
    /// Per-item seeds are derived from `attack.seed` and the item index.
    pub attack: AttackConfig,
    pub max_items: usize,
    pub output_dir: PathBuf,
    pub save_adversarials: bool,
    pub workers: usize,
    pub http_timeout: Duration,
}

impl CampaignConfig {
    pub fn new(
        dataset: DatasetSource,
        oracle: OracleSource,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        CampaignConfig {
            dataset,
            oracle,
            attack: AttackConfig::default(),
            max_items: 100,
            output_dir: output_dir.into(),
            save_adversarials: false,
            workers: 1,
            http_timeout: DEFAULT_HTTP_TIMEOUT,
        }
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            dataset: self.dataset.to_string(),
            oracle: self.oracle.to_string(),
            attack: self.attack.clone(),
            max_items: self.max_items,
            save_adversarials: self.save_adversarials,
        }
    }
}

/// Loads up to `max_items` items. PNG files rejected by the loader are
/// logged and left out.
pub fn load_dataset(
    source: &DatasetSource,
    num_classes: usize,
    max_items: usize,
) -> Result<Vec<LabeledImage>> {
    let mut items = match source {
        DatasetSource::Cifar10(path) => load_cifar10_file(path)?,
        DatasetSource::PngDir(dir) => {
            let load = load_png_dir(dir, num_classes)?;
            for e in &load.errors {
                log::warn!("{}: {}", e.filename, e.message);
            }
            load.items
        }
        DatasetSource::Synthetic { seed, count } => fixtures::synthetic_items(*seed, *count),
    };
    items.truncate(max_items);
    Ok(items)
}

fn reload_png(path: &Path, channels: usize) -> Result<Image> {
    let decoded = image::open(path)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let shape = crate::imagecore::Shape::new(channels, h, w);
    let data: Vec<f64> = match channels {
        1 => decoded
            .to_luma8()
            .pixels()
            .map(|p| unit_from_u8(p[0]))
            .collect(),
        _ => {
            let rgb = decoded.to_rgb8();
            (0..3)
                .flat_map(|c| {
                    rgb.pixels()
                        .map(move |p| unit_from_u8(p[c]))
                        .collect::<Vec<_>>()
                })
                .collect()
        }
    };
    Image::new(shape, data)
}

fn adversarial_stem(dir: &Path, index: usize) -> PathBuf {
    dir.join(ADVERSARIAL_DIR).join(format!("item_{index:05}"))
}

struct ItemRun {
    summary: ItemSummary,
    result: Option<AttackResult>,
}

fn attack_item(
    oracle: &dyn Oracle,
    index: usize,
    item: &LabeledImage,
    base: &AttackConfig,
) -> ItemRun {
    let mut summary = ItemSummary {
        index,
        label: item.label,
        status: ItemStatus::Failed,
        clean_prediction: None,
        success: false,
        queries_used: 0,
        iterations: 0,
        final_prediction: None,
        psnr: None,
        ssim: None,
        png_reproduces_success: None,
        error: None,
    };
    // The clean pre-check runs on its own counter, outside the attack budget.
    let clean = CountedOracle::new(oracle, 1).predict_scores(&item.image);
    let clean = match clean {
        Ok(scores) => scores,
        Err(e) => {
            summary.error = Some(e.to_string());
            return ItemRun {
                summary,
                result: None,
            };
        }
    };
    summary.clean_prediction = Some(clean.argmax());
    if clean.argmax() != item.label {
        summary.status = ItemStatus::SkippedMisclassified;
        return ItemRun {
            summary,
            result: None,
        };
    }

    let cfg = AttackConfig {
        seed: rng::derive_seed(base.seed, index as u64),
        ..base.clone()
    };
    match run_attack(oracle, item, &cfg) {
        Ok(result) => {
            summary.status = if result.error.is_some() {
                ItemStatus::Failed
            } else {
                ItemStatus::Attacked
            };
            summary.success = result.success;
            summary.queries_used = result.queries_used;
            summary.iterations = result.iterations;
            summary.final_prediction = result.final_scores.as_ref().map(|s| s.argmax());
            summary.psnr = Some(result.psnr);
            summary.ssim = Some(result.ssim);
            summary.error = result.error.clone();
            ItemRun {
                summary,
                result: Some(result),
            }
        }
        Err(e) => {
            summary.error = Some(e.to_string());
            ItemRun {
                summary,
                result: None,
            }
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| StbaError::io(path, e))
}

/// Runs a campaign over in-memory items against an already-resolved oracle
/// and writes the report files to `cfg.output_dir`.
pub fn run_campaign_on(
    cfg: &CampaignConfig,
    items: &[LabeledImage],
    oracle: &dyn Oracle,
) -> Result<CampaignReport> {
    cfg.attack.validate()?;
    if cfg.max_items == 0 {
        return Err(StbaError::InvalidConfig(
            "max_items must be at least 1".into(),
        ));
    }
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| StbaError::io(out, e))?;
    if cfg.save_adversarials {
        let dir = out.join(ADVERSARIAL_DIR);
        std::fs::create_dir_all(&dir).map_err(|e| StbaError::io(&dir, e))?;
    }

    let items = &items[..items.len().min(cfg.max_items)];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| StbaError::InvalidConfig(format!("worker pool: {e}")))?;
    let runs: Vec<ItemRun> = pool.install(|| {
        items
            .par_iter()
            .enumerate()
            .map(|(i, item)| attack_item(oracle, i, item, &cfg.attack))
            .collect()
    });

    let mut notes = vec![
        "clean pre-check queries are not counted toward q_max".to_string(),
        "avg_q, med_q, mean_psnr and mean_ssim are over successful attacks; med_q is the lower median"
            .to_string(),
    ];
    let mut summaries = Vec::with_capacity(runs.len());
    for run in runs {
        let mut summary = run.summary;
        if let (true, Some(result)) = (cfg.save_adversarials, &run.result) {
            let stem = adversarial_stem(out, summary.index);
            let json = stem.with_extension("json");
            write_file(&json, serde_json::to_string(result)?.as_bytes())?;
            let png = stem.with_extension("png");
            save_png(&result.adversarial, &png)?;
            // Outside the attack budget, like the pre-check.
            let reloaded = reload_png(&png, result.adversarial.channels())?;
            summary.png_reproduces_success = match oracle.scores(&reloaded) {
                Ok(s) => Some((s.argmax() != summary.label) == result.success),
                Err(e) => {
                    log::warn!("item {}: PNG re-score failed: {e}", summary.index);
                    None
                }
            };
        }
        summaries.push(summary);
    }
    if cfg.save_adversarials {
        notes.push(
            "adversarial PNGs are 8-bit quantized; success flags refer to the float images saved alongside"
                .to_string(),
        );
    }

    let report = CampaignReport::aggregate(cfg.echo(), summaries, notes);
    write_file(&out.join(REPORT_FILE), report.to_json().as_bytes())?;
    write_file(&out.join(PER_ITEM_FILE), report.per_item_csv().as_bytes())?;
    Ok(report)
}

/// Resolves the dataset and oracle, then runs [`run_campaign_on`].
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    let oracle = cfg.oracle.resolve(cfg.http_timeout)?;
    let items = load_dataset(&cfg.dataset, oracle.num_classes(), cfg.max_items)?;
    run_campaign_on(cfg, &items, oracle.as_ref())
}

pub fn load_report(dir: &Path) -> Result<CampaignReport> {
    let path = dir.join(REPORT_FILE);
    let bytes = std::fs::read(&path).map_err(|e| StbaError::io(&path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Writes `asr_curve.csv` for the report in `dir` and returns its contents.
pub fn write_curve(dir: &Path) -> Result<String> {
    let csv = emit_plot_data(&load_report(dir)?);
    write_file(&dir.join(CURVE_FILE), csv.as_bytes())?;
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_parsing() {
        assert_eq!(
            "cifar10:/data/test_batch.bin"
                .parse::<DatasetSource>()
                .unwrap(),
            DatasetSource::Cifar10("/data/test_batch.bin".into())
        );
        assert_eq!(
            "synthetic:7:50".parse::<DatasetSource>().unwrap(),
            DatasetSource::Synthetic { seed: 7, count: 50 }
        );
        assert!("imagenet:/x".parse::<DatasetSource>().is_err());
        assert!("synthetic:x:1".parse::<DatasetSource>().is_err());

        assert_eq!(
            "http:http://127.0.0.1:9000"
                .parse::<OracleSource>()
                .unwrap(),
            OracleSource::Http("http://127.0.0.1:9000".into())
        );
        assert_eq!(
            "http://127.0.0.1:9000".parse::<OracleSource>().unwrap(),
            OracleSource::Http("http://127.0.0.1:9000".into())
        );
        assert_eq!(
            "http://h:1".parse::<OracleSource>().unwrap().to_string(),
            "http:http://h:1"
        );
        assert_eq!(
            "json:m.json".parse::<OracleSource>().unwrap(),
            OracleSource::Json("m.json".into())
        );
        assert!("onnx:m".parse::<OracleSource>().is_err());
    }
}

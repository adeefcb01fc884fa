use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stba_core::fixtures;
use stba_core::harness::{self, CampaignConfig, DatasetSource, OracleSource};
use stba_core::imagecore::save_png;
use stba_core::optimizer::{ApplyTo, AttackConfig};

#[derive(Parser)]
#[command(
    name = "stba",
    version,
    about = "Query-limited spatial-transform black-box attacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack every correctly classified item of a dataset.
    Attack(AttackArgs),
    /// Score a campaign's saved adversarials on a second model.
    Transfer {
        #[arg(long)]
        report: PathBuf,
        /// json:<path> or http:<url>
        #[arg(long)]
        target: OracleSource,
        #[arg(long, default_value_t = 10.0)]
        timeout_secs: f64,
    },
    /// Write and print the ASR-versus-query-budget curve of a campaign.
    Curve {
        #[arg(long)]
        report: PathBuf,
    },
    /// Write the built-in texture model and a PNG dataset for it.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = fixtures::FIXTURE_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
}

#[derive(Args)]
struct AttackArgs {
    /// cifar10:<path>, pngdir:<dir> or synthetic:<seed>:<count>
    #[arg(long)]
    dataset: DatasetSource,
    /// json:<path>, http:<url> or fixture
    #[arg(long)]
    model: OracleSource,
    #[arg(long, default_value_t = 1000)]
    qmax: usize,
    #[arg(long, default_value_t = 10)]
    nsample: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 5.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    xi_init: f64,
    #[arg(long, default_value_t = 3.0)]
    xi_max: f64,
    #[arg(long, default_value_t = 20)]
    adjust_num: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// high, low or full
    #[arg(long, default_value = "high")]
    apply_to: ApplyTo,
    /// Let ξ reach xi-max within the run instead of growing once per
    /// adjust-num iterations toward a horizon it never reaches.
    #[arg(long)]
    rescale_alpha: bool,
    #[arg(long, default_value_t = 0.01)]
    mu_init_std: f64,
    #[arg(long, default_value_t = 100)]
    max_items: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    save_adversarials: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Per-request timeout for HTTP models.
    #[arg(long, default_value_t = 10.0)]
    timeout_secs: f64,
}

fn timeout(secs: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(secs).context("invalid --timeout-secs")
}

fn attack(a: AttackArgs) -> Result<()> {
    let mut cfg = CampaignConfig::new(a.dataset, a.model, a.out);
    cfg.attack = AttackConfig {
        q_max: a.qmax,
        n_sample: a.nsample,
        lr: a.lr,
        sigma: a.sigma,
        lambda: a.lambda,
        xi_init: a.xi_init,
        xi_max: a.xi_max,
        adjust_num: a.adjust_num,
        kappa: a.kappa,
        seed: a.seed,
        apply_to: a.apply_to,
        rescale_alpha: a.rescale_alpha,
        mu_init_std: a.mu_init_std,
    };
    cfg.max_items = a.max_items;
    cfg.save_adversarials = a.save_adversarials;
    cfg.workers = a.workers;
    cfg.http_timeout = timeout(a.timeout_secs)?;

    let report = harness::run_campaign(&cfg)?;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "items {} attempted {} skipped {} failed {}",
        report.items_total,
        report.items_attempted,
        report.items_skipped_misclassified,
        report.items_failed
    );
    println!(
        "asr {:.4} avg_q {} med_q {} psnr {} ssim {}",
        report.asr,
        show(report.avg_q),
        show(report.med_q),
        show(report.mean_psnr),
        show(report.mean_ssim)
    );
    if let Some(n) = report.png_mismatches.filter(|&n| n > 0) {
        println!("{n} saved PNG(s) score differently from their float images after 8-bit rounding");
    }
    println!(
        "report written to {}",
        cfg.output_dir.join(harness::REPORT_FILE).display()
    );
    Ok(())
}

fn fixture(out: PathBuf, seed: u64, count: usize) -> Result<()> {
    let images = out.join("images");
    std::fs::create_dir_all(&images).with_context(|| format!("creating {}", images.display()))?;
    let model = out.join("texture_model.json");
    std::fs::write(&model, fixtures::TEXTURE_MODEL_JSON)
        .with_context(|| format!("writing {}", model.display()))?;
    let mut labels = csv::Writer::from_path(images.join("labels.csv"))?;
    labels.write_record(["filename", "label"])?;
    for (i, item) in fixtures::synthetic_items(seed, count).iter().enumerate() {
        let name = format!("item_{i:05}.png");
        save_png(&item.image, &images.join(&name))?;
        labels.write_record([name, item.label.to_string()])?;
    }
    labels.flush()?;
    println!("model: {}", model.display());
    println!("dataset: pngdir:{}", images.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Attack(a) => attack(a),
        Command::Transfer {
            report,
            target,
            timeout_secs,
        } => {
            let oracle = target.resolve(timeout(timeout_secs)?)?;
            let outcome = harness::transfer_check(&report, oracle.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&outcome)?);
            Ok(())
        }
        Command::Curve { report } => {
            print!("{}", harness::write_curve(&report)?);
            Ok(())
        }
        Command::Fixture { out, seed, count } => fixture(out, seed, count),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

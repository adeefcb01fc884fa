use serde::{Deserialize, Serialize};

use super::loss::total_loss;
use super::nes::{nes_gradient, standard_normal_like, SamplerState};
use super::schedule::{schedule_step, ScheduleState};
use super::{ApplyTo, AttackConfig};
use crate::error::{Result, StbaError};
use crate::imagecore::{frequency_split, psnr, recompose, ssim, Image, LabeledImage};
use crate::oracle::{CountedOracle, Oracle, ScoreVector};
use crate::rng;
use crate::warp::{apply_flow, clip_flow, FlowBudget, FlowField};

/// `[iteration, total loss, adversarial loss, flow loss]` at the success
/// check of each iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord(pub usize, pub f64, pub f64, pub f64);

/// `[iteration, ξ]`; iteration 0 holds the initial budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiRecord(pub usize, pub f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub success: bool,
    pub queries_used: usize,
    pub iterations: usize,
    pub adversarial: Image,
    pub final_flow: FlowField,
    /// Scores of the last success check, if one ran.
    pub final_scores: Option<ScoreVector>,
    pub loss_trace: Vec<LossRecord>,
    pub xi_trace: Vec<XiRecord>,
    #[serde(with = "crate::serde_util::finite_or_inf")]
    pub psnr: f64,
    pub ssim: f64,
    /// Set when the oracle failed mid-attack; the traces are partial.
    pub error: Option<String>,
}

/// The part that gets warped and the part added back unchanged.
fn decompose(x: &Image, apply_to: ApplyTo) -> (Image, Image) {
    match apply_to {
        ApplyTo::HighFrequency => {
            let pair = frequency_split(x);
            (pair.high, pair.low)
        }
        ApplyTo::LowFrequency => {
            let pair = frequency_split(x);
            (pair.low, pair.high)
        }
        ApplyTo::FullImage => (x.clone(), Image::zeros(x.shape())),
    }
}

struct Candidate<'a> {
    moving: &'a Image,
    fixed: &'a Image,
}

impl Candidate<'_> {
    /// Warps the moving part, adds the fixed part, and rounds to the oracle's
    /// input precision.
    fn build(&self, flow: &FlowField) -> Image {
        let warped = apply_flow(self.moving, flow).expect("flow grid matches image");
        recompose(&warped, self.fixed)
            .expect("parts share a shape")
            .to_f32_precision()
    }
}

/// Runs one untargeted attack against `oracle`.
///
/// Each iteration evaluates `n_sample` candidates plus one success check, so
/// it costs `n_sample + 1` queries; an iteration is only started when the
/// whole cost fits in `q_max`. Transport failures end the attack early with
/// `error` set. Invalid inputs are rejected before any query.
pub fn run_attack(
    oracle: &dyn Oracle,
    item: &LabeledImage,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    cfg.validate()?;
    let x = &item.image;
    if x.shape() != oracle.input_shape() {
        return Err(StbaError::shape(oracle.input_shape(), x.shape()));
    }
    if item.label >= oracle.num_classes() {
        return Err(StbaError::LabelOutOfRange {
            label: item.label,
            num_classes: oracle.num_classes(),
        });
    }
    let (h, w) = (x.height(), x.width());
    let y = item.label;

    let mut counted = CountedOracle::new(oracle, cfg.q_max);
    let (moving, fixed) = decompose(x, cfg.apply_to);
    let candidate = Candidate {
        moving: &moving,
        fixed: &fixed,
    };

    let mut rng = rng::seeded(cfg.seed, 0);
    let mu = standard_normal_like(&FlowField::zeros(h, w), &mut rng).map(|e| cfg.mu_init_std * e);
    let f0 = FlowField::zeros(h, w);
    let mut sampler = SamplerState::new(mu, cfg.sigma, rng);
    let mut schedule = ScheduleState::new(cfg);

    let mut result = AttackResult {
        success: false,
        queries_used: 0,
        iterations: 0,
        adversarial: x.clone(),
        final_flow: FlowField::zeros(h, w),
        final_scores: None,
        loss_trace: Vec::new(),
        xi_trace: vec![XiRecord(0, schedule.xi())],
        psnr: f64::INFINITY,
        ssim: 1.0,
        error: None,
    };

    let per_iteration = cfg.n_sample + 1;
    let outcome: Result<()> = (|| {
        while counted.used() + per_iteration <= cfg.q_max {
            result.iterations += 1;
            let t = result.iterations;
            let budget = schedule.budget();

            let samples = sampler.sample_flows(cfg.n_sample);
            let mut losses = Vec::with_capacity(samples.len());
            let mut noise = Vec::with_capacity(samples.len());
            for (flow, eps) in samples {
                let clipped = clip_flow(&flow, budget);
                let scores = counted.predict_scores(&candidate.build(&clipped))?;
                losses.push(total_loss(&scores, y, &clipped, cfg)?.total);
                noise.push(eps);
            }

            let grad = nes_gradient(&losses, &noise)?;
            sampler
                .mu
                .iter_mut()
                .zip(grad.iter())
                .for_each(|(m, g)| *m -= cfg.lr * g);

            if t.is_multiple_of(cfg.adjust_num) {
                schedule = schedule_step(schedule);
            }
            result.xi_trace.push(XiRecord(t, schedule.xi()));

            let offset = FlowField::from_flat(
                h,
                w,
                f0.iter()
                    .zip(sampler.mu.iter())
                    .map(|(a, b)| a + b)
                    .collect(),
            )?;
            let flow = clip_flow(&offset, FlowBudget::new(schedule.xi())?);
            let adversarial = candidate.build(&flow);
            let scores = counted.predict_scores(&adversarial)?;
            let parts = total_loss(&scores, y, &flow, cfg)?;
            result
                .loss_trace
                .push(LossRecord(t, parts.total, parts.adversarial, parts.flow));

            result.success = scores.argmax() != y;
            result.adversarial = adversarial;
            result.final_flow = flow;
            result.final_scores = Some(scores);
            if result.success {
                break;
            }
        }
        Ok(())
    })();

    match outcome {
        Ok(()) | Err(StbaError::BudgetExhausted { .. }) => {}
        Err(e @ StbaError::Transport(_)) => {
            log::warn!("attack aborted after {} queries: {e}", counted.used());
            result.success = false;
            result.error = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }

    result.queries_used = counted.used();
    result.psnr = psnr(x, &result.adversarial)?;
    result.ssim = ssim(x, &result.adversarial)?;
    Ok(result)
}

use crate::error::{Result, StbaError};
use crate::oracle::ScoreVector;
use crate::warp::{flow_smoothness_loss, FlowField};

use super::AttackConfig;

/// `max(s_y − max_{k≠y} s_k, κ)`. Non-positive once the true class is beaten.
pub fn adversarial_margin_loss(scores: &ScoreVector, label: usize, kappa: f64) -> Result<f64> {
    let s = scores.as_slice();
    if label >= s.len() {
        return Err(StbaError::LabelOutOfRange {
            label,
            num_classes: s.len(),
        });
    }
    if s.len() < 2 {
        return Err(StbaError::InvalidConfig(
            "margin loss needs at least two classes".into(),
        ));
    }
    let best_other = s
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != label)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((s[label] - best_other).max(kappa))
}

/// Loss components for one evaluated candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub adversarial: f64,
    pub flow: f64,
}

/// `L_adv + λ · L_flow`.
pub fn total_loss(
    scores: &ScoreVector,
    label: usize,
    flow: &FlowField,
    cfg: &AttackConfig,
) -> Result<LossParts> {
    let adversarial = adversarial_margin_loss(scores, label, cfg.kappa)?;
    let flow = flow_smoothness_loss(flow);
    Ok(LossParts {
        total: adversarial + cfg.lambda * flow,
        adversarial,
        flow,
    })
}

//! The attack objective, the flow-budget schedule, NES gradient estimation,
//! and the query-limited attack loop.

mod attack;
mod loss;
mod nes;
mod schedule;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StbaError};

pub use attack::{run_attack, AttackResult, LossRecord, XiRecord};
pub use loss::{adversarial_margin_loss, total_loss, LossParts};
pub use nes::{nes_gradient, standard_normal_like, SamplerState, LOSS_STD_FLOOR};
pub use schedule::{schedule_step, ScheduleState};

/// Which part of the image the flow field displaces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyTo {
    /// Warp `x − blur(x)` and add back `blur(x)`.
    #[default]
    HighFrequency,
    /// Warp `blur(x)` and add back the residual.
    LowFrequency,
    FullImage,
}

impl std::str::FromStr for ApplyTo {
    type Err = StbaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high" | "high_frequency" => Ok(ApplyTo::HighFrequency),
            "low" | "low_frequency" => Ok(ApplyTo::LowFrequency),
            "full" | "full_image" => Ok(ApplyTo::FullImage),
            other => Err(StbaError::InvalidConfig(format!(
                "unknown apply-to target `{other}` (expected high, low or full)"
            ))),
        }
    }
}

/// Hyperparameters of one attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Hard cap on oracle evaluations, success checks included.
    pub q_max: usize,
    pub n_sample: usize,
    pub lr: f64,
    /// Search-distribution std, in flow units.
    pub sigma: f64,
    /// Weight of the flow smoothness loss.
    pub lambda: f64,
    /// Initial flow budget in pixels.
    pub xi_init: f64,
    pub xi_max: f64,
    /// Iterations between budget increases.
    pub adjust_num: usize,
    /// Floor of the margin loss (≤ 0).
    pub kappa: f64,
    pub seed: u64,
    pub apply_to: ApplyTo,
    /// Spread the budget growth over `⌊Q_max/n_sample⌋ / adjust_num` steps
    /// instead of `⌊Q_max/n_sample⌋`.
    pub rescale_alpha: bool,
    /// Std of the random initial mean flow.
    pub mu_init_std: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        let lr = 0.1;
        let xi_init = 0.1;
        AttackConfig {
            q_max: 1000,
            n_sample: 10,
            lr,
            sigma: 2.0 * lr,
            lambda: 5.0,
            xi_init,
            xi_max: 3.0,
            adjust_num: 20,
            kappa: 0.0,
            seed: 0,
            apply_to: ApplyTo::HighFrequency,
            rescale_alpha: false,
            mu_init_std: xi_init / 10.0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(StbaError::InvalidConfig(m.to_string()));
        if self.n_sample < 2 {
            return fail("n_sample must be at least 2");
        }
        if self.q_max < self.n_sample {
            return fail("q_max must be at least n_sample");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail("lr must be positive");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return fail("sigma must be positive");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return fail("lambda must be nonnegative");
        }
        if !(self.xi_init.is_finite() && self.xi_max.is_finite())
            || self.xi_init < 0.0
            || self.xi_init > self.xi_max
        {
            return fail("flow budgets must satisfy 0 <= xi_init <= xi_max");
        }
        if self.adjust_num == 0 {
            return fail("adjust_num must be at least 1");
        }
        if !self.kappa.is_finite() {
            return fail("kappa must be finite");
        }
        if !(self.mu_init_std.is_finite() && self.mu_init_std >= 0.0) {
            return fail("mu_init_std must be nonnegative");
        }
        Ok(())
    }
}

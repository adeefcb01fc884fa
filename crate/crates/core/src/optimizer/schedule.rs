use crate::warp::FlowBudget;

use super::AttackConfig;

/// Linearly growing flow budget `ξ_t = min(ξ₀ + t·α, ξ_max)`.
///
/// In the literal mode `α = (ξ_max − ξ₀) / T` with `T = ⌊Q_max / n_sample⌋`.
/// Because the attack only steps the schedule every `adjust_num`
/// iterations, `rescale_alpha` divides `T` by `adjust_num` so that `ξ_max`
/// is reachable within the query budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleState {
    pub t: usize,
    pub xi_init: f64,
    pub xi_max: f64,
    pub alpha: f64,
    /// Number of steps after which the budget sits at `xi_max`.
    pub t_total: f64,
}

impl ScheduleState {
    pub fn new(cfg: &AttackConfig) -> Self {
        let t_iters = (cfg.q_max / cfg.n_sample) as f64;
        let t_total = if cfg.rescale_alpha {
            t_iters / cfg.adjust_num as f64
        } else {
            t_iters
        };
        ScheduleState {
            t: 0,
            xi_init: cfg.xi_init,
            xi_max: cfg.xi_max,
            alpha: (cfg.xi_max - cfg.xi_init) / t_total,
            t_total,
        }
    }

    pub fn xi(&self) -> f64 {
        if self.t as f64 >= self.t_total {
            self.xi_max
        } else {
            (self.xi_init + self.t as f64 * self.alpha).min(self.xi_max)
        }
    }

    pub fn budget(&self) -> FlowBudget {
        FlowBudget::new(self.xi()).expect("schedule budget is nonnegative")
    }
}

pub fn schedule_step(s: ScheduleState) -> ScheduleState {
    ScheduleState { t: s.t + 1, ..s }
}

//! Gaussian search distribution over flow fields and the normalized NES
//! gradient estimate.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, StbaError};
use crate::rng::AttackRng;
use crate::warp::FlowField;

/// Below this population std the losses are treated as constant.
pub const LOSS_STD_FLOOR: f64 = 1e-12;

/// Isotropic Gaussian `N(μ, σ²I)` over flow fields.
pub struct SamplerState {
    pub mu: FlowField,
    pub sigma: f64,
    pub rng: AttackRng,
}

impl SamplerState {
    pub fn new(mu: FlowField, sigma: f64, rng: AttackRng) -> Self {
        SamplerState { mu, sigma, rng }
    }

    /// Draws `n` pairs `(μ + σ·ε, ε)` with `ε ~ N(0, I)`.
    pub fn sample_flows(&mut self, n: usize) -> Vec<(FlowField, FlowField)> {
        (0..n)
            .map(|_| {
                let eps = standard_normal_like(&self.mu, &mut self.rng);
                let flow = FlowField::from_flat(
                    self.mu.height(),
                    self.mu.width(),
                    self.mu
                        .iter()
                        .zip(eps.iter())
                        .map(|(m, e)| m + self.sigma * e)
                        .collect(),
                )
                .expect("same grid as mu");
                (flow, eps)
            })
            .collect()
    }
}

/// A field of independent standard normals on the grid of `like`.
pub fn standard_normal_like(like: &FlowField, rng: &mut AttackRng) -> FlowField {
    let flat = (0..like.len())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    FlowField::from_flat(like.height(), like.width(), flat).expect("length matches grid")
}

/// `(1/n) Σ_k L̂_k ε_k` where `L̂ = (L − mean L) / std L` (population std).
/// Returns zeros when the losses are constant.
pub fn nes_gradient(losses: &[f64], eps: &[FlowField]) -> Result<FlowField> {
    if losses.len() != eps.len() {
        return Err(StbaError::InvalidConfig(format!(
            "{} losses for {} noise samples",
            losses.len(),
            eps.len()
        )));
    }
    if losses.len() < 2 {
        return Err(StbaError::InvalidConfig(
            "NES gradient needs at least two samples".into(),
        ));
    }
    let first = &eps[0];
    if eps.iter().any(|e| !e.same_grid(first)) {
        return Err(StbaError::InvalidConfig(
            "noise samples differ in shape".into(),
        ));
    }

    let n = losses.len() as f64;
    let mean = losses.iter().sum::<f64>() / n;
    let std = (losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n).sqrt();

    let mut grad = vec![0.0; first.len()];
    if std >= LOSS_STD_FLOOR {
        for (l, e) in losses.iter().zip(eps) {
            let weight = (l - mean) / std;
            for (g, v) in grad.iter_mut().zip(e.iter()) {
                *g += weight * v;
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
    }
    FlowField::from_flat(first.height(), first.width(), grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn degenerate_sigma_collapses_to_mean() {
        let mu = FlowField::new(2, 2, vec![0.3, -0.1, 0.0, 2.0], vec![1.0; 4]).unwrap();
        let mut st = SamplerState::new(mu.clone(), 1e-30, seeded(1, 0));
        for (f, _) in st.sample_flows(5) {
            for (a, b) in f.iter().zip(mu.iter()) {
                assert!((a - b).abs() <= 1e-20);
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let mu = FlowField::zeros(3, 3);
        let a = SamplerState::new(mu.clone(), 0.2, seeded(9, 0)).sample_flows(4);
        let b = SamplerState::new(mu, 0.2, seeded(9, 0)).sample_flows(4);
        assert_eq!(a, b);
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let mu = FlowField::new(1, 1, vec![0.7], vec![-0.3]).unwrap();
        let sigma = 0.5;
        let n = 100_000;
        let mut st = SamplerState::new(mu, sigma, seeded(2024, 0));
        let mean = st
            .sample_flows(n)
            .iter()
            .map(|(f, _)| f.du()[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.7).abs() < 4.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn constant_losses_give_zero_gradient() {
        let mut rng = seeded(3, 0);
        let like = FlowField::zeros(2, 3);
        let eps: Vec<_> = (0..6)
            .map(|_| standard_normal_like(&like, &mut rng))
            .collect();
        let g = nes_gradient(&[1.5; 6], &eps).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_sample_hand_value() {
        let e1 = FlowField::new(1, 2, vec![1.0, -2.0], vec![0.5, 0.0]).unwrap();
        let e2 = FlowField::new(1, 2, vec![3.0, 1.0], vec![-0.5, 4.0]).unwrap();
        let g = nes_gradient(&[1.0, -1.0], &[e1.clone(), e2.clone()]).unwrap();
        let expected: Vec<f64> = e1
            .iter()
            .zip(e2.iter())
            .map(|(a, b)| (a - b) / 2.0)
            .collect();
        assert_eq!(g.to_flat(), expected);
    }

    #[test]
    fn length_mismatch_is_error() {
        let e = FlowField::zeros(1, 1);
        assert!(nes_gradient(&[1.0, 2.0, 3.0], &[e.clone(), e]).is_err());
    }
}

//! Reference image-quality metrics on unit-range intensities.

use super::Image;
use crate::error::{Result, StbaError};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 1.0;

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(StbaError::shape(a.shape(), b.shape()));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB with peak 1.0. Identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let sse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let mse = sse / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / mse).log10())
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let taps: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let mut window = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for wy in &taps {
        for wx in &taps {
            window.push(wy * wx);
        }
    }
    let total: f64 = window.iter().sum();
    window.iter_mut().for_each(|w| *w /= total);
    window
}

/// Weighted first and second moments: (μa, μb, σa², σb², σab).
#[derive(Default)]
struct Moments {
    mu_a: f64,
    mu_b: f64,
    var_a: f64,
    var_b: f64,
    cov: f64,
}

impl Moments {
    fn ssim(&self) -> f64 {
        let c1 = (SSIM_K1 * DYNAMIC_RANGE).powi(2);
        let c2 = (SSIM_K2 * DYNAMIC_RANGE).powi(2);
        let num = (2.0 * self.mu_a * self.mu_b + c1) * (2.0 * self.cov + c2);
        let den =
            (self.mu_a * self.mu_a + self.mu_b * self.mu_b + c1) * (self.var_a + self.var_b + c2);
        num / den
    }
}

fn moments(samples: impl Iterator<Item = (f64, f64, f64)> + Clone) -> Moments {
    let mut m = Moments::default();
    for (w, a, b) in samples.clone() {
        m.mu_a += w * a;
        m.mu_b += w * b;
    }
    for (w, a, b) in samples {
        let da = a - m.mu_a;
        let db = b - m.mu_b;
        m.var_a += w * da * da;
        m.var_b += w * db * db;
        m.cov += w * da * db;
    }
    m
}

/// Mean SSIM over channels. Uses an 11×11 Gaussian window (σ = 1.5) over
/// all valid window positions; images smaller than the window fall back to
/// a single global-statistics comparison per channel.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let (h, w) = (a.height(), a.width());
    let mut total = 0.0;
    for c in 0..a.channels() {
        let (pa, pb) = (a.plane(c), b.plane(c));
        total += if h < SSIM_WINDOW || w < SSIM_WINDOW {
            let uniform = 1.0 / pa.len() as f64;
            moments(pa.iter().zip(pb).map(|(&x, &y)| (uniform, x, y))).ssim()
        } else {
            let window = gaussian_window();
            let mut sum = 0.0;
            let mut count = 0usize;
            for y0 in 0..=h - SSIM_WINDOW {
                for x0 in 0..=w - SSIM_WINDOW {
                    let taps = (0..SSIM_WINDOW * SSIM_WINDOW).map(|k| {
                        let idx = (y0 + k / SSIM_WINDOW) * w + x0 + k % SSIM_WINDOW;
                        (window[k], pa[idx], pb[idx])
                    });
                    sum += moments(taps).ssim();
                    count += 1;
                }
            }
            sum / count as f64
        };
    }
    Ok(total / a.channels() as f64)
}

//! Synthetic 3×8×8 two-class data and the linear-softmax victim shipped in
//! `fixtures/texture_linear_3x8x8.json`.
//!
//! Each image is a smooth background plus a pixel-scale checkerboard. The
//! checkerboard's phase votes for the true class; a spatially flat
//! red-versus-blue colour cast votes, more weakly, for the other class. The
//! victim's logit difference is
//!
//! ```text
//! z = K · (checker amplitude − colour cast)
//! ```
//!
//! so clean items are classified correctly with margin `K·A·(1 − ratio)`.
//! The 3×3 blur removes the checkerboard almost entirely, so the evidence
//! lives in the high-frequency band, where sub-pixel warps attenuate it.

use rand::Rng;

use crate::imagecore::{unit_from_u8, Image, LabeledImage, Shape};
use crate::oracle::{Activation, DenseLayer, MlpOracle, ModelSpec};
use crate::rng;

pub const FIXTURE_SHAPE: Shape = Shape::new(3, 8, 8);
pub const FIXTURE_CLASSES: usize = 2;
/// Seed of the fixture set used by the acceptance campaigns.
pub const FIXTURE_SEED: u64 = 20_240_601;
/// Logit gain of the texture victim.
pub const TEXTURE_GAIN: f64 = 100.0;

/// Contents of `fixtures/texture_linear_3x8x8.json`.
pub const TEXTURE_MODEL_JSON: &str = include_str!("../fixtures/texture_linear_3x8x8.json");

fn checker(y: usize, x: usize) -> f64 {
    if (x + y).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Builds the texture victim from first principles; the shipped JSON is
/// this model serialized.
pub fn texture_model() -> ModelSpec {
    let Shape {
        channels,
        height,
        width,
    } = FIXTURE_SHAPE;
    let checker_norm = (channels * height * width) as f64;
    let cast_norm = (2 * height * width) as f64;
    let mut row = Vec::with_capacity(FIXTURE_SHAPE.len());
    for c in 0..channels {
        let cast = match c {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        };
        for y in 0..height {
            for x in 0..width {
                // Half of z on each logit: softmax(−z/2, z/2).
                let w = checker(y, x) / checker_norm - cast / cast_norm;
                row.push(0.5 * TEXTURE_GAIN * w);
            }
        }
    }
    let negated = row.iter().map(|w| -w).collect();
    let layer = DenseLayer::new(vec![negated, row], vec![0.0, 0.0], Activation::Softmax)
        .expect("well-formed layer");
    ModelSpec::new(FIXTURE_SHAPE, FIXTURE_CLASSES, vec![layer]).expect("consistent model")
}

pub fn texture_oracle() -> MlpOracle {
    MlpOracle::from_json(TEXTURE_MODEL_JSON.as_bytes()).expect("shipped fixture model is valid")
}

fn quantize(v: f64) -> f64 {
    unit_from_u8((v.clamp(0.0, 1.0) * 255.0).round() as u8)
}

/// `count` deterministic items; labels alternate 0, 1, 0, ...
///
/// Per item: checker amplitude `A ∈ [0.06, 0.12]`, colour cast
/// `C = ratio·A` with `ratio ∈ [0.55, 0.85]`, and a random smooth
/// background. Intensities are quantized to 8 bits.
///
/// The cast is `+C` on red and `−C` on blue, with `C` signed toward the
/// wrong class.
pub fn synthetic_items(seed: u64, count: usize) -> Vec<LabeledImage> {
    let Shape { height, width, .. } = FIXTURE_SHAPE;
    (0..count)
        .map(|i| {
            let mut rng = rng::seeded(seed, i as u64);
            let label = i % 2;
            let sign = if label == 1 { 1.0 } else { -1.0 };
            let amplitude: f64 = rng.random_range(0.06..0.12);
            let ratio: f64 = rng.random_range(0.55..0.85);
            let cast = sign * ratio * amplitude;
            // Red and blue share a base level so the cast is their only difference.
            let (rb, g): (f64, f64) = (rng.random_range(0.35..0.65), rng.random_range(0.35..0.65));
            let base = [rb, g, rb];
            let (gx, gy): (f64, f64) = (rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));

            let mut data = Vec::with_capacity(FIXTURE_SHAPE.len());
            for (c, b) in base.iter().enumerate() {
                let cast_c = match c {
                    0 => cast,
                    2 => -cast,
                    _ => 0.0,
                };
                for y in 0..height {
                    for x in 0..width {
                        let ramp = gx * (x as f64 / (width - 1) as f64 - 0.5)
                            + gy * (y as f64 / (height - 1) as f64 - 0.5);
                        let v = b + cast_c + ramp + sign * amplitude * checker(y, x);
                        data.push(quantize(v));
                    }
                }
            }
            LabeledImage {
                image: Image::new(FIXTURE_SHAPE, data).expect("fixture image is valid"),
                label,
            }
        })
        .collect()
}

/// The texture victim with every weight scaled by a seeded factor in
/// `1 ± noise`; a second model for transfer checks.
pub fn perturbed_texture_model(seed: u64, noise: f64) -> ModelSpec {
    let base = texture_model();
    let layer = &base.layers()[0];
    let mut rng = rng::seeded(seed, 0);
    let rows: Vec<Vec<f64>> = (0..layer.outputs())
        .map(|o| {
            (0..layer.inputs())
                .map(|i| layer.weight(o, i) * (1.0 + rng.random_range(-noise..noise)))
                .collect()
        })
        .collect();
    let layer =
        DenseLayer::new(rows, layer.bias().to_vec(), Activation::Softmax).expect("same dimensions");
    ModelSpec::new(FIXTURE_SHAPE, FIXTURE_CLASSES, vec![layer]).expect("consistent model")
}

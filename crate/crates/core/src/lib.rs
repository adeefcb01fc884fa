//! Query-limited score-based black-box attack that warps the high-frequency
//! component of an image with a smooth flow field found by zeroth-order
//! (NES) search.
//!
//! * [`imagecore`]: image tensors, frequency split, datasets, PSNR/SSIM
//! * [`warp`]: flow fields, bilinear backward warping, smoothness loss
//! * [`optimizer`]: objective, budget schedule, NES estimator, attack loop
//! * [`oracle`]: black-box scorers (in-process MLP, HTTP) with query counting
//! * [`harness`]: campaigns, reports, transfer checks, ASR curves
//! * [`fixtures`]: the synthetic dataset and toy victim used in tests

pub mod error;
pub mod fixtures;
pub mod harness;
pub mod imagecore;
pub mod optimizer;
pub mod oracle;
pub mod rng;
pub(crate) mod serde_util;
pub mod warp;

pub use error::{Result, StbaError};
pub use imagecore::{Image, LabeledImage, Shape};
pub use optimizer::{run_attack, ApplyTo, AttackConfig, AttackResult};
pub use oracle::{Oracle, ScoreVector};
pub use warp::FlowField;

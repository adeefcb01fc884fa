//! Per-pixel flow fields, backward bilinear warping, and the flow
//! smoothness loss.
//!
//! Coordinates: `u` indexes columns (horizontal, `du`), `v` indexes rows
//! (vertical, `dv`). Displacements are in pixels.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StbaError};
use crate::imagecore::Image;

/// Stabilizer inside the square root of the smoothness loss.
pub const SMOOTHNESS_EPS: f64 = 1e-12;

/// A displacement `(du, dv)` for every pixel of an `H×W` grid, stored as two
/// row-major planes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlowRepr")]
pub struct FlowField {
    height: usize,
    width: usize,
    du: Vec<f64>,
    dv: Vec<f64>,
}

#[derive(Deserialize)]
struct FlowRepr {
    height: usize,
    width: usize,
    du: Vec<f64>,
    dv: Vec<f64>,
}

impl TryFrom<FlowRepr> for FlowField {
    type Error = StbaError;

    fn try_from(r: FlowRepr) -> Result<Self> {
        FlowField::new(r.height, r.width, r.du, r.dv)
    }
}

impl FlowField {
    pub fn new(height: usize, width: usize, du: Vec<f64>, dv: Vec<f64>) -> Result<Self> {
        let n = height * width;
        if du.len() != n || dv.len() != n {
            return Err(StbaError::InvalidImage(format!(
                "flow planes have lengths {}/{} but grid is {height}x{width}",
                du.len(),
                dv.len()
            )));
        }
        if du.iter().chain(&dv).any(|v| !v.is_finite()) {
            return Err(StbaError::InvalidImage("non-finite flow value".into()));
        }
        Ok(FlowField {
            height,
            width,
            du,
            dv,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        FlowField {
            height,
            width,
            du: vec![0.0; height * width],
            dv: vec![0.0; height * width],
        }
    }

    /// Builds a field from a flat `[du plane, dv plane]` vector.
    pub fn from_flat(height: usize, width: usize, flat: Vec<f64>) -> Result<Self> {
        let n = height * width;
        if flat.len() != 2 * n {
            return Err(StbaError::InvalidImage(format!(
                "flat flow has {} elements, expected {}",
                flat.len(),
                2 * n
            )));
        }
        let mut du = flat;
        let dv = du.split_off(n);
        FlowField::new(height, width, du, dv)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn du(&self) -> &[f64] {
        &self.du
    }

    pub fn dv(&self) -> &[f64] {
        &self.dv
    }

    /// Number of scalar parameters (`2·H·W`).
    pub fn len(&self) -> usize {
        2 * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates over `du` then `dv`.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.du.iter().chain(&self.dv)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.du.iter_mut().chain(self.dv.iter_mut())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    /// Largest absolute displacement component.
    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &FlowField) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FlowField {
        FlowField {
            height: self.height,
            width: self.width,
            du: self.du.iter().map(|&v| f(v)).collect(),
            dv: self.dv.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Elementwise bound `ξ ≥ 0` on flow displacements, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FlowBudget(f64);

impl FlowBudget {
    pub fn new(xi: f64) -> Result<Self> {
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(StbaError::InvalidConfig(format!(
                "flow budget must be finite and nonnegative, got {xi}"
            )));
        }
        Ok(FlowBudget(xi))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Backward bilinear warp: output pixel `(v, u)` samples `src` at
/// `(u + du, v + dv)`, with sample coordinates clamped to the image
/// rectangle. One flow drives every channel.
pub fn apply_flow(src: &Image, flow: &FlowField) -> Result<Image> {
    let (h, w) = (src.height(), src.width());
    if flow.height != h || flow.width != w {
        return Err(StbaError::shape((h, w), (flow.height, flow.width)));
    }
    let (max_u, max_v) = ((w - 1) as f64, (h - 1) as f64);

    // Sampling taps are shared across channels.
    let taps: Vec<[(usize, f64); 4]> = (0..h * w)
        .map(|p| {
            let su = ((p % w) as f64 + flow.du[p]).clamp(0.0, max_u);
            let sv = ((p / w) as f64 + flow.dv[p]).clamp(0.0, max_v);
            let (u0, v0) = (su.floor(), sv.floor());
            let (fu, fv) = (su - u0, sv - v0);
            let (u0, v0) = (u0 as usize, v0 as usize);
            let (u1, v1) = ((u0 + 1).min(w - 1), (v0 + 1).min(h - 1));
            [
                (v0 * w + u0, (1.0 - fu) * (1.0 - fv)),
                (v0 * w + u1, fu * (1.0 - fv)),
                (v1 * w + u0, (1.0 - fu) * fv),
                (v1 * w + u1, fu * fv),
            ]
        })
        .collect();

    let mut data = Vec::with_capacity(src.data().len());
    for c in 0..src.channels() {
        let plane = src.plane(c);
        data.extend(
            taps.iter()
                .map(|t| t.iter().map(|&(i, wgt)| plane[i] * wgt).sum::<f64>()),
        );
    }
    Ok(Image::from_parts_unchecked(src.shape(), data))
}

/// Clamps every displacement component to `[-ξ, ξ]`.
pub fn clip_flow(flow: &FlowField, budget: FlowBudget) -> FlowField {
    let xi = budget.value();
    flow.map(|v| v.clamp(-xi, xi))
}

/// `Σ_p Σ_{q ∈ N4(p)} sqrt(|Δu_p − Δu_q|² + |Δv_p − Δv_q|² + ε)`, where each
/// adjacent pair is visited from both endpoints.
pub fn flow_smoothness_loss(flow: &FlowField) -> f64 {
    let (h, w) = (flow.height, flow.width);
    let term = |a: usize, b: usize| {
        let du = flow.du[a] - flow.du[b];
        let dv = flow.dv[a] - flow.dv[b];
        (du * du + dv * dv + SMOOTHNESS_EPS).sqrt()
    };
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                sum += term(p, p + 1);
            }
            if y + 1 < h {
                sum += term(p, p + w);
            }
        }
    }
    2.0 * sum
}

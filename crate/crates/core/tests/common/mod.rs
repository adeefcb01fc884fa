#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use rand::Rng;
use stba_core::imagecore::unit_from_u8;
use stba_core::oracle::{WireError, WireImage, WireMeta, WireScores};
use stba_core::{Image, Oracle, Result, ScoreVector, Shape};

/// Returns the same scores for every input and counts calls.
pub struct FixedOracle {
    pub shape: Shape,
    pub scores: Vec<f64>,
    pub calls: AtomicUsize,
}

impl FixedOracle {
    pub fn new(shape: Shape, scores: Vec<f64>) -> Self {
        FixedOracle {
            shape,
            scores,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Oracle for FixedOracle {
    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn num_classes(&self) -> usize {
        self.scores.len()
    }

    fn scores(&self, _img: &Image) -> Result<ScoreVector> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        ScoreVector::new(self.scores.clone())
    }
}

/// Wraps an oracle and records every call in order.
pub struct Recording<O> {
    pub inner: O,
    pub calls: AtomicUsize,
}

impl<O: Oracle> Recording<O> {
    pub fn new(inner: O) -> Self {
        Recording {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<O: Oracle> Oracle for Recording<O> {
    fn input_shape(&self) -> Shape {
        self.inner.input_shape()
    }

    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn scores(&self, img: &Image) -> Result<ScoreVector> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.scores(img)
    }
}

/// Random image with 8-bit intensities.
pub fn random_image(rng: &mut impl Rng, shape: Shape) -> Image {
    let data = (0..shape.len())
        .map(|_| unit_from_u8(rng.random()))
        .collect();
    Image::new(shape, data).unwrap()
}

/// Minimal scoring server. `score` maps a decoded request image to either
/// a score list or an error message (sent as HTTP 400).
pub fn spawn_stub_server<F>(meta: WireMeta, score: F) -> String
where
    F: Fn(&Image) -> std::result::Result<Vec<f64>, String> + Send + Sync + 'static,
{
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let port = server.server_addr().to_ip().unwrap().port();
    let score = Arc::new(score);
    thread::spawn(move || {
        let json = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
        for mut request in server.incoming_requests() {
            let (status, body) = match (request.method(), request.url()) {
                (tiny_http::Method::Get, "/v1/meta") => {
                    (200, serde_json::to_string(&meta).unwrap())
                }
                (tiny_http::Method::Post, "/v1/scores") => {
                    let mut raw = String::new();
                    request.as_reader().read_to_string(&mut raw).unwrap();
                    let decoded = serde_json::from_str::<WireImage>(&raw)
                        .map_err(|e| e.to_string())
                        .and_then(|w| w.to_image().map_err(|e| e.to_string()));
                    match decoded.and_then(|img| score(&img)) {
                        Ok(scores) => (200, serde_json::to_string(&WireScores { scores }).unwrap()),
                        Err(error) => (400, serde_json::to_string(&WireError { error }).unwrap()),
                    }
                }
                _ => (404, r#"{"error":"not found"}"#.to_string()),
            };
            let response = tiny_http::Response::from_string(body)
                .with_status_code(status)
                .with_header(json.clone());
            let _ = request.respond(response);
        }
    });
    format!("http://127.0.0.1:{port}")
}

/// Cosine between the NES estimate (50 samples, σ = 0.2) and the analytic
/// gradient `2(μ − f*)` of `‖f − f*‖²` on a 4×4 flow grid.
pub fn nes_quadratic_cosine(seed: u64) -> f64 {
    use stba_core::optimizer::{nes_gradient, SamplerState};
    use stba_core::{rng, FlowField};

    let mut setup = rng::seeded(seed, 1);
    let mut field = || {
        let flat = (0..32).map(|_| setup.random_range(-1.0..1.0)).collect();
        FlowField::from_flat(4, 4, flat).unwrap()
    };
    let (mu, target) = (field(), field());
    let analytic: Vec<f64> = mu
        .iter()
        .zip(target.iter())
        .map(|(m, t)| 2.0 * (m - t))
        .collect();

    let mut sampler = SamplerState::new(mu, 0.2, rng::seeded(seed, 2));
    let (flows, eps): (Vec<FlowField>, Vec<FlowField>) =
        sampler.sample_flows(50).into_iter().unzip();
    let losses: Vec<f64> = flows
        .iter()
        .map(|f| {
            f.iter()
                .zip(target.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum()
        })
        .collect();
    let estimate = nes_gradient(&losses, &eps).unwrap().to_flat();

    let dot: f64 = estimate.iter().zip(&analytic).map(|(a, b)| a * b).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(&estimate) * norm(&analytic))
}

/// Gradients for `losses`, `a + b·losses` (b > 0) and the same noise.
pub fn nes_affine_pair(seed: u64, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    use stba_core::optimizer::{nes_gradient, standard_normal_like};
    use stba_core::{rng, FlowField};

    let mut r = rng::seeded(seed, 0);
    let grid = FlowField::zeros(3, 3);
    let eps: Vec<FlowField> = (0..10)
        .map(|_| standard_normal_like(&grid, &mut r))
        .collect();
    let losses: Vec<f64> = (0..10).map(|_| r.random_range(-2.0..2.0)).collect();
    let moved: Vec<f64> = losses.iter().map(|l| a + b * l).collect();
    (
        nes_gradient(&losses, &eps).unwrap().to_flat(),
        nes_gradient(&moved, &eps).unwrap().to_flat(),
    )
}

/// Nearest-pixel gather at clamped integer coordinates.
pub fn integer_gather(src: &Image, du: &[i64], dv: &[i64]) -> Image {
    let (c, h, w) = (src.channels(), src.height(), src.width());
    let mut out = Vec::with_capacity(src.data().len());
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                let k = y * w + x;
                let sx = (x as i64 + du[k]).clamp(0, w as i64 - 1) as usize;
                let sy = (y as i64 + dv[k]).clamp(0, h as i64 - 1) as usize;
                out.push(src.get(ch, sy, sx));
            }
        }
    }
    Image::new(src.shape(), out).unwrap()
}

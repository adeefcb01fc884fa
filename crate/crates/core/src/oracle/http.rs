//! HTTP scoring client.
//!
//! Wire protocol (JSON, `Content-Type: application/json`):
//!
//! * `GET  /v1/meta`   → `{"num_classes":N,"input_shape":[C,H,W]}`
//! * `POST /v1/scores` with `{"shape":[C,H,W],"data":[f32...]}` (row-major
//!   `C, H, W`) → `{"scores":[f64...]}`
//! * errors: HTTP 400 with `{"error":"..."}`

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Oracle, ScoreVector};
use crate::error::{Result, StbaError};
use crate::imagecore::{Image, Shape};

pub const DEFAULT_HTTP_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireMeta {
    pub num_classes: usize,
    pub input_shape: Shape,
}

/// Request body of `POST /v1/scores`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireImage {
    pub shape: Shape,
    pub data: Vec<f32>,
}

impl WireImage {
    pub fn from_image(img: &Image) -> Self {
        WireImage {
            shape: img.shape(),
            data: img.to_f32_vec(),
        }
    }

    pub fn to_image(&self) -> Result<Image> {
        Image::from_f32(self.shape, &self.data)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireScores {
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub error: String,
}

/// Oracle backed by a remote scoring service. The agent is safe to share
/// across attack workers.
pub struct HttpOracle {
    agent: ureq::Agent,
    base: String,
    meta: WireMeta,
}

fn transport(e: impl std::fmt::Display) -> StbaError {
    StbaError::Transport(e.to_string())
}

fn read_body<T: for<'de> Deserialize<'de>>(
    mut resp: ureq::http::Response<ureq::Body>,
    what: &str,
) -> Result<T> {
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_string().map_err(transport)?;
    if status != 200 {
        let detail = serde_json::from_str::<WireError>(&body)
            .map(|e| e.error)
            .unwrap_or(body);
        return Err(StbaError::Transport(format!(
            "{what}: HTTP {status}: {detail}"
        )));
    }
    serde_json::from_str(&body).map_err(|e| StbaError::Transport(format!("{what}: {e}")))
}

impl HttpOracle {
    /// Connects to `endpoint` (e.g. `http://127.0.0.1:8080`) and fetches
    /// `/v1/meta`.
    pub fn connect(endpoint: &str, timeout: Duration) -> Result<Self> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let base = endpoint.trim_end_matches('/').to_string();
        let resp = agent
            .get(format!("{base}/v1/meta"))
            .call()
            .map_err(transport)?;
        let meta: WireMeta = read_body(resp, "GET /v1/meta")?;
        if meta.num_classes < 2 || meta.input_shape.is_empty() {
            return Err(StbaError::Transport(format!("unusable meta: {meta:?}")));
        }
        Ok(HttpOracle { agent, base, meta })
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    pub fn http_predict(&self, img: &Image) -> Result<ScoreVector> {
        if img.shape() != self.meta.input_shape {
            return Err(StbaError::shape(self.meta.input_shape, img.shape()));
        }
        let resp = self
            .agent
            .post(format!("{}/v1/scores", self.base))
            .send_json(WireImage::from_image(img))
            .map_err(transport)?;
        let WireScores { scores } = read_body(resp, "POST /v1/scores")?;
        if scores.len() != self.meta.num_classes {
            return Err(StbaError::Transport(format!(
                "server returned {} scores but declared {} classes",
                scores.len(),
                self.meta.num_classes
            )));
        }
        ScoreVector::new(scores)
    }
}

impl Oracle for HttpOracle {
    fn input_shape(&self) -> Shape {
        self.meta.input_shape
    }

    fn num_classes(&self) -> usize {
        self.meta.num_classes
    }

    fn scores(&self, img: &Image) -> Result<ScoreVector> {
        self.http_predict(img)
    }
}

//! Black-box scorers: the [`Oracle`] trait, per-attack query counting, an
//! in-process MLP engine, and an HTTP client.
//!
//! Attacks only look at score differences and the argmax, so backends may
//! return probabilities or logits. A campaign should stick to one backend.

mod http;
mod mlp;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StbaError};
use crate::imagecore::{Image, Shape};

pub use http::{HttpOracle, WireError, WireImage, WireMeta, WireScores, DEFAULT_HTTP_TIMEOUT};
pub use mlp::{load_model_spec, Activation, DenseLayer, MlpOracle, ModelSpec};

/// Per-class scores returned by an oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(StbaError::Transport("non-finite score".into()));
        }
        Ok(ScoreVector(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest score; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.0.iter().enumerate() {
            if s > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// A classifier that can only be queried for scores.
pub trait Oracle: Send + Sync {
    fn input_shape(&self) -> Shape;

    fn num_classes(&self) -> usize;

    /// One model evaluation. Implementations do no budget accounting.
    fn scores(&self, img: &Image) -> Result<ScoreVector>;
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn input_shape(&self) -> Shape {
        (**self).input_shape()
    }

    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn scores(&self, img: &Image) -> Result<ScoreVector> {
        (**self).scores(img)
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn input_shape(&self) -> Shape {
        (**self).input_shape()
    }

    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn scores(&self, img: &Image) -> Result<ScoreVector> {
        (**self).scores(img)
    }
}

impl<O: Oracle + ?Sized> Oracle for Arc<O> {
    fn input_shape(&self) -> Shape {
        (**self).input_shape()
    }

    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn scores(&self, img: &Image) -> Result<ScoreVector> {
        (**self).scores(img)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryCounter {
    used: usize,
    limit: usize,
}

impl QueryCounter {
    pub fn new(limit: usize) -> Self {
        QueryCounter { used: 0, limit }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.used
    }

    fn consume(&mut self) -> Result<()> {
        if self.used >= self.limit {
            return Err(StbaError::BudgetExhausted {
                used: self.used,
                limit: self.limit,
            });
        }
        self.used += 1;
        Ok(())
    }
}

/// An oracle paired with its own query budget. Every evaluation that reaches
/// the backend costs exactly one query.
pub struct CountedOracle<'a> {
    oracle: &'a dyn Oracle,
    counter: QueryCounter,
}

impl<'a> CountedOracle<'a> {
    pub fn new(oracle: &'a dyn Oracle, limit: usize) -> Self {
        CountedOracle {
            oracle,
            counter: QueryCounter::new(limit),
        }
    }

    pub fn counter(&self) -> QueryCounter {
        self.counter
    }

    pub fn used(&self) -> usize {
        self.counter.used
    }

    pub fn oracle(&self) -> &'a dyn Oracle {
        self.oracle
    }

    pub fn predict_scores(&mut self, img: &Image) -> Result<ScoreVector> {
        let expected = self.oracle.input_shape();
        if img.shape() != expected {
            return Err(StbaError::shape(expected, img.shape()));
        }
        self.counter.consume()?;
        let scores = self.oracle.scores(img)?;
        if scores.len() != self.oracle.num_classes() {
            return Err(StbaError::Transport(format!(
                "oracle returned {} scores, declared {}",
                scores.len(),
                self.oracle.num_classes()
            )));
        }
        Ok(scores)
    }
}

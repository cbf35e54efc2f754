//! Base classifiers: the oracle boundary that smoothing wraps.
//!
//! Anything that answers "which class is this sequence" can sit behind
//! [`BaseClassifier`]: the built-in histogram model, an external process
//! speaking the line protocol, or an HTTP endpoint. Smoothing soundness
//! assumes the classifier is a fixed deterministic function of its input for
//! the lifetime of a certification run.

mod external;
mod histogram;

pub use external::{HttpClassifier, SubprocessClassifier};
pub use histogram::{calibrate_threshold, train_histogram, HistogramModel, TrainConfig};

use crate::error::Result;
use crate::seq::TokenSeq;

/// A deterministic classifier over token sequences.
pub trait BaseClassifier: Send + Sync {
    /// Class index in `[0, num_classes)`.
    fn query(&self, x: &TokenSeq) -> Result<usize>;

    fn num_classes(&self) -> usize;

    /// Per-class scores, when the classifier exposes them.
    fn scores(&self, _x: &TokenSeq) -> Option<Vec<f64>> {
        None
    }

    /// Whether queries may be issued from multiple threads at once. The
    /// certification engine serializes queries when this is false.
    fn concurrent_queries(&self) -> bool {
        false
    }
}

/// A classifier that always answers the same class; useful as a stub.
#[derive(Debug, Clone, Copy)]
pub struct ConstantClassifier {
    pub class: usize,
    pub num_classes: usize,
}

impl BaseClassifier for ConstantClassifier {
    fn query(&self, _x: &TokenSeq) -> Result<usize> {
        Ok(self.class)
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn concurrent_queries(&self) -> bool {
        true
    }
}

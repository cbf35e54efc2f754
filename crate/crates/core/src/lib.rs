//! Certified edit-distance robustness for discrete sequence classifiers.
//!
//! Wraps any black-box classifier over token sequences in a randomized
//! deletion (or ablation) smoothing layer and certifies that the smoothed
//! prediction cannot change within an edit-distance ball whose radius is
//! computed in closed form. Brute-force oracles verify every certificate at
//! desk scale.

pub mod certify;
pub mod chunk;
pub mod classifiers;
pub mod distance;
pub mod error;
pub mod neighborhood;
pub mod oracle;
pub mod seq;
pub mod smoothing;

pub use error::{Error, Result};

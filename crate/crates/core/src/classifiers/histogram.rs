//! A logistic model over token-frequency histograms.
//!
//! This is the built-in trainable base classifier: a linear score over the
//! normalized token histogram plus a log-length feature. It is deliberately
//! small — the smoothing and certification layers treat it exactly like any
//! other black-box classifier.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::BaseClassifier;
use crate::error::{Error, Result};
use crate::seq::{Alphabet, TokenSeq};
use crate::smoothing::{Mechanism, SeedSpec};

/// Binary logistic classifier: predicts class 1 iff
/// `w . hist(x) + w_len * ln(1 + |x|) + bias >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramModel {
    alphabet: Alphabet,
    token_weights: Vec<f64>,
    length_weight: f64,
    bias: f64,
    threshold: f64,
}

const MODEL_HEADER: &str = "editcert-histmodel v1";

impl HistogramModel {
    /// All-zero weights with a zero decision threshold.
    pub fn zeros(alphabet: Alphabet) -> Self {
        HistogramModel {
            alphabet,
            token_weights: vec![0.0; alphabet.size() as usize],
            length_weight: 0.0,
            bias: 0.0,
            threshold: 0.0,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = threshold;
    }

    pub fn token_weights(&self) -> &[f64] {
        &self.token_weights
    }

    pub fn length_weight(&self) -> f64 {
        self.length_weight
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    fn features(&self, x: &TokenSeq) -> (Vec<f64>, f64) {
        let mut hist = vec![0.0f64; self.alphabet.size() as usize];
        if !x.is_empty() {
            let inv = 1.0 / x.len() as f64;
            for &t in x.tokens() {
                hist[t as usize] += inv;
            }
        }
        let log_len = (1.0 + x.len() as f64).ln();
        (hist, log_len)
    }

    /// Raw decision score; depends on `x` only through its histogram and length.
    pub fn score(&self, x: &TokenSeq) -> Result<f64> {
        if x.alphabet().size() > self.alphabet.size() {
            return Err(Error::AlphabetMismatch {
                left: x.alphabet().size(),
                right: self.alphabet.size(),
            });
        }
        let (hist, log_len) = self.features(x);
        let dot: f64 = self
            .token_weights
            .iter()
            .zip(&hist)
            .map(|(w, h)| w * h)
            .sum();
        Ok(dot + self.length_weight * log_len + self.bias)
    }

    pub fn predict(&self, x: &TokenSeq) -> Result<usize> {
        Ok(usize::from(self.score(x)? >= self.threshold))
    }

    /// Line-oriented text format: header, alphabet size, threshold, one
    /// `w <index> <decimal>` per nonzero token weight, then `wlen` and `bias`.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "{MODEL_HEADER}")?;
        writeln!(writer, "alphabet {}", self.alphabet.size())?;
        writeln!(writer, "threshold {}", self.threshold)?;
        for (i, w) in self.token_weights.iter().enumerate() {
            if *w != 0.0 {
                writeln!(writer, "w {i} {w}")?;
            }
        }
        writeln!(writer, "wlen {}", self.length_weight)?;
        writeln!(writer, "bias {}", self.bias)?;
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(header)) if header.trim() == MODEL_HEADER => {}
            _ => return Err(Error::ModelFormat("missing model header".to_string())),
        }
        let mut alphabet: Option<Alphabet> = None;
        let mut model: Option<HistogramModel> = None;
        let mut threshold = 0.0f64;
        for line in lines {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(key) = parts.next() else { continue };
            let mut value = |name: &str| -> Result<f64> {
                parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::ModelFormat(format!("bad {name} line: {line:?}")))
            };
            match key {
                "alphabet" => {
                    let size = value("alphabet")? as u32;
                    let a = Alphabet::new(size)?;
                    alphabet = Some(a);
                    let mut m = HistogramModel::zeros(a);
                    m.threshold = threshold;
                    model = Some(m);
                }
                "threshold" => {
                    threshold = value("threshold")?;
                    if let Some(m) = model.as_mut() {
                        m.threshold = threshold;
                    }
                }
                "w" => {
                    let m = model
                        .as_mut()
                        .ok_or_else(|| Error::ModelFormat("w before alphabet".to_string()))?;
                    let index = value("w index")? as usize;
                    let weight = value("w value")?;
                    if index >= m.token_weights.len() {
                        return Err(Error::ModelFormat(format!(
                            "weight index {index} outside alphabet"
                        )));
                    }
                    m.token_weights[index] = weight;
                }
                "wlen" => {
                    let m = model
                        .as_mut()
                        .ok_or_else(|| Error::ModelFormat("wlen before alphabet".to_string()))?;
                    m.length_weight = value("wlen")?;
                }
                "bias" => {
                    let m = model
                        .as_mut()
                        .ok_or_else(|| Error::ModelFormat("bias before alphabet".to_string()))?;
                    m.bias = value("bias")?;
                }
                _ => return Err(Error::ModelFormat(format!("unknown key {key:?}"))),
            }
        }
        let _ = alphabet;
        model.ok_or_else(|| Error::ModelFormat("missing alphabet line".to_string()))
    }
}

impl BaseClassifier for HistogramModel {
    fn query(&self, x: &TokenSeq) -> Result<usize> {
        self.predict(x)
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn scores(&self, x: &TokenSeq) -> Option<Vec<f64>> {
        let s = self.score(x).ok()? - self.threshold;
        Some(vec![-s, s])
    }

    fn concurrent_queries(&self) -> bool {
        true
    }
}

/// Training settings for the histogram model.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Train-time smoothing: each example is re-perturbed every epoch.
    pub mechanism: Option<Mechanism>,
    /// Minimum retained tokens per training draw; never applied outside
    /// training.
    pub min_preserved: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            learning_rate: 1.0,
            batch_size: 16,
            mechanism: None,
            min_preserved: 0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains a binary histogram model by seeded mini-batch gradient descent.
///
/// Every example is re-perturbed by the train-time mechanism each epoch, so
/// the base model learns on the same input distribution that smoothing will
/// query. Deterministic for a fixed `(dataset, cfg, seed)`.
pub fn train_histogram(
    dataset: &[(TokenSeq, usize)],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<HistogramModel> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("empty training set".to_string()));
    }
    let alphabet = match &cfg.mechanism {
        Some(Mechanism::Ablation(a)) => Alphabet::new(a.null_token() + 1)?,
        _ => dataset[0].0.alphabet(),
    };
    for (x, label) in dataset {
        if *label > 1 {
            return Err(Error::ClassOutOfRange {
                class: *label,
                classes: 2,
            });
        }
        if x.alphabet().size() > alphabet.size() {
            return Err(Error::AlphabetMismatch {
                left: x.alphabet().size(),
                right: alphabet.size(),
            });
        }
    }
    for class in 0..=1usize {
        if !dataset.iter().any(|(_, label)| *label == class) {
            return Err(Error::InvalidConfig(format!(
                "training set has no examples of class {class}"
            )));
        }
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".to_string()));
    }

    let mut model = HistogramModel::zeros(alphabet);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad_w = vec![0.0f64; alphabet.size() as usize];
            let mut grad_len = 0.0f64;
            let mut grad_bias = 0.0f64;
            for &idx in batch {
                let (x, label) = &dataset[idx];
                let draw_seed = SeedSpec::new(seed, (epoch * dataset.len() + idx) as u64);
                let perturbed = match &cfg.mechanism {
                    Some(mech) => mech.sample_with_floor(x, draw_seed, cfg.min_preserved)?,
                    None => x.clone(),
                };
                let (hist, log_len) = model.features(&perturbed);
                let score = model
                    .token_weights
                    .iter()
                    .zip(&hist)
                    .map(|(w, h)| w * h)
                    .sum::<f64>()
                    + model.length_weight * log_len
                    + model.bias;
                let residual = sigmoid(score) - *label as f64;
                for (g, h) in grad_w.iter_mut().zip(&hist) {
                    *g += residual * h;
                }
                grad_len += residual * log_len;
                grad_bias += residual;
            }
            let step = cfg.learning_rate / batch.len() as f64;
            for (w, g) in model.token_weights.iter_mut().zip(&grad_w) {
                *w -= step * g;
            }
            model.length_weight -= step * grad_len;
            model.bias -= step * grad_bias;
        }
    }
    Ok(model)
}

/// Picks the smallest decision threshold whose empirical false-positive rate
/// on the benign (class 0) validation examples is at most `target_fpr`.
///
/// With `smoothing = Some((mech, n))`, the FPR is measured on the smoothed
/// majority vote over `n` seeded draws per example rather than on raw base
/// scores. Ties resolve toward the higher threshold.
pub fn calibrate_threshold(
    model: &HistogramModel,
    validation: &[(TokenSeq, usize)],
    smoothing: Option<(&Mechanism, usize)>,
    target_fpr: f64,
    seed: u64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&target_fpr) {
        return Err(Error::InvalidConfig(format!(
            "target_fpr {target_fpr} outside [0, 1]"
        )));
    }
    let benign: Vec<&TokenSeq> = validation
        .iter()
        .filter(|(_, label)| *label == 0)
        .map(|(x, _)| x)
        .collect();
    if benign.is_empty() {
        return Err(Error::InvalidConfig(
            "validation set has no benign examples".to_string(),
        ));
    }
    // Critical score per example: the example is flagged malicious at
    // threshold t exactly when t <= critical score.
    let mut critical: Vec<f64> = Vec::with_capacity(benign.len());
    for (row, x) in benign.iter().enumerate() {
        match smoothing {
            None => critical.push(model.score(x)?),
            Some((mech, n)) => {
                if n == 0 {
                    return Err(Error::InvalidConfig(
                        "smoothed calibration needs at least one sample".to_string(),
                    ));
                }
                let mut scores = Vec::with_capacity(n);
                for i in 0..n {
                    let draw_seed = SeedSpec::new(seed, (row * n + i) as u64);
                    let z = mech.sample(x, draw_seed)?;
                    scores.push(model.score(&z)?);
                }
                // Majority vote flags the example iff more than half the
                // draws score at or above t, i.e. iff t <= the
                // (floor(n/2)+1)-th largest score.
                scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
                critical.push(scores[n / 2]);
            }
        }
    }
    Ok(select_threshold(&mut critical, target_fpr))
}

/// Smallest threshold flagging at most `floor(target * len)` of the given
/// critical scores (an example is flagged iff `score >= threshold`).
pub(crate) fn select_threshold(critical: &mut [f64], target_fpr: f64) -> f64 {
    critical.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = critical.len();
    let allowed = (target_fpr * n as f64).floor() as usize;
    if allowed >= n {
        return critical[0];
    }
    // Flag count at threshold candidate critical[i] is n - (first index with
    // that value); scan ascending for the smallest admissible candidate.
    for i in 0..n {
        if i == 0 || critical[i] > critical[i - 1] {
            if n - i <= allowed {
                return critical[i];
            }
        }
    }
    // Even the largest score must not be flagged.
    next_up(critical[n - 1])
}

fn next_up(v: f64) -> f64 {
    f64::from_bits(v.to_bits() + 1)
}

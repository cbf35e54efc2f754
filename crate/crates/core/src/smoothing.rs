//! Smoothing mechanisms: randomized deletion and randomized ablation.
//!
//! Both mechanisms are pure functions of `(input, mechanism, SeedSpec)`. A
//! [`SeedSpec`] names one draw as `(master_seed, sample_index)`; substreams
//! are derived by a counter-based construction (ChaCha stream selection), so
//! results do not depend on evaluation order and draws may run concurrently.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seq::{Alphabet, TokenSeq};

/// Deletes each token i.i.d. with probability `p_del`, keeping the rest in
/// order; every output is a subsequence of the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeletionMechanism {
    p_del: f64,
}

impl DeletionMechanism {
    pub fn new(p_del: f64) -> Result<Self> {
        if !(p_del > 0.0 && p_del < 1.0) {
            return Err(Error::InvalidProbability {
                name: "p_del",
                value: p_del,
            });
        }
        Ok(DeletionMechanism { p_del })
    }

    pub fn p_del(&self) -> f64 {
        self.p_del
    }
}

/// Keeps a uniformly random subset of exactly `k(n) = ceil((1 - p_ab) * n)`
/// positions and overwrites every other position with `null_token`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationMechanism {
    p_ab: f64,
    null_token: u32,
}

impl AblationMechanism {
    pub fn new(p_ab: f64, null_token: u32) -> Result<Self> {
        if !(p_ab > 0.0 && p_ab < 1.0) {
            return Err(Error::InvalidProbability {
                name: "p_ab",
                value: p_ab,
            });
        }
        Ok(AblationMechanism { p_ab, null_token })
    }

    /// Uses the first token value outside `alphabet` as the null marker.
    pub fn for_alphabet(p_ab: f64, alphabet: Alphabet) -> Result<Self> {
        AblationMechanism::new(p_ab, alphabet.size())
    }

    pub fn p_ab(&self) -> f64 {
        self.p_ab
    }

    pub fn null_token(&self) -> u32 {
        self.null_token
    }

    /// Number of retained positions for an input of length `n >= 1`.
    ///
    /// The tiny guard keeps `(1 - p_ab) * n` from rounding up across an
    /// integer boundary it mathematically sits on.
    pub fn retained_count(&self, n: usize) -> usize {
        let k = ((1.0 - self.p_ab) * n as f64 - 1e-9).ceil() as usize;
        k.clamp(1, n)
    }
}

/// Deterministic identity of a single perturbation draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub sample_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, sample_index: u64) -> Self {
        SeedSpec {
            master_seed,
            sample_index,
        }
    }

    /// The substream for this draw: one keyed generator per master seed,
    /// with the sample index selecting an independent stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.sample_index);
        rng
    }
}

/// One draw from the deletion mechanism.
pub fn sample_deletion(x: &TokenSeq, mech: &DeletionMechanism, seed: SeedSpec) -> TokenSeq {
    sample_deletion_with_floor(x, mech, seed, 0)
}

/// Training-time variant that re-adds deleted positions (uniformly, under the
/// same substream) until at least `min_preserved` tokens remain. Certification
/// draws must use [`sample_deletion`], i.e. a floor of zero.
pub fn sample_deletion_with_floor(
    x: &TokenSeq,
    mech: &DeletionMechanism,
    seed: SeedSpec,
    min_preserved: usize,
) -> TokenSeq {
    let mut rng = seed.rng();
    let mut retained: Vec<usize> = Vec::with_capacity(x.len());
    let mut deleted: Vec<usize> = Vec::new();
    for i in 0..x.len() {
        if rng.gen::<f64>() >= mech.p_del {
            retained.push(i);
        } else {
            deleted.push(i);
        }
    }
    let floor = min_preserved.min(x.len());
    while retained.len() < floor {
        let j = rng.gen_range(0..deleted.len());
        retained.push(deleted.swap_remove(j));
    }
    retained.sort_unstable();
    x.subsequence(&retained)
}

/// Maximum input length for exact `2^|x|` enumeration.
pub const EXACT_ENUMERATION_MAX_LEN: usize = 20;

/// The full output distribution of the deletion mechanism, keyed by output
/// token vector; probabilities of index sets that collide on the same output
/// are accumulated. Only feasible for `|x| <= 20`.
pub fn exact_deletion_distribution(
    x: &TokenSeq,
    mech: &DeletionMechanism,
) -> Result<BTreeMap<Vec<u32>, f64>> {
    let n = x.len();
    if n > EXACT_ENUMERATION_MAX_LEN {
        return Err(Error::LengthCapExceeded {
            len: n,
            cap: EXACT_ENUMERATION_MAX_LEN,
        });
    }
    let mut pow_del = vec![1.0f64; n + 1];
    let mut pow_keep = vec![1.0f64; n + 1];
    for i in 1..=n {
        pow_del[i] = pow_del[i - 1] * mech.p_del;
        pow_keep[i] = pow_keep[i - 1] * (1.0 - mech.p_del);
    }
    let tokens = x.tokens();
    let mut dist: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for mask in 0u64..(1u64 << n) {
        let kept = mask.count_ones() as usize;
        let prob = pow_del[n - kept] * pow_keep[kept];
        let output: Vec<u32> = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| tokens[i])
            .collect();
        *dist.entry(output).or_insert(0.0) += prob;
    }
    Ok(dist)
}

/// One draw from the ablation mechanism; the output has the input's length,
/// with exactly `k(|x|)` positions retained.
pub fn sample_ablation(x: &TokenSeq, mech: &AblationMechanism, seed: SeedSpec) -> Result<TokenSeq> {
    sample_ablation_with_floor(x, mech, seed, 0)
}

/// Training-time variant that raises the retained count to `min_preserved`
/// (clamped to the input length). Certification draws must use a zero floor.
pub fn sample_ablation_with_floor(
    x: &TokenSeq,
    mech: &AblationMechanism,
    seed: SeedSpec,
    min_preserved: usize,
) -> Result<TokenSeq> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if mech.null_token < x.alphabet().size() {
        return Err(Error::InvalidConfig(format!(
            "null token {} lies inside the base alphabet of size {}",
            mech.null_token,
            x.alphabet().size()
        )));
    }
    let n = x.len();
    let k = mech.retained_count(n).max(min_preserved.min(n));
    // Partial Fisher-Yates: the first k slots form a uniform size-k subset.
    let mut rng = seed.rng();
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        indices.swap(i, j);
    }
    let mut output = vec![mech.null_token; n];
    for &i in &indices[..k] {
        output[i] = x.tokens()[i];
    }
    let alphabet = Alphabet::new(mech.null_token + 1).expect("null token + 1 is nonzero");
    Ok(TokenSeq::from_trusted(output, alphabet))
}

/// Either smoothing mechanism, for configuration surfaces that accept both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanism {
    Deletion(DeletionMechanism),
    Ablation(AblationMechanism),
}

impl Mechanism {
    pub fn sample(&self, x: &TokenSeq, seed: SeedSpec) -> Result<TokenSeq> {
        match self {
            Mechanism::Deletion(m) => Ok(sample_deletion(x, m, seed)),
            Mechanism::Ablation(m) => sample_ablation(x, m, seed),
        }
    }

    pub fn sample_with_floor(
        &self,
        x: &TokenSeq,
        seed: SeedSpec,
        min_preserved: usize,
    ) -> Result<TokenSeq> {
        match self {
            Mechanism::Deletion(m) => Ok(sample_deletion_with_floor(x, m, seed, min_preserved)),
            Mechanism::Ablation(m) => sample_ablation_with_floor(x, m, seed, min_preserved),
        }
    }
}

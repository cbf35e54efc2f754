//! Exact edit-distance neighborhoods for desk-scale oracle checks.
//!
//! Brute-force certification must visit every sequence within radius `r`,
//! and the size of that set grows like `(alphabet - 1)^r`, so enumeration is
//! gated by an arbitrary-precision lower bound on the neighborhood size and
//! refuses instances whose bound exceeds a caller-supplied cap.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::distance::EditOpSet;
use crate::error::{Error, Result};
use crate::seq::TokenSeq;

/// Default refusal cap for neighborhood enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Lower bound on `|N_r(x)|` for a length-`len` sequence:
/// `sum_{i=0}^{r} (A-1)^i * sum_{j=i-r}^{r} C(len+j, i)`, where binomials
/// with a negative or too-small upper index are zero.
pub fn neighborhood_size_lower_bound(len: usize, r: usize, alphabet_size: u32) -> BigUint {
    let a_minus_1 = BigUint::from(alphabet_size.saturating_sub(1));
    let mut total = BigUint::zero();
    for i in 0..=r {
        let mut inner = BigUint::zero();
        for j in (i as i64 - r as i64)..=(r as i64) {
            let upper = len as i64 + j;
            if upper < 0 {
                continue;
            }
            inner += binomial(upper as usize, i);
        }
        total += a_minus_1.pow(i as u32) * inner;
    }
    total
}

fn successors(s: &TokenSeq, ops: EditOpSet, out: &mut Vec<TokenSeq>) {
    let tokens = s.tokens();
    let alphabet = s.alphabet();
    if ops.del() {
        for i in 0..tokens.len() {
            let mut v = Vec::with_capacity(tokens.len() - 1);
            v.extend_from_slice(&tokens[..i]);
            v.extend_from_slice(&tokens[i + 1..]);
            out.push(TokenSeq::from_trusted(v, alphabet));
        }
    }
    if ops.sub() {
        for i in 0..tokens.len() {
            for t in 0..alphabet.size() {
                if t == tokens[i] {
                    continue;
                }
                let mut v = tokens.to_vec();
                v[i] = t;
                out.push(TokenSeq::from_trusted(v, alphabet));
            }
        }
    }
    if ops.ins() {
        for i in 0..=tokens.len() {
            for t in 0..alphabet.size() {
                let mut v = Vec::with_capacity(tokens.len() + 1);
                v.extend_from_slice(&tokens[..i]);
                v.push(t);
                v.extend_from_slice(&tokens[i..]);
                out.push(TokenSeq::from_trusted(v, alphabet));
            }
        }
    }
}

/// Breadth-first shells of `{x' : d_O(x, x') <= r}`, deduplicated across
/// radii; `layers[k]` holds the sequences first reached at distance `k`.
pub fn enumerate_neighborhood_layers(
    x: &TokenSeq,
    r: usize,
    ops: EditOpSet,
    cap: u64,
) -> Result<Vec<Vec<TokenSeq>>> {
    let bound = neighborhood_size_lower_bound(x.len(), r, x.alphabet().size());
    if bound > BigUint::from(cap) {
        return Err(Error::NeighborhoodCapExceeded {
            bound: bound.to_string(),
            cap,
        });
    }
    let mut seen: HashSet<TokenSeq> = HashSet::new();
    seen.insert(x.clone());
    let mut layers = vec![vec![x.clone()]];
    let mut scratch = Vec::new();
    for _ in 0..r {
        let mut next = Vec::new();
        for s in layers.last().unwrap() {
            scratch.clear();
            successors(s, ops, &mut scratch);
            for cand in scratch.drain(..) {
                if seen.insert(cand.clone()) {
                    next.push(cand);
                }
            }
            if seen.len() as u64 > cap {
                return Err(Error::NeighborhoodCapExceeded {
                    bound: seen.len().to_string(),
                    cap,
                });
            }
        }
        layers.push(next);
    }
    Ok(layers)
}

/// The exact set `{x' : d_O(x, x') <= r}`.
pub fn enumerate_neighborhood(
    x: &TokenSeq,
    r: usize,
    ops: EditOpSet,
    cap: u64,
) -> Result<HashSet<TokenSeq>> {
    Ok(enumerate_neighborhood_layers(x, r, ops, cap)?
        .into_iter()
        .flatten()
        .collect())
}

//! Ground-truth verification at desk scale.
//!
//! For small inputs the smoothed confidence can be evaluated exactly by
//! enumerating every deletion pattern, and a certificate can be checked
//! outright by enumerating the whole edit ball it claims to cover. These
//! oracles are what the certificate math is tested against.
//!
//! The certified ball is `{x~ : d_O(x~, x) <= r}` with ops transforming the
//! neighbor back into the input, so enumeration runs under the dual op set
//! (del and ins swapped); symmetric op sets are unaffected.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certify::{argmax_lowest, certified_radius, nu_threshold, theorem1_bound, Radius};
use crate::classifiers::BaseClassifier;
use crate::distance::{lcs_distance, EditOpSet};
use crate::error::{Error, Result};
use crate::neighborhood::enumerate_neighborhood_layers;
use crate::seq::{Alphabet, TokenSeq};
use crate::smoothing::{exact_deletion_distribution, DeletionMechanism};

/// Exact per-class smoothed confidence; probabilities sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactConfidence {
    probs: Vec<f64>,
}

impl ExactConfidence {
    fn new(mut probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 || probs.iter().any(|p| !(0.0..=1.0 + 1e-12).contains(p)) {
            return Err(Error::InvalidConfig(format!(
                "confidences do not form a distribution: {probs:?}"
            )));
        }
        // Summation noise of a few ulps must not leak out of [0, 1].
        for p in &mut probs {
            *p = p.clamp(0.0, 1.0);
        }
        Ok(ExactConfidence { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn class_prob(&self, y: usize) -> f64 {
        self.probs[y]
    }

    /// Smoothed prediction under decision thresholds, ties toward the lowest
    /// class index.
    pub fn predict(&self, eta: &[f64]) -> usize {
        argmax_lowest(self.probs.len(), |y| self.probs[y] - eta[y])
    }
}

/// Exact smoothed confidences by full enumeration of the deletion
/// mechanism's output distribution; feasible for `|x| <= 20`.
pub fn exact_confidence(
    x: &TokenSeq,
    base: &dyn BaseClassifier,
    mech: &DeletionMechanism,
    num_classes: usize,
) -> Result<ExactConfidence> {
    let dist = exact_deletion_distribution(x, mech)?;
    let mut probs = vec![0.0f64; num_classes];
    for (output, prob) in dist {
        let z = TokenSeq::new(output, x.alphabet())?;
        let class = base.query(&z)?;
        if class >= num_classes {
            return Err(Error::ClassOutOfRange {
                class,
                classes: num_classes,
            });
        }
        probs[class] += prob;
    }
    ExactConfidence::new(probs)
}

/// Result of exhaustively checking one certificate.
#[derive(Debug, Clone)]
pub struct SoundnessReport {
    /// Smoothed prediction at the input.
    pub prediction: usize,
    /// Exact confidence of the predicted class.
    pub mu: f64,
    /// Certificate threshold for the predicted class.
    pub nu: f64,
    /// Radius the certificate claims.
    pub radius: Radius,
    /// True iff the smoothed prediction is constant on the certified ball.
    pub pass: bool,
    /// Smallest radius at which any neighbor flips the prediction, if one
    /// was found within the searched range.
    pub flip_frontier: Option<usize>,
    /// Largest radius searched for the frontier.
    pub frontier_searched_to: usize,
    /// Neighbors whose exact smoothed prediction was evaluated.
    pub neighbors_checked: usize,
}

/// Certifies `x` with exact confidences (no sampling), then enumerates the
/// whole certified ball and checks the smoothed prediction never changes.
/// The frontier search continues `frontier_margin` radii past the
/// certificate to measure its slack.
pub fn verify_certificate_soundness(
    x: &TokenSeq,
    base: &dyn BaseClassifier,
    mech: &DeletionMechanism,
    eta: &[f64],
    ops: EditOpSet,
    enumeration_cap: u64,
    frontier_margin: usize,
) -> Result<SoundnessReport> {
    let conf = exact_confidence(x, base, mech, eta.len())?;
    let prediction = conf.predict(eta);
    let nu = nu_threshold(eta, prediction)?;
    let mu = conf.class_prob(prediction);
    let radius = certified_radius(mu, nu, mech.p_del(), ops)?;
    let certified = match radius {
        Radius::Finite(r) => r as usize,
        Radius::NotCertifiable => 0,
        Radius::Unbounded => {
            return Err(Error::InvalidConfig(
                "cannot enumerate an unbounded certified radius".to_string(),
            ))
        }
    };
    let search_to = certified + frontier_margin;
    let layers = enumerate_neighborhood_layers(x, search_to, ops.dual(), enumeration_cap)?;
    let mut neighbors_checked = 0usize;
    let mut flip_frontier = None;
    'search: for (r, layer) in layers.iter().enumerate().skip(1) {
        for neighbor in layer {
            let neighbor_pred = exact_confidence(neighbor, base, mech, eta.len())?.predict(eta);
            neighbors_checked += 1;
            if neighbor_pred != prediction {
                flip_frontier = Some(r);
                break 'search;
            }
        }
    }
    let pass = flip_frontier.map_or(true, |f| f > certified);
    Ok(SoundnessReport {
        prediction,
        mu,
        nu,
        radius,
        pass,
        flip_frontier,
        frontier_searched_to: search_to,
        neighbors_checked,
    })
}

/// Evaluates both sides of the pointwise confidence bound: the exact
/// smoothed confidence at `x_tilde` of the class predicted at `x`, and the
/// closed-form lower bound computed from the confidence at `x` and the LCS
/// distance. The exact value must dominate the bound.
pub fn check_theorem1(
    x: &TokenSeq,
    x_tilde: &TokenSeq,
    base: &dyn BaseClassifier,
    mech: &DeletionMechanism,
    num_classes: usize,
) -> Result<(f64, f64)> {
    let conf_x = exact_confidence(x, base, mech, num_classes)?;
    let y = argmax_lowest(num_classes, |c| conf_x.class_prob(c));
    let conf_xt = exact_confidence(x_tilde, base, mech, num_classes)?;
    let d_lcs = lcs_distance(x_tilde, x)?;
    let bound = theorem1_bound(
        conf_x.class_prob(y),
        mech.p_del(),
        x.len(),
        x_tilde.len(),
        d_lcs,
    )?;
    Ok((conf_xt.class_prob(y), bound))
}

/// A base classifier materialized as a lookup table over every sequence up
/// to a maximum length, with classes assigned uniformly at random under a
/// seed. Covers insertion neighbors, which are longer than the input.
pub struct TableClassifier {
    table: HashMap<Vec<u32>, usize>,
    alphabet: Alphabet,
    max_len: usize,
    num_classes: usize,
}

impl TableClassifier {
    pub fn random(alphabet: Alphabet, max_len: usize, num_classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = HashMap::new();
        let mut layer: Vec<Vec<u32>> = vec![Vec::new()];
        table.insert(Vec::new(), rng.gen_range(0..num_classes));
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * alphabet.size() as usize);
            for s in &layer {
                for t in 0..alphabet.size() {
                    let mut v = s.clone();
                    v.push(t);
                    table.insert(v.clone(), rng.gen_range(0..num_classes));
                    next.push(v);
                }
            }
            layer = next;
        }
        TableClassifier {
            table,
            alphabet,
            max_len,
            num_classes,
        }
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }
}

impl BaseClassifier for TableClassifier {
    fn query(&self, x: &TokenSeq) -> Result<usize> {
        if x.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch {
                left: x.alphabet().size(),
                right: self.alphabet.size(),
            });
        }
        self.table
            .get(x.tokens())
            .copied()
            .ok_or_else(|| Error::Protocol(format!("sequence of length {} outside table", x.len())))
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn concurrent_queries(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ConstantClassifier;
    use crate::smoothing::{sample_deletion, SeedSpec};

    fn seq(tokens: &[u32], alphabet: u32) -> TokenSeq {
        TokenSeq::new(tokens.to_vec(), Alphabet::new(alphabet).unwrap()).unwrap()
    }

    struct PredicateClassifier<F: Fn(&TokenSeq) -> usize + Send + Sync>(F);
    impl<F: Fn(&TokenSeq) -> usize + Send + Sync> BaseClassifier for PredicateClassifier<F> {
        fn query(&self, x: &TokenSeq) -> Result<usize> {
            Ok(self.0(x))
        }
        fn num_classes(&self) -> usize {
            2
        }
        fn concurrent_queries(&self) -> bool {
            true
        }
    }

    #[test]
    fn constant_base_has_confidence_one() {
        let mech = DeletionMechanism::new(0.4).unwrap();
        let base = ConstantClassifier { class: 1, num_classes: 3 };
        let conf = exact_confidence(&seq(&[0, 1, 2], 3), &base, &mech, 3).unwrap();
        assert_eq!(conf.probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn nonempty_predicate_on_two_tokens() {
        // Only the empty retained set produces the empty output: mu_1 = 0.75.
        let mech = DeletionMechanism::new(0.5).unwrap();
        let base = PredicateClassifier(|x: &TokenSeq| usize::from(!x.is_empty()));
        let conf = exact_confidence(&seq(&[0, 1], 2), &base, &mech, 2).unwrap();
        assert!((conf.class_prob(1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn contains_token_predicate_on_two_tokens() {
        // Outputs containing token 0 are "0" and "01": total probability 0.5.
        let mech = DeletionMechanism::new(0.5).unwrap();
        let base = PredicateClassifier(|x: &TokenSeq| usize::from(x.tokens().contains(&0)));
        let conf = exact_confidence(&seq(&[0, 1], 2), &base, &mech, 2).unwrap();
        assert!((conf.class_prob(1) - 0.5).abs() < 1e-15);
    }

    /// The distribution-map path agrees with a direct loop over all 2^n
    /// retained-index sets that queries the base per subset.
    #[test]
    fn exact_confidence_matches_direct_index_set_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for trial in 0..20 {
            let alphabet = Alphabet::new(3).unwrap();
            let len = rng.gen_range(0..=10usize);
            let tokens: Vec<u32> = (0..len).map(|_| rng.gen_range(0..3)).collect();
            let x = TokenSeq::new(tokens, alphabet).unwrap();
            let p_del = rng.gen_range(0.2..0.9);
            let mech = DeletionMechanism::new(p_del).unwrap();
            let base = TableClassifier::random(alphabet, len, 2, 1000 + trial);

            let via_map = exact_confidence(&x, &base, &mech, 2).unwrap();

            let mut direct = [0.0f64; 2];
            for mask in 0u32..(1 << len) {
                let mut prob = 1.0;
                let mut kept = Vec::new();
                for (i, &t) in x.tokens().iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        prob *= 1.0 - p_del;
                        kept.push(t);
                    } else {
                        prob *= p_del;
                    }
                }
                let z = TokenSeq::new(kept, alphabet).unwrap();
                direct[base.query(&z).unwrap()] += prob;
            }
            for y in 0..2 {
                assert!((via_map.class_prob(y) - direct[y]).abs() < 1e-12);
            }
        }
    }

    /// Monte Carlo estimates converge to the exact confidence.
    #[test]
    fn sampled_confidence_converges_to_exact() {
        let alphabet = Alphabet::new(3).unwrap();
        let mech = DeletionMechanism::new(0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for trial in 0..3 {
            let len = rng.gen_range(4..=8usize);
            let tokens: Vec<u32> = (0..len).map(|_| rng.gen_range(0..3)).collect();
            let x = TokenSeq::new(tokens, alphabet).unwrap();
            let base = TableClassifier::random(alphabet, len, 2, 60 + trial);
            let exact = exact_confidence(&x, &base, &mech, 2).unwrap();
            let n = 20_000u64;
            let mut votes = 0u64;
            for i in 0..n {
                let z = sample_deletion(&x, &mech, SeedSpec::new(trial, i));
                votes += base.query(&z).unwrap() as u64;
            }
            let mu_hat = votes as f64 / n as f64;
            let mu = exact.class_prob(1);
            let tol = 4.0 * (mu * (1.0 - mu) / n as f64).sqrt();
            assert!(
                (mu_hat - mu).abs() <= tol,
                "trial {trial}: mu_hat={mu_hat} mu={mu} tol={tol}"
            );
        }
    }

    #[test]
    fn soundness_passes_on_seeded_lookup_tables() {
        let alphabet = Alphabet::new(3).unwrap();
        let mech = DeletionMechanism::new(0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for trial in 0..25 {
            let tokens: Vec<u32> = (0..5).map(|_| rng.gen_range(0..3)).collect();
            let x = TokenSeq::new(tokens, alphabet).unwrap();
            let base = TableClassifier::random(alphabet, 5 + 3, 2, 7000 + trial);
            let report = verify_certificate_soundness(
                &x,
                &base,
                &mech,
                &[0.0, 0.0],
                EditOpSet::LEVENSHTEIN,
                10_000_000,
                1,
            )
            .unwrap();
            assert!(report.pass, "trial {trial}: {report:?}");
            if let Some(frontier) = report.flip_frontier {
                assert!(frontier > report.radius.finite().unwrap_or(0) as usize);
            }
        }
    }

    /// Hamming balls sit inside Levenshtein balls, so the substitution-only
    /// flip frontier is never closer than the Levenshtein radius.
    #[test]
    fn hamming_frontier_dominates_levenshtein_radius() {
        let alphabet = Alphabet::new(3).unwrap();
        let mech = DeletionMechanism::new(0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for trial in 0..15 {
            let tokens: Vec<u32> = (0..5).map(|_| rng.gen_range(0..3)).collect();
            let x = TokenSeq::new(tokens, alphabet).unwrap();
            let base = TableClassifier::random(alphabet, 5 + 4, 2, 8000 + trial);
            let lev = verify_certificate_soundness(
                &x,
                &base,
                &mech,
                &[0.0, 0.0],
                EditOpSet::LEVENSHTEIN,
                10_000_000,
                1,
            )
            .unwrap();
            let sub = verify_certificate_soundness(
                &x,
                &base,
                &mech,
                &[0.0, 0.0],
                EditOpSet::SUB,
                10_000_000,
                2,
            )
            .unwrap();
            assert!(sub.pass);
            let lev_radius = lev.radius.finite().unwrap_or(0) as usize;
            if let Some(frontier) = sub.flip_frontier {
                assert!(frontier >= lev_radius, "trial {trial}: {sub:?} vs {lev:?}");
            }
        }
    }

    #[test]
    fn theorem1_holds_with_equality_at_the_input() {
        let mech = DeletionMechanism::new(0.5).unwrap();
        let alphabet = Alphabet::new(2).unwrap();
        let base = TableClassifier::random(alphabet, 6, 2, 99);
        let x = seq(&[0, 1, 1, 0], 2);
        let (exact, bound) = check_theorem1(&x, &x, &base, &mech, 2).unwrap();
        assert!((exact - bound).abs() < 1e-12);
    }

    #[test]
    fn theorem1_constant_base_saturates() {
        let mech = DeletionMechanism::new(0.7).unwrap();
        let base = ConstantClassifier { class: 0, num_classes: 2 };
        let x = seq(&[0, 1, 0], 2);
        let xt = seq(&[1, 1, 0, 0, 1], 2);
        let (exact, bound) = check_theorem1(&x, &xt, &base, &mech, 2).unwrap();
        assert!((exact - 1.0).abs() < 1e-12);
        assert!(exact >= bound - 1e-10);
    }

    #[test]
    fn theorem1_randomized_trials() {
        let alphabet = Alphabet::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for trial in 0..200 {
            let p = [0.3, 0.5, 0.8][trial % 3];
            let mech = DeletionMechanism::new(p).unwrap();
            let base = TableClassifier::random(alphabet, 8, 2, 3000 + trial as u64);
            let lx = rng.gen_range(0..=8usize);
            let lt = rng.gen_range(0..=8usize);
            let x = TokenSeq::new((0..lx).map(|_| rng.gen_range(0..2)).collect(), alphabet).unwrap();
            let xt = TokenSeq::new((0..lt).map(|_| rng.gen_range(0..2)).collect(), alphabet).unwrap();
            let (exact, bound) = check_theorem1(&x, &xt, &base, &mech, 2).unwrap();
            assert!(
                exact >= bound - 1e-10,
                "trial {trial}: exact={exact} bound={bound}"
            );
        }
    }

    #[test]
    fn table_classifier_rejects_unknown_sequences() {
        let alphabet = Alphabet::new(2).unwrap();
        let base = TableClassifier::random(alphabet, 2, 2, 1);
        assert!(base.query(&seq(&[0, 1], 2)).is_ok());
        assert!(base.query(&seq(&[0, 1, 0], 2)).is_err());
    }
}

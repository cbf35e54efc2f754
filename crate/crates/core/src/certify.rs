//! Certificate mathematics and the probabilistic certification pipeline.
//!
//! A smoothed classifier predicts `argmax_y (mu_y - eta_y)` where `mu_y` is
//! the probability that the base classifier answers `y` on a perturbed
//! draw. Its prediction at `x` provably cannot change anywhere in the edit
//! ball `{x~ : d_O(x~, x) <= r}` as long as the predicted class's confidence
//! clears a threshold `nu_y` derived from the decision thresholds `eta`. For
//! the deletion mechanism the largest such `r` has closed forms per op set:
//!
//! - `ins` only:            `floor(log((1 - mu) / (1 - nu)) / log p_del)`
//! - `del` or `del+ins`:    `floor(log(nu / mu) / log p_del)`
//! - any set containing sub: `floor(log(1 + nu - mu) / log p_del)`
//!
//! For the ablation mechanism only the Hamming (`sub`) radius is available
//! and is found by binary search over exact binomial ratios.
//!
//! Radii hold exactly when `mu` is the exact confidence, and with
//! probability `1 - alpha` when `mu` is replaced by the one-sided
//! Clopper-Pearson lower bound computed from a fresh sample.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use crate::classifiers::BaseClassifier;
use crate::distance::EditOpSet;
use crate::error::{Error, Result};
use crate::seq::TokenSeq;
use crate::smoothing::{Mechanism, SeedSpec};

pub const DEFAULT_N_PRED: usize = 1000;
pub const DEFAULT_N_BND: usize = 4000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Floor guard against boundary misrounding in radius computations.
const FLOOR_GUARD: f64 = 1e-12;

/// A certified radius for one op set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Radius {
    Finite(u64),
    Unbounded,
    NotCertifiable,
}

impl Radius {
    pub fn finite(self) -> Option<u64> {
        match self {
            Radius::Finite(r) => Some(r),
            _ => None,
        }
    }

    /// Whether this radius certifies the ball of radius `r`.
    pub fn covers(self, r: u64) -> bool {
        match self {
            Radius::Finite(max) => r <= max,
            Radius::Unbounded => true,
            Radius::NotCertifiable => false,
        }
    }
}

/// The confidence level class `y` must clear for a certificate to hold.
///
/// Binary case: `(1 + eta_y - min_{y' != y} eta_{y'}) / 2`. Multiclass:
/// `1/2 + eta_y - min eta_{y'}` when `eta_y >= min eta_{y'}`, else
/// `1 + eta_y - min eta_{y'}`.
pub fn nu_threshold(eta: &[f64], y: usize) -> Result<f64> {
    let k = eta.len();
    if k < 2 {
        return Err(Error::InvalidConfig(
            "decision thresholds need at least two classes".to_string(),
        ));
    }
    if y >= k {
        return Err(Error::ClassOutOfRange { class: y, classes: k });
    }
    let min_other = eta
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != y)
        .map(|(_, &e)| e)
        .fold(f64::INFINITY, f64::min);
    Ok(if k == 2 {
        (1.0 + eta[y] - min_other) / 2.0
    } else if eta[y] >= min_other {
        0.5 + eta[y] - min_other
    } else {
        1.0 + eta[y] - min_other
    })
}

fn check_probability(name: &'static str, value: f64, open: bool) -> Result<()> {
    let ok = if open {
        value > 0.0 && value < 1.0
    } else {
        (0.0..=1.0).contains(&value)
    };
    if !ok || value.is_nan() {
        return Err(Error::InvalidProbability { name, value });
    }
    Ok(())
}

/// Largest radius certified by the deletion mechanism for the given op set.
pub fn certified_radius(mu: f64, nu: f64, p_del: f64, ops: EditOpSet) -> Result<Radius> {
    check_probability("p_del", p_del, true)?;
    check_probability("mu", mu, false)?;
    if nu < 0.0 || nu.is_nan() {
        return Err(Error::InvalidProbability { name: "nu", value: nu });
    }
    if nu > 1.0 || mu < nu {
        return Ok(Radius::NotCertifiable);
    }
    // The argument of the log in the closed form; now 0 <= nu <= mu <= 1.
    let arg = if ops.sub() {
        1.0 + nu - mu
    } else if ops.del() {
        nu / mu
    } else {
        (1.0 - mu) / (1.0 - nu)
    };
    // A zero argument means the certificate condition holds at every radius;
    // NaN arises only from 0/0 at the same boundary (mu = nu at an endpoint).
    if arg.is_nan() || arg <= 0.0 {
        return Ok(Radius::Unbounded);
    }
    if arg >= 1.0 {
        return Ok(Radius::Finite(0));
    }
    let q = arg.ln() / p_del.ln();
    Ok(Radius::Finite((q + FLOOR_GUARD).floor() as u64))
}

/// Lower bound on the smoothed confidence at a neighbor reachable by the
/// given op counts: `p_del^(n_del - n_ins) * (mu - 1 + p_del^(n_sub + n_ins))`.
/// May be negative, in which case the bound is vacuous.
pub fn rho_bound(mu: f64, p_del: f64, n_sub: u32, n_ins: u32, n_del: u32) -> f64 {
    let lead = p_del.powi(n_del as i32 - n_ins as i32);
    lead * (mu - 1.0 + p_del.powi((n_sub + n_ins) as i32))
}

/// Lower bound on the smoothed confidence at `x~` given the confidence `mu`
/// at `x`: `p_del^(|x~| - |x|) * (mu - 1 + p_del^((d_lcs + |x| - |x~|) / 2))`.
///
/// `d_lcs` must be consistent with the lengths: at least their difference,
/// and of matching parity.
pub fn theorem1_bound(
    mu: f64,
    p_del: f64,
    len_x: usize,
    len_xt: usize,
    d_lcs: usize,
) -> Result<f64> {
    check_probability("p_del", p_del, true)?;
    check_probability("mu", mu, false)?;
    let diff = len_x.abs_diff(len_xt);
    if d_lcs < diff || (d_lcs - diff) % 2 != 0 {
        return Err(Error::InconsistentLcsArguments { d_lcs, len_x, len_xt });
    }
    let lead = p_del.powi(len_xt as i32 - len_x as i32);
    let exponent = (d_lcs + len_x - len_xt) / 2;
    Ok(lead * (mu - 1.0 + p_del.powi(exponent as i32)))
}

fn big_binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Largest Hamming radius certified by the ablation mechanism: the largest
/// `r` in `[0, len - k]` with `mu - 1 + C(len - r, k) / C(len, k) >= nu`,
/// where `k = ceil((1 - p_ab) * len)`. The left side is non-increasing in
/// `r`, so binary search applies; binomial ratios are evaluated exactly.
pub fn abn_certified_radius(mu: f64, nu: f64, p_ab: f64, len: usize) -> Result<Radius> {
    check_probability("p_ab", p_ab, true)?;
    check_probability("mu", mu, false)?;
    if nu < 0.0 || nu.is_nan() {
        return Err(Error::InvalidProbability { name: "nu", value: nu });
    }
    if len == 0 {
        return Err(Error::EmptyInput);
    }
    if nu > 1.0 || mu < nu {
        return Ok(Radius::NotCertifiable);
    }
    let k = (((1.0 - p_ab) * len as f64) - 1e-9).ceil() as usize;
    let k = k.clamp(1, len);
    // Exact comparison: C(len - r, k) / C(len, k) >= nu - mu + 1.
    let gap = BigRational::from_float(nu).unwrap() - BigRational::from_float(mu).unwrap()
        + BigRational::one();
    let denom = big_binomial(len, k);
    let holds = |r: usize| -> bool {
        let ratio = BigRational::new(big_binomial(len - r, k), denom.clone());
        ratio >= gap
    };
    if !holds(0) {
        return Ok(Radius::NotCertifiable);
    }
    let (mut lo, mut hi) = (0usize, len - k);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(Radius::Finite(lo as u64))
}

/// One-sided Clopper-Pearson lower confidence bound for a binomial
/// proportion: the `p` with `Pr[Bin(n, p) >= k] = alpha`, i.e. the
/// `alpha`-quantile of `Beta(k, n - k + 1)`; zero when `k = 0`.
pub fn binomial_lcb(k: u64, n: u64, alpha: f64) -> Result<f64> {
    check_probability("alpha", alpha, true)?;
    if n == 0 {
        return Err(Error::InvalidConfig("binomial_lcb needs n >= 1".to_string()));
    }
    if k > n {
        return Err(Error::InvalidConfig(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Ok(0.0);
    }
    if k == n {
        // Pr[all successes] = p^n, solved analytically.
        return Ok(alpha.powf(1.0 / n as f64));
    }
    // Pr[Bin(n, p) >= k] = I_p(k, n - k + 1), increasing in p; bisect.
    let (a, b) = (k as f64, (n - k + 1) as f64);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if statrs::function::beta::beta_reg(a, b, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Monte Carlo certification settings.
#[derive(Debug, Clone)]
pub struct SmoothingConfig {
    pub mechanism: Mechanism,
    /// Draws used to pick the predicted class.
    pub n_pred: usize,
    /// Fresh draws used for the confidence lower bound.
    pub n_bnd: usize,
    /// Significance level of the certificate.
    pub alpha: f64,
    /// Per-class decision thresholds; the length fixes the class count.
    pub eta: Vec<f64>,
    /// Evaluate sample queries on the rayon pool when the base classifier
    /// allows concurrent queries. Verdicts are identical either way.
    pub parallel_samples: bool,
}

impl SmoothingConfig {
    pub fn new(mechanism: Mechanism, eta: Vec<f64>) -> Result<Self> {
        let cfg = SmoothingConfig {
            mechanism,
            n_pred: DEFAULT_N_PRED,
            n_bnd: DEFAULT_N_BND,
            alpha: DEFAULT_ALPHA,
            eta,
            parallel_samples: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pred == 0 || self.n_bnd == 0 {
            return Err(Error::InvalidConfig(
                "sample sizes must be positive".to_string(),
            ));
        }
        check_probability("alpha", self.alpha, true)?;
        if self.eta.len() < 2 {
            return Err(Error::InvalidConfig(
                "eta must list at least two classes".to_string(),
            ));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.eta.len()
    }
}

/// Outcome of certifying one input.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedVerdict {
    /// Predicted class, or `None` on abstention.
    pub prediction: Option<usize>,
    /// Empirical confidence of the predicted class from the prediction sample.
    pub mu_hat: f64,
    /// One-sided lower confidence bound from the fresh bound sample.
    pub mu_lcb: f64,
    /// Certified radius per requested op set; all `NotCertifiable` when
    /// abstaining.
    pub radii: Vec<(EditOpSet, Radius)>,
    pub master_seed: u64,
    pub n_pred: usize,
    pub n_bnd: usize,
}

/// Lowest class index among the maxima of `score(y)`.
pub(crate) fn argmax_lowest<F: Fn(usize) -> f64>(num_classes: usize, score: F) -> usize {
    let mut best = 0usize;
    let mut best_score = score(0);
    for y in 1..num_classes {
        let s = score(y);
        if s > best_score {
            best = y;
            best_score = s;
        }
    }
    best
}

fn tally_votes(
    x: &TokenSeq,
    base: &dyn BaseClassifier,
    mechanism: &Mechanism,
    master_seed: u64,
    first_index: u64,
    count: usize,
    num_classes: usize,
    parallel: bool,
) -> Result<Vec<u64>> {
    let query_one = |offset: u64| -> Result<usize> {
        let sample_index = first_index + offset;
        let run = || -> Result<usize> {
            let z = mechanism.sample(x, SeedSpec::new(master_seed, sample_index))?;
            let class = base.query(&z)?;
            if class >= num_classes {
                return Err(Error::ClassOutOfRange {
                    class,
                    classes: num_classes,
                });
            }
            Ok(class)
        };
        run().map_err(|e| Error::QueryFailed {
            sample_index,
            source: Box::new(e),
        })
    };
    let mut votes = vec![0u64; num_classes];
    if parallel && base.concurrent_queries() {
        let classes: Vec<usize> = (0..count as u64)
            .into_par_iter()
            .map(query_one)
            .collect::<Result<_>>()?;
        for class in classes {
            votes[class] += 1;
        }
    } else {
        for offset in 0..count as u64 {
            votes[query_one(offset)?] += 1;
        }
    }
    Ok(votes)
}

/// Probabilistic certification of one input.
///
/// Draws `n_pred` seeded perturbations to pick the class, `n_bnd` fresh
/// perturbations (a disjoint sample-index range) for the Clopper-Pearson
/// lower bound, abstains when the bound falls below the class's decision
/// threshold, and otherwise evaluates the certified radius for every
/// requested op set. Deterministic given `master_seed`.
pub fn certify(
    x: &TokenSeq,
    base: &dyn BaseClassifier,
    cfg: &SmoothingConfig,
    ops_list: &[EditOpSet],
    master_seed: u64,
) -> Result<CertifiedVerdict> {
    cfg.validate()?;
    let num_classes = cfg.num_classes();
    let pred_votes = tally_votes(
        x,
        base,
        &cfg.mechanism,
        master_seed,
        0,
        cfg.n_pred,
        num_classes,
        cfg.parallel_samples,
    )?;
    let predicted = argmax_lowest(num_classes, |y| {
        pred_votes[y] as f64 / cfg.n_pred as f64 - cfg.eta[y]
    });
    let mu_hat = pred_votes[predicted] as f64 / cfg.n_pred as f64;

    let bnd_votes = tally_votes(
        x,
        base,
        &cfg.mechanism,
        master_seed,
        cfg.n_pred as u64,
        cfg.n_bnd,
        num_classes,
        cfg.parallel_samples,
    )?;
    let mu_lcb = binomial_lcb(bnd_votes[predicted], cfg.n_bnd as u64, cfg.alpha)?;

    if mu_lcb < cfg.eta[predicted] {
        return Ok(CertifiedVerdict {
            prediction: None,
            mu_hat,
            mu_lcb,
            radii: ops_list
                .iter()
                .map(|&ops| (ops, Radius::NotCertifiable))
                .collect(),
            master_seed,
            n_pred: cfg.n_pred,
            n_bnd: cfg.n_bnd,
        });
    }

    let nu = nu_threshold(&cfg.eta, predicted)?;
    let mut radii = Vec::with_capacity(ops_list.len());
    for &ops in ops_list {
        let radius = match &cfg.mechanism {
            Mechanism::Deletion(m) => certified_radius(mu_lcb, nu, m.p_del(), ops)?,
            Mechanism::Ablation(m) => {
                // Ablation only certifies the substitution-only threat model.
                if ops == EditOpSet::SUB {
                    abn_certified_radius(mu_lcb, nu, m.p_ab(), x.len())?
                } else {
                    Radius::NotCertifiable
                }
            }
        };
        radii.push((ops, radius));
    }
    Ok(CertifiedVerdict {
        prediction: Some(predicted),
        mu_hat,
        mu_lcb,
        radii,
        master_seed,
        n_pred: cfg.n_pred,
        n_bnd: cfg.n_bnd,
    })
}

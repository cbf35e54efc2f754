//! Acceptance suite: one test per criterion, each printing a PASS line on
//! success (the harness prints the FAIL line otherwise). Every tolerance is
//! pinned in code. Run with:
//!
//! ```text
//! cargo test -p editcert-cli --test acceptance -- --nocapture
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use editcert_core::certify::{binomial_lcb, certified_radius, nu_threshold, rho_bound, Radius};
use editcert_core::classifiers::{calibrate_threshold, BaseClassifier, HistogramModel};
use editcert_core::distance::EditOpSet;
use editcert_core::neighborhood::neighborhood_size_lower_bound;
use editcert_core::oracle::{
    check_theorem1, exact_confidence, verify_certificate_soundness, TableClassifier,
};
use editcert_core::seq::{Alphabet, TokenSeq};
use editcert_core::smoothing::{sample_deletion, DeletionMechanism, Mechanism, SeedSpec};
use editcert_cli::metrics::compute_metrics;
use editcert_cli::records::{parse_records, RadiusValue, RunRecord};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEV: EditOpSet = EditOpSet::LEVENSHTEIN;
const P_GRID: [f64; 6] = [0.90, 0.95, 0.97, 0.99, 0.995, 0.999];

fn finite(r: Radius) -> u64 {
    match r {
        Radius::Finite(v) => v,
        other => panic!("expected a finite radius, got {other:?}"),
    }
}

/// Criterion 1: closed-form radii at saturated confidence match the
/// published upper-bound column exactly, and the same radii computed from
/// the 4000-sample lower confidence bound match the published medians.
#[test]
fn criterion_01_certificate_table_reproduction() {
    let start = std::time::Instant::now();
    let ub: Vec<u64> = P_GRID
        .iter()
        .map(|&p| finite(certified_radius(1.0, 0.5, p, LEV).unwrap()))
        .collect();
    assert_eq!(ub, vec![6, 13, 22, 68, 138, 692], "upper-bound row");

    let mu_lcb = binomial_lcb(4000, 4000, 0.05).unwrap();
    let med: Vec<u64> = P_GRID
        .iter()
        .map(|&p| finite(certified_radius(mu_lcb, 0.5, p, LEV).unwrap()))
        .collect();
    println!("criterion 01: UB row {ub:?}; LCB row {med:?} (mu_lcb = {mu_lcb:.9})");
    assert!(start.elapsed().as_secs() < 1, "runtime budget");
    assert_eq!(med, vec![6, 13, 22, 68, 137, 688], "median row");
    println!("criterion 01 (certificate table reproduction): PASS");
}

/// Criterion 2: per-class radii under the decision-threshold sweep.
#[test]
fn criterion_02_eta_sweep_reproduction() {
    let start = std::time::Instant::now();
    let mut got = Vec::new();
    for eta1 in [0.5, 0.25, 0.05] {
        let eta = vec![1.0 - eta1, eta1];
        let r_mal = finite(certified_radius(1.0, nu_threshold(&eta, 1).unwrap(), 0.995, LEV).unwrap());
        let r_ben = finite(certified_radius(1.0, nu_threshold(&eta, 0).unwrap(), 0.995, LEV).unwrap());
        got.push((r_mal, r_ben));
    }
    assert_eq!(got, vec![(138, 138), (276, 57), (597, 10)]);
    assert!(start.elapsed().as_secs() < 1, "runtime budget");
    println!("criterion 02 (eta sweep reproduction): PASS");
}

/// Criterion 3: the neighborhood-size lower bound at the paper's scale
/// exceeds 10^308 as an exact big-integer comparison.
#[test]
fn criterion_03_neighborhood_bound() {
    let start = std::time::Instant::now();
    let bound = neighborhood_size_lower_bound(10240, 128, 256);
    assert!(bound > BigUint::from(10u32).pow(308));
    assert!(start.elapsed().as_secs() < 1, "runtime budget");
    println!("criterion 03 (brute-force infeasibility bound): PASS");
}

/// Criterion 4: 200 seeded soundness trials, zero tolerance.
#[test]
fn criterion_04_soundness_suite() {
    let start = std::time::Instant::now();
    let alphabet = Alphabet::new(3).unwrap();
    let mech = DeletionMechanism::new(0.6).unwrap();
    let eta = [0.0, 0.0];
    // Largest certifiable radius at mu = 1 fixes the lookup-table depth.
    let max_r = finite(certified_radius(1.0, 0.5, 0.6, LEV).unwrap()) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut passed = 0;
    for trial in 0..200u64 {
        let tokens: Vec<u32> = (0..5).map(|_| rng.gen_range(0..3)).collect();
        let x = TokenSeq::new(tokens, alphabet).unwrap();
        let base = TableClassifier::random(alphabet, 5 + max_r + 1, 2, 40_000 + trial);
        let report =
            verify_certificate_soundness(&x, &base, &mech, &eta, LEV, 10_000_000, 1).unwrap();
        assert!(report.pass, "trial {trial} failed: {report:?}");
        passed += 1;
    }
    assert_eq!(passed, 200);
    assert!(start.elapsed().as_secs() < 600, "runtime budget");
    println!("criterion 04 (soundness suite): PASS 200/200");
}

/// Criterion 5: 1000 seeded trials of the pointwise bound check.
#[test]
fn criterion_05_theorem1_property() {
    let start = std::time::Instant::now();
    let alphabet = Alphabet::new(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for trial in 0..1000usize {
        let p = [0.3, 0.5, 0.8][trial % 3];
        let mech = DeletionMechanism::new(p).unwrap();
        let base = TableClassifier::random(alphabet, 8, 2, 90_000 + trial as u64);
        let lx = rng.gen_range(0..=8usize);
        let lt = rng.gen_range(0..=8usize);
        let x = TokenSeq::new((0..lx).map(|_| rng.gen_range(0..2)).collect(), alphabet).unwrap();
        let xt = TokenSeq::new((0..lt).map(|_| rng.gen_range(0..2)).collect(), alphabet).unwrap();
        let (exact, bound) = check_theorem1(&x, &xt, &base, &mech, 2).unwrap();
        assert!(
            exact >= bound - 1e-10,
            "trial {trial}: exact {exact} < bound {bound}"
        );
    }
    assert!(start.elapsed().as_secs() < 300, "runtime budget");
    println!("criterion 05 (pointwise bound property, 1000 trials): PASS");
}

/// Criterion 6: closed forms agree with brute-force minimization over
/// op-count decompositions for every radius up to 12 across the grid.
#[test]
fn criterion_06_table_vs_brute_force() {
    let start = std::time::Instant::now();
    // Worst decomposition value at exactly radius r, with support limited to
    // the op set; comparisons carry a small slack for f64 boundary noise.
    let worst_at = |mu: f64, p: f64, ops: EditOpSet, r: u32| -> f64 {
        let mut worst = f64::INFINITY;
        for s in 0..=r {
            for i in 0..=(r - s) {
                let d = r - s - i;
                if (s > 0 && !ops.sub()) || (i > 0 && !ops.ins()) || (d > 0 && !ops.del()) {
                    continue;
                }
                worst = worst.min(rho_bound(mu, p, s, i, d));
            }
        }
        worst
    };
    for ops in EditOpSet::all() {
        for mu in [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0] {
            for nu in [0.5, 0.6, 0.7, 0.8, 0.9, 0.95] {
                for p in [0.5, 0.7, 0.9, 0.95, 0.99, 0.999] {
                    let closed = certified_radius(mu, nu, p, ops).unwrap();
                    let mut certifiable_prefix = true;
                    for r in 0..=12u32 {
                        certifiable_prefix =
                            certifiable_prefix && worst_at(mu, p, ops, r) >= nu - 1e-9;
                        assert_eq!(
                            closed.covers(r as u64),
                            certifiable_prefix,
                            "mu={mu} nu={nu} p={p} ops={ops} r={r} closed={closed:?}"
                        );
                    }
                }
            }
        }
    }
    assert!(start.elapsed().as_secs() < 60, "runtime budget");
    println!("criterion 06 (closed forms vs brute-force minimization, r <= 12): PASS");
}

/// Criterion 7: the deletion mechanism's Hamming bound dominates the
/// ablation mechanism's exhaustively for |x| <= 30. The comparison of
/// p^r against C(|x|-r, k)/C(|x|, k) runs in exact rational arithmetic
/// (the additive mu - 1 term on both sides cancels).
#[test]
fn criterion_07_deletion_dominates_ablation() {
    let start = std::time::Instant::now();
    fn big_binomial(n: usize, k: usize) -> BigUint {
        if k > n {
            return BigUint::ZERO;
        }
        let k = k.min(n - k);
        let mut acc = BigUint::one();
        for i in 0..k {
            acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        acc
    }
    let rational = |num: u64, den: u64| BigRational::new(num.into(), den.into());
    let mut violations = 0usize;
    for (num, den) in [(1u64, 2u64), (9, 10), (19, 20), (99, 100)] {
        let p = rational(num, den);
        for n in 1usize..=30 {
            // k = ceil((1 - p) n), evaluated exactly.
            let k_rat = (BigRational::one() - p.clone()) * BigRational::from_integer(n.into());
            let k: usize = k_rat.ceil().to_integer().try_into().unwrap();
            let k = k.clamp(1, n);
            for r in 0..=(n - k) {
                let del_side = num_traits::pow::pow(p.clone(), r);
                let abn_side = BigRational::new(
                    big_binomial(n - r, k).into(),
                    big_binomial(n, k).into(),
                );
                if del_side < abn_side {
                    violations += 1;
                    eprintln!("violation at p={num}/{den} n={n} k={k} r={r}");
                }
            }
        }
    }
    assert_eq!(violations, 0);
    assert!(start.elapsed().as_secs() < 60, "runtime budget");
    println!("criterion 07 (deletion dominates ablation, |x| <= 30): PASS");
}

/// Criterion 8: the analytic all-successes case and Monte Carlo coverage of
/// the lower confidence bound.
#[test]
fn criterion_08_binomial_lcb() {
    let start = std::time::Instant::now();
    for n in [1u64, 10, 1000, 4000] {
        let got = binomial_lcb(n, n, 0.05).unwrap();
        let want = 0.05f64.powf(1.0 / n as f64);
        assert!((got - want).abs() < 1e-10, "n={n}: {got} vs {want}");
    }
    // Coverage: the event {lcb <= p} must occur with frequency >= 95% - 3Ïƒ.
    let sims = 10_000usize;
    let n = 1000u64;
    let sigma = (0.95f64 * 0.05 / sims as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for p in [0.3, 0.7, 0.95] {
        let dist = rand_distr::Binomial::new(n, p).unwrap();
        let mut lcb_cache: BTreeMap<u64, f64> = BTreeMap::new();
        let mut covered = 0usize;
        for _ in 0..sims {
            let k = rng.sample(dist);
            let lcb = *lcb_cache
                .entry(k)
                .or_insert_with(|| binomial_lcb(k, n, 0.05).unwrap());
            if lcb <= p {
                covered += 1;
            }
        }
        let freq = covered as f64 / sims as f64;
        assert!(
            freq >= 0.95 - 3.0 * sigma,
            "coverage at p={p}: {freq} < {}",
            0.95 - 3.0 * sigma
        );
    }
    assert!(start.elapsed().as_secs() < 120, "runtime budget");
    println!("criterion 08 (Clopper-Pearson lower bound): PASS");
}

/// Criterion 9: Monte Carlo confidence estimates track the exact values on
/// 20 random instances at 10^5 draws each.
#[test]
fn criterion_09_exact_vs_monte_carlo() {
    let start = std::time::Instant::now();
    let alphabet = Alphabet::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for trial in 0..20u64 {
        let p = rng.gen_range(0.3..0.9);
        let mech = DeletionMechanism::new(p).unwrap();
        let len = rng.gen_range(4..=8usize);
        let tokens: Vec<u32> = (0..len).map(|_| rng.gen_range(0..3)).collect();
        let x = TokenSeq::new(tokens, alphabet).unwrap();
        let base = TableClassifier::random(alphabet, len, 2, 50_000 + trial);
        let mu = exact_confidence(&x, &base, &mech, 2).unwrap().class_prob(1);
        let n = 100_000u64;
        let mut votes = 0u64;
        for i in 0..n {
            let z = sample_deletion(&x, &mech, SeedSpec::new(trial, i));
            votes += base.query(&z).unwrap() as u64;
        }
        let mu_hat = votes as f64 / n as f64;
        let tol = 4.0 * (mu * (1.0 - mu) / n as f64).sqrt();
        assert!(
            (mu_hat - mu).abs() <= tol,
            "trial {trial}: |{mu_hat} - {mu}| > {tol}"
        );
    }
    assert!(start.elapsed().as_secs() < 120, "runtime budget");
    println!("criterion 09 (exact vs Monte Carlo confidence): PASS");
}

fn editcert() -> Command {
    Command::new(env!("CARGO_BIN_EXE_editcert"))
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("command spawns");
    assert!(
        out.status.success(),
        "command failed: {cmd:?}\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

struct Pipeline {
    dir: PathBuf,
}

impl Pipeline {
    /// gen -> train -> calibrate on a fresh corpus.
    fn prepare(dir: &Path, seed: u64) -> Pipeline {
        run_ok(editcert().args([
            "gen",
            "--out",
            dir.to_str().unwrap(),
            "--count",
            "200",
            "--seed",
            &seed.to_string(),
        ]));
        run_ok(editcert().args([
            "train",
            "--manifest",
            dir.join("train.csv").to_str().unwrap(),
            "--out",
            dir.join("model.txt").to_str().unwrap(),
            "--p-del",
            "0.9",
            "--epochs",
            "25",
            "--seed",
            "1",
        ]));
        run_ok(editcert().args([
            "calibrate",
            "--manifest",
            dir.join("val.csv").to_str().unwrap(),
            "--model",
            dir.join("model.txt").to_str().unwrap(),
            "--out",
            dir.join("model_cal.txt").to_str().unwrap(),
            "--target-fpr",
            "0.005",
            "--p-del",
            "0.9",
            "--n",
            "200",
            "--seed",
            "2",
        ]));
        Pipeline { dir: dir.to_path_buf() }
    }

    fn certify(&self, threads: usize, out_name: &str) -> Vec<RunRecord> {
        let out = self.dir.join(out_name);
        run_ok(editcert().args([
            "certify",
            "--manifest",
            self.dir.join("test.csv").to_str().unwrap(),
            "--model",
            self.dir.join("model_cal.txt").to_str().unwrap(),
            "--p-del",
            "0.9",
            "--seed",
            "3",
            "--threads",
            &threads.to_string(),
            "--out",
            out.to_str().unwrap(),
        ]));
        parse_records(&std::fs::read_to_string(out).unwrap()).unwrap()
    }

    fn labels(&self, manifest: &str) -> BTreeMap<String, usize> {
        let text = std::fs::read_to_string(self.dir.join(manifest)).unwrap();
        text.lines()
            .skip(1)
            .map(|line| {
                let (path, label) = line.split_once(',').unwrap();
                (path.to_string(), label.parse().unwrap())
            })
            .collect()
    }
}

/// Criterion 10: the end-to-end synthetic pipeline reaches the accuracy,
/// calibration, curve-shape, and median-radius targets.
#[test]
fn criterion_10_end_to_end_pipeline() {
    let start = std::time::Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::prepare(tmp.path(), 1010);

    // Calibration achieved the target FPR on the validation set, measured
    // exactly as calibration measured it.
    let model = HistogramModel::load(std::io::BufReader::new(
        std::fs::File::open(tmp.path().join("model_cal.txt")).unwrap(),
    ))
    .unwrap();
    let val_labels = pipeline.labels("val.csv");
    let validation: Vec<(TokenSeq, usize)> = val_labels
        .iter()
        .map(|(path, &label)| {
            let bytes = std::fs::read(tmp.path().join(path)).unwrap();
            (TokenSeq::from_bytes(&bytes), label)
        })
        .collect();
    let mech = Mechanism::Deletion(DeletionMechanism::new(0.9).unwrap());
    let threshold =
        calibrate_threshold(&model, &validation, Some((&mech, 200)), 0.005, 2).unwrap();
    assert!(
        threshold <= model.threshold(),
        "calibrated threshold admits more than the target FPR"
    );

    let records = pipeline.certify(1, "records.jsonl");
    assert_eq!(records.len(), 40);
    let labels = pipeline.labels("test.csv");
    let report = compute_metrics(&records, &labels, &[0, 1, 2, 4, 8, 16, 32, 64, 128]).unwrap();

    assert!(
        report.clean_accuracy >= 0.95,
        "clean accuracy {}",
        report.clean_accuracy
    );
    let curve = &report.per_ops["del+ins+sub"].cert_acc;
    assert!(
        curve.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12),
        "certified accuracy must be non-increasing: {curve:?}"
    );
    // Median CR within [0.8, 1.0] x the saturated-confidence radius 6 for
    // p_del = 0.9, i.e. in [4, 6].
    match report.per_ops["del+ins+sub"].median_cr {
        RadiusValue::Finite(m) => assert!((4..=6).contains(&m), "median CR {m}"),
        other => panic!("median CR {other:?}"),
    }
    assert!(start.elapsed().as_secs() < 900, "runtime budget");
    println!(
        "criterion 10 (end-to-end pipeline): PASS (clean accuracy {:.3}, median CR {:?})",
        report.clean_accuracy, report.per_ops["del+ins+sub"].median_cr
    );
}

/// Criterion 11: identical sorted run records for 1 vs 8 worker threads.
#[test]
fn criterion_11_thread_count_determinism() {
    let start = std::time::Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::prepare(tmp.path(), 1010);
    pipeline.certify(1, "records_t1.jsonl");
    pipeline.certify(8, "records_t8.jsonl");
    let mut lines1: Vec<String> = std::fs::read_to_string(tmp.path().join("records_t1.jsonl"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let mut lines8: Vec<String> = std::fs::read_to_string(tmp.path().join("records_t8.jsonl"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    lines1.sort();
    lines8.sort();
    assert_eq!(lines1, lines8, "sorted records differ between thread counts");
    assert!(start.elapsed().as_secs() < 900, "runtime budget");
    println!("criterion 11 (thread-count determinism): PASS");
}

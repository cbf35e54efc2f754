//! Runs the certificate-soundness oracle suite.
//!
//! Each trial draws a fresh lookup-table base classifier and a random input,
//! certifies it with exact confidences, and exhaustively checks that the
//! smoothed prediction is constant on the certified ball.

use clap::Args;
use editcert_core::certify::{certified_radius, nu_threshold, Radius};
use editcert_core::distance::EditOpSet;
use editcert_core::oracle::{verify_certificate_soundness, TableClassifier};
use editcert_core::seq::{Alphabet, TokenSeq};
use editcert_core::smoothing::DeletionMechanism;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 3)]
    pub alphabet: u32,
    #[arg(long, default_value_t = 5)]
    pub len: usize,
    #[arg(long, default_value_t = 0.6)]
    pub p_del: f64,
    #[arg(long, default_value = "del,ins,sub")]
    pub ops: String,
    /// Per-class decision thresholds, comma-separated.
    #[arg(long, default_value = "0,0")]
    pub eta: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra radii searched past the certificate for the flip frontier.
    #[arg(long, default_value_t = 1)]
    pub margin: usize,
}

pub fn run(args: &VerifyArgs) -> CliResult<()> {
    let ops: EditOpSet = args
        .ops
        .parse()
        .map_err(|e: editcert_core::Error| CliError::Usage(e.to_string()))?;
    let eta: Vec<f64> = args
        .eta
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad --eta value {:?}", args.eta)))?;
    if eta.len() < 2 {
        return Err(CliError::Usage("--eta needs at least two classes".to_string()));
    }
    let alphabet = Alphabet::new(args.alphabet).map_err(CliError::from)?;
    let mech = DeletionMechanism::new(args.p_del)?;

    // Tables must cover insertion neighbors out to the largest radius any
    // trial can certify (mu = 1) plus the frontier margin.
    let mut worst_radius = 0usize;
    for y in 0..eta.len() {
        let nu = nu_threshold(&eta, y)?;
        match certified_radius(1.0, nu, args.p_del, ops)? {
            Radius::Finite(r) => worst_radius = worst_radius.max(r as usize),
            Radius::NotCertifiable => {}
            Radius::Unbounded => {
                return Err(CliError::Usage(
                    "the requested thresholds admit an unbounded radius; \
                     exhaustive verification cannot cover it"
                        .to_string(),
                ))
            }
        }
    }
    let table_len = args.len + worst_radius + args.margin;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut passed = 0usize;
    for trial in 0..args.trials {
        let tokens: Vec<u32> = (0..args.len).map(|_| rng.gen_range(0..args.alphabet)).collect();
        let x = TokenSeq::new(tokens, alphabet)?;
        let base = TableClassifier::random(
            alphabet,
            table_len,
            eta.len(),
            args.seed.wrapping_add(1 + trial as u64),
        );
        let report =
            verify_certificate_soundness(&x, &base, &mech, &eta, ops, 10_000_000, args.margin)?;
        if report.pass {
            passed += 1;
        } else {
            eprintln!(
                "FAIL trial {trial}: prediction {} with radius {:?} flips at {:?} (mu = {:.6})",
                report.prediction, report.radius, report.flip_frontier, report.mu
            );
        }
    }
    println!("PASS {passed}/{}", args.trials);
    if passed != args.trials {
        return Err(CliError::Verification(format!(
            "{} of {} soundness trials failed",
            args.trials - passed,
            args.trials
        )));
    }
    Ok(())
}

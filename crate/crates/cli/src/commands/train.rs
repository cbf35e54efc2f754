//! Trains the built-in histogram model on a manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use editcert_core::classifiers::{train_histogram, TrainConfig};
use editcert_core::seq::Alphabet;
use editcert_core::smoothing::{AblationMechanism, DeletionMechanism, Mechanism};

use crate::manifest::Manifest;
use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MechanismKind {
    Del,
    Abn,
}

pub(crate) fn build_mechanism(
    kind: MechanismKind,
    p: f64,
    alphabet: Alphabet,
) -> CliResult<Mechanism> {
    Ok(match kind {
        MechanismKind::Del => Mechanism::Deletion(DeletionMechanism::new(p)?),
        MechanismKind::Abn => Mechanism::Ablation(AblationMechanism::for_alphabet(p, alphabet)?),
    })
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Train-time smoothing strength; omit to train on clean inputs.
    #[arg(long)]
    pub p_del: Option<f64>,
    #[arg(long, value_enum, default_value_t = MechanismKind::Del)]
    pub mechanism: MechanismKind,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    /// Floor on retained tokens per training draw.
    #[arg(long, default_value_t = 0)]
    pub min_preserved: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let manifest = Manifest::read(&args.manifest)?;
    let (dataset, dict) = super::load_labeled(&manifest, None)?;
    if dataset.is_empty() {
        return Err(CliError::Input("manifest lists no rows".to_string()));
    }
    let alphabet = dataset[0].0.alphabet();
    let mechanism = match args.p_del {
        Some(p) => Some(build_mechanism(args.mechanism, p, alphabet)?),
        None => None,
    };
    let cfg = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        batch_size: args.batch,
        mechanism,
        min_preserved: args.min_preserved,
    };
    let model = train_histogram(&dataset, &cfg, args.seed)?;
    model.save(BufWriter::new(File::create(&args.out)?))?;
    // A chunked corpus's dictionary travels with the model so chunk ids
    // stay stable across runs.
    if let Some(dict) = dict {
        let dict_path = dict_path_for(&args.out);
        dict.save(BufWriter::new(File::create(dict_path)?))?;
    }
    eprintln!("trained model written to {}", args.out.display());
    Ok(())
}

pub(crate) fn dict_path_for(model_path: &std::path::Path) -> PathBuf {
    let mut os = model_path.as_os_str().to_os_string();
    os.push(".chunkdict");
    PathBuf::from(os)
}

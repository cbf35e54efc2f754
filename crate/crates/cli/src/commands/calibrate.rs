//! Calibrates the base decision threshold to a target false-positive rate.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use clap::Args;
use editcert_core::chunk::ChunkDictionary;
use editcert_core::classifiers::{calibrate_threshold, HistogramModel};

use super::train::{build_mechanism, dict_path_for, MechanismKind};
use crate::manifest::Manifest;
use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CalibrationMode {
    /// Measure the FPR of the smoothed majority vote (the deployed setting).
    Smoothed,
    /// Measure the FPR of raw base-model predictions.
    Base,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Validation manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Output model path; defaults to rewriting the input model.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.005)]
    pub target_fpr: f64,
    #[arg(long, value_enum, default_value_t = CalibrationMode::Smoothed)]
    pub mode: CalibrationMode,
    /// Smoothing strength for smoothed-mode calibration.
    #[arg(long)]
    pub p_del: Option<f64>,
    #[arg(long, value_enum, default_value_t = MechanismKind::Del)]
    pub mechanism: MechanismKind,
    /// Draws per validation example in smoothed mode.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &CalibrateArgs) -> CliResult<()> {
    let mut model = HistogramModel::load(BufReader::new(File::open(&args.model)?))?;
    let manifest = Manifest::read(&args.manifest)?;
    let preloaded = if manifest.has_chunks() {
        let dict_path = dict_path_for(&args.model);
        if dict_path.exists() {
            Some(ChunkDictionary::load(BufReader::new(File::open(dict_path)?))?)
        } else {
            None
        }
    } else {
        None
    };
    let (validation, _) = super::load_labeled(&manifest, preloaded)?;
    if validation.is_empty() {
        return Err(CliError::Input("manifest lists no rows".to_string()));
    }

    // The ablation null token sits just past the input alphabet, matching
    // how an ablation-trained model was built.
    let input_alphabet = validation[0].0.alphabet();
    let smoothing = match args.mode {
        CalibrationMode::Base => None,
        CalibrationMode::Smoothed => {
            let p = args.p_del.ok_or_else(|| {
                CliError::Usage("smoothed calibration requires --p-del".to_string())
            })?;
            Some(build_mechanism(args.mechanism, p, input_alphabet)?)
        }
    };
    let threshold = calibrate_threshold(
        &model,
        &validation,
        smoothing.as_ref().map(|m| (m, args.n)),
        args.target_fpr,
        args.seed,
    )?;
    model.set_threshold(threshold);
    let out = args.out.as_ref().unwrap_or(&args.model);
    model.save(BufWriter::new(File::create(out)?))?;
    eprintln!(
        "calibrated threshold {threshold} written to {}",
        out.display()
    );
    Ok(())
}

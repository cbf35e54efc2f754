//! Batch certification over a manifest.
//!
//! Each row is certified under its own master seed derived from the run
//! seed and the row index, so results are identical for any thread count;
//! rows may complete out of order, and a sort on the output lines yields a
//! canonical form. Unreadable rows are recorded and the run continues.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::sync::mpsc;

use clap::Args;
use editcert_core::certify::{certify, SmoothingConfig, DEFAULT_ALPHA, DEFAULT_N_BND, DEFAULT_N_PRED};
use editcert_core::chunk::ChunkDictionary;
use editcert_core::classifiers::{BaseClassifier, HistogramModel, HttpClassifier, SubprocessClassifier};
use editcert_core::distance::EditOpSet;
use editcert_core::seq::Alphabet;

use super::train::{build_mechanism, dict_path_for, MechanismKind};
use super::RowInput;
use crate::manifest::Manifest;
use crate::records::RunRecord;
use crate::runconfig::{resolve, FileConfig};
use crate::{row_seed, CliError, CliResult};

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Built-in histogram model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// External classifier: an http(s) URL or a command line to spawn.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Optional key=value file supplying defaults for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p_del: Option<f64>,
    #[arg(long, value_enum)]
    pub mechanism: Option<MechanismKind>,
    #[arg(long)]
    pub n_pred: Option<usize>,
    #[arg(long)]
    pub n_bnd: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Per-class decision thresholds, comma-separated.
    #[arg(long)]
    pub eta: Option<String>,
    /// Op sets to certify, e.g. "del,ins,sub;sub" (semicolon-separated).
    #[arg(long)]
    pub ops: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output records path (JSON lines); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Retry budget for http endpoints.
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
}

fn parse_eta(raw: &str) -> CliResult<Vec<f64>> {
    let eta: Result<Vec<f64>, _> = raw.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let eta = eta.map_err(|_| CliError::Usage(format!("bad --eta value {raw:?}")))?;
    if eta.len() < 2 {
        return Err(CliError::Usage("--eta needs at least two classes".to_string()));
    }
    Ok(eta)
}

fn parse_ops(raw: &str) -> CliResult<Vec<EditOpSet>> {
    raw.split(';')
        .map(|part| {
            part.trim()
                .parse::<EditOpSet>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

enum Classifier {
    Model(HistogramModel),
    Http(HttpClassifier),
    Subprocess(SubprocessClassifier),
}

impl Classifier {
    fn as_base(&self) -> &dyn BaseClassifier {
        match self {
            Classifier::Model(m) => m,
            Classifier::Http(h) => h,
            Classifier::Subprocess(s) => s,
        }
    }
}

pub fn run(args: &CertifyArgs) -> CliResult<()> {
    let file_cfg = match &args.config {
        Some(path) => FileConfig::read(path)?,
        None => FileConfig::default(),
    };
    let p = resolve(args.p_del, file_cfg.get("p_del")?, 0.9);
    let n_pred = resolve(args.n_pred, file_cfg.get("n_pred")?, DEFAULT_N_PRED);
    let n_bnd = resolve(args.n_bnd, file_cfg.get("n_bnd")?, DEFAULT_N_BND);
    let alpha = resolve(args.alpha, file_cfg.get("alpha")?, DEFAULT_ALPHA);
    let seed = resolve(args.seed, file_cfg.get("seed")?, 0);
    let threads = resolve(args.threads, file_cfg.get("threads")?, 1).max(1);
    let eta_raw = args
        .eta
        .clone()
        .or(file_cfg.get_raw("eta").map(String::from))
        .unwrap_or_else(|| "0.5,0.5".to_string());
    let eta = parse_eta(&eta_raw)?;
    let ops_raw = args
        .ops
        .clone()
        .or(file_cfg.get_raw("ops").map(String::from))
        .unwrap_or_else(|| "del,ins,sub".to_string());
    let ops_list = parse_ops(&ops_raw)?;
    let mech_kind = resolve(
        args.mechanism,
        match file_cfg.get_raw("mechanism") {
            Some("del") => Some(MechanismKind::Del),
            Some("abn") => Some(MechanismKind::Abn),
            Some(other) => {
                return Err(CliError::Usage(format!("bad mechanism {other:?} in config")))
            }
            None => None,
        },
        MechanismKind::Del,
    );

    let manifest = Manifest::read(&args.manifest)?;

    let classifier = match (&args.model, &args.endpoint) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--model and --endpoint are mutually exclusive".to_string(),
            ))
        }
        (Some(path), None) => {
            Classifier::Model(HistogramModel::load(BufReader::new(File::open(path)?))?)
        }
        (None, Some(spec)) if spec.starts_with("http://") || spec.starts_with("https://") => {
            Classifier::Http(HttpClassifier::new(spec, eta.len(), args.retries))
        }
        (None, Some(spec)) => {
            let argv: Vec<String> = spec.split_whitespace().map(String::from).collect();
            Classifier::Subprocess(SubprocessClassifier::spawn(&argv, eta.len())?)
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --model or --endpoint is required".to_string(),
            ))
        }
    };

    // A chunked manifest reuses the dictionary persisted next to the model,
    // extending it with unseen chunks.
    let preloaded = match (&args.model, manifest.has_chunks()) {
        (Some(model_path), true) => {
            let dict_path = dict_path_for(model_path);
            if dict_path.exists() {
                Some(ChunkDictionary::load(BufReader::new(File::open(dict_path)?))?)
            } else {
                None
            }
        }
        _ => None,
    };
    let (rows, dict) = super::load_rows(&manifest, preloaded)?;
    let input_alphabet = match &dict {
        Some(d) => d.alphabet().unwrap_or(Alphabet::BYTES),
        None => Alphabet::BYTES,
    };
    let mechanism = build_mechanism(mech_kind, p, input_alphabet)?;
    let cfg = SmoothingConfig {
        mechanism,
        n_pred,
        n_bnd,
        alpha,
        eta,
        parallel_samples: false,
    };
    cfg.validate()?;

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };

    let base = classifier.as_base();
    let jobs: Vec<(usize, &str, &RowInput)> = manifest
        .rows
        .iter()
        .zip(&rows)
        .enumerate()
        .map(|(i, (row, input))| (i, row.path.as_str(), input))
        .collect();
    let certify_row = |(i, path, input): &(usize, &str, &RowInput)| -> RunRecord {
        let master = row_seed(seed, *i as u64);
        match input {
            RowInput::Failed(msg) => RunRecord::from_error(path, master, msg.clone()),
            RowInput::Seq(x) => match certify(x, base, &cfg, &ops_list, master) {
                Ok(verdict) => RunRecord::from_verdict(path, x.len(), &verdict),
                Err(e) => RunRecord::from_error(path, master, e.to_string()),
            },
        }
    };

    // A reader that stops consuming (e.g. `| head`) is not an error.
    let write_line = |out: &mut dyn Write, line: &str| -> CliResult<bool> {
        match writeln!(out, "{line}") {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(false),
            Err(e) => Err(e.into()),
        }
    };

    if threads == 1 {
        for job in &jobs {
            if !write_line(out.as_mut(), &certify_row(job).to_json_line())? {
                return Ok(());
            }
        }
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Input(e.to_string()))?;
        let (sender, receiver) = mpsc::channel::<String>();
        pool.in_place_scope(|scope| -> CliResult<()> {
            for job in &jobs {
                let sender = sender.clone();
                let certify_row = &certify_row;
                scope.spawn(move |_| {
                    let _ = sender.send(certify_row(job).to_json_line());
                });
            }
            drop(sender);
            // Writing happens as rows complete; order is scheduler-dependent.
            for line in receiver {
                if !write_line(out.as_mut(), &line)? {
                    break;
                }
            }
            Ok(())
        })?;
    }
    match out.flush() {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(Into::into),
    }
}

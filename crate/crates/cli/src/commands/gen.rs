//! Synthetic corpus generator: the planted-motif family.
//!
//! Class-1 files embed a fixed byte motif several times at random offsets;
//! class-0 files never contain any motif byte. Generation is seeded and
//! byte-identical across runs: file `i` draws from its own substream, so
//! corpora are reproducible regardless of write order.

use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifest::{write_manifest, ManifestRow};
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Number of files to generate (split 60/20/20 into train/val/test).
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub len_min: usize,
    #[arg(long, default_value_t = 400)]
    pub len_max: usize,
    /// Motif bytes, comma-separated.
    #[arg(long, default_value = "7,7,7,7", value_delimiter = ',')]
    pub motif: Vec<u8>,
    /// Motif copies planted per class-1 file.
    #[arg(long, default_value_t = 20)]
    pub motif_count: usize,
}

pub fn run(args: &GenArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be positive".to_string()));
    }
    if args.motif.is_empty() {
        return Err(CliError::Usage("--motif must not be empty".to_string()));
    }
    if args.len_min == 0 || args.len_min > args.len_max {
        return Err(CliError::Usage("need 0 < len-min <= len-max".to_string()));
    }
    if args.motif.len() * args.motif_count > args.len_min {
        return Err(CliError::Usage(
            "motif copies do not fit into the minimum length".to_string(),
        ));
    }
    let data_dir = args.out.join("data");
    std::fs::create_dir_all(&data_dir)?;

    // Background bytes avoid motif bytes entirely, so class 0 never
    // contains the motif.
    let background: Vec<u8> = (0..=255u8).filter(|b| !args.motif.contains(b)).collect();
    if background.is_empty() {
        return Err(CliError::Usage("motif covers the whole alphabet".to_string()));
    }

    let mut splits: [Vec<ManifestRow>; 3] = Default::default();
    for i in 0..args.count {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(i as u64);
        let label = i % 2;
        let len = rng.gen_range(args.len_min..=args.len_max);
        let mut bytes: Vec<u8> = (0..len)
            .map(|_| background[rng.gen_range(0..background.len())])
            .collect();
        if label == 1 {
            for _ in 0..args.motif_count {
                let start = rng.gen_range(0..=len - args.motif.len());
                bytes[start..start + args.motif.len()].copy_from_slice(&args.motif);
            }
        }
        let rel = format!("data/{i:05}.bin");
        std::fs::write(args.out.join(&rel), &bytes)?;
        // Pair index drives the split so labels stay balanced per split.
        let split = match (i / 2) % 10 {
            0..=5 => 0,
            6 | 7 => 1,
            _ => 2,
        };
        splits[split].push(ManifestRow {
            path: rel,
            label,
            chunks: None,
        });
    }

    for (rows, name) in splits.iter().zip(["train.csv", "val.csv", "test.csv"]) {
        write_manifest(&args.out.join(name), rows)?;
    }
    eprintln!(
        "wrote {} files to {} (train {}, val {}, test {})",
        args.count,
        args.out.display(),
        splits[0].len(),
        splits[1].len(),
        splits[2].len()
    );
    Ok(())
}

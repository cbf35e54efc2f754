//! Scores a records file against manifest labels.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;

use crate::manifest::Manifest;
use crate::metrics::{compute_metrics, default_grid};
use crate::records::parse_records;
use crate::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Records file produced by `certify` (JSON lines).
    #[arg(long)]
    pub records: PathBuf,
    /// Manifest supplying ground-truth labels.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Radius grid, comma-separated; defaults to powers of two up to 1024.
    #[arg(long)]
    pub grid: Option<String>,
    /// Also write the certified-accuracy curves as CSV.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

pub fn run(args: &MetricsArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.records)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.records.display())))?;
    let records = parse_records(&text).map_err(CliError::Input)?;
    let manifest = Manifest::read(&args.manifest)?;
    let labels: BTreeMap<String, usize> = manifest
        .rows
        .iter()
        .map(|r| (r.path.clone(), r.label))
        .collect();
    let grid = match &args.grid {
        None => default_grid(),
        Some(raw) => {
            let parsed: Result<Vec<u64>, _> =
                raw.split(',').map(|v| v.trim().parse::<u64>()).collect();
            parsed.map_err(|_| CliError::Usage(format!("bad --grid value {raw:?}")))?
        }
    };
    let report = compute_metrics(&records, &labels, &grid)?;
    print!("{}", report.render_table());
    if let Some(path) = &args.out_csv {
        std::fs::write(path, report.render_csv())?;
    }
    Ok(())
}

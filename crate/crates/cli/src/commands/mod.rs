//! Subcommand implementations.

pub mod calibrate;
pub mod certify;
pub mod gen;
pub mod metrics_cmd;
pub mod train;
pub mod verify;

use std::io::BufReader;

use editcert_core::chunk::{apply_chunking, ChunkDictionary, ChunkMap};
use editcert_core::seq::TokenSeq;

use crate::manifest::Manifest;
use crate::{CliError, CliResult};

/// A manifest row loaded into memory; read failures are carried per row so
/// a batch run can continue past them.
pub(crate) enum RowInput {
    Seq(TokenSeq),
    Failed(String),
}

/// Reads every row of a manifest. Chunked manifests are interned in two
/// passes (the dictionary is completed over the whole corpus before any
/// sequence is built) so all rows share one chunk alphabet.
pub(crate) fn load_rows(
    manifest: &Manifest,
    preloaded: Option<ChunkDictionary>,
) -> CliResult<(Vec<RowInput>, Option<ChunkDictionary>)> {
    let chunked = manifest.has_chunks();
    if chunked && manifest.rows.iter().any(|r| r.chunks.is_none()) {
        return Err(CliError::Input(
            "manifest mixes chunked and unchunked rows".to_string(),
        ));
    }
    if !chunked {
        let rows = manifest
            .rows
            .iter()
            .map(|row| match std::fs::read(manifest.resolve(&row.path)) {
                Ok(bytes) => RowInput::Seq(TokenSeq::from_bytes(&bytes)),
                Err(e) => RowInput::Failed(format!("{}: {e}", row.path)),
            })
            .collect();
        return Ok((rows, None));
    }

    let mut dict = preloaded.unwrap_or_default();
    let mut raw: Vec<Result<(TokenSeq, ChunkMap), String>> = Vec::new();
    for row in &manifest.rows {
        let sidecar = row.chunks.as_ref().expect("checked above");
        let loaded = (|| -> Result<(TokenSeq, ChunkMap), String> {
            let bytes = std::fs::read(manifest.resolve(&row.path))
                .map_err(|e| format!("{}: {e}", row.path))?;
            let file = std::fs::File::open(manifest.resolve(sidecar))
                .map_err(|e| format!("{sidecar}: {e}"))?;
            let map = ChunkMap::read_sidecar(BufReader::new(file))
                .map_err(|e| format!("{sidecar}: {e}"))?;
            Ok((TokenSeq::from_bytes(&bytes), map))
        })();
        if let Ok((bytes, map)) = &loaded {
            dict.intern_chunks(bytes, map)
                .map_err(|e| CliError::Input(format!("{}: {e}", row.path)))?;
        }
        raw.push(loaded);
    }
    let rows = raw
        .into_iter()
        .map(|loaded| match loaded {
            Ok((bytes, map)) => match apply_chunking(&bytes, &map, &mut dict) {
                Ok(seq) => RowInput::Seq(seq),
                Err(e) => RowInput::Failed(e.to_string()),
            },
            Err(msg) => RowInput::Failed(msg),
        })
        .collect();
    Ok((rows, Some(dict)))
}

/// Loaded rows paired with labels; every row must be readable (training and
/// calibration need complete examples).
pub(crate) fn load_labeled(
    manifest: &Manifest,
    preloaded: Option<ChunkDictionary>,
) -> CliResult<(Vec<(TokenSeq, usize)>, Option<ChunkDictionary>)> {
    let (rows, dict) = load_rows(manifest, preloaded)?;
    let mut out = Vec::with_capacity(rows.len());
    for (row, input) in manifest.rows.iter().zip(rows) {
        match input {
            RowInput::Seq(seq) => out.push((seq, row.label)),
            RowInput::Failed(msg) => return Err(CliError::Input(msg)),
        }
    }
    Ok((out, dict))
}

//! Chunk-level reinterpretation of byte sequences.
//!
//! A [`ChunkMap`] partitions a byte sequence into contiguous chunks at fixed
//! start offsets. Distinct chunk contents are interned into a dense chunk
//! alphabet by a [`ChunkDictionary`], so that edits apply chunk-wise and
//! identical byte substrings always map to the same chunk token.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::seq::{Alphabet, TokenSeq};

/// Strictly increasing chunk start offsets, beginning at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkMap {
    boundaries: Vec<usize>,
}

impl ChunkMap {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.first() != Some(&0) {
            return Err(Error::InvalidChunkMap(
                "first boundary must be 0".to_string(),
            ));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidChunkMap(
                "boundaries must be strictly increasing".to_string(),
            ));
        }
        Ok(ChunkMap { boundaries })
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Checks the map against a concrete byte length.
    pub fn validate_for_len(&self, len: usize) -> Result<()> {
        let last = *self.boundaries.last().expect("maps are never empty");
        if last >= len {
            return Err(Error::InvalidChunkMap(format!(
                "boundary {last} out of range for byte length {len}"
            )));
        }
        Ok(())
    }

    /// Reads the sidecar format: one decimal offset per line, first line "0".
    pub fn read_sidecar<R: BufRead>(reader: R) -> Result<Self> {
        let mut boundaries = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let offset: usize = trimmed
                .parse()
                .map_err(|_| Error::InvalidChunkMap(format!("bad offset line {trimmed:?}")))?;
            boundaries.push(offset);
        }
        if boundaries.is_empty() {
            return Err(Error::InvalidChunkMap("sidecar has no offsets".to_string()));
        }
        ChunkMap::new(boundaries)
    }

    pub fn write_sidecar<W: Write>(&self, mut writer: W) -> Result<()> {
        for b in &self.boundaries {
            writeln!(writer, "{b}")?;
        }
        Ok(())
    }

    fn chunk_ranges(&self, len: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.boundaries.len();
        (0..n).map(move |i| {
            let start = self.boundaries[i];
            let end = if i + 1 < n { self.boundaries[i + 1] } else { len };
            (start, end)
        })
    }
}

/// Interns chunk contents into a dense token alphabet.
///
/// Token ids are assigned in first-seen order, so a dictionary built by
/// replaying a corpus in a fixed order is reproducible. Persist it alongside
/// a model to keep chunk ids stable across runs.
#[derive(Debug, Default, Clone)]
pub struct ChunkDictionary {
    ids: HashMap<Vec<u8>, u32>,
    contents: Vec<Vec<u8>>,
}

const DICT_HEADER: &str = "editcert-chunkdict v1";

impl ChunkDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    /// The chunk alphabet as currently interned. Empty dictionaries have no
    /// usable alphabet.
    pub fn alphabet(&self) -> Result<Alphabet> {
        Alphabet::new(self.contents.len() as u32)
    }

    pub fn intern(&mut self, chunk: &[u8]) -> u32 {
        if let Some(&id) = self.ids.get(chunk) {
            return id;
        }
        let id = self.contents.len() as u32;
        self.ids.insert(chunk.to_vec(), id);
        self.contents.push(chunk.to_vec());
        id
    }

    pub fn content(&self, id: u32) -> Option<&[u8]> {
        self.contents.get(id as usize).map(Vec::as_slice)
    }

    /// Interns the chunks of `bytes` under `map` and returns their ids.
    pub fn intern_chunks(&mut self, bytes: &TokenSeq, map: &ChunkMap) -> Result<Vec<u32>> {
        if bytes.alphabet().size() > 256 {
            return Err(Error::InvalidChunkMap(
                "chunking applies to byte sequences".to_string(),
            ));
        }
        map.validate_for_len(bytes.len())?;
        let raw: Vec<u8> = bytes.tokens().iter().map(|&t| t as u8).collect();
        Ok(map
            .chunk_ranges(raw.len())
            .map(|(start, end)| self.intern(&raw[start..end]))
            .collect())
    }

    /// Line-oriented text format: header, then one lowercase-hex chunk per
    /// line in id order.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "{DICT_HEADER}")?;
        for content in &self.contents {
            let hex: String = content.iter().map(|b| format!("{b:02x}")).collect();
            writeln!(writer, "{hex}")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(header)) if header.trim() == DICT_HEADER => {}
            _ => {
                return Err(Error::InvalidChunkMap(
                    "missing chunk dictionary header".to_string(),
                ))
            }
        }
        let mut dict = ChunkDictionary::new();
        for line in lines {
            let line = line?;
            let hex = line.trim();
            if hex.is_empty() {
                continue;
            }
            if hex.len() % 2 != 0 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(Error::InvalidChunkMap(format!("bad hex line {hex:?}")));
            }
            let bytes: Vec<u8> = (0..hex.len())
                .step_by(2)
                .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).unwrap())
                .collect();
            dict.intern(&bytes);
        }
        Ok(dict)
    }
}

/// Reinterprets a byte sequence as a sequence of chunk tokens.
///
/// The returned sequence lives over the dictionary's alphabet as of this
/// call; concatenating the dictionary contents of its tokens reconstructs
/// the original bytes.
pub fn apply_chunking(
    bytes: &TokenSeq,
    map: &ChunkMap,
    dict: &mut ChunkDictionary,
) -> Result<TokenSeq> {
    let ids = dict.intern_chunks(bytes, map)?;
    TokenSeq::new(ids, dict.alphabet()?)
}

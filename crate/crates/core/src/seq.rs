//! Token sequences over finite alphabets.
//!
//! A [`TokenSeq`] is an ordered, possibly empty sequence of integer tokens
//! drawn from an [`Alphabet`] of a fixed size. Byte sequences use the
//! 256-token alphabet; chunked inputs use a dense alphabet produced by a
//! [`crate::chunk::ChunkDictionary`].

use crate::error::{Error, Result};

/// A finite token domain: values are integers in `[0, size)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alphabet {
    size: u32,
}

impl Alphabet {
    /// The byte alphabet, `[0, 256)`.
    pub const BYTES: Alphabet = Alphabet { size: 256 };

    pub fn new(size: u32) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidAlphabet);
        }
        Ok(Alphabet { size })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn contains(&self, token: u32) -> bool {
        token < self.size
    }

    /// The same domain extended with one extra token (used for ablation nulls).
    pub fn extended(&self) -> Alphabet {
        Alphabet {
            size: self.size + 1,
        }
    }
}

/// An immutable sequence of tokens over a fixed alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSeq {
    tokens: Vec<u32>,
    alphabet: Alphabet,
}

impl TokenSeq {
    pub fn new(tokens: Vec<u32>, alphabet: Alphabet) -> Result<Self> {
        if let Some(&token) = tokens.iter().find(|&&t| !alphabet.contains(t)) {
            return Err(Error::TokenOutOfRange {
                token,
                alphabet: alphabet.size(),
            });
        }
        Ok(TokenSeq { tokens, alphabet })
    }

    /// Constructs without range checks; callers guarantee every token fits.
    pub(crate) fn from_trusted(tokens: Vec<u32>, alphabet: Alphabet) -> Self {
        debug_assert!(tokens.iter().all(|&t| alphabet.contains(t)));
        TokenSeq { tokens, alphabet }
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        TokenSeq {
            tokens: Vec::new(),
            alphabet,
        }
    }

    /// A byte sequence over the 256-token alphabet.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        TokenSeq {
            tokens: bytes.iter().map(|&b| u32::from(b)).collect(),
            alphabet: Alphabet::BYTES,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Fails unless both sequences share an alphabet.
    pub fn check_same_alphabet(&self, other: &TokenSeq) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet.size(),
                right: other.alphabet.size(),
            });
        }
        Ok(())
    }

    /// The subsequence at the given (sorted, deduplicated) retained indices.
    pub(crate) fn subsequence(&self, retained: &[usize]) -> TokenSeq {
        let tokens = retained.iter().map(|&i| self.tokens[i]).collect();
        TokenSeq {
            tokens,
            alphabet: self.alphabet,
        }
    }
}

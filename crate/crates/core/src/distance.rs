//! Edit distances between token sequences.
//!
//! All distances count unit-cost elementary operations. `edit_distance`
//! restricts the dynamic program to an allowed op set: with all three ops it
//! is the Levenshtein distance, with `{del, ins}` it equals the LCS distance,
//! and with `{sub}` it is the Hamming distance. Distances are directed
//! ("ops transform the first argument into the second"), which only matters
//! for the asymmetric sets: `d_{del}(a, b) = d_{ins}(b, a)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::seq::TokenSeq;

/// Which elementary edits an adversary may apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EditOpSet {
    del: bool,
    ins: bool,
    sub: bool,
}

impl EditOpSet {
    pub const LEVENSHTEIN: EditOpSet = EditOpSet {
        del: true,
        ins: true,
        sub: true,
    };
    pub const DEL: EditOpSet = EditOpSet {
        del: true,
        ins: false,
        sub: false,
    };
    pub const INS: EditOpSet = EditOpSet {
        del: false,
        ins: true,
        sub: false,
    };
    pub const SUB: EditOpSet = EditOpSet {
        del: false,
        ins: false,
        sub: true,
    };
    pub const DEL_INS: EditOpSet = EditOpSet {
        del: true,
        ins: true,
        sub: false,
    };

    pub fn new(del: bool, ins: bool, sub: bool) -> Result<Self> {
        if !(del || ins || sub) {
            return Err(Error::EmptyOpSet);
        }
        Ok(EditOpSet { del, ins, sub })
    }

    pub fn del(&self) -> bool {
        self.del
    }

    pub fn ins(&self) -> bool {
        self.ins
    }

    pub fn sub(&self) -> bool {
        self.sub
    }

    /// All seven non-empty op sets, in canonical label order.
    pub fn all() -> [EditOpSet; 7] {
        [
            EditOpSet::DEL,
            EditOpSet::INS,
            EditOpSet::SUB,
            EditOpSet::DEL_INS,
            EditOpSet::new(true, false, true).unwrap(),
            EditOpSet::new(false, true, true).unwrap(),
            EditOpSet::LEVENSHTEIN,
        ]
    }

    /// Swaps del and ins; the dual set measures the reverse direction.
    pub fn dual(&self) -> EditOpSet {
        EditOpSet {
            del: self.ins,
            ins: self.del,
            sub: self.sub,
        }
    }

    /// Symmetric sets measure the same distance in both directions.
    pub fn is_symmetric(&self) -> bool {
        self.del == self.ins
    }

    /// Canonical label, e.g. `del+ins+sub`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.del {
            parts.push("del");
        }
        if self.ins {
            parts.push("ins");
        }
        if self.sub {
            parts.push("sub");
        }
        parts.join("+")
    }
}

impl fmt::Display for EditOpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for EditOpSet {
    type Err = Error;

    /// Parses `del,ins,sub` or `del+ins+sub` (any order, case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let (mut del, mut ins, mut sub) = (false, false, false);
        for part in s.split(|c| c == ',' || c == '+') {
            match part.trim().to_ascii_lowercase().as_str() {
                "del" => del = true,
                "ins" => ins = true,
                "sub" => sub = true,
                _ => return Err(Error::BadOpSet(s.to_string())),
            }
        }
        EditOpSet::new(del, ins, sub).map_err(|_| Error::BadOpSet(s.to_string()))
    }
}

/// A distance value under a restricted op set; some pairs have no edit path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditDistance {
    Finite(usize),
    Unreachable,
}

impl EditDistance {
    pub fn finite(self) -> Option<usize> {
        match self {
            EditDistance::Finite(d) => Some(d),
            EditDistance::Unreachable => None,
        }
    }

    pub fn is_within(self, r: usize) -> bool {
        matches!(self, EditDistance::Finite(d) if d <= r)
    }
}

/// Length of a longest common subsequence, by dynamic programming.
pub fn lcs_length(a: &TokenSeq, b: &TokenSeq) -> Result<usize> {
    a.check_same_alphabet(b)?;
    let (x, y) = (a.tokens(), b.tokens());
    let mut prev = vec![0usize; y.len() + 1];
    let mut cur = vec![0usize; y.len() + 1];
    for &ta in x {
        for (j, &tb) in y.iter().enumerate() {
            cur[j + 1] = if ta == tb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[y.len()])
}

/// LCS distance `|a| + |b| - 2*lcs`, the edit distance with `{del, ins}`.
pub fn lcs_distance(a: &TokenSeq, b: &TokenSeq) -> Result<usize> {
    Ok(a.len() + b.len() - 2 * lcs_length(a, b)?)
}

const INF: usize = usize::MAX / 2;

/// Minimum number of allowed ops transforming `a` into `b`.
pub fn edit_distance(a: &TokenSeq, b: &TokenSeq, ops: EditOpSet) -> Result<EditDistance> {
    a.check_same_alphabet(b)?;
    let (x, y) = (a.tokens(), b.tokens());
    // dp[j] holds the cost of transforming x[..i] into y[..j].
    let mut prev = vec![INF; y.len() + 1];
    let mut cur = vec![INF; y.len() + 1];
    prev[0] = 0;
    if ops.ins {
        for j in 1..=y.len() {
            prev[j] = j;
        }
    }
    for (i, &ta) in x.iter().enumerate() {
        cur[0] = if ops.del { i + 1 } else { INF };
        for (j, &tb) in y.iter().enumerate() {
            let mut best = INF;
            if ta == tb {
                best = best.min(prev[j]);
            } else if ops.sub {
                best = best.min(prev[j] + 1);
            }
            if ops.del {
                best = best.min(prev[j + 1] + 1);
            }
            if ops.ins {
                best = best.min(cur[j] + 1);
            }
            cur[j + 1] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[y.len()];
    Ok(if d >= INF {
        EditDistance::Unreachable
    } else {
        EditDistance::Finite(d)
    })
}

/// Number of differing positions for equal-length sequences.
pub fn hamming_distance(a: &TokenSeq, b: &TokenSeq) -> Result<EditDistance> {
    a.check_same_alphabet(b)?;
    if a.len() != b.len() {
        return Ok(EditDistance::Unreachable);
    }
    let d = a
        .tokens()
        .iter()
        .zip(b.tokens())
        .filter(|(ta, tb)| ta != tb)
        .count();
    Ok(EditDistance::Finite(d))
}

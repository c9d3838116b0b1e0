//! Grapheme-to-phoneme conversion by recombining overlapping chunks of
//! known pronunciations.
//!
//! The pipeline for one unknown word:
//!
//! 1. [`ChunkIndex::match_word`] finds every lexicon chunk whose spelling
//!    occurs in the word;
//! 2. [`Lattice::build`] links chunks that strictly overlap and agree on the
//!    shared phonemes;
//! 3. [`best_candidates`] ranks the start-to-end paths of the lattice.
//!
//! Three recombination modes are available: unbounded overlap ([`Mode::Smpa`]),
//! overlap of exactly one letter ([`Mode::Overlap1`]) and a single head chunk
//! joined to a single tail chunk ([`Mode::HeadTail`]).

pub mod eval;
pub mod index;
pub mod lattice;
pub mod lexicon;
pub mod rank;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use eval::{align_phonemes, evaluate, generate_splits, EditCounts, EvalReport, SplitSpec};
pub use index::{extract_chunks, Chunk, ChunkIndex, IndexConfig, Match};
pub use lattice::{Lattice, LatticeArc, LatticeNode};
pub use lexicon::{
    parse_lexicon, parse_lexicon_str, strip_nulls, AlignedEntry, FormatKind, Lexicon, LexiconFormat, Phone,
    PhoneInventory,
};
pub use rank::{best_candidates, score_path, transcribe, transcribe_all, Candidate, RankingPolicy, Score, TieBreak};

/// Recombination rule used to link chunks in the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Any strict overlap of one letter or more.
    #[default]
    Smpa,
    /// Adjacent chunks share exactly one letter.
    Overlap1,
    /// One prefix chunk followed by one suffix chunk.
    HeadTail,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Smpa => "smpa",
            Mode::Overlap1 => "overlap1",
            Mode::HeadTail => "headtail",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smpa" => Ok(Mode::Smpa),
            "pronounce" | "overlap1" => Ok(Mode::Overlap1),
            "headtail" => Ok(Mode::HeadTail),
            other => Err(format!("unknown mode '{other}' (expected smpa, pronounce, overlap1 or headtail)")),
        }
    }
}

/// Operation counts collected while matching, building and ranking.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub trie_steps: u64,
    pub arc_tests: u64,
    pub symbol_compares: u64,
    pub dp_updates: u64,
    pub search_steps: u64,
}

impl OpCounter {
    pub fn total(&self) -> u64 {
        self.trie_steps + self.arc_tests + self.symbol_compares + self.dp_updates + self.search_steps
    }
}

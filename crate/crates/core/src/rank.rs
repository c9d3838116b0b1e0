//! Candidate scoring and selection.
//!
//! A path `P` through the lattice of a word `x` scores
//!
//! ```text
//! C(P) = Σ_{s ∈ P} len(s) / (|P| · len(x))
//! ```
//!
//! i.e. the mean chunk length relative to the word length. Because this is
//! a ratio, the best path is not a plain longest path. The ranker runs a
//! dynamic program over the lattice by layers: for each node `v` and each
//! count `j`, the best (total length, frequency key) of a path from `v` to
//! the end vertex using exactly `j` nodes. The per-count optima are then
//! compared as exact rationals.
//!
//! Those tables double as exact completion bounds for a best-first search,
//! which yields complete paths in non-increasing rank order; this is what
//! produces the top-`k` list.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::index::ChunkIndex;
use crate::lattice::{Lattice, LatticeNode};
use crate::lexicon::Phone;
use crate::{Mode, OpCounter};

/// Exact score; ties such as 5/8 vs 5/8 compare equal.
pub type Score = Ratio<u64>;

/// How chunk frequencies break ties between equally scored paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Sum of chunk frequencies along the path; larger wins.
    #[default]
    FreqSum,
    /// Frequency of the rarest chunk on the path; larger wins.
    FreqMin,
    None,
}

impl TieBreak {
    pub fn name(self) -> &'static str {
        match self {
            TieBreak::FreqSum => "freq_sum",
            TieBreak::FreqMin => "freq_min",
            TieBreak::None => "none",
        }
    }

    fn seed(self, freq: u64) -> u64 {
        match self {
            TieBreak::FreqSum | TieBreak::FreqMin => freq,
            TieBreak::None => 0,
        }
    }

    fn combine(self, a: u64, b: u64) -> u64 {
        match self {
            TieBreak::FreqSum => a.saturating_add(b),
            TieBreak::FreqMin => a.min(b),
            TieBreak::None => 0,
        }
    }
}

impl std::str::FromStr for TieBreak {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "freq_sum" | "sum" => Ok(TieBreak::FreqSum),
            "freq_min" | "min" => Ok(TieBreak::FreqMin),
            "none" => Ok(TieBreak::None),
            other => Err(format!("unknown tie-break '{other}' (expected freq_sum, freq_min or none)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankingPolicy {
    pub mode: Mode,
    pub tie_break: TieBreak,
    /// Number of distinct pronunciations to return (at least 1).
    pub k: usize,
    /// Upper bound on search steps per word when collecting the top `k`.
    pub max_expansions: usize,
    /// Among single-chunk readings of a word, rank those that are whole
    /// lexicon entries ahead of readings borrowed from longer words.
    pub lexical_first: bool,
}

impl RankingPolicy {
    pub const DEFAULT_MAX_EXPANSIONS: usize = 200_000;

    pub fn new(mode: Mode) -> Self {
        RankingPolicy {
            mode,
            tie_break: TieBreak::FreqSum,
            k: 1,
            max_expansions: Self::DEFAULT_MAX_EXPANSIONS,
            lexical_first: true,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k.max(1);
        self
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn with_lexical_first(mut self, lexical_first: bool) -> Self {
        self.lexical_first = lexical_first;
        self
    }
}

/// One ranked pronunciation together with the path that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    /// Chunks along the path, left to right.
    pub chunks: Vec<LatticeNode>,
    /// Lattice node indices of `chunks`.
    pub nodes: Vec<usize>,
    /// Aligned phonemes, one per letter.
    pub merged: Vec<Phone>,
    /// `merged` without null phonemes.
    pub surface: Vec<Phone>,
    pub score: Score,
    pub chunk_count: usize,
    pub total_chunk_len: usize,
    pub freq_key: u64,
}

impl Candidate {
    /// Sum of the letter overlaps between consecutive chunks.
    pub fn total_overlap(&self) -> usize {
        self.chunks.windows(2).map(|w| w[0].end - w[1].start).sum()
    }
}

/// Exact score of a path of chunks over a word of `word_len` letters.
///
/// # Panics
///
/// Panics if `path` is empty or `word_len` is zero.
pub fn score_path(path: &[LatticeNode], word_len: usize) -> Score {
    assert!(!path.is_empty(), "cannot score an empty path");
    let total: usize = path.iter().map(LatticeNode::len).sum();
    length_score(total, path.len(), word_len)
}

fn length_score(total_len: usize, chunk_count: usize, word_len: usize) -> Score {
    Ratio::new(total_len as u64, (chunk_count * word_len) as u64)
}

/// Selection key: the mode's primary criterion, then the lexical weight of
/// single-chunk paths, then the frequency key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Rank {
    primary: Score,
    lexical: u64,
    freq: u64,
}

fn primary(mode: Mode, total_len: usize, chunk_count: usize, word_len: usize) -> Score {
    match mode {
        // With two chunks the score is monotone in the overlap, so this also
        // favours the largest head/tail overlap.
        Mode::Smpa | Mode::HeadTail => length_score(total_len, chunk_count, word_len),
        // Fewest chunks wins.
        Mode::Overlap1 => Ratio::new(1, chunk_count as u64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Best {
    total: usize,
    freq: u64,
}

/// `layers[j][v]`: best key of a path from `v` to the end vertex visiting
/// exactly `j + 1` nodes (including `v`).
struct Layers {
    layers: Vec<Vec<Option<Best>>>,
}

impl Layers {
    fn compute(lattice: &Lattice, tie: TieBreak, ops: &mut OpCounter) -> Self {
        let nodes = lattice.nodes();
        let first: Vec<Option<Best>> = (0..nodes.len())
            .map(|v| {
                lattice.is_final(v).then(|| Best {
                    total: nodes[v].len(),
                    freq: tie.seed(nodes[v].freq),
                })
            })
            .collect();
        let mut layers = vec![first];
        // Every arc strictly advances the start position, so no path has more
        // nodes than the word has letters.
        while layers.len() < lattice.word_len() {
            let prev = layers.last().unwrap();
            let mut next = vec![None; nodes.len()];
            let mut any = false;
            for arc in lattice.arcs() {
                ops.dp_updates += 1;
                if let Some(b) = prev[arc.to] {
                    let v = &nodes[arc.from];
                    let cand = Best {
                        total: b.total + v.len(),
                        freq: tie.combine(tie.seed(v.freq), b.freq),
                    };
                    let slot: &mut Option<Best> = &mut next[arc.from];
                    if slot.is_none_or(|s| cand > s) {
                        *slot = Some(cand);
                    }
                    any = true;
                }
            }
            if !any {
                break;
            }
            layers.push(next);
        }
        Layers { layers }
    }

    fn get(&self, remaining: usize, node: usize) -> Option<Best> {
        self.layers.get(remaining - 1).and_then(|l| l[node])
    }
}

/// Best mean-chunk-length score over all start-to-end paths, from the layered
/// dynamic program alone; `None` when the lattice has no path.
pub fn optimal_score(lattice: &Lattice) -> Option<Score> {
    let mut ops = OpCounter::default();
    let layers = Layers::compute(lattice, TieBreak::None, &mut ops);
    let n = lattice.word_len();
    layers
        .layers
        .iter()
        .enumerate()
        .filter_map(|(j, layer)| {
            lattice
                .initial_nodes()
                .filter_map(|v| layer[v])
                .map(|b| b.total)
                .max()
                .map(|total| length_score(total, j + 1, n))
        })
        .max()
}

#[derive(Debug, PartialEq, Eq)]
struct Item {
    rank: Rank,
    seq: Reverse<u64>,
    count: usize,
    depth: usize,
    node: usize,
    prefix_total: usize,
    prefix_freq: Option<u64>,
    parent: Option<u32>,
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.rank, self.seq).cmp(&(other.rank, other.seq))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Ranks the start-to-end paths of `lattice` and returns up to `policy.k`
/// candidates with distinct surface pronunciations, best first.
///
/// Order: the mode's criterion (length score for `Smpa`/`HeadTail`, fewest
/// chunks for `Overlap1`), then the frequency key, then the surface string.
/// An empty result means the word cannot be pronounced.
pub fn best_candidates(lattice: &Lattice, policy: &RankingPolicy) -> Vec<Candidate> {
    best_candidates_counted(lattice, policy, &mut OpCounter::default())
}

pub fn best_candidates_counted(lattice: &Lattice, policy: &RankingPolicy, ops: &mut OpCounter) -> Vec<Candidate> {
    let n = lattice.word_len();
    let nodes = lattice.nodes();
    let tie = policy.tie_break;
    let k = policy.k.max(1);
    if n == 0 || nodes.is_empty() {
        return Vec::new();
    }
    let layers = Layers::compute(lattice, tie, ops);

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for (j, layer) in layers.layers.iter().enumerate() {
        let count = j + 1;
        for v in lattice.initial_nodes() {
            if let Some(b) = layer[v] {
                heap.push(Item {
                    rank: Rank {
                        primary: primary(policy.mode, b.total, count, n),
                        lexical: if count == 1 && policy.lexical_first { nodes[v].words } else { 0 },
                        freq: b.freq,
                    },
                    seq: Reverse(seq),
                    count,
                    depth: 0,
                    node: v,
                    prefix_total: 0,
                    prefix_freq: None,
                    parent: None,
                });
                seq += 1;
            }
        }
    }

    // Arena of path prefixes: (node, parent link).
    let mut arena: Vec<(usize, Option<u32>)> = Vec::new();
    let mut results: Vec<Candidate> = Vec::new();
    let mut seen: HashSet<Vec<Phone>> = HashSet::new();
    let mut group: Vec<Candidate> = Vec::new();
    let mut group_rank: Option<Rank> = None;
    let mut steps = 0usize;

    let flush = |group: &mut Vec<Candidate>, results: &mut Vec<Candidate>, seen: &mut HashSet<Vec<Phone>>| {
        group.sort_by_cached_key(|c| (lattice.collation_key(&c.surface), lattice.collation_key(&c.merged), c.nodes.clone()));
        for c in group.drain(..) {
            if results.len() < k && seen.insert(c.surface.clone()) {
                results.push(c);
            }
        }
    };

    while let Some(item) = heap.pop() {
        steps += 1;
        ops.search_steps += 1;
        if group_rank.is_some_and(|g| item.rank < g) {
            flush(&mut group, &mut results, &mut seen);
            group_rank = None;
            if results.len() >= k {
                break;
            }
        }
        if steps > policy.max_expansions {
            break;
        }
        let remaining = item.count - item.depth;
        let v = &nodes[item.node];
        if remaining == 1 {
            let mut path = vec![item.node];
            let mut link = item.parent;
            while let Some(id) = link {
                let (node, parent) = arena[id as usize];
                path.push(node);
                link = parent;
            }
            path.reverse();
            let candidate = make_candidate(lattice, path, tie);
            debug_assert_eq!(
                Rank {
                    primary: primary(policy.mode, candidate.total_chunk_len, candidate.chunk_count, n),
                    lexical: if candidate.chunk_count == 1 && policy.lexical_first { candidate.chunks[0].words } else { 0 },
                    freq: candidate.freq_key
                },
                item.rank
            );
            group_rank = Some(item.rank);
            group.push(candidate);
            continue;
        }
        let id = arena.len() as u32;
        arena.push((item.node, item.parent));
        let prefix_total = item.prefix_total + v.len();
        let seed = tie.seed(v.freq);
        let joined = item.prefix_freq.map_or(seed, |f| tie.combine(f, seed));
        let prefix_freq = Some(joined);
        for arc in lattice.out_arcs(item.node) {
            if let Some(b) = layers.get(remaining - 1, arc.to) {
                let total = prefix_total + b.total;
                let freq = tie.combine(joined, b.freq);
                heap.push(Item {
                    rank: Rank {
                        primary: primary(policy.mode, total, item.count, n),
                        lexical: 0,
                        freq,
                    },
                    seq: Reverse(seq),
                    count: item.count,
                    depth: item.depth + 1,
                    node: arc.to,
                    prefix_total,
                    prefix_freq,
                    parent: Some(id),
                });
                seq += 1;
            }
        }
    }
    flush(&mut group, &mut results, &mut seen);
    results
}

fn make_candidate(lattice: &Lattice, path: Vec<usize>, tie: TieBreak) -> Candidate {
    let merged = lattice
        .merge_path_phonemes(&path)
        .unwrap_or_else(|e| panic!("lattice produced an inconsistent path {path:?}: {e}"));
    let chunks: Vec<LatticeNode> = path.iter().map(|&i| lattice.nodes()[i].clone()).collect();
    let surface = crate::lexicon::strip_nulls(&merged, Phone::NULL);
    let freq_key = chunks
        .iter()
        .map(|c| tie.seed(c.freq))
        .reduce(|a, b| tie.combine(a, b))
        .unwrap_or(0);
    Candidate {
        score: score_path(&chunks, lattice.word_len()),
        chunk_count: chunks.len(),
        total_chunk_len: chunks.iter().map(LatticeNode::len).sum(),
        nodes: path,
        chunks,
        merged,
        surface,
        freq_key,
    }
}

/// Matches `word` against `index` and builds its lattice for `mode`.
pub fn word_lattice(word: &[char], index: &ChunkIndex, mode: Mode) -> Lattice {
    word_lattice_counted(word, index, mode, &mut OpCounter::default())
}

pub fn word_lattice_counted(word: &[char], index: &ChunkIndex, mode: Mode, ops: &mut OpCounter) -> Lattice {
    let matches = index.match_word_counted(word, ops);
    Lattice::build_counted(word, matches, mode, ops).with_collation(index.phones())
}

/// Full ranked list (up to `policy.k`) for one word.
pub fn transcribe_all(word: &str, index: &ChunkIndex, policy: &RankingPolicy) -> Vec<Candidate> {
    let letters: Vec<char> = word.chars().collect();
    transcribe_counted(&letters, index, policy, &mut OpCounter::default())
}

pub fn transcribe_counted(
    word: &[char],
    index: &ChunkIndex,
    policy: &RankingPolicy,
    ops: &mut OpCounter,
) -> Vec<Candidate> {
    let lattice = word_lattice_counted(word, index, policy.mode, ops);
    best_candidates_counted(&lattice, policy, ops)
}

/// Best pronunciation of `word`, or `None` (silence).
pub fn transcribe(word: &str, index: &ChunkIndex, policy: &RankingPolicy) -> Option<Candidate> {
    let policy = RankingPolicy { k: 1, ..*policy };
    transcribe_all(word, index, &policy).into_iter().next()
}

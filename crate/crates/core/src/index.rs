//! Chunk extraction and substring lookup.
//!
//! Every contiguous aligned substring of every lexicon entry is a chunk.
//! Chunks are stored in a character trie keyed by their graphemic side, so
//! looking up a substring costs one trie step per letter, and scanning all
//! substrings of a query word shares the walk for substrings with a common
//! start.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{AlignedEntry, Lexicon, Phone, PhoneInventory};
use crate::OpCounter;

const CACHE_FORMAT: &str = "chunkg2p-index";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfig {
    /// Shortest chunk, in letters, that may be matched inside an unknown word.
    pub min_chunk_len: usize,
    /// Weight each occurrence by the entry's corpus frequency instead of 1.
    pub weight_by_word_freq: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            min_chunk_len: 2,
            weight_by_word_freq: false,
        }
    }
}

/// An aligned (graphemic, phonemic) substring pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Chunk {
    pub graphemic: Vec<char>,
    pub phonemic: Vec<Phone>,
    pub freq: u64,
}

/// Every aligned substring of `entry` of length at least `min_chunk_len`,
/// one chunk per occurrence. An entry shorter than `min_chunk_len` yields its
/// whole-word chunk only.
pub fn extract_chunks(entry: &AlignedEntry, min_chunk_len: usize) -> Vec<Chunk> {
    let n = entry.len();
    if n == 0 {
        return Vec::new();
    }
    if n < min_chunk_len {
        return vec![Chunk {
            graphemic: entry.graphemes.clone(),
            phonemic: entry.phonemes.clone(),
            freq: 1,
        }];
    }
    let min = min_chunk_len.max(1);
    let mut out = Vec::new();
    for start in 0..n {
        for end in (start + min)..=n {
            out.push(Chunk {
                graphemic: entry.graphemes[start..end].to_vec(),
                phonemic: entry.phonemes[start..end].to_vec(),
                freq: 1,
            });
        }
    }
    out
}

/// One phonemic reading of an indexed graphemic substring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub phonemic: Box<[Phone]>,
    pub freq: u64,
    /// Weight of the lexicon entries spelled and pronounced exactly so.
    pub words: u64,
}

/// A chunk occurrence placed on a query word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Match {
    pub start: usize,
    pub end: usize,
    pub phonemic: Vec<Phone>,
    pub freq: u64,
    pub words: u64,
}

impl Match {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: Vec<(char, u32)>,
    realizations: Vec<Realization>,
}

impl TrieNode {
    fn child(&self, c: char) -> Option<u32> {
        self.children
            .binary_search_by_key(&c, |&(k, _)| k)
            .ok()
            .map(|i| self.children[i].1)
    }
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot index an empty lexicon")]
    EmptyLexicon,
    #[error("index cache I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed index cache: {0}")]
    Format(#[from] serde_json::Error),
    #[error("index cache is not a {CACHE_FORMAT} v{CACHE_VERSION} file (found {format} v{version})")]
    Version { format: String, version: u32 },
    #[error("corrupt index cache: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct ChunkIndex {
    config: IndexConfig,
    phones: PhoneInventory,
    graphemes: BTreeSet<char>,
    source_hash: String,
    entry_count: usize,
    nodes: Vec<TrieNode>,
}

impl ChunkIndex {
    pub fn build(lexicon: &Lexicon, config: IndexConfig) -> Result<Self, IndexError> {
        if lexicon.is_empty() {
            return Err(IndexError::EmptyLexicon);
        }
        let mut index = ChunkIndex {
            config,
            phones: lexicon.phones().clone(),
            graphemes: lexicon.grapheme_alphabet().clone(),
            source_hash: lexicon.content_hash(),
            entry_count: lexicon.len(),
            nodes: vec![TrieNode::default()],
        };
        let min = config.min_chunk_len.max(1);
        for entry in lexicon.entries() {
            let weight = if config.weight_by_word_freq {
                entry.freq().max(1)
            } else {
                1
            };
            let n = entry.len();
            if n < min {
                index.insert(&entry.graphemes, &entry.phonemes, weight, weight);
                continue;
            }
            for start in 0..n {
                let mut node = 0u32;
                for end in (start + 1)..=n {
                    node = index.child_or_insert(node, entry.graphemes[end - 1]);
                    if end - start >= min {
                        let words = if start == 0 && end == n { weight } else { 0 };
                        index.add_realization(node, &entry.phonemes[start..end], weight, words);
                    }
                }
            }
        }
        index.canonicalize();
        Ok(index)
    }

    fn child_or_insert(&mut self, node: u32, c: char) -> u32 {
        let n = &self.nodes[node as usize];
        match n.children.binary_search_by_key(&c, |&(k, _)| k) {
            Ok(i) => n.children[i].1,
            Err(i) => {
                let id = self.nodes.len() as u32;
                self.nodes.push(TrieNode::default());
                self.nodes[node as usize].children.insert(i, (c, id));
                id
            }
        }
    }

    fn add_realization(&mut self, node: u32, phonemic: &[Phone], weight: u64, words: u64) {
        let reals = &mut self.nodes[node as usize].realizations;
        match reals.iter_mut().find(|r| &*r.phonemic == phonemic) {
            Some(r) => {
                r.freq += weight;
                r.words += words;
            }
            None => reals.push(Realization {
                phonemic: phonemic.into(),
                freq: weight,
                words,
            }),
        }
    }

    fn insert(&mut self, graphemic: &[char], phonemic: &[Phone], weight: u64, words: u64) {
        let mut node = 0;
        for &c in graphemic {
            node = self.child_or_insert(node, c);
        }
        self.add_realization(node, phonemic, weight, words);
    }

    fn canonicalize(&mut self) {
        for node in &mut self.nodes {
            node.realizations.sort_by(|a, b| a.phonemic.cmp(&b.phonemic));
        }
    }

    pub fn config(&self) -> IndexConfig {
        self.config
    }

    pub fn min_chunk_len(&self) -> usize {
        self.config.min_chunk_len.max(1)
    }

    pub fn phones(&self) -> &PhoneInventory {
        &self.phones
    }

    pub fn grapheme_alphabet(&self) -> &BTreeSet<char> {
        &self.graphemes
    }

    pub fn source_hash(&self) -> &str {
        &self.source_hash
    }

    pub fn entry_count(&self) -> usize {
        self.entry_count
    }

    /// Realizations of an exact graphemic substring.
    pub fn lookup(&self, graphemic: &[char]) -> &[Realization] {
        self.lookup_counted(graphemic, &mut OpCounter::default())
    }

    pub fn lookup_counted(&self, graphemic: &[char], ops: &mut OpCounter) -> &[Realization] {
        let mut node = 0u32;
        for &c in graphemic {
            ops.trie_steps += 1;
            match self.nodes[node as usize].child(c) {
                Some(next) => node = next,
                None => return &[],
            }
        }
        &self.nodes[node as usize].realizations
    }

    /// Every indexed chunk occurring in `word`, ordered by (start, end, phonemes).
    pub fn match_word(&self, word: &[char]) -> Vec<Match> {
        self.match_word_counted(word, &mut OpCounter::default())
    }

    pub fn match_word_counted(&self, word: &[char], ops: &mut OpCounter) -> Vec<Match> {
        let n = word.len();
        let min = self.min_chunk_len();
        let mut out = Vec::new();
        for start in 0..n {
            let mut node = 0u32;
            for end in (start + 1)..=n {
                ops.trie_steps += 1;
                match self.nodes[node as usize].child(word[end - 1]) {
                    Some(next) => node = next,
                    None => break,
                }
                // Chunks below the minimum length only exist as whole short
                // words and only match a query spelled identically.
                let len = end - start;
                if len >= min || (start == 0 && end == n) {
                    for r in &self.nodes[node as usize].realizations {
                        out.push(Match {
                            start,
                            end,
                            phonemic: r.phonemic.to_vec(),
                            freq: r.freq,
                            words: r.words,
                        });
                    }
                }
            }
        }
        out
    }

    /// All distinct chunks with aggregated frequencies, sorted.
    pub fn chunks(&self) -> Vec<Chunk> {
        self.chunks_with_words().into_iter().map(|(c, _)| c).collect()
    }

    fn chunks_with_words(&self) -> Vec<(Chunk, u64)> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.collect(0, &mut prefix, &mut out);
        out
    }

    fn collect(&self, node: u32, prefix: &mut Vec<char>, out: &mut Vec<(Chunk, u64)>) {
        let n = &self.nodes[node as usize];
        for r in &n.realizations {
            let chunk = Chunk {
                graphemic: prefix.clone(),
                phonemic: r.phonemic.to_vec(),
                freq: r.freq,
            };
            out.push((chunk, r.words));
        }
        for &(c, child) in &n.children {
            prefix.push(c);
            self.collect(child, prefix, out);
            prefix.pop();
        }
    }

    /// Number of distinct (graphemic, phonemic) pairs.
    pub fn chunk_count(&self) -> usize {
        self.nodes.iter().map(|n| n.realizations.len()).sum()
    }

    /// Number of distinct graphemic substrings with at least one realization.
    pub fn graphemic_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.realizations.is_empty()).count()
    }

    /// Sum of chunk frequencies.
    pub fn occurrence_count(&self) -> u64 {
        self.nodes
            .iter()
            .flat_map(|n| n.realizations.iter())
            .map(|r| r.freq)
            .sum()
    }

    /// Largest number of phonemic realizations of one graphemic substring.
    pub fn max_realizations(&self) -> usize {
        self.nodes.iter().map(|n| n.realizations.len()).max().unwrap_or(0)
    }

    pub fn write_cache<W: Write>(&self, writer: W) -> Result<(), IndexError> {
        let cache = IndexCache {
            format: CACHE_FORMAT.to_string(),
            version: CACHE_VERSION,
            source_hash: self.source_hash.clone(),
            entry_count: self.entry_count,
            config: self.config,
            multichar: self.phones.is_multichar(),
            phonemes: self.phones.symbols().to_vec(),
            graphemes: self.graphemes.iter().collect(),
            chunks: self
                .chunks_with_words()
                .into_iter()
                .map(|(c, words)| CachedChunk(c.graphemic.into_iter().collect(), c.phonemic, c.freq, words))
                .collect(),
        };
        serde_json::to_writer(writer, &cache)?;
        Ok(())
    }

    pub fn read_cache<R: Read>(reader: R) -> Result<Self, IndexError> {
        let cache: IndexCache = serde_json::from_reader(reader)?;
        if cache.format != CACHE_FORMAT || cache.version != CACHE_VERSION {
            return Err(IndexError::Version {
                format: cache.format,
                version: cache.version,
            });
        }
        let phones = PhoneInventory::from_symbols(cache.phonemes, cache.multichar)
            .ok_or_else(|| IndexError::Corrupt("phoneme table is empty or has duplicates".into()))?;
        let mut index = ChunkIndex {
            config: cache.config,
            phones,
            graphemes: cache.graphemes.chars().collect(),
            source_hash: cache.source_hash,
            entry_count: cache.entry_count,
            nodes: vec![TrieNode::default()],
        };
        for CachedChunk(g, p, freq, words) in cache.chunks {
            let g: Vec<char> = g.chars().collect();
            if g.len() != p.len() || g.is_empty() || freq == 0 || words > freq {
                return Err(IndexError::Corrupt(format!(
                    "chunk '{}' is misaligned or has zero frequency",
                    g.iter().collect::<String>()
                )));
            }
            if p.iter().any(|ph| ph.index() >= index.phones.len()) {
                return Err(IndexError::Corrupt("phoneme id out of range".into()));
            }
            index.insert(&g, &p, freq, words);
        }
        index.canonicalize();
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_cache(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        Self::read_cache(BufReader::new(File::open(path)?))
    }

    /// Loads the cache at `path` if it was built from this lexicon with the
    /// same configuration; otherwise builds a fresh index and rewrites the cache.
    pub fn load_or_build(
        path: &Path,
        lexicon: &Lexicon,
        config: IndexConfig,
    ) -> Result<(Self, CacheStatus), IndexError> {
        let reason = match Self::load(path) {
            Ok(idx) if idx.source_hash == lexicon.content_hash() && idx.config == config => {
                return Ok((idx, CacheStatus::Loaded));
            }
            Ok(idx) if idx.config != config => "configuration changed".to_string(),
            Ok(_) => "lexicon content changed".to_string(),
            Err(e) => e.to_string(),
        };
        let idx = Self::build(lexicon, config)?;
        idx.save(path)?;
        Ok((idx, CacheStatus::Rebuilt(reason)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheStatus {
    Loaded,
    Rebuilt(String),
}

#[derive(Serialize, Deserialize)]
struct CachedChunk(String, Vec<Phone>, u64, u64);

#[derive(Serialize, Deserialize)]
struct IndexCache {
    format: String,
    version: u32,
    source_hash: String,
    entry_count: usize,
    config: IndexConfig,
    multichar: bool,
    phonemes: Vec<String>,
    graphemes: String,
    chunks: Vec<CachedChunk>,
}

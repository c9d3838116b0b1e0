//! Pronunciation lattices.
//!
//! Nodes are chunk matches on the unknown word. An arc joins `a` to `b` when
//! the two spans strictly overlap (`a.start < b.start < a.end < b.end`) and
//! their phonemes agree on every shared letter position. The virtual start
//! vertex links to every node covering a prefix of the word and every node
//! covering a suffix links to the virtual end vertex, so each start-to-end
//! path spells out one candidate pronunciation.

use std::fmt::Write;
use std::ops::Range;

use thiserror::Error;

use crate::index::Match;
use crate::lexicon::{Phone, PhoneInventory};
use crate::{Mode, OpCounter};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeNode {
    pub start: usize,
    pub end: usize,
    pub phonemic: Vec<Phone>,
    pub freq: u64,
    /// Lexicon entries matching the chunk in full.
    pub words: u64,
}

impl LatticeNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

impl From<Match> for LatticeNode {
    fn from(m: Match) -> Self {
        LatticeNode {
            start: m.start,
            end: m.end,
            phonemic: m.phonemic,
            freq: m.freq,
            words: m.words,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeArc {
    pub from: usize,
    pub to: usize,
    /// Number of shared letter positions.
    pub overlap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    Start,
    End,
    Node(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("empty path")]
    EmptyPath,
    #[error("path does not cover the word: {0}")]
    Coverage(String),
    #[error("chunks {0} and {1} do not strictly overlap")]
    NotOverlapping(usize, usize),
    #[error("chunks {0} and {1} disagree at letter position {2}")]
    Disagreement(usize, usize, usize),
    #[error("node {0} is out of range")]
    NoSuchNode(usize),
}

#[derive(Debug, Clone)]
pub struct Lattice {
    word: Vec<char>,
    mode: Mode,
    nodes: Vec<LatticeNode>,
    arcs: Vec<LatticeArc>,
    out: Vec<Range<usize>>,
    ops: OpCounter,
    collation: Vec<u32>,
}

impl Lattice {
    pub fn build(word: &[char], matches: Vec<Match>, mode: Mode) -> Self {
        let mut ops = OpCounter::default();
        Self::build_counted(word, matches, mode, &mut ops)
    }

    pub fn build_counted(word: &[char], matches: Vec<Match>, mode: Mode, ops: &mut OpCounter) -> Self {
        let n = word.len();
        let mut nodes: Vec<LatticeNode> = matches
            .into_iter()
            .filter(|m| {
                let ok = m.start < m.end && m.end <= n && m.phonemic.len() == m.end - m.start;
                debug_assert!(ok, "match {m:?} does not fit a word of length {n}");
                ok
            })
            .map(LatticeNode::from)
            .collect();
        nodes.sort_by(|a, b| (a.start, a.end, &a.phonemic).cmp(&(b.start, b.end, &b.phonemic)));
        nodes.dedup_by(|b, a| a.start == b.start && a.end == b.end && a.phonemic == b.phonemic);

        let mut by_start = vec![0..0; n + 1];
        let mut i = 0;
        for (s, slot) in by_start.iter_mut().enumerate() {
            let first = i;
            while i < nodes.len() && nodes[i].start == s {
                i += 1;
            }
            *slot = first..i;
        }

        let mut arcs = Vec::new();
        let mut out = Vec::with_capacity(nodes.len());
        let before = *ops;
        for (ai, a) in nodes.iter().enumerate() {
            let first_arc = arcs.len();
            if mode == Mode::HeadTail && a.start != 0 {
                out.push(first_arc..first_arc);
                continue;
            }
            let starts = match mode {
                Mode::Overlap1 => a.end.saturating_sub(1).max(a.start + 1)..a.end,
                _ => (a.start + 1)..a.end,
            };
            for s in starts {
                for bi in by_start[s].clone() {
                    let b = &nodes[bi];
                    ops.arc_tests += 1;
                    if b.end <= a.end || (mode == Mode::HeadTail && b.end != n) {
                        continue;
                    }
                    let overlap = a.end - s;
                    if agree(&a.phonemic[s - a.start..], &b.phonemic[..overlap], ops) {
                        arcs.push(LatticeArc {
                            from: ai,
                            to: bi,
                            overlap,
                        });
                    }
                }
            }
            out.push(first_arc..arcs.len());
        }
        Lattice {
            word: word.to_vec(),
            mode,
            nodes,
            arcs,
            out,
            ops: OpCounter {
                arc_tests: ops.arc_tests - before.arc_tests,
                symbol_compares: ops.symbol_compares - before.symbol_compares,
                ..OpCounter::default()
            },
            collation: Vec::new(),
        }
    }

    /// Orders phonemes by symbol text, instead of by id, wherever
    /// pronunciations need a canonical order.
    pub fn with_collation(mut self, phones: &PhoneInventory) -> Self {
        self.collation = phones.collation();
        self
    }

    /// Sort key of a phoneme sequence under the lattice's collation.
    pub fn collation_key(&self, phonemes: &[Phone]) -> Vec<u32> {
        phonemes
            .iter()
            .map(|p| self.collation.get(p.index()).copied().unwrap_or(p.index() as u32))
            .collect()
    }

    pub fn word(&self) -> &[char] {
        &self.word
    }

    pub fn word_len(&self) -> usize {
        self.word.len()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn nodes(&self) -> &[LatticeNode] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[LatticeArc] {
        &self.arcs
    }

    pub fn out_arcs(&self, node: usize) -> &[LatticeArc] {
        &self.arcs[self.out[node].clone()]
    }

    /// Operations spent building the arc set.
    pub fn build_ops(&self) -> OpCounter {
        self.ops
    }

    pub fn is_initial(&self, node: usize) -> bool {
        self.nodes[node].start == 0
    }

    pub fn is_final(&self, node: usize) -> bool {
        self.nodes[node].end == self.word.len()
    }

    pub fn initial_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.is_initial(i))
    }

    pub fn final_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.is_final(i))
    }

    /// All edges including those incident to the virtual start and end vertices.
    pub fn edges(&self) -> Vec<(Vertex, Vertex, Option<usize>)> {
        let mut edges: Vec<(Vertex, Vertex, Option<usize>)> =
            self.initial_nodes().map(|i| (Vertex::Start, Vertex::Node(i), None)).collect();
        edges.extend(
            self.arcs
                .iter()
                .map(|a| (Vertex::Node(a.from), Vertex::Node(a.to), Some(a.overlap))),
        );
        edges.extend(self.final_nodes().map(|i| (Vertex::Node(i), Vertex::End, None)));
        edges
    }

    /// Whether at least one start-to-end path exists.
    pub fn has_path(&self) -> bool {
        // Nodes are in topological order (arcs strictly increase the start).
        let mut reach = vec![false; self.nodes.len()];
        for i in 0..self.nodes.len() {
            reach[i] |= self.is_initial(i);
            if !reach[i] {
                continue;
            }
            if self.is_final(i) {
                return true;
            }
            for a in self.out_arcs(i) {
                reach[a.to] = true;
            }
        }
        false
    }

    /// Up to `limit` start-to-end paths, as node index sequences, in
    /// depth-first order over initial nodes and arcs.
    pub fn enumerate_paths(&self, limit: usize) -> Vec<Vec<usize>> {
        let mut paths = Vec::new();
        if limit == 0 {
            return paths;
        }
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in self.initial_nodes() {
            stack.push((root, 0));
            while let Some(&(node, next)) = stack.last() {
                if next == 0 && self.is_final(node) {
                    paths.push(stack.iter().map(|&(v, _)| v).collect());
                    if paths.len() == limit {
                        return paths;
                    }
                }
                let outs = self.out_arcs(node);
                if next < outs.len() {
                    let top = stack.len() - 1;
                    stack[top].1 += 1;
                    stack.push((outs[next].to, 0));
                } else {
                    stack.pop();
                }
            }
        }
        paths
    }

    /// Positional merge of the phonemes along a path.
    pub fn merge_path_phonemes(&self, path: &[usize]) -> Result<Vec<Phone>, LatticeError> {
        let mut chunks = Vec::with_capacity(path.len());
        for &i in path {
            chunks.push(self.nodes.get(i).ok_or(LatticeError::NoSuchNode(i))?);
        }
        merge_chunks(self.word.len(), &chunks)
    }

    /// Graphviz rendering; nodes are labelled `letters/phonemes`, arcs by overlap size.
    pub fn export_dot(&self, phones: &PhoneInventory) -> String {
        let mut dot = String::new();
        let word: String = self.word.iter().collect();
        writeln!(dot, "digraph lattice {{").unwrap();
        writeln!(dot, "  label=\"{} ({})\";", escape(&word), self.mode).unwrap();
        writeln!(dot, "  rankdir=LR;").unwrap();
        writeln!(dot, "  S [shape=circle, label=\"S\"];").unwrap();
        writeln!(dot, "  E [shape=doublecircle, label=\"E\"];").unwrap();
        for (i, node) in self.nodes.iter().enumerate() {
            let letters: String = self.word[node.start..node.end].iter().collect();
            let label = format!("{}/{}", letters, phones.render(&node.phonemic));
            writeln!(
                dot,
                "  n{i} [shape=box, label=\"{}\", tooltip=\"[{},{}) freq {}\"];",
                escape(&label),
                node.start,
                node.end,
                node.freq
            )
            .unwrap();
        }
        for (from, to, overlap) in self.edges() {
            let name = |v: Vertex| match v {
                Vertex::Start => "S".to_string(),
                Vertex::End => "E".to_string(),
                Vertex::Node(i) => format!("n{i}"),
            };
            match overlap {
                Some(o) => writeln!(dot, "  {} -> {} [label=\"{o}\"];", name(from), name(to)).unwrap(),
                None => writeln!(dot, "  {} -> {};", name(from), name(to)).unwrap(),
            }
        }
        dot.push_str("}\n");
        dot
    }
}

fn agree(a: &[Phone], b: &[Phone], ops: &mut OpCounter) -> bool {
    for (x, y) in a.iter().zip(b) {
        ops.symbol_compares += 1;
        if x != y {
            return false;
        }
    }
    true
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Merges a chain of strictly overlapping chunks into one aligned phoneme
/// string covering `word_len` letters.
pub fn merge_chunks(word_len: usize, chunks: &[&LatticeNode]) -> Result<Vec<Phone>, LatticeError> {
    let first = chunks.first().ok_or(LatticeError::EmptyPath)?;
    let last = chunks.last().unwrap();
    if first.start != 0 {
        return Err(LatticeError::Coverage(format!("first chunk starts at {}", first.start)));
    }
    if last.end != word_len {
        return Err(LatticeError::Coverage(format!(
            "last chunk ends at {} of {word_len}",
            last.end
        )));
    }
    let mut merged = first.phonemic.clone();
    for (k, pair) in chunks.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if !(a.start < b.start && b.start < a.end && a.end < b.end) {
            return Err(LatticeError::NotOverlapping(k, k + 1));
        }
        for pos in b.start..a.end {
            if merged[pos] != b.phonemic[pos - b.start] {
                return Err(LatticeError::Disagreement(k, k + 1, pos));
            }
        }
        merged.extend_from_slice(&b.phonemic[a.end - b.start..]);
    }
    debug_assert_eq!(merged.len(), word_len);
    Ok(merged)
}

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chunkg2p::{parse_lexicon_str, Lexicon, LexiconFormat};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

pub const HOPE_LEXICON: &str = "hot\th@t\nhose\thOz-\nslope\tslOp-\nslop\tsl@p\nshop\tS-@p\n";

pub fn parse(text: &str) -> Lexicon {
    parse_lexicon_str(text, &LexiconFormat::default()).unwrap().lexicon
}

/// Lexicon entries as plain (letters, aligned phonemes) strings, one
/// phoneme symbol per char and `-` for silence.
#[derive(Debug, Clone)]
pub struct RawEntry {
    pub letters: Vec<char>,
    pub phonemes: Vec<char>,
}

pub fn raw_entries(text: &str) -> Vec<RawEntry> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (w, p) = l.split_once('\t').unwrap();
            RawEntry {
                letters: w.chars().collect(),
                phonemes: p.chars().collect(),
            }
        })
        .collect()
}

pub fn to_tsv(entries: &[RawEntry]) -> String {
    entries
        .iter()
        .map(|e| {
            format!(
                "{}\t{}\n",
                e.letters.iter().collect::<String>(),
                e.phonemes.iter().collect::<String>()
            )
        })
        .collect()
}

/// Result of enumerating every decomposition of a word into a chain of
/// strictly overlapping, phoneme-consistent chunk placements.
#[derive(Debug, Default)]
pub struct Decompositions {
    /// Surface pronunciations (nulls removed) with the best score reached.
    pub best_by_surface: BTreeMap<String, Ratio<u64>>,
    pub paths: usize,
}

impl Decompositions {
    pub fn optimal_score(&self) -> Option<Ratio<u64>> {
        self.best_by_surface.values().max().copied()
    }

    pub fn optimal_surfaces(&self) -> BTreeSet<String> {
        let best = self.optimal_score();
        self.best_by_surface
            .iter()
            .filter(|(_, s)| Some(**s) == best)
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn all_surfaces(&self) -> BTreeSet<String> {
        self.best_by_surface.keys().cloned().collect()
    }
}

/// Every distinct `(start, end, phonemes)` placement of a lexicon substring
/// of at least `min_len` letters on `word`, plus whole entries shorter than
/// that when they equal the whole word. Scans entries directly.
fn placements(entries: &[RawEntry], word: &[char], min_len: usize) -> BTreeSet<(usize, usize, Vec<char>)> {
    let n = word.len();
    let mut out = BTreeSet::new();
    for e in entries {
        let m = e.letters.len();
        for i in 0..m {
            for j in i + 1..=m {
                let len = j - i;
                let whole_short = len < min_len && i == 0 && j == m && len == n;
                if len < min_len && !whole_short {
                    continue;
                }
                for s in 0..n.saturating_sub(len - 1) {
                    if word[s..s + len] == e.letters[i..j] {
                        out.insert((s, s + len, e.phonemes[i..j].to_vec()));
                    }
                }
            }
        }
    }
    out
}

pub fn brute_force(entries: &[RawEntry], word: &[char], min_len: usize) -> Decompositions {
    let n = word.len();
    let places: Vec<(usize, usize, Vec<char>)> = placements(entries, word, min_len).into_iter().collect();
    let mut result = Decompositions::default();
    let mut chain: Vec<usize> = Vec::new();
    fn extend(
        places: &[(usize, usize, Vec<char>)],
        n: usize,
        chain: &mut Vec<usize>,
        out: &mut Decompositions,
    ) {
        let last = &places[*chain.last().unwrap()];
        if last.1 == n {
            let mut merged = vec!['?'; n];
            let mut total = 0u64;
            for &c in chain.iter() {
                let (s, e, ph) = &places[c];
                for (k, &p) in ph.iter().enumerate() {
                    merged[s + k] = p;
                }
                total += (e - s) as u64;
            }
            let surface: String = merged.into_iter().filter(|&c| c != '-').collect();
            let score = Ratio::new(total, (chain.len() * n) as u64);
            out.paths += 1;
            let slot = out.best_by_surface.entry(surface).or_insert(score);
            if score > *slot {
                *slot = score;
            }
            return;
        }
        for (i, next) in places.iter().enumerate() {
            let strict = last.0 < next.0 && next.0 < last.1 && last.1 < next.1;
            if !strict {
                continue;
            }
            // Every earlier chunk covering a shared position must agree.
            let consistent = chain.iter().all(|&c| {
                let (s, e, ph) = &places[c];
                (next.0.max(*s)..next.1.min(*e)).all(|p| ph[p - s] == next.2[p - next.0])
            });
            if consistent {
                chain.push(i);
                extend(places, n, chain, out);
                chain.pop();
            }
        }
    }
    for (i, p) in places.iter().enumerate() {
        if p.0 == 0 {
            chain.push(i);
            extend(&places, n, &mut chain, &mut result);
            chain.pop();
        }
    }
    result
}

/// Random micro lexicon over a small alphabet with consistent per-letter
/// phoneme choices plus occasional silences.
pub fn micro_instance<R: Rng>(rng: &mut R) -> (Vec<RawEntry>, Vec<char>) {
    let alphabet_size = rng.gen_range(2..=5);
    let letters: Vec<char> = ('a'..='e').take(alphabet_size).collect();
    let phones = ['A', 'B', 'C', 'D', 'E', '-'];
    let entry_count = rng.gen_range(1..=8);
    let mut entries = Vec::new();
    for _ in 0..entry_count {
        let len = rng.gen_range(1..=6);
        let word: Vec<char> = (0..len).map(|_| *letters.choose(rng).unwrap()).collect();
        let ph: Vec<char> = word
            .iter()
            .map(|&c| {
                if rng.gen_bool(0.2) {
                    *phones.choose(rng).unwrap()
                } else {
                    phones[(c as u8 - b'a') as usize]
                }
            })
            .collect();
        entries.push(RawEntry {
            letters: word,
            phonemes: ph,
        });
    }
    let query: Vec<char> = if rng.gen_bool(0.6) {
        // Splice a prefix piece and a suffix piece of two entries.
        let a = &entries.choose(rng).unwrap().letters;
        let b = &entries.choose(rng).unwrap().letters;
        let i = rng.gen_range(1..=a.len());
        let j = rng.gen_range(0..b.len());
        let mut q: Vec<char> = a[..i].iter().chain(&b[j..]).copied().collect();
        q.truncate(6);
        q
    } else {
        let query_len = rng.gen_range(1..=6);
        (0..query_len).map(|_| *letters.choose(rng).unwrap()).collect()
    };
    (entries, query)
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "v", "w", "ch", "sh", "th", "ph", "st", "tr",
    "pl", "br", "gr", "cl", "",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ee", "oo", "ea", "ai", "ou"];
const CODAS: &[&str] = &["", "", "n", "t", "r", "s", "l", "m", "ck", "nd", "st", "ng", "p", "d"];

/// Aligned pronunciation of a pseudo-English spelling under a small set of
/// context-dependent letter-to-sound rules.
pub fn pronounce(word: &str) -> String {
    let w: Vec<char> = word.chars().collect();
    let n = w.len();
    let vowel = |c: char| "aeiou".contains(c);
    let mut out: Vec<char> = Vec::with_capacity(n);
    let silent_e = n >= 3 && w[n - 1] == 'e' && !vowel(w[n - 2]) && vowel(w[n - 3]);
    let mut i = 0;
    while i < n {
        let c = w[i];
        let next = w.get(i + 1).copied();
        let pair = next.map(|d| (c, d));
        let digraph = match pair {
            Some(('c', 'h')) => Some('C'),
            Some(('s', 'h')) => Some('S'),
            Some(('t', 'h')) => Some('T'),
            Some(('p', 'h')) => Some('f'),
            Some(('c', 'k')) => Some('k'),
            Some(('n', 'g')) => Some('N'),
            Some(('e', 'e')) | Some(('e', 'a')) => Some('i'),
            Some(('o', 'o')) => Some('u'),
            Some(('a', 'i')) => Some('e'),
            Some(('o', 'u')) => Some('W'),
            Some((a, b)) if a == b && !vowel(a) => Some(a),
            _ => None,
        };
        if let Some(p) = digraph {
            out.push(p);
            out.push('-');
            i += 2;
            continue;
        }
        let p = if vowel(c) {
            if silent_e && i == n - 1 {
                '-'
            } else if silent_e && i == n - 3 {
                match c {
                    'a' => 'A',
                    'e' => 'i',
                    'i' => 'Y',
                    'o' => 'O',
                    _ => 'U',
                }
            } else {
                match c {
                    'a' => '@',
                    'e' => 'E',
                    'i' => 'I',
                    'o' => '0',
                    _ => 'V',
                }
            }
        } else if c == 'c' {
            if next.is_some_and(|d| "eiy".contains(d)) {
                's'
            } else {
                'k'
            }
        } else if c == 's' && i > 0 && vowel(w[i - 1]) && next.is_some_and(vowel) {
            'z'
        } else {
            c
        };
        out.push(p);
        i += 1;
    }
    out.into_iter().collect()
}

pub fn pseudo_word<R: Rng>(rng: &mut R, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(NUCLEI.choose(rng).unwrap());
        w.push_str(CODAS.choose(rng).unwrap());
    }
    if rng.gen_bool(0.25) && w.chars().last().is_some_and(|c| !"aeiou".contains(c)) {
        w.push('e');
    }
    w
}

/// `count` distinct pseudo-English words of one to four syllables with
/// their aligned pronunciations, as TSV.
pub fn synthetic_lexicon<R: Rng>(rng: &mut R, count: usize) -> String {
    let mut seen = BTreeSet::new();
    let mut text = String::new();
    while seen.len() < count {
        let syl = rng.gen_range(1..=4);
        let w = pseudo_word(rng, syl);
        if w.len() < 2 || !seen.insert(w.clone()) {
            continue;
        }
        text.push_str(&format!("{w}\t{}\n", pronounce(&w)));
    }
    text
}

/// A pseudo word of exactly `len` letters built from syllables.
pub fn pseudo_word_of_len<R: Rng>(rng: &mut R, len: usize) -> String {
    let mut w = String::new();
    while w.len() < len {
        w.push_str(&pseudo_word(rng, 1));
    }
    w.truncate(len);
    w
}

/// Ordinary least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

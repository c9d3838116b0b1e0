//! Aligned pronunciation lexicons.
//!
//! A lexicon entry pairs a spelling with a phoneme string of the same
//! length: every letter position carries exactly one phoneme symbol, the
//! null symbol standing for silent letters. Lexicons are read from a
//! tab-separated text format:
//!
//! ```text
//! #null=-
//! hose	hOz-
//! shop	S-@p	12
//! ```
//!
//! Recognised header lines (before the first entry) are `#null=<symbol>`,
//! `#multichar=true` (space-separated phoneme tokens), `#graphemes=<letters>`
//! and `#phonemes=<symbols>`. Any other line starting with `#` is a comment.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_NULL: &str = "-";

/// Interned phoneme symbol. Only meaningful together with the
/// [`PhoneInventory`] that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Phone(u32);

impl Phone {
    /// The null phoneme; every inventory assigns it the first slot.
    pub const NULL: Phone = Phone(0);

    pub fn from_index(index: u32) -> Phone {
        Phone(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Phoneme alphabet, including the null symbol (always `Phone(0)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneInventory {
    symbols: Vec<String>,
    lookup: HashMap<String, Phone>,
    multichar: bool,
}

impl PhoneInventory {
    pub fn new(null_symbol: &str, multichar: bool) -> Self {
        let mut inv = PhoneInventory {
            symbols: Vec::new(),
            lookup: HashMap::new(),
            multichar,
        };
        inv.intern(null_symbol);
        inv
    }

    /// Rebuilds an inventory from its symbol table; the first symbol is null.
    pub fn from_symbols(symbols: Vec<String>, multichar: bool) -> Option<Self> {
        if symbols.is_empty() {
            return None;
        }
        let mut inv = PhoneInventory::new(&symbols[0], multichar);
        for s in &symbols[1..] {
            inv.intern(s);
        }
        (inv.symbols.len() == symbols.len()).then_some(inv)
    }

    pub fn intern(&mut self, symbol: &str) -> Phone {
        if let Some(&p) = self.lookup.get(symbol) {
            return p;
        }
        let p = Phone(self.symbols.len() as u32);
        self.symbols.push(symbol.to_string());
        self.lookup.insert(symbol.to_string(), p);
        p
    }

    pub fn get(&self, symbol: &str) -> Option<Phone> {
        self.lookup.get(symbol).copied()
    }

    pub fn symbol(&self, phone: Phone) -> &str {
        &self.symbols[phone.index()]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Rank of every phone in the lexicographic order of the symbols,
    /// indexed by phone id.
    pub fn collation(&self) -> Vec<u32> {
        let mut ids: Vec<usize> = (0..self.symbols.len()).collect();
        ids.sort_by(|&a, &b| self.symbols[a].cmp(&self.symbols[b]));
        let mut rank = vec![0u32; ids.len()];
        for (r, id) in ids.into_iter().enumerate() {
            rank[id] = r as u32;
        }
        rank
    }

    pub fn null(&self) -> Phone {
        Phone::NULL
    }

    pub fn null_symbol(&self) -> &str {
        &self.symbols[0]
    }

    pub fn is_multichar(&self) -> bool {
        self.multichar
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Splits a phoneme field into symbol tokens.
    pub fn tokenize<'a>(&self, field: &'a str) -> Vec<&'a str> {
        if self.multichar {
            field.split_whitespace().collect()
        } else {
            field
                .char_indices()
                .map(|(i, c)| &field[i..i + c.len_utf8()])
                .collect()
        }
    }

    /// Interns every token of `field`.
    pub fn parse(&mut self, field: &str) -> Vec<Phone> {
        let tokens: Vec<String> = self.tokenize(field).into_iter().map(str::to_string).collect();
        tokens.iter().map(|t| self.intern(t)).collect()
    }

    /// Looks up every token of `field` without extending the inventory.
    pub fn lookup_all(&self, field: &str) -> Option<Vec<Phone>> {
        self.tokenize(field).into_iter().map(|t| self.get(t)).collect()
    }

    pub fn render(&self, phones: &[Phone]) -> String {
        let sep = if self.multichar { " " } else { "" };
        phones
            .iter()
            .map(|&p| self.symbol(p))
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn strip_nulls(&self, phones: &[Phone]) -> Vec<Phone> {
        strip_nulls(phones, self.null())
    }
}

/// Removes every occurrence of `null` from an aligned phoneme string.
pub fn strip_nulls(phones: &[Phone], null: Phone) -> Vec<Phone> {
    phones.iter().copied().filter(|&p| p != null).collect()
}

/// One lexicon word with a one-to-one letter/phoneme alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedEntry {
    pub graphemes: Vec<char>,
    pub phonemes: Vec<Phone>,
    /// Frequency column as written in the source, if any.
    pub word_freq: Option<u64>,
}

impl AlignedEntry {
    pub fn len(&self) -> usize {
        self.graphemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphemes.is_empty()
    }

    pub fn word(&self) -> String {
        self.graphemes.iter().collect()
    }

    /// Effective corpus frequency (1 when the source had no frequency column).
    pub fn freq(&self) -> u64 {
        self.word_freq.unwrap_or(1)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("line {line}: '{word}' has {letters} letters but {phonemes} phonemes")]
    Misaligned {
        line: usize,
        word: String,
        letters: usize,
        phonemes: usize,
    },
    #[error("line {line}: expected `word<TAB>phonemes[<TAB>frequency]`")]
    MissingField { line: usize },
    #[error("line {line}: empty word")]
    EmptyWord { line: usize },
    #[error("line {line}: invalid frequency '{value}'")]
    BadFrequency { line: usize, value: String },
    #[error("line {line}: word '{word}' contains the null symbol '{null}'")]
    NullInWord {
        line: usize,
        word: String,
        null: String,
    },
    #[error("line {line}: symbol '{symbol}' is not in the declared {alphabet} alphabet")]
    UndeclaredSymbol {
        line: usize,
        symbol: String,
        alphabet: &'static str,
    },
    #[error("line {line}: invalid header: {reason}")]
    BadHeader { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: IoErrorKind,
    },
    #[error("lexicon contains no entries")]
    Empty,
}

/// Comparable wrapper around an I/O error message.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct IoErrorKind(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// The same spelling appeared again with a different pronunciation.
    Homograph { line: usize, word: String },
    /// An identical entry was repeated.
    Duplicate { line: usize, word: String },
    /// A malformed line was dropped (lenient mode only).
    Skipped { line: usize, reason: String },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::Homograph { line, word } => {
                write!(f, "line {line}: homograph '{word}' kept with an additional pronunciation")
            }
            ParseWarning::Duplicate { line, word } => {
                write!(f, "line {line}: duplicate entry '{word}'")
            }
            ParseWarning::Skipped { line, reason } => write!(f, "line {line}: skipped: {reason}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormatKind {
    /// `word<TAB>aligned_phonemes[<TAB>frequency]` with optional headers.
    #[default]
    Tsv,
    /// The NETtalk corpus layout: whitespace-separated `word phonemes stress class`;
    /// only the first two fields are used.
    Nettalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LexiconFormat {
    pub kind: FormatKind,
    /// Drop malformed lines with a warning instead of failing.
    pub lenient: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Declared {
    graphemes: Option<BTreeSet<char>>,
    phonemes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<AlignedEntry>,
    graphemes: BTreeSet<char>,
    phones: PhoneInventory,
    declared: Declared,
}

#[derive(Debug)]
pub struct Parsed {
    pub lexicon: Lexicon,
    pub warnings: Vec<ParseWarning>,
}

impl Lexicon {
    /// Builds a lexicon from already-interned entries.
    pub fn from_entries(
        entries: Vec<AlignedEntry>,
        phones: PhoneInventory,
    ) -> Result<Self, LexiconError> {
        if entries.is_empty() {
            return Err(LexiconError::Empty);
        }
        let null_char = single_char(phones.null_symbol());
        let mut graphemes = BTreeSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.graphemes.is_empty() {
                return Err(LexiconError::EmptyWord { line: i + 1 });
            }
            if e.graphemes.len() != e.phonemes.len() {
                return Err(LexiconError::Misaligned {
                    line: i + 1,
                    word: e.word(),
                    letters: e.graphemes.len(),
                    phonemes: e.phonemes.len(),
                });
            }
            if null_char.is_some_and(|n| e.graphemes.contains(&n)) {
                return Err(LexiconError::NullInWord {
                    line: i + 1,
                    word: e.word(),
                    null: phones.null_symbol().to_string(),
                });
            }
            debug_assert!(e.phonemes.iter().all(|p| p.index() < phones.len()));
            graphemes.extend(e.graphemes.iter().copied());
        }
        Ok(Lexicon {
            entries,
            graphemes,
            phones,
            declared: Declared::default(),
        })
    }

    pub fn entries(&self) -> &[AlignedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn phones(&self) -> &PhoneInventory {
        &self.phones
    }

    pub fn grapheme_alphabet(&self) -> &BTreeSet<char> {
        &self.graphemes
    }

    pub fn null(&self) -> Phone {
        self.phones.null()
    }

    /// Surface (null-free) pronunciation of an entry.
    pub fn surface(&self, entry: &AlignedEntry) -> Vec<Phone> {
        self.phones.strip_nulls(&entry.phonemes)
    }

    /// A lexicon holding the entries at `indices`, sharing this lexicon's alphabets.
    pub fn subset(&self, indices: &[usize]) -> Lexicon {
        Lexicon {
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
            graphemes: self.graphemes.clone(),
            phones: self.phones.clone(),
            declared: self.declared.clone(),
        }
    }

    /// Serializes back to the TSV format accepted by [`parse_lexicon`].
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if self.phones.null_symbol() != DEFAULT_NULL {
            out.push_str(&format!("#null={}\n", self.phones.null_symbol()));
        }
        if self.phones.is_multichar() {
            out.push_str("#multichar=true\n");
        }
        if let Some(g) = &self.declared.graphemes {
            out.push_str("#graphemes=");
            out.extend(g.iter());
            out.push('\n');
        }
        if self.declared.phonemes {
            let sep = if self.phones.is_multichar() { " " } else { "" };
            out.push_str("#phonemes=");
            out.push_str(&self.phones.symbols()[1..].join(sep));
            out.push('\n');
        }
        for e in &self.entries {
            out.extend(e.graphemes.iter());
            out.push('\t');
            out.push_str(&self.phones.render(&e.phonemes));
            if let Some(f) = e.word_freq {
                out.push_str(&format!("\t{f}"));
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical serialization, as lowercase hex.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_tsv().as_bytes());
        format!("{digest:x}")
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

/// Parses a lexicon from `source`.
pub fn parse_lexicon<R: BufRead>(source: R, format: &LexiconFormat) -> Result<Parsed, LexiconError> {
    let mut null_symbol = DEFAULT_NULL.to_string();
    let mut multichar = false;
    let mut declared_graphemes: Option<String> = None;
    let mut declared_phonemes: Option<String> = None;

    let mut phones: Option<PhoneInventory> = None;
    let mut entries: Vec<AlignedEntry> = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: HashMap<Vec<char>, Vec<usize>> = HashMap::new();

    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| LexiconError::Io {
            line: lineno,
            source: IoErrorKind(e.to_string()),
        })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if format.kind == FormatKind::Tsv && phones.is_none() {
                if let Some((key, value)) = rest.split_once('=') {
                    match key.trim() {
                        "null" => null_symbol = value.trim().to_string(),
                        "multichar" => {
                            multichar = match value.trim() {
                                "true" => true,
                                "false" => false,
                                other => {
                                    return Err(LexiconError::BadHeader {
                                        line: lineno,
                                        reason: format!("multichar must be true or false, got '{other}'"),
                                    })
                                }
                            }
                        }
                        "graphemes" => declared_graphemes = Some(value.to_string()),
                        "phonemes" => declared_phonemes = Some(value.trim().to_string()),
                        _ => {}
                    }
                }
            }
            continue;
        }

        let inv = match &mut phones {
            Some(inv) => inv,
            None => {
                if null_symbol.is_empty() || null_symbol.chars().any(char::is_whitespace) {
                    return Err(LexiconError::BadHeader {
                        line: lineno,
                        reason: "null symbol must be a non-empty token".into(),
                    });
                }
                if !multichar && single_char(&null_symbol).is_none() {
                    return Err(LexiconError::BadHeader {
                        line: lineno,
                        reason: format!(
                            "null symbol '{null_symbol}' must be one character unless #multichar=true"
                        ),
                    });
                }
                let mut inv = PhoneInventory::new(&null_symbol, multichar);
                if let Some(decl) = &declared_phonemes {
                    inv.parse(decl);
                }
                phones.insert(inv)
            }
        };

        let outcome = parse_entry(
            line,
            lineno,
            format.kind,
            inv,
            declared_graphemes.as_deref(),
            declared_phonemes.is_some(),
        );
        let entry = match outcome {
            Ok(e) => e,
            Err(err) if format.lenient => {
                warnings.push(ParseWarning::Skipped {
                    line: lineno,
                    reason: err.to_string(),
                });
                continue;
            }
            Err(err) => return Err(err),
        };

        let prior = seen.entry(entry.graphemes.clone()).or_default();
        if !prior.is_empty() {
            let word = entry.word();
            if prior.iter().any(|&j| entries[j].phonemes == entry.phonemes) {
                warnings.push(ParseWarning::Duplicate { line: lineno, word });
            } else {
                warnings.push(ParseWarning::Homograph { line: lineno, word });
            }
        }
        prior.push(entries.len());
        entries.push(entry);
    }

    let phones = phones.ok_or(LexiconError::Empty)?;
    let mut lexicon = Lexicon::from_entries(entries, phones)?;
    if let Some(g) = declared_graphemes {
        let set: BTreeSet<char> = g.chars().collect();
        lexicon.graphemes.extend(set.iter().copied());
        lexicon.declared.graphemes = Some(set);
    }
    lexicon.declared.phonemes = declared_phonemes.is_some();
    Ok(Parsed { lexicon, warnings })
}

/// Convenience wrapper over [`parse_lexicon`] for in-memory text.
pub fn parse_lexicon_str(text: &str, format: &LexiconFormat) -> Result<Parsed, LexiconError> {
    parse_lexicon(text.as_bytes(), format)
}

fn parse_entry(
    line: &str,
    lineno: usize,
    kind: FormatKind,
    inv: &mut PhoneInventory,
    declared_graphemes: Option<&str>,
    phonemes_declared: bool,
) -> Result<AlignedEntry, LexiconError> {
    let (word, pron, freq) = match kind {
        FormatKind::Tsv => {
            let mut fields = line.split('\t');
            let word = fields.next().unwrap_or("");
            let pron = fields.next().ok_or(LexiconError::MissingField { line: lineno })?;
            let freq = fields.next();
            if fields.next().is_some() {
                return Err(LexiconError::MissingField { line: lineno });
            }
            (word, pron, freq)
        }
        FormatKind::Nettalk => {
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or("");
            let pron = fields.next().ok_or(LexiconError::MissingField { line: lineno })?;
            (word, pron, None)
        }
    };
    if word.is_empty() {
        return Err(LexiconError::EmptyWord { line: lineno });
    }
    let graphemes: Vec<char> = word.chars().collect();
    if let Some(null) = single_char(inv.null_symbol()) {
        if graphemes.contains(&null) {
            return Err(LexiconError::NullInWord {
                line: lineno,
                word: word.to_string(),
                null: null.to_string(),
            });
        }
    }
    if let Some(decl) = declared_graphemes {
        if let Some(c) = graphemes.iter().find(|c| !decl.contains(**c)) {
            return Err(LexiconError::UndeclaredSymbol {
                line: lineno,
                symbol: c.to_string(),
                alphabet: "grapheme",
            });
        }
    }
    let phonemes = if phonemes_declared {
        let tokens = inv.tokenize(pron);
        let mut out = Vec::with_capacity(tokens.len());
        for t in tokens {
            out.push(inv.get(t).ok_or_else(|| LexiconError::UndeclaredSymbol {
                line: lineno,
                symbol: t.to_string(),
                alphabet: "phoneme",
            })?);
        }
        out
    } else {
        // Validate the length before interning so a rejected line leaves no symbols behind.
        let n = inv.tokenize(pron).len();
        if n != graphemes.len() {
            return Err(LexiconError::Misaligned {
                line: lineno,
                word: word.to_string(),
                letters: graphemes.len(),
                phonemes: n,
            });
        }
        inv.parse(pron)
    };
    if phonemes.len() != graphemes.len() {
        return Err(LexiconError::Misaligned {
            line: lineno,
            word: word.to_string(),
            letters: graphemes.len(),
            phonemes: phonemes.len(),
        });
    }
    let word_freq = match freq {
        None => None,
        Some(f) => Some(f.trim().parse::<u64>().map_err(|_| LexiconError::BadFrequency {
            line: lineno,
            value: f.to_string(),
        })?),
    };
    Ok(AlignedEntry {
        graphemes,
        phonemes,
        word_freq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Parsed, LexiconError> {
        parse_lexicon_str(text, &LexiconFormat::default())
    }

    #[test]
    fn parses_entry_with_trailing_null() {
        let p = parse("hose\thOz-\n").unwrap();
        let lex = &p.lexicon;
        let e = &lex.entries()[0];
        assert_eq!(e.word(), "hose");
        assert_eq!(lex.phones().render(&e.phonemes), "hOz-");
        assert_eq!(e.phonemes[2], lex.phones().get("z").unwrap());
        assert_eq!(e.phonemes[3], lex.null());
        assert_eq!(e.freq(), 1);
    }

    #[test]
    fn single_letter_entry() {
        let p = parse("a\ta\n").unwrap();
        assert_eq!(p.lexicon.len(), 1);
        assert_eq!(p.lexicon.entries()[0].len(), 1);
    }

    #[test]
    fn length_mismatch_names_the_line() {
        let err = parse("hose\thOz-\nshop\tS@p\n").unwrap_err();
        assert_eq!(
            err,
            LexiconError::Misaligned {
                line: 2,
                word: "shop".into(),
                letters: 4,
                phonemes: 3
            }
        );
        assert!(err.to_string().starts_with("line 2:"));
    }

    #[test]
    fn lenient_mode_skips_bad_lines() {
        let fmt = LexiconFormat {
            lenient: true,
            ..Default::default()
        };
        let p = parse_lexicon_str("shop\tS@p\nshop\tS-@p\n", &fmt).unwrap();
        assert_eq!(p.lexicon.len(), 1);
        assert!(matches!(p.warnings[0], ParseWarning::Skipped { line: 1, .. }));
        // the rejected line must not leak symbols into the inventory
        assert_eq!(p.lexicon.phones().len(), 4);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(parse("").unwrap_err(), LexiconError::Empty);
        assert_eq!(parse("# only a comment\n\n").unwrap_err(), LexiconError::Empty);
    }

    #[test]
    fn homographs_are_kept_and_flagged() {
        let p = parse("read\tri-d\nread\tr-Ed\nread\tri-d\n").unwrap();
        assert_eq!(p.lexicon.len(), 3);
        assert_eq!(
            p.warnings,
            vec![
                ParseWarning::Homograph { line: 2, word: "read".into() },
                ParseWarning::Duplicate { line: 3, word: "read".into() },
            ]
        );
    }

    #[test]
    fn headers_override_null_and_tokenization() {
        let text = "#null=_\n#multichar=true\nshop\tSH _ AA P\t7\n";
        let p = parse(text).unwrap();
        let lex = &p.lexicon;
        assert!(lex.phones().is_multichar());
        assert_eq!(lex.null(), lex.phones().get("_").unwrap());
        let e = &lex.entries()[0];
        assert_eq!(e.freq(), 7);
        assert_eq!(lex.phones().render(&lex.surface(e)), "SH AA P");
    }

    #[test]
    fn multichar_null_requires_multichar_mode() {
        let err = parse("#null=nil\nab\tab\n").unwrap_err();
        assert!(matches!(err, LexiconError::BadHeader { line: 2, .. }));
    }

    #[test]
    fn declared_alphabets_are_enforced() {
        let err = parse("#graphemes=abc\nabd\tabd\n").unwrap_err();
        assert!(matches!(
            err,
            LexiconError::UndeclaredSymbol { line: 2, alphabet: "grapheme", .. }
        ));
        let err = parse("#phonemes=ab\nab\tax\n").unwrap_err();
        assert!(matches!(
            err,
            LexiconError::UndeclaredSymbol { line: 2, alphabet: "phoneme", .. }
        ));
        let p = parse("#graphemes=abcz\nab\tab\n").unwrap();
        assert!(p.lexicon.grapheme_alphabet().contains(&'z'));
    }

    #[test]
    fn null_symbol_in_word_is_rejected() {
        let err = parse("a-b\ta-b\n").unwrap_err();
        assert!(matches!(err, LexiconError::NullInWord { line: 1, .. }));
    }

    #[test]
    fn bad_frequency() {
        let err = parse("ab\tab\tmany\n").unwrap_err();
        assert!(matches!(err, LexiconError::BadFrequency { line: 1, .. }));
    }

    #[test]
    fn nettalk_layout_ignores_stress_fields() {
        let fmt = LexiconFormat {
            kind: FormatKind::Nettalk,
            lenient: false,
        };
        let p = parse_lexicon_str("aardvark\ta-rdvark\t1<<<>2<<\t0\nabase\txbes-\t0>1<<\t0\n", &fmt)
            .unwrap();
        assert_eq!(p.lexicon.len(), 2);
        assert_eq!(p.lexicon.phones().render(&p.lexicon.entries()[1].phonemes), "xbes-");
    }

    #[test]
    fn strip_nulls_examples() {
        let mut inv = PhoneInventory::new("-", false);
        for (input, want) in [("hOz-", "hOz"), ("S-@p", "S@p"), ("---", "")] {
            let phones = inv.parse(input);
            assert_eq!(inv.render(&inv.strip_nulls(&phones)), want);
        }
    }

    #[test]
    fn content_hash_tracks_entries() {
        let a = parse("ab\tab\n").unwrap().lexicon;
        let b = parse("# comment\nab\tab\n").unwrap().lexicon;
        let c = parse("ab\ta-\n").unwrap().lexicon;
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }

    fn entry_strategy() -> impl Strategy<Value = (String, String, Option<u64>)> {
        (1usize..8)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(proptest::sample::select(vec!['a', 'b', 'c', 'd', 'e']), n),
                    proptest::collection::vec(proptest::sample::select(vec!['A', 'B', '@', '-', 'x']), n),
                    proptest::option::of(0u64..1000),
                )
            })
            .prop_map(|(g, p, f)| (g.into_iter().collect(), p.into_iter().collect(), f))
    }

    proptest! {
        #[test]
        fn tsv_round_trip(entries in proptest::collection::vec(entry_strategy(), 1..12), multichar: bool) {
            let mut text = String::new();
            if multichar {
                text.push_str("#multichar=true\n");
            }
            for (g, p, f) in &entries {
                text.push_str(g);
                text.push('\t');
                if multichar {
                    let toks: Vec<String> = p.chars().map(|c| c.to_string()).collect();
                    text.push_str(&toks.join(" "));
                } else {
                    text.push_str(p);
                }
                if let Some(f) = f {
                    text.push_str(&format!("\t{f}"));
                }
                text.push('\n');
            }
            let lex = parse(&text).unwrap().lexicon;
            prop_assert_eq!(lex.to_tsv(), text.clone());
            let again = parse(&lex.to_tsv()).unwrap().lexicon;
            prop_assert_eq!(&again, &lex);
            for e in lex.entries() {
                prop_assert!(!lex.surface(e).contains(&lex.null()));
            }
        }
    }
}

//! Held-out evaluation: random train/test splits, exact-match word
//! accuracy, per-phoneme accuracy from a minimum edit-distance alignment,
//! and silence rates.

use std::collections::HashMap;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::index::{ChunkIndex, IndexConfig, IndexError};
use crate::lexicon::{Lexicon, Phone};
use crate::rank::{transcribe_counted, RankingPolicy, TieBreak};
use crate::{Mode, OpCounter};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fold_count: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            fold_count: 10,
            test_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid split: {0}")]
    InvalidSpec(String),
    #[error("{words} distinct words cannot be split with test fraction {fraction}")]
    TooSmall { words: usize, fraction: f64 },
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Entry indices of one (train, test) pair. Entries sharing a spelling are
/// always on the same side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Entry indices grouped by spelling, in order of first appearance.
fn word_groups(lexicon: &Lexicon) -> Vec<Vec<usize>> {
    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut by_word: HashMap<&[char], usize> = HashMap::new();
    for (i, e) in lexicon.entries().iter().enumerate() {
        let slot = *by_word.entry(&e.graphemes).or_insert_with(|| {
            order.push(Vec::new());
            order.len() - 1
        });
        order[slot].push(i);
    }
    order
}

/// Draws `spec.fold_count` independent random splits. Each test set holds
/// `round(test_fraction · N)` of the `N` distinct words; fold `f` uses the
/// ChaCha stream `f` of the generator seeded with `spec.seed`.
pub fn generate_splits(lexicon: &Lexicon, spec: &SplitSpec) -> Result<Vec<Split>, EvalError> {
    if spec.fold_count == 0 {
        return Err(EvalError::InvalidSpec("fold_count must be at least 1".into()));
    }
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(EvalError::InvalidSpec(format!(
            "test_fraction must lie strictly between 0 and 1, got {}",
            spec.test_fraction
        )));
    }
    let groups = word_groups(lexicon);
    let n = groups.len();
    let test_words = (spec.test_fraction * n as f64).round() as usize;
    if test_words == 0 || test_words >= n {
        return Err(EvalError::TooSmall {
            words: n,
            fraction: spec.test_fraction,
        });
    }
    let mut splits = Vec::with_capacity(spec.fold_count);
    for fold in 0..spec.fold_count {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(fold as u64);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut is_test = vec![false; n];
        for &g in &perm[..test_words] {
            is_test[g] = true;
        }
        let mut split = Split {
            train: Vec::new(),
            test: Vec::new(),
        };
        for (g, members) in groups.iter().enumerate() {
            let side = if is_test[g] { &mut split.test } else { &mut split.train };
            side.extend_from_slice(members);
        }
        split.train.sort_unstable();
        split.test.sort_unstable();
        splits.push(split);
    }
    Ok(splits)
}

/// Alignment counts of a hypothesis against a reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditCounts {
    pub correct: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl EditCounts {
    /// Unit-cost edit distance.
    pub fn cost(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    pub fn reference_len(&self) -> usize {
        self.correct + self.substitutions + self.deletions
    }
}

/// Minimum unit-cost alignment of `hypothesis` against `reference`.
/// Among alignments of minimum cost the one with the most matches is chosen,
/// so `correct` is well defined.
pub fn align_phonemes<T: PartialEq>(hypothesis: &[T], reference: &[T]) -> EditCounts {
    let (h, r) = (hypothesis.len(), reference.len());
    // (cost, -matches), minimised lexicographically.
    let mut table = vec![vec![(0usize, 0isize); r + 1]; h + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = (i, 0);
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = (j, 0);
    }
    for i in 1..=h {
        for j in 1..=r {
            let same = hypothesis[i - 1] == reference[j - 1];
            let (dc, dm) = table[i - 1][j - 1];
            let diag = if same { (dc, dm - 1) } else { (dc + 1, dm) };
            let (uc, um) = table[i - 1][j];
            let (lc, lm) = table[i][j - 1];
            table[i][j] = diag.min((uc + 1, um)).min((lc + 1, lm));
        }
    }
    let mut counts = EditCounts::default();
    let (mut i, mut j) = (h, r);
    while i > 0 || j > 0 {
        let here = table[i][j];
        if i > 0 && j > 0 {
            let same = hypothesis[i - 1] == reference[j - 1];
            let (dc, dm) = table[i - 1][j - 1];
            let diag = if same { (dc, dm - 1) } else { (dc + 1, dm) };
            if diag == here {
                if same {
                    counts.correct += 1;
                } else {
                    counts.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && (table[i][j - 1].0 + 1, table[i][j - 1].1) == here {
            counts.deletions += 1;
            j -= 1;
        } else {
            counts.insertions += 1;
            i -= 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub words: usize,
    pub silent: usize,
    pub correct_words: usize,
    pub phonemes: usize,
    pub correct_phonemes: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    /// Reference phonemes of the words that received a pronunciation.
    pub nonsilent_phonemes: usize,
    pub nonsilent_correct_phonemes: usize,
}

impl Counts {
    fn add(&mut self, other: &Counts) {
        self.words += other.words;
        self.silent += other.silent;
        self.correct_words += other.correct_words;
        self.phonemes += other.phonemes;
        self.correct_phonemes += other.correct_phonemes;
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.nonsilent_phonemes += other.nonsilent_phonemes;
        self.nonsilent_correct_phonemes += other.nonsilent_correct_phonemes;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_words: usize,
    pub test_words: usize,
    pub word_accuracy: f64,
    /// Silent words count as entirely wrong.
    pub phoneme_accuracy: f64,
    /// Silent words excluded; `None` when every word was silent.
    pub phoneme_accuracy_nonsilent: Option<f64>,
    pub silence_rate: f64,
    pub counts: Counts,
}

impl FoldReport {
    fn from_counts(fold: usize, train_words: usize, counts: Counts) -> Self {
        FoldReport {
            fold,
            train_words,
            test_words: counts.words,
            word_accuracy: ratio(counts.correct_words, counts.words),
            phoneme_accuracy: ratio(counts.correct_phonemes, counts.phonemes),
            phoneme_accuracy_nonsilent: (counts.silent < counts.words)
                .then(|| ratio(counts.nonsilent_correct_phonemes, counts.nonsilent_phonemes)),
            silence_rate: ratio(counts.silent, counts.words),
            counts,
        }
    }
}

/// Unweighted means of the per-fold rates and summed counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub word_accuracy: f64,
    pub phoneme_accuracy: f64,
    pub phoneme_accuracy_nonsilent: Option<f64>,
    pub silence_rate: f64,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub mode: Mode,
    pub tie_break: TieBreak,
    pub min_chunk_len: usize,
    pub fold_count: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned-column table, one row per fold plus the mean.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "mode {}  tie-break {}  min chunk {}  folds {}  test fraction {}  seed {}",
            self.mode,
            self.tie_break.name(),
            self.min_chunk_len,
            self.fold_count,
            self.test_fraction,
            self.seed
        )
        .unwrap();
        writeln!(
            out,
            "{:>5} {:>7} {:>6} {:>8} {:>10} {:>10} {:>8}",
            "fold", "train", "test", "%words", "%phonemes", "%ph(voiced)", "%silent"
        )
        .unwrap();
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        let opt = |v: Option<f64>| v.map_or("-".to_string(), pct);
        for f in &self.folds {
            writeln!(
                out,
                "{:>5} {:>7} {:>6} {:>8} {:>10} {:>10} {:>8}",
                f.fold,
                f.train_words,
                f.test_words,
                pct(f.word_accuracy),
                pct(f.phoneme_accuracy),
                opt(f.phoneme_accuracy_nonsilent),
                pct(f.silence_rate)
            )
            .unwrap();
        }
        let a = &self.aggregate;
        writeln!(
            out,
            "{:>5} {:>7} {:>6} {:>8} {:>10} {:>10} {:>8}",
            "mean",
            "",
            a.counts.words,
            pct(a.word_accuracy),
            pct(a.phoneme_accuracy),
            opt(a.phoneme_accuracy_nonsilent),
            pct(a.silence_rate)
        )
        .unwrap();
        out
    }
}

/// Outcome for one distinct test word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordOutcome {
    pub silent: bool,
    pub correct: bool,
    pub edits: EditCounts,
}

/// Scores one hypothesis against every listed pronunciation of the word:
/// the word is correct if any reference matches exactly; phoneme counts use
/// the closest reference.
pub fn score_word(hypothesis: Option<&[Phone]>, references: &[Vec<Phone>]) -> WordOutcome {
    let empty: &[Phone] = &[];
    let hyp = hypothesis.unwrap_or(empty);
    let edits = references
        .iter()
        .map(|r| align_phonemes(hyp, r))
        .min_by_key(|e| (e.cost(), std::cmp::Reverse(e.correct)))
        .unwrap_or_default();
    WordOutcome {
        silent: hypothesis.is_none(),
        correct: hypothesis.is_some() && references.iter().any(|r| r.as_slice() == hyp),
        edits,
    }
}

/// Runs the full protocol: for each split, index the training side and
/// transcribe every distinct test word.
pub fn evaluate(
    lexicon: &Lexicon,
    spec: &SplitSpec,
    policy: &RankingPolicy,
    index_config: IndexConfig,
) -> Result<EvalReport, EvalError> {
    let splits = generate_splits(lexicon, spec)?;
    let policy = RankingPolicy { k: 1, ..*policy };
    let mut folds = Vec::with_capacity(splits.len());
    for (fold, split) in splits.iter().enumerate() {
        let train = lexicon.subset(&split.train);
        let index = ChunkIndex::build(&train, index_config)?;
        let test = lexicon.subset(&split.test);
        let mut words: Vec<(&[char], Vec<Vec<Phone>>)> = Vec::new();
        for group in word_groups(&test) {
            let first = &test.entries()[group[0]];
            let refs = group.iter().map(|&i| test.surface(&test.entries()[i])).collect();
            words.push((&first.graphemes, refs));
        }
        let outcomes: Vec<WordOutcome> = words
            .par_iter()
            .map(|(word, refs)| {
                let best = transcribe_counted(word, &index, &policy, &mut OpCounter::default())
                    .into_iter()
                    .next();
                score_word(best.as_ref().map(|c| c.surface.as_slice()), refs)
            })
            .collect();
        let mut counts = Counts::default();
        for o in &outcomes {
            let ref_len = o.edits.reference_len();
            counts.words += 1;
            counts.phonemes += ref_len;
            counts.correct_phonemes += o.edits.correct;
            counts.substitutions += o.edits.substitutions;
            counts.insertions += o.edits.insertions;
            counts.deletions += o.edits.deletions;
            if o.silent {
                counts.silent += 1;
            } else {
                counts.nonsilent_phonemes += ref_len;
                counts.nonsilent_correct_phonemes += o.edits.correct;
            }
            counts.correct_words += usize::from(o.correct);
        }
        let train_words = word_groups(&train).len();
        folds.push(FoldReport::from_counts(fold, train_words, counts));
    }
    let mut total = Counts::default();
    for f in &folds {
        total.add(&f.counts);
    }
    let aggregate = Aggregate {
        word_accuracy: mean(folds.iter().map(|f| f.word_accuracy)).unwrap_or(0.0),
        phoneme_accuracy: mean(folds.iter().map(|f| f.phoneme_accuracy)).unwrap_or(0.0),
        phoneme_accuracy_nonsilent: mean(folds.iter().filter_map(|f| f.phoneme_accuracy_nonsilent)),
        silence_rate: mean(folds.iter().map(|f| f.silence_rate)).unwrap_or(0.0),
        counts: total,
    };
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        mode: policy.mode,
        tie_break: policy.tie_break,
        min_chunk_len: index_config.min_chunk_len,
        fold_count: spec.fold_count,
        test_fraction: spec.test_fraction,
        seed: spec.seed,
        folds,
        aggregate,
    })
}

/// Two-tailed paired t-test over per-fold differences `a[i] - b[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    pub mean_difference: f64,
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Option<PairedTest> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let df = diffs.len() - 1;
    let se = (var / n).sqrt();
    let (t, p) = if se == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean / se;
        let dist = StudentsT::new(0.0, 1.0, df as f64).ok()?;
        (t, 2.0 * (1.0 - dist.cdf(t.abs())))
    };
    Some(PairedTest {
        mean_difference: mean,
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{parse_lexicon_str, LexiconFormat};
    use proptest::prelude::*;

    fn lex(text: &str) -> Lexicon {
        parse_lexicon_str(text, &LexiconFormat::default()).unwrap().lexicon
    }

    fn numbered(n: usize) -> Lexicon {
        let text: String = (0..n).map(|i| format!("w{i:05}\tw{i:05}\n")).collect();
        lex(&text)
    }

    /// Every alignment of `h` against `r`, as (cost, correct) pairs.
    fn all_alignments(h: &[char], r: &[char]) -> Vec<(usize, usize)> {
        if h.is_empty() {
            return vec![(r.len(), 0)];
        }
        if r.is_empty() {
            return vec![(h.len(), 0)];
        }
        let mut out = Vec::new();
        let same = h[0] == r[0];
        for (c, k) in all_alignments(&h[1..], &r[1..]) {
            out.push((c + usize::from(!same), k + usize::from(same)));
        }
        for (c, k) in all_alignments(&h[1..], r) {
            out.push((c + 1, k));
        }
        for (c, k) in all_alignments(h, &r[1..]) {
            out.push((c + 1, k));
        }
        out
    }

    fn brute(h: &str, r: &str) -> (usize, usize) {
        let h: Vec<char> = h.chars().collect();
        let r: Vec<char> = r.chars().collect();
        let all = all_alignments(&h, &r);
        let cost = all.iter().map(|a| a.0).min().unwrap();
        let correct = all.iter().filter(|a| a.0 == cost).map(|a| a.1).max().unwrap();
        (cost, correct)
    }

    fn align(h: &str, r: &str) -> EditCounts {
        let h: Vec<char> = h.chars().collect();
        let r: Vec<char> = r.chars().collect();
        align_phonemes(&h, &r)
    }

    #[test]
    fn alignment_examples() {
        let c = align("hOp", "hOp");
        assert_eq!((c.correct, c.substitutions, c.insertions, c.deletions), (3, 0, 0, 0));
        // '@' and 'O' differ: one deletion and one substitution, 'p' survives.
        assert_eq!(brute("@p", "hOp"), (2, 1));
        let c = align("@p", "hOp");
        assert_eq!((c.correct, c.cost(), c.reference_len()), (1, 2, 3));
        assert_eq!(c.deletions, 1);
        let c = align("", "hOp");
        assert_eq!((c.correct, c.substitutions, c.insertions, c.deletions), (0, 0, 0, 3));
        // minimum cost alignments of ab/ba differ in matches; the best one keeps one
        assert_eq!(brute("ab", "ba"), (2, 1));
        assert_eq!(align("ab", "ba").correct, 1);
    }

    proptest! {
        #[test]
        fn alignment_equals_brute_force(h in "[abc]{0,6}", r in "[abc]{0,6}") {
            let c = align(&h, &r);
            prop_assert_eq!((c.cost(), c.correct), brute(&h, &r));
            prop_assert_eq!(c.reference_len(), r.chars().count());
            prop_assert_eq!(c.correct + c.substitutions + c.insertions, h.chars().count());
        }

        #[test]
        fn edit_cost_is_symmetric_and_triangular(a in "[abcd]{0,8}", b in "[abcd]{0,8}", c in "[abcd]{0,8}") {
            let ab = align(&a, &b).cost();
            prop_assert_eq!(ab, align(&b, &a).cost());
            prop_assert!(align(&a, &c).cost() <= ab + align(&b, &c).cost());
        }
    }

    #[test]
    fn split_sizes() {
        let splits = generate_splits(&numbered(10), &SplitSpec::default()).unwrap();
        assert_eq!(splits.len(), 10);
        for s in &splits {
            assert_eq!((s.train.len(), s.test.len()), (9, 1));
            assert!(s.test.iter().all(|t| !s.train.contains(t)));
        }
        let big = numbered(20_000);
        let splits = generate_splits(&big, &SplitSpec { fold_count: 2, ..Default::default() }).unwrap();
        assert_eq!(splits[0].test.len(), 2000);
        assert_eq!(splits[0].train.len(), 18_000);
        assert_ne!(splits[0].test, splits[1].test);
    }

    #[test]
    fn splits_are_reproducible() {
        let l = numbered(200);
        let spec = SplitSpec { fold_count: 3, test_fraction: 0.2, seed: 42 };
        assert_eq!(generate_splits(&l, &spec).unwrap(), generate_splits(&l, &spec).unwrap());
        let other = SplitSpec { seed: 43, ..spec };
        assert_ne!(generate_splits(&l, &spec).unwrap(), generate_splits(&l, &other).unwrap());
    }

    #[test]
    fn split_errors() {
        let l = numbered(4);
        assert!(matches!(generate_splits(&l, &SplitSpec::default()), Err(EvalError::TooSmall { words: 4, .. })));
        let bad = SplitSpec { test_fraction: 1.0, ..Default::default() };
        assert!(matches!(generate_splits(&l, &bad), Err(EvalError::InvalidSpec(_))));
        let bad = SplitSpec { fold_count: 0, ..Default::default() };
        assert!(matches!(generate_splits(&l, &bad), Err(EvalError::InvalidSpec(_))));
    }

    #[test]
    fn homographs_stay_together() {
        let l = lex("read\tri-d\nread\tr-Ed\nab\tab\ncd\tcd\nef\tef\ngh\tgh\nij\tij\nkl\tkl\nmn\tmn\nop\top\n");
        for s in generate_splits(&l, &SplitSpec { fold_count: 10, test_fraction: 0.1, seed: 7 }).unwrap() {
            let in_test = s.test.contains(&0);
            assert_eq!(in_test, s.test.contains(&1));
        }
    }

    #[test]
    fn homograph_reference_match() {
        let l = lex("read\tri-d\nread\tr-Ed\n");
        let refs: Vec<Vec<Phone>> = l.entries().iter().map(|e| l.surface(e)).collect();
        let o = score_word(Some(&refs[1]), &refs);
        assert!(o.correct);
        assert_eq!(o.edits.correct, 3);
        let silent = score_word(None, &refs);
        assert!(silent.silent && !silent.correct);
        assert_eq!(silent.edits.deletions, 3);
    }

    #[test]
    fn all_silent_fold() {
        // Disjoint alphabets: nothing in a test word can ever match.
        let text: String = (0..10).map(|i| {
            let c = char::from(b'a' + i as u8);
            format!("{c}{c}{c}\t{c}{c}{c}\n")
        }).collect();
        let report = evaluate(&lex(&text), &SplitSpec::default(), &RankingPolicy::new(Mode::Smpa), IndexConfig::default()).unwrap();
        for f in &report.folds {
            assert_eq!(f.word_accuracy, 0.0);
            assert_eq!(f.phoneme_accuracy, 0.0);
            assert_eq!(f.phoneme_accuracy_nonsilent, None);
            assert_eq!(f.silence_rate, 1.0);
        }
        assert_eq!(report.aggregate.phoneme_accuracy_nonsilent, None);
        assert!(report.to_json().contains("\"phoneme_accuracy_nonsilent\": null"));
    }

    #[test]
    fn paired_test_detects_consistent_gain() {
        let a = [0.64, 0.63, 0.65, 0.64, 0.62, 0.66, 0.63, 0.64, 0.65, 0.63];
        let b = [0.57, 0.56, 0.58, 0.56, 0.55, 0.57, 0.56, 0.58, 0.57, 0.56];
        let t = paired_t_test(&a, &b).unwrap();
        assert_eq!(t.degrees_of_freedom, 9);
        assert!(t.mean_difference > 0.0 && t.p_value < 0.01);
        let same = paired_t_test(&a, &a).unwrap();
        assert_eq!(same.p_value, 1.0);
        assert!(paired_t_test(&a[..1], &b[..1]).is_none());
    }
}

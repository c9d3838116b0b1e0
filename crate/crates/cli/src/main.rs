use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chunkg2p::index::{CacheStatus, IndexError};
use chunkg2p::rank::{best_candidates, word_lattice};
use chunkg2p::{
    evaluate, parse_lexicon, Candidate, ChunkIndex, FormatKind, IndexConfig, Lexicon, LexiconFormat, Mode,
    RankingPolicy, Score, SplitSpec, TieBreak,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const TRANSCRIPTION_SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "chunkg2p", version, about = "Pronounce unknown words by recombining overlapping lexicon chunks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract every chunk of a lexicon and write an index cache.
    BuildIndex {
        lexicon: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        source: SourceFormat,
        #[command(flatten)]
        index: IndexArgs,
    },
    /// Rank candidate pronunciations for one or more words.
    Transcribe {
        #[arg(required = true)]
        words: Vec<String>,
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        ranking: RankingArgs,
        /// Number of distinct pronunciations per word.
        #[arg(short, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Also write the lattice of the (single) word in DOT format.
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// Print the pronunciation lattice of a word in DOT format.
    Lattice {
        word: String,
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "smpa")]
        mode: Mode,
    },
    /// Run the held-out evaluation protocol over a lexicon.
    Eval {
        lexicon: PathBuf,
        #[command(flatten)]
        source: SourceFormat,
        #[command(flatten)]
        index: IndexArgs,
        #[command(flatten)]
        ranking: RankingArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0.1)]
        test_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
}

#[derive(Args)]
struct SourceFormat {
    /// Layout of the lexicon file.
    #[arg(long = "lexicon-format", value_enum, default_value_t = LexiconKind::Tsv)]
    kind: LexiconKind,
    /// Skip malformed lines with a warning instead of failing.
    #[arg(long)]
    lenient: bool,
}

impl SourceFormat {
    fn format(&self) -> LexiconFormat {
        LexiconFormat {
            kind: match self.kind {
                LexiconKind::Tsv => FormatKind::Tsv,
                LexiconKind::Nettalk => FormatKind::Nettalk,
            },
            lenient: self.lenient,
        }
    }
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long, default_value_t = 2)]
    min_chunk_len: usize,
    /// Count each chunk occurrence with the frequency of its source word.
    #[arg(long)]
    weight_by_word_freq: bool,
}

impl IndexArgs {
    fn config(&self) -> IndexConfig {
        IndexConfig {
            min_chunk_len: self.min_chunk_len,
            weight_by_word_freq: self.weight_by_word_freq,
        }
    }
}

#[derive(Args)]
struct Input {
    /// Lexicon to index on the fly.
    #[arg(long, conflicts_with = "index", required_unless_present = "index")]
    lexicon: Option<PathBuf>,
    /// Prebuilt index cache.
    #[arg(long)]
    index: Option<PathBuf>,
    /// With --lexicon: reuse this cache when it is current, rebuild it otherwise.
    #[arg(long, requires = "lexicon")]
    cache: Option<PathBuf>,
    #[command(flatten)]
    source: SourceFormat,
    #[command(flatten)]
    config: IndexArgs,
}

#[derive(Args)]
struct RankingArgs {
    /// smpa, pronounce (alias overlap1) or headtail.
    #[arg(long, default_value = "smpa")]
    mode: Mode,
    /// freq_sum, freq_min or none.
    #[arg(long, default_value = "freq_sum")]
    tie_break: TieBreak,
    /// Do not favour a known word's own pronunciation over borrowed readings.
    #[arg(long)]
    no_lexical_first: bool,
}

impl RankingArgs {
    fn policy(&self) -> RankingPolicy {
        RankingPolicy::new(self.mode)
            .with_tie_break(self.tie_break)
            .with_lexical_first(!self.no_lexical_first)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LexiconKind {
    Tsv,
    Nettalk,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

enum Failure {
    /// Bad input data: exit 1.
    Data(String),
    /// Bad invocation or unreadable/unwritable file: exit 2.
    Usage(String),
}

impl Failure {
    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure::Usage(format!("{}: {err}", path.display()))
    }

    fn index(path: &Path, err: IndexError) -> Self {
        match err {
            IndexError::Io(e) => Failure::io(path, e),
            other => Failure::Data(format!("{}: {other}", path.display())),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read_lexicon(path: &Path, format: &LexiconFormat) -> Result<Lexicon> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    let parsed = parse_lexicon(BufReader::new(file), format).map_err(|e| match e {
        chunkg2p::lexicon::LexiconError::Io { .. } => Failure::io(path, e),
        other => Failure::Data(format!("{}: {other}", path.display())),
    })?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(parsed.lexicon)
}

fn open_index(input: &Input) -> Result<ChunkIndex> {
    if let Some(path) = &input.index {
        return ChunkIndex::load(path).map_err(|e| Failure::index(path, e));
    }
    let path = input.lexicon.as_ref().expect("clap requires --lexicon or --index");
    let lexicon = read_lexicon(path, &input.source.format())?;
    let config = input.config.config();
    match &input.cache {
        Some(cache) => {
            let (index, status) = ChunkIndex::load_or_build(cache, &lexicon, config).map_err(|e| match e {
                IndexError::EmptyLexicon => Failure::Data(format!("{}: {e}", path.display())),
                other => Failure::index(cache, other),
            })?;
            if let CacheStatus::Rebuilt(reason) = status {
                eprintln!("rebuilt index cache {} ({reason})", cache.display());
            }
            Ok(index)
        }
        None => ChunkIndex::build(&lexicon, config).map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn display_score(score: Score) -> String {
    let value = *score.numer() as f64 / *score.denom() as f64;
    if *score.denom() == 1 {
        format!("{} ({value:.3})", score.numer())
    } else {
        format!("{}/{} ({value:.3})", score.numer(), score.denom())
    }
}

#[derive(Serialize)]
struct JsonScore {
    numerator: u64,
    denominator: u64,
    value: f64,
    display: String,
}

#[derive(Serialize)]
struct JsonChunk {
    start: usize,
    end: usize,
    graphemes: String,
    phonemes: String,
    freq: u64,
    lexical: bool,
}

#[derive(Serialize)]
struct JsonCandidate {
    rank: usize,
    surface: String,
    merged: String,
    score: JsonScore,
    chunk_count: usize,
    total_chunk_len: usize,
    freq_key: u64,
    chunks: Vec<JsonChunk>,
}

#[derive(Serialize)]
struct JsonWord {
    word: String,
    silent: bool,
    candidates: Vec<JsonCandidate>,
}

#[derive(Serialize)]
struct JsonTranscription {
    schema_version: u32,
    mode: Mode,
    tie_break: TieBreak,
    k: usize,
    results: Vec<JsonWord>,
}

fn json_candidate(rank: usize, word: &[char], c: &Candidate, index: &ChunkIndex) -> JsonCandidate {
    let phones = index.phones();
    JsonCandidate {
        rank,
        surface: phones.render(&c.surface),
        merged: phones.render(&c.merged),
        score: JsonScore {
            numerator: *c.score.numer(),
            denominator: *c.score.denom(),
            value: *c.score.numer() as f64 / *c.score.denom() as f64,
            display: display_score(c.score),
        },
        chunk_count: c.chunk_count,
        total_chunk_len: c.total_chunk_len,
        freq_key: c.freq_key,
        chunks: c
            .chunks
            .iter()
            .map(|n| JsonChunk {
                start: n.start,
                end: n.end,
                graphemes: word[n.start..n.end].iter().collect(),
                phonemes: phones.render(&n.phonemic),
                freq: n.freq,
                lexical: n.words > 0,
            })
            .collect(),
    }
}

fn text_word(out: &mut String, word: &str, letters: &[char], cands: &[Candidate], index: &ChunkIndex) {
    let phones = index.phones();
    out.push_str(word);
    out.push('\n');
    if cands.is_empty() {
        out.push_str("  (silence)\n");
    }
    for (i, c) in cands.iter().enumerate() {
        out.push_str(&format!(
            "  {}. /{}/  score {}  chunks {}  freq {}\n",
            i + 1,
            phones.render(&c.surface),
            display_score(c.score),
            c.chunk_count,
            c.freq_key
        ));
        for n in &c.chunks {
            let g: String = letters[n.start..n.end].iter().collect();
            out.push_str(&format!(
                "       [{},{}) {} /{}/ freq {}\n",
                n.start,
                n.end,
                g,
                phones.render(&n.phonemic),
                n.freq
            ));
        }
    }
}

fn cmd_build_index(lexicon: &Path, output: &Path, source: &SourceFormat, index: &IndexArgs) -> Result<()> {
    let lex = read_lexicon(lexicon, &source.format())?;
    let idx = ChunkIndex::build(&lex, index.config()).map_err(|e| Failure::Data(format!("{}: {e}", lexicon.display())))?;
    idx.save(output).map_err(|e| Failure::index(output, e))?;
    println!(
        "{} entries -> {} chunks ({} distinct spellings, {} occurrences, min length {}) written to {}",
        idx.entry_count(),
        idx.chunk_count(),
        idx.graphemic_count(),
        idx.occurrence_count(),
        idx.min_chunk_len(),
        output.display()
    );
    Ok(())
}

fn cmd_transcribe(
    words: &[String],
    input: &Input,
    ranking: &RankingArgs,
    k: usize,
    format: OutputFormat,
    dot: Option<&Path>,
) -> Result<()> {
    if k == 0 {
        return Err(Failure::Usage("-k must be at least 1".into()));
    }
    if dot.is_some() && words.len() != 1 {
        return Err(Failure::Usage("--dot needs exactly one word".into()));
    }
    let index = open_index(input)?;
    let policy = ranking.policy().with_k(k);
    let mut text = String::new();
    let mut dots = String::new();
    let mut results = Vec::new();
    for word in words {
        let letters: Vec<char> = word.chars().collect();
        let lattice = word_lattice(&letters, &index, policy.mode);
        let cands = best_candidates(&lattice, &policy);
        if format == OutputFormat::Dot || dot.is_some() {
            dots.push_str(&lattice.export_dot(index.phones()));
        }
        match format {
            OutputFormat::Text => text_word(&mut text, word, &letters, &cands, &index),
            OutputFormat::Json => results.push(JsonWord {
                word: word.clone(),
                silent: cands.is_empty(),
                candidates: cands
                    .iter()
                    .enumerate()
                    .map(|(i, c)| json_candidate(i + 1, &letters, c, &index))
                    .collect(),
            }),
            OutputFormat::Dot => {}
        }
    }
    if let Some(path) = dot {
        write_file(path, &dots)?;
    }
    let stdout = match format {
        OutputFormat::Text => text,
        OutputFormat::Dot => dots,
        OutputFormat::Json => {
            let doc = JsonTranscription {
                schema_version: TRANSCRIPTION_SCHEMA_VERSION,
                mode: policy.mode,
                tie_break: policy.tie_break,
                k,
                results,
            };
            serde_json::to_string_pretty(&doc).expect("transcription serializes") + "\n"
        }
    };
    print(&stdout)
}

fn cmd_lattice(word: &str, input: &Input, mode: Mode) -> Result<()> {
    let index = open_index(input)?;
    let letters: Vec<char> = word.chars().collect();
    print(&word_lattice(&letters, &index, mode).export_dot(index.phones()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    lexicon: &Path,
    source: &SourceFormat,
    index: &IndexArgs,
    ranking: &RankingArgs,
    folds: usize,
    test_frac: f64,
    seed: u64,
    format: ReportFormat,
) -> Result<()> {
    let lex = read_lexicon(lexicon, &source.format())?;
    let spec = SplitSpec {
        fold_count: folds,
        test_fraction: test_frac,
        seed,
    };
    let report = evaluate(&lex, &spec, &ranking.policy(), index.config()).map_err(|e| match e {
        chunkg2p::eval::EvalError::InvalidSpec(_) => Failure::Usage(e.to_string()),
        other => Failure::Data(format!("{}: {other}", lexicon.display())),
    })?;
    match format {
        ReportFormat::Json => print(&(report.to_json() + "\n")),
        ReportFormat::Text => print(&report.to_text()),
    }
}

fn print(s: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(s.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Usage(format!("stdout: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildIndex { lexicon, output, source, index } => cmd_build_index(&lexicon, &output, &source, &index),
        Command::Transcribe { words, input, ranking, k, format, dot } => {
            cmd_transcribe(&words, &input, &ranking, k, format, dot.as_deref())
        }
        Command::Lattice { word, input, mode } => cmd_lattice(&word, &input, mode),
        Command::Eval { lexicon, source, index, ranking, folds, test_frac, seed, format } => {
            cmd_eval(&lexicon, &source, &index, &ranking, folds, test_frac, seed, format)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

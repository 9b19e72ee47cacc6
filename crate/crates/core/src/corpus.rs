//! Sentence records, text normalization, tokenization/encoding,
//! deterministic splits, and the note-id disjointness guarantee between
//! training data and the gold standard corpus.
//!
//! Record files are line-delimited UTF-8, one sentence per line, with a
//! fixed tab-separated field order:
//!
//! ```text
//! note_id <TAB> sent_id <TAB> text <TAB> gold_label <TAB> weak_label <TAB> source
//! ```
//!
//! Absent labels are written as `-`. Backslash, tab, newline and carriage
//! return inside `text` are escaped as `\\`, `\t`, `\n`, `\r`. Lines
//! starting with `#` are comments and are skipped on read.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

/// Reserved vocabulary id for padding.
pub const PAD_ID: u32 = 0;
/// Reserved vocabulary id for out-of-vocabulary tokens.
pub const UNK_ID: u32 = 1;

/// Sentence-final punctuation used by the segmenter and by negation
/// scoping to delimit clauses.
const TERMINALS: [char; 3] = ['.', '!', '?'];

/// Abbreviations the segmenter never splits after. Shipped as a data
/// file so the list is inspectable outside the binary.
const ABBREVIATIONS: &str = include_str!("../../../assets/abbreviations.txt");

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("train_fraction must be in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate record key (note_id={note_id}, sent_id={sent_id})")]
    DuplicateKey { note_id: String, sent_id: u32 },
    #[error("record (note_id={note_id}, sent_id={sent_id}) has empty text")]
    EmptyText { note_id: String, sent_id: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which classification task a label belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStudy {
    PhysicalActivity,
    ExcessDiet,
}

impl CaseStudy {
    /// Ordered class inventory; the position of a label in this slice is
    /// its class id for encoding, confusion matrices and tie-breaking.
    pub fn classes(self) -> &'static [Label] {
        match self {
            CaseStudy::PhysicalActivity => &[Label::Activity, Label::Inactivity],
            CaseStudy::ExcessDiet => &[
                Label::HighCalorie,
                Label::HighSalt,
                Label::HighFat,
                Label::NormalNone,
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseStudy::PhysicalActivity => "physical_activity",
            CaseStudy::ExcessDiet => "excess_diet",
        }
    }
}

impl fmt::Display for CaseStudy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseStudy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "physical_activity" => Ok(CaseStudy::PhysicalActivity),
            "excess_diet" => Ok(CaseStudy::ExcessDiet),
            other => Err(format!("unknown case study: {other:?}")),
        }
    }
}

/// Sentence-level class label. Each value belongs to exactly one case
/// study, so the (case_study, value) legality invariant is structural.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Activity,
    Inactivity,
    HighCalorie,
    HighSalt,
    HighFat,
    NormalNone,
}

impl Label {
    pub fn case_study(self) -> CaseStudy {
        match self {
            Label::Activity | Label::Inactivity => CaseStudy::PhysicalActivity,
            _ => CaseStudy::ExcessDiet,
        }
    }

    /// Index of this label within its case study's class inventory.
    pub fn class_id(self) -> usize {
        self.case_study()
            .classes()
            .iter()
            .position(|&l| l == self)
            .expect("label present in its own class inventory")
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Activity => "activity",
            Label::Inactivity => "inactivity",
            Label::HighCalorie => "high_calorie",
            Label::HighSalt => "high_salt",
            Label::HighFat => "high_fat",
            Label::NormalNone => "normal_none",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "activity" => Ok(Label::Activity),
            "inactivity" => Ok(Label::Inactivity),
            "high_calorie" => Ok(Label::HighCalorie),
            "high_salt" => Ok(Label::HighSalt),
            "high_fat" => Ok(Label::HighFat),
            "normal_none" => Ok(Label::NormalNone),
            other => Err(format!("unknown label: {other:?}")),
        }
    }
}

/// Where a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Synthetic,
    Imported,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Synthetic => "synthetic",
            Source::Imported => "imported",
        })
    }
}

impl FromStr for Source {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "synthetic" => Ok(Source::Synthetic),
            "imported" => Ok(Source::Imported),
            other => Err(format!("unknown source: {other:?}")),
        }
    }
}

/// One sentence with identifiers, text and (optional) labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub note_id: String,
    pub sent_id: u32,
    pub text: String,
    pub gold_label: Option<Label>,
    pub weak_label: Option<Label>,
    pub source: Source,
}

/// A sentence encoded for the classifier: fixed-length ids plus an
/// attention mask where all 1s precede all 0s and masked-off positions
/// hold the pad id.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSentence {
    pub token_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    pub label_id: Option<u32>,
}

/// Split a document into sentences on terminal punctuation followed by
/// whitespace. Never splits inside a decimal number (the terminal is not
/// followed by whitespace there) or after an abbreviation from the
/// shipped list. Concatenating the outputs recovers the input up to
/// boundary whitespace; no output sentence is empty.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let abbrevs: HashSet<&str> = ABBREVIATIONS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();

    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if TERMINALS.contains(&chars[i]) {
            // absorb the whole terminal run ("...", "?!")
            let mut end = i + 1;
            while end < chars.len() && TERMINALS.contains(&chars[end]) {
                end += 1;
            }
            let at_boundary = end == chars.len() || chars[end].is_whitespace();
            if at_boundary {
                // the whitespace-delimited word ending at the run, e.g. "Pt."
                let mut word_start = i;
                while word_start > start && !chars[word_start - 1].is_whitespace() {
                    word_start -= 1;
                }
                let word: String = chars[word_start..end].iter().collect();
                if !abbrevs.contains(word.to_lowercase().as_str()) {
                    let sentence: String = chars[start..end].iter().collect();
                    let sentence = sentence.trim();
                    if !sentence.is_empty() {
                        sentences.push(sentence.to_string());
                    }
                    start = end;
                }
            }
            i = end;
        } else {
            i += 1;
        }
    }
    let tail: String = chars[start..].iter().collect();
    let tail = tail.trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

fn is_boundary_punct(c: char) -> bool {
    c.is_ascii_punctuation()
}

/// Lowercase and split a sentence into tokens: whitespace-separated
/// chunks with leading and trailing punctuation runs detached as their
/// own tokens. Interior punctuation stays put, so contractions
/// ("didn't"), hyphenated words ("high-salt") and decimals ("2.5")
/// survive as single tokens.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let lower = sentence.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lower.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let n = chars.len();
        let mut lead = 0;
        while lead < n && is_boundary_punct(chars[lead]) {
            lead += 1;
        }
        if lead == n {
            // chunk is all punctuation, e.g. "..."
            tokens.push(chunk.to_string());
            continue;
        }
        let mut trail = n;
        while trail > lead && is_boundary_punct(chars[trail - 1]) {
            trail -= 1;
        }
        if lead > 0 {
            tokens.push(chars[..lead].iter().collect());
        }
        tokens.push(chars[lead..trail].iter().collect());
        if trail < n {
            tokens.push(chars[trail..].iter().collect());
        }
    }
    tokens
}

/// Word-level vocabulary with reserved pad and unknown ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocab {
    id_to_token: Vec<String>,
    #[serde(skip)]
    token_to_id: HashMap<String, u32>,
}

impl Vocab {
    /// Build from token sequences (normally the training split only),
    /// min frequency 1. Tokens are ordered by descending frequency then
    /// lexicographically, after the reserved ids 0=pad, 1=unknown.
    pub fn build<'a, I>(token_seqs: I) -> Vocab
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for seq in token_seqs {
            for tok in seq {
                *freq.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut by_freq: Vec<(&str, u64)> = freq.into_iter().collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

        let mut id_to_token = vec!["[PAD]".to_string(), "[UNK]".to_string()];
        id_to_token.extend(by_freq.into_iter().map(|(t, _)| t.to_string()));
        Vocab::from_tokens(id_to_token)
    }

    /// Rebuild from an id-ordered token list (checkpoint loading).
    pub fn from_tokens(id_to_token: Vec<String>) -> Vocab {
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { id_to_token, token_to_id }
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }
}

/// Encode a token sequence to exactly `max_len` ids: unknown tokens map
/// to [`UNK_ID`], over-length sequences keep the head and drop the tail,
/// short ones are right-padded with [`PAD_ID`].
pub fn encode(tokens: &[String], vocab: &Vocab, max_len: usize) -> EncodedSentence {
    assert!(max_len >= 1, "max_len must be >= 1");
    let kept = tokens.len().min(max_len);
    let mut token_ids = Vec::with_capacity(max_len);
    let mut attention_mask = Vec::with_capacity(max_len);
    for tok in &tokens[..kept] {
        token_ids.push(vocab.id(tok));
        attention_mask.push(1);
    }
    token_ids.resize(max_len, PAD_ID);
    attention_mask.resize(max_len, 0);
    EncodedSentence { token_ids, attention_mask, label_id: None }
}

/// Deterministic seeded shuffle-split. Train size is
/// `floor(train_fraction * n)`; input order is discarded.
pub fn split_corpus(
    records: &[SentenceRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<SentenceRecord>, Vec<SentenceRecord>), CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(train_fraction));
    }
    let mut shuffled = records.to_vec();
    SeededRng::new(seed).shuffle(&mut shuffled);
    let n_train = (train_fraction * records.len() as f64).floor() as usize;
    let valid = shuffled.split_off(n_train);
    Ok((shuffled, valid))
}

/// True iff the two corpora share no note_id.
pub fn check_disjoint(train: &[SentenceRecord], gsc: &[SentenceRecord]) -> bool {
    overlapping_note_ids(train, gsc).is_empty()
}

/// The sorted note_ids present in both corpora (empty when disjoint).
pub fn overlapping_note_ids(train: &[SentenceRecord], gsc: &[SentenceRecord]) -> Vec<String> {
    let train_ids: HashSet<&str> = train.iter().map(|r| r.note_id.as_str()).collect();
    let mut overlap: Vec<String> = gsc
        .iter()
        .map(|r| r.note_id.as_str())
        .filter(|id| train_ids.contains(id))
        .map(str::to_string)
        .collect();
    overlap.sort();
    overlap.dedup();
    overlap
}

/// Check the record invariants: unique (note_id, sent_id) keys and
/// non-empty text after trimming.
pub fn validate_records(records: &[SentenceRecord]) -> Result<(), CorpusError> {
    let mut seen = HashSet::new();
    for r in records {
        if r.text.trim().is_empty() {
            return Err(CorpusError::EmptyText {
                note_id: r.note_id.clone(),
                sent_id: r.sent_id,
            });
        }
        if !seen.insert((r.note_id.as_str(), r.sent_id)) {
            return Err(CorpusError::DuplicateKey {
                note_id: r.note_id.clone(),
                sent_id: r.sent_id,
            });
        }
    }
    Ok(())
}

fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_text(text: &str, line: usize) -> Result<String, CorpusError> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(CorpusError::Parse {
                    line,
                    msg: format!("bad escape sequence \\{}", other.map(String::from).unwrap_or_default()),
                })
            }
        }
    }
    Ok(out)
}

fn label_field(label: Option<Label>) -> String {
    label.map(|l| l.name().to_string()).unwrap_or_else(|| "-".to_string())
}

fn parse_label_field(field: &str, line: usize) -> Result<Option<Label>, CorpusError> {
    if field == "-" {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|msg| CorpusError::Parse { line, msg })
}

/// Serialize records to the line-delimited format. `header_comments`
/// lines are emitted first, each prefixed with `# `.
pub fn records_to_string(records: &[SentenceRecord], header_comments: &[String]) -> String {
    let mut out = String::new();
    out.push_str("# note_id\tsent_id\ttext\tgold_label\tweak_label\tsource\n");
    for comment in header_comments {
        out.push_str("# ");
        out.push_str(comment);
        out.push('\n');
    }
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.note_id,
            r.sent_id,
            escape_text(&r.text),
            label_field(r.gold_label),
            label_field(r.weak_label),
            r.source,
        ));
    }
    out
}

/// Parse records from the line-delimited format, validating the record
/// invariants. Errors carry 1-based line numbers.
pub fn records_from_str(data: &str) -> Result<Vec<SentenceRecord>, CorpusError> {
    let mut records = Vec::new();
    for (idx, raw) in data.lines().enumerate() {
        let line = idx + 1;
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 6 {
            return Err(CorpusError::Parse {
                line,
                msg: format!("expected 6 tab-separated fields, got {}", fields.len()),
            });
        }
        let sent_id: u32 = fields[1].parse().map_err(|_| CorpusError::Parse {
            line,
            msg: format!("bad sent_id {:?}", fields[1]),
        })?;
        let record = SentenceRecord {
            note_id: fields[0].to_string(),
            sent_id,
            text: unescape_text(fields[2], line)?,
            gold_label: parse_label_field(fields[3], line)?,
            weak_label: parse_label_field(fields[4], line)?,
            source: fields[5]
                .parse()
                .map_err(|msg| CorpusError::Parse { line, msg })?,
        };
        records.push(record);
    }
    validate_records(&records)?;
    Ok(records)
}

pub fn write_records(
    path: &Path,
    records: &[SentenceRecord],
    header_comments: &[String],
) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, records_to_string(records, header_comments))?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<SentenceRecord>, CorpusError> {
    records_from_str(&fs::read_to_string(path)?)
}

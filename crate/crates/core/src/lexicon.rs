//! The rule-based weak labeler: concept-dictionary matching plus
//! negation scoping that maps a sentence to a weak label for each case
//! study.
//!
//! Lexicon files are UTF-8, tab-separated, one line per (concept,
//! surface form): `concept_id <TAB> category <TAB> surface form`.
//! Comment lines start with `#`. A default lexicon ships in the repo
//! under `assets/lexicon.tsv`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{tokenize, CaseStudy, Label};

/// Negation triggers recognized within the scoping window.
pub const NEGATION_TRIGGERS: [&str; 11] = [
    "no", "not", "never", "without", "denies", "didn't", "doesn't", "hasn't", "don't", "stopped",
    "unable",
];

/// Default number of preceding tokens searched for a negation trigger.
pub const DEFAULT_NEGATION_WINDOW: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate surface form {form:?} for concept {concept_id}")]
    Duplicate {
        line: usize,
        concept_id: String,
        form: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Concept category; determines which case study an entry serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Activity,
    Inactivity,
    HighCalorie,
    HighSalt,
    HighFat,
    NormalDiet,
}

impl Category {
    pub fn case_study(self) -> CaseStudy {
        match self {
            Category::Activity | Category::Inactivity => CaseStudy::PhysicalActivity,
            _ => CaseStudy::ExcessDiet,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Activity => "activity",
            Category::Inactivity => "inactivity",
            Category::HighCalorie => "high_calorie",
            Category::HighSalt => "high_salt",
            Category::HighFat => "high_fat",
            Category::NormalDiet => "normal_diet",
        }
    }

    pub fn all() -> [Category; 6] {
        [
            Category::Activity,
            Category::Inactivity,
            Category::HighCalorie,
            Category::HighSalt,
            Category::HighFat,
            Category::NormalDiet,
        ]
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "activity" => Ok(Category::Activity),
            "inactivity" => Ok(Category::Inactivity),
            "high_calorie" => Ok(Category::HighCalorie),
            "high_salt" => Ok(Category::HighSalt),
            "high_fat" => Ok(Category::HighFat),
            "normal_diet" => Ok(Category::NormalDiet),
            other => Err(format!("unknown category: {other:?}")),
        }
    }
}

/// A concept: identifier, category, and its surface forms as lowercase
/// token sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub concept_id: String,
    pub category: Category,
    pub surface_forms: Vec<Vec<String>>,
}

/// One dictionary hit in a sentence, with its token span and negation
/// status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptMatch {
    pub concept_id: String,
    pub category: Category,
    /// Token span [start, end).
    pub start: usize,
    pub end: usize,
    pub negated: bool,
}

#[derive(Debug, Clone)]
struct Pattern {
    tokens: Vec<String>,
    concept_id: String,
    category: Category,
}

/// Immutable concept dictionary indexed for multi-pattern matching.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    /// first token -> patterns sorted by (length desc, concept_id asc),
    /// so the first full match is leftmost-longest with the documented
    /// tie-break.
    index: HashMap<String, Vec<Pattern>>,
}

impl Lexicon {
    /// Build from entries, rejecting duplicate (concept_id, surface form)
    /// pairs. Entries and their forms are stored in canonical sorted
    /// order, so matching behavior and serialization are independent of
    /// input order.
    pub fn from_entries(mut entries: Vec<LexiconEntry>) -> Result<Lexicon, LexiconError> {
        entries.sort_by(|a, b| a.concept_id.cmp(&b.concept_id));
        for entry in &mut entries {
            entry.surface_forms.sort();
        }
        let mut seen: HashMap<(String, Vec<String>), ()> = HashMap::new();
        let mut index: HashMap<String, Vec<Pattern>> = HashMap::new();
        for entry in &entries {
            if entry.surface_forms.is_empty() {
                return Err(LexiconError::Parse {
                    line: 0,
                    msg: format!("concept {} has no surface forms", entry.concept_id),
                });
            }
            for form in &entry.surface_forms {
                if form.is_empty() || form.iter().any(|t| t.is_empty()) {
                    return Err(LexiconError::Parse {
                        line: 0,
                        msg: format!("concept {} has an empty surface form", entry.concept_id),
                    });
                }
                if seen
                    .insert((entry.concept_id.clone(), form.clone()), ())
                    .is_some()
                {
                    return Err(LexiconError::Duplicate {
                        line: 0,
                        concept_id: entry.concept_id.clone(),
                        form: form.join(" "),
                    });
                }
                index
                    .entry(form[0].clone())
                    .or_default()
                    .push(Pattern {
                        tokens: form.clone(),
                        concept_id: entry.concept_id.clone(),
                        category: entry.category,
                    });
            }
        }
        for bucket in index.values_mut() {
            bucket.sort_by(|a, b| {
                b.tokens
                    .len()
                    .cmp(&a.tokens.len())
                    .then_with(|| a.concept_id.cmp(&b.concept_id))
            });
        }
        Ok(Lexicon { entries, index })
    }

    /// Parse the tab-separated lexicon format. Surface forms are passed
    /// through the sentence tokenizer so they live in the same token
    /// space as the text they match.
    pub fn parse(data: &str) -> Result<Lexicon, LexiconError> {
        let mut categories: HashMap<String, (Category, usize)> = HashMap::new();
        let mut forms: Vec<(String, Category, Vec<String>, usize)> = Vec::new();
        for (idx, raw) in data.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 3 {
                return Err(LexiconError::Parse {
                    line,
                    msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let concept_id = fields[0].trim().to_string();
            if concept_id.is_empty() {
                return Err(LexiconError::Parse {
                    line,
                    msg: "empty concept id".into(),
                });
            }
            let category: Category = fields[1]
                .trim()
                .parse()
                .map_err(|msg| LexiconError::Parse { line, msg })?;
            if let Some(&(prev, prev_line)) = categories.get(&concept_id).as_deref() {
                if prev != category {
                    return Err(LexiconError::Parse {
                        line,
                        msg: format!(
                            "concept {concept_id} already declared with category {prev} at line {prev_line}"
                        ),
                    });
                }
            } else {
                categories.insert(concept_id.clone(), (category, line));
            }
            let form_tokens = tokenize(fields[2]);
            if form_tokens.is_empty() {
                return Err(LexiconError::Parse {
                    line,
                    msg: "empty surface form".into(),
                });
            }
            if forms
                .iter()
                .any(|(cid, _, f, _)| *cid == concept_id && *f == form_tokens)
            {
                return Err(LexiconError::Duplicate {
                    line,
                    concept_id,
                    form: form_tokens.join(" "),
                });
            }
            forms.push((concept_id, category, form_tokens, line));
        }
        let mut grouped: HashMap<String, LexiconEntry> = HashMap::new();
        for (cid, category, form, _) in forms {
            grouped
                .entry(cid.clone())
                .or_insert_with(|| LexiconEntry {
                    concept_id: cid,
                    category,
                    surface_forms: Vec::new(),
                })
                .surface_forms
                .push(form);
        }
        Lexicon::from_entries(grouped.into_values().collect())
    }

    pub fn load(path: &Path) -> Result<Lexicon, LexiconError> {
        Lexicon::parse(&fs::read_to_string(path)?)
    }

    /// The shipped default lexicon.
    pub fn builtin() -> Lexicon {
        Lexicon::parse(crate::builtin::LEXICON_TSV).expect("builtin lexicon parses")
    }

    /// Serialize back to the tab-separated format (sorted by concept id
    /// and form, comments dropped).
    pub fn to_tsv(&self) -> String {
        let mut lines = Vec::new();
        for entry in &self.entries {
            for form in &entry.surface_forms {
                lines.push(format!(
                    "{}\t{}\t{}",
                    entry.concept_id,
                    entry.category,
                    form.join(" ")
                ));
            }
        }
        lines.join("\n") + "\n"
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    /// Number of concepts.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_forms(&self) -> usize {
        self.entries.iter().map(|e| e.surface_forms.len()).sum()
    }
}

/// Leftmost-longest non-overlapping dictionary matching over token
/// boundaries. Ties between equal-length patterns at the same start are
/// broken by lexicographically smallest concept_id. Matches are returned
/// with `negated` unset (false); see [`detect_negation`].
pub fn match_concepts(tokens: &[String], lexicon: &Lexicon) -> Vec<ConceptMatch> {
    let mut matches = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let hit = lexicon.index.get(&tokens[i]).and_then(|bucket| {
            bucket.iter().find(|p| {
                p.tokens.len() <= tokens.len() - i
                    && tokens[i..i + p.tokens.len()] == p.tokens[..]
            })
        });
        if let Some(p) = hit {
            matches.push(ConceptMatch {
                concept_id: p.concept_id.clone(),
                category: p.category,
                start: i,
                end: i + p.tokens.len(),
                negated: false,
            });
            i += p.tokens.len();
        } else {
            i += 1;
        }
    }
    matches
}

fn is_terminal_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| matches!(c, '.' | '!' | '?'))
}

/// True iff a negation trigger occurs within `window` tokens immediately
/// preceding the match start, with no intervening sentence-final
/// punctuation token.
pub fn detect_negation(tokens: &[String], m: &ConceptMatch, window: usize) -> bool {
    let lo = m.start.saturating_sub(window);
    for j in (lo..m.start).rev() {
        let t = tokens[j].as_str();
        if is_terminal_token(t) {
            return false;
        }
        if NEGATION_TRIGGERS.contains(&t) {
            return true;
        }
    }
    false
}

/// Dictionary matches with negation status resolved.
pub fn annotate(tokens: &[String], lexicon: &Lexicon, window: usize) -> Vec<ConceptMatch> {
    let mut matches = match_concepts(tokens, lexicon);
    for m in &mut matches {
        m.negated = detect_negation(tokens, m, window);
    }
    matches
}

/// Map a tokenized sentence to a weak label for the given case study, or
/// `None` when the sentence carries no concept of that case study.
///
/// Physical activity: any non-negated activity match wins; otherwise a
/// negated activity match or any inactivity match yields inactivity.
/// Excess diet: affirmed high-calorie > high-salt > high-fat; if only
/// normal-diet or only negated diet matches remain, normal/none.
pub fn weak_label(
    tokens: &[String],
    lexicon: &Lexicon,
    case_study: CaseStudy,
    window: usize,
) -> Option<Label> {
    let matches = annotate(tokens, lexicon, window);
    match case_study {
        CaseStudy::PhysicalActivity => {
            let affirmed_activity = matches
                .iter()
                .any(|m| m.category == Category::Activity && !m.negated);
            let negated_activity = matches
                .iter()
                .any(|m| m.category == Category::Activity && m.negated);
            let any_inactivity = matches.iter().any(|m| m.category == Category::Inactivity);
            if affirmed_activity {
                Some(Label::Activity)
            } else if negated_activity || any_inactivity {
                Some(Label::Inactivity)
            } else {
                None
            }
        }
        CaseStudy::ExcessDiet => {
            let affirmed = |cat: Category| matches.iter().any(|m| m.category == cat && !m.negated);
            let any_diet = matches
                .iter()
                .any(|m| m.category.case_study() == CaseStudy::ExcessDiet);
            if affirmed(Category::HighCalorie) {
                Some(Label::HighCalorie)
            } else if affirmed(Category::HighSalt) {
                Some(Label::HighSalt)
            } else if affirmed(Category::HighFat) {
                Some(Label::HighFat)
            } else if any_diet {
                Some(Label::NormalNone)
            } else {
                None
            }
        }
    }
}

/// Convenience: tokenize then weak-label raw sentence text.
pub fn weak_label_text(
    text: &str,
    lexicon: &Lexicon,
    case_study: CaseStudy,
    window: usize,
) -> Option<Label> {
    weak_label(&tokenize(text), lexicon, case_study, window)
}

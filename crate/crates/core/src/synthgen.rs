//! Template-driven synthetic corpus generation with known gold labels,
//! matched to the published class distributions, plus controlled
//! weak-label noise. Stands in for the private clinical data.
//!
//! Template files are UTF-8 structured text, one template per block:
//!
//! ```text
//! class: activity
//! pattern: {subject} {verb} {concept} {tail}
//! subject: Pt | Patient | He
//! verb: reports | maintains
//! concept: daily exercise | swimming
//! tail: every day. | most days.
//! ```
//!
//! Blocks are separated by blank lines; `#` lines are comments. Each
//! `{slot}` is drawn uniformly (one draw per slot per sentence, in order
//! of first appearance in the pattern).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{tokenize, CaseStudy, Label, SentenceRecord, Source};
use crate::lexicon::{weak_label, Lexicon};
use crate::rng::{derive_seed, SeededRng};

/// Sentences grouped per synthetic note.
pub const SENTS_PER_NOTE: usize = 5;

const STREAM_TRAIN: u64 = 1;
const STREAM_GSC: u64 = 2;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("class {class} has a nonzero count but no template")]
    TemplateMissing { class: Label },
    #[error("record (note_id={note_id}, sent_id={sent_id}) is missing a gold label")]
    MissingGold { note_id: String, sent_id: u32 },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("template for class {expected} labels as {got:?}: {text:?}")]
    LabelerMismatch {
        expected: Label,
        got: Option<Label>,
        text: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One sentence template: a class, a pattern with named slots, and the
/// filler list for each slot (kept in order of first appearance).
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub class: Label,
    pub pattern: String,
    pub slots: Vec<(String, Vec<String>)>,
}

impl Template {
    /// Instantiate with one uniform draw per slot. Never produces an
    /// empty slot: fillers are validated non-empty at parse time.
    pub fn instantiate(&self, rng: &mut SeededRng) -> String {
        let mut text = self.pattern.clone();
        for (name, fillers) in &self.slots {
            let value = &fillers[rng.below(fillers.len())];
            text = text.replace(&format!("{{{name}}}"), value);
        }
        text
    }

    /// Total number of distinct instantiations.
    pub fn combinations(&self) -> usize {
        self.slots.iter().map(|(_, f)| f.len()).product()
    }
}

/// Templates grouped by class.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    by_class: BTreeMap<Label, Vec<Template>>,
}

fn slot_names_in_pattern(pattern: &str) -> Result<Vec<String>, String> {
    let mut names = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| format!("unclosed '{{' in pattern {pattern:?}"))?;
        let name = &after[..close];
        if name.is_empty() {
            return Err(format!("empty slot name in pattern {pattern:?}"));
        }
        if !names.iter().any(|n| n == name) {
            names.push(name.to_string());
        }
        rest = &after[close + 1..];
    }
    Ok(names)
}

impl TemplateSet {
    pub fn parse(data: &str) -> Result<TemplateSet, SynthError> {
        let mut by_class: BTreeMap<Label, Vec<Template>> = BTreeMap::new();
        // collect blocks of (line_no, key, value)
        let mut block: Vec<(usize, String, String)> = Vec::new();
        let mut flush = |block: &mut Vec<(usize, String, String)>| -> Result<(), SynthError> {
            if block.is_empty() {
                return Ok(());
            }
            let first_line = block[0].0;
            let mut class: Option<Label> = None;
            let mut pattern: Option<String> = None;
            let mut slots: Vec<(String, Vec<String>)> = Vec::new();
            for (line, key, value) in block.drain(..) {
                match key.as_str() {
                    "class" => {
                        class = Some(value.parse().map_err(|msg| SynthError::Parse { line, msg })?)
                    }
                    "pattern" => pattern = Some(value),
                    slot => {
                        let fillers: Vec<String> =
                            value.split('|').map(|f| f.trim().to_string()).collect();
                        if fillers.iter().any(String::is_empty) {
                            return Err(SynthError::Parse {
                                line,
                                msg: format!("slot {slot:?} has an empty filler"),
                            });
                        }
                        if slots.iter().any(|(n, _)| n == slot) {
                            return Err(SynthError::Parse {
                                line,
                                msg: format!("slot {slot:?} defined twice"),
                            });
                        }
                        slots.push((slot.to_string(), fillers));
                    }
                }
            }
            let class = class.ok_or(SynthError::Parse {
                line: first_line,
                msg: "block is missing a class line".into(),
            })?;
            let pattern = pattern.ok_or(SynthError::Parse {
                line: first_line,
                msg: "block is missing a pattern line".into(),
            })?;
            let used = slot_names_in_pattern(&pattern)
                .map_err(|msg| SynthError::Parse { line: first_line, msg })?;
            for name in &used {
                if !slots.iter().any(|(n, _)| n == name) {
                    return Err(SynthError::Parse {
                        line: first_line,
                        msg: format!("pattern uses undefined slot {name:?}"),
                    });
                }
            }
            for (name, _) in &slots {
                if !used.iter().any(|n| n == name) {
                    return Err(SynthError::Parse {
                        line: first_line,
                        msg: format!("slot {name:?} is defined but unused"),
                    });
                }
            }
            // order slots by first appearance in the pattern (draw order)
            let ordered: Vec<(String, Vec<String>)> = used
                .iter()
                .map(|n| slots.iter().find(|(s, _)| s == n).unwrap().clone())
                .collect();
            by_class
                .entry(class)
                .or_default()
                .push(Template { class, pattern, slots: ordered });
            Ok(())
        };

        for (idx, raw) in data.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.starts_with('#') {
                continue;
            }
            if trimmed.is_empty() {
                flush(&mut block)?;
                continue;
            }
            match trimmed.split_once(':') {
                Some((key, value)) => {
                    block.push((line, key.trim().to_string(), value.trim().to_string()))
                }
                None => {
                    return Err(SynthError::Parse {
                        line,
                        msg: format!("expected 'key: value', got {trimmed:?}"),
                    })
                }
            }
        }
        flush(&mut block)?;
        Ok(TemplateSet { by_class })
    }

    pub fn load(path: &Path) -> Result<TemplateSet, SynthError> {
        TemplateSet::parse(&fs::read_to_string(path)?)
    }

    /// Shipped templates for a case study.
    pub fn builtin(case_study: CaseStudy) -> TemplateSet {
        let data = match case_study {
            CaseStudy::PhysicalActivity => crate::builtin::PA_TEMPLATES,
            CaseStudy::ExcessDiet => crate::builtin::DIET_TEMPLATES,
        };
        TemplateSet::parse(data).expect("builtin templates parse")
    }

    pub fn for_class(&self, class: Label) -> &[Template] {
        self.by_class.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn classes(&self) -> Vec<Label> {
        self.by_class.keys().copied().collect()
    }

    pub fn all(&self) -> impl Iterator<Item = &Template> {
        self.by_class.values().flatten()
    }
}

/// Generator settings. `noise_rate` is recorded here but applied by the
/// labeling stage (see [`inject_noise`]); generation itself emits gold
/// labels only.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub case_study: CaseStudy,
    pub per_class_counts: BTreeMap<Label, usize>,
    pub gsc_counts: BTreeMap<Label, usize>,
    pub noise_rate: f64,
    pub seed: u64,
    pub template_file: PathBuf,
}

impl GeneratorConfig {
    /// Published physical-activity distribution: 22,785 activity /
    /// 777 inactivity training sentences; GSC 78 / 122.
    pub fn pa_paper_defaults(seed: u64, template_file: PathBuf) -> GeneratorConfig {
        GeneratorConfig {
            case_study: CaseStudy::PhysicalActivity,
            per_class_counts: BTreeMap::from([
                (Label::Activity, 22_785),
                (Label::Inactivity, 777),
            ]),
            gsc_counts: BTreeMap::from([(Label::Activity, 78), (Label::Inactivity, 122)]),
            noise_rate: 0.05,
            seed,
            template_file,
        }
    }

    /// Published excessive-diet distribution: training 302 high-calorie,
    /// 133 high-fat, 153 high-salt, 300 normal/none; GSC 18/20/20/70.
    pub fn diet_paper_defaults(seed: u64, template_file: PathBuf) -> GeneratorConfig {
        GeneratorConfig {
            case_study: CaseStudy::ExcessDiet,
            per_class_counts: BTreeMap::from([
                (Label::HighCalorie, 302),
                (Label::HighFat, 133),
                (Label::HighSalt, 153),
                (Label::NormalNone, 300),
            ]),
            gsc_counts: BTreeMap::from([
                (Label::HighCalorie, 18),
                (Label::HighFat, 20),
                (Label::HighSalt, 20),
                (Label::NormalNone, 70),
            ]),
            noise_rate: 0.05,
            seed,
            template_file,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(SynthError::InvalidConfig(format!(
                "noise_rate {} not in [0, 1]",
                self.noise_rate
            )));
        }
        for counts in [&self.per_class_counts, &self.gsc_counts] {
            for label in counts.keys() {
                if label.case_study() != self.case_study {
                    return Err(SynthError::InvalidConfig(format!(
                        "label {label} does not belong to case study {}",
                        self.case_study
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Scale a count map by `factor`, keeping every nonzero class at >= 1.
pub fn scale_counts(counts: &BTreeMap<Label, usize>, factor: f64) -> BTreeMap<Label, usize> {
    counts
        .iter()
        .map(|(&label, &c)| {
            let scaled = (c as f64 * factor).round() as usize;
            (label, if c > 0 { scaled.max(1) } else { 0 })
        })
        .collect()
}

fn expand(
    templates: &TemplateSet,
    case_study: CaseStudy,
    counts: &BTreeMap<Label, usize>,
    note_prefix: &str,
    rng: &mut SeededRng,
) -> Result<Vec<SentenceRecord>, SynthError> {
    for (&label, &count) in counts {
        if count > 0 && templates.for_class(label).is_empty() {
            return Err(SynthError::TemplateMissing { class: label });
        }
    }
    // class slots in inventory order, then shuffled so notes mix classes
    let mut slots: Vec<Label> = Vec::new();
    for &label in case_study.classes() {
        let count = counts.get(&label).copied().unwrap_or(0);
        slots.extend(std::iter::repeat(label).take(count));
    }
    rng.shuffle(&mut slots);

    let mut records = Vec::with_capacity(slots.len());
    for (i, &label) in slots.iter().enumerate() {
        let choices = templates.for_class(label);
        let template = &choices[rng.below(choices.len())];
        let text = template.instantiate(rng);
        records.push(SentenceRecord {
            note_id: format!("{}{:06}", note_prefix, i / SENTS_PER_NOTE),
            sent_id: (i % SENTS_PER_NOTE) as u32,
            text,
            gold_label: Some(label),
            weak_label: None,
            source: Source::Synthetic,
        });
    }
    Ok(records)
}

/// Generate (train, gsc) with exact per-class counts and gold labels.
/// Train note ids use prefix `t`, GSC note ids prefix `g`, so the two
/// corpora are note-disjoint by construction. Deterministic under the
/// config seed (train draws from stream 1, GSC from stream 2).
pub fn generate_with(
    templates: &TemplateSet,
    config: &GeneratorConfig,
) -> Result<(Vec<SentenceRecord>, Vec<SentenceRecord>), SynthError> {
    config.validate()?;
    let mut train_rng = SeededRng::new(derive_seed(config.seed, STREAM_TRAIN));
    let train = expand(
        templates,
        config.case_study,
        &config.per_class_counts,
        "t",
        &mut train_rng,
    )?;
    let mut gsc_rng = SeededRng::new(derive_seed(config.seed, STREAM_GSC));
    let gsc = expand(templates, config.case_study, &config.gsc_counts, "g", &mut gsc_rng)?;
    Ok((train, gsc))
}

/// Generate using the template file named in the config.
pub fn generate_corpus(
    config: &GeneratorConfig,
) -> Result<(Vec<SentenceRecord>, Vec<SentenceRecord>), SynthError> {
    let templates = TemplateSet::load(&config.template_file)?;
    generate_with(&templates, config)
}

/// Set each record's weak label to its gold label with probability
/// `1 - noise_rate`, otherwise to a uniformly random different class of
/// the same case study. Gold labels are untouched. Deterministic under
/// the seed.
pub fn inject_noise(
    records: &mut [SentenceRecord],
    noise_rate: f64,
    seed: u64,
) -> Result<(), SynthError> {
    if !(0.0..=1.0).contains(&noise_rate) {
        return Err(SynthError::InvalidConfig(format!(
            "noise_rate {noise_rate} not in [0, 1]"
        )));
    }
    let mut rng = SeededRng::new(seed);
    for record in records.iter_mut() {
        let gold = record.gold_label.ok_or_else(|| SynthError::MissingGold {
            note_id: record.note_id.clone(),
            sent_id: record.sent_id,
        })?;
        let flip = rng.uniform() < noise_rate;
        record.weak_label = if flip {
            let others: Vec<Label> = gold
                .case_study()
                .classes()
                .iter()
                .copied()
                .filter(|&l| l != gold)
                .collect();
            Some(others[rng.below(others.len())])
        } else {
            Some(gold)
        };
    }
    Ok(())
}

/// Exhaustively check that every instantiation of every template
/// reproduces its class through the rule labeler — the generator/labeler
/// consistency hinge.
pub fn verify_templates(
    templates: &TemplateSet,
    lexicon: &Lexicon,
    window: usize,
) -> Result<(), SynthError> {
    for template in templates.all() {
        let case = template.class.case_study();
        let radices: Vec<usize> = template.slots.iter().map(|(_, f)| f.len()).collect();
        let mut indices = vec![0usize; radices.len()];
        loop {
            let mut text = template.pattern.clone();
            for ((name, fillers), &pick) in template.slots.iter().zip(&indices) {
                text = text.replace(&format!("{{{name}}}"), &fillers[pick]);
            }
            let got = weak_label(&tokenize(&text), lexicon, case, window);
            if got != Some(template.class) {
                return Err(SynthError::LabelerMismatch {
                    expected: template.class,
                    got,
                    text,
                });
            }
            // advance mixed-radix counter
            let mut done = true;
            for i in (0..indices.len()).rev() {
                indices[i] += 1;
                if indices[i] < radices[i] {
                    done = false;
                    break;
                }
                indices[i] = 0;
            }
            if done || indices.is_empty() {
                break;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::check_disjoint;
    use crate::lexicon::DEFAULT_NEGATION_WINDOW;

    fn tiny_templates() -> TemplateSet {
        TemplateSet::parse(
            "class: activity\npattern: {s} enjoys walking {t}\ns: Pt | He\nt: daily. | weekly.\n\n\
             class: inactivity\npattern: {s} is sedentary now.\ns: Pt | She\n",
        )
        .unwrap()
    }

    #[test]
    fn parse_counts_blocks_and_slots() {
        let set = tiny_templates();
        assert_eq!(set.for_class(Label::Activity).len(), 1);
        assert_eq!(set.for_class(Label::Inactivity).len(), 1);
        assert_eq!(set.for_class(Label::Activity)[0].combinations(), 4);
    }

    #[test]
    fn parse_rejects_undefined_slot() {
        let err = TemplateSet::parse("class: activity\npattern: {who} walks\n").unwrap_err();
        assert!(matches!(err, SynthError::Parse { .. }));
    }

    #[test]
    fn parse_rejects_unused_slot_and_empty_filler() {
        assert!(TemplateSet::parse(
            "class: activity\npattern: he walks\nextra: a | b\n"
        )
        .is_err());
        assert!(TemplateSet::parse(
            "class: activity\npattern: {s} walks\ns: a || b\n"
        )
        .is_err());
    }

    #[test]
    fn parse_rejects_missing_class_or_pattern() {
        assert!(TemplateSet::parse("pattern: he walks\n").is_err());
        assert!(TemplateSet::parse("class: activity\n").is_err());
    }

    #[test]
    fn builtin_templates_parse_and_cover_all_classes() {
        let pa = TemplateSet::builtin(CaseStudy::PhysicalActivity);
        for &label in CaseStudy::PhysicalActivity.classes() {
            assert!(!pa.for_class(label).is_empty(), "no templates for {label}");
        }
        let diet = TemplateSet::builtin(CaseStudy::ExcessDiet);
        for &label in CaseStudy::ExcessDiet.classes() {
            assert!(!diet.for_class(label).is_empty(), "no templates for {label}");
        }
    }

    /// The end-to-end hinge: every instantiation of every shipped
    /// template reproduces its gold class through the rule labeler.
    #[test]
    fn builtin_templates_are_labeler_consistent() {
        let lexicon = Lexicon::builtin();
        for case in [CaseStudy::PhysicalActivity, CaseStudy::ExcessDiet] {
            let templates = TemplateSet::builtin(case);
            verify_templates(&templates, &lexicon, DEFAULT_NEGATION_WINDOW).unwrap();
        }
    }

    fn config_with(counts: &[(Label, usize)], gsc: &[(Label, usize)], seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            case_study: counts[0].0.case_study(),
            per_class_counts: counts.iter().copied().collect(),
            gsc_counts: gsc.iter().copied().collect(),
            noise_rate: 0.0,
            seed,
            template_file: PathBuf::new(),
        }
    }

    #[test]
    fn generate_exact_counts() {
        let templates = tiny_templates();
        let cfg = config_with(
            &[(Label::Activity, 2), (Label::Inactivity, 1)],
            &[(Label::Activity, 1), (Label::Inactivity, 1)],
            7,
        );
        let (train, gsc) = generate_with(&templates, &cfg).unwrap();
        assert_eq!(train.len(), 3);
        assert_eq!(gsc.len(), 2);
        let n_act = train
            .iter()
            .filter(|r| r.gold_label == Some(Label::Activity))
            .count();
        assert_eq!(n_act, 2);
        assert!(train.iter().all(|r| r.gold_label.is_some()));
    }

    #[test]
    fn generate_is_deterministic() {
        let templates = tiny_templates();
        let cfg = config_with(
            &[(Label::Activity, 20), (Label::Inactivity, 10)],
            &[(Label::Activity, 5), (Label::Inactivity, 5)],
            123,
        );
        let (t1, g1) = generate_with(&templates, &cfg).unwrap();
        let (t2, g2) = generate_with(&templates, &cfg).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn generate_missing_template_errors() {
        let templates =
            TemplateSet::parse("class: activity\npattern: {s} walks daily.\ns: Pt | He\n").unwrap();
        let cfg = config_with(
            &[(Label::Activity, 1), (Label::Inactivity, 1)],
            &[],
            7,
        );
        let err = generate_with(&templates, &cfg).unwrap_err();
        assert!(matches!(
            err,
            SynthError::TemplateMissing { class: Label::Inactivity }
        ));
    }

    #[test]
    fn default_diet_config_disjoint_and_exact_histogram() {
        let templates = TemplateSet::builtin(CaseStudy::ExcessDiet);
        let cfg = GeneratorConfig {
            template_file: PathBuf::new(),
            ..GeneratorConfig::diet_paper_defaults(11, PathBuf::new())
        };
        let (train, gsc) = generate_with(&templates, &cfg).unwrap();
        assert!(check_disjoint(&train, &gsc));
        // brute-force histogram
        let mut hist: BTreeMap<Label, usize> = BTreeMap::new();
        for r in &train {
            *hist.entry(r.gold_label.unwrap()).or_insert(0) += 1;
        }
        assert_eq!(hist, cfg.per_class_counts);
        let mut gsc_hist: BTreeMap<Label, usize> = BTreeMap::new();
        for r in &gsc {
            *gsc_hist.entry(r.gold_label.unwrap()).or_insert(0) += 1;
        }
        assert_eq!(gsc_hist, cfg.gsc_counts);
        assert_eq!(train.len(), 888);
        assert_eq!(gsc.len(), 128);
    }

    #[test]
    fn instantiation_never_leaves_slots_or_empty_text() {
        for case in [CaseStudy::PhysicalActivity, CaseStudy::ExcessDiet] {
            let templates = TemplateSet::builtin(case);
            let mut rng = SeededRng::new(5);
            for template in templates.all() {
                for _ in 0..20 {
                    let text = template.instantiate(&mut rng);
                    assert!(!text.trim().is_empty());
                    assert!(!text.contains('{') && !text.contains('}'), "{text}");
                }
            }
        }
    }

    #[test]
    fn noise_zero_copies_gold() {
        let templates = tiny_templates();
        let cfg = config_with(
            &[(Label::Activity, 50), (Label::Inactivity, 50)],
            &[],
            3,
        );
        let (mut train, _) = generate_with(&templates, &cfg).unwrap();
        inject_noise(&mut train, 0.0, 9).unwrap();
        assert!(train.iter().all(|r| r.weak_label == r.gold_label));
    }

    #[test]
    fn noise_one_flips_every_binary_label() {
        let templates = tiny_templates();
        let cfg = config_with(
            &[(Label::Activity, 30), (Label::Inactivity, 30)],
            &[],
            3,
        );
        let (mut train, _) = generate_with(&templates, &cfg).unwrap();
        inject_noise(&mut train, 1.0, 9).unwrap();
        assert!(train
            .iter()
            .all(|r| r.weak_label.is_some() && r.weak_label != r.gold_label));
    }

    #[test]
    fn noise_rate_observed_within_binomial_bound() {
        let templates = tiny_templates();
        let cfg = config_with(
            &[(Label::Activity, 5000), (Label::Inactivity, 5000)],
            &[],
            3,
        );
        let (mut train, _) = generate_with(&templates, &cfg).unwrap();
        inject_noise(&mut train, 0.1, 77).unwrap();
        let flips = train
            .iter()
            .filter(|r| r.weak_label != r.gold_label)
            .count() as f64;
        let fraction = flips / train.len() as f64;
        assert!((fraction - 0.1).abs() <= 0.01, "flip fraction {fraction}");
    }

    #[test]
    fn noise_requires_gold_labels() {
        let mut records = vec![SentenceRecord {
            note_id: "n".into(),
            sent_id: 0,
            text: "x".into(),
            gold_label: None,
            weak_label: None,
            source: Source::Synthetic,
        }];
        assert!(matches!(
            inject_noise(&mut records, 0.1, 0),
            Err(SynthError::MissingGold { .. })
        ));
    }

    #[test]
    fn scale_counts_rounds_and_keeps_nonzero() {
        let counts = BTreeMap::from([
            (Label::HighCalorie, 302),
            (Label::HighFat, 133),
            (Label::HighSalt, 153),
            (Label::NormalNone, 300),
        ]);
        let half = scale_counts(&counts, 0.5);
        assert_eq!(half[&Label::HighCalorie], 151);
        assert_eq!(half[&Label::HighFat], 67);
        assert_eq!(half[&Label::HighSalt], 77);
        assert_eq!(half[&Label::NormalNone], 150);
        let tiny = scale_counts(&BTreeMap::from([(Label::Activity, 3)]), 0.01);
        assert_eq!(tiny[&Label::Activity], 1);
    }

    #[test]
    fn generated_corpus_is_labeler_consistent() {
        let lexicon = Lexicon::builtin();
        for case in [CaseStudy::PhysicalActivity, CaseStudy::ExcessDiet] {
            let templates = TemplateSet::builtin(case);
            let counts: BTreeMap<Label, usize> =
                case.classes().iter().map(|&l| (l, 300)).collect();
            let cfg = GeneratorConfig {
                case_study: case,
                per_class_counts: counts,
                gsc_counts: BTreeMap::new(),
                noise_rate: 0.0,
                seed: 21,
                template_file: PathBuf::new(),
            };
            let (train, _) = generate_with(&templates, &cfg).unwrap();
            for r in &train {
                let got = weak_label(
                    &tokenize(&r.text),
                    &lexicon,
                    case,
                    DEFAULT_NEGATION_WINDOW,
                );
                assert_eq!(got, r.gold_label, "text: {}", r.text);
            }
        }
    }
}

//! The pipeline stages. Each subcommand reads its upstream artifacts,
//! writes its outputs under the out dir, and stamps the config digest
//! into everything it writes.
//!
//! Stage seeds cascade from the single config seed via documented
//! streams (`lifetag_core::rng::derive_seed`): generation 11, label
//! noise 12, split 13, training 14. Training derives its own init,
//! shuffle and dropout streams from its stage seed.

use std::collections::BTreeMap;
use std::path::Path;

use lifetag_core::corpus::{
    encode, read_records, split_corpus, tokenize, write_records, CaseStudy, EncodedSentence,
    SentenceRecord, Vocab,
};
use lifetag_core::eval::{self, RunMetadata};
use lifetag_core::lexicon::{weak_label, Lexicon};
use lifetag_core::model::{
    self, load_checkpoint, save_checkpoint, ModelConfig, TrainConfig, TrainHistory,
};
use lifetag_core::rng::derive_seed;
use lifetag_core::synthgen::{generate_with, inject_noise, GeneratorConfig, TemplateSet};

use crate::config::{file_digest, ResolvedConfig};
use crate::error::CliError;

const STAGE_GEN: u64 = 11;
const STAGE_NOISE: u64 = 12;
const STAGE_SPLIT: u64 = 13;
const STAGE_TRAIN: u64 = 14;

fn digest_header(config: &ResolvedConfig, stage: &str) -> Vec<String> {
    vec![
        format!("config_digest: {}", config.digest()),
        format!("stage: {stage}"),
        format!("seed: {}", config.seed),
    ]
}

/// Step 1: generate the synthetic training corpus and GSC with gold
/// labels and disjoint note ids.
pub fn cmd_gen(config: &ResolvedConfig) -> Result<(), CliError> {
    let templates = TemplateSet::load(&config.templates_path)?;
    let gen = GeneratorConfig {
        case_study: config.case_study,
        per_class_counts: config.train_label_counts()?,
        gsc_counts: config.gsc_label_counts()?,
        noise_rate: config.noise_rate,
        seed: derive_seed(config.seed, STAGE_GEN),
        template_file: config.templates_path.clone(),
    };
    let (train, gsc) = generate_with(&templates, &gen)?;
    write_records(&config.train_gold_path(), &train, &digest_header(config, "gen"))?;
    write_records(&config.gsc_path(), &gsc, &digest_header(config, "gen"))?;
    eprintln!(
        "gen: wrote {} training and {} GSC sentences under {}",
        train.len(),
        gsc.len(),
        config.corpus_dir().display()
    );
    Ok(())
}

/// Step 2: assign weak labels with the rule-based labeler. Sentences the
/// labeler cannot assign (no concept of this case study) are excluded
/// from the training corpus. When `noise_rate > 0` and gold labels are
/// present, labels are then perturbed at that rate to emulate an
/// imperfect labeler at a controlled noise level.
pub fn cmd_label(config: &ResolvedConfig, corpus: Option<&Path>) -> Result<(), CliError> {
    let input = corpus
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.train_gold_path());
    let records = read_records(&input)?;
    let lexicon = Lexicon::load(&config.lexicon_path)?;
    let total = records.len();
    let mut labeled: Vec<SentenceRecord> = Vec::with_capacity(total);
    for mut record in records {
        let label = weak_label(
            &tokenize(&record.text),
            &lexicon,
            config.case_study,
            config.negation_window,
        );
        if let Some(label) = label {
            record.weak_label = Some(label);
            labeled.push(record);
        }
    }
    if config.noise_rate > 0.0 {
        if labeled.iter().any(|r| r.gold_label.is_none()) {
            return Err(CliError::Data(
                "noise_rate > 0 requires gold labels on every record".into(),
            ));
        }
        inject_noise(
            &mut labeled,
            config.noise_rate,
            derive_seed(config.seed, STAGE_NOISE),
        )?;
    }
    write_records(&config.train_weak_path(), &labeled, &digest_header(config, "label"))?;
    eprintln!(
        "label: {} of {total} sentences weak-labeled (noise_rate {})",
        labeled.len(),
        config.noise_rate
    );
    Ok(())
}

/// Step 3: deterministic shuffle-split of the weak-labeled corpus into
/// train and validation files.
pub fn cmd_split(config: &ResolvedConfig, corpus: Option<&Path>) -> Result<(), CliError> {
    let input = corpus
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.train_weak_path());
    let records = read_records(&input)?;
    let (train, valid) = split_corpus(
        &records,
        config.train.train_fraction,
        derive_seed(config.seed, STAGE_SPLIT),
    )?;
    write_records(&config.train_split_path(), &train, &digest_header(config, "split"))?;
    write_records(&config.valid_split_path(), &valid, &digest_header(config, "split"))?;
    eprintln!("split: {} train / {} validation", train.len(), valid.len());
    Ok(())
}

fn encode_with_weak_labels(
    records: &[SentenceRecord],
    vocab: &Vocab,
    max_len: usize,
    case_study: CaseStudy,
) -> Result<Vec<EncodedSentence>, CliError> {
    records
        .iter()
        .map(|r| {
            let label = r.weak_label.ok_or_else(|| {
                CliError::Data(format!(
                    "record (note_id={}, sent_id={}) has no weak label; run the label stage first",
                    r.note_id, r.sent_id
                ))
            })?;
            if label.case_study() != case_study {
                return Err(CliError::Data(format!(
                    "record (note_id={}, sent_id={}) is labeled {label}, not a {case_study} class",
                    r.note_id, r.sent_id
                )));
            }
            let mut enc = encode(&tokenize(&r.text), vocab, max_len);
            enc.label_id = Some(label.class_id() as u32);
            Ok(enc)
        })
        .collect()
}

/// Step 4: build the vocabulary from the training split only, train the
/// classifier on weak labels, select the best validation epoch, and
/// write the checkpoint plus a history file.
pub fn cmd_train(
    config: &ResolvedConfig,
    train_path: Option<&Path>,
    valid_path: Option<&Path>,
) -> Result<(), CliError> {
    let train_path = train_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.train_split_path());
    let valid_path = valid_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.valid_split_path());
    let train_records = read_records(&train_path)?;
    let valid_records = read_records(&valid_path)?;

    let train_tokens: Vec<Vec<String>> = train_records
        .iter()
        .map(|r| tokenize(&r.text))
        .collect();
    let vocab = Vocab::build(train_tokens.iter().map(Vec::as_slice));

    let model_config = ModelConfig {
        vocab_size: vocab.len(),
        max_len: config.model.max_len,
        embed_dim: config.model.embed_dim,
        num_layers: config.model.num_layers,
        num_heads: config.model.num_heads,
        ff_dim: config.model.ff_dim,
        num_classes: config.case_study.classes().len(),
        dropout_rate: config.model.dropout_rate,
        arch: config.model.arch,
    };
    model_config.validate()?;
    let train_config = TrainConfig {
        epochs: config.train.epochs,
        learning_rate: config.train.learning_rate,
        batch_size: config.train.batch_size,
        seed: derive_seed(config.seed, STAGE_TRAIN),
        adam_beta1: config.train.adam_beta1,
        adam_beta2: config.train.adam_beta2,
        adam_eps: config.train.adam_eps,
    };

    let train_enc =
        encode_with_weak_labels(&train_records, &vocab, model_config.max_len, config.case_study)?;
    let valid_enc =
        encode_with_weak_labels(&valid_records, &vocab, model_config.max_len, config.case_study)?;

    let (params, history) = model::train(&model_config, &train_config, &train_enc, &valid_enc)?;

    let mut meta = BTreeMap::new();
    meta.insert("config_digest".to_string(), config.digest());
    meta.insert("profile".to_string(), config.profile.name().to_string());
    meta.insert("best_epoch".to_string(), history.best_epoch.to_string());
    meta.insert("train_corpus_digest".to_string(), file_digest(&train_path)?);
    meta.insert("valid_corpus_digest".to_string(), file_digest(&valid_path)?);
    save_checkpoint(
        &config.checkpoint_path(),
        &params,
        &vocab,
        config.case_study,
        &meta,
    )?;
    write_history(config, &history)?;
    let best = &history.epochs[history.best_epoch];
    eprintln!(
        "train: {} epochs, best epoch {} (val macro-F1 {:.4}), checkpoint {}",
        history.epochs.len(),
        history.best_epoch,
        best.val_macro_f1,
        config.checkpoint_path().display()
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct HistoryFile<'a> {
    config_digest: String,
    history: &'a TrainHistory,
}

fn write_history(config: &ResolvedConfig, history: &TrainHistory) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(&HistoryFile {
        config_digest: config.digest(),
        history,
    })
    .expect("history serializes");
    std::fs::write(config.history_path(), body + "\n")?;
    Ok(())
}

/// Step 5: evaluate the checkpoint on the GSC, guarding the note-id
/// disjointness contract between training data and GSC first.
pub fn cmd_eval(
    config: &ResolvedConfig,
    checkpoint: Option<&Path>,
    gsc: Option<&Path>,
) -> Result<(), CliError> {
    let checkpoint_path = checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.checkpoint_path());
    let gsc_path = gsc.map(Path::to_path_buf).unwrap_or_else(|| config.gsc_path());
    let gsc_records = read_records(&gsc_path)?;

    // disjointness guard against the weak-labeled training corpus
    let train_path = config.train_weak_path();
    if train_path.is_file() {
        let train_records = read_records(&train_path)?;
        let overlap = lifetag_core::corpus::overlapping_note_ids(&train_records, &gsc_records);
        if let Some(first) = overlap.first() {
            return Err(CliError::Data(format!(
                "training corpus and GSC share note_id {first} ({} overlapping ids)",
                overlap.len()
            )));
        }
    }

    let ckpt = load_checkpoint(&checkpoint_path)?;
    if ckpt.case_study != config.case_study {
        return Err(CliError::Data(format!(
            "checkpoint was trained for {}, config says {}",
            ckpt.case_study, config.case_study
        )));
    }
    let encoded: Vec<EncodedSentence> = gsc_records
        .iter()
        .map(|r| encode(&tokenize(&r.text), &ckpt.vocab, ckpt.params.config.max_len))
        .collect();
    let predictions = model::predict_labels(&ckpt.params, &encoded, config.case_study)?;

    let mut corpus_digests = BTreeMap::new();
    corpus_digests.insert("gsc".to_string(), file_digest(&gsc_path)?);
    corpus_digests.insert("checkpoint".to_string(), file_digest(&checkpoint_path)?);
    if train_path.is_file() {
        corpus_digests.insert("train_weak".to_string(), file_digest(&train_path)?);
    }
    let report = eval::report(
        &gsc_records,
        &predictions,
        RunMetadata {
            seed: config.seed,
            config_digest: config.digest(),
            corpus_digests,
        },
    )?;
    let (json_path, _) = eval::write_report(&report, &config.report_dir())?;
    eprintln!(
        "eval: macro P/R/F1 = {:.4}/{:.4}/{:.4} on {} sentences, report {}",
        report.metrics.macro_precision,
        report.metrics.macro_recall,
        report.metrics.macro_f1,
        report.confusion.total(),
        json_path.display()
    );
    Ok(())
}

/// Steps 1-5 in sequence.
pub fn cmd_run_all(config: &ResolvedConfig) -> Result<(), CliError> {
    cmd_gen(config)?;
    cmd_label(config, None)?;
    cmd_split(config, None)?;
    cmd_train(config, None, None)?;
    cmd_eval(config, None, None)?;
    Ok(())
}

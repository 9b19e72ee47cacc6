//! End-to-end learning sanity: a linearly separable two-class corpus
//! with disjoint keyword vocabularies must be learned essentially
//! perfectly within ten epochs at the desk-scale learning rate.

use lifetag_core::corpus::{
    encode, split_corpus, tokenize, EncodedSentence, SentenceRecord, Source, Vocab,
};
use lifetag_core::model::{train, Arch, ModelConfig, TrainConfig};
use lifetag_core::rng::SeededRng;

fn separable_corpus(n: usize, seed: u64) -> Vec<SentenceRecord> {
    let class_words = [
        ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"],
        ["golf", "hotel", "india", "juliet", "kilo", "lima"],
    ];
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|i| {
            let class = i % 2;
            let len = 3 + rng.below(6);
            let words: Vec<&str> = (0..len)
                .map(|_| class_words[class][rng.below(6)])
                .collect();
            SentenceRecord {
                note_id: format!("n{i:04}"),
                sent_id: 0,
                text: words.join(" "),
                gold_label: None,
                weak_label: None,
                source: Source::Synthetic,
            }
        })
        .collect()
}

fn encode_records(
    records: &[SentenceRecord],
    vocab: &Vocab,
    max_len: usize,
) -> Vec<EncodedSentence> {
    records
        .iter()
        .map(|r| {
            let mut enc = encode(&tokenize(&r.text), vocab, max_len);
            // class is parity of the record index embedded in note_id
            let idx: usize = r.note_id[1..].parse().unwrap();
            enc.label_id = Some((idx % 2) as u32);
            enc
        })
        .collect()
}

#[test]
fn separable_two_class_corpus_trains_to_perfection() {
    let records = separable_corpus(200, 7);
    let (train_recs, valid_recs) = split_corpus(&records, 0.9, 13).unwrap();
    let train_tokens: Vec<Vec<String>> = train_recs.iter().map(|r| tokenize(&r.text)).collect();
    let vocab = Vocab::build(train_tokens.iter().map(Vec::as_slice));

    let max_len = 10;
    let train_enc = encode_records(&train_recs, &vocab, max_len);
    let valid_enc = encode_records(&valid_recs, &vocab, max_len);

    let model_config = ModelConfig {
        vocab_size: vocab.len(),
        max_len,
        embed_dim: 32,
        num_layers: 2,
        num_heads: 4,
        ff_dim: 64,
        num_classes: 2,
        dropout_rate: 0.3,
        arch: Arch::Encoder,
    };
    // desk-scale profile learning rate
    let train_config = TrainConfig::new(1e-3, 32, 99);

    let (_params, history) = train(&model_config, &train_config, &train_enc, &valid_enc).unwrap();
    let final_loss = history.epochs.last().unwrap().train_loss;
    let best_f1 = history.epochs[history.best_epoch].val_macro_f1;
    eprintln!(
        "separable corpus: final loss {final_loss:.4}, best val macro-F1 {best_f1:.4}, history: {:?}",
        history
            .epochs
            .iter()
            .map(|e| (e.train_loss, e.val_macro_f1))
            .collect::<Vec<_>>()
    );
    assert!(
        final_loss < 0.1,
        "final training loss {final_loss} not below 0.1"
    );
    assert_eq!(best_f1, 1.0, "validation macro-F1 {best_f1} != 1.0");
    assert_eq!(history.epochs.len(), train_config.epochs);
}

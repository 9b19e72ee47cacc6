//! Confusion matrices, per-class and macro precision/recall/F1, and
//! Cohen's kappa.
//!
//! Zero-denominator convention: a precision, recall or F1 whose
//! denominator is zero is defined as 0 (not skipped), and the class
//! still counts in the macro average. This differs between common
//! toolkits; it is fixed here so macro numbers are comparable across
//! predictors.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::hash::Hash;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CaseStudy, Label, SentenceRecord};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {a} gold vs {b} predicted")]
    LengthMismatch { a: usize, b: usize },
    #[error("labels from mixed case studies")]
    MixedCaseStudies,
    #[error("empty input")]
    EmptyInput,
    #[error("record (note_id={note_id}, sent_id={sent_id}) is missing a gold label")]
    MissingGold { note_id: String, sent_id: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Confusion matrix over a case study's full class inventory.
/// Rows are gold classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<Label>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Count kernel over class ids: counts[g][p] = |{i : gold_i=g, pred_i=p}|.
pub fn confusion_counts(gold_ids: &[usize], pred_ids: &[usize], num_classes: usize) -> Vec<Vec<u64>> {
    assert_eq!(gold_ids.len(), pred_ids.len());
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (&g, &p) in gold_ids.iter().zip(pred_ids) {
        counts[g][p] += 1;
    }
    counts
}

/// Confusion matrix from label sequences, which must be equal-length and
/// single-case-study.
pub fn confusion(gold: &[Label], pred: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { a: gold.len(), b: pred.len() });
    }
    let case = match gold.first().or_else(|| pred.first()) {
        Some(l) => l.case_study(),
        None => {
            // empty inputs: no way to infer the case study, default to an
            // empty PA matrix (documented degenerate case)
            return Ok(ConfusionMatrix {
                classes: CaseStudy::PhysicalActivity.classes().to_vec(),
                counts: vec![vec![0; 2]; 2],
            });
        }
    };
    if gold.iter().chain(pred).any(|l| l.case_study() != case) {
        return Err(EvalError::MixedCaseStudies);
    }
    let gold_ids: Vec<usize> = gold.iter().map(|l| l.class_id()).collect();
    let pred_ids: Vec<usize> = pred.iter().map(|l| l.class_id()).collect();
    Ok(ConfusionMatrix {
        classes: case.classes().to_vec(),
        counts: confusion_counts(&gold_ids, &pred_ids, case.classes().len()),
    })
}

/// Per-class precision/recall/F1 and support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn zero_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-class rows from a count grid; rows are gold, columns predicted.
pub fn prf_rows(counts: &[Vec<u64>]) -> Vec<PrfRow> {
    let k = counts.len();
    (0..k)
        .map(|c| {
            let tp = counts[c][c] as f64;
            let col_sum: f64 = (0..k).map(|g| counts[g][c] as f64).sum();
            let row_sum: f64 = counts[c].iter().map(|&x| x as f64).sum();
            let precision = zero_div(tp, col_sum);
            let recall = zero_div(tp, row_sum);
            let f1 = zero_div(2.0 * precision * recall, precision + recall);
            PrfRow { precision, recall, f1, support: row_sum as u64 }
        })
        .collect()
}

/// Unweighted macro mean of per-class rows: (precision, recall, f1).
pub fn macro_prf(rows: &[PrfRow]) -> (f64, f64, f64) {
    let k = rows.len() as f64;
    let p = rows.iter().map(|r| r.precision).sum::<f64>() / k;
    let r = rows.iter().map(|r| r.recall).sum::<f64>() / k;
    let f = rows.iter().map(|r| r.f1).sum::<f64>() / k;
    (p, r, f)
}

pub fn macro_f1_from_counts(counts: &[Vec<u64>]) -> f64 {
    macro_prf(&prf_rows(counts)).2
}

/// Per-class and macro metrics for a confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfSummary {
    pub per_class: Vec<PrfRow>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

pub fn prf(cm: &ConfusionMatrix) -> PrfSummary {
    let per_class = prf_rows(&cm.counts);
    let (macro_precision, macro_recall, macro_f1) = macro_prf(&per_class);
    PrfSummary { per_class, macro_precision, macro_recall, macro_f1 }
}

/// Cohen's kappa between two labelings: (p_o - p_e) / (1 - p_e) with
/// p_o the observed agreement and p_e the chance agreement from the
/// marginals. Returns 1.0 in the degenerate p_e = 1 case (both raters
/// constant on the same value, hence p_o = 1).
pub fn cohens_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = a.len() as f64;
    let mut agree = 0u64;
    let mut marg_a: HashMap<&T, u64> = HashMap::new();
    let mut marg_b: HashMap<&T, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        if x == y {
            agree += 1;
        }
        *marg_a.entry(x).or_insert(0) += 1;
        *marg_b.entry(y).or_insert(0) += 1;
    }
    let p_o = agree as f64 / n;
    let mut p_e = 0.0;
    for (value, &ca) in &marg_a {
        if let Some(&cb) = marg_b.get(value) {
            p_e += (ca as f64 / n) * (cb as f64 / n);
        }
    }
    if p_e == 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Run provenance recorded in every report. Deliberately contains no
/// wall-clock fields so reports are byte-identical across reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_digest: String,
    pub corpus_digests: BTreeMap<String, String>,
}

/// Evaluation report mirroring the Precision/Recall/F1 table layout,
/// plus the confusion matrix and run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub case_study: CaseStudy,
    pub confusion: ConfusionMatrix,
    pub metrics: PrfSummary,
    pub metadata: RunMetadata,
}

/// Build a report from gold records and predictions. Every record must
/// carry a gold label.
pub fn report(
    gold_records: &[SentenceRecord],
    predictions: &[Label],
    metadata: RunMetadata,
) -> Result<EvalReport, EvalError> {
    if gold_records.len() != predictions.len() {
        return Err(EvalError::LengthMismatch {
            a: gold_records.len(),
            b: predictions.len(),
        });
    }
    let gold: Vec<Label> = gold_records
        .iter()
        .map(|r| {
            r.gold_label.ok_or_else(|| EvalError::MissingGold {
                note_id: r.note_id.clone(),
                sent_id: r.sent_id,
            })
        })
        .collect::<Result<_, _>>()?;
    let confusion = confusion(&gold, predictions)?;
    let metrics = prf(&confusion);
    let case_study = confusion.classes[0].case_study();
    Ok(EvalReport { case_study, confusion, metrics, metadata })
}

impl EvalReport {
    /// Machine-readable record: pretty JSON with deterministic key order
    /// (struct order plus sorted maps).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(data: &str) -> Result<EvalReport, serde_json::Error> {
        serde_json::from_str(data)
    }

    /// Aligned text table: one row per class plus the macro row.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("case_study: {}\n", self.case_study));
        out.push_str(&format!("seed: {}\n", self.metadata.seed));
        out.push_str(&format!("config_digest: {}\n", self.metadata.config_digest));
        out.push('\n');
        out.push_str(&format!(
            "{:<16} {:>9} {:>9} {:>9} {:>9}\n",
            "class", "precision", "recall", "f1", "support"
        ));
        for (label, row) in self.confusion.classes.iter().zip(&self.metrics.per_class) {
            out.push_str(&format!(
                "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>9}\n",
                label.name(),
                row.precision,
                row.recall,
                row.f1,
                row.support
            ));
        }
        out.push_str(&format!(
            "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>9}\n",
            "macro",
            self.metrics.macro_precision,
            self.metrics.macro_recall,
            self.metrics.macro_f1,
            self.confusion.total()
        ));
        out.push('\n');
        out.push_str("confusion (rows gold, cols predicted):\n");
        out.push_str(&format!("{:<16}", ""));
        for label in &self.confusion.classes {
            out.push_str(&format!(" {:>12}", label.name()));
        }
        out.push('\n');
        for (label, row) in self.confusion.classes.iter().zip(&self.confusion.counts) {
            out.push_str(&format!("{:<16}", label.name()));
            for &c in row {
                out.push_str(&format!(" {:>12}", c));
            }
            out.push('\n');
        }
        out
    }
}

/// Write `report.json` and `report.txt` under `dir`; returns the paths.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<(PathBuf, PathBuf), EvalError> {
    fs::create_dir_all(dir)?;
    let json_path = dir.join("report.json");
    let txt_path = dir.join("report.txt");
    fs::write(&json_path, report.to_json())?;
    fs::write(&txt_path, report.render_text())?;
    Ok((json_path, txt_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use crate::rng::SeededRng;

    #[test]
    fn confusion_perfect_diagonal() {
        let gold = vec![Label::Activity; 3]
            .into_iter()
            .chain(vec![Label::Inactivity; 2])
            .collect::<Vec<_>>();
        let cm = confusion(&gold, &gold).unwrap();
        assert_eq!(cm.counts, vec![vec![3, 0], vec![0, 2]]);
        assert_eq!(cm.total(), 5);
    }

    #[test]
    fn confusion_empty_inputs() {
        let cm = confusion(&[], &[]).unwrap();
        assert_eq!(cm.total(), 0);
    }

    #[test]
    fn confusion_rejects_length_mismatch_and_mixed_cases() {
        assert!(matches!(
            confusion(&[Label::Activity], &[]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion(&[Label::Activity], &[Label::HighFat]),
            Err(EvalError::MixedCaseStudies)
        ));
    }

    #[test]
    fn confusion_matches_brute_force_oracle() {
        let mut rng = SeededRng::new(4);
        let classes = CaseStudy::ExcessDiet.classes();
        let gold: Vec<Label> = (0..100).map(|_| classes[rng.below(4)]).collect();
        let pred: Vec<Label> = (0..100).map(|_| classes[rng.below(4)]).collect();
        let cm = confusion(&gold, &pred).unwrap();
        // independent tally
        for (g, &gl) in classes.iter().enumerate() {
            for (p, &pl) in classes.iter().enumerate() {
                let expect = gold
                    .iter()
                    .zip(&pred)
                    .filter(|(a, b)| **a == gl && **b == pl)
                    .count() as u64;
                assert_eq!(cm.counts[g][p], expect);
            }
        }
    }

    #[test]
    fn prf_perfect_predictor() {
        let gold: Vec<Label> = CaseStudy::ExcessDiet.classes().to_vec();
        let cm = confusion(&gold, &gold).unwrap();
        let s = prf(&cm);
        for row in &s.per_class {
            assert_eq!(row.precision, 1.0);
            assert_eq!(row.recall, 1.0);
            assert_eq!(row.f1, 1.0);
        }
        assert_eq!(s.macro_f1, 1.0);
    }

    #[test]
    fn prf_worked_example_macro_f1_is_11_over_15() {
        // gold=[A,A,B,B], pred=[A,B,B,B]
        let gold = [Label::Activity, Label::Activity, Label::Inactivity, Label::Inactivity];
        let pred = [Label::Activity, Label::Inactivity, Label::Inactivity, Label::Inactivity];
        let cm = confusion(&gold, &pred).unwrap();
        let s = prf(&cm);
        assert_eq!(s.per_class[0].precision, 1.0);
        assert_eq!(s.per_class[0].recall, 0.5);
        assert!((s.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.per_class[1].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.per_class[1].recall, 1.0);
        assert!((s.per_class[1].f1 - 0.8).abs() < 1e-15);
        assert!((s.macro_f1 - 11.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn prf_absent_class_counts_as_zero_in_macro() {
        // diet case where high_fat never appears in gold or pred
        let gold = [Label::HighCalorie, Label::HighSalt, Label::NormalNone];
        let cm = confusion(&gold, &gold).unwrap();
        let s = prf(&cm);
        let fat_row = &s.per_class[Label::HighFat.class_id()];
        assert_eq!(fat_row.precision, 0.0);
        assert_eq!(fat_row.recall, 0.0);
        assert_eq!(fat_row.f1, 0.0);
        assert_eq!(fat_row.support, 0);
        // macro still averages over all 4 classes
        assert!((s.macro_f1 - 3.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn prf_invariant_under_record_permutation() {
        let mut rng = SeededRng::new(6);
        let classes = CaseStudy::ExcessDiet.classes();
        let mut pairs: Vec<(Label, Label)> = (0..60)
            .map(|_| (classes[rng.below(4)], classes[rng.below(4)]))
            .collect();
        let gold: Vec<Label> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<Label> = pairs.iter().map(|p| p.1).collect();
        let before = prf(&confusion(&gold, &pred).unwrap());
        rng.shuffle(&mut pairs);
        let gold2: Vec<Label> = pairs.iter().map(|p| p.0).collect();
        let pred2: Vec<Label> = pairs.iter().map(|p| p.1).collect();
        let after = prf(&confusion(&gold2, &pred2).unwrap());
        assert_eq!(before, after);
    }

    #[test]
    fn kappa_identical_sequences() {
        let a = [1u8, 2, 1, 1, 2, 2, 1];
        assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn kappa_worked_example() {
        // a=[1,1,0,0], b=[1,0,0,0]: p_o=0.75, p_e=0.5, kappa=0.5
        let a = [1u8, 1, 0, 0];
        let b = [1u8, 0, 0, 0];
        assert_eq!(cohens_kappa(&a, &b).unwrap(), 0.5);
        // symmetry
        assert_eq!(cohens_kappa(&b, &a).unwrap(), 0.5);
    }

    #[test]
    fn kappa_of_independent_labelings_is_near_zero() {
        let mut rng = SeededRng::new(12);
        let n = 10_000;
        let a: Vec<u8> = (0..n).map(|_| rng.below(3) as u8).collect();
        let b: Vec<u8> = (0..n).map(|_| rng.below(3) as u8).collect();
        let kappa = cohens_kappa(&a, &b).unwrap();
        assert!(kappa.abs() < 0.05, "kappa {kappa}");
    }

    #[test]
    fn kappa_degenerate_constant_raters() {
        let a = [7u8; 5];
        assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn kappa_rejects_mismatched_or_empty() {
        assert!(matches!(
            cohens_kappa(&[1u8], &[1u8, 2]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            cohens_kappa::<u8>(&[], &[]),
            Err(EvalError::EmptyInput)
        ));
    }

    fn gold_record(label: Label, i: usize) -> SentenceRecord {
        SentenceRecord {
            note_id: format!("g{i:04}"),
            sent_id: 0,
            text: "x".into(),
            gold_label: Some(label),
            weak_label: None,
            source: Source::Synthetic,
        }
    }

    fn meta() -> RunMetadata {
        RunMetadata {
            seed: 42,
            config_digest: "deadbeef".into(),
            corpus_digests: BTreeMap::new(),
        }
    }

    #[test]
    fn report_perfect_predictor() {
        let records: Vec<SentenceRecord> = (0..10)
            .map(|i| {
                gold_record(
                    if i < 4 { Label::Activity } else { Label::Inactivity },
                    i,
                )
            })
            .collect();
        let preds: Vec<Label> = records.iter().map(|r| r.gold_label.unwrap()).collect();
        let rep = report(&records, &preds, meta()).unwrap();
        assert_eq!(rep.metrics.macro_precision, 1.0);
        assert_eq!(rep.metrics.macro_recall, 1.0);
        assert_eq!(rep.metrics.macro_f1, 1.0);
    }

    #[test]
    fn report_majority_class_predictor_on_default_pa_gsc() {
        // 78 activity / 122 inactivity gold; predictor always inactivity.
        // hand-computed 2x2: P_act = 0/0 -> 0, R_inact = 1.0,
        // P_inact = 122/200, F1_inact = 2*(122/200)/(122/200 + 1) = 122/161,
        // macro F1 = 61/161.
        let mut records = Vec::new();
        for i in 0..78 {
            records.push(gold_record(Label::Activity, i));
        }
        for i in 78..200 {
            records.push(gold_record(Label::Inactivity, i));
        }
        let preds = vec![Label::Inactivity; 200];
        let rep = report(&records, &preds, meta()).unwrap();
        let act = &rep.metrics.per_class[0];
        let inact = &rep.metrics.per_class[1];
        assert_eq!(act.precision, 0.0);
        assert_eq!(act.recall, 0.0);
        assert_eq!(act.f1, 0.0);
        assert_eq!(inact.recall, 1.0);
        assert!((inact.precision - 122.0 / 200.0).abs() < 1e-15);
        assert!((inact.f1 - 122.0 / 161.0).abs() < 1e-15);
        assert!((rep.metrics.macro_f1 - 61.0 / 161.0).abs() < 1e-15);
        assert!((rep.metrics.macro_f1 - inact.f1 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn report_requires_gold_labels() {
        let mut r = gold_record(Label::Activity, 0);
        r.gold_label = None;
        let err = report(&[r], &[Label::Activity], meta()).unwrap_err();
        assert!(matches!(err, EvalError::MissingGold { .. }));
    }

    #[test]
    fn report_serialization_round_trips() {
        let records: Vec<SentenceRecord> =
            (0..6).map(|i| gold_record(Label::HighSalt, i)).collect();
        let preds = vec![Label::HighSalt; 6];
        let rep = report(&records, &preds, meta()).unwrap();
        let json = rep.to_json();
        let back = EvalReport::from_json(&json).unwrap();
        assert_eq!(rep, back);
        assert_eq!(json, back.to_json());
    }
}

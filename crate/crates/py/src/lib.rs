//! Python bindings for the lifestyle-factor weak-supervision pipeline:
//! tokenization, the rule-based weak labeler, agreement/classification
//! metrics, and trained-checkpoint inference.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lifetag_core::corpus::{self, CaseStudy};
use lifetag_core::eval;
use lifetag_core::lexicon::{self, DEFAULT_NEGATION_WINDOW};
use lifetag_core::model;

fn parse_case_study(name: &str) -> PyResult<CaseStudy> {
    name.parse().map_err(PyValueError::new_err)
}

/// Lowercased word tokens with boundary punctuation detached.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus::tokenize(text)
}

/// Split a document into sentences (abbreviation- and decimal-aware).
#[pyfunction]
fn segment_sentences(text: &str) -> Vec<String> {
    corpus::segment_sentences(text)
}

/// Cohen's kappa between two equal-length label sequences.
#[pyfunction]
fn cohens_kappa(a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
    eval::cohens_kappa(&a, &b).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Per-class and macro precision/recall/F1 for gold vs predicted label
/// name sequences (single case study).
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    gold: Vec<String>,
    pred: Vec<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let parse = |names: &[String]| -> PyResult<Vec<corpus::Label>> {
        names
            .iter()
            .map(|n| n.parse().map_err(PyValueError::new_err))
            .collect()
    };
    let gold = parse(&gold)?;
    let pred = parse(&pred)?;
    let cm = eval::confusion(&gold, &pred).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let summary = eval::prf(&cm);
    let out = PyDict::new(py);
    let per_class = PyDict::new(py);
    for (label, row) in cm.classes.iter().zip(&summary.per_class) {
        let entry = PyDict::new(py);
        entry.set_item("precision", row.precision)?;
        entry.set_item("recall", row.recall)?;
        entry.set_item("f1", row.f1)?;
        entry.set_item("support", row.support)?;
        per_class.set_item(label.name(), entry)?;
    }
    out.set_item("per_class", per_class)?;
    out.set_item("macro_precision", summary.macro_precision)?;
    out.set_item("macro_recall", summary.macro_recall)?;
    out.set_item("macro_f1", summary.macro_f1)?;
    out.set_item("confusion", cm.counts.clone())?;
    Ok(out)
}

/// The rule-based weak labeler: concept dictionary plus negation
/// scoping.
#[pyclass]
struct Lexicon {
    inner: lexicon::Lexicon,
}

#[pymethods]
impl Lexicon {
    /// Load a lexicon from a tab-separated file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Lexicon {
            inner: lexicon::Lexicon::load(&path).map_err(|e| PyIOError::new_err(e.to_string()))?,
        })
    }

    /// The lexicon shipped with the repo.
    #[staticmethod]
    fn builtin() -> Self {
        Lexicon { inner: lexicon::Lexicon::builtin() }
    }

    /// Number of concepts.
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Weak label name for a sentence, or None when the sentence carries
    /// no concept of the case study.
    #[pyo3(signature = (text, case_study, window = DEFAULT_NEGATION_WINDOW))]
    fn weak_label(&self, text: &str, case_study: &str, window: usize) -> PyResult<Option<String>> {
        let case = parse_case_study(case_study)?;
        Ok(
            lexicon::weak_label(&corpus::tokenize(text), &self.inner, case, window)
                .map(|l| l.name().to_string()),
        )
    }

    /// Concept matches as (concept_id, category, start, end, negated)
    /// tuples over the tokenized sentence.
    #[pyo3(signature = (text, window = DEFAULT_NEGATION_WINDOW))]
    fn match_concepts(
        &self,
        text: &str,
        window: usize,
    ) -> Vec<(String, String, usize, usize, bool)> {
        let tokens = corpus::tokenize(text);
        lexicon::annotate(&tokens, &self.inner, window)
            .into_iter()
            .map(|m| {
                (
                    m.concept_id,
                    m.category.name().to_string(),
                    m.start,
                    m.end,
                    m.negated,
                )
            })
            .collect()
    }
}

/// A trained classifier checkpoint.
#[pyclass]
struct Classifier {
    checkpoint: model::Checkpoint,
}

impl Classifier {
    fn encode_texts(&self, texts: &[String]) -> Vec<corpus::EncodedSentence> {
        texts
            .iter()
            .map(|t| {
                corpus::encode(
                    &corpus::tokenize(t),
                    &self.checkpoint.vocab,
                    self.checkpoint.params.config.max_len,
                )
            })
            .collect()
    }
}

#[pymethods]
impl Classifier {
    /// Load a checkpoint written by the training pipeline.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Classifier {
            checkpoint: model::load_checkpoint(&path)
                .map_err(|e| PyIOError::new_err(e.to_string()))?,
        })
    }

    #[getter]
    fn case_study(&self) -> String {
        self.checkpoint.case_study.name().to_string()
    }

    /// Predicted label names for raw sentence texts.
    fn predict(&self, texts: Vec<String>) -> PyResult<Vec<String>> {
        let encoded = self.encode_texts(&texts);
        let labels =
            model::predict_labels(&self.checkpoint.params, &encoded, self.checkpoint.case_study)
                .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(labels.into_iter().map(|l| l.name().to_string()).collect())
    }

    /// Class probabilities, one row per text, columns in class-id order.
    fn predict_proba(&self, texts: Vec<String>) -> PyResult<Vec<Vec<f64>>> {
        let encoded = self.encode_texts(&texts);
        let probs = model::predict_proba(&self.checkpoint.params, &encoded)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(probs.rows().into_iter().map(|r| r.to_vec()).collect())
    }

    /// Class names in class-id order.
    fn classes(&self) -> Vec<String> {
        self.checkpoint
            .case_study
            .classes()
            .iter()
            .map(|l| l.name().to_string())
            .collect()
    }
}

#[pymodule]
fn lifetag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(segment_sentences, m)?)?;
    m.add_function(wrap_pyfunction!(cohens_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_class::<Lexicon>()?;
    m.add_class::<Classifier>()?;
    m.add("DEFAULT_NEGATION_WINDOW", DEFAULT_NEGATION_WINDOW)?;
    Ok(())
}

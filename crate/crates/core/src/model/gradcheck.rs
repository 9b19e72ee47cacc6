//! Gradient verification against central finite differences.
//!
//! The numeric side differentiates [`training_loss`] directly (the same
//! fixed dropout mask as the analytic pass), so the comparison is
//! analytic backprop vs a numerical derivative of the scalar loss —
//! two independent routes to the same quantity.

use super::net::{backward, training_loss, Batch};
use super::{ClassifierParams, ModelError};

/// Worst observed disagreement between analytic and numeric gradients.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Relative error with a small denominator floor so exactly-zero
/// gradient pairs compare cleanly.
fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Compare analytic gradients with central finite differences of step
/// `h` over every parameter scalar.
pub fn gradient_check(
    params: &ClassifierParams,
    batch: &Batch,
    labels: &[usize],
    dropout_seed: u64,
    h: f64,
) -> Result<GradCheckReport, ModelError> {
    let (_, grads) = backward(params, batch, labels, dropout_seed)?;
    let analytic: Vec<(String, Vec<f64>)> = grads
        .tensors()
        .into_iter()
        .map(|(name, t)| (name, t.to_vec()))
        .collect();

    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    let n_tensors = analytic.len();
    for ti in 0..n_tensors {
        let len = analytic[ti].1.len();
        for j in 0..len {
            let orig = work.tensors()[ti].1[j];
            work.tensors_mut()[ti].1[j] = orig + h;
            let loss_plus = training_loss(&work, batch, labels, dropout_seed)?;
            work.tensors_mut()[ti].1[j] = orig - h;
            let loss_minus = training_loss(&work, batch, labels, dropout_seed)?;
            work.tensors_mut()[ti].1[j] = orig;
            let numeric = (loss_plus - loss_minus) / (2.0 * h);
            let a = analytic[ti].1[j];
            let err = rel_err(a, numeric);
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_tensor = analytic[ti].0.clone();
                report.worst_index = j;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

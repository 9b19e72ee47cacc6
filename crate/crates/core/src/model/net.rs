//! Forward and backward passes.
//!
//! Encoder path: token + positional embeddings, `num_layers` blocks of
//! multi-head self-attention (padding keys excluded via a large negative
//! additive mask before softmax) and a GELU feed-forward, each with a
//! residual connection and post-layer-norm; masked mean pooling over the
//! real-token positions; dropout (train mode only); linear head.
//!
//! The backward pass recomputes the forward with cached activations and
//! propagates exact gradients of the mean cross-entropy. Dropout uses a
//! per-call mask derived from a seed, shared between the forward and
//! backward halves of a step.

use ndarray::{s, Array1, Array2, Array3, Array4, Axis};

use super::{Arch, ClassifierParams, ModelError};
use crate::corpus::EncodedSentence;
use crate::rng::SeededRng;

const LN_EPS: f64 = 1e-9;
/// Additive score for masked-out key positions; exp() of it underflows
/// to exactly 0 after max subtraction, so padding cannot leak.
const MASK_SCORE: f64 = -1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A batch of encoded sentences: ids and mask, both [batch, len].
#[derive(Debug, Clone)]
pub struct Batch {
    pub ids: Array2<usize>,
    pub mask: Array2<f64>,
}

impl Batch {
    /// All sentences must share one encoded length.
    pub fn from_encoded(sentences: &[EncodedSentence]) -> Result<Batch, ModelError> {
        if sentences.is_empty() {
            return Err(ModelError::ShapeMismatch("empty batch".into()));
        }
        let len = sentences[0].token_ids.len();
        let mut ids = Array2::zeros((sentences.len(), len));
        let mut mask = Array2::zeros((sentences.len(), len));
        for (i, s) in sentences.iter().enumerate() {
            if s.token_ids.len() != len || s.attention_mask.len() != len {
                return Err(ModelError::ShapeMismatch(format!(
                    "sentence {i} has length {} != {len}",
                    s.token_ids.len()
                )));
            }
            for (j, (&id, &m)) in s.token_ids.iter().zip(&s.attention_mask).enumerate() {
                ids[(i, j)] = id as usize;
                mask[(i, j)] = m as f64;
            }
        }
        Ok(Batch { ids, mask })
    }

    pub fn batch_size(&self) -> usize {
        self.ids.nrows()
    }

    pub fn seq_len(&self) -> usize {
        self.ids.ncols()
    }
}

/// Labels of a batch, erroring on any missing label id.
pub fn batch_labels(sentences: &[EncodedSentence]) -> Result<Vec<usize>, ModelError> {
    sentences
        .iter()
        .map(|s| s.label_id.map(|l| l as usize).ok_or(ModelError::MissingLabel))
        .collect()
}

fn gelu(x: f64) -> f64 {
    const C: f64 = 0.044715;
    let s = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (s * (x + C * x * x * x)).tanh())
}

fn gelu_prime(x: f64) -> f64 {
    const C: f64 = 0.044715;
    let s = (2.0 / std::f64::consts::PI).sqrt();
    let t = s * (x + C * x * x * x);
    let th = t.tanh();
    0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * s * (1.0 + 3.0 * C * x * x)
}

/// y = x·w + b over the last axis of a [B, L, D] tensor.
fn linear3(x: &Array3<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array3<f64> {
    let (bb, ll, d) = x.dim();
    let flat = x.view().into_shape_with_order((bb * ll, d)).unwrap();
    let y = flat.dot(w) + b;
    y.into_shape_with_order((bb, ll, w.ncols())).unwrap()
}

/// dw = xᵀ·dy, db = Σ dy, dx = dy·wᵀ for [B, L, ·] tensors.
fn linear3_backward(
    x: &Array3<f64>,
    w: &Array2<f64>,
    dy: &Array3<f64>,
) -> (Array2<f64>, Array1<f64>, Array3<f64>) {
    let (bb, ll, d_in) = x.dim();
    let d_out = w.ncols();
    let xf = x.view().into_shape_with_order((bb * ll, d_in)).unwrap();
    let dyf = dy.view().into_shape_with_order((bb * ll, d_out)).unwrap();
    let dw = xf.t().dot(&dyf);
    let db = dyf.sum_axis(Axis(0));
    let dx = dyf
        .dot(&w.t())
        .into_shape_with_order((bb, ll, d_in))
        .unwrap();
    (dw, db, dx)
}

struct LnCache {
    xhat: Array3<f64>,
    inv_std: Array2<f64>,
}

fn layer_norm(
    x: &Array3<f64>,
    gamma: &Array1<f64>,
    beta: &Array1<f64>,
) -> (Array3<f64>, LnCache) {
    let (bb, ll, d) = x.dim();
    let mut y = Array3::zeros((bb, ll, d));
    let mut xhat = Array3::zeros((bb, ll, d));
    let mut inv_std = Array2::zeros((bb, ll));
    for bi in 0..bb {
        for li in 0..ll {
            let row = x.slice(s![bi, li, ..]);
            let mean = row.sum() / d as f64;
            let var = row.fold(0.0, |acc, &v| acc + (v - mean) * (v - mean)) / d as f64;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            inv_std[(bi, li)] = inv;
            for di in 0..d {
                let xh = (x[(bi, li, di)] - mean) * inv;
                xhat[(bi, li, di)] = xh;
                y[(bi, li, di)] = xh * gamma[di] + beta[di];
            }
        }
    }
    (y, LnCache { xhat, inv_std })
}

fn layer_norm_backward(
    dy: &Array3<f64>,
    cache: &LnCache,
    gamma: &Array1<f64>,
) -> (Array3<f64>, Array1<f64>, Array1<f64>) {
    let (bb, ll, d) = dy.dim();
    let mut dx = Array3::zeros((bb, ll, d));
    let mut dgamma = Array1::zeros(d);
    let mut dbeta = Array1::zeros(d);
    for bi in 0..bb {
        for li in 0..ll {
            let inv = cache.inv_std[(bi, li)];
            let mut sum_dxhat = 0.0;
            let mut sum_dxhat_xhat = 0.0;
            for di in 0..d {
                let g = dy[(bi, li, di)];
                let xh = cache.xhat[(bi, li, di)];
                dgamma[di] += g * xh;
                dbeta[di] += g;
                let dxhat = g * gamma[di];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xh;
            }
            let mean_dxhat = sum_dxhat / d as f64;
            let mean_dxhat_xhat = sum_dxhat_xhat / d as f64;
            for di in 0..d {
                let dxhat = dy[(bi, li, di)] * gamma[di];
                let xh = cache.xhat[(bi, li, di)];
                dx[(bi, li, di)] = inv * (dxhat - mean_dxhat - xh * mean_dxhat_xhat);
            }
        }
    }
    (dx, dgamma, dbeta)
}

struct LayerCache {
    x_in: Array3<f64>,
    q: Array3<f64>,
    k: Array3<f64>,
    v: Array3<f64>,
    probs: Array4<f64>,
    ctx: Array3<f64>,
    ln1: LnCache,
    h1: Array3<f64>,
    u: Array3<f64>,
    g_act: Array3<f64>,
    ln2: LnCache,
}

struct ForwardCache {
    layers: Vec<LayerCache>,
    mask_counts: Array1<f64>,
    drop_mask: Option<Array2<f64>>,
    pooled_dropped: Array2<f64>,
    logits: Array2<f64>,
}

/// Inverted-dropout mask over the pooled representation: entries are 0
/// (dropped) or 1/(1-p), drawn from the given seed.
fn dropout_mask(shape: (usize, usize), rate: f64, seed: u64) -> Array2<f64> {
    let mut rng = SeededRng::new(seed);
    let keep_scale = 1.0 / (1.0 - rate);
    let mut mask = Array2::zeros(shape);
    for x in mask.iter_mut() {
        *x = if rng.uniform() < rate { 0.0 } else { keep_scale };
    }
    mask
}

fn forward_cached(
    params: &ClassifierParams,
    batch: &Batch,
    drop_mask: Option<Array2<f64>>,
) -> Result<ForwardCache, ModelError> {
    let cfg = &params.config;
    let (bb, ll) = (batch.batch_size(), batch.seq_len());
    let d = cfg.embed_dim;
    if ll > cfg.max_len {
        return Err(ModelError::ShapeMismatch(format!(
            "sequence length {ll} exceeds max_len {}",
            cfg.max_len
        )));
    }
    for &id in batch.ids.iter() {
        if id >= cfg.vocab_size {
            return Err(ModelError::ShapeMismatch(format!(
                "token id {id} out of vocabulary (size {})",
                cfg.vocab_size
            )));
        }
    }

    // embeddings (+ positional encodings on the encoder path)
    let mut x0 = Array3::zeros((bb, ll, d));
    for bi in 0..bb {
        for li in 0..ll {
            let id = batch.ids[(bi, li)];
            let tok = params.tok_emb.row(id);
            match cfg.arch {
                Arch::Encoder => {
                    let pos = params.pos_emb.row(li);
                    for di in 0..d {
                        x0[(bi, li, di)] = tok[di] + pos[di];
                    }
                }
                Arch::BagOfEmbeddings => {
                    for di in 0..d {
                        x0[(bi, li, di)] = tok[di];
                    }
                }
            }
        }
    }

    let mut x = x0;
    let mut layer_caches = Vec::new();
    if cfg.arch == Arch::Encoder {
        let heads = cfg.num_heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        for layer in &params.layers {
            let x_in = x.clone();
            let q = linear3(&x_in, &layer.wq, &layer.bq);
            let k = linear3(&x_in, &layer.wk, &layer.bk);
            let v = linear3(&x_in, &layer.wv, &layer.bv);
            let mut probs = Array4::zeros((bb, heads, ll, ll));
            let mut ctx = Array3::zeros((bb, ll, d));
            for bi in 0..bb {
                for hi in 0..heads {
                    let cols = hi * dh..(hi + 1) * dh;
                    let qh = q.slice(s![bi, .., cols.clone()]);
                    let kh = k.slice(s![bi, .., cols.clone()]);
                    let vh = v.slice(s![bi, .., cols.clone()]);
                    let mut scores = qh.dot(&kh.t());
                    scores *= scale;
                    for j in 0..ll {
                        if batch.mask[(bi, j)] == 0.0 {
                            scores.column_mut(j).fill(MASK_SCORE);
                        }
                    }
                    for i in 0..ll {
                        let mut row = scores.row_mut(i);
                        let mx = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
                        row.mapv_inplace(|v| (v - mx).exp());
                        let sum = row.sum();
                        row.mapv_inplace(|v| v / sum);
                    }
                    ctx.slice_mut(s![bi, .., cols])
                        .assign(&scores.dot(&vh));
                    probs.slice_mut(s![bi, hi, .., ..]).assign(&scores);
                }
            }
            let attn_out = linear3(&ctx, &layer.wo, &layer.bo);
            let r1 = &x_in + &attn_out;
            let (h1, ln1) = layer_norm(&r1, &layer.ln1_gamma, &layer.ln1_beta);
            let u = linear3(&h1, &layer.w1, &layer.b1);
            let g_act = u.mapv(gelu);
            let f = linear3(&g_act, &layer.w2, &layer.b2);
            let r2 = &h1 + &f;
            let (x_out, ln2) = layer_norm(&r2, &layer.ln2_gamma, &layer.ln2_beta);
            layer_caches.push(LayerCache {
                x_in,
                q,
                k,
                v,
                probs,
                ctx,
                ln1,
                h1,
                u,
                g_act,
                ln2,
            });
            x = x_out;
        }
    }

    // masked mean pooling
    let mask_counts = batch.mask.sum_axis(Axis(1));
    let mut pooled = Array2::zeros((bb, d));
    for bi in 0..bb {
        let count = mask_counts[bi];
        for li in 0..ll {
            let m = batch.mask[(bi, li)];
            if m != 0.0 {
                for di in 0..d {
                    pooled[(bi, di)] += x[(bi, li, di)];
                }
            }
        }
        for di in 0..d {
            pooled[(bi, di)] /= count;
        }
    }

    let pooled_dropped = match &drop_mask {
        Some(mask) => &pooled * mask,
        None => pooled.clone(),
    };
    let logits = pooled_dropped.dot(&params.head_w) + &params.head_b;

    Ok(ForwardCache {
        layers: layer_caches,
        mask_counts,
        drop_mask,
        pooled_dropped,
        logits,
    })
}

/// Run the classifier on a batch. Train mode applies dropout with a mask
/// derived from `rng_seed`; eval mode is deterministic.
pub fn forward(
    params: &ClassifierParams,
    batch: &Batch,
    mode: Mode,
    rng_seed: u64,
) -> Result<Array2<f64>, ModelError> {
    let drop = match mode {
        Mode::Train if params.config.dropout_rate > 0.0 => Some(dropout_mask(
            (batch.batch_size(), params.config.embed_dim),
            params.config.dropout_rate,
            rng_seed,
        )),
        _ => None,
    };
    Ok(forward_cached(params, batch, drop)?.logits)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let mx = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        row.mapv_inplace(|v| (v - mx).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Mean cross-entropy over the batch, numerically stabilized via max
/// subtraction.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    assert_eq!(logits.nrows(), labels.len(), "logits/labels length mismatch");
    let mut total = 0.0;
    for (row, &label) in logits.rows().into_iter().zip(labels) {
        assert!(label < row.len(), "label id {label} out of range");
        let mx = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        let lse = mx + row.iter().map(|&v| (v - mx).exp()).sum::<f64>().ln();
        total += lse - row[label];
    }
    total / labels.len() as f64
}

/// Training-mode loss with the dropout mask fixed by `dropout_seed`;
/// the same seed passed to [`backward`] reproduces the same mask, which
/// is what the finite-difference oracle differentiates.
pub fn training_loss(
    params: &ClassifierParams,
    batch: &Batch,
    labels: &[usize],
    dropout_seed: u64,
) -> Result<f64, ModelError> {
    let drop = if params.config.dropout_rate > 0.0 {
        Some(dropout_mask(
            (batch.batch_size(), params.config.embed_dim),
            params.config.dropout_rate,
            dropout_seed,
        ))
    } else {
        None
    };
    let cache = forward_cached(params, batch, drop)?;
    Ok(cross_entropy(&cache.logits, labels))
}

/// Exact gradients of the mean cross-entropy with respect to every
/// parameter. Returns (loss, gradients).
pub fn backward(
    params: &ClassifierParams,
    batch: &Batch,
    labels: &[usize],
    dropout_seed: u64,
) -> Result<(f64, ClassifierParams), ModelError> {
    let cfg = &params.config;
    let (bb, ll) = (batch.batch_size(), batch.seq_len());
    let d = cfg.embed_dim;
    if labels.len() != bb {
        return Err(ModelError::ShapeMismatch(format!(
            "{} labels for batch of {bb}",
            labels.len()
        )));
    }
    let drop = if cfg.dropout_rate > 0.0 {
        Some(dropout_mask((bb, d), cfg.dropout_rate, dropout_seed))
    } else {
        None
    };
    let cache = forward_cached(params, batch, drop)?;
    let loss = cross_entropy(&cache.logits, labels);

    let mut grads = ClassifierParams::zeros(cfg);

    // d loss / d logits = (softmax - onehot) / B
    let mut dlogits = softmax_rows(&cache.logits);
    for (bi, &label) in labels.iter().enumerate() {
        dlogits[(bi, label)] -= 1.0;
    }
    dlogits /= bb as f64;

    // head
    grads.head_w = cache.pooled_dropped.t().dot(&dlogits);
    grads.head_b = dlogits.sum_axis(Axis(0));
    let mut dpooled = dlogits.dot(&params.head_w.t());
    if let Some(mask) = &cache.drop_mask {
        dpooled *= mask;
    }

    // pooling
    let mut dx = Array3::zeros((bb, ll, d));
    for bi in 0..bb {
        let count = cache.mask_counts[bi];
        for li in 0..ll {
            let m = batch.mask[(bi, li)];
            if m != 0.0 {
                for di in 0..d {
                    dx[(bi, li, di)] = dpooled[(bi, di)] / count;
                }
            }
        }
    }

    if cfg.arch == Arch::Encoder {
        let heads = cfg.num_heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        for (gl_idx, (layer, lc)) in params.layers.iter().zip(&cache.layers).enumerate().rev() {
            // LN2
            let (dr2, dgamma2, dbeta2) = layer_norm_backward(&dx, &lc.ln2, &layer.ln2_gamma);
            // FFN: r2 = h1 + gelu(h1 W1 + b1) W2 + b2
            let (dw2, db2, dg) = linear3_backward(&lc.g_act, &layer.w2, &dr2);
            let mut du = dg;
            ndarray::Zip::from(&mut du).and(&lc.u).for_each(|dv, &uv| {
                *dv *= gelu_prime(uv);
            });
            let (dw1, db1, dh1_ffn) = linear3_backward(&lc.h1, &layer.w1, &du);
            let dh1 = &dr2 + &dh1_ffn;
            // LN1
            let (dr1, dgamma1, dbeta1) = layer_norm_backward(&dh1, &lc.ln1, &layer.ln1_gamma);
            // attention output projection
            let (dwo, dbo, dctx) = linear3_backward(&lc.ctx, &layer.wo, &dr1);
            // attention core
            let mut dq = Array3::zeros((bb, ll, d));
            let mut dk = Array3::zeros((bb, ll, d));
            let mut dv = Array3::zeros((bb, ll, d));
            for bi in 0..bb {
                for hi in 0..heads {
                    let cols = hi * dh..(hi + 1) * dh;
                    let p = lc.probs.slice(s![bi, hi, .., ..]);
                    let dctx_h = dctx.slice(s![bi, .., cols.clone()]);
                    let vh = lc.v.slice(s![bi, .., cols.clone()]);
                    let qh = lc.q.slice(s![bi, .., cols.clone()]);
                    let kh = lc.k.slice(s![bi, .., cols.clone()]);
                    let dp = dctx_h.dot(&vh.t());
                    dv.slice_mut(s![bi, .., cols.clone()])
                        .assign(&p.t().dot(&dctx_h));
                    // softmax backward per row
                    let mut ds = Array2::zeros((ll, ll));
                    for i in 0..ll {
                        let mut dot = 0.0;
                        for j in 0..ll {
                            dot += dp[(i, j)] * p[(i, j)];
                        }
                        for j in 0..ll {
                            ds[(i, j)] = p[(i, j)] * (dp[(i, j)] - dot);
                        }
                    }
                    ds *= scale;
                    dq.slice_mut(s![bi, .., cols.clone()]).assign(&ds.dot(&kh));
                    dk.slice_mut(s![bi, .., cols]).assign(&ds.t().dot(&qh));
                }
            }
            let (dwq, dbq, dx_q) = linear3_backward(&lc.x_in, &layer.wq, &dq);
            let (dwk, dbk, dx_k) = linear3_backward(&lc.x_in, &layer.wk, &dk);
            let (dwv, dbv, dx_v) = linear3_backward(&lc.x_in, &layer.wv, &dv);
            // residual: dx_in = dr1 (skip) + attention input paths
            dx = &dr1 + &dx_q;
            dx = &dx + &dx_k;
            dx = &dx + &dx_v;

            let gl = &mut grads.layers[gl_idx];
            gl.wq = dwq;
            gl.bq = dbq;
            gl.wk = dwk;
            gl.bk = dbk;
            gl.wv = dwv;
            gl.bv = dbv;
            gl.wo = dwo;
            gl.bo = dbo;
            gl.ln1_gamma = dgamma1;
            gl.ln1_beta = dbeta1;
            gl.w1 = dw1;
            gl.b1 = db1;
            gl.w2 = dw2;
            gl.b2 = db2;
            gl.ln2_gamma = dgamma2;
            gl.ln2_beta = dbeta2;
        }
    }

    // embeddings
    for bi in 0..bb {
        for li in 0..ll {
            let id = batch.ids[(bi, li)];
            for di in 0..d {
                let g = dx[(bi, li, di)];
                grads.tok_emb[(id, di)] += g;
                if cfg.arch == Arch::Encoder {
                    grads.pos_emb[(li, di)] += g;
                }
            }
        }
    }

    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, Arch, ModelConfig};

    fn small_config(arch: Arch, dropout: f64) -> ModelConfig {
        ModelConfig {
            vocab_size: 20,
            max_len: 6,
            embed_dim: 8,
            num_layers: 2,
            num_heads: 2,
            ff_dim: 16,
            num_classes: 3,
            dropout_rate: dropout,
            arch,
        }
    }

    fn toy_batch(ids: &[&[usize]], lens: &[usize], seq_len: usize) -> Batch {
        let bb = ids.len();
        let mut id_arr = Array2::zeros((bb, seq_len));
        let mut mask = Array2::zeros((bb, seq_len));
        for (bi, (row, &len)) in ids.iter().zip(lens).enumerate() {
            for (li, &id) in row.iter().enumerate() {
                id_arr[(bi, li)] = id;
            }
            for li in 0..len {
                mask[(bi, li)] = 1.0;
            }
        }
        Batch { ids: id_arr, mask }
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let cfg = small_config(Arch::Encoder, 0.3);
        let params = init_params(&cfg, 1);
        let batch = toy_batch(&[&[1, 2, 3, 0, 0, 0], &[4, 5, 0, 0, 0, 0]], &[3, 2], 6);
        let a = forward(&params, &batch, Mode::Eval, 0).unwrap();
        let b = forward(&params, &batch, Mode::Eval, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn padding_does_not_change_logits() {
        let cfg = small_config(Arch::Encoder, 0.0);
        let params = init_params(&cfg, 2);
        let short = toy_batch(&[&[1, 2, 3]], &[3], 3);
        let long = toy_batch(&[&[1, 2, 3, 0, 0, 0]], &[3], 6);
        let a = forward(&params, &short, Mode::Eval, 0).unwrap();
        let b = forward(&params, &long, Mode::Eval, 0).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-9, "padding changed logits: {x} vs {y}");
        }
    }

    #[test]
    fn bag_of_embeddings_single_token_matches_hand_computation() {
        let cfg = small_config(Arch::BagOfEmbeddings, 0.0);
        let params = init_params(&cfg, 3);
        let token = 7usize;
        let batch = toy_batch(&[&[token, 0, 0, 0, 0, 0]], &[1], 6);
        let logits = forward(&params, &batch, Mode::Eval, 0).unwrap();
        // hand computation: logits = head_w^T e(token) + head_b
        for c in 0..cfg.num_classes {
            let mut expect = params.head_b[c];
            for di in 0..cfg.embed_dim {
                expect += params.tok_emb[(token, di)] * params.head_w[(di, c)];
            }
            assert!((logits[(0, c)] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let cfg = small_config(Arch::Encoder, 0.0);
        let params = init_params(&cfg, 4);
        let batch = toy_batch(&[&[1, 2, 3, 4, 5, 6], &[7, 8, 9, 0, 0, 0]], &[6, 3], 6);
        let logits = forward(&params, &batch, Mode::Eval, 0).unwrap();
        let probs = softmax_rows(&logits);
        for row in probs.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln_k() {
        for k in [2usize, 3, 4, 7] {
            let logits = Array2::from_elem((5, k), 0.37);
            let labels = vec![0usize; 5];
            let loss = cross_entropy(&logits, &labels);
            assert!((loss - (k as f64).ln()).abs() < 1e-12, "K={k}");
        }
    }

    #[test]
    fn cross_entropy_decreases_monotonically_with_margin() {
        let mut last = f64::INFINITY;
        for margin in [0.0, 1.0, 2.0, 5.0, 10.0, 30.0] {
            let mut logits = Array2::zeros((1, 3));
            logits[(0, 1)] = margin;
            let loss = cross_entropy(&logits, &[1]);
            assert!(loss < last || margin == 0.0);
            assert!(loss >= 0.0);
            last = loss;
        }
        assert!(last < 1e-12, "loss should approach 0 at large margin");
    }

    #[test]
    fn cross_entropy_matches_independent_reference() {
        // straightforward reference along a different algebraic route:
        // loss_i = ln(sum_j exp(l_j - l_y))
        let mut rng = crate::rng::SeededRng::new(8);
        let logits = Array2::from_shape_fn((4, 3), |_| rng.normal() * 3.0);
        let labels = [0usize, 2, 1, 1];
        let mut expect = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let row = logits.row(i);
            let z: f64 = row.iter().map(|&l| (l - row[y]).exp()).sum();
            expect += z.ln();
        }
        expect /= labels.len() as f64;
        let got = cross_entropy(&logits, &labels);
        assert!((got - expect).abs() < 1e-10, "got {got}, expect {expect}");
    }

    #[test]
    fn head_bias_gradient_rows_sum_to_zero() {
        // softmax minus one-hot sums to zero per row, so the head bias
        // gradient components always sum to ~0
        let cfg = small_config(Arch::Encoder, 0.0);
        let params = init_params(&cfg, 5);
        let batch = toy_batch(&[&[1, 2, 3, 0, 0, 0], &[4, 5, 6, 7, 0, 0]], &[3, 4], 6);
        let (_, grads) = backward(&params, &batch, &[0, 2], 0).unwrap();
        assert!(grads.head_b.sum().abs() < 1e-12);
    }

    #[test]
    fn unused_token_embedding_gradient_is_exactly_zero() {
        let cfg = small_config(Arch::Encoder, 0.0);
        let params = init_params(&cfg, 6);
        let batch = toy_batch(&[&[1, 2, 3, 0, 0, 0]], &[3], 6);
        let (_, grads) = backward(&params, &batch, &[1], 0).unwrap();
        // token 19 never appears in the batch
        assert!(grads.tok_emb.row(19).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn rejects_out_of_vocab_ids() {
        let cfg = small_config(Arch::Encoder, 0.0);
        let params = init_params(&cfg, 6);
        let batch = toy_batch(&[&[25, 0, 0, 0, 0, 0]], &[1], 6);
        assert!(matches!(
            forward(&params, &batch, Mode::Eval, 0),
            Err(ModelError::ShapeMismatch(_))
        ));
    }
}

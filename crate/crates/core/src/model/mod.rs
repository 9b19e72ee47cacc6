//! The trainable classifier: a desk-scale transformer encoder trained
//! from scratch with the published protocol (Adam, cross-entropy,
//! dropout after pooling, fixed-length padded inputs).
//!
//! Everything is 64-bit floating point, and every training run is a
//! deterministic function of its seeds. Gradients are written by hand
//! and verified against central finite differences in the test suite.

mod checkpoint;
pub mod gradcheck;
mod net;
mod train;

pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, load_checkpoint, save_checkpoint, Checkpoint,
};
pub use net::{
    backward, batch_labels, cross_entropy, forward, softmax_rows, training_loss, Batch, Mode,
};
pub use train::{
    adam_step, predict, predict_labels, predict_proba, train, AdamState, EpochStats, TrainHistory,
};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("validation set is empty")]
    EmptyValidationSet,
    #[error("record is missing a label id")]
    MissingLabel,
    #[error("non-finite value in tensor {tensor}")]
    NonFinite { tensor: String },
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Network architecture variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    /// Token + positional embeddings, self-attention encoder layers,
    /// masked mean pooling, dropout, linear head.
    Encoder,
    /// Masked mean of token embeddings, dropout, linear head.
    BagOfEmbeddings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub max_len: usize,
    pub embed_dim: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ff_dim: usize,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub arch: Arch,
}

impl ModelConfig {
    /// Defaults: max_len 50, embed 64, 2 layers, 4 heads, ff 128,
    /// dropout 0.3, encoder arch.
    pub fn new(vocab_size: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            max_len: 50,
            embed_dim: 64,
            num_layers: 2,
            num_heads: 4,
            ff_dim: 128,
            num_classes,
            dropout_rate: 0.3,
            arch: Arch::Encoder,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vocab_size == 0
            || self.max_len == 0
            || self.embed_dim == 0
            || self.num_heads == 0
            || self.ff_dim == 0
            || self.num_classes == 0
        {
            return Err(ModelError::InvalidConfig("all dimensions must be >= 1".into()));
        }
        if self.embed_dim % self.num_heads != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "embed_dim {} not divisible by num_heads {}",
                self.embed_dim, self.num_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ModelError::InvalidConfig(format!(
                "dropout_rate {} not in [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, batch_size: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 10,
            learning_rate,
            batch_size,
            seed,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 {
            return Err(ModelError::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(ModelError::InvalidConfig("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-layer weights: attention projections, feed-forward, and the two
/// layer norms.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ln1_gamma: Array1<f64>,
    pub ln1_beta: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub ln2_gamma: Array1<f64>,
    pub ln2_beta: Array1<f64>,
}

/// All trainable tensors. Also used (zero-filled) as the gradient and
/// Adam moment containers, so moments are shaped identically to the
/// parameters by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub config: ModelConfig,
    /// [vocab_size, embed_dim]
    pub tok_emb: Array2<f64>,
    /// [max_len, embed_dim]; unused by the bag-of-embeddings arch.
    pub pos_emb: Array2<f64>,
    pub layers: Vec<LayerParams>,
    /// [embed_dim, num_classes]
    pub head_w: Array2<f64>,
    /// [num_classes]
    pub head_b: Array1<f64>,
}

impl ClassifierParams {
    pub fn zeros(config: &ModelConfig) -> ClassifierParams {
        let d = config.embed_dim;
        let layer = || LayerParams {
            wq: Array2::zeros((d, d)),
            bq: Array1::zeros(d),
            wk: Array2::zeros((d, d)),
            bk: Array1::zeros(d),
            wv: Array2::zeros((d, d)),
            bv: Array1::zeros(d),
            wo: Array2::zeros((d, d)),
            bo: Array1::zeros(d),
            ln1_gamma: Array1::zeros(d),
            ln1_beta: Array1::zeros(d),
            w1: Array2::zeros((d, config.ff_dim)),
            b1: Array1::zeros(config.ff_dim),
            w2: Array2::zeros((config.ff_dim, d)),
            b2: Array1::zeros(d),
            ln2_gamma: Array1::zeros(d),
            ln2_beta: Array1::zeros(d),
        };
        ClassifierParams {
            config: config.clone(),
            tok_emb: Array2::zeros((config.vocab_size, d)),
            pos_emb: Array2::zeros((config.max_len, d)),
            layers: (0..config.num_layers).map(|_| layer()).collect(),
            head_w: Array2::zeros((d, config.num_classes)),
            head_b: Array1::zeros(config.num_classes),
        }
    }

    /// Flat views of every tensor in a fixed, documented order:
    /// tok_emb, pos_emb, per layer (wq bq wk bk wv bv wo bo ln1_gamma
    /// ln1_beta w1 b1 w2 b2 ln2_gamma ln2_beta), head_w, head_b.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("tok_emb".into(), self.tok_emb.as_slice().unwrap()),
            ("pos_emb".into(), self.pos_emb.as_slice().unwrap()),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            let named: [(&str, &[f64]); 16] = [
                ("wq", l.wq.as_slice().unwrap()),
                ("bq", l.bq.as_slice().unwrap()),
                ("wk", l.wk.as_slice().unwrap()),
                ("bk", l.bk.as_slice().unwrap()),
                ("wv", l.wv.as_slice().unwrap()),
                ("bv", l.bv.as_slice().unwrap()),
                ("wo", l.wo.as_slice().unwrap()),
                ("bo", l.bo.as_slice().unwrap()),
                ("ln1_gamma", l.ln1_gamma.as_slice().unwrap()),
                ("ln1_beta", l.ln1_beta.as_slice().unwrap()),
                ("w1", l.w1.as_slice().unwrap()),
                ("b1", l.b1.as_slice().unwrap()),
                ("w2", l.w2.as_slice().unwrap()),
                ("b2", l.b2.as_slice().unwrap()),
                ("ln2_gamma", l.ln2_gamma.as_slice().unwrap()),
                ("ln2_beta", l.ln2_beta.as_slice().unwrap()),
            ];
            for (name, slice) in named {
                out.push((format!("layer{i}.{name}"), slice));
            }
        }
        out.push(("head_w".into(), self.head_w.as_slice().unwrap()));
        out.push(("head_b".into(), self.head_b.as_slice().unwrap()));
        out
    }

    /// Mutable flat views, same order as [`ClassifierParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = vec![
            ("tok_emb".into(), self.tok_emb.as_slice_mut().unwrap()),
            ("pos_emb".into(), self.pos_emb.as_slice_mut().unwrap()),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            let named: [(&str, &mut [f64]); 16] = [
                ("wq", l.wq.as_slice_mut().unwrap()),
                ("bq", l.bq.as_slice_mut().unwrap()),
                ("wk", l.wk.as_slice_mut().unwrap()),
                ("bk", l.bk.as_slice_mut().unwrap()),
                ("wv", l.wv.as_slice_mut().unwrap()),
                ("bv", l.bv.as_slice_mut().unwrap()),
                ("wo", l.wo.as_slice_mut().unwrap()),
                ("bo", l.bo.as_slice_mut().unwrap()),
                ("ln1_gamma", l.ln1_gamma.as_slice_mut().unwrap()),
                ("ln1_beta", l.ln1_beta.as_slice_mut().unwrap()),
                ("w1", l.w1.as_slice_mut().unwrap()),
                ("b1", l.b1.as_slice_mut().unwrap()),
                ("w2", l.w2.as_slice_mut().unwrap()),
                ("b2", l.b2.as_slice_mut().unwrap()),
                ("ln2_gamma", l.ln2_gamma.as_slice_mut().unwrap()),
                ("ln2_beta", l.ln2_beta.as_slice_mut().unwrap()),
            ];
            for (name, slice) in named {
                out.push((format!("layer{i}.{name}"), slice));
            }
        }
        out.push(("head_w".into(), self.head_w.as_slice_mut().unwrap()));
        out.push(("head_b".into(), self.head_b.as_slice_mut().unwrap()));
        out
    }

    /// Shapes for the checkpoint header, in tensor order.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out: Vec<(String, Vec<usize>)> = vec![
            ("tok_emb".into(), self.tok_emb.shape().to_vec()),
            ("pos_emb".into(), self.pos_emb.shape().to_vec()),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            let named: [(&str, Vec<usize>); 16] = [
                ("wq", l.wq.shape().to_vec()),
                ("bq", l.bq.shape().to_vec()),
                ("wk", l.wk.shape().to_vec()),
                ("bk", l.bk.shape().to_vec()),
                ("wv", l.wv.shape().to_vec()),
                ("bv", l.bv.shape().to_vec()),
                ("wo", l.wo.shape().to_vec()),
                ("bo", l.bo.shape().to_vec()),
                ("ln1_gamma", l.ln1_gamma.shape().to_vec()),
                ("ln1_beta", l.ln1_beta.shape().to_vec()),
                ("w1", l.w1.shape().to_vec()),
                ("b1", l.b1.shape().to_vec()),
                ("w2", l.w2.shape().to_vec()),
                ("b2", l.b2.shape().to_vec()),
                ("ln2_gamma", l.ln2_gamma.shape().to_vec()),
                ("ln2_beta", l.ln2_beta.shape().to_vec()),
            ];
            for (name, shape) in named {
                out.push((format!("layer{i}.{name}"), shape));
            }
        }
        out.push(("head_w".into(), self.head_w.shape().to_vec()));
        out.push(("head_b".into(), self.head_b.shape().to_vec()));
        out
    }

    /// Name of the first tensor holding a non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        self.tensors()
            .into_iter()
            .find(|(_, xs)| xs.iter().any(|x| !x.is_finite()))
            .map(|(name, _)| name)
    }
}

/// Initialization scheme (documented contract): token and positional
/// embeddings are N(0, 0.1^2); projection and feed-forward weights are
/// Xavier-normal N(0, 2/(fan_in+fan_out)); all biases and layer-norm
/// betas are zero; layer-norm gammas are one. Draws happen in tensor
/// order from a ChaCha8 stream, so the result is a pure function of
/// (config, seed).
pub fn init_params(config: &ModelConfig, seed: u64) -> ClassifierParams {
    let mut rng = SeededRng::new(seed);
    let mut params = ClassifierParams::zeros(config);

    let fill_normal = |arr: &mut [f64], std: f64, rng: &mut SeededRng| {
        for x in arr {
            *x = std * rng.normal();
        }
    };
    let xavier = |fan_in: usize, fan_out: usize| (2.0 / (fan_in + fan_out) as f64).sqrt();

    const EMB_STD: f64 = 0.1;
    fill_normal(params.tok_emb.as_slice_mut().unwrap(), EMB_STD, &mut rng);
    fill_normal(params.pos_emb.as_slice_mut().unwrap(), EMB_STD, &mut rng);
    let d = config.embed_dim;
    let f = config.ff_dim;
    for layer in &mut params.layers {
        let proj = xavier(d, d);
        fill_normal(layer.wq.as_slice_mut().unwrap(), proj, &mut rng);
        fill_normal(layer.wk.as_slice_mut().unwrap(), proj, &mut rng);
        fill_normal(layer.wv.as_slice_mut().unwrap(), proj, &mut rng);
        fill_normal(layer.wo.as_slice_mut().unwrap(), proj, &mut rng);
        fill_normal(layer.w1.as_slice_mut().unwrap(), xavier(d, f), &mut rng);
        fill_normal(layer.w2.as_slice_mut().unwrap(), xavier(f, d), &mut rng);
        layer.ln1_gamma.fill(1.0);
        layer.ln2_gamma.fill(1.0);
    }
    fill_normal(
        params.head_w.as_slice_mut().unwrap(),
        xavier(d, config.num_classes),
        &mut rng,
    );
    params
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ModelConfig {
        ModelConfig {
            vocab_size: 12,
            max_len: 6,
            embed_dim: 8,
            num_layers: 2,
            num_heads: 2,
            ff_dim: 16,
            num_classes: 3,
            dropout_rate: 0.3,
            arch: Arch::Encoder,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = small_config();
        let a = init_params(&cfg, 5);
        let b = init_params(&cfg, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn init_differs_across_seeds() {
        let cfg = small_config();
        let a = init_params(&cfg, 1);
        let b = init_params(&cfg, 2);
        assert_ne!(a.tok_emb, b.tok_emb);
    }

    #[test]
    fn init_biases_are_zero() {
        let cfg = small_config();
        let p = init_params(&cfg, 7);
        assert!(p.head_b.iter().all(|&x| x == 0.0));
        for l in &p.layers {
            assert!(l.bq.iter().all(|&x| x == 0.0));
            assert!(l.b1.iter().all(|&x| x == 0.0));
            assert!(l.ln1_beta.iter().all(|&x| x == 0.0));
            assert!(l.ln1_gamma.iter().all(|&x| x == 1.0));
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config();
        assert!(cfg.validate().is_ok());
        cfg.num_heads = 3; // 8 % 3 != 0
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.dropout_rate = 1.0;
        assert!(cfg.validate().is_err());
        let mut tc = TrainConfig::new(1e-3, 32, 0);
        assert!(tc.validate().is_ok());
        tc.epochs = 0;
        assert!(tc.validate().is_err());
    }

    #[test]
    fn tensor_enumeration_matches_shapes() {
        let cfg = small_config();
        let p = init_params(&cfg, 3);
        let tensors = p.tensors();
        let shapes = p.tensor_shapes();
        assert_eq!(tensors.len(), shapes.len());
        for ((n1, data), (n2, shape)) in tensors.iter().zip(shapes.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(data.len(), shape.iter().product::<usize>());
        }
        assert_eq!(tensors.len(), 2 + 2 * 16 + 2);
    }

    #[test]
    fn non_finite_detection_names_tensor() {
        let cfg = small_config();
        let mut p = init_params(&cfg, 3);
        assert_eq!(p.first_non_finite(), None);
        p.layers[1].w1[(0, 0)] = f64::NAN;
        assert_eq!(p.first_non_finite(), Some("layer1.w1".to_string()));
    }
}

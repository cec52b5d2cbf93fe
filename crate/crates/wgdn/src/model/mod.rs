//! Wiener-decoder graph autoencoder.
//!
//! The encoder stacks spectral graph convolutions (Eq.-style
//! `H <- phi(g_c(L) H W)`); training injects Gaussian noise into the latent
//! representation, and the decoder runs multi-channel Wiener deconvolution
//! whose filters are refit from per-layer statistics on every forward pass.
//! Gradients are computed by hand with reverse accumulation, treating the
//! refit filters and their driving estimates as constants, and applied with
//! Adam.

mod backward;
mod forward;
mod train;

pub use backward::backward;
pub use forward::{
    augment, decode, encode, forward, precompute_propagation, replay_loss, ConvOperator,
    DecLayerCache, DecoderFilter, EncLayerCache, ForwardCache, ForwardMode, ModelContext,
    StreamCache,
};
pub use train::{encode_embedding, train, train_with_context, TrainResult};

use crate::graph::FeatureMatrix;
use crate::kernels::KernelSpec;
use crate::linalg::{glorot_init, DenseMatrix, SeededRng};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Channel aggregation for the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agg {
    Sum,
    Avg,
    Max,
}

/// Decoder filter family; `Inverse` swaps the Wiener filter for the plain
/// inverse filter (the "-W" ablation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderMode {
    Wiener,
    Inverse,
}

/// How spectral filters are applied: `Polynomial` is the production path
/// (minimax fit + sparse products); `Exact` routes through a full
/// eigendecomposition and exists to validate the polynomial path on small
/// graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralBackend {
    Polynomial,
    Exact,
}

/// Model hyper-parameters; serde defaults mirror [`ModelConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Encoder depth M; the decoder mirrors it.
    pub num_layers: usize,
    /// Feature dimension D; filled from the data when 0.
    pub input_dim: usize,
    /// Embedding dimension D'.
    pub hidden_dim: usize,
    pub kernel: KernelSpec,
    /// Decoder channels q.
    pub channels: usize,
    /// Energy multipliers, one per channel.
    pub gammas: Vec<f64>,
    /// Latent augmentation magnitude.
    pub beta: f64,
    /// Filter fit order K; the kernel's default when absent.
    pub remez_order: Option<usize>,
    pub agg: Agg,
    /// Whether the last encoder layer is activated.
    pub last_activation: bool,
    pub skip_connection: bool,
    pub decoder_mode: DecoderMode,
    /// Latent augmentation on/off (the "-A" ablation).
    pub augment: bool,
    pub backend: SpectralBackend,
    pub seed: u64,
    pub lr: f64,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub epochs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_layers: 2,
            input_dim: 0,
            hidden_dim: 16,
            kernel: KernelSpec::heat(1.0),
            channels: 3,
            gammas: vec![0.1, 1.0, 10.0],
            beta: 0.5,
            remez_order: None,
            agg: Agg::Sum,
            last_activation: true,
            skip_connection: false,
            decoder_mode: DecoderMode::Wiener,
            augment: true,
            backend: SpectralBackend::Polynomial,
            seed: 1,
            lr: 1e-3,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            epochs: 200,
        }
    }
}

impl ModelConfig {
    pub fn order(&self) -> usize {
        self.remez_order.unwrap_or_else(|| self.kernel.default_order())
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::InvalidInput("num_layers must be >= 1".into()));
        }
        if self.channels == 0 {
            return Err(Error::InvalidInput("channels must be >= 1".into()));
        }
        if self.gammas.len() != self.channels {
            return Err(Error::InvalidInput(format!(
                "gammas has {} entries for {} channels",
                self.gammas.len(),
                self.channels
            )));
        }
        if self.gammas.iter().any(|&g| g <= 0.0) {
            return Err(Error::InvalidInput("gammas must be positive".into()));
        }
        if self.beta < 0.0 {
            return Err(Error::InvalidInput("beta must be >= 0".into()));
        }
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidInput("zero model dimension".into()));
        }
        if self.lr <= 0.0 {
            return Err(Error::InvalidInput("learning rate must be positive".into()));
        }
        if self.order() > crate::remez::REMEZ_MAX_DEGREE {
            return Err(Error::InvalidInput(format!(
                "remez_order {} exceeds cap {}",
                self.order(),
                crate::remez::REMEZ_MAX_DEGREE
            )));
        }
        self.kernel.validate()
    }

    /// Number of activated encoder layers.
    pub(crate) fn encoder_slope_count(&self) -> usize {
        if self.last_activation {
            self.num_layers
        } else {
            self.num_layers - 1
        }
    }
}

/// Learnable weights: encoder and per-channel decoder matrices plus one
/// PReLU slope per activation site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Encoder weights, layer m = 0..M-1 (first D x D', the rest D' x D').
    pub encoder: Vec<DenseMatrix>,
    /// Slopes for activated encoder layers, in layer order.
    pub encoder_slopes: Vec<f64>,
    /// Decoder weights indexed `[l][i]`: l = 0 is the layer consuming the
    /// embedding, l = M-1 produces the reconstruction (D' x D); channel i.
    pub decoder: Vec<Vec<DenseMatrix>>,
    /// Slopes for activated decoder layers: `[l][i]` for l = 0..M-2.
    pub decoder_slopes: Vec<Vec<f64>>,
}

/// Initial PReLU slope at every activation site.
pub const PRELU_INIT_SLOPE: f64 = 0.25;

impl Params {
    /// Glorot-initialized weights, slopes at [`PRELU_INIT_SLOPE`].
    pub fn init(cfg: &ModelConfig, rng: &mut SeededRng) -> Self {
        let m = cfg.num_layers;
        let d = cfg.input_dim;
        let h = cfg.hidden_dim;

        let encoder = (0..m)
            .map(|layer| {
                let fan_in = if layer == 0 { d } else { h };
                glorot_init(rng, fan_in, h)
            })
            .collect();
        let encoder_slopes = vec![PRELU_INIT_SLOPE; cfg.encoder_slope_count()];

        let decoder = (0..m)
            .map(|l| {
                let fan_out = if l == m - 1 { d } else { h };
                (0..cfg.channels)
                    .map(|_| glorot_init(rng, h, fan_out))
                    .collect()
            })
            .collect();
        let decoder_slopes = (0..m.saturating_sub(1))
            .map(|_| vec![PRELU_INIT_SLOPE; cfg.channels])
            .collect();

        Self {
            encoder,
            encoder_slopes,
            decoder,
            decoder_slopes,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self
                .encoder
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows, w.cols))
                .collect(),
            encoder_slopes: vec![0.0; self.encoder_slopes.len()],
            decoder: self
                .decoder
                .iter()
                .map(|ws| ws.iter().map(|w| DenseMatrix::zeros(w.rows, w.cols)).collect())
                .collect(),
            decoder_slopes: self
                .decoder_slopes
                .iter()
                .map(|s| vec![0.0; s.len()])
                .collect(),
        }
    }

    /// All scalar parameters in a fixed order (weights, then slopes).
    pub fn flat(&self) -> impl Iterator<Item = &f64> {
        self.encoder
            .iter()
            .flat_map(|w| w.data.iter())
            .chain(self.decoder.iter().flatten().flat_map(|w| w.data.iter()))
            .chain(self.encoder_slopes.iter())
            .chain(self.decoder_slopes.iter().flatten())
    }

    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.encoder
            .iter_mut()
            .flat_map(|w| w.data.iter_mut())
            .chain(
                self.decoder
                    .iter_mut()
                    .flatten()
                    .flat_map(|w| w.data.iter_mut()),
            )
            .chain(self.encoder_slopes.iter_mut())
            .chain(self.decoder_slopes.iter_mut().flatten())
    }

    pub fn num_params(&self) -> usize {
        self.flat().count()
    }

    pub fn is_finite(&self) -> bool {
        self.flat().all(|v| v.is_finite())
    }
}

/// Adam moment accumulators; shapes mirror [`Params`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Params,
    pub second_moment: Params,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &Params) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }
}

/// One Adam update with bias correction.
pub fn adam_step(
    params: &mut Params,
    grads: &Params,
    state: &mut AdamState,
    lr: f64,
    betas: (f64, f64),
    eps: f64,
) {
    state.step += 1;
    let (b1, b2) = betas;
    let bias1 = 1.0 - b1.powi(state.step as i32);
    let bias2 = 1.0 - b2.powi(state.step as i32);
    for (((p, &g), m), v) in params
        .flat_mut()
        .zip(grads.flat())
        .zip(state.first_moment.flat_mut())
        .zip(state.second_moment.flat_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Reconstruction loss |X - X_hat|_F (Frobenius norm, not squared).
pub fn loss(x: &FeatureMatrix, xhat: &FeatureMatrix) -> Result<f64> {
    if x.shape() != xhat.shape() {
        return Err(Error::ShapeMismatch(format!(
            "loss: {:?} vs {:?}",
            x.shape(),
            xhat.shape()
        )));
    }
    Ok(x.sub(xhat).frobenius_norm())
}

/// Column-wise pooling of node embeddings into one graph embedding.
pub fn readout(h: &FeatureMatrix, kind: Agg) -> Result<Vec<f64>> {
    if h.rows == 0 || h.cols == 0 {
        return Err(Error::InvalidInput("readout on empty matrix".into()));
    }
    let mut out = vec![match kind {
        Agg::Max => f64::NEG_INFINITY,
        _ => 0.0,
    }; h.cols];
    for i in 0..h.rows {
        for (acc, &v) in out.iter_mut().zip(h.row(i)) {
            match kind {
                Agg::Sum | Agg::Avg => *acc += v,
                Agg::Max => *acc = acc.max(v),
            }
        }
    }
    if kind == Agg::Avg {
        for acc in &mut out {
            *acc /= h.rows as f64;
        }
    }
    Ok(out)
}

pub(crate) fn prelu(m: &DenseMatrix, slope: f64) -> DenseMatrix {
    DenseMatrix::from_vec(
        m.rows,
        m.cols,
        m.data.iter().map(|&v| if v > 0.0 { v } else { slope * v }).collect(),
    )
}

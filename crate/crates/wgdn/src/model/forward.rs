//! Forward pass: spectral encoder, latent augmentation, and the adaptive
//! multi-channel Wiener decoder.
//!
//! Two modes share one code path. `Sample` draws fresh noise and refits the
//! decoder filters from the current activations (training). `Replay` reuses
//! the noise realizations, estimates, and fitted filters of an earlier pass,
//! which makes the loss a deterministic function of the parameters with the
//! refit machinery held constant — exactly the function the backward pass
//! differentiates.

use super::{prelu, DecoderMode, ModelConfig, Params, SpectralBackend};
use crate::graph::{
    normalized_laplacian, random_walk_matrix, FeatureMatrix, Graph, SparseOperator,
};
use crate::kernels::{
    estimate_avg_energy, estimate_sigma2, eval_conv, eval_inverse, eval_wiener, WienerSpec,
    INVERSE_CLAMP_DEFAULT,
};
use crate::linalg::{eigh, gaussian_matrix, DenseMatrix, EigenDecomposition, SeededRng};
use crate::remez::{apply_matrix_polynomial, remez_fit, RemezPolynomial};
use crate::{Error, Result};

/// Spectrum support of the normalized Laplacian; all filter fits live here.
pub const FIT_DOMAIN: (f64, f64) = (0.0, 2.0);

/// Encoder propagation apparatus: applies g_c(L).
#[derive(Debug, Clone)]
pub enum ConvOperator {
    /// Polynomial in the sparse Laplacian. The GCN kernel is the exact
    /// degree-1 polynomial 1 - t; heat and PPR are minimax fits.
    Poly(RemezPolynomial),
    /// Per-eigenvalue filter values (validation backend).
    Exact(Vec<f64>),
}

/// Builds the propagation operator for a convolution kernel at the given
/// fit order.
pub fn precompute_propagation(
    kernel: &crate::kernels::KernelSpec,
    order: usize,
) -> Result<ConvOperator> {
    let poly = match kernel.kind {
        crate::kernels::KernelKind::Gcn => {
            RemezPolynomial::from_coeffs(vec![1.0, -1.0], FIT_DOMAIN)
        }
        _ => remez_fit(|t| eval_conv(kernel, t), order, FIT_DOMAIN.0, FIT_DOMAIN.1)?,
    };
    Ok(ConvOperator::Poly(poly))
}

/// Decoder filter for one channel of one layer, frozen for the pass.
#[derive(Debug, Clone)]
pub enum DecoderFilter {
    Poly(RemezPolynomial),
    Exact(Vec<f64>),
}

/// Immutable per-graph state shared by every forward/backward pass.
pub struct ModelContext {
    pub cfg: ModelConfig,
    pub laplacian: SparseOperator,
    pub rw: SparseOperator,
    pub conv: ConvOperator,
    /// Present only for the exact validation backend.
    pub eig: Option<EigenDecomposition>,
}

impl ModelContext {
    pub fn new(cfg: ModelConfig, graph: &Graph) -> Result<Self> {
        cfg.validate()?;
        let laplacian = normalized_laplacian(graph);
        let rw = random_walk_matrix(graph);
        let (conv, eig) = match cfg.backend {
            SpectralBackend::Polynomial => (precompute_propagation(&cfg.kernel, cfg.order())?, None),
            SpectralBackend::Exact => {
                let ed = eigh(&laplacian.to_dense())?;
                let values = ed
                    .eigenvalues
                    .iter()
                    .map(|&lam| eval_conv(&cfg.kernel, lam))
                    .collect();
                (ConvOperator::Exact(values), Some(ed))
            }
        };
        Ok(Self {
            cfg,
            laplacian,
            rw,
            conv,
            eig,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.laplacian.dim
    }

    /// Applies the encoder propagation g_c(L) to x.
    pub fn apply_conv(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        match &self.conv {
            ConvOperator::Poly(p) => apply_matrix_polynomial(&self.laplacian, p, x),
            ConvOperator::Exact(values) => self.apply_values(values, x),
        }
    }

    /// Applies a decoder filter to x.
    pub fn apply_filter(&self, filter: &DecoderFilter, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        match filter {
            DecoderFilter::Poly(p) => apply_matrix_polynomial(&self.laplacian, p, x),
            DecoderFilter::Exact(values) => self.apply_values(values, x),
        }
    }

    /// U diag(values) U^T x with the stored decomposition.
    fn apply_values(&self, values: &[f64], x: &FeatureMatrix) -> Result<FeatureMatrix> {
        let ed = self
            .eig
            .as_ref()
            .expect("exact filter application requires the exact backend");
        let mut proj = ed.eigenvectors.transpose_matmul(x);
        for (i, &v) in values.iter().enumerate() {
            for entry in &mut proj.data[i * proj.cols..(i + 1) * proj.cols] {
                *entry *= v;
            }
        }
        Ok(ed.eigenvectors.matmul(&proj))
    }

    /// Fits one decoder channel's filter from the layer statistics.
    pub fn fit_decoder_filter(
        &self,
        sigma2: f64,
        avg_energy: f64,
        gamma: f64,
    ) -> Result<DecoderFilter> {
        let kernel = self.cfg.kernel;
        let mode = self.cfg.decoder_mode;
        let scalar = move |lam: f64| match mode {
            DecoderMode::Wiener => {
                eval_wiener(&WienerSpec::new(kernel, sigma2, avg_energy, gamma), lam)
            }
            DecoderMode::Inverse => eval_inverse(&kernel, lam, INVERSE_CLAMP_DEFAULT),
        };
        match self.cfg.backend {
            SpectralBackend::Polynomial => Ok(DecoderFilter::Poly(remez_fit(
                scalar,
                self.cfg.order(),
                FIT_DOMAIN.0,
                FIT_DOMAIN.1,
            )?)),
            SpectralBackend::Exact => {
                let ed = self.eig.as_ref().expect("exact backend has a decomposition");
                Ok(DecoderFilter::Exact(
                    ed.eigenvalues.iter().map(|&lam| scalar(lam)).collect(),
                ))
            }
        }
    }
}

/// One encoder layer's intermediates.
#[derive(Debug, Clone)]
pub struct EncLayerCache {
    /// Layer input H(m).
    pub input: DenseMatrix,
    /// g_c(L) H(m).
    pub propagated: DenseMatrix,
    /// Propagated input times the layer weight, before activation.
    pub preact: DenseMatrix,
}

/// One decoder stream (main, or the skip-connection stream).
#[derive(Debug, Clone)]
pub struct StreamCache {
    pub input: DenseMatrix,
    pub sigma2: f64,
    pub avg_energy: f64,
    pub filters: Vec<DecoderFilter>,
    /// Per channel: filter applied to the input.
    pub filtered: Vec<DenseMatrix>,
    /// Per channel: filtered input times the channel weight.
    pub preacts: Vec<DenseMatrix>,
    /// Per channel: activated output Z_i.
    pub outputs: Vec<DenseMatrix>,
    /// Channel aggregation of this stream.
    pub agg: DenseMatrix,
}

/// One decoder layer: the main stream, plus the skip stream when present.
#[derive(Debug, Clone)]
pub struct DecLayerCache {
    pub streams: Vec<StreamCache>,
}

/// Every intermediate of one forward pass; consumed by the backward pass
/// and replayable for derivative checks.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub enc: Vec<EncLayerCache>,
    /// Un-augmented embedding H(M).
    pub embedding: DenseMatrix,
    /// Realized additive noise at the embedding, when augmenting.
    pub latent_noise: Option<DenseMatrix>,
    /// Realized additive noise per decoder layer's skip stream (index l).
    pub skip_noise: Vec<Option<DenseMatrix>>,
    pub dec: Vec<DecLayerCache>,
    pub xhat: FeatureMatrix,
}

/// Noise and filter source for a forward pass.
pub enum ForwardMode<'a> {
    /// Draw noise and refit filters (training).
    Sample(&'a mut SeededRng),
    /// Reuse an earlier pass's noise and filters (derivative checks).
    Replay(&'a ForwardCache),
}

/// Latent Gaussian augmentation: H + beta * E with E ~ N(0, var(H) I).
///
/// The noise scale is the scalar variance over all entries of H, so a
/// constant H is returned unchanged for any beta.
pub fn augment(h: &FeatureMatrix, beta: f64, rng: &mut SeededRng) -> FeatureMatrix {
    h.add(&draw_scaled_noise(h, beta, rng))
}

fn draw_scaled_noise(h: &FeatureMatrix, beta: f64, rng: &mut SeededRng) -> DenseMatrix {
    let sigma_p = h.variance().sqrt();
    gaussian_matrix(rng, h.rows, h.cols).scale(beta * sigma_p)
}

/// Runs the encoder stack, returning the embedding H(M) and per-layer
/// intermediates.
pub fn encode(
    ctx: &ModelContext,
    params: &Params,
    x: &FeatureMatrix,
) -> Result<(DenseMatrix, Vec<EncLayerCache>)> {
    let cfg = &ctx.cfg;
    if x.cols != cfg.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "encode: features have {} columns, config expects {}",
            x.cols, cfg.input_dim
        )));
    }
    if x.rows != ctx.num_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "encode: features have {} rows, graph has {} nodes",
            x.rows,
            ctx.num_nodes()
        )));
    }

    let mut h = x.clone();
    let mut layers = Vec::with_capacity(cfg.num_layers);
    for m in 0..cfg.num_layers {
        let propagated = ctx.apply_conv(&h)?;
        let preact = propagated.matmul(&params.encoder[m]);
        if !preact.is_finite() {
            return Err(Error::NonFinite(format!("encoder layer {m} activations")));
        }
        let next = if m < params.encoder_slopes.len() {
            prelu(&preact, params.encoder_slopes[m])
        } else {
            preact.clone()
        };
        layers.push(EncLayerCache {
            input: h,
            propagated,
            preact,
        });
        h = next;
    }
    Ok((h, layers))
}

/// Plain multi-layer decode of an (augmented) embedding, estimating the
/// filter statistics fresh from each layer's input. No skip streams.
pub fn decode(
    ctx: &ModelContext,
    params: &Params,
    hhat: &FeatureMatrix,
) -> Result<(FeatureMatrix, Vec<DecLayerCache>)> {
    let mut current = hhat.clone();
    let mut layers = Vec::with_capacity(ctx.cfg.num_layers);
    for l in 0..ctx.cfg.num_layers {
        let stream = decoder_stream(ctx, params, l, &current, None)?;
        current = stream.agg.clone();
        layers.push(DecLayerCache {
            streams: vec![stream],
        });
    }
    Ok((current, layers))
}

/// Full forward pass: encode, augment (per config), decode with skip
/// streams when configured.
pub fn forward(
    ctx: &ModelContext,
    params: &Params,
    x: &FeatureMatrix,
    mut mode: ForwardMode,
) -> Result<ForwardCache> {
    let cfg = &ctx.cfg;
    let m_layers = cfg.num_layers;
    let (embedding, enc) = encode(ctx, params, x)?;

    let latent_noise = if cfg.augment {
        Some(match &mut mode {
            ForwardMode::Sample(rng) => draw_scaled_noise(&embedding, cfg.beta, rng),
            ForwardMode::Replay(cache) => cache
                .latent_noise
                .clone()
                .expect("replayed cache was built with augmentation"),
        })
    } else {
        None
    };
    let mut current = match &latent_noise {
        Some(e) => embedding.add(e),
        None => embedding.clone(),
    };

    let mut skip_noise: Vec<Option<DenseMatrix>> = vec![None; m_layers];
    let mut dec = Vec::with_capacity(m_layers);
    for l in 0..m_layers {
        let replay_main = match &mode {
            ForwardMode::Replay(cache) => Some(&cache.dec[l].streams[0]),
            ForwardMode::Sample(_) => None,
        };
        let main = decoder_stream(ctx, params, l, &current, replay_main)?;
        let mut streams = vec![main];

        if cfg.skip_connection && l >= 1 {
            // Input level m = M - l; the skip stream re-decodes the
            // (augmented) encoder output at that level.
            let level = m_layers - l;
            let h_level = &enc[level].input;
            let noise = if cfg.augment {
                Some(match &mut mode {
                    ForwardMode::Sample(rng) => draw_scaled_noise(h_level, cfg.beta, rng),
                    ForwardMode::Replay(cache) => cache.skip_noise[l]
                        .clone()
                        .expect("replayed cache was built with the same skip layout"),
                })
            } else {
                None
            };
            let skip_input = match &noise {
                Some(e) => h_level.add(e),
                None => h_level.clone(),
            };
            skip_noise[l] = noise;
            let replay_skip = match &mode {
                ForwardMode::Replay(cache) => Some(&cache.dec[l].streams[1]),
                ForwardMode::Sample(_) => None,
            };
            streams.push(decoder_stream(ctx, params, l, &skip_input, replay_skip)?);
        }

        current = if streams.len() == 2 {
            streams[0].agg.add(&streams[1].agg).scale(0.5)
        } else {
            streams[0].agg.clone()
        };
        dec.push(DecLayerCache { streams });
    }

    Ok(ForwardCache {
        enc,
        embedding,
        latent_noise,
        skip_noise,
        dec,
        xhat: current,
    })
}

/// Loss of a replayed forward pass at (possibly perturbed) parameters, with
/// the cache's noise and filters held constant.
pub fn replay_loss(
    ctx: &ModelContext,
    params: &Params,
    cache: &ForwardCache,
    x: &FeatureMatrix,
) -> Result<f64> {
    let replayed = forward(ctx, params, x, ForwardMode::Replay(cache))?;
    super::loss(x, &replayed.xhat)
}

fn decoder_stream(
    ctx: &ModelContext,
    params: &Params,
    l: usize,
    input: &DenseMatrix,
    replay: Option<&StreamCache>,
) -> Result<StreamCache> {
    let cfg = &ctx.cfg;
    let (sigma2, avg_energy, filters) = match replay {
        Some(s) => (s.sigma2, s.avg_energy, s.filters.clone()),
        None => {
            let sigma2 = estimate_sigma2(input, &ctx.rw)?;
            let avg_energy = estimate_avg_energy(input);
            let filters = cfg
                .gammas
                .iter()
                .map(|&gamma| ctx.fit_decoder_filter(sigma2, avg_energy, gamma))
                .collect::<Result<Vec<_>>>()?;
            (sigma2, avg_energy, filters)
        }
    };

    // The final decoder layer (l = M-1) emits the linear reconstruction.
    let activated = l < cfg.num_layers - 1;
    let mut filtered = Vec::with_capacity(cfg.channels);
    let mut preacts = Vec::with_capacity(cfg.channels);
    let mut outputs = Vec::with_capacity(cfg.channels);
    for i in 0..cfg.channels {
        let f = ctx.apply_filter(&filters[i], input)?;
        let pre = f.matmul(&params.decoder[l][i]);
        if !pre.is_finite() {
            return Err(Error::NonFinite(format!(
                "decoder layer {} channel {i} activations",
                cfg.num_layers - l
            )));
        }
        let out = if activated {
            prelu(&pre, params.decoder_slopes[l][i])
        } else {
            pre.clone()
        };
        filtered.push(f);
        preacts.push(pre);
        outputs.push(out);
    }
    let agg = aggregate(&outputs, cfg.agg);

    Ok(StreamCache {
        input: input.clone(),
        sigma2,
        avg_energy,
        filters,
        filtered,
        preacts,
        outputs,
        agg,
    })
}

fn aggregate(outputs: &[DenseMatrix], agg: super::Agg) -> DenseMatrix {
    let mut acc = outputs[0].clone();
    match agg {
        super::Agg::Sum => {
            for o in &outputs[1..] {
                acc.add_assign(o);
            }
        }
        super::Agg::Avg => {
            for o in &outputs[1..] {
                acc.add_assign(o);
            }
            acc = acc.scale(1.0 / outputs.len() as f64);
        }
        super::Agg::Max => {
            for o in &outputs[1..] {
                for (a, &b) in acc.data.iter_mut().zip(&o.data) {
                    *a = a.max(b);
                }
            }
        }
    }
    acc
}

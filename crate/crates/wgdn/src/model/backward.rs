//! Reverse-accumulation gradients for every weight and PReLU slope.
//!
//! The realized augmentation noise, the per-layer estimates, and the fitted
//! decoder filters are constants of the pass (the function differentiated
//! here is the one [`super::replay_loss`] evaluates). Spectral operators are
//! polynomials of the symmetric Laplacian, so each one is its own adjoint
//! and the backward pass applies the identical operator.

use super::forward::{ForwardCache, ModelContext, StreamCache};
use super::{Agg, Params};
use crate::graph::FeatureMatrix;
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

/// Gradients of the reconstruction loss with respect to all parameters.
pub fn backward(
    ctx: &ModelContext,
    params: &Params,
    cache: &ForwardCache,
    x: &FeatureMatrix,
) -> Result<Params> {
    check_cache(ctx, params, cache, x)?;
    let diff = cache.xhat.sub(x);
    let norm = diff.frobenius_norm();
    // d|X - Xhat|_F / dXhat; zero residual has zero gradient.
    let grad_out = if norm == 0.0 {
        DenseMatrix::zeros(diff.rows, diff.cols)
    } else {
        diff.scale(1.0 / norm)
    };
    backward_from_output(ctx, params, cache, grad_out)
}

/// Backward pass seeded with an explicit dLoss/dXhat; linear in the seed.
pub(crate) fn backward_from_output(
    ctx: &ModelContext,
    params: &Params,
    cache: &ForwardCache,
    output_grad: DenseMatrix,
) -> Result<Params> {
    let cfg = &ctx.cfg;
    let m_layers = cfg.num_layers;
    let mut grads = params.zeros_like();

    // dLoss/dH(level) accumulators fed by skip streams and the main path.
    let mut enc_grad: Vec<Option<DenseMatrix>> = (0..=m_layers).map(|_| None).collect();

    let mut grad_out = output_grad;
    for l in (0..m_layers).rev() {
        let layer = &cache.dec[l];
        let upstream = if layer.streams.len() == 2 {
            // The layer output averaged the two stream outputs.
            grad_out.scale(0.5)
        } else {
            grad_out
        };
        let mut main_input_grad = None;
        for (s, stream) in layer.streams.iter().enumerate() {
            let dinput = backward_stream(ctx, params, &mut grads, l, stream, &upstream)?;
            if s == 0 {
                main_input_grad = Some(dinput);
            } else {
                // Skip stream taps the encoder output at level M - l.
                accumulate(&mut enc_grad[m_layers - l], dinput);
            }
        }
        grad_out = main_input_grad.expect("decoder layer has a main stream");
    }
    // The additive noise realization is constant, so the augmentation
    // passes the gradient through to H(M) unchanged.
    accumulate(&mut enc_grad[m_layers], grad_out);

    let mut dh = enc_grad[m_layers]
        .take()
        .expect("main path gradient reaches the embedding");
    for m in (0..m_layers).rev() {
        let layer = &cache.enc[m];
        let ds = if m < params.encoder_slopes.len() {
            let (dpre, dslope) = prelu_backward(&layer.preact, &dh, params.encoder_slopes[m]);
            grads.encoder_slopes[m] += dslope;
            dpre
        } else {
            dh
        };
        grads.encoder[m].add_assign(&layer.propagated.transpose_matmul(&ds));
        if m > 0 {
            let dprop = ds.matmul_transpose(&params.encoder[m]);
            let mut dinput = ctx.apply_conv(&dprop)?;
            if let Some(extra) = enc_grad[m].take() {
                dinput.add_assign(&extra);
            }
            dh = dinput;
        } else {
            dh = ds; // unused; keeps the loop simple
        }
    }
    let _ = dh;

    Ok(grads)
}

fn backward_stream(
    ctx: &ModelContext,
    params: &Params,
    grads: &mut Params,
    l: usize,
    stream: &StreamCache,
    upstream: &DenseMatrix,
) -> Result<DenseMatrix> {
    let cfg = &ctx.cfg;
    let activated = l < cfg.num_layers - 1;

    // For max aggregation: the first channel attaining the maximum wins.
    let winners: Option<Vec<usize>> = if cfg.agg == Agg::Max {
        Some(
            (0..stream.agg.data.len())
                .map(|idx| {
                    let target = stream.agg.data[idx];
                    stream
                        .outputs
                        .iter()
                        .position(|o| o.data[idx] == target)
                        .expect("aggregated value comes from some channel")
                })
                .collect(),
        )
    } else {
        None
    };

    let mut dinput = DenseMatrix::zeros(stream.input.rows, stream.input.cols);
    for i in 0..cfg.channels {
        let dz = match cfg.agg {
            Agg::Sum => upstream.clone(),
            Agg::Avg => upstream.scale(1.0 / cfg.channels as f64),
            Agg::Max => {
                let winners = winners.as_ref().expect("winners computed for max agg");
                let mut masked = DenseMatrix::zeros(upstream.rows, upstream.cols);
                for (idx, &w) in winners.iter().enumerate() {
                    if w == i {
                        masked.data[idx] = upstream.data[idx];
                    }
                }
                masked
            }
        };
        let ds = if activated {
            let (dpre, dslope) = prelu_backward(&stream.preacts[i], &dz, params.decoder_slopes[l][i]);
            grads.decoder_slopes[l][i] += dslope;
            dpre
        } else {
            dz
        };
        grads.decoder[l][i].add_assign(&stream.filtered[i].transpose_matmul(&ds));
        let dfiltered = ds.matmul_transpose(&params.decoder[l][i]);
        dinput.add_assign(&ctx.apply_filter(&stream.filters[i], &dfiltered)?);
    }
    Ok(dinput)
}

/// PReLU backward: returns the pre-activation gradient and the slope
/// gradient. Derivative at exactly zero uses the negative branch, matching
/// the forward evaluation.
fn prelu_backward(preact: &DenseMatrix, upstream: &DenseMatrix, slope: f64) -> (DenseMatrix, f64) {
    let mut dpre = upstream.clone();
    let mut dslope = 0.0;
    for (d, &p) in dpre.data.iter_mut().zip(&preact.data) {
        if p <= 0.0 {
            dslope += *d * p;
            *d *= slope;
        }
    }
    (dpre, dslope)
}

fn accumulate(slot: &mut Option<DenseMatrix>, grad: DenseMatrix) {
    match slot {
        Some(acc) => acc.add_assign(&grad),
        None => *slot = Some(grad),
    }
}

/// Rejects caches that do not match the parameters/features they are
/// replayed against.
fn check_cache(
    ctx: &ModelContext,
    params: &Params,
    cache: &ForwardCache,
    x: &FeatureMatrix,
) -> Result<()> {
    let cfg = &ctx.cfg;
    let ok = cache.enc.len() == cfg.num_layers
        && cache.dec.len() == cfg.num_layers
        && params.encoder.len() == cfg.num_layers
        && cache.xhat.shape() == x.shape()
        && cache
            .dec
            .iter()
            .all(|layer| layer.streams.iter().all(|s| s.filtered.len() == cfg.channels))
        && cache.latent_noise.is_some() == cfg.augment;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "stale forward cache: shape or layout does not match the model".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::super::forward::{forward, replay_loss, ForwardMode, ModelContext};
    use super::super::{Agg, DecoderMode, ModelConfig, Params, SpectralBackend};
    use super::*;
    use crate::graph::generate_sbm;
    use crate::kernels::KernelSpec;
    use crate::linalg::{gaussian_matrix, SeededRng};

    fn tiny_config(seed: u64) -> ModelConfig {
        // Rotate structural options so every backward branch gets exercised.
        let aggs = [Agg::Sum, Agg::Avg, Agg::Max];
        let kernels = [KernelSpec::heat(1.0), KernelSpec::ppr(0.2), KernelSpec::gcn()];
        ModelConfig {
            num_layers: 2,
            input_dim: 3,
            hidden_dim: 4,
            kernel: kernels[(seed % 3) as usize],
            channels: 2,
            gammas: vec![0.5, 2.0],
            beta: 0.4,
            remez_order: Some(2),
            agg: aggs[(seed % 3) as usize],
            last_activation: seed % 2 == 0,
            skip_connection: seed % 2 == 1,
            decoder_mode: if seed % 4 == 0 {
                DecoderMode::Inverse
            } else {
                DecoderMode::Wiener
            },
            augment: seed % 5 != 0,
            backend: SpectralBackend::Polynomial,
            seed,
            ..ModelConfig::default()
        }
    }

    /// Central finite differences against the replayed loss.
    fn run_finite_difference_check(seed: u64) {
        let cfg = tiny_config(seed);
        let (g, _) = generate_sbm(&[4, 4], 0.6, 0.3, seed).unwrap();
        let ctx = ModelContext::new(cfg, &g).unwrap();
        let mut rng = SeededRng::derive(seed, 0x1217);
        let x = gaussian_matrix(&mut rng, 8, 3);
        let params = Params::init(&ctx.cfg, &mut rng);
        let mut noise_rng = SeededRng::derive(seed, 0x0e15);
        let cache = forward(&ctx, &params, &x, ForwardMode::Sample(&mut noise_rng)).unwrap();
        let grads = backward(&ctx, &params, &cache, &x).unwrap();
        let flat_grads: Vec<f64> = grads.flat().copied().collect();

        let h = 1e-5;
        for k in 0..flat_grads.len() {
            let mut plus = params.clone();
            *plus.flat_mut().nth(k).unwrap() += h;
            let lp = replay_loss(&ctx, &plus, &cache, &x).unwrap();
            let mut minus = params.clone();
            *minus.flat_mut().nth(k).unwrap() -= h;
            let lm = replay_loss(&ctx, &minus, &cache, &x).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let bp = flat_grads[k];
            let rel = (fd - bp).abs() / fd.abs().max(bp.abs()).max(1e-3);
            assert!(
                rel <= 1e-4,
                "seed {seed} param {k}: backprop {bp} vs finite diff {fd} (rel {rel:.2e})"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in [1, 2, 3, 4, 5] {
            run_finite_difference_check(seed);
        }
    }

    #[test]
    fn zero_residual_gives_zero_gradients() {
        let cfg = ModelConfig {
            input_dim: 3,
            hidden_dim: 4,
            augment: false,
            ..ModelConfig::default()
        };
        let (g, _) = generate_sbm(&[3, 3], 0.8, 0.4, 11).unwrap();
        let ctx = ModelContext::new(cfg, &g).unwrap();
        let mut rng = SeededRng::new(11);
        let x = gaussian_matrix(&mut rng, 6, 3);
        let params = Params::init(&ctx.cfg, &mut rng);
        let mut noise_rng = SeededRng::new(12);
        let cache = forward(&ctx, &params, &x, ForwardMode::Sample(&mut noise_rng)).unwrap();
        // Pretend the reconstruction is perfect.
        let grads = backward(&ctx, &params, &cache, &cache.xhat).unwrap();
        assert!(grads.flat().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_is_linear_in_the_output_gradient() {
        let cfg = tiny_config(3);
        let (g, _) = generate_sbm(&[4, 4], 0.6, 0.3, 3).unwrap();
        let ctx = ModelContext::new(cfg, &g).unwrap();
        let mut rng = SeededRng::new(31);
        let x = gaussian_matrix(&mut rng, 8, 3);
        let params = Params::init(&ctx.cfg, &mut rng);
        let mut noise_rng = SeededRng::new(32);
        let cache = forward(&ctx, &params, &x, ForwardMode::Sample(&mut noise_rng)).unwrap();

        let seed_grad = gaussian_matrix(&mut rng, 8, 3);
        let g1 = backward_from_output(&ctx, &params, &cache, seed_grad.clone()).unwrap();
        let g2 = backward_from_output(&ctx, &params, &cache, seed_grad.scale(2.0)).unwrap();
        for (a, b) in g1.flat().zip(g2.flat()) {
            assert!(
                (2.0 * a - b).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0),
                "{a} vs {b}"
            );
        }
    }

    #[test]
    fn backward_rejects_stale_cache() {
        let cfg = ModelConfig {
            input_dim: 3,
            hidden_dim: 4,
            ..ModelConfig::default()
        };
        let (g, _) = generate_sbm(&[3, 3], 0.8, 0.4, 13).unwrap();
        let ctx = ModelContext::new(cfg, &g).unwrap();
        let mut rng = SeededRng::new(13);
        let x = gaussian_matrix(&mut rng, 6, 3);
        let params = Params::init(&ctx.cfg, &mut rng);
        let mut noise_rng = SeededRng::new(14);
        let cache = forward(&ctx, &params, &x, ForwardMode::Sample(&mut noise_rng)).unwrap();
        let wrong_x = gaussian_matrix(&mut rng, 6, 5);
        assert!(backward(&ctx, &params, &cache, &wrong_x).is_err());
    }
}

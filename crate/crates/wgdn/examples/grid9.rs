fn main() {
    use wgdn::eval::{stability_sweep, SWEEP_MODES};
    use wgdn::graph::generate_sbm;
    use wgdn::io::gaussian_features;
    use wgdn::kernels::KernelSpec;
    use wgdn::model::{DecoderMode, ModelConfig};

    // (dim, hidden, t, gammas, order, epochs)
    let cells: Vec<(usize, usize, f64, Vec<f64>, usize, usize)> = vec![
        (8, 64, 1.0, vec![0.1, 1.0, 10.0], 2, 400),
        (8, 64, 1.0, vec![10.0], 6, 400),
        (8, 128, 1.0, vec![0.1, 1.0, 10.0], 2, 400),
        (4, 64, 1.5, vec![0.1, 1.0, 10.0], 2, 400),
    ];
    for (dim, hidden, t, gammas, order, epochs) in cells {
        let mut pass = 0;
        let mut all = Vec::new();
        for seed in 1u64..=5 {
            let (g, labels) = generate_sbm(&[100, 100], 0.1, 0.01, seed).unwrap();
            let x = gaussian_features(200, dim, seed);
            let template = ModelConfig {
                num_layers: 2,
                input_dim: dim,
                hidden_dim: hidden,
                kernel: KernelSpec::heat(t),
                channels: gammas.len(),
                gammas: gammas.clone(),
                remez_order: Some(order),
                epochs,
                seed,
                ..ModelConfig::default()
            };
            let rows = stability_sweep(&template, &[0.0, 0.5, 1.0], &SWEEP_MODES, &g, &x, &labels).unwrap();
            let cell = |beta: f64, mode| rows.iter().find(|r| r.beta == beta && r.decoder_mode == mode).unwrap().final_loss;
            let r: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&b| cell(b, DecoderMode::Inverse) / cell(b, DecoderMode::Wiener)).collect();
            if r[0] <= r[1] && r[1] <= r[2] { pass += 1; }
            all.push(format!("[{:.3} {:.3} {:.3}] w1={:.1} i1={:.1}", r[0], r[1], r[2], cell(1.0, DecoderMode::Wiener), cell(1.0, DecoderMode::Inverse)));
        }
        println!("d={dim} h={hidden} t={t} g={gammas:?} K={order}: {pass}/5  {}", all.join(" | "));
    }
}

fn main() {
    use wgdn::eval::{logistic_probe, stability_sweep, DEFAULT_SPLIT, SWEEP_MODES};
    use wgdn::graph::generate_sbm;
    use wgdn::io::gaussian_features;
    use wgdn::kernels::KernelSpec;
    use wgdn::model::{train, DecoderMode, ModelConfig};
    use std::time::Instant;

    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(200);
    let t: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let dim: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(8);
    let lr: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1e-3);
    let q: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(3);
    let order: usize = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(2);
    println!("epochs={epochs} t={t} dim={dim} lr={lr} q={q} K={order}");

    let gammas = if q == 1 { vec![1.0] } else { vec![0.1, 1.0, 10.0] };
    let t0 = Instant::now();
    let mut pass_count = 0;
    let mut acc_rows = Vec::new();
    for seed in 1u64..=5 {
        let (g, labels) = generate_sbm(&[100, 100], 0.1, 0.01, seed).unwrap();
        let x = gaussian_features(200, dim, seed);
        let template = ModelConfig {
            num_layers: 2,
            input_dim: dim,
            hidden_dim: 16,
            kernel: KernelSpec::heat(t),
            channels: q,
            gammas: gammas.clone(),
            remez_order: Some(order),
            epochs,
            lr,
            seed,
            ..ModelConfig::default()
        };
        let rows = stability_sweep(&template, &[0.0, 0.5, 1.0], &SWEEP_MODES, &g, &x, &labels).unwrap();
        let cell = |beta: f64, mode| rows.iter().find(|r| r.beta == beta && r.decoder_mode == mode).unwrap().final_loss;
        let ratio = |beta: f64| cell(beta, DecoderMode::Inverse) / cell(beta, DecoderMode::Wiener);
        let (r0, r1, r2) = (ratio(0.0), ratio(0.5), ratio(1.0));
        let ok = r0 <= r1 && r1 <= r2;
        if ok { pass_count += 1; }
        println!("seed {seed}: losses w=[{:.2} {:.2} {:.2}] i=[{:.2} {:.2} {:.2}] ratios {r0:.3} {r1:.3} {r2:.3} monotone={ok}",
            cell(0.0, DecoderMode::Wiener), cell(0.5, DecoderMode::Wiener), cell(1.0, DecoderMode::Wiener),
            cell(0.0, DecoderMode::Inverse), cell(0.5, DecoderMode::Inverse), cell(1.0, DecoderMode::Inverse));

        let acc = |augment: bool, mode: DecoderMode| {
            let cfg = ModelConfig { augment, decoder_mode: mode, beta: 0.5, ..template.clone() };
            let result = train(cfg, &g, &x).unwrap();
            logistic_probe(&result.embedding, &labels, DEFAULT_SPLIT, seed).unwrap().accuracy
        };
        let triple = (acc(true, DecoderMode::Wiener), acc(false, DecoderMode::Wiener), acc(false, DecoderMode::Inverse));
        println!("  ablation: WGDN={:.3} -A={:.3} -AW={:.3}", triple.0, triple.1, triple.2);
        acc_rows.push(triple);
    }
    let mut med = |f: fn(&(f64,f64,f64)) -> f64| {
        let mut v: Vec<f64> = acc_rows.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v[2]
    };
    println!("medians: WGDN={:.3} -A={:.3} -AW={:.3}", med(|r| r.0), med(|r| r.1), med(|r| r.2));
    println!("monotone in {pass_count}/5 seeds; elapsed {:?}", t0.elapsed());
}

//! Scalar spectral filters and the statistics that drive them.
//!
//! The convolution kernels (GCN, heat, PPR) are low-pass filters of the
//! normalized-Laplacian spectrum; deconvolution either inverts them exactly
//! or applies the Wiener filter, which trades reconstruction bias against
//! augmentation-noise amplification through the augmentation-to-energy
//! ratio sigma^2 / (gamma * avg_energy).

use crate::graph::{spmm, FeatureMatrix, SparseOperator};
use crate::linalg::EigenDecomposition;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default floor applied to |g_c| before inversion (GCN path only).
pub const INVERSE_CLAMP_DEFAULT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gcn,
    Heat,
    Ppr,
}

/// Convolution filter family: GCN `1 - lambda`, heat `exp(-t lambda)`,
/// PPR `alpha / (1 - (1 - alpha)(1 - lambda))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Diffusion time (heat kernel).
    #[serde(default = "KernelSpec::default_t")]
    pub t: f64,
    /// Teleport probability (PPR kernel).
    #[serde(default = "KernelSpec::default_alpha")]
    pub alpha: f64,
}

impl KernelSpec {
    fn default_t() -> f64 {
        1.0
    }

    fn default_alpha() -> f64 {
        0.2
    }

    pub fn gcn() -> Self {
        Self {
            kind: KernelKind::Gcn,
            t: Self::default_t(),
            alpha: Self::default_alpha(),
        }
    }

    pub fn heat(t: f64) -> Self {
        Self {
            kind: KernelKind::Heat,
            t,
            alpha: Self::default_alpha(),
        }
    }

    pub fn ppr(alpha: f64) -> Self {
        Self {
            kind: KernelKind::Ppr,
            t: Self::default_t(),
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "diffusion time t = {} must be positive",
                self.t
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "teleport probability alpha = {} must be in (0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Polynomial order used for this kernel's filter fits: 9 for GCN,
    /// 2 for heat and PPR.
    pub fn default_order(&self) -> usize {
        match self.kind {
            KernelKind::Gcn => 9,
            KernelKind::Heat | KernelKind::Ppr => 2,
        }
    }
}

/// Wiener-filter data: convolution kernel, augmentation variance sigma^2,
/// average spectral energy, and the energy multiplier gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerSpec {
    pub kernel: KernelSpec,
    pub sigma2: f64,
    pub avg_energy: f64,
    pub gamma: f64,
}

impl WienerSpec {
    pub fn new(kernel: KernelSpec, sigma2: f64, avg_energy: f64, gamma: f64) -> Self {
        debug_assert!(sigma2 >= 0.0 && gamma > 0.0);
        Self {
            kernel,
            sigma2,
            avg_energy,
            gamma,
        }
    }

    /// Augmentation-to-energy ratio sigma^2 / (gamma * avg_energy).
    pub fn aer(&self) -> f64 {
        if self.sigma2 == 0.0 {
            0.0
        } else {
            self.sigma2 / (self.gamma * self.avg_energy)
        }
    }
}

/// Convolution kernel value g_c(lambda).
pub fn eval_conv(k: &KernelSpec, lam: f64) -> f64 {
    match k.kind {
        KernelKind::Gcn => 1.0 - lam,
        KernelKind::Heat => (-k.t * lam).exp(),
        KernelKind::Ppr => {
            let denom = 1.0 - (1.0 - k.alpha) * (1.0 - lam);
            assert!(
                denom.abs() >= 1e-12,
                "ppr denominator vanished (alpha={}, lambda={lam})",
                k.alpha
            );
            k.alpha / denom
        }
    }
}

/// Inverse filter 1 / g_c(lambda).
///
/// Heat and PPR invert in closed form; the GCN kernel crosses zero at
/// lambda = 1, so its magnitude is floored at `clamp` before inverting.
pub fn eval_inverse(k: &KernelSpec, lam: f64, clamp: f64) -> f64 {
    match k.kind {
        KernelKind::Gcn => {
            let g = 1.0 - lam;
            let floored = g.abs().max(clamp);
            if g < 0.0 {
                -1.0 / floored
            } else {
                1.0 / floored
            }
        }
        KernelKind::Heat => (k.t * lam).exp(),
        KernelKind::Ppr => (1.0 - (1.0 - k.alpha) * (1.0 - lam)) / k.alpha,
    }
}

/// Modified graph Wiener filter g_c / (g_c^2 + sigma^2 / (gamma * avg_energy)).
///
/// With sigma^2 = 0 this reduces to the exact inverse wherever g_c is
/// nonzero, and to 0 at a zero of g_c (the limit of the filter as the
/// augmentation vanishes).
pub fn eval_wiener(w: &WienerSpec, lam: f64) -> f64 {
    wiener_value(eval_conv(&w.kernel, lam), w.sigma2, w.gamma * w.avg_energy)
}

/// Per-spectrum Wiener filter g_c / (g_c^2 + sigma^2 / energy), with the true
/// spectral energy supplied by the caller. Verification paths only; the model
/// always uses the averaged form.
pub fn eval_wiener_per_spectrum(k: &KernelSpec, lam: f64, sigma2: f64, energy: f64) -> f64 {
    wiener_value(eval_conv(k, lam), sigma2, energy)
}

fn wiener_value(g: f64, sigma2: f64, energy: f64) -> f64 {
    let aer = if sigma2 == 0.0 { 0.0 } else { sigma2 / energy };
    let denom = g * g + aer;
    if denom == 0.0 || !denom.is_finite() {
        return 0.0;
    }
    g / denom
}

/// Average spectral energy estimate from a representation matrix:
/// (|H|_F^2 + |H - col_mean(H)|_F^2) / (N * D).
pub fn estimate_avg_energy(h: &FeatureMatrix) -> f64 {
    assert!(h.rows > 0 && h.cols > 0, "estimate_avg_energy on empty matrix");
    let n = h.rows;
    let d = h.cols;
    let mut col_means = vec![0.0; d];
    for i in 0..n {
        for (m, &v) in col_means.iter_mut().zip(h.row(i)) {
            *m += v;
        }
    }
    for m in &mut col_means {
        *m /= n as f64;
    }
    let mut second_moment = 0.0;
    let mut centered = 0.0;
    for i in 0..n {
        for (m, &v) in col_means.iter().zip(h.row(i)) {
            second_moment += v * v;
            let c = v - m;
            centered += c * c;
        }
    }
    (second_moment + centered) / (n * d) as f64
}

/// Augmentation-variance estimate from neighborhood smoothness:
/// |H - (D^{-1} A) H|_F^2 / (N * D).
pub fn estimate_sigma2(h: &FeatureMatrix, rw: &SparseOperator) -> Result<f64> {
    if rw.dim != h.rows {
        return Err(Error::ShapeMismatch(format!(
            "estimate_sigma2: random-walk matrix is {0}x{0}, features have {1} rows",
            rw.dim, h.rows
        )));
    }
    let smoothed = spmm(rw, h)?;
    let diff = h.sub(&smoothed);
    let norm2 = diff.data.iter().map(|&v| v * v).sum::<f64>();
    Ok(norm2 / (h.rows * h.cols) as f64)
}

/// Exact spectral application U diag(f(lambda_i)) U^T x.
pub fn spectral_apply_exact(
    ed: &EigenDecomposition,
    f: impl Fn(f64) -> f64,
    x: &FeatureMatrix,
) -> Result<FeatureMatrix> {
    let n = ed.eigenvectors.rows;
    if x.rows != n {
        return Err(Error::ShapeMismatch(format!(
            "spectral_apply_exact: decomposition is {n}-dimensional, features have {} rows",
            x.rows
        )));
    }
    let mut proj = ed.eigenvectors.transpose_matmul(x);
    for (i, &lam) in ed.eigenvalues.iter().enumerate() {
        let scale = f(lam);
        for v in &mut proj.data[i * proj.cols..(i + 1) * proj.cols] {
            *v *= scale;
        }
    }
    Ok(ed.eigenvectors.matmul(&proj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, normalized_laplacian, random_walk_matrix};
    use crate::linalg::{eigh, gaussian_matrix, SeededRng};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Spectral reconstruction error of one spectrum; the quantity the
    /// Wiener filter minimizes over g_d.
    fn spectral_err(g_c: f64, g_d: f64, energy: f64, sigma2: f64) -> f64 {
        let bias = g_d * g_c - 1.0;
        bias * bias * energy + g_d * g_d * sigma2
    }

    #[test]
    fn conv_values() {
        assert_close(eval_conv(&KernelSpec::gcn(), 2.0), -1.0, 0.0);
        assert_close(eval_conv(&KernelSpec::heat(1.0), 0.0), 1.0, 0.0);
        assert_close(eval_conv(&KernelSpec::ppr(0.2), 2.0), 0.2 / 1.8, 1e-15);
    }

    #[test]
    fn inverse_values() {
        assert_close(
            eval_inverse(&KernelSpec::heat(1.0), 1.0, INVERSE_CLAMP_DEFAULT),
            std::f64::consts::E,
            1e-12,
        );
        assert_close(eval_inverse(&KernelSpec::ppr(0.2), 0.0, INVERSE_CLAMP_DEFAULT), 1.0, 1e-15);
        assert_close(eval_inverse(&KernelSpec::gcn(), 1.0, 1e-3), 1000.0, 1e-9);
        // Sign is preserved past the singularity.
        assert!(eval_inverse(&KernelSpec::gcn(), 1.5, 1e-3) < 0.0);
    }

    #[test]
    fn wiener_reduces_to_inverse_without_augmentation() {
        for kernel in [KernelSpec::gcn(), KernelSpec::heat(1.0), KernelSpec::ppr(0.2)] {
            let w = WienerSpec::new(kernel, 0.0, 1.0, 1.0);
            for lam in [0.0, 0.3, 0.9, 1.7, 2.0] {
                let g = eval_conv(&kernel, lam);
                if g.abs() > 1e-6 {
                    assert_close(eval_wiener(&w, lam), 1.0 / g, 1e-12);
                }
            }
        }
        // GCN at its zero: limit value 0.
        let w = WienerSpec::new(KernelSpec::gcn(), 0.0, 1.0, 1.0);
        assert_eq!(eval_wiener(&w, 1.0), 0.0);
    }

    #[test]
    fn wiener_values() {
        let heat = KernelSpec::heat(1.0);
        let w = WienerSpec::new(heat, 1.0, 1.0, 1.0); // aer = 1
        assert_close(eval_wiener(&w, 0.0), 0.5, 1e-15);

        let w = WienerSpec::new(heat, 0.1, 1.0, 1.0); // aer = 0.1
        let g = (-1.0f64).exp();
        let expected = g / (g * g + 0.1);
        assert_close(eval_wiener(&w, 1.0), expected, 1e-15);
        assert_close(expected, 1.56322, 1e-5);
    }

    #[test]
    fn wiener_never_exceeds_inverse() {
        let mut rng = SeededRng::new(17);
        for kernel in [KernelSpec::gcn(), KernelSpec::heat(1.0), KernelSpec::ppr(0.2)] {
            for _ in 0..50 {
                let lam = rng.next_range(0.0, 2.0);
                let sigma2 = rng.next_range(0.0, 2.0);
                let w = WienerSpec::new(kernel, sigma2, 1.0, 1.0);
                let g = eval_conv(&kernel, lam);
                if g.abs() < 1e-9 {
                    continue;
                }
                let wiener = eval_wiener(&w, lam).abs();
                let inverse = (1.0 / g).abs();
                assert!(wiener <= inverse + 1e-12);
                if sigma2 > 1e-9 {
                    assert!(wiener < inverse);
                }
            }
        }
    }

    #[test]
    fn wiener_minimizes_spectral_error() {
        let kernel = KernelSpec::heat(1.0);
        let sigma2 = 0.3;
        let energy = 1.7;
        for lam in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let g = eval_conv(&kernel, lam);
            let opt = eval_wiener_per_spectrum(&kernel, lam, sigma2, energy);
            let best = spectral_err(g, opt, energy, sigma2);
            for step in -20..=20 {
                let g_d = opt + 0.05 * step as f64;
                assert!(spectral_err(g, g_d, energy, sigma2) + 1e-12 >= best);
            }
        }
    }

    #[test]
    fn wiener_decreases_in_aer() {
        let kernel = KernelSpec::heat(1.0);
        for lam in [0.0, 0.7, 1.9] {
            let mut last = f64::INFINITY;
            for sigma2 in [0.01, 0.1, 0.5, 1.0, 5.0] {
                let w = WienerSpec::new(kernel, sigma2, 1.0, 1.0);
                let value = eval_wiener(&w, lam);
                assert!(value < last, "not strictly decreasing at lam={lam}");
                last = value;
            }
        }
    }

    #[test]
    fn kernel_ranges() {
        for step in 0..=200 {
            let lam = step as f64 / 100.0;
            let heat = eval_conv(&KernelSpec::heat(1.0), lam);
            assert!(heat > 0.0 && heat <= 1.0 + 1e-12);
            let ppr = eval_conv(&KernelSpec::ppr(0.2), lam);
            assert!(ppr > 0.0 && ppr <= 1.0 + 1e-12);
            let gcn = eval_conv(&KernelSpec::gcn(), lam);
            assert!((-1.0..=1.0).contains(&gcn));
        }
    }

    #[test]
    fn kernel_validation() {
        assert!(KernelSpec::heat(0.0).validate().is_err());
        assert!(KernelSpec::ppr(0.0).validate().is_err());
        assert!(KernelSpec::ppr(1.1).validate().is_err());
        assert!(KernelSpec::heat(1.0).validate().is_ok());
    }

    #[test]
    fn avg_energy_examples() {
        let ones = FeatureMatrix::from_vec(4, 3, vec![1.0; 12]);
        assert_close(estimate_avg_energy(&ones), 1.0, 1e-15);

        let zeros = FeatureMatrix::zeros(4, 3);
        assert_close(estimate_avg_energy(&zeros), 0.0, 0.0);

        // [1; -1]: second moment 2, centered 2, over N*D = 2.
        let h = FeatureMatrix::column(&[1.0, -1.0]);
        assert_close(estimate_avg_energy(&h), 2.0, 1e-15);
    }

    #[test]
    fn sigma2_examples() {
        let k2 = build_graph(&[(0, 1)], 2).unwrap();
        let rw = random_walk_matrix(&k2);

        let constant = FeatureMatrix::from_vec(2, 2, vec![3.0, -1.0, 3.0, -1.0]);
        assert_close(estimate_sigma2(&constant, &rw).unwrap(), 0.0, 1e-15);

        let h = FeatureMatrix::column(&[1.0, -1.0]);
        assert_close(estimate_sigma2(&h, &rw).unwrap(), 4.0, 1e-15);

        let empty = build_graph(&[], 2).unwrap();
        let rw0 = random_walk_matrix(&empty);
        let expected = h.frobenius_norm().powi(2) / 2.0;
        assert_close(estimate_sigma2(&h, &rw0).unwrap(), expected, 1e-15);

        let tall = FeatureMatrix::zeros(3, 1);
        assert!(estimate_sigma2(&tall, &rw).is_err());
    }

    #[test]
    fn spectral_apply_identity_and_laplacian() {
        let g = build_graph(&[(0, 1), (1, 2), (0, 2), (2, 3)], 4).unwrap();
        let l = normalized_laplacian(&g);
        let ed = eigh(&l.to_dense()).unwrap();
        let mut rng = SeededRng::new(4);
        let x = gaussian_matrix(&mut rng, 4, 2);

        let same = spectral_apply_exact(&ed, |_| 1.0, &x).unwrap();
        assert!(same.sub(&x).max_abs() <= 1e-9);

        let via_spectrum = spectral_apply_exact(&ed, |lam| lam, &x).unwrap();
        let direct = crate::graph::spmm(&l, &x).unwrap();
        assert!(via_spectrum.sub(&direct).max_abs() <= 1e-8);
    }

    #[test]
    fn wiener_then_conv_is_identity_without_augmentation() {
        let g = build_graph(&[(0, 1)], 2).unwrap();
        let ed = eigh(&normalized_laplacian(&g).to_dense()).unwrap();
        let kernel = KernelSpec::heat(1.0);
        let w = WienerSpec::new(kernel, 0.0, 1.0, 1.0);
        let x = FeatureMatrix::from_rows(&[vec![0.3, -1.2], vec![2.0, 0.4]]);

        let convolved = spectral_apply_exact(&ed, |lam| eval_conv(&kernel, lam), &x).unwrap();
        let recovered = spectral_apply_exact(&ed, |lam| eval_wiener(&w, lam), &convolved).unwrap();
        assert!(recovered.sub(&x).max_abs() <= 1e-8);
    }
}

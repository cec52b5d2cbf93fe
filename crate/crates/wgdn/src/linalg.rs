//! Dense linear algebra, deterministic randomness, and weight initialization.
//!
//! Everything here is deliberately dependency-free and 64-bit: the
//! eigendecomposition (cyclic Jacobi) and the pivoted solver are the exact
//! backends the filter-verification paths rely on, and the RNG is a single
//! documented generator so that every run is reproducible from one seed.

use crate::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Row-major dense matrix of 64-bit floats.
///
/// Doubles as the feature-matrix storage used throughout the crate
/// (N rows of D features). Serializes as nested row arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Serialize for DenseMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DenseMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(deserializer)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length mismatch");
        Self { rows, cols, data }
    }

    /// Column vector (n x 1).
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^T * other` without materializing the transpose.
    pub fn transpose_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "transpose_matmul shape mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * other^T`.
    pub fn matmul_transpose(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "matmul_transpose shape mismatch");
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..other.rows {
                let b_row = &other.data[j * other.cols..(j + 1) * other.cols];
                out.data[i * other.rows + j] =
                    a_row.iter().zip(b_row).map(|(&a, &b)| a * b).sum();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "add shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Self::from_vec(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "sub shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Self::from_vec(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_vec(self.rows, self.cols, self.data.iter().map(|&v| v * s).collect())
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|&v| v * v).sum::<f64>().sqrt()
    }

    /// Mean of all entries.
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance of all entries (no axis).
    pub fn variance(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let mean = self.mean();
        self.data.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, &v| acc.max(v.abs()))
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
///
/// Column `k` of `eigenvectors` pairs with `eigenvalues[k]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

/// Default off-diagonal tolerance for [`eigh_symmetric`].
pub const EIGH_DEFAULT_TOL: f64 = 1e-11;
/// Default sweep cap for [`eigh_symmetric`].
pub const EIGH_DEFAULT_MAX_SWEEPS: usize = 64;

/// [`eigh_symmetric`] with default tolerance and sweep cap.
pub fn eigh(m: &DenseMatrix) -> Result<EigenDecomposition> {
    eigh_symmetric(m, EIGH_DEFAULT_TOL, EIGH_DEFAULT_MAX_SWEEPS)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps rotate away every off-diagonal pair until the largest off-diagonal
/// magnitude drops below `tol` or `max_sweeps` is exhausted. Eigenpairs are
/// returned sorted by ascending eigenvalue.
pub fn eigh_symmetric(
    m: &DenseMatrix,
    tol: f64,
    max_sweeps: usize,
) -> Result<EigenDecomposition> {
    let n = m.rows;
    if m.cols != n {
        return Err(Error::ShapeMismatch(format!(
            "eigh_symmetric requires a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a = m.clone();
    // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    let mut u = DenseMatrix::identity(n);

    let off_max = |a: &DenseMatrix| -> f64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        off
    };

    let mut sweeps_used = 0;
    let mut converged = n < 2;
    while sweeps_used < max_sweeps && !converged {
        if off_max(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // Stable tangent of the annihilating rotation angle.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a.set(k, p, new_kp);
                    a.set(p, k, new_kp);
                    a.set(k, q, new_kq);
                    a.set(q, k, new_kq);
                }
                for k in 0..n {
                    let ukp = u.get(k, p);
                    let ukq = u.get(k, q);
                    u.set(k, p, c * ukp - s * ukq);
                    u.set(k, q, s * ukp + c * ukq);
                }
            }
        }
        sweeps_used += 1;
    }

    let off = off_max(&a);
    if !converged && off > tol {
        return Err(Error::NoConvergence(off, sweeps_used));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors.set(k, new_col, u.get(k, old_col));
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Minimum acceptable pivot magnitude in [`solve_linear`].
pub const SOLVE_PIVOT_MIN: f64 = 1e-13;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::ShapeMismatch(format!(
            "solve_linear requires a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    if b.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "solve_linear rhs length {} != {}",
            b.len(),
            n
        )));
    }

    let mut m = a.clone();
    let mut rhs = b.to_vec();

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, m.get(r, col).abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty pivot search");
        if pivot_abs < SOLVE_PIVOT_MIN {
            return Err(Error::SingularSystem(pivot_abs));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot_row, j));
                m.set(pivot_row, j, tmp);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m.get(col, col);
        for r in (col + 1)..n {
            let factor = m.get(r, col) / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m.get(r, j) - factor * m.get(col, j);
                m.set(r, j, v);
            }
            rhs[r] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= m.get(row, j) * x[j];
        }
        x[row] = acc / m.get(row, row);
    }
    Ok(x)
}

/// Deterministic 64-bit PRNG (splitmix64).
///
/// State update per draw:
/// ```text
/// state += 0x9E3779B97F4A7C15
/// z = state
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// output = z ^ (z >> 31)
/// ```
/// The same seed yields the same stream on every platform. Independent
/// consumers derive child generators with [`SeededRng::derive`] so one
/// config seed fixes every random choice in a run.
#[derive(Debug, Clone)]
pub struct SeededRng {
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Child generator for an independent purpose (seed xor tag).
    pub fn derive(seed: u64, tag: u64) -> Self {
        Self::new(seed ^ tag)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1]; safe as a logarithm argument.
    fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_f64() * n as f64) as usize % n
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_index(i + 1);
            items.swap(i, j);
        }
    }
}

/// `n` i.i.d. standard normal draws via Box-Muller.
///
/// Draws are consumed in pairs; for odd `n` the spare value is discarded so
/// the stream position depends only on `n`.
pub fn gaussian_sample(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1 = rng.next_open_f64();
        let u2 = rng.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        out.push(radius * angle.cos());
        if out.len() < n {
            out.push(radius * angle.sin());
        }
    }
    out
}

/// Standard normal matrix.
pub fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_vec(rows, cols, gaussian_sample(rng, rows * cols))
}

/// Glorot (uniform) initialization: entries uniform on [-s, s] with
/// s = sqrt(6 / (fan_in + fan_out)). Shape is fan_in x fan_out.
pub fn glorot_init(rng: &mut SeededRng, fan_in: usize, fan_out: usize) -> DenseMatrix {
    assert!(fan_in > 0 && fan_out > 0, "glorot_init requires positive dims");
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.next_range(-s, s))
        .collect();
    DenseMatrix::from_vec(fan_in, fan_out, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Test-only determinant by LU with partial pivoting; independent of the
    /// Jacobi path it cross-checks.
    fn det(m: &DenseMatrix) -> f64 {
        let n = m.rows;
        let mut a = m.clone();
        let mut sign = 1.0;
        let mut d = 1.0;
        for col in 0..n {
            let (pr, pa) = (col..n)
                .map(|r| (r, a.get(r, col).abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            if pa == 0.0 {
                return 0.0;
            }
            if pr != col {
                for j in 0..n {
                    let tmp = a.get(col, j);
                    a.set(col, j, a.get(pr, j));
                    a.set(pr, j, tmp);
                }
                sign = -sign;
            }
            d *= a.get(col, col);
            for r in (col + 1)..n {
                let f = a.get(r, col) / a.get(col, col);
                for j in col..n {
                    let v = a.get(r, j) - f * a.get(col, j);
                    a.set(r, j, v);
                }
            }
        }
        sign * d
    }

    #[test]
    fn eigh_two_by_two_closed_form() {
        let m = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let ed = eigh(&m).unwrap();
        assert_close(ed.eigenvalues[0], 0.0, 1e-12);
        assert_close(ed.eigenvalues[1], 2.0, 1e-12);
        // Eigenvector for 0 is proportional to [1, 1]/sqrt(2).
        let v0 = (ed.eigenvectors.get(0, 0), ed.eigenvectors.get(1, 0));
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert_close(v0.0.abs(), inv_sqrt2, 1e-10);
        assert_close(v0.1.abs(), inv_sqrt2, 1e-10);
        assert_close(v0.0 * v0.1, 0.5, 1e-10); // same sign
    }

    #[test]
    fn eigh_diagonal_is_permutation() {
        let m = DenseMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let ed = eigh(&m).unwrap();
        assert_eq!(ed.eigenvalues, vec![1.0, 2.0, 3.0]);
        // U is a permutation of the identity.
        for col in 0..3 {
            let mut ones = 0;
            for row in 0..3 {
                let v = ed.eigenvectors.get(row, col).abs();
                if (v - 1.0).abs() < 1e-12 {
                    ones += 1;
                } else {
                    assert_close(v, 0.0, 1e-12);
                }
            }
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn eigh_p3_laplacian_matches_characteristic_roots() {
        // Path 0-1-2 normalized Laplacian.
        let r = -1.0 / 2.0f64.sqrt();
        let m = DenseMatrix::from_rows(&[
            vec![1.0, r, 0.0],
            vec![r, 1.0, r],
            vec![0.0, r, 1.0],
        ]);
        let ed = eigh(&m).unwrap();
        let expected = [0.0, 1.0, 2.0];
        for (got, want) in ed.eigenvalues.iter().zip(expected) {
            assert_close(*got, want, 1e-10);
            // Characteristic-polynomial oracle: det(L - lambda I) = 0.
            let mut shifted = m.clone();
            for i in 0..3 {
                shifted.set(i, i, shifted.get(i, i) - want);
            }
            assert_close(det(&shifted), 0.0, 1e-12);
        }
    }

    #[test]
    fn eigh_rejects_non_symmetric() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]);
        assert!(matches!(eigh(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn eigh_reconstructs_and_is_orthonormal() {
        let mut rng = SeededRng::new(42);
        for n in [1usize, 2, 5, 12] {
            let mut m = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.next_range(-1.0, 1.0);
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
            let ed = eigh(&m).unwrap();
            let u = &ed.eigenvectors;
            let utu = u.transpose_matmul(u);
            let id = DenseMatrix::identity(n);
            assert!(utu.sub(&id).max_abs() <= 1e-8, "U^T U != I for n={n}");
            // U diag(lambda) U^T == M
            let mut ul = u.clone();
            for i in 0..n {
                for j in 0..n {
                    ul.set(i, j, ul.get(i, j) * ed.eigenvalues[j]);
                }
            }
            let rec = ul.matmul_transpose(u);
            let scale = m.max_abs().max(1.0);
            assert!(rec.sub(&m).max_abs() <= 1e-8 * scale);
            // Trace preservation.
            let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
            let lam_sum: f64 = ed.eigenvalues.iter().sum();
            assert_close(lam_sum, trace, 1e-8);
        }
    }

    #[test]
    fn eigh_orthogonality_preserves_norms() {
        let mut rng = SeededRng::new(7);
        let mut m = DenseMatrix::zeros(6, 6);
        for i in 0..6 {
            for j in i..6 {
                let v = rng.next_range(-1.0, 1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        let ed = eigh(&m).unwrap();
        for _ in 0..5 {
            let x = DenseMatrix::column(&gaussian_sample(&mut rng, 6));
            let proj = ed.eigenvectors.transpose_matmul(&x);
            assert_close(proj.frobenius_norm(), x.frobenius_norm(), 1e-9);
        }
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let id = DenseMatrix::identity(3);
        let x = solve_linear(&id, &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);

        let d = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = solve_linear(&d, &[2.0, 8.0]).unwrap();
        assert_close(x[0], 1.0, 1e-14);
        assert_close(x[1], 2.0, 1e-14);
    }

    #[test]
    fn solve_recovers_constructed_solution() {
        let mut rng = SeededRng::new(11);
        let n = 6;
        // Diagonally dominant, hence well-conditioned.
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, rng.next_range(-1.0, 1.0));
            }
            a.set(i, i, a.get(i, i) + 4.0);
        }
        let x0: Vec<f64> = (0..n).map(|_| rng.next_range(-2.0, 2.0)).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j) * x0[j]).sum())
            .collect();
        let x = solve_linear(&a, &b).unwrap();
        for (got, want) in x.iter().zip(&x0) {
            assert_close(*got, *want, 1e-9);
        }
        // Residual bound.
        let ax: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j) * x[j]).sum())
            .collect();
        let res: f64 = ax
            .iter()
            .zip(&b)
            .map(|(&u, &v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-9 * (a.max_abs() * xn + bn));
    }

    #[test]
    fn solve_rejects_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            solve_linear(&a, &[1.0, 2.0]),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn gaussian_sample_empty_and_deterministic() {
        let mut rng = SeededRng::new(5);
        assert!(gaussian_sample(&mut rng, 0).is_empty());
        let a = gaussian_sample(&mut SeededRng::new(99), 64);
        let b = gaussian_sample(&mut SeededRng::new(99), 64);
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_sample_moments() {
        let n = 100_000;
        let xs = gaussian_sample(&mut SeededRng::new(2024), n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert!((0.97..=1.03).contains(&var), "variance {var}");
    }

    #[test]
    fn glorot_bounds_and_variance() {
        let mut rng = SeededRng::new(3);
        let w = glorot_init(&mut rng, 3, 3); // s = 1
        assert!(w.data.iter().all(|v| (-1.0..=1.0).contains(v)));
        let w = glorot_init(&mut rng, 2, 4); // s = 1
        assert!(w.data.iter().all(|v| (-1.0..=1.0).contains(v)));

        let w = glorot_init(&mut rng, 100, 100); // 10^4 draws, s^2/3 = 3/(200*... )
        let s2 = 6.0 / 200.0;
        let expected_var = s2 / 3.0;
        let var = w.variance();
        assert!(
            (var - expected_var).abs() <= 0.05 * expected_var,
            "variance {var} vs {expected_var}"
        );
    }

    #[test]
    fn rng_same_seed_same_stream() {
        let mut a = SeededRng::new(123);
        let mut b = SeededRng::new(123);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = SeededRng::derive(123, 0xABCD);
        assert_ne!(a.next_u64(), c.next_u64());
    }
}

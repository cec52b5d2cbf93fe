//! One-shot minimax polynomial fits of scalar filters, and their
//! decomposition-free application to feature matrices.
//!
//! A fit places K+2 Chebyshev nodes on the domain and solves one linear
//! system for the monomial coefficients plus the leveled error e; the
//! residual at the nodes alternates in sign with magnitude |e| by
//! construction. Applying the polynomial in the graph Laplacian needs only
//! K sparse products, never an eigendecomposition.

use crate::graph::{spmm, FeatureMatrix, SparseOperator};
use crate::linalg::{solve_linear, DenseMatrix};
use crate::{Error, Result};

/// Degree cap; higher-order monomial systems on [0, 2] are too
/// ill-conditioned to trust.
pub const REMEZ_MAX_DEGREE: usize = 16;

/// Minimax polynomial p_K(t) = sum c_k t^k with its leveled error.
#[derive(Debug, Clone)]
pub struct RemezPolynomial {
    /// Monomial coefficients c_0..c_K.
    pub coeffs: Vec<f64>,
    /// Alternating residual magnitude at the fit nodes.
    pub leveled_error: f64,
    /// Fit domain [a, b].
    pub domain: (f64, f64),
}

impl RemezPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Identity polynomial p(t) = t.
    pub fn identity() -> Self {
        Self {
            coeffs: vec![0.0, 1.0],
            leveled_error: 0.0,
            domain: (0.0, 2.0),
        }
    }

    /// Polynomial with explicit coefficients and zero leveled error.
    pub fn from_coeffs(coeffs: Vec<f64>, domain: (f64, f64)) -> Self {
        assert!(!coeffs.is_empty());
        Self {
            coeffs,
            leveled_error: 0.0,
            domain,
        }
    }

    /// Largest |f - p| over a uniform grid of `points` samples.
    pub fn max_grid_error(&self, f: impl Fn(f64) -> f64, points: usize) -> f64 {
        let (a, b) = self.domain;
        let mut worst = 0.0f64;
        for i in 0..points {
            let t = if points == 1 {
                a
            } else {
                a + (b - a) * i as f64 / (points - 1) as f64
            };
            worst = worst.max((f(t) - poly_eval(self, t)).abs());
        }
        worst
    }
}

/// Chebyshev nodes of the first kind on [a, b], sorted ascending:
/// t_j = (a+b)/2 + (b-a)/2 * cos((2j+1) pi / (2n)).
pub fn chebyshev_nodes(n: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(n >= 1 && a < b, "need n >= 1 and a < b");
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut nodes: Vec<f64> = (0..n)
        .map(|j| mid + half * ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect();
    nodes.sort_by(f64::total_cmp);
    nodes
}

/// Fits the degree-`degree` minimax polynomial of `f` on [a, b].
///
/// Solves f(t_j) = p_K(t_j) + (-1)^j e at the K+2 Chebyshev nodes for the
/// coefficients and the leveled error.
pub fn remez_fit(
    f: impl Fn(f64) -> f64,
    degree: usize,
    a: f64,
    b: f64,
) -> Result<RemezPolynomial> {
    if degree > REMEZ_MAX_DEGREE {
        return Err(Error::InvalidInput(format!(
            "polynomial degree {degree} exceeds cap {REMEZ_MAX_DEGREE}"
        )));
    }
    if !(a < b) {
        return Err(Error::InvalidInput(format!(
            "invalid fit domain [{a}, {b}]"
        )));
    }
    let nodes = chebyshev_nodes(degree + 2, a, b);
    let dim = degree + 2;
    let mut system = DenseMatrix::zeros(dim, dim);
    let mut rhs = Vec::with_capacity(dim);
    for (j, &t) in nodes.iter().enumerate() {
        let mut power = 1.0;
        for k in 0..=degree {
            system.set(j, k, power);
            power *= t;
        }
        system.set(j, degree + 1, if j % 2 == 0 { 1.0 } else { -1.0 });
        let value = f(t);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!(
                "filter value at fit node t = {t}"
            )));
        }
        rhs.push(value);
    }
    let mut solution = solve_linear(&system, &rhs)?;
    let leveled_error = solution.pop().expect("system has degree+2 unknowns");
    Ok(RemezPolynomial {
        coeffs: solution,
        leveled_error,
        domain: (a, b),
    })
}

/// Horner evaluation of p(t).
pub fn poly_eval(p: &RemezPolynomial, t: f64) -> f64 {
    let mut acc = 0.0;
    for &c in p.coeffs.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

/// Applies p(L) to x as sum c_k L^k x via iterated sparse products (Horner
/// in the matrix argument); L^k is never materialized.
pub fn apply_matrix_polynomial(
    l: &SparseOperator,
    p: &RemezPolynomial,
    x: &FeatureMatrix,
) -> Result<FeatureMatrix> {
    if l.dim != x.rows {
        return Err(Error::ShapeMismatch(format!(
            "apply_matrix_polynomial: operator is {0}x{0}, features have {1} rows",
            l.dim, x.rows
        )));
    }
    let degree = p.degree();
    let mut acc = x.scale(p.coeffs[degree]);
    for k in (0..degree).rev() {
        acc = spmm(l, &acc)?;
        if p.coeffs[k] != 0.0 {
            acc.add_assign(&x.scale(p.coeffs[k]));
        }
    }
    Ok(acc)
}

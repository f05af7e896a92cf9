//! Probabilists' Hermite polynomials and expansions in `L²(γ)`.
//!
//! Everything in this module uses the probabilists' normalization
//! `H_n(x) = (-1)^n e^{x²/2} (d/dx)^n e^{-x²/2}`, so that `H_0 = 1`, `H_1 = x`,
//! `H_{n+1}(x) = x H_n(x) - n H_{n-1}(x)` and `E[H_m(X) H_n(X)] = n! δ_{mn}`
//! for a standard Gaussian `X`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods come from libm when std is absent
use num_traits::Float;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Default relative tolerance for [`HermiteSeries::rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Probabilists' Hermite polynomial `H_n(x)`.
pub fn hermite(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..n {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `H'_n(x) = n H_{n-1}(x)` (probabilists' normalization).
pub fn hermite_derivative(n: usize, x: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * hermite(n - 1, x)
    }
}

/// Fills `out[k] = H_k(x)` for `k = 0..out.len()`.
pub fn hermite_table(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = x * out[k - 1] - (k - 1) as f64 * out[k - 2];
    }
}

/// Gauss-Hermite rule for the standard Gaussian measure: `Σ w_i f(x_i) ≈ E f(X)`.
///
/// Exact for polynomials of degree `≤ 2Q - 1`. Nodes come from the
/// Golub-Welsch eigenproblem and are polished by Newton steps; weights use
/// the closed form `w_i = 1 / (Q h_{Q-1}(x_i)²)` with the orthonormal
/// polynomials `h_n = H_n / sqrt(n!)`, which keeps tiny tail weights accurate
/// in relative terms.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        if order == 1 {
            return Self {
                nodes: vec![0.0],
                weights: vec![1.0],
            };
        }
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.total_cmp(b));

        let q = order as f64;
        let mut weights = Vec::with_capacity(order);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (hq, hq1) = orthonormal_pair(order, *x);
                let step = hq / (q.sqrt() * hq1);
                *x -= step;
                if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
            let (_, hq1) = orthonormal_pair(order, *x);
            weights.push(1.0 / (q * hq1 * hq1));
        }
        Self { nodes, weights }
    }

    /// Quadrature approximation of `E f(X)`, `X ~ N(0,1)`.
    pub fn expectation<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Returns `(h_n(x), h_{n-1}(x))` for the orthonormal Hermite polynomials.
fn orthonormal_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Coefficients `c_0..c_N` of `φ = Σ c_i H_i` in `L²(γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSeries {
    coeffs: Vec<f64>,
}

impl HermiteSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest stored order `N`.
    pub fn max_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Σ c_i H_i(x)` (probabilists' Hermite polynomials).
    pub fn eval(&self, x: f64) -> f64 {
        let mut table = vec![0.0; self.coeffs.len()];
        hermite_table(x, &mut table);
        self.coeffs.iter().zip(&table).map(|(c, h)| c * h).sum()
    }

    /// Hermite rank with the default tolerance, `1e-10` relative to the
    /// largest coefficient magnitude.
    pub fn rank(&self) -> Result<usize> {
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        hermite_rank(self, DEFAULT_RANK_TOL * scale)
    }

    /// `E[φ(X)²] = Σ i! c_i²`.
    pub fn l2_norm_sq(&self) -> f64 {
        let mut fact = 1.0;
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                fact *= i as f64;
            }
            acc += fact * c * c;
        }
        acc
    }
}

/// Smallest index `d ≥ 1` with `|c_d| > tol`.
pub fn hermite_rank(series: &HermiteSeries, tol: f64) -> Result<usize> {
    series
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, c)| c.abs() > tol)
        .map(|(i, _)| i)
        .ok_or(Error::UndefinedRank)
}

/// Hermite coefficients `c_i = E[φ(X) H_i(X)] / i!` for `i ≤ max_order`,
/// using a `quad_order`-point Gauss-Hermite rule.
pub fn hermite_expand<F>(phi: F, max_order: usize, quad_order: usize) -> Result<HermiteSeries>
where
    F: Fn(f64) -> f64,
{
    if quad_order < max_order + 1 {
        return Err(Error::QuadratureTooSmall {
            order: max_order,
            quad: quad_order,
        });
    }
    let rule = GaussHermite::new(quad_order);
    let mut coeffs = vec![0.0; max_order + 1];
    let mut table = vec![0.0; max_order + 1];
    for (index, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let value = phi(x);
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        hermite_table(x, &mut table);
        for (c, h) in coeffs.iter_mut().zip(&table) {
            *c += w * value * h;
        }
    }
    let mut fact = 1.0;
    for (i, c) in coeffs.iter_mut().enumerate() {
        if i > 0 {
            fact *= i as f64;
        }
        *c /= fact;
    }
    HermiteSeries::new(coeffs)
}

/// [`hermite_expand`] with the default quadrature order `2N + 8`.
pub fn hermite_expand_default<F: Fn(f64) -> f64>(phi: F, max_order: usize) -> Result<HermiteSeries> {
    hermite_expand(phi, max_order, 2 * max_order + 8)
}

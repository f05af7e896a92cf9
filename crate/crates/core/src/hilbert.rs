//! The value space `K = L²([0,1])`, discretized on `m` midpoint cells.
//!
//! A K-vector is stored as its values at the nodes `s_i = (i + ½)/m`, with
//! `⟨u, v⟩_K = (1/m) Σ u_i v_i`. Covariance operators are integral operators
//! whose kernel is sampled at the nodes, so `tr S = (1/m) Σ C_ii` and
//! `‖S‖_HS² = (1/m²) Σ C_ij²`.
//!
//! K-valued chaos kernels use coordinates in the orthonormal cell basis
//! `φ_i = √m 1_{cell i}`; node values are `√m` times those coordinates.

use alloc::vec::Vec;

#[allow(unused_imports)] // float methods come from libm when std is absent
use num_traits::Float;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::chaos::{factorial, ChaosExpansion};
use crate::error::{Error, Result};

/// Relative band below zero in which operator eigenvalues are clipped.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridK {
    m: usize,
}

impl GridK {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::OutOfRange("grid needs at least one node"));
        }
        Ok(Self { m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.m as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.node(i)).collect()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * self.weight()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Node values of the K-vector with cell-basis coordinates `coords`.
    pub fn values_from_coords(&self, coords: &[f64]) -> Vec<f64> {
        let s = (self.m as f64).sqrt();
        coords.iter().map(|c| c * s).collect()
    }
}

/// Integral operator on `K` given by a symmetric kernel sampled at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CovOperator {
    grid: GridK,
    kernel: DMatrix<f64>,
}

impl CovOperator {
    /// Wraps a symmetric kernel matrix. Positive semidefiniteness is checked
    /// separately by [`CovOperator::check_psd`] where it is required.
    pub fn new(grid: GridK, kernel: DMatrix<f64>) -> Result<Self> {
        let m = grid.len();
        if kernel.nrows() != m || kernel.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: kernel.nrows(),
            });
        }
        let scale = 1.0 + kernel.amax();
        for i in 0..m {
            for j in 0..i {
                if (kernel[(i, j)] - kernel[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(Self { grid, kernel })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: GridK, f: F) -> Self {
        let kernel = DMatrix::from_fn(grid.len(), grid.len(), |i, j| f(grid.node(i), grid.node(j)));
        Self { grid, kernel }
    }

    /// Builds the kernel from node indices rather than node positions.
    pub fn from_index_fn<F: Fn(usize, usize) -> f64>(grid: GridK, f: F) -> Self {
        Self {
            grid,
            kernel: DMatrix::from_fn(grid.len(), grid.len(), f),
        }
    }

    pub fn zero(grid: GridK) -> Self {
        Self::from_fn(grid, |_, _| 0.0)
    }

    /// Covariance of standard Brownian motion, `min(s, t)`.
    pub fn brownian(grid: GridK) -> Self {
        Self::from_fn(grid, f64::min)
    }

    /// The identity operator on the grid (kernel `m·I`).
    pub fn identity(grid: GridK) -> Self {
        let m = grid.len();
        Self {
            grid,
            kernel: DMatrix::identity(m, m) * m as f64,
        }
    }

    pub fn grid(&self) -> GridK {
        self.grid
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            kernel: &self.kernel * c,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            kernel: &self.kernel - &other.kernel,
        })
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.len(), other.grid.len()));
        }
        Ok(())
    }

    /// Eigenvalues of the operator (`eig(C)/m`), in decreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let w = self.grid.weight();
        let mut ev: Vec<f64> = SymmetricEigen::new(self.kernel.clone())
            .eigenvalues
            .iter()
            .map(|l| l * w)
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn check_psd(&self) -> Result<()> {
        let threshold = -PSD_TOL * op_trace(self).abs().max(f64::MIN_POSITIVE);
        match self.eigenvalues().last() {
            Some(&min) if min < threshold => Err(Error::NotPositiveSemidefinite {
                eigenvalue: min,
                threshold,
            }),
            _ => Ok(()),
        }
    }
}

/// `tr S = (1/m) Σ_i C_ii`.
pub fn op_trace(s: &CovOperator) -> f64 {
    s.kernel.trace() * s.grid.weight()
}

/// `‖S‖_HS = sqrt((1/m²) Σ_ij C_ij²)`.
pub fn op_hs_norm(s: &CovOperator) -> f64 {
    s.kernel.iter().map(|c| c * c).sum::<f64>().sqrt() * s.grid.weight()
}

/// `‖S_1 − S_2‖_HS`.
pub fn hs_distance(a: &CovOperator, b: &CovOperator) -> Result<f64> {
    Ok(op_hs_norm(&a.sub(b)?))
}

/// Operator norm (largest absolute eigenvalue).
pub fn op_norm(s: &CovOperator) -> f64 {
    s.eigenvalues().iter().fold(0.0_f64, |m, l| m.max(l.abs()))
}

/// Trace norm (sum of absolute eigenvalues).
pub fn trace_norm(s: &CovOperator) -> f64 {
    s.eigenvalues().iter().map(|l| l.abs()).sum()
}

/// `E‖Z‖⁴ = (tr S)² + 2 ‖S‖²_HS` for a centered Gaussian `Z` with covariance `S`.
pub fn gaussian_fourth_moment(s: &CovOperator) -> f64 {
    let tr = op_trace(s);
    let hs = op_hs_norm(s);
    tr * tr + 2.0 * hs * hs
}

/// Draws grid values of a centered Gaussian with covariance kernel `C`,
/// using the clipped eigendecomposition square root `C = R Rᵀ`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    root: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(s: &CovOperator) -> Result<Self> {
        let m = s.grid.len();
        let eig = SymmetricEigen::new(s.kernel.clone());
        let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, l| a + l.max(0.0));
        let threshold = -PSD_TOL * scale.max(f64::MIN_POSITIVE);
        let mut root = eig.eigenvectors;
        for j in 0..m {
            let l = eig.eigenvalues[j];
            if l < threshold {
                return Err(Error::NotPositiveSemidefinite {
                    eigenvalue: l,
                    threshold,
                });
            }
            root.column_mut(j).scale_mut(l.max(0.0).sqrt());
        }
        Ok(Self { root })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.root.nrows();
        let xi: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        (0..m)
            .map(|i| (0..m).map(|j| self.root[(i, j)] * xi[j]).sum())
            .collect()
    }
}

/// One draw of a centered Gaussian with covariance `S` (grid values).
pub fn sample_gaussian<R: Rng + ?Sized>(s: &CovOperator, rng: &mut R) -> Result<Vec<f64>> {
    Ok(GaussianSampler::new(s)?.sample(rng))
}

/// Covariance operator of a chaos expansion: `C(s_i, s_j) = m Σ_p p! ⟨f̃_p(·, i), f̃_p(·, j)⟩`.
///
/// Scalar expansions are treated as K-valued on a one-node grid.
pub fn chaos_cov_operator(f: &ChaosExpansion, grid: GridK) -> Result<CovOperator> {
    let m = grid.len();
    let mut kernel = DMatrix::zeros(m, m);
    for (p, k) in f.terms() {
        let k_len = match k.k_dims() {
            [] => 1,
            [km] => *km,
            other => {
                return Err(Error::ShapeMismatch {
                    left: other.to_vec(),
                    right: alloc::vec![m],
                })
            }
        };
        if k_len != m {
            return Err(Error::GridMismatch(k_len, m));
        }
        if p == 0 {
            continue;
        }
        let s = k.symmetrize();
        let c = s.coords();
        let w = factorial(p) * m as f64;
        for h in 0..s.h_len() {
            let row = &c[h * m..(h + 1) * m];
            for i in 0..m {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..m {
                    kernel[(i, j)] += w * row[i] * row[j];
                }
            }
        }
    }
    CovOperator::new(grid, kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::second_moment;
    use crate::tensor::{BasisMode, Kernel};
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(m: usize) -> GridK {
        GridK::new(m).unwrap()
    }

    #[test]
    fn grid_nodes() {
        let g = grid(4);
        assert_eq!(g.nodes(), vec![0.125, 0.375, 0.625, 0.875]);
        assert!(GridK::new(0).is_err());
        assert_abs_diff_eq!(g.norm(&[1.0; 4]), 1.0);
    }

    #[test]
    fn trace_examples() {
        assert_eq!(op_trace(&CovOperator::zero(grid(5))), 0.0);
        assert_abs_diff_eq!(op_trace(&CovOperator::brownian(grid(2))), 0.5);
        assert_abs_diff_eq!(op_trace(&CovOperator::identity(grid(7))), 7.0, epsilon = 1e-14);
    }

    #[test]
    fn hs_examples() {
        assert_eq!(op_hs_norm(&CovOperator::zero(grid(3))), 0.0);
        for m in [16, 64, 256] {
            let hs = op_hs_norm(&CovOperator::brownian(grid(m)));
            assert!((hs - (1.0f64 / 6.0).sqrt()).abs() < 2.0 / m as f64);
        }
        let c = CovOperator::from_fn(grid(9), |_, _| -2.5);
        assert_abs_diff_eq!(op_hs_norm(&c), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn fourth_moment_examples() {
        let s = CovOperator::new(grid(1), DMatrix::from_element(1, 1, 1.7)).unwrap();
        assert_abs_diff_eq!(gaussian_fourth_moment(&s), 3.0 * 1.7f64.powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(gaussian_fourth_moment(&CovOperator::identity(grid(2))), 8.0, epsilon = 1e-12);
        let m = 256;
        let b = gaussian_fourth_moment(&CovOperator::brownian(grid(m)));
        assert!((b - 7.0 / 12.0).abs() < 5.0 / m as f64);
    }

    #[test]
    fn norm_sandwich_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for m in [3, 8, 20] {
            let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            let s = CovOperator::new(grid(m), &a * a.transpose()).unwrap();
            let (op, hs, s1) = (op_norm(&s), op_hs_norm(&s), trace_norm(&s));
            assert!(op <= hs + 1e-9 && hs <= s1 + 1e-9);
            assert_abs_diff_eq!(s1, op_trace(&s), epsilon = 1e-9);
        }
    }

    #[test]
    fn psd_check() {
        assert!(CovOperator::brownian(grid(8)).check_psd().is_ok());
        let bad = CovOperator::identity(grid(3)).scaled(-1.0);
        assert!(bad.check_psd().is_err());
        assert!(GaussianSampler::new(&bad).is_err());
    }

    #[test]
    fn zero_operator_samples_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let z = sample_gaussian(&CovOperator::zero(grid(4)), &mut rng).unwrap();
        assert_eq!(z, vec![0.0; 4]);
    }

    #[test]
    fn sampled_covariance_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let g = grid(4);
        let s = CovOperator::brownian(g);
        let sampler = GaussianSampler::new(&s).unwrap();
        let n = 100_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        for i in 0..4 {
            for j in 0..4 {
                let prods: Vec<f64> = draws.iter().map(|z| z[i] * z[j]).collect();
                let mean = prods.iter().sum::<f64>() / n as f64;
                let var = prods.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                assert!((mean - s.kernel()[(i, j)]).abs() < 4.0 * se);
            }
        }
        let q: Vec<f64> = draws.iter().map(|z| g.inner(z, z).powi(2)).collect();
        let mean = q.iter().sum::<f64>() / n as f64;
        let var = q.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - gaussian_fourth_moment(&s)).abs() < 3.0 * se);
    }

    #[test]
    fn chaos_covariance_examples() {
        let m = 5;
        let mut v = vec![0.0; m];
        v[0] = 1.0;
        let f = Kernel::basis_tensor(2, &[0]).with_k_vector(&v).unwrap();
        let e = ChaosExpansion::from_terms([f]).unwrap();
        let c = chaos_cov_operator(&e, grid(m)).unwrap();
        assert_abs_diff_eq!(c.kernel()[(0, 0)], m as f64);
        assert_eq!(c.kernel().iter().filter(|x| **x != 0.0).count(), 1);
        assert_abs_diff_eq!(op_trace(&c), 1.0);

        let empty = chaos_cov_operator(&ChaosExpansion::new(), grid(3)).unwrap();
        assert_eq!(empty, CovOperator::zero(grid(3)));
    }

    #[test]
    fn chaos_trace_is_total_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = 4;
        let mut terms = vec![];
        for p in 1..=3 {
            terms.push(
                Kernel::from_fn(p, 3, vec![m], BasisMode::Whitened, |_| rng.random_range(-1.0..1.0))
                    .symmetrize(),
            );
        }
        let total: f64 = terms.iter().map(|k| second_moment(k, k.order()).unwrap()).sum();
        let e = ChaosExpansion::from_terms(terms).unwrap();
        let c = chaos_cov_operator(&e, grid(m)).unwrap();
        assert_abs_diff_eq!(op_trace(&c), total, epsilon = 1e-9);
    }

    #[test]
    fn chaos_covariance_grid_mismatch() {
        let f = Kernel::basis_tensor(2, &[0]).with_k_vector(&[1.0, 0.0]).unwrap();
        let e = ChaosExpansion::from_terms([f]).unwrap();
        assert_eq!(chaos_cov_operator(&e, grid(3)), Err(Error::GridMismatch(2, 3)));
    }
}

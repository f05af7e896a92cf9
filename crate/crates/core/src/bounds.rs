//! Upper bounds on the smooth (`C²_b`) distance between a chaos functional
//! and a centered Gaussian on `K`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float methods come from libm when std is absent
use num_traits::Float;

use crate::chaos::{gamma_variance_coefficient, ChaosExpansion, SYMMETRY_TOL};
use crate::error::{Error, Result};
use crate::hilbert::{chaos_cov_operator, hs_distance, op_trace, CovOperator};
use crate::tensor::{contract, BasisMode};

/// Negative radicands down to this value are treated as rounding noise.
pub const RADICAND_TOL: f64 = 1e-9;

/// Additive decomposition of a distance bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Contraction term of each chaos with itself.
    pub m_tilde: f64,
    /// Contraction term across distinct chaoses.
    pub c_tilde: f64,
    /// `‖S − T‖_HS` between target and actual covariance.
    pub hs_cov_gap: f64,
    /// Extra covariance mismatch carried separately (e.g. variance normalization).
    pub sigma_gap: f64,
    /// `½ (m_tilde + c_tilde + hs_cov_gap + sigma_gap)`.
    pub total: f64,
}

impl BoundReport {
    pub fn new(m_tilde: f64, c_tilde: f64, hs_cov_gap: f64, sigma_gap: f64) -> Self {
        Self {
            m_tilde,
            c_tilde,
            hs_cov_gap,
            sigma_gap,
            total: 0.5 * (m_tilde + c_tilde + hs_cov_gap + sigma_gap),
        }
    }
}

/// Bound on the distance between two centered Gaussians: `½ ‖S₁ − S₂‖_HS`.
pub fn d2_gaussian_gap(s1: &CovOperator, s2: &CovOperator) -> Result<f64> {
    Ok(0.5 * hs_distance(s1, s2)?)
}

fn clip_radicand(x: f64) -> Result<f64> {
    if x < -RADICAND_TOL {
        return Err(Error::NegativeRadicand(x));
    }
    Ok(x.max(0.0))
}

/// `(m_tilde, c_tilde)` from unsymmetrized contraction norms.
///
/// Per pair of orders the Γ-variance coefficient is taken with the larger
/// order first, which dominates the other ordering.
pub fn contraction_bound(f: &ChaosExpansion) -> Result<(f64, f64)> {
    let terms: Vec<_> = f.terms().filter(|(p, _)| *p > 0).collect();
    for (_, k) in &terms {
        if k.mode() != BasisMode::Whitened {
            return Err(Error::NotWhitened);
        }
        if !k.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::KernelNotSymmetric);
        }
    }
    let mut m_tilde = 0.0;
    let mut c_tilde = 0.0;
    for &(p, fp) in &terms {
        for &(q, fq) in &terms {
            let r_max = if p == q { p - 1 } else { p.min(q) };
            let mut acc = 0.0;
            for r in 1..=r_max {
                let n = contract(fp, fq, r)?.norm();
                acc += gamma_variance_coefficient(p.max(q), p.min(q), r) * n * n;
            }
            if p == q {
                m_tilde += acc.sqrt();
            } else {
                c_tilde += acc.sqrt();
            }
        }
    }
    Ok((m_tilde, c_tilde))
}

/// Full bound for a K-valued chaos expansion against a Gaussian with covariance `target`.
pub fn d2_bound_total(f: &ChaosExpansion, target: &CovOperator) -> Result<BoundReport> {
    let (m_tilde, c_tilde) = contraction_bound(f)?;
    let actual = chaos_cov_operator(f, target.grid())?;
    let gap = hs_distance(target, &actual)?;
    Ok(BoundReport::new(m_tilde, c_tilde, gap, 0.0))
}

/// Fourth-moment bound for a single chaos: `((1+√3)/√3) sqrt(m4 · g)` with
/// `g = m4 − m2² − 2 s_hs²`.
pub fn fourth_moment_bound(m4: f64, m2: f64, s_hs: f64) -> Result<f64> {
    if m4 < 0.0 {
        return Err(Error::OutOfRange("fourth moment must be non-negative"));
    }
    let g = clip_radicand(m4 - m2 * m2 - 2.0 * s_hs * s_hs)?;
    let s3 = 3f64.sqrt();
    Ok((1.0 + s3) / s3 * (m4 * g).sqrt())
}

/// Moments of one chaos component `F_p` used by [`mixed_moment_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStats {
    pub order: usize,
    /// `E‖F_p‖⁴`
    pub fourth: f64,
    /// `E‖F_p‖²`
    pub second: f64,
    /// `‖S_p‖_HS`
    pub s_hs: f64,
}

impl OrderStats {
    fn gap(&self) -> Result<f64> {
        clip_radicand(self.fourth - self.second * self.second - 2.0 * self.s_hs * self.s_hs)
    }
}

/// Ornstein-Uhlenbeck spectrum: `L` acts on the `p`-th chaos as `−p`.
pub fn ou_eigenvalue(p: usize) -> f64 {
    p as f64
}

/// `a_{p,q} = (λ_p + λ_q) / (2 λ_q)`.
pub fn a_coefficient(lambda_p: f64, lambda_q: f64) -> f64 {
    (lambda_p + lambda_q) / (2.0 * lambda_q)
}

/// `c_{p,p} = 1 + √3`, `c_{p,q} = a_{p,q}` otherwise.
pub fn c_coefficient(p: usize, q: usize, lambda_p: f64, lambda_q: f64) -> f64 {
    if p == q {
        1.0 + 3f64.sqrt()
    } else {
        a_coefficient(lambda_p, lambda_q)
    }
}

/// `sqrt(M + C)` for a finite mixture of chaoses.
///
/// `M = (1/√3) Σ_{p,q} c_{p,q} sqrt(E‖F_p‖⁴ · gap_q)` and
/// `C = Σ_{p≠q} a_{p,q} Cov(‖F_p‖², ‖F_q‖²)`, where `cross_cov[(i, j)]` holds
/// the covariance for `stats[i]`, `stats[j]`.
pub fn mixed_moment_bound<L: Fn(usize) -> f64>(
    stats: &[OrderStats],
    cross_cov: &DMatrix<f64>,
    eigenvalue: L,
) -> Result<f64> {
    let n = stats.len();
    if cross_cov.nrows() != n || cross_cov.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cross_cov.nrows(),
        });
    }
    let gaps = stats.iter().map(OrderStats::gap).collect::<Result<Vec<_>>>()?;
    let mut m = 0.0;
    let mut c = 0.0;
    for (i, sp) in stats.iter().enumerate() {
        let lp = eigenvalue(sp.order);
        for (j, sq) in stats.iter().enumerate() {
            let lq = eigenvalue(sq.order);
            m += c_coefficient(sp.order, sq.order, lp, lq) * (sp.fourth.max(0.0) * gaps[j]).sqrt();
            if i != j {
                c += a_coefficient(lp, lq) * cross_cov[(i, j)];
            }
        }
    }
    Ok(clip_radicand(m / 3f64.sqrt() + c)?.sqrt())
}

/// `E‖F − F_{≤N}‖ ≤ sqrt(Σ_{p>N} tr S_p)`, where `traces[0]` is `tr S_1`.
pub fn truncation_tail(traces: &[f64], cutoff: usize) -> f64 {
    traces.iter().skip(cutoff).sum::<f64>().sqrt()
}

/// `sqrt(d ‖S‖_op) ‖S⁻¹‖_op` for a non-degenerate covariance.
pub fn wasserstein_constant(s: &CovOperator, d: usize) -> Result<f64> {
    let ev = s.eigenvalues();
    let (max, min) = match (ev.first(), ev.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Empty),
    };
    if min <= 1e-12 * op_trace(s).abs() || min <= 0.0 {
        return Err(Error::Singular(min));
    }
    Ok((d as f64 * max).sqrt() / min)
}

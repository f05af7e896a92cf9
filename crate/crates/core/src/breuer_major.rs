//! Functional Breuer-Major theorem for `U_n(t) = n^{-1/2} Σ_{i=1}^{⌊nt⌋} H_p(X_i)`
//! with a stationary standard Gaussian sequence `X` of covariance `ρ`.
//!
//! Everything here is expressed through `R(k) = ρ(k)^p`; no tensor of size
//! `n^p` is ever formed.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods come from libm when std is absent
use num_traits::Float;

use crate::bounds::BoundReport;
use crate::chaos::{binomial, factorial};
use crate::error::{Error, Result};
use crate::hilbert::{op_hs_norm, CovOperator, GridK};
use crate::toeplitz::toeplitz_product_trace;

/// Default number of terms in the series for `σ²`.
pub const DEFAULT_SIGMA_CUTOFF: usize = 1_000_000;

/// Slowly varying factor `l` of a power-law covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlowlyVarying {
    /// `l(x) = c`
    Const(f64),
    /// `l(x) = c (1 + ln x)`
    Log(f64),
}

impl SlowlyVarying {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Const(c) => c,
            Self::Log(c) => c * (1.0 + x.ln()),
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Self::Const(c) | Self::Log(c) => c,
        }
    }
}

/// Covariance model of the stationary sequence, always with `ρ(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovModel {
    Iid,
    /// `ρ(k) = |k|^α l(|k|)` for `k ≠ 0`.
    PowerLaw { alpha: f64, l: SlowlyVarying },
    /// Increments of fractional Brownian motion with Hurst index `hurst`.
    FbmIncrement { hurst: f64 },
}

impl CovModel {
    pub fn power_law(alpha: f64, l: SlowlyVarying) -> Result<Self> {
        if alpha.is_nan() || alpha >= 0.0 {
            return Err(Error::OutOfRange("power-law exponent must be negative"));
        }
        Ok(Self::PowerLaw { alpha, l })
    }

    pub fn fbm_increment(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::OutOfRange("Hurst index must lie in (0, 1)"));
        }
        Ok(Self::FbmIncrement { hurst })
    }

    pub fn rho(&self, k: i64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let k = k.unsigned_abs() as f64;
        match *self {
            Self::Iid => 0.0,
            Self::PowerLaw { alpha, l } => k.powf(alpha) * l.eval(k),
            Self::FbmIncrement { hurst } => fbm_rho(hurst, k),
        }
    }

    /// Decay exponent of `ρ`, if it decays polynomially.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Self::Iid => None,
            Self::PowerLaw { alpha, .. } => Some(alpha),
            Self::FbmIncrement { hurst: 0.5 } => None,
            Self::FbmIncrement { hurst } => Some(2.0 * hurst - 2.0),
        }
    }

    /// Whether `Σ_k |ρ(k)|^p` converges, so that `σ²` exists.
    pub fn is_summable(&self, p: usize) -> bool {
        self.alpha().is_none_or(|a| a * (p as f64) < -1.0)
    }

    /// `R(k) = ρ(k)^p` for `k = 0..len`.
    pub fn powered(&self, p: usize, len: usize) -> Vec<f64> {
        (0..len).map(|k| self.rho(k as i64).powi(p as i32)).collect()
    }
}

/// `ρ(k)` of fBm increments. For large `k` the second difference
/// `½((k+1)^{2H} + (k−1)^{2H} − 2k^{2H})` cancels badly, so it is summed as
/// `k^{2H} Σ_j C(2H, 2j) k^{−2j}`.
fn fbm_rho(hurst: f64, k: f64) -> f64 {
    let h2 = 2.0 * hurst;
    if k < 64.0 {
        return 0.5 * ((k + 1.0).powf(h2) + (k - 1.0).powf(h2) - 2.0 * k.powf(h2));
    }
    let inv2 = 1.0 / (k * k);
    let mut coef = 1.0; // C(2H, 2j)
    let mut pow = 1.0;
    let mut acc = 0.0;
    for j in 1..=8 {
        let i = (2 * j - 2) as f64;
        coef *= (h2 - i) * (h2 - i - 1.0) / ((i + 1.0) * (i + 2.0));
        pow *= inv2;
        acc += coef * pow;
    }
    k.powf(h2) * acc
}

pub fn rho(cov: &CovModel, k: i64) -> f64 {
    cov.rho(k)
}

/// A Breuer-Major experiment: Hermite order, sample size, covariance and K-grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmSpec {
    pub p: usize,
    pub n: usize,
    pub cov: CovModel,
    pub grid: GridK,
}

impl BmSpec {
    pub fn new(p: usize, n: usize, cov: CovModel, grid: GridK) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidOrder(0));
        }
        if n == 0 {
            return Err(Error::OutOfRange("sample size must be positive"));
        }
        Ok(Self { p, n, cov, grid })
    }

    /// Whether the limiting variance `σ²` exists.
    pub fn has_limit(&self) -> bool {
        self.cov.is_summable(self.p)
    }
}

/// `σ² = p! Σ_k ρ(k)^p` truncated at `|k| ≤ cutoff`, with an estimate of the
/// neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSq {
    pub value: f64,
    pub remainder: f64,
}

pub fn sigma_sq(p: usize, cov: &CovModel, cutoff: usize) -> Result<SigmaSq> {
    if p == 0 {
        return Err(Error::InvalidOrder(0));
    }
    if cutoff == 0 {
        return Err(Error::OutOfRange("cutoff must be at least 1"));
    }
    if let Some(a) = cov.alpha() {
        if a * p as f64 >= -1.0 {
            return Err(Error::NonSummable(a * p as f64));
        }
    }
    let pf = factorial(p);
    if *cov == CovModel::Iid || cov.alpha().is_none() {
        return Ok(SigmaSq {
            value: pf,
            remainder: 0.0,
        });
    }
    // smallest terms first
    let tail: f64 = (1..=cutoff)
        .rev()
        .map(|k| cov.rho(k as i64).powi(p as i32))
        .sum();
    let remainder = 2.0 * pf * tail_integral(p, cov, cutoff as f64);
    Ok(SigmaSq {
        value: pf * (1.0 + 2.0 * tail),
        remainder,
    })
}

/// Integral comparison for `Σ_{k>N} |ρ(k)|^p`.
fn tail_integral(p: usize, cov: &CovModel, n: f64) -> f64 {
    let (alpha, scale, log) = match *cov {
        CovModel::PowerLaw { alpha, l } => (alpha, l.scale().abs(), matches!(l, SlowlyVarying::Log(_))),
        CovModel::FbmIncrement { hurst } => (2.0 * hurst - 2.0, (hurst * (2.0 * hurst - 1.0)).abs(), false),
        CovModel::Iid => return 0.0,
    };
    let beta = alpha * p as f64;
    let gamma = -beta - 1.0;
    let lead = scale.powi(p as i32) * n.powf(beta + 1.0);
    if !log {
        return lead / gamma;
    }
    // ∫_N^∞ x^β (1 + ln x)^p dx = N^{β+1} Σ_j p!/(p−j)! L^{p−j} / γ^{j+1}
    let l = 1.0 + n.ln();
    let mut falling = 1.0;
    let mut acc = 0.0;
    for j in 0..=p {
        if j > 0 {
            falling *= (p - j + 1) as f64;
        }
        acc += falling * l.powi((p - j) as i32) / gamma.powi(j as i32 + 1);
    }
    lead * acc
}

/// `σ_n² = p! Σ_{|k|<n} ρ(k)^p (1 − |k|/n) = E U_n(1)²`.
pub fn sigma_n_sq(p: usize, cov: &CovModel, n: usize) -> f64 {
    let nf = n as f64;
    let s: f64 = (1..n)
        .rev()
        .map(|k| cov.rho(k as i64).powi(p as i32) * (1.0 - k as f64 / nf))
        .sum();
    factorial(p) * (1.0 + 2.0 * s)
}

/// `D(a, b) = Σ_{i=1}^{a} Σ_{j=1}^{b} R(i − j)` from the second prefix sums
/// `w[m] = Σ_{k=1}^{m} Σ_{l=1}^{k} R(l)`.
struct DoubleSum {
    r0: f64,
    w: Vec<f64>,
}

impl DoubleSum {
    fn new(r: &[f64]) -> Self {
        let mut w = vec![0.0; r.len()];
        let mut s1 = 0.0;
        for m in 1..r.len() {
            s1 += r[m];
            w[m] = w[m - 1] + s1;
        }
        Self { r0: r[0], w }
    }

    fn w(&self, m: isize) -> f64 {
        if m <= 0 {
            0.0
        } else {
            self.w[m as usize]
        }
    }

    fn eval(&self, a: usize, b: usize) -> f64 {
        let (a, b) = (a.min(b) as isize, a.max(b) as isize);
        a as f64 * self.r0 + self.w(a - 1) + self.w(b - 1) - self.w(b - a - 1)
    }
}

fn floor_n(n: usize, s: f64) -> usize {
    ((n as f64 * s).floor() as usize).min(n)
}

/// Covariance operator `T_n` of `U_n` on the configured grid:
/// `C(s, t) = (p!/n) Σ_{i=1}^{⌊ns⌋} Σ_{j=1}^{⌊nt⌋} ρ(i−j)^p`.
pub fn t_n_operator(spec: &BmSpec) -> CovOperator {
    let r = spec.cov.powered(spec.p, spec.n + 1);
    let d = DoubleSum::new(&r);
    let c = factorial(spec.p) / spec.n as f64;
    let idx: Vec<usize> = spec.grid.nodes().iter().map(|&s| floor_n(spec.n, s)).collect();
    CovOperator::from_index_fn(spec.grid, |i, j| c * d.eval(idx[i], idx[j]))
}

/// `k_n(s, t) = E(U_n(s) U_n(t)) − (s ∧ t) σ_n²`, by direct counting of the
/// lags below, on and above the diagonal.
pub fn kn_kernel(spec: &BmSpec, s: f64, t: f64) -> f64 {
    let r = spec.cov.powered(spec.p, spec.n);
    kn_with(&r, spec, s, t)
}

fn kn_with(r: &[f64], spec: &BmSpec, s: f64, t: f64) -> f64 {
    let n = spec.n;
    let (s, t) = (s.min(t), s.max(t));
    let a = floor_n(n, s);
    let b = floor_n(n, t);
    let nf = n as f64;
    let mut lower = 0.0; // j < i
    let mut upper = 0.0; // j > i
    let mut stationary = 0.0;
    for k in (1..n).rev() {
        lower += a.saturating_sub(k) as f64 * r[k];
        upper += a.min(b.saturating_sub(k)) as f64 * r[k];
        stationary += r[k] * (1.0 - k as f64 / nf);
    }
    let diag = a as f64;
    factorial(spec.p) * ((lower + diag + upper) / nf - s * (1.0 + 2.0 * stationary))
}

/// `sup |k_n|` over pairs of grid nodes.
pub fn kn_sup(spec: &BmSpec) -> f64 {
    let r = spec.cov.powered(spec.p, spec.n);
    let nodes = spec.grid.nodes();
    let mut sup = 0.0_f64;
    for (i, &s) in nodes.iter().enumerate() {
        for &t in &nodes[i..] {
            sup = sup.max(kn_with(&r, spec, s, t).abs());
        }
    }
    sup
}

/// `‖f_{n,1} ⊗_r f_{n,1}‖ = sqrt(tr((AB)²)) / n` with `A = [ρ(i−j)^r]`,
/// `B = [ρ(i−j)^{p−r}]` of size `n`, where `f_{n,1}` is the kernel of `U_n(1)`.
pub fn bm_contraction_norm(p: usize, r: usize, n: usize, cov: &CovModel) -> Result<f64> {
    if r == 0 || r >= p {
        return Err(Error::ContractionOutOfRange {
            r,
            max: p.saturating_sub(1),
        });
    }
    let a = cov.powered(r, n);
    let b = cov.powered(p - r, n);
    let tr = toeplitz_product_trace(&a, &b)?;
    if tr < -1e-9 * n as f64 {
        return Err(Error::NegativeRadicand(tr));
    }
    Ok(tr.max(0.0).sqrt() / n as f64)
}

/// Predicted decay rate of the bound for a power-law covariance, with `ρ`'s
/// slowly varying factor `l`. Boundary exponents take the slower adjacent rate.
pub fn rate_function(alpha: f64, p: usize, n: usize, l: SlowlyVarying) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidOrder(0));
    }
    if alpha.is_nan() || alpha >= -1.0 / p as f64 {
        return Err(Error::OutOfRange("rate requires alpha < -1/p"));
    }
    let nf = n as f64;
    let ln = l.eval(nf);
    let fast = nf.powf(-0.5);
    let middle = nf.powf(alpha / 2.0) * ln;
    let slow = nf.powf((alpha * p as f64 + 1.0) / 2.0) * ln * ln;
    // for p = 2 the middle range is empty
    let knee = if p >= 3 { -1.0 / (p - 1) as f64 } else { -1.0 };
    let right_of_minus_one = |a: f64| {
        if p >= 3 && a < knee {
            middle
        } else if p >= 3 && a == knee {
            middle.max(slow)
        } else {
            slow
        }
    };
    Ok(if alpha < -1.0 {
        fast
    } else if alpha == -1.0 {
        fast.max(right_of_minus_one(alpha))
    } else {
        right_of_minus_one(alpha)
    })
}

/// Predicted decay rate for fBm increments of Hurst index `hurst`.
pub fn fbm_rate(hurst: f64, p: usize, n: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidOrder(0));
    }
    let pf = p as f64;
    if !(hurst > 0.0 && hurst < (2.0 * pf - 1.0) / (2.0 * pf)) {
        return Err(Error::OutOfRange("Hurst index must lie in (0, (2p-1)/(2p))"));
    }
    let nf = n as f64;
    Ok(if hurst < 0.5 {
        nf.powf(-0.5)
    } else if p >= 2 && hurst <= (2.0 * pf - 3.0) / (2.0 * pf - 2.0) {
        nf.powf(hurst - 1.0)
    } else {
        nf.powf((2.0 * pf * hurst - 2.0 * pf + 1.0) / 2.0)
    })
}

/// Weight of `‖f ⊗_r f‖` in the contraction term: `(r−1)! C(p−1, r−1)² sqrt((2p−2r)!)`.
pub fn contraction_weight(p: usize, r: usize) -> f64 {
    let c = binomial(p - 1, r - 1);
    factorial(r - 1) * c * c * factorial(2 * p - 2 * r).sqrt()
}

/// Bound on the distance between the law of `U_n` on `K` and `σ W`, where
/// `W` is Brownian motion.
///
/// The contraction term uses the kernel of `U_n(1)`, which dominates those of
/// every `U_n(t)`; `sigma_gap` is `|σ_n² − σ²| ‖min(s,t)‖_HS`.
pub fn functional_bm_bound(spec: &BmSpec, sigma_cutoff: usize) -> Result<BoundReport> {
    let sigma = sigma_sq(spec.p, &spec.cov, sigma_cutoff)?;
    let sn2 = sigma_n_sq(spec.p, &spec.cov, spec.n);
    let mut m_tilde = 0.0;
    for r in 1..spec.p {
        m_tilde += contraction_weight(spec.p, r) * bm_contraction_norm(spec.p, r, spec.n, &spec.cov)?;
    }
    m_tilde *= spec.p as f64;
    let brownian = CovOperator::brownian(spec.grid);
    let hs_cov_gap = op_hs_norm(&t_n_operator(spec).sub(&brownian.scaled(sn2))?);
    let sigma_gap = (sn2 - sigma.value).abs() * op_hs_norm(&brownian);
    Ok(BoundReport::new(m_tilde, 0.0, hs_cov_gap, sigma_gap))
}

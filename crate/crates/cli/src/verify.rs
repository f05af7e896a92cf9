//! Desk-scale verification suite: exact identities, oracle comparisons and
//! Monte Carlo checks, reported one line per check.

use std::fmt;

use chaosclt_core::breuer_major::{
    bm_contraction_norm, kn_sup, sigma_sq, BmSpec, CovModel, SlowlyVarying, DEFAULT_SIGMA_CUTOFF,
};
use chaosclt_core::chaos::{
    fourth_moment_gap, gamma_variance, product_formula, sample_gamma_pair, sample_multiple_integral,
    second_moment, factorial, ChaosExpansion,
};
use chaosclt_core::hilbert::{gaussian_fourth_moment, CovOperator, GridK};
use chaosclt_core::tensor::{contract, gram_from_cov, kernel_inner, BasisMode, Kernel};
use chaosclt_core::toeplitz::{toeplitz_product_trace, toeplitz_product_trace_dense};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::experiment::log_log_slope;
use crate::gaussim::{mc_estimate, CirculantSampler, McEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// `|observed − expected| ≤ tolerance`.
    pub fn close(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            expected,
            tolerance,
            passed: (observed - expected).abs() <= tolerance,
        }
    }

    /// `observed ≤ bound + tolerance`.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            expected: bound,
            tolerance,
            passed: observed <= bound + tolerance,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: observed {:.9e}, expected {:.9e}, tolerance {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.expected,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub replicas: usize,
    /// Multiplies the exact Γ-variance before comparison; anything but 1
    /// is a deliberately broken build used to show the suite can fail.
    pub gamma_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            replicas: 100_000,
            gamma_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Random symmetric whitened scalar kernel with entries in `[-1, 1)`.
pub fn random_kernel<R: Rng>(rng: &mut R, p: usize, d: usize) -> Kernel {
    Kernel::from_fn(p, d, vec![], BasisMode::Whitened, |_| rng.random_range(-1.0..1.0)).symmetrize()
}

fn normals<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Covariance models used by the oracle comparisons.
pub fn oracle_models() -> Vec<CovModel> {
    vec![
        CovModel::Iid,
        CovModel::power_law(-2.0, SlowlyVarying::Const(0.5)).expect("valid exponent"),
        CovModel::fbm_increment(0.7).expect("valid Hurst index"),
    ]
}

/// Largest gap between the closed-form contraction norm and the generic
/// pipeline (Gram basis, whitening, contraction) over `p ≤ 3`, `n ≤ 8`.
pub fn contraction_oracle_gap(models: &[CovModel]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for cov in models {
        for n in 1..=8 {
            let basis = gram_from_cov(|k| cov.rho(k), n)?;
            for p in 2..=3 {
                let c = 1.0 / (n as f64).sqrt();
                let raw = Kernel::from_fn(p, n, vec![], BasisMode::Raw, |idx| {
                    if idx.iter().all(|&i| i == idx[0]) {
                        c
                    } else {
                        0.0
                    }
                });
                let f = raw.whiten(&basis)?;
                for r in 1..p {
                    let cf = contract(&f, &f, r)?;
                    let generic = kernel_inner(&cf, &cf)?.sqrt();
                    let closed = bm_contraction_norm(p, r, n, cov)?;
                    worst = worst.max((generic - closed).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Monte Carlo estimate of `Var⟨DI_p(f), −DL⁻¹I_q(g)⟩` around its exact mean.
pub fn gamma_variance_mc(
    f: &Kernel,
    p: usize,
    g: &Kernel,
    q: usize,
    replicas: usize,
    seed: u64,
) -> Result<McEstimate> {
    let d = f.h_dim();
    let mean = if p == q {
        factorial(p) * kernel_inner(f, g)?
    } else {
        0.0
    };
    mc_estimate(
        |_, rng| {
            let w = normals(rng, d);
            let x = sample_gamma_pair(f, p, g, q, &w).expect("kernel shapes checked");
            (x - mean) * (x - mean)
        },
        replicas,
        seed,
    )
}

struct Suite {
    cfg: VerifyConfig,
    checks: Vec<Check>,
    stream: u64,
}

impl Suite {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn next_seed(&mut self) -> u64 {
        self.stream += 1;
        self.cfg.seed.wrapping_mul(1 << 20).wrapping_add(self.stream)
    }

    fn exact_identities(&mut self) -> Result<()> {
        let e11 = Kernel::basis_tensor(1, &[0, 0]);
        self.push(Check::close("fourth_moment_gap(e1⊗e1)", fourth_moment_gap(&e11, &e11, 2)?, 48.0, 1e-9));

        let one = CovOperator::new(GridK::new(1)?, DMatrix::from_element(1, 1, 2.0))?;
        self.push(Check::close("gaussian_fourth_moment 1-dim", gaussian_fourth_moment(&one), 12.0, 1e-12));
        let pair = CovOperator::identity(GridK::new(2)?);
        self.push(Check::close("gaussian_fourth_moment iid pair", gaussian_fourth_moment(&pair), 8.0, 1e-12));
        let m = 256;
        let bm = CovOperator::brownian(GridK::new(m)?);
        self.push(Check::close(
            "gaussian_fourth_moment Brownian",
            gaussian_fourth_moment(&bm),
            7.0 / 12.0,
            5.0 / m as f64,
        ));

        let e1 = Kernel::basis_tensor(1, &[0]);
        let sq = product_formula(&e1, 1, &e1, 1)?;
        let err = coefficient_error(&sq, &[(0, 1.0), (2, 1.0)]);
        self.push(Check::close("product H1·H1 = H2 + 1", err, 0.0, 0.0));
        let pr = product_formula(&e11, 2, &e1, 1)?;
        let err = coefficient_error(&pr, &[(1, 2.0), (3, 1.0)]);
        self.push(Check::close("product H2·H1 = H3 + 2H1", err, 0.0, 0.0));

        let s = sigma_sq(1, &CovModel::power_law(-2.0, SlowlyVarying::Const(1.0))?, DEFAULT_SIGMA_CUTOFF)?;
        let exact = 1.0 + std::f64::consts::PI.powi(2) / 3.0;
        self.push(Check::close("sigma_sq zeta(2) series", s.value, exact, s.remainder));
        Ok(())
    }

    fn oracles(&mut self) -> Result<()> {
        let gap = contraction_oracle_gap(&oracle_models())?;
        self.push(Check::close("contraction closed form vs generic", gap, 0.0, 1e-10));

        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut worst = 0.0_f64;
        for n in [3, 17, 64] {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = toeplitz_product_trace(&a, &b)?;
            let dense = toeplitz_product_trace_dense(&a, &b)?;
            worst = worst.max((fast - dense).abs() / (1.0 + dense.abs()));
        }
        self.push(Check::close("Toeplitz trace fast vs dense", worst, 0.0, 1e-10));

        let d = 3;
        for (p, q) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
            let f = random_kernel(&mut rng, p, d);
            let g = random_kernel(&mut rng, q, d);
            let exact = self.cfg.gamma_scale * gamma_variance(&f, p, &g, q)?;
            let seed = self.next_seed();
            let mc = gamma_variance_mc(&f, p, &g, q, self.cfg.replicas, seed)?;
            self.push(Check::close(
                format!("gamma_variance ({p},{q}) vs Monte Carlo"),
                mc.mean,
                exact,
                3.0 * mc.std_error,
            ));
        }
        Ok(())
    }

    fn isometry(&mut self) -> Result<()> {
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0x5eed);
        let kernels: Vec<Kernel> = (1..=3).map(|p| random_kernel(&mut rng, p, d)).collect();
        for (i, f) in kernels.iter().enumerate() {
            let p = i + 1;
            let seed = self.next_seed();
            let mc = mc_estimate(
                |_, rng| {
                    let v = sample_multiple_integral(f, p, &normals(rng, d)).expect("shape checked")[0];
                    v * v
                },
                self.cfg.replicas,
                seed,
            )?;
            self.push(Check::close(
                format!("isometry p={p}"),
                mc.mean,
                second_moment(f, p)?,
                3.0 * mc.std_error,
            ));
        }
        for (p, q) in [(1, 2), (2, 3), (1, 3)] {
            let (f, g) = (&kernels[p - 1], &kernels[q - 1]);
            let seed = self.next_seed();
            let mc = mc_estimate(
                |_, rng| {
                    let w = normals(rng, d);
                    let a = sample_multiple_integral(f, p, &w).expect("shape checked")[0];
                    let b = sample_multiple_integral(g, q, &w).expect("shape checked")[0];
                    a * b
                },
                self.cfg.replicas,
                seed,
            )?;
            self.push(Check::close(
                format!("orthogonality of chaoses {p},{q}"),
                mc.mean,
                0.0,
                3.0 * mc.std_error,
            ));
        }
        let mut min_gap = f64::INFINITY;
        for _ in 0..100 {
            let p = rng.random_range(2..=3);
            let f = random_kernel(&mut rng, p, d);
            let g = random_kernel(&mut rng, p, d);
            min_gap = min_gap.min(fourth_moment_gap(&f, &g, p)?);
        }
        self.push(Check {
            name: "fourth_moment_gap >= 0 on 100 pairs".into(),
            observed: min_gap,
            expected: 0.0,
            tolerance: 1e-12,
            passed: min_gap >= -1e-12,
        });
        Ok(())
    }

    fn breuer_major(&mut self) -> Result<()> {
        let grid = GridK::new(64)?;
        for n in [16, 64, 256] {
            let spec = BmSpec::new(1, n, CovModel::Iid, grid)?;
            self.push(Check::at_most(format!("iid sup|k_n| <= 1/n, n={n}"), kn_sup(&spec), 1.0 / n as f64, 1e-15));
        }
        let ns = [64usize, 128, 256, 512];
        let pred: Vec<f64> = ns.iter().map(|&n| (n as f64).powf(-0.5)).collect();
        self.push(Check::close("slope of exact power law", log_log_slope(&ns, &pred), -0.5, 1e-12));

        let h = 0.7;
        let cov = CovModel::fbm_increment(h)?;
        let sampler = CirculantSampler::new(&cov, 8)?;
        let seed = self.next_seed();
        let lag1 = mc_estimate(
            |_, rng| {
                let x = sampler.sample(rng);
                x[3] * x[4]
            },
            self.cfg.replicas,
            seed,
        )?;
        self.push(Check::close(
            "circulant fBm lag-1 covariance",
            lag1.mean,
            2f64.powf(2.0 * h - 1.0) - 1.0,
            4.0 * lag1.std_error,
        ));
        Ok(())
    }
}

/// Largest coordinate error of a scalar one-dimensional expansion against
/// `Σ c_p H_p`.
fn coefficient_error(e: &ChaosExpansion, want: &[(usize, f64)]) -> f64 {
    let mut err = 0.0_f64;
    for (p, k) in e.terms() {
        let target = want.iter().find(|(q, _)| *q == p).map_or(0.0, |(_, c)| *c);
        for &v in k.coords() {
            err = err.max((v - target).abs());
        }
    }
    for (q, c) in want {
        if e.term(*q).is_none() {
            err = err.max(c.abs());
        }
    }
    err
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut suite = Suite {
        cfg: cfg.clone(),
        checks: Vec::new(),
        stream: 0,
    };
    suite.exact_identities()?;
    suite.oracles()?;
    suite.isometry()?;
    suite.breuer_major()?;
    Ok(VerifyReport { checks: suite.checks })
}

//! Rate experiments: bound components per sample size, optional Monte Carlo
//! discrepancy, and slope regression on the resulting table.

use std::fmt;

use chaosclt_core::breuer_major::{
    fbm_rate, functional_bm_bound, rate_function, sigma_sq, BmSpec, CovModel,
};
use chaosclt_core::hilbert::{CovOperator, GaussianSampler, GridK};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussim::{
    empirical_discrepancy, simulate_u_n, substream, test_directions, CirculantSampler, Discrepancy,
};
use crate::table::BmRow;

/// Largest slope difference accepted by [`run_rate`].
pub const SLOPE_TOL: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p: usize,
    pub cov: CovModel,
    pub n_list: Vec<usize>,
    pub grid: GridK,
    pub replicas: usize,
    pub seed: u64,
    pub sigma_cutoff: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Usage("the list of sample sizes is empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) || self.n_list[0] == 0 {
            return Err(Error::Usage("sample sizes must be positive and strictly increasing".into()));
        }
        if self.grid.len() < 8 {
            return Err(Error::Usage("the grid needs at least 8 nodes".into()));
        }
        if self.replicas == 1 {
            return Err(Error::Usage("use 0 replicas (off) or at least 2".into()));
        }
        self.predicted_rate(self.n_list[0])
            .map(|_| ())
            .map_err(|e| Error::Usage(e.to_string()))
    }

    /// Predicted decay rate at `n` for the configured model.
    pub fn predicted_rate(&self, n: usize) -> Result<f64> {
        Ok(match self.cov {
            CovModel::Iid => (n as f64).powf(-0.5),
            CovModel::PowerLaw { alpha, l } => rate_function(alpha, self.p, n, l)?,
            CovModel::FbmIncrement { hurst } => fbm_rate(hurst, self.p, n)?,
        })
    }
}

/// Monte Carlo stream of replica `r` at sample-size index `j`; the high half
/// of the stream number is `j + 1` so stream 0 stays free for directions.
fn stream_id(j: usize, r: usize) -> u64 {
    ((j as u64 + 1) << 32) | r as u64
}

/// Empirical discrepancy between `U_n` and `σ W` on the configured grid, where
/// `W` is Brownian motion, from `replicas` draws of each. `slot` selects the
/// random streams so that different sample sizes use disjoint ones.
pub fn bm_discrepancy(
    spec: &BmSpec,
    sigma2: f64,
    replicas: usize,
    seed: u64,
    slot: usize,
) -> Result<Discrepancy> {
    let sampler = CirculantSampler::new(&spec.cov, spec.n)?;
    let target = GaussianSampler::new(&CovOperator::brownian(spec.grid).scaled(sigma2))?;
    let draws = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, stream_id(slot, r));
            let path = sampler.sample(&mut rng);
            let u = simulate_u_n(spec, &path, spec.grid)?;
            Ok((u, target.sample(&mut rng)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (f, z): (Vec<_>, Vec<_>) = draws.into_iter().unzip();
    let dirs = test_directions(spec.grid, seed, 0);
    empirical_discrepancy(&f, &z, &dirs, spec.grid)
}

fn bm_row(cfg: &ExperimentConfig, j: usize, n: usize) -> Result<BmRow> {
    let spec = BmSpec::new(cfg.p, n, cfg.cov, cfg.grid)?;
    let report = functional_bm_bound(&spec, cfg.sigma_cutoff)?;
    let emp = if cfg.replicas > 0 {
        let sigma2 = sigma_sq(cfg.p, &cfg.cov, cfg.sigma_cutoff)?.value;
        Some(bm_discrepancy(&spec, sigma2, cfg.replicas, cfg.seed, j)?.value)
    } else {
        None
    };
    Ok(BmRow {
        n,
        m_tilde: report.m_tilde,
        hs_cov_gap: report.hs_cov_gap,
        sigma_gap: report.sigma_gap,
        total_bound: report.total,
        rate_pred: cfg.predicted_rate(n)?,
        emp_discrepancy: emp,
    })
}

/// One row per sample size, computed in parallel; row order follows `n_list`.
pub fn run_bm(cfg: &ExperimentConfig) -> Result<Vec<BmRow>> {
    cfg.validate()?;
    cfg.n_list
        .par_iter()
        .enumerate()
        .map(|(j, &n)| bm_row(cfg, j, n))
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Log-log slope of `values` against `n`.
pub fn log_log_slope(n: &[usize], values: &[f64]) -> f64 {
    let x: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    ls_slope(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub rows: usize,
    pub slope_total: f64,
    pub slope_pred: f64,
}

impl RateReport {
    pub fn difference(&self) -> f64 {
        self.slope_total - self.slope_pred
    }

    pub fn passed(&self) -> bool {
        self.difference().abs() <= SLOPE_TOL
    }
}

impl fmt::Display for RateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows: {}", self.rows)?;
        writeln!(f, "slope total_bound: {:.6}", self.slope_total)?;
        writeln!(f, "slope rate_pred:   {:.6}", self.slope_pred)?;
        writeln!(f, "difference:        {:.6} (tolerance {SLOPE_TOL})", self.difference())?;
        writeln!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Slopes of `total_bound` and `rate_pred` against `n` on a log-log scale.
pub fn run_rate(rows: &[BmRow]) -> Result<RateReport> {
    if rows.len() < 3 {
        return Err(Error::TooFewRows(rows.len()));
    }
    let n: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let total: Vec<f64> = rows.iter().map(|r| r.total_bound).collect();
    let pred: Vec<f64> = rows.iter().map(|r| r.rate_pred).collect();
    Ok(RateReport {
        rows: rows.len(),
        slope_total: log_log_slope(&n, &total),
        slope_pred: log_log_slope(&n, &pred),
    })
}

/// `2^k` for `k` from `log2(nmin)` to `log2(nmax)`.
pub fn powers_of_two(nmin: usize, nmax: usize) -> Result<Vec<usize>> {
    if !nmin.is_power_of_two() || !nmax.is_power_of_two() || nmin > nmax {
        return Err(Error::Usage("nmin and nmax must be powers of two with nmin <= nmax".into()));
    }
    Ok((nmin.trailing_zeros()..=nmax.trailing_zeros()).map(|k| 1usize << k).collect())
}

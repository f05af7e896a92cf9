//! Stationary Gaussian simulation, seeded Monte Carlo and the empirical
//! discrepancy over a smooth test family.

use std::f64::consts::PI;
use std::sync::Arc;

use chaosclt_core::breuer_major::{BmSpec, CovModel};
use chaosclt_core::hermite::hermite;
use chaosclt_core::hilbert::GridK;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Spectral values of the circulant embedding down to this are clipped to zero.
pub const SPECTRUM_CLIP: f64 = -1e-8;

/// Random stream number `stream` of the master seed.
///
/// `ChaCha8Rng::seed_from_u64(master)` fixes the key and `set_stream(stream)`
/// selects one of 2^64 independent keystreams, so distinct stream numbers
/// never overlap.
pub fn substream(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Exact sampler for a stationary Gaussian sequence `X_0..X_{n-1}` with
/// `E X_0 X_k = ρ(k)`, by circulant embedding.
#[derive(Clone)]
pub struct CirculantSampler {
    n: usize,
    /// `sqrt(λ_j / M)` for the embedding spectrum `λ`.
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl CirculantSampler {
    pub fn new(cov: &CovModel, n: usize) -> Result<Self> {
        let size = (2 * n.max(1)).next_power_of_two();
        let mut c: Vec<Complex<f64>> = (0..size)
            .map(|k| Complex::new(cov.rho(k.min(size - k) as i64), 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        fft.process(&mut c);
        let mut scale = Vec::with_capacity(size);
        for z in &c {
            if z.re < SPECTRUM_CLIP {
                return Err(Error::NegativeSpectrum { size, value: z.re });
            }
            scale.push((z.re.max(0.0) / size as f64).sqrt());
        }
        Ok(Self { n, scale, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Two independent paths from one transform (real and imaginary parts).
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut z);
        let re = z[..self.n].iter().map(|c| c.re).collect();
        let im = z[..self.n].iter().map(|c| c.im).collect();
        (re, im)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_pair(rng).0
    }
}

/// One path of length `n` from the model.
pub fn circulant_sample<R: Rng + ?Sized>(cov: &CovModel, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(CirculantSampler::new(cov, n)?.sample(rng))
}

/// `U_n(t) = n^{-1/2} Σ_{i=1}^{⌊nt⌋} H_p(X_i)` at each of `times`, where
/// `X_i` is `path[i-1]`.
pub fn partial_sum_process(spec: &BmSpec, path: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    let n = spec.n;
    if path.len() < n {
        return Err(Error::ShortPath {
            need: n,
            got: path.len(),
        });
    }
    let mut partial = Vec::with_capacity(n + 1);
    partial.push(0.0);
    let mut acc = 0.0;
    for &x in &path[..n] {
        acc += hermite(spec.p, x);
        partial.push(acc);
    }
    let norm = 1.0 / (n as f64).sqrt();
    Ok(times
        .iter()
        .map(|&t| {
            let upto = ((n as f64 * t).floor() as usize).min(n);
            partial[upto] * norm
        })
        .collect())
}

/// [`partial_sum_process`] at the grid nodes.
pub fn simulate_u_n(spec: &BmSpec, path: &[f64], grid: GridK) -> Result<Vec<f64>> {
    partial_sum_process(spec, path, &grid.nodes())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: usize,
}

/// Pairwise sum with a split point depending only on the length, so the
/// result is the same however the inputs were produced.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Mean and standard error of already computed replica values.
pub fn summarize(values: &[f64]) -> Result<McEstimate> {
    let r = values.len();
    if r < 2 {
        return Err(Error::TooFewReplicas { min: 2, got: r });
    }
    if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { replica: i, value: v });
    }
    let mean = pairwise_sum(values) / r as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (r - 1) as f64;
    Ok(McEstimate {
        mean,
        std_error: (var / r as f64).sqrt(),
        replicas: r,
    })
}

/// Runs `stat(replica, rng)` on `substream(seed, replica)` for every replica
/// in parallel. Bit-identical for any thread count.
pub fn mc_estimate<F>(stat: F, replicas: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(usize, &mut ChaCha8Rng) -> f64 + Sync,
{
    if replicas < 2 {
        return Err(Error::TooFewReplicas { min: 2, got: replicas });
    }
    let values: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| stat(r, &mut substream(seed, r as u64)))
        .collect();
    summarize(&values)
}

/// Largest mean difference over the test family, with the standard error of
/// the maximizing member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub value: f64,
    pub std_error: f64,
}

/// `max_h |mean h(F) − mean h(Z)|` over `h(x) = cos⟨x,u⟩ / w(u)` and
/// `sin⟨x,u⟩ / w(u)` with `w(u) = max(1, ‖u‖, ‖u‖²)`, which keeps the first
/// two derivatives of `h` bounded by one.
pub fn empirical_discrepancy(
    samples_f: &[Vec<f64>],
    samples_z: &[Vec<f64>],
    directions: &[Vec<f64>],
    grid: GridK,
) -> Result<Discrepancy> {
    if samples_f.is_empty() || samples_z.is_empty() || directions.is_empty() {
        return Err(Error::Empty);
    }
    let stats = |samples: &[Vec<f64>], u: &[f64], w: f64, f: fn(f64) -> f64| {
        let vals: Vec<f64> = samples.iter().map(|x| f(grid.inner(x, u)) / w).collect();
        let n = vals.len() as f64;
        let mean = pairwise_sum(&vals) / n;
        let var = if vals.len() > 1 {
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var / n)
    };
    let mut best = Discrepancy {
        value: 0.0,
        std_error: 0.0,
    };
    for u in directions {
        let norm = grid.norm(u);
        if norm == 0.0 {
            return Err(Error::Usage("test direction must be nonzero".into()));
        }
        let w = 1f64.max(norm).max(norm * norm);
        for f in [f64::cos as fn(f64) -> f64, f64::sin] {
            let (mf, vf) = stats(samples_f, u, w, f);
            let (mz, vz) = stats(samples_z, u, w, f);
            let d = (mf - mz).abs();
            if d > best.value {
                best = Discrepancy {
                    value: d,
                    std_error: (vf + vz).sqrt(),
                };
            }
        }
    }
    Ok(best)
}

/// Test directions on the grid: the first 8 cosine modes `cos(π k s)` and 8
/// Gaussian directions from `substream(seed, stream)`, each normalized and
/// then scaled to K-norms ½, 1 and 2.
pub fn test_directions(grid: GridK, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let nodes = grid.nodes();
    let mut base: Vec<Vec<f64>> = (0..8)
        .map(|k| nodes.iter().map(|s| (PI * k as f64 * s).cos()).collect())
        .collect();
    let mut rng = substream(seed, stream);
    for _ in 0..8 {
        base.push((0..grid.len()).map(|_| rng.sample(StandardNormal)).collect());
    }
    let mut out = Vec::with_capacity(base.len() * 3);
    for v in base {
        let norm = grid.norm(&v);
        if norm == 0.0 {
            continue;
        }
        for target in [0.5, 1.0, 2.0] {
            out.push(v.iter().map(|x| x * target / norm).collect());
        }
    }
    out
}

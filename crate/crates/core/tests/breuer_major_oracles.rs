//! Closed-form Breuer-Major quantities against the generic tensor pipeline.

use chaosclt_core::breuer_major::{
    bm_contraction_norm, kn_kernel, sigma_n_sq, t_n_operator, BmSpec, CovModel, SlowlyVarying,
};
use chaosclt_core::chaos::{factorial, ChaosExpansion};
use chaosclt_core::hilbert::{chaos_cov_operator, GridK};
use chaosclt_core::tensor::{contract, gram_from_cov, BasisMode, Kernel};
use chaosclt_core::Error;

fn models() -> Vec<CovModel> {
    vec![
        CovModel::Iid,
        CovModel::power_law(-0.6, SlowlyVarying::Const(0.5)).unwrap(),
        CovModel::power_law(-2.0, SlowlyVarying::Const(0.5)).unwrap(),
        CovModel::fbm_increment(0.7).unwrap(),
        CovModel::fbm_increment(0.3).unwrap(),
    ]
}

/// Raw kernel of `U_n(1)` on the indicator basis: `n^{-1/2} Σ_i e_i^{⊗p}`.
fn terminal_kernel(p: usize, n: usize) -> Kernel {
    let c = 1.0 / (n as f64).sqrt();
    Kernel::from_fn(p, n, vec![], BasisMode::Raw, |idx| {
        if idx.iter().all(|&i| i == idx[0]) {
            c
        } else {
            0.0
        }
    })
}

#[test]
fn contraction_norm_matches_generic_contraction() {
    for cov in models() {
        for n in 1..=8 {
            let basis = gram_from_cov(|k| cov.rho(k), n).unwrap();
            for p in 2..=3 {
                let f = terminal_kernel(p, n).whiten(&basis).unwrap();
                for r in 1..p {
                    let generic = contract(&f, &f, r).unwrap().norm();
                    let closed = bm_contraction_norm(p, r, n, &cov).unwrap();
                    assert!(
                        (generic - closed).abs() < 1e-10,
                        "{cov:?} n={n} p={p} r={r}: {generic} vs {closed}"
                    );
                }
            }
        }
    }
}

#[test]
fn unit_scale_power_law_is_not_a_covariance() {
    // ρ(0) = ρ(1) = 1 with decaying tail cannot be positive semidefinite
    let cov = CovModel::power_law(-2.0, SlowlyVarying::Const(1.0)).unwrap();
    let err = gram_from_cov(|k| cov.rho(k), 6).unwrap_err();
    assert!(matches!(err, Error::NotPositiveSemidefinite { .. }));
}

/// K-valued kernel of `t ↦ U_n(t)` in the orthonormal cell basis of the grid.
fn process_kernel(p: usize, n: usize, grid: GridK) -> Kernel {
    let m = grid.len();
    let nodes = grid.nodes();
    let c = 1.0 / ((n as f64).sqrt() * (m as f64).sqrt());
    Kernel::from_fn(p, n, vec![m], BasisMode::Raw, |idx| {
        let (h, cell) = idx.split_at(p);
        let i = h[0];
        let upto = (n as f64 * nodes[cell[0]]).floor() as usize;
        if h.iter().all(|&j| j == i) && i < upto {
            c
        } else {
            0.0
        }
    })
}

#[test]
fn t_n_matches_chaos_covariance_of_process_kernel() {
    let grid = GridK::new(5).unwrap();
    for cov in models() {
        for (p, n) in [(1, 7), (2, 6), (3, 4)] {
            let basis = gram_from_cov(|k| cov.rho(k), n).unwrap();
            let f = process_kernel(p, n, grid).whiten(&basis).unwrap();
            let e = ChaosExpansion::from_terms([f]).unwrap();
            let generic = chaos_cov_operator(&e, grid).unwrap();
            let spec = BmSpec::new(p, n, cov, grid).unwrap();
            let closed = t_n_operator(&spec);
            let diff = (generic.kernel() - closed.kernel()).amax();
            assert!(diff < 1e-10, "{cov:?} p={p} n={n}: {diff}");
        }
    }
}

#[test]
fn terminal_variance_is_sigma_n_sq() {
    for cov in models() {
        for (p, n) in [(1, 9), (2, 7), (3, 5)] {
            let basis = gram_from_cov(|k| cov.rho(k), n).unwrap();
            let f = terminal_kernel(p, n).whiten(&basis).unwrap();
            let var = factorial(p) * f.norm().powi(2);
            assert!((var - sigma_n_sq(p, &cov, n)).abs() < 1e-10);
            let spec = BmSpec::new(p, n, cov, GridK::new(4).unwrap()).unwrap();
            assert!(kn_kernel(&spec, 1.0, 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn contraction_norm_large_n_is_stable() {
    // fast O(n²) trace against the dense reference at a moderate size
    use chaosclt_core::toeplitz::toeplitz_product_trace_dense;
    for cov in models() {
        let n = 300;
        for (p, r) in [(2, 1), (3, 1), (3, 2)] {
            let a = cov.powered(r, n);
            let b = cov.powered(p - r, n);
            let dense = toeplitz_product_trace_dense(&a, &b).unwrap().sqrt() / n as f64;
            let fast = bm_contraction_norm(p, r, n, &cov).unwrap();
            assert!((fast - dense).abs() < 1e-10 * dense.max(1.0));
        }
    }
}

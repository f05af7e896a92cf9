//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use chaosclt::experiment::{bm_discrepancy, log_log_slope, powers_of_two, run_bm, ExperimentConfig};
use chaosclt::gaussim::mc_estimate;
use chaosclt::table::rows_to_string;
use chaosclt::verify::{contraction_oracle_gap, gamma_variance_mc, oracle_models, random_kernel};
use chaosclt_core::breuer_major::{
    functional_bm_bound, kn_sup, sigma_sq, BmSpec, CovModel, SlowlyVarying, DEFAULT_SIGMA_CUTOFF,
};
use chaosclt_core::chaos::{
    fourth_moment_gap, gamma_variance, product_formula, sample_multiple_integral, second_moment,
};
use chaosclt_core::hilbert::{gaussian_fourth_moment, CovOperator, GridK};
use chaosclt_core::tensor::Kernel;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const MC_REPLICAS: usize = 100_000;

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

type Criterion = (&'static str, fn() -> Outcome);

fn normals(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn exact_identities() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, got: f64, want: f64, tol: f64| {
        let pass = (got - want).abs() <= tol;
        ok &= pass;
        if !pass {
            notes.push(format!("{name}: {got} vs {want}"));
        }
    };
    let e11 = Kernel::basis_tensor(1, &[0, 0]);
    check("gap(e1⊗e1)", fourth_moment_gap(&e11, &e11, 2)?, 48.0, 1e-9);
    let sigma2 = 1.7;
    let one = CovOperator::new(GridK::new(1)?, DMatrix::from_element(1, 1, sigma2))?;
    check("3σ⁴", gaussian_fourth_moment(&one), 3.0 * sigma2 * sigma2, 1e-12);
    check("iid pair", gaussian_fourth_moment(&CovOperator::identity(GridK::new(2)?)), 8.0, 1e-12);
    let m = 256;
    let bm = CovOperator::brownian(GridK::new(m)?);
    check("Brownian 7/12", gaussian_fourth_moment(&bm), 7.0 / 12.0, 5.0 / m as f64);

    let e1 = Kernel::basis_tensor(1, &[0]);
    let sq = product_formula(&e1, 1, &e1, 1)?;
    let h1h1 = sq.orders() == vec![0, 2]
        && sq.term(0).map(|k| k.coords()) == Some(&[1.0][..])
        && sq.term(2).map(|k| k.coords()) == Some(&[1.0][..]);
    let pr = product_formula(&e11, 2, &e1, 1)?;
    let h2h1 = pr.orders() == vec![1, 3]
        && pr.term(1).map(|k| k.coords()) == Some(&[2.0][..])
        && pr.term(3).map(|k| k.coords()) == Some(&[1.0][..]);
    if !(h1h1 && h2h1) {
        notes.push("product formula coefficients".into());
    }
    ok &= h1h1 && h2h1;
    Ok((ok, if notes.is_empty() { "all identities hold".into() } else { notes.join("; ") }))
}

fn oracle_equivalence() -> Outcome {
    let gap = contraction_oracle_gap(&oracle_models())?;
    let mut ok = gap <= 1e-10;
    let mut parts = vec![format!("contraction max gap {gap:.2e} (tol 1e-10)")];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (i, (p, q)) in [(1, 1), (2, 1), (2, 2), (3, 2)].into_iter().enumerate() {
        let d = 3;
        let f = random_kernel(&mut rng, p, d);
        let g = random_kernel(&mut rng, q, d);
        let exact = gamma_variance(&f, p, &g, q)?;
        let mc = gamma_variance_mc(&f, p, &g, q, MC_REPLICAS, 100 + i as u64)?;
        let pass = (mc.mean - exact).abs() <= 3.0 * mc.std_error;
        ok &= pass;
        parts.push(format!(
            "Γ-var({p},{q}) exact {exact:.5} mc {:.5}±{:.5}",
            mc.mean, mc.std_error
        ));
    }
    Ok((ok, parts.join(", ")))
}

fn isometry_orthogonality() -> Outcome {
    let d = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kernels: Vec<Kernel> = (1..=3).map(|p| random_kernel(&mut rng, p, d)).collect();
    let mut ok = true;
    let mut worst_z = 0.0_f64;
    for (i, f) in kernels.iter().enumerate() {
        let p = i + 1;
        let mc = mc_estimate(
            |_, r| {
                let v = sample_multiple_integral(f, p, &normals(r, d)).unwrap()[0];
                v * v
            },
            MC_REPLICAS,
            300 + p as u64,
        )?;
        let z = (mc.mean - second_moment(f, p)?).abs() / mc.std_error;
        worst_z = worst_z.max(z);
        ok &= z <= 3.0;
    }
    for (p, q) in [(1, 2), (1, 3), (2, 3)] {
        let (f, g) = (&kernels[p - 1], &kernels[q - 1]);
        let mc = mc_estimate(
            |_, r| {
                let w = normals(r, d);
                sample_multiple_integral(f, p, &w).unwrap()[0] * sample_multiple_integral(g, q, &w).unwrap()[0]
            },
            MC_REPLICAS,
            400 + 10 * p as u64 + q as u64,
        )?;
        let z = mc.mean.abs() / mc.std_error;
        worst_z = worst_z.max(z);
        ok &= z <= 3.0;
    }
    let mut min_gap = f64::INFINITY;
    for _ in 0..100 {
        let p = rng.random_range(2..=3);
        let f = random_kernel(&mut rng, p, d);
        let g = random_kernel(&mut rng, p, d);
        min_gap = min_gap.min(fourth_moment_gap(&f, &g, p)?);
    }
    ok &= min_gap >= 0.0;
    Ok((ok, format!("worst |z| {worst_z:.2} (tol 3), min fourth-moment gap {min_gap:.3e}")))
}

fn bound_slope(p: usize, cov: CovModel, target: f64) -> Result<(bool, String), Box<dyn std::error::Error>> {
    let ns = powers_of_two(1 << 8, 1 << 13)?;
    let grid = GridK::new(64)?;
    let mut totals = Vec::new();
    for &n in &ns {
        let spec = BmSpec::new(p, n, cov, grid)?;
        totals.push(functional_bm_bound(&spec, DEFAULT_SIGMA_CUTOFF)?.total);
    }
    let slope = log_log_slope(&ns, &totals);
    let pass = (slope - target).abs() <= 0.15;
    let verdict = if pass { "ok" } else { "outside ±0.15" };
    Ok((pass, format!("slope {slope:.4} vs {target} ({verdict})")))
}

fn slope_reproduction() -> Outcome {
    let half = SlowlyVarying::Const(0.5);
    let cases = [
        ("α=-2,p=2", 2, CovModel::power_law(-2.0, half)?, -0.5),
        ("fBm H=0.6,p=2", 2, CovModel::fbm_increment(0.6)?, -0.3),
        ("α=-0.75,p=3", 3, CovModel::power_law(-0.75, half)?, -0.375),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, p, cov, target) in cases {
        let (pass, msg) = bound_slope(p, cov, target)?;
        ok &= pass;
        parts.push(format!("{name}: {msg}"));
    }
    Ok((ok, parts.join(", ")))
}

fn deviation_kernel() -> Outcome {
    let grid = GridK::new(64)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [16, 64, 256] {
        let sup = kn_sup(&BmSpec::new(1, n, CovModel::Iid, grid)?);
        ok &= sup <= 1.0 / n as f64;
        parts.push(format!("iid n={n}: n·sup {:.6}", sup * n as f64));
    }
    let cov = CovModel::power_law(-2.0, SlowlyVarying::Const(0.5))?;
    let ns = powers_of_two(1 << 8, 1 << 12)?;
    let sups: Vec<f64> = ns
        .iter()
        .map(|&n| BmSpec::new(2, n, cov, grid).map(|s| kn_sup(&s)))
        .collect::<Result<_, _>>()?;
    let slope = log_log_slope(&ns, &sups);
    ok &= slope <= -0.8;
    parts.push(format!("α=-2,p=2 sup slope {slope:.4} (≤ -0.8)"));
    Ok((ok, parts.join(", ")))
}

fn empirical_sandwich() -> Outcome {
    let cov = CovModel::power_law(-2.0, SlowlyVarying::Const(0.5))?;
    let spec = BmSpec::new(2, 1 << 10, cov, GridK::new(32)?)?;
    let bound = functional_bm_bound(&spec, DEFAULT_SIGMA_CUTOFF)?.total;
    let sigma2 = sigma_sq(2, &cov, DEFAULT_SIGMA_CUTOFF)?.value;
    let d = bm_discrepancy(&spec, sigma2, 10_000, 42, 0)?;
    let ok = d.value <= bound + 4.0 * d.std_error;
    Ok((
        ok,
        format!("discrepancy {:.5} ± {:.5} vs bound {bound:.5}", d.value, d.std_error),
    ))
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        p: 2,
        cov: CovModel::power_law(-2.0, SlowlyVarying::Const(0.5))?,
        n_list: vec![64, 128, 256],
        grid: GridK::new(16)?,
        replicas: 500,
        seed: 11,
        sigma_cutoff: 100_000,
    };
    let run = |threads: usize| -> Result<String, Box<dyn std::error::Error>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(rows_to_string(&pool.install(|| run_bm(&cfg))?))
    };
    let one = run(1)?;
    let four = run(4)?;
    let again = run(4)?;
    let ok = one == four && four == again;
    Ok((ok, format!("{} bytes, 1 vs 4 threads identical: {}", one.len(), one == four)))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 exact identities", exact_identities),
        ("2 oracle equivalence", oracle_equivalence),
        ("3 isometry and orthogonality", isometry_orthogonality),
        ("4 bound slope reproduction", slope_reproduction),
        ("5 deviation kernel decay", deviation_kernel),
        ("6 empirical sandwich", empirical_sandwich),
        ("7 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, msg) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} [{:.1}s] {msg}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

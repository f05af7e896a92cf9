//! Moment algebra of multiple Wiener-Itô integrals `I_p(f)` with kernels on
//! a finite orthonormal system of ℋ (whitened coordinates).
//!
//! Exact moments are obtained symbolically from the product formula and the
//! isometry `E[I_p(f) I_p(g)] = p! ⟨f̃, g̃⟩`. The pathwise samplers use the
//! Hermite product representation: for an orthonormal basis `e_1..e_d` and
//! `W_i = W(e_i)`, `I_p(e_{a_1} ⊗ ... ⊗ e_{a_p}) = Π_i H_{m_i(a)}(W_i)` where
//! `m_i(a)` counts the occurrences of `i` in `a`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hermite::hermite_table;
use crate::tensor::{contract, increment, kernel_inner, BasisMode, Kernel};

/// Largest `d^p` accepted by the pathwise samplers.
pub const SAMPLER_CAP: usize = 1_000_000;

/// Tolerance (relative to the kernel norm) of the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Chaos decomposition `F = Σ_p I_p(f_p)` with symmetric whitened kernels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChaosExpansion {
    terms: BTreeMap<usize, Kernel>,
}

impl ChaosExpansion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = Kernel>>(terms: I) -> Result<Self> {
        let mut e = Self::new();
        for k in terms {
            e.insert(k)?;
        }
        Ok(e)
    }

    /// Adds `I_p(f)` with `p = f.order()`, merging with an existing term of
    /// the same order.
    pub fn insert(&mut self, f: Kernel) -> Result<()> {
        if f.mode() != BasisMode::Whitened {
            return Err(Error::NotWhitened);
        }
        if !f.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::KernelNotSymmetric);
        }
        if let Some(first) = self.terms.values().next() {
            if first.h_dim() != f.h_dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.h_dim(),
                    found: f.h_dim(),
                });
            }
            if first.k_dims() != f.k_dims() {
                return Err(Error::ShapeMismatch {
                    left: first.k_dims().to_vec(),
                    right: f.k_dims().to_vec(),
                });
            }
        }
        let p = f.order();
        let merged = match self.terms.remove(&p) {
            Some(existing) => existing.add(&f)?,
            None => f,
        };
        self.terms.insert(p, merged);
        Ok(())
    }

    pub fn term(&self, p: usize) -> Option<&Kernel> {
        self.terms.get(&p)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Kernel)> {
        self.terms.iter().map(|(p, k)| (*p, k))
    }

    pub fn orders(&self) -> Vec<usize> {
        self.terms.keys().copied().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn h_dim(&self) -> Option<usize> {
        self.terms.values().next().map(Kernel::h_dim)
    }

    pub fn k_dims(&self) -> Option<&[usize]> {
        self.terms.values().next().map(Kernel::k_dims)
    }

    /// `E F` (the order-0 term) for a scalar expansion.
    pub fn mean(&self) -> f64 {
        self.terms.get(&0).map_or(0.0, |k| k.coords()[0])
    }

    /// `E[F G] = Σ_p p! ⟨f_p, g_p⟩` for scalar expansions.
    pub fn expect_product(&self, other: &Self) -> Result<f64> {
        let mut acc = 0.0;
        for (p, f) in self.terms() {
            if let Some(g) = other.term(p) {
                acc += factorial(p) * kernel_inner(f, g)?;
            }
        }
        Ok(acc)
    }

    /// Pathwise value of `F` at `W = (W(e_1), ..., W(e_d))`.
    pub fn sample(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut out: Option<Vec<f64>> = None;
        for (p, f) in self.terms() {
            let v = sample_multiple_integral(f, p, w)?;
            match out.as_mut() {
                Some(acc) => acc.iter_mut().zip(&v).for_each(|(a, b)| *a += b),
                None => out = Some(v),
            }
        }
        Ok(out.unwrap_or_default())
    }
}

fn check_order(f: &Kernel, p: usize) -> Result<()> {
    if f.order() != p {
        return Err(Error::OrderMismatch(f.order(), p));
    }
    Ok(())
}

fn check_scalar(f: &Kernel) -> Result<()> {
    if !f.is_scalar() {
        return Err(Error::VectorValued);
    }
    Ok(())
}

/// `E‖I_p(f)‖² = p! ‖f̃‖²` (K-norm included for K-valued kernels).
pub fn second_moment(f: &Kernel, p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidOrder(0));
    }
    check_order(f, p)?;
    if f.mode() != BasisMode::Whitened {
        return Err(Error::NotWhitened);
    }
    let s = f.symmetrize();
    Ok(factorial(p) * kernel_inner(&s, &s)?)
}

/// Product formula: `I_p(f) I_q(g) = Σ_r r! C(p,r) C(q,r) I_{p+q-2r}(f ⊗̃_r g)`.
pub fn product_formula(f: &Kernel, p: usize, g: &Kernel, q: usize) -> Result<ChaosExpansion> {
    check_order(f, p)?;
    check_order(g, q)?;
    check_scalar(f)?;
    check_scalar(g)?;
    let mut out = ChaosExpansion::new();
    for r in 0..=p.min(q) {
        let c = factorial(r) * binomial(p, r) * binomial(q, r);
        let term = contract(f, g, r)?.symmetrize().scaled(c);
        out.insert(term)?;
    }
    Ok(out)
}

/// `E(I_p(f_u)² I_p(f_v)²)` computed exactly from two product expansions.
pub fn exact_cross_fourth_moment(fu: &Kernel, fv: &Kernel, p: usize) -> Result<f64> {
    let uu = product_formula(fu, p, fu, p)?;
    let vv = product_formula(fv, p, fv, p)?;
    uu.expect_product(&vv)
}

/// `E(F_u² F_v²) − E(F_u²) E(F_v²) − 2 E(F_u F_v)²` for `F = I_p(f)`, via the
/// contraction identity; non-negative for every pair of kernels.
pub fn fourth_moment_gap(fu: &Kernel, fv: &Kernel, p: usize) -> Result<f64> {
    check_order(fu, p)?;
    check_order(fv, p)?;
    check_scalar(fu)?;
    check_scalar(fv)?;
    let pf = factorial(p);
    let mut acc = 0.0;
    for r in 1..p {
        let c = contract(fu, fv, r)?;
        let cs = c.symmetrize();
        let a = factorial(r) * binomial(p, r) * binomial(p, r);
        let sym = a * a * factorial(2 * p - 2 * r) * kernel_inner(&cs, &cs)?;
        let raw = pf * pf * binomial(p, r) * binomial(p, r) * kernel_inner(&c, &c)?;
        acc += sym + raw;
    }
    Ok(acc)
}

/// Coefficient of `‖f ⊗̃_r g‖²` in `Var⟨DI_p(f), −DL⁻¹I_q(g)⟩`:
/// `p² ((r−1)! C(p−1,r−1) C(q−1,r−1))² (p+q−2r)!`.
pub fn gamma_variance_coefficient(p: usize, q: usize, r: usize) -> f64 {
    debug_assert!(r >= 1 && r <= p.min(q));
    let base = factorial(r - 1) * binomial(p - 1, r - 1) * binomial(q - 1, r - 1);
    (p * p) as f64 * base * base * factorial(p + q - 2 * r)
}

/// Largest `r` contributing a non-constant chaos to `⟨DI_p(f), −DL⁻¹I_q(g)⟩`.
pub fn gamma_r_max(p: usize, q: usize) -> usize {
    if p == q {
        p - 1
    } else {
        p.min(q)
    }
}

/// `Var⟨DI_p(f), −DL⁻¹I_q(g)⟩_ℋ` for scalar kernels.
///
/// The order of the first argument carries the `p²` factor, consistent with
/// [`sample_gamma_pair`]; the expression is not symmetric in `(p, q)`.
pub fn gamma_variance(f: &Kernel, p: usize, g: &Kernel, q: usize) -> Result<f64> {
    check_order(f, p)?;
    check_order(g, q)?;
    check_scalar(f)?;
    check_scalar(g)?;
    if p == 0 || q == 0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for r in 1..=gamma_r_max(p, q) {
        let c = contract(f, g, r)?.symmetrize();
        acc += gamma_variance_coefficient(p, q, r) * kernel_inner(&c, &c)?;
    }
    Ok(acc)
}

fn check_sampler(f: &Kernel, p: usize, w: &[f64]) -> Result<usize> {
    check_order(f, p)?;
    if f.mode() != BasisMode::Whitened {
        return Err(Error::NotWhitened);
    }
    if w.len() != f.h_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.h_dim(),
            found: w.len(),
        });
    }
    let size = f.h_len();
    if size > SAMPLER_CAP {
        return Err(Error::TooLarge {
            size,
            cap: SAMPLER_CAP,
        });
    }
    Ok(size)
}

/// `table[i * (p+1) + m] = H_m(W_i)`.
fn hermite_tables(w: &[f64], p: usize) -> Vec<f64> {
    let mut table = vec![0.0; w.len() * (p + 1)];
    for (i, &x) in w.iter().enumerate() {
        hermite_table(x, &mut table[i * (p + 1)..(i + 1) * (p + 1)]);
    }
    table
}

/// Pathwise `I_p(f)` at `W`: `Σ_a f_a Π_i H_{m_i(a)}(W_i)`. Returns one value
/// per K coordinate (a single value for scalar kernels).
pub fn sample_multiple_integral(f: &Kernel, p: usize, w: &[f64]) -> Result<Vec<f64>> {
    let size = check_sampler(f, p, w)?;
    let k_len = f.k_len();
    let d = f.h_dim();
    let table = hermite_tables(w, p);
    let shape = vec![d; p];
    let mut idx = vec![0usize; p];
    let mut counts = vec![0usize; d];
    let mut out = vec![0.0; k_len];
    for a in 0..size {
        counts.iter_mut().for_each(|c| *c = 0);
        idx.iter().for_each(|&i| counts[i] += 1);
        let mut prod = 1.0;
        for &i in &idx {
            if counts[i] > 0 {
                prod *= table[i * (p + 1) + counts[i]];
                counts[i] = 0;
            }
        }
        if prod != 0.0 {
            let fa = &f.coords()[a * k_len..(a + 1) * k_len];
            out.iter_mut().zip(fa).for_each(|(o, x)| *o += prod * x);
        }
        increment(&mut idx, &shape);
    }
    Ok(out)
}

/// Gradient `∂_k P_f(W)` of the Hermite-product polynomial of a scalar kernel.
fn hermite_gradient(f: &Kernel, p: usize, w: &[f64]) -> Result<Vec<f64>> {
    let size = check_sampler(f, p, w)?;
    check_scalar(f)?;
    let d = f.h_dim();
    let table = hermite_tables(w, p);
    let h = |i: usize, m: usize| table[i * (p + 1) + m];
    let shape = vec![d; p];
    let mut idx = vec![0usize; p];
    let mut counts = vec![0usize; d];
    let mut distinct: Vec<usize> = Vec::with_capacity(p);
    let mut grad = vec![0.0; d];
    for a in 0..size {
        let fa = f.coords()[a];
        if fa != 0.0 {
            counts.iter_mut().for_each(|c| *c = 0);
            distinct.clear();
            for &i in &idx {
                if counts[i] == 0 {
                    distinct.push(i);
                }
                counts[i] += 1;
            }
            for &k in &distinct {
                let mut term = counts[k] as f64 * h(k, counts[k] - 1);
                for &j in &distinct {
                    if j != k {
                        term *= h(j, counts[j]);
                    }
                }
                grad[k] += fa * term;
            }
        }
        increment(&mut idx, &shape);
    }
    Ok(grad)
}

/// Pathwise `⟨DI_p(f), −DL⁻¹I_q(g)⟩_ℋ = (1/q) Σ_k ∂_k P_f(W) ∂_k P_g(W)`.
pub fn sample_gamma_pair(f: &Kernel, p: usize, g: &Kernel, q: usize, w: &[f64]) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidOrder(0));
    }
    let gf = hermite_gradient(f, p, w)?;
    let gg = hermite_gradient(g, q, w)?;
    Ok(gf.iter().zip(&gg).map(|(a, b)| a * b).sum::<f64>() / q as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_symmetric(rng: &mut ChaCha8Rng, p: usize, d: usize) -> Kernel {
        Kernel::from_fn(p, d, vec![], BasisMode::Whitened, |_| rng.random_range(-1.0..1.0))
            .symmetrize()
    }

    fn normals(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Mean and standard error.
    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn combinatorics() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(5), 120.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(second_moment(&Kernel::basis_tensor(1, &[0]), 1), Ok(1.0));
        assert_abs_diff_eq!(second_moment(&Kernel::basis_tensor(1, &[0, 0]), 2).unwrap(), 2.0);
        assert_abs_diff_eq!(second_moment(&Kernel::basis_tensor(2, &[0, 1]), 2).unwrap(), 1.0);
        assert_eq!(
            second_moment(&Kernel::basis_tensor(1, &[0]), 0),
            Err(Error::InvalidOrder(0))
        );
    }

    #[test]
    fn product_formula_examples() {
        let e1 = Kernel::basis_tensor(2, &[0]);
        let e2 = Kernel::basis_tensor(2, &[1]);
        let pr = product_formula(&e1, 1, &e1, 1).unwrap();
        assert_eq!(pr.term(2), Some(&Kernel::basis_tensor(2, &[0, 0])));
        assert_eq!(pr.mean(), 1.0);

        let pr = product_formula(&e1, 1, &e2, 1).unwrap();
        assert_eq!(pr.term(2), Some(&Kernel::basis_tensor(2, &[0, 1]).symmetrize()));
        assert_eq!(pr.mean(), 0.0);

        let e11 = Kernel::basis_tensor(1, &[0, 0]);
        let e1 = Kernel::basis_tensor(1, &[0]);
        let pr = product_formula(&e11, 2, &e1, 1).unwrap();
        assert_eq!(pr.term(3).unwrap().coords(), &[1.0]);
        assert_eq!(pr.term(1).unwrap().coords(), &[2.0]);
        assert_eq!(pr.orders(), vec![1, 3]);
    }

    #[test]
    fn product_formula_rejects_k_valued() {
        let f = Kernel::basis_tensor(2, &[0]).with_k_vector(&[1.0, 0.0]).unwrap();
        assert_eq!(product_formula(&f, 1, &f, 1), Err(Error::VectorValued));
    }

    #[test]
    fn product_formula_holds_pathwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for p in 1..=3 {
            for q in 1..=3 {
                let f = random_symmetric(&mut rng, p, 3);
                let g = random_symmetric(&mut rng, q, 3);
                let pr = product_formula(&f, p, &g, q).unwrap();
                for _ in 0..20 {
                    let w = normals(&mut rng, 3);
                    let lhs = sample_multiple_integral(&f, p, &w).unwrap()[0]
                        * sample_multiple_integral(&g, q, &w).unwrap()[0];
                    let rhs = pr.sample(&w).unwrap()[0];
                    assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn fourth_moment_gap_examples() {
        let e1 = Kernel::basis_tensor(2, &[0]);
        let e2 = Kernel::basis_tensor(2, &[1]);
        assert_eq!(fourth_moment_gap(&e1, &e2, 1), Ok(0.0));
        let e11 = Kernel::basis_tensor(2, &[0, 0]);
        let e22 = Kernel::basis_tensor(2, &[1, 1]);
        assert_abs_diff_eq!(fourth_moment_gap(&e11, &e11, 2).unwrap(), 48.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fourth_moment_gap(&e11, &e22, 2).unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(fourth_moment_gap(&e11, &e1, 2), Err(Error::OrderMismatch(1, 2)));
    }

    #[test]
    fn fourth_moment_gap_matches_exact_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in 1..=3 {
            for d in 1..=3 {
                let fu = random_symmetric(&mut rng, p, d);
                let fv = random_symmetric(&mut rng, p, d);
                let m22 = exact_cross_fourth_moment(&fu, &fv, p).unwrap();
                let uu = second_moment(&fu, p).unwrap();
                let vv = second_moment(&fv, p).unwrap();
                let uv = factorial(p) * kernel_inner(&fu, &fv).unwrap();
                let direct = m22 - uu * vv - 2.0 * uv * uv;
                let gap = fourth_moment_gap(&fu, &fv, p).unwrap();
                assert!((gap - direct).abs() < 1e-9 * (1.0 + m22.abs()), "p={p} d={d}");
                assert!(gap >= 0.0);
            }
        }
    }

    #[test]
    fn gamma_variance_examples() {
        let e1 = Kernel::basis_tensor(1, &[0]);
        let e11 = Kernel::basis_tensor(1, &[0, 0]);
        assert_eq!(gamma_variance(&e1, 1, &e1, 1), Ok(0.0));
        assert_abs_diff_eq!(gamma_variance(&e11, 2, &e11, 2).unwrap(), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_variance(&e11, 2, &e1, 1).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn sampler_examples() {
        let e1 = Kernel::basis_tensor(1, &[0]);
        assert_eq!(sample_multiple_integral(&e1, 1, &[0.7]).unwrap(), vec![0.7]);
        let e11 = Kernel::basis_tensor(1, &[0, 0]);
        assert_abs_diff_eq!(sample_multiple_integral(&e11, 2, &[1.5]).unwrap()[0], 1.25);
        let e12 = Kernel::basis_tensor(2, &[0, 1]).symmetrize();
        assert_abs_diff_eq!(sample_multiple_integral(&e12, 2, &[0.3, -2.0]).unwrap()[0], -0.6);
        assert!(matches!(
            sample_multiple_integral(&e12, 2, &[0.3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampler_cap() {
        let big = Kernel::zeros(3, 101, vec![], BasisMode::Whitened);
        assert!(matches!(
            sample_multiple_integral(&big, 3, &vec![0.0; 101]),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn gamma_pair_examples() {
        let e1 = Kernel::basis_tensor(1, &[0]);
        assert_eq!(sample_gamma_pair(&e1, 1, &e1, 1, &[3.3]), Ok(1.0));
        let e11 = Kernel::basis_tensor(1, &[0, 0]);
        assert_abs_diff_eq!(sample_gamma_pair(&e11, 2, &e11, 2, &[1.5]).unwrap(), 4.5);
    }

    #[test]
    fn gamma_pair_mean_matches_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = random_symmetric(&mut rng, 2, 3);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let w = normals(&mut rng, 3);
                sample_gamma_pair(&f, 2, &f, 2, &w).unwrap()
            })
            .collect();
        let (m, se) = mean_se(&xs);
        let target = second_moment(&f, 2).unwrap();
        assert!((m - target).abs() < 3.0 * se, "{m} vs {target} (se {se})");
    }

    #[test]
    fn expansion_rejects_non_symmetric() {
        let f = Kernel::basis_tensor(2, &[0, 1]);
        assert_eq!(ChaosExpansion::from_terms([f]), Err(Error::KernelNotSymmetric));
    }

    #[test]
    fn expansion_merges_equal_orders() {
        let a = Kernel::basis_tensor(2, &[0]);
        let b = Kernel::basis_tensor(2, &[1]);
        let e = ChaosExpansion::from_terms([a, b]).unwrap();
        assert_eq!(e.term(1).unwrap().coords(), &[1.0, 1.0]);
    }
}

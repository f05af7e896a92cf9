//! Dense kernels `f ∈ ℋ^{⊗p} ⊗ K^{⊗k}` over a finite basis of `ℋ`.
//!
//! Coordinates are stored row-major with the `p` ℋ-indices first and the
//! K-indices trailing. A kernel is either in *raw* coordinates (with respect
//! to a possibly non-orthonormal basis whose Gram matrix is carried by a
//! [`GramBasis`]) or in *whitened* coordinates, where every ℋ inner product
//! is Euclidean. Contractions and norms are only defined on whitened kernels.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods come from libm when std is absent
use num_traits::Float;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative band below zero in which Gram eigenvalues are clipped.
pub const GRAM_CLIP_BAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    Raw,
    Whitened,
}

/// Gram matrix `G_{ij} = ⟨b_i, b_j⟩_ℋ` with a factor `L` such that `G ≈ L Lᵀ`.
#[derive(Debug, Clone)]
pub struct GramBasis {
    gram: DMatrix<f64>,
    factor: DMatrix<f64>,
    rank: usize,
}

impl GramBasis {
    /// Factorizes a symmetric Gram matrix by eigendecomposition. Eigenvalues
    /// in `[-1e-10·tr(G)/d, 0)` are clipped to zero; anything lower is an error.
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        let d = gram.nrows();
        if d == 0 || gram.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: gram.ncols(),
            });
        }
        let scale = 1.0 + gram.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for i in 0..d {
            for j in 0..i {
                if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let threshold = -GRAM_CLIP_BAND * gram.trace().abs() / d as f64;
        let eig = SymmetricEigen::new(gram.clone());
        let mut rank = 0;
        let mut roots = Vec::with_capacity(d);
        for &lambda in eig.eigenvalues.iter() {
            if lambda < threshold {
                return Err(Error::NotPositiveSemidefinite {
                    eigenvalue: lambda,
                    threshold,
                });
            }
            if lambda > 0.0 {
                rank += 1;
            }
            roots.push(lambda.max(0.0).sqrt());
        }
        let mut factor = eig.eigenvectors;
        for (j, r) in roots.iter().enumerate() {
            factor.column_mut(j).scale_mut(*r);
        }
        Ok(Self { gram, factor, rank })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            gram: DMatrix::identity(dim, dim),
            factor: DMatrix::identity(dim, dim),
            rank: dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Number of strictly positive eigenvalues after clipping.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `L Lᵀ`, the Gram matrix after eigenvalue clipping.
    pub fn regularized(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }
}

/// Gram matrix of the indicator basis with `G_{ij} = ρ(i - j)`.
pub fn gram_from_cov<F: Fn(i64) -> f64>(rho: F, dim: usize) -> Result<GramBasis> {
    if rho(0) <= 0.0 {
        return Err(Error::OutOfRange("rho(0) must be positive"));
    }
    let gram = DMatrix::from_fn(dim, dim, |i, j| rho(i as i64 - j as i64));
    GramBasis::new(gram)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    order: usize,
    h_dim: usize,
    k_dims: Vec<usize>,
    coords: Vec<f64>,
    mode: BasisMode,
}

impl Kernel {
    pub fn new(
        order: usize,
        h_dim: usize,
        k_dims: Vec<usize>,
        coords: Vec<f64>,
        mode: BasisMode,
    ) -> Result<Self> {
        if h_dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let expected = h_dim.pow(order as u32) * k_dims.iter().product::<usize>();
        if coords.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coords.len(),
            });
        }
        Ok(Self {
            order,
            h_dim,
            k_dims,
            coords,
            mode,
        })
    }

    pub fn zeros(order: usize, h_dim: usize, k_dims: Vec<usize>, mode: BasisMode) -> Self {
        let len = h_dim.pow(order as u32) * k_dims.iter().product::<usize>();
        Self {
            order,
            h_dim,
            k_dims,
            coords: vec![0.0; len],
            mode,
        }
    }

    /// Scalar-valued whitened kernel.
    pub fn scalar(order: usize, h_dim: usize, coords: Vec<f64>) -> Result<Self> {
        Self::new(order, h_dim, Vec::new(), coords, BasisMode::Whitened)
    }

    /// Whitened kernel with one trailing K index of dimension `k_dim`.
    pub fn k_valued(order: usize, h_dim: usize, k_dim: usize, coords: Vec<f64>) -> Result<Self> {
        Self::new(order, h_dim, vec![k_dim], coords, BasisMode::Whitened)
    }

    /// Elementary tensor `e_{i_1} ⊗ ... ⊗ e_{i_p}` (0-based indices), whitened.
    pub fn basis_tensor(h_dim: usize, indices: &[usize]) -> Self {
        let mut k = Self::zeros(indices.len(), h_dim, Vec::new(), BasisMode::Whitened);
        let off = k.h_offset(indices);
        k.coords[off] = 1.0;
        k
    }

    /// Builds a kernel from a function of the full index (ℋ indices, then K indices).
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(
        order: usize,
        h_dim: usize,
        k_dims: Vec<usize>,
        mode: BasisMode,
        mut f: F,
    ) -> Self {
        let mut k = Self::zeros(order, h_dim, k_dims, mode);
        let shape = k.shape();
        let mut idx = vec![0usize; shape.len()];
        for c in k.coords.iter_mut() {
            *c = f(&idx);
            increment(&mut idx, &shape);
        }
        k
    }

    /// `f ⊗ v`: attaches a K-vector as a trailing index to a scalar kernel.
    pub fn with_k_vector(&self, v: &[f64]) -> Result<Self> {
        if !self.k_dims.is_empty() {
            return Err(Error::VectorValued);
        }
        let mut coords = Vec::with_capacity(self.coords.len() * v.len());
        for c in &self.coords {
            coords.extend(v.iter().map(|x| c * x));
        }
        Self::new(self.order, self.h_dim, vec![v.len()], coords, self.mode)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn k_dims(&self) -> &[usize] {
        &self.k_dims
    }

    pub fn is_scalar(&self) -> bool {
        self.k_dims.is_empty()
    }

    /// Product of the K dimensions (1 for scalar kernels).
    pub fn k_len(&self) -> usize {
        self.k_dims.iter().product()
    }

    pub fn h_len(&self) -> usize {
        self.h_dim.pow(self.order as u32)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.h_dim; self.order];
        s.extend_from_slice(&self.k_dims);
        s
    }

    fn h_offset(&self, h_idx: &[usize]) -> usize {
        h_idx.iter().fold(0, |acc, &i| acc * self.h_dim + i)
    }

    /// Entry at a full index (ℋ indices followed by K indices).
    pub fn get(&self, idx: &[usize]) -> f64 {
        let shape = self.shape();
        debug_assert_eq!(idx.len(), shape.len());
        let off = idx.iter().zip(&shape).fold(0, |acc, (&i, &n)| acc * n + i);
        self.coords[off]
    }

    /// Scalar kernel obtained by fixing the (single) K index at `i`.
    pub fn k_component(&self, i: usize) -> Result<Self> {
        if self.k_dims.len() != 1 {
            return Err(Error::ShapeMismatch {
                left: self.k_dims.clone(),
                right: vec![1],
            });
        }
        let m = self.k_dims[0];
        let coords = self.coords.iter().skip(i).step_by(m).copied().collect();
        Self::new(self.order, self.h_dim, Vec::new(), coords, self.mode)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut k = self.clone();
        k.coords.iter_mut().for_each(|c| *c *= factor);
        k
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut k = self.clone();
        k.coords
            .iter_mut()
            .zip(&other.coords)
            .for_each(|(a, b)| *a += b);
        Ok(k)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.mode != other.mode {
            return Err(Error::BasisModeMismatch);
        }
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    /// Permutes the ℋ axes: axis `a` of the result is axis `perm[a]` of `self`.
    pub fn permute_h(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.order);
        let k_len = self.k_len();
        let mut out = Self::zeros(self.order, self.h_dim, self.k_dims.clone(), self.mode);
        let h_shape = vec![self.h_dim; self.order];
        let mut idx = vec![0usize; self.order];
        let mut src = vec![0usize; self.order];
        for block in 0..self.h_len() {
            for (a, &p) in perm.iter().enumerate() {
                src[p] = idx[a];
            }
            let s = self.h_offset(&src) * k_len;
            out.coords[block * k_len..(block + 1) * k_len]
                .copy_from_slice(&self.coords[s..s + k_len]);
            increment(&mut idx, &h_shape);
        }
        out
    }

    /// Average over all `p!` permutations of the ℋ indices; K indices untouched.
    pub fn symmetrize(&self) -> Self {
        if self.order <= 1 {
            return self.clone();
        }
        let perms = permutations(self.order);
        let mut out = Self::zeros(self.order, self.h_dim, self.k_dims.clone(), self.mode);
        for perm in &perms {
            let p = self.permute_h(perm);
            out.coords
                .iter_mut()
                .zip(&p.coords)
                .for_each(|(a, b)| *a += b);
        }
        let w = 1.0 / perms.len() as f64;
        out.coords.iter_mut().for_each(|c| *c *= w);
        out
    }

    /// Checks invariance under every adjacent transposition of ℋ axes
    /// (these generate the symmetric group).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.order <= 1 {
            return true;
        }
        let scale = tol * (1.0 + self.norm_unchecked());
        (0..self.order - 1).all(|a| {
            let mut perm: Vec<usize> = (0..self.order).collect();
            perm.swap(a, a + 1);
            let p = self.permute_h(&perm);
            p.coords
                .iter()
                .zip(&self.coords)
                .all(|(x, y)| (x - y).abs() <= scale)
        })
    }

    fn norm_unchecked(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Euclidean norm of the coordinates.
    pub fn norm(&self) -> f64 {
        self.norm_unchecked()
    }

    /// Converts raw coordinates to whitened ones by applying `Lᵀ` along every
    /// ℋ index, so that Euclidean inner products equal Gram-weighted ones.
    pub fn whiten(&self, basis: &GramBasis) -> Result<Self> {
        if self.mode != BasisMode::Raw {
            return Err(Error::BasisModeMismatch);
        }
        if basis.dim() != self.h_dim {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: self.h_dim,
            });
        }
        let lt = basis.factor().transpose();
        let mut coords = self.coords.clone();
        let k_len = self.k_len();
        let d = self.h_dim;
        let mut scratch = vec![0.0; d];
        for axis in 0..self.order {
            // entries along `axis` are `stride` apart
            let stride = d.pow((self.order - 1 - axis) as u32) * k_len;
            let outer = coords.len() / (stride * d);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * stride * d + inner;
                    for (a, s) in scratch.iter_mut().enumerate() {
                        *s = (0..d).map(|b| lt[(a, b)] * coords[base + b * stride]).sum();
                    }
                    for (a, s) in scratch.iter().enumerate() {
                        coords[base + a * stride] = *s;
                    }
                }
            }
        }
        Self::new(
            self.order,
            self.h_dim,
            self.k_dims.clone(),
            coords,
            BasisMode::Whitened,
        )
    }

    /// Gram-weighted inner product of two raw kernels, by direct summation.
    pub fn gram_inner(&self, other: &Self, basis: &GramBasis) -> Result<f64> {
        self.check_same_shape(other)?;
        if self.mode != BasisMode::Raw {
            return Err(Error::BasisModeMismatch);
        }
        let g = basis.gram();
        let k_len = self.k_len();
        let h_shape = vec![self.h_dim; self.order];
        let mut a = vec![0usize; self.order];
        let mut acc = 0.0;
        for ia in 0..self.h_len() {
            let mut b = vec![0usize; self.order];
            for ib in 0..self.h_len() {
                let w: f64 = a.iter().zip(&b).map(|(&x, &y)| g[(x, y)]).product();
                if w != 0.0 {
                    let fa = &self.coords[ia * k_len..(ia + 1) * k_len];
                    let gb = &other.coords[ib * k_len..(ib + 1) * k_len];
                    acc += w * fa.iter().zip(gb).map(|(x, y)| x * y).sum::<f64>();
                }
                increment(&mut b, &h_shape);
            }
            increment(&mut a, &h_shape);
        }
        Ok(acc)
    }
}

/// r-th contraction: sums the last `r` ℋ indices of `f` against the first
/// `r` of `g`. The result has ℋ-order `p + q - 2r` (remaining indices of `f`
/// then of `g`) followed by the K indices of `f` and then of `g`.
pub fn contract(f: &Kernel, g: &Kernel, r: usize) -> Result<Kernel> {
    if f.mode != BasisMode::Whitened || g.mode != BasisMode::Whitened {
        return Err(Error::NotWhitened);
    }
    if f.h_dim != g.h_dim {
        return Err(Error::DimensionMismatch {
            expected: f.h_dim,
            found: g.h_dim,
        });
    }
    let max = f.order.min(g.order);
    if r > max {
        return Err(Error::ContractionOutOfRange { r, max });
    }
    let d = f.h_dim;
    let left = d.pow((f.order - r) as u32);
    let mid = d.pow(r as u32);
    let right = d.pow((g.order - r) as u32);
    let kf = f.k_len();
    let kg = g.k_len();

    // f as (left·kf) × mid, g as mid × (right·kg)
    let fm = DMatrix::from_fn(left * kf, mid, |row, c| {
        let (l, k) = (row / kf, row % kf);
        f.coords[(l * mid + c) * kf + k]
    });
    let gm = DMatrix::from_fn(mid, right * kg, |c, col| {
        let (rr, k) = (col / kg, col % kg);
        g.coords[(c * right + rr) * kg + k]
    });
    let prod = fm * gm;

    let mut k_dims = f.k_dims.clone();
    k_dims.extend_from_slice(&g.k_dims);
    let mut coords = vec![0.0; left * right * kf * kg];
    for l in 0..left {
        for rr in 0..right {
            let base = (l * right + rr) * kf * kg;
            for a in 0..kf {
                for b in 0..kg {
                    coords[base + a * kg + b] = prod[(l * kf + a, rr * kg + b)];
                }
            }
        }
    }
    Kernel::new(
        f.order + g.order - 2 * r,
        d,
        k_dims,
        coords,
        BasisMode::Whitened,
    )
}

/// Euclidean inner product of two whitened kernels of identical shape.
pub fn kernel_inner(f: &Kernel, g: &Kernel) -> Result<f64> {
    f.check_same_shape(g)?;
    if f.mode != BasisMode::Whitened {
        return Err(Error::NotWhitened);
    }
    Ok(f.coords.iter().zip(&g.coords).map(|(a, b)| a * b).sum())
}

/// Odometer increment of a multi-index in row-major order.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for pos in (0..idx.len()).rev() {
        idx[pos] += 1;
        if idx[pos] < shape[pos] {
            return;
        }
        idx[pos] = 0;
    }
}

/// All permutations of `0..n` (Heap's algorithm).
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut out = vec![a.clone()];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

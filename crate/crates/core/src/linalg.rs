//! Dense complex linear algebra shared by every module: Kronecker products,
//! vectorisation under the trace inner product, SVD nullspaces, Hermitian
//! eigendecompositions with eigenvalue clustering, and orthonormal subspaces
//! of vectorised matrices.

use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Mat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(2πi·x)`.
pub fn phase(x: f64) -> Complex64 {
    let t = 2.0 * core::f64::consts::PI * x;
    c(libm::cos(t), libm::sin(t))
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn zeros(n: usize) -> Mat {
    Mat::zeros(n, n)
}

/// Matrix unit `|i⟩⟨j|` in dimension `n`.
pub fn unit(n: usize, i: usize, j: usize) -> Mat {
    let mut m = zeros(n);
    m[(i, j)] = ONE;
    m
}

pub fn diag(entries: &[Complex64]) -> Mat {
    Mat::from_diagonal(&CVec::from_column_slice(entries))
}

pub fn real_diag(entries: &[f64]) -> Mat {
    Mat::from_diagonal(&CVec::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0))))
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[&Mat]) -> Mat {
    let mut out = Mat::identity(1, 1);
    for f in factors {
        out = out.kronecker(*f);
    }
    out
}

pub fn dagger(a: &Mat) -> Mat {
    a.adjoint()
}

pub fn frob(a: &Mat) -> f64 {
    a.norm()
}

/// Frobenius distance `‖a − b‖`.
pub fn dist(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm()
}

pub fn trace(a: &Mat) -> Complex64 {
    a.trace()
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub fn hermitian_part(a: &Mat) -> Mat {
    (a + a.adjoint()).scale(0.5)
}

/// `(a − a†)/2i`, so that `a = herm(a) + i·skew_hermitian_part(a)`.
pub fn skew_hermitian_part(a: &Mat) -> Mat {
    (a - a.adjoint()) * c(0.0, -0.5)
}

pub fn is_hermitian(a: &Mat, tol: f64) -> bool {
    a.is_square() && dist(a, &a.adjoint()) <= tol * a.norm().max(1.0)
}

pub fn unitarity_residual(u: &Mat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    dist(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn is_unitary(u: &Mat, tol: f64) -> bool {
    unitarity_residual(u) <= tol * (u.nrows().max(1) as f64)
}

/// Column-major vectorisation; `vec(x)†vec(y) = Tr(x†y)`.
pub fn vectorize(a: &Mat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &[Complex64], d: usize) -> Mat {
    Mat::from_column_slice(d, d, v)
}

/// Trace inner product `Tr(a†b)`.
pub fn inner(a: &Mat, b: &Mat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest singular value.
pub fn op_norm(a: &Mat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Thin SVD `m = U·diag(s)·V†`, returned as `(U, s, V)` with `s` descending.
///
/// The bidiagonal SVD occasionally returns inaccurate singular vectors on
/// exactly rank-deficient input, so every factorisation is checked against
/// `m` and retried on the adjoint and on randomly rotated copies.
pub fn svd(m: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (Mat::zeros(rows, 0), Vec::new(), Mat::zeros(cols, 0));
    }
    let scale = m.norm();
    let accept = 1e-12 * (rows.max(cols) as f64) * scale.max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, (Mat, Vec<f64>, Mat))> = None;
    let mut consider = |res: f64, f: (Mat, Vec<f64>, Mat)| {
        if best.as_ref().map_or(true, |(r, _)| res < *r) {
            best = Some((res, f));
        }
    };
    let (res, f) = svd_attempt(m);
    if res <= accept {
        return f;
    }
    consider(res, f);
    let (res, (u, s, v)) = svd_attempt(&m.adjoint());
    if res <= accept {
        return (v, s, u);
    }
    consider(res, (v, s, u));
    let mut r = rng(0x5eed, (rows * 131 + cols) as u64);
    for _ in 0..16 {
        // m·Q has the same left factor and singular values; V = Q·V'.
        let q = random_matrix(&mut r, cols).qr().q();
        let (res, (u, s, v)) = svd_attempt(&(m * &q));
        let f = (u, s, &q * v);
        let res = residual_of(m, &f).max(res);
        if res <= accept {
            return f;
        }
        consider(res, f);
    }
    best.expect("at least one attempt").1
}

fn svd_attempt(m: &Mat) -> (f64, (Mat, Vec<f64>, Mat)) {
    let svd = m.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u0 = svd.u.expect("u requested");
    let v0 = svd.v_t.expect("v_t requested").adjoint();
    let mut u = Mat::zeros(u0.nrows(), order.len());
    let mut v = Mat::zeros(v0.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        u.set_column(k, &u0.column(i));
        v.set_column(k, &v0.column(i));
    }
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let f = (u, s, v);
    (residual_of(m, &f), f)
}

fn residual_of(m: &Mat, (u, s, v): &(Mat, Vec<f64>, Mat)) -> f64 {
    let k = s.len();
    let mut us = u.clone();
    for (j, &x) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(x);
    }
    let rec = (us * v.adjoint() - m).norm();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let ou = (u.adjoint() * u - identity(k)).norm() * scale;
    let ov = (v.adjoint() * v - identity(k)).norm() * scale;
    rec.max(ou).max(ov)
}

/// Nullspace of `m` as orthonormal columns. A singular value counts as zero
/// when it is at most `threshold`.
pub fn null_space(m: &Mat, threshold: f64) -> Mat {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Mat::zeros(0, 0);
    }
    if rows == 0 {
        return identity(cols);
    }
    let reduced;
    let work = if rows < cols {
        let mut p = Mat::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        reduced = p;
        &reduced
    } else if rows > cols {
        // Same right singular vectors, much smaller SVD.
        reduced = m.clone().qr().r();
        &reduced
    } else {
        m
    };
    let (_, s, v) = svd(work);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= threshold).collect();
    let mut out = Mat::zeros(cols, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &v.column(i));
    }
    out
}

/// Orthonormal basis (as columns) for the column span of `m`, rank decided
/// relative to the largest singular value.
pub fn orthonormal_span(m: &Mat, rel_tol: f64) -> Mat {
    let (rows, cols) = m.shape();
    if cols == 0 || rows == 0 {
        return Mat::zeros(rows, 0);
    }
    let (u, s, _) = if rows > cols {
        let qr = m.clone().qr();
        let (ur, s, v) = svd(&qr.r());
        (qr.q() * ur, s, v)
    } else {
        svd(m)
    };
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= f64::MIN_POSITIVE {
        return Mat::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > rel_tol * smax).collect();
    let mut out = Mat::zeros(rows, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &u.column(i));
    }
    out
}

/// Numerical rank relative to the largest singular value.
pub fn rank(m: &Mat, rel_tol: f64) -> usize {
    let (rows, cols) = m.shape();
    if cols == 0 || rows == 0 {
        return 0;
    }
    let s = if rows > cols { m.clone().qr().r().singular_values() } else { m.singular_values() };
    let smax = s.max();
    if smax <= f64::MIN_POSITIVE {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending
/// order and matching eigenvector columns.
pub fn hermitian_eigen(h: &Mat) -> (Vec<f64>, Mat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    let herm = hermitian_part(h);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Groups ascending eigenvalues into runs whose consecutive gaps are at most
/// `gap`.
pub fn cluster_sorted(values: &[f64], gap: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > gap {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

/// Smallest gap between consecutive sorted values that exceeds `gap`; used to
/// flag clusterings that sit too close to the tolerance.
pub fn smallest_separating_gap(values: &[f64], gap: f64) -> Option<f64> {
    values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > gap)
        .min_by(|a, b| a.total_cmp(b))
}

/// Projection onto the span of the given eigenvector columns.
pub fn projector_from_columns(vectors: &Mat, cols: Range<usize>) -> Mat {
    let block = vectors.columns(cols.start, cols.len());
    &block * block.adjoint()
}

/// `f(h)` for Hermitian `h` through its eigendecomposition.
pub fn hermitian_function(h: &Mat, f: impl Fn(f64) -> Complex64) -> Mat {
    let (values, vectors) = hermitian_eigen(h);
    let n = values.len();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let fj = f(values[j]);
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    scaled * vectors.adjoint()
}

/// `h^{it}` for a positive definite `h`.
pub fn positive_power_it(h: &Mat, t: f64) -> Mat {
    hermitian_function(h, |x| {
        let a = t * libm::log(x);
        c(libm::cos(a), libm::sin(a))
    })
}

pub fn positive_power(h: &Mat, p: f64) -> Mat {
    hermitian_function(h, |x| c(libm::pow(x.max(0.0), p), 0.0))
}

/// Embeds a two-factor operator acting on tensor factors `(i, j)` of a
/// multi-factor space with the given factor dimensions. The first tensor leg
/// of `op` goes to factor `i`, the second to factor `j`.
pub fn embed_two_legs(op: &Mat, dims: &[usize], i: usize, j: usize) -> Mat {
    assert!(i != j && i < dims.len() && j < dims.len());
    let (di, dj) = (dims[i], dims[j]);
    assert_eq!(op.nrows(), di * dj);
    let total: usize = dims.iter().product();
    let mut strides = alloc::vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut out = Mat::zeros(total, total);
    for col in 0..total {
        let ci = (col / strides[i]) % di;
        let cj = (col / strides[j]) % dj;
        let base = col - ci * strides[i] - cj * strides[j];
        let op_col = ci * dj + cj;
        for ri in 0..di {
            for rj in 0..dj {
                let v = op[(ri * dj + rj, op_col)];
                if v != ZERO {
                    out[(base + ri * strides[i] + rj * strides[j], col)] += v;
                }
            }
        }
    }
    out
}

/// Flip operator `σ(ξ⊗η) = η⊗ξ` from `ℂ^a⊗ℂ^b` to `ℂ^b⊗ℂ^a`.
pub fn flip(a: usize, b: usize) -> Mat {
    let mut out = Mat::zeros(a * b, a * b);
    for x in 0..a {
        for y in 0..b {
            out[(y * a + x, x * b + y)] = ONE;
        }
    }
    out
}

/// Block `(i, j)` of size `inner` in an operator on `ℂ^outer ⊗ ℂ^inner`
/// viewed with the *second* factor as block index: returns the operator on the
/// first factor `⟨·,i| X |·,j⟩`.
pub fn slot_block(x: &Mat, first: usize, second: usize, i: usize, j: usize) -> Mat {
    let mut out = Mat::zeros(first, first);
    for a in 0..first {
        for b in 0..first {
            out[(a, b)] = x[(a * second + i, b * second + j)];
        }
    }
    out
}

/// Inverse of [`slot_block`]: `Σ_{ij} blocks[i][j] ⊗ |i⟩⟨j|`.
pub fn assemble_slots(blocks: &[Vec<Mat>], first: usize) -> Mat {
    let second = blocks.len();
    let mut out = Mat::zeros(first * second, first * second);
    for (i, row) in blocks.iter().enumerate() {
        for (j, blk) in row.iter().enumerate() {
            for a in 0..first {
                for b in 0..first {
                    out[(a * second + i, b * second + j)] = blk[(a, b)];
                }
            }
        }
    }
    out
}

/// Partial trace over the second factor of `ℂ^first ⊗ ℂ^second`.
pub fn partial_trace_second(x: &Mat, first: usize, second: usize) -> Mat {
    let mut out = Mat::zeros(first, first);
    for k in 0..second {
        out += slot_block(x, first, second, k, k);
    }
    out
}

/// Deterministic RNG keyed by a seed and a per-call-site salt.
pub fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> Mat {
    Mat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> Mat {
    hermitian_part(&random_matrix(rng, n))
}

/// Random unit vector.
pub fn random_state_vector(rng: &mut impl Rng, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let norm = v.norm();
    v.unscale(norm)
}

/// Random full-rank density matrix with spectrum bounded away from zero.
pub fn random_faithful_density(rng: &mut impl Rng, n: usize) -> Mat {
    let a = random_matrix(rng, n);
    let mut rho = &a * a.adjoint() + identity(n).scale(0.2);
    let tr = rho.trace().re;
    rho.unscale_mut(tr);
    rho
}

/// Orthonormal basis of a subspace of `ℂ^n`, stored as columns.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    pub fn new_orthonormal(basis: Mat) -> Self {
        Self { basis }
    }

    pub fn zero(ambient: usize) -> Self {
        Self { basis: Mat::zeros(ambient, 0) }
    }

    pub fn from_spanning(vectors: &Mat, rel_tol: f64) -> Self {
        Self { basis: orthonormal_span(vectors, rel_tol) }
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn project(&self, v: &CVec) -> CVec {
        &self.basis * (self.basis.adjoint() * v)
    }

    /// `‖v − Pv‖`.
    pub fn residual(&self, v: &CVec) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Largest residual of the other subspace's basis vectors.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        if other.dim() == 0 {
            return 0.0;
        }
        let coeffs = self.basis.adjoint() * &other.basis;
        let diff = &other.basis - &self.basis * coeffs;
        (0..diff.ncols()).map(|j| diff.column(j).norm()).fold(0.0, f64::max)
    }

    /// Mutual containment residual; zero iff the subspaces coincide.
    pub fn equality_residual(&self, other: &Subspace) -> f64 {
        self.containment_residual(other).max(other.containment_residual(self))
    }

    pub fn equals(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.equality_residual(other) < tol
    }

    /// Intersection as the nullspace of `(1 − P_other) B_self` in the
    /// coordinates of `self`.
    pub fn intersect(&self, other: &Subspace, tol: f64) -> Subspace {
        if self.dim() == 0 {
            return self.clone();
        }
        let coeffs = other.basis.adjoint() * &self.basis;
        let outside = &self.basis - &other.basis * coeffs;
        let null = null_space(&outside, tol);
        Subspace { basis: &self.basis * null }
    }
}

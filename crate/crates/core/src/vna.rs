//! Matrix von Neumann algebras.
//!
//! An [`OperatorAlgebra`] is a unital `*`-closed subalgebra of `M_d(ℂ)`,
//! stored as an orthonormal basis of vectorised matrices under the trace
//! inner product `⟨x,y⟩ = Tr(x†y)`.
//!
//! Two commutant routes exist:
//! - [`commutant`] takes an arbitrary generating set and solves the stacked
//!   Sylvester equations `XA = AX` by SVD nullspace, after first restricting
//!   the unknowns to the commutant of one generic Hermitian combination of
//!   the generators (which always contains the answer).
//! - [`OperatorAlgebra::commutant_algebra`] uses the Wedderburn form
//!   `T(⊕ M_n⊗1_m)T†` of an algebra already known to be `*`-closed and
//!   returns `T(⊕ 1_n⊗M_m)T†`.
//!
//! [`generate`] composes the two.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::OnceCell;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{self, c, CVec, Mat, Subspace, ONE};
use crate::{Config, Error, Result};

const SALT_COMMUTANT: u64 = 0x11;
const SALT_CENTER: u64 = 0x12;
const SALT_BLOCK: u64 = 0x13;
const SALT_VALIDATE: u64 = 0x14;
const SALT_GENERIC: u64 = 0x15;
/// Random elements used in place of a large generating set.
const GENERIC_GENERATORS: usize = 4;

/// Gap used when clustering the eigenvalues of the preconditioning element in
/// [`commutant`]. Merging distinct eigenvalues only enlarges the search
/// space, so this can be loose.
const PRECONDITION_GAP: f64 = 1e-7;

/// Multiset of `(block size n_k, spatial multiplicity m_k)` pairs, sorted by
/// descending block size and then multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockInvariant {
    blocks: Vec<(usize, usize)>,
}

impl BlockInvariant {
    pub fn new(mut blocks: Vec<(usize, usize)>) -> Self {
        blocks.sort_by(|a, b| b.cmp(a));
        Self { blocks }
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// `Σ n_k·m_k`.
    pub fn ambient_dim(&self) -> usize {
        self.blocks.iter().map(|(n, m)| n * m).sum()
    }

    /// `Σ n_k²`.
    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|(n, _)| n * n).sum()
    }

    /// The invariant of the algebra in its multiplicity-free representation;
    /// two algebras are isomorphic iff their abstract forms agree.
    pub fn abstract_form(&self) -> BlockInvariant {
        BlockInvariant::new(self.blocks.iter().map(|&(n, _)| (n, 1)).collect())
    }

    pub fn is_isomorphic(&self, other: &BlockInvariant) -> bool {
        self.abstract_form() == other.abstract_form()
    }

    pub fn is_factor(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn is_abelian(&self) -> bool {
        self.blocks.iter().all(|&(n, _)| n == 1)
    }

    /// Invariant of the commutant: block sizes and multiplicities swap.
    pub fn commutant(&self) -> BlockInvariant {
        BlockInvariant::new(self.blocks.iter().map(|&(n, m)| (m, n)).collect())
    }
}

impl fmt::Display for BlockInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (n, m)) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({n},{m})")?;
        }
        write!(f, "}}")
    }
}

/// A minimal central projection together with its block data.
#[derive(Clone, Debug)]
pub struct Sector {
    pub projection: Mat,
    pub block_size: usize,
    pub multiplicity: usize,
    /// Orthonormal basis of the range of `projection`.
    pub range: Mat,
}

/// Unitary `T` with `T† A T = ⊕_k M_{n_k} ⊗ 1_{m_k}` in sector order.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub unitary: Mat,
    pub invariant: BlockInvariant,
    /// Block layout in the order used by `unitary` (not re-sorted).
    pub layout: Vec<(usize, usize)>,
}

/// Closure residuals reported by [`OperatorAlgebra::validate`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AlgebraResiduals {
    pub identity: f64,
    pub adjoint: f64,
    pub product: f64,
    pub orthonormality: f64,
}

impl AlgebraResiduals {
    pub fn max(&self) -> f64 {
        self.identity.max(self.adjoint).max(self.product).max(self.orthonormality)
    }
}

#[derive(Clone, Debug)]
pub struct OperatorAlgebra {
    d: usize,
    basis: Subspace,
    generators: Vec<Mat>,
    commutant: OnceCell<Box<OperatorAlgebra>>,
}

impl OperatorAlgebra {
    fn from_parts(d: usize, basis: Mat, generators: Vec<Mat>) -> Self {
        Self { d, basis: Subspace::new_orthonormal(basis), generators, commutant: OnceCell::new() }
    }

    fn from_orthonormal(d: usize, basis: Mat) -> Self {
        let gens = (0..basis.ncols()).map(|j| column_matrix(&basis, j, d)).collect();
        Self::from_parts(d, basis, gens)
    }

    /// Span of the given matrices (not checked for closure; see
    /// [`OperatorAlgebra::validate`]).
    pub fn from_spanning(d: usize, elements: &[Mat], cfg: &Config) -> Result<Self> {
        check_dims(elements, d)?;
        let mut m = Mat::zeros(d * d, elements.len());
        for (j, x) in elements.iter().enumerate() {
            m.set_column(j, &linalg::vectorize(x));
        }
        let basis = linalg::orthonormal_span(&m, cfg.tol);
        Ok(Self::from_parts(d, basis, elements.to_vec()))
    }

    pub fn full(d: usize) -> Self {
        let basis = linalg::identity(d * d);
        let mut gens: Vec<Mat> = (0..d.saturating_sub(1)).map(|i| linalg::unit(d, i, i + 1)).collect();
        gens.push(linalg::unit(d, 0, 0));
        Self::from_parts(d, basis, gens)
    }

    pub fn scalars(d: usize) -> Self {
        let v = linalg::vectorize(&linalg::identity(d)).unscale(libm::sqrt(d as f64));
        Self::from_parts(d, Mat::from_columns(&[v]), alloc::vec![linalg::identity(d)])
    }

    pub fn diagonal(d: usize) -> Self {
        let cols: Vec<CVec> = (0..d).map(|i| linalg::vectorize(&linalg::unit(d, i, i))).collect();
        let gen = linalg::real_diag(&(0..d).map(|i| i as f64).collect::<Vec<_>>());
        Self::from_parts(d, Mat::from_columns(&cols), alloc::vec![gen, linalg::identity(d)])
    }

    /// Canonical block algebra `⊕_k M_{n_k} ⊗ 1_{m_k}` on `ℂ^{Σ n_k m_k}`,
    /// blocks laid out in the given order.
    pub fn from_blocks(layout: &[(usize, usize)]) -> Result<Self> {
        if layout.iter().any(|&(n, m)| n == 0 || m == 0) {
            return Err(Error::pre("block sizes and multiplicities must be positive"));
        }
        let d: usize = layout.iter().map(|(n, m)| n * m).sum();
        let mut cols = Vec::new();
        let mut offset = 0;
        for &(n, m) in layout {
            let scale = 1.0 / libm::sqrt(m as f64);
            for i in 0..n {
                for j in 0..n {
                    let mut x = linalg::zeros(d);
                    for l in 0..m {
                        x[(offset + i * m + l, offset + j * m + l)] = c(scale, 0.0);
                    }
                    cols.push(linalg::vectorize(&x));
                }
            }
            offset += n * m;
        }
        Ok(Self::from_orthonormal(d, Mat::from_columns(&cols)))
    }

    /// `A ⊗ B` on `ℂ^{d_A} ⊗ ℂ^{d_B}`.
    pub fn tensor(a: &OperatorAlgebra, b: &OperatorAlgebra) -> Self {
        let d = a.d * b.d;
        let (ea, eb) = (a.basis_matrices(), b.basis_matrices());
        let mut cols = Vec::with_capacity(ea.len() * eb.len());
        for x in &ea {
            for y in &eb {
                cols.push(linalg::vectorize(&linalg::kron(x, y)));
            }
        }
        let mut gens: Vec<Mat> = a.generators.iter().map(|g| linalg::kron(g, &linalg::identity(b.d))).collect();
        gens.extend(b.generators.iter().map(|g| linalg::kron(&linalg::identity(a.d), g)));
        Self::from_parts(d, Mat::from_columns(&cols), gens)
    }

    /// Ambient dimension `d`.
    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    /// Linear dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn subspace(&self) -> &Subspace {
        &self.basis
    }

    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }

    pub fn basis_matrix(&self, j: usize) -> Mat {
        column_matrix(self.basis.basis(), j, self.d)
    }

    pub fn basis_matrices(&self) -> Vec<Mat> {
        (0..self.dim()).map(|j| self.basis_matrix(j)).collect()
    }

    /// Orthogonal projection (trace inner product) of `x` onto the algebra.
    pub fn project(&self, x: &Mat) -> Mat {
        linalg::unvectorize(self.basis.project(&linalg::vectorize(x)).as_slice(), self.d)
    }

    /// Relative distance of `x` from the algebra.
    pub fn membership_residual(&self, x: &Mat) -> f64 {
        let n = x.norm();
        if n == 0.0 {
            return 0.0;
        }
        self.basis.residual(&linalg::vectorize(x)) / n
    }

    pub fn contains(&self, x: &Mat, cfg: &Config) -> bool {
        self.membership_residual(x) < cfg.tol
    }

    /// Largest relative distance of `other`'s basis from `self`.
    pub fn containment_residual(&self, other: &OperatorAlgebra) -> f64 {
        self.basis.containment_residual(&other.basis)
    }

    pub fn contains_algebra(&self, other: &OperatorAlgebra, cfg: &Config) -> bool {
        self.d == other.d && self.containment_residual(other) < cfg.tol
    }

    pub fn equals(&self, other: &OperatorAlgebra, cfg: &Config) -> bool {
        self.d == other.d && self.basis.equals(&other.basis, cfg.tol)
    }

    pub fn equality_residual(&self, other: &OperatorAlgebra) -> f64 {
        self.basis.equality_residual(&other.basis)
    }

    pub fn is_abelian(&self, cfg: &Config) -> bool {
        let b = self.basis_matrices();
        b.iter().enumerate().all(|(i, x)| {
            b[i + 1..].iter().all(|y| linalg::commutator(x, y).norm() <= cfg.tol * (1.0 + x.norm() * y.norm()))
        })
    }

    /// Closure residuals: identity membership, adjoint closure, product
    /// closure (all pairs up to dimension 48, a seeded sample beyond) and
    /// basis orthonormality.
    pub fn validate(&self, cfg: &Config) -> AlgebraResiduals {
        let b = self.basis_matrices();
        let identity = self.membership_residual(&linalg::identity(self.d));
        let adjoint = b.iter().map(|x| self.membership_residual(&x.adjoint())).fold(0.0, f64::max);
        let pairs: Vec<(usize, usize)> = if b.len() <= 48 {
            (0..b.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect()
        } else {
            let mut r = linalg::rng(cfg.seed, SALT_VALIDATE);
            (0..2000).map(|_| (r.gen_range(0..b.len()), r.gen_range(0..b.len()))).collect()
        };
        let product = pairs
            .iter()
            // Basis elements have unit norm; products may vanish.
            .map(|&(i, j)| self.basis.residual(&linalg::vectorize(&(&b[i] * &b[j]))))
            .fold(0.0, f64::max);
        let gram = self.basis.basis().adjoint() * self.basis.basis();
        let orthonormality = linalg::dist(&gram, &linalg::identity(self.dim()));
        AlgebraResiduals { identity, adjoint, product, orthonormality }
    }

    /// `{x ∈ self : xs = sx for all s}` solved in the coordinates of `self`.
    ///
    /// With `others` spanning a `*`-closed set `S` this is `S′ ∩ self`.
    pub fn relative_commutant(&self, others: &[Mat], cfg: &Config) -> Result<OperatorAlgebra> {
        check_dims(others, self.d)?;
        let d = self.d;
        let mut current = self.basis.basis().clone();
        for s in others {
            if current.ncols() <= 1 && self.membership_residual(&linalg::identity(d)) < cfg.tol {
                break;
            }
            let scale = 2.0 * s.norm();
            if scale == 0.0 {
                continue;
            }
            let mut images = Mat::zeros(d * d, current.ncols());
            for j in 0..current.ncols() {
                let x = column_matrix(&current, j, d);
                images.set_column(j, &linalg::vectorize(&linalg::commutator(&x, s)));
            }
            let null = linalg::null_space(&images, cfg.tol * scale);
            current = current * null;
        }
        Ok(Self::from_orthonormal(d, current))
    }

    /// `Z(A) = A ∩ A′`.
    pub fn center(&self, cfg: &Config) -> Result<OperatorAlgebra> {
        if let Some(commutant) = self.commutant.get() {
            let small = if commutant.dim() <= self.dim() { &commutant.basis } else { &self.basis };
            let large = if commutant.dim() <= self.dim() { &self.basis } else { &commutant.basis };
            return Ok(Self::from_orthonormal(self.d, small.intersect(large, cfg.tol).basis().clone()));
        }
        let gens = if self.generators.is_empty() || self.generators.len() > GENERIC_GENERATORS {
            self.generic_elements(GENERIC_GENERATORS, cfg)
        } else {
            self.generators.clone()
        };
        let z = self.relative_commutant(&gens, cfg)?;
        // The generating set may be smaller than a basis; confirm against the
        // full basis, which is cheap once the candidate is small.
        if z.dim() > 1 {
            return z.relative_commutant(&self.basis_matrices(), cfg);
        }
        Ok(z)
    }

    /// Random combinations of the basis; a few of them generate the algebra
    /// with probability one.
    fn generic_elements(&self, count: usize, cfg: &Config) -> Vec<Mat> {
        let mut r = linalg::rng(cfg.seed, SALT_GENERIC);
        let basis = self.basis_matrices();
        (0..count)
            .map(|_| {
                let mut x = linalg::zeros(self.d);
                for b in &basis {
                    x += b * c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                }
                x
            })
            .collect()
    }

    /// Minimal central projections with block size and multiplicity, sorted
    /// by descending block size and then by `Tr(z_k R)` for the fixed
    /// reference `R = diag(1, 2, …, d)`.
    pub fn sectors(&self, cfg: &Config) -> Result<Vec<Sector>> {
        let d = self.d;
        if self.membership_residual(&linalg::identity(d)) >= cfg.tol {
            return Err(Error::pre("algebra is not unital"));
        }
        let z = self.center(cfg)?;
        let raw: Vec<(Mat, Mat)> = if z.dim() <= 1 {
            let id = linalg::identity(d);
            alloc::vec![(id.clone(), id)]
        } else {
            let mut r = linalg::rng(cfg.seed, SALT_CENTER);
            let mut generic = linalg::zeros(d);
            for x in z.basis_matrices() {
                generic += linalg::hermitian_part(&x).scale(r.gen_range(-1.0..1.0));
                generic += linalg::skew_hermitian_part(&x).scale(r.gen_range(-1.0..1.0));
            }
            let (vals, vecs) = linalg::hermitian_eigen(&generic);
            let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
            let gap = cfg.tol * scale;
            let clusters = linalg::cluster_sorted(&vals, gap);
            if clusters.len() != z.dim() {
                return Err(Error::Ambiguous(alloc::format!(
                    "generic central element has {} eigenvalue clusters but the center has dimension {}",
                    clusters.len(),
                    z.dim()
                )));
            }
            if let Some(g) = linalg::smallest_separating_gap(&vals, gap) {
                if g < 100.0 * gap {
                    return Err(Error::Ambiguous(alloc::format!(
                        "central eigenvalue gap {g:e} is within two orders of the tolerance"
                    )));
                }
            }
            clusters
                .into_iter()
                .map(|rg| {
                    let range = vecs.columns(rg.start, rg.len()).into_owned();
                    let p = &range * range.adjoint();
                    (p, range)
                })
                .collect()
        };

        let basis = self.basis_matrices();
        let mut sectors = Vec::with_capacity(raw.len());
        for (p, range) in raw {
            let rank = range.ncols();
            // `x ↦ px` is the orthogonal projection of `A` onto `pA`, so its
            // trace over the orthonormal basis is `dim pA`.
            let trace: f64 = basis.iter().map(|b| linalg::inner(b, &(&p * b)).re).sum();
            let block_dim = libm::round(trace) as usize;
            if libm::fabs(trace - block_dim as f64) > 1e-6 {
                return Err(Error::Ambiguous(alloc::format!("sector block dimension {trace} is not an integer")));
            }
            let n = isqrt(block_dim);
            if n == 0 || n * n != block_dim || rank % n != 0 {
                return Err(Error::Ambiguous(alloc::format!(
                    "sector of rank {rank} has block dimension {block_dim}, not a square dividing the rank"
                )));
            }
            sectors.push(Sector { projection: p, block_size: n, multiplicity: rank / n, range });
        }
        sectors.sort_by(|a, b| {
            b.block_size.cmp(&a.block_size).then(reference_trace(&a.projection).total_cmp(&reference_trace(&b.projection)))
        });
        Ok(sectors)
    }

    pub fn block_invariant(&self, cfg: &Config) -> Result<BlockInvariant> {
        Ok(BlockInvariant::new(self.sectors(cfg)?.iter().map(|s| (s.block_size, s.multiplicity)).collect()))
    }

    /// Wedderburn form through matrix units: inside each sector a generic
    /// Hermitian element splits the range into `n` eigenspaces of dimension
    /// `m`, and the one-dimensional corners `e_1 A e_j` supply partial
    /// isometries identifying them.
    pub fn canonical_form(&self, cfg: &Config) -> Result<CanonicalForm> {
        let d = self.d;
        let sectors = self.sectors(cfg)?;
        let basis = self.basis_matrices();
        let mut r = linalg::rng(cfg.seed, SALT_BLOCK);
        let mut t = Mat::zeros(d, d);
        let mut offset = 0;
        let mut layout = Vec::new();
        for s in &sectors {
            let (n, m) = (s.block_size, s.multiplicity);
            let q = &s.range;
            let restricted: Vec<Mat> = basis.iter().map(|b| q.adjoint() * b * q).collect();
            let mut h = linalg::zeros(n * m);
            for x in &restricted {
                h += linalg::hermitian_part(x).scale(r.gen_range(-1.0..1.0));
                h += linalg::skew_hermitian_part(x).scale(r.gen_range(-1.0..1.0));
            }
            let (vals, vecs) = linalg::hermitian_eigen(&h);
            let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
            let clusters = linalg::cluster_sorted(&vals, cfg.tol * scale.max(1.0));
            if clusters.len() != n || clusters.iter().any(|c| c.len() != m) {
                return Err(Error::Ambiguous(alloc::format!(
                    "sector ({n},{m}): generic element split into clusters of sizes {:?}",
                    clusters.iter().map(|c| c.len()).collect::<Vec<_>>()
                )));
            }
            let ranges: Vec<Mat> = clusters.iter().map(|c| vecs.columns(c.start, c.len()).into_owned()).collect();
            let mut local = Mat::zeros(n * m, n * m);
            for (j, rj) in ranges.iter().enumerate() {
                let u_j = if j == 0 {
                    linalg::identity(m)
                } else {
                    let best = restricted
                        .iter()
                        .map(|x| ranges[0].adjoint() * x * rj)
                        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                        .expect("non-empty basis");
                    let norm = best.norm();
                    if norm <= cfg.tol {
                        return Err(Error::Ambiguous("matrix-unit corner vanished".into()));
                    }
                    let u = best.scale(libm::sqrt(m as f64) / norm);
                    if linalg::unitarity_residual(&u) > 1e3 * cfg.tol.max(1e-12) * m as f64 {
                        return Err(Error::Ambiguous("matrix-unit corner is not a scaled unitary".into()));
                    }
                    u
                };
                // g_{j,l} = E_{j1} f_l with E_{j1} = R_j U_j† R_1†.
                let g = rj * u_j.adjoint();
                for l in 0..m {
                    local.set_column(j * m + l, &g.column(l));
                }
            }
            let lifted = q * local;
            for k in 0..n * m {
                t.set_column(offset + k, &lifted.column(k));
            }
            offset += n * m;
            layout.push((n, m));
        }
        let invariant = BlockInvariant::new(layout.clone());
        let canonical = OperatorAlgebra::from_blocks(&layout)?;
        let worst = basis
            .iter()
            .map(|b| canonical.membership_residual(&(t.adjoint() * b * &t)))
            .fold(0.0, f64::max);
        if worst > 1e3 * cfg.tol.max(1e-12) {
            return Err(Error::Ambiguous(alloc::format!("canonical form residual {worst:e}")));
        }
        Ok(CanonicalForm { unitary: t, invariant, layout })
    }

    /// Commutant of this (`*`-closed) algebra via its canonical form; cached.
    pub fn commutant_algebra(&self, cfg: &Config) -> Result<OperatorAlgebra> {
        if let Some(c) = self.commutant.get() {
            return Ok((**c).clone());
        }
        let form = self.canonical_form(cfg)?;
        let d = self.d;
        let t = &form.unitary;
        let mut cols = Vec::new();
        let mut offset = 0;
        for &(n, m) in &form.layout {
            let scale = 1.0 / libm::sqrt(n as f64);
            for i in 0..m {
                for j in 0..m {
                    let mut x = linalg::zeros(d);
                    for a in 0..n {
                        x[(offset + a * m + i, offset + a * m + j)] = c(scale, 0.0);
                    }
                    cols.push(linalg::vectorize(&(t * x * t.adjoint())));
                }
            }
            offset += n * m;
        }
        let out = Self::from_orthonormal(d, Mat::from_columns(&cols));
        let _ = out.commutant.set(Box::new(self.clone_without_cache()));
        let _ = self.commutant.set(Box::new(out.clone_without_cache()));
        Ok(out)
    }

    fn clone_without_cache(&self) -> OperatorAlgebra {
        Self::from_parts(self.d, self.basis.basis().clone(), self.generators.clone())
    }
}

/// Commutant `{X : XA = AX, XA† = A†X}` of an arbitrary generating set.
///
/// Each generator is split into Hermitian parts `h`; the nullspaces of the
/// Sylvester operators `X ↦ hX − Xh` are intersected by SVD, with a
/// singular value treated as zero when it is at most `tol` times the
/// operator's largest singular value `λ_max(h) − λ_min(h)`.
pub fn commutant(generators: &[Mat], d: usize, cfg: &Config) -> Result<OperatorAlgebra> {
    check_dims(generators, d)?;
    let herms = hermitian_constituents(generators);
    if herms.is_empty() {
        return Ok(OperatorAlgebra::full(d));
    }
    let mut r = linalg::rng(cfg.seed, SALT_COMMUTANT);
    let mut h = linalg::zeros(d);
    for x in &herms {
        h += x.scale(r.gen_range(0.5..1.5) * if r.gen::<bool>() { 1.0 } else { -1.0 });
    }
    // Products split eigenspaces that every generator leaves degenerate.
    for (x, y) in herms.iter().zip(herms.iter().skip(1)) {
        h += (x * y + y * x).scale(r.gen_range(-0.5..0.5));
    }
    let (vals, vecs) = linalg::hermitian_eigen(&h);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let clusters = linalg::cluster_sorted(&vals, PRECONDITION_GAP * scale);
    let dim: usize = clusters.iter().map(|c| c.len() * c.len()).sum();
    let mut current = Mat::zeros(d * d, dim);
    let mut col = 0;
    for rg in &clusters {
        for a in rg.clone() {
            for b in rg.clone() {
                let x = vecs.column(a) * vecs.column(b).adjoint();
                current.set_column(col, &linalg::vectorize(&x));
                col += 1;
            }
        }
    }
    for x in &herms {
        if current.ncols() <= 1 {
            break;
        }
        let (ev, _) = linalg::hermitian_eigen(x);
        let spread = ev.last().copied().unwrap_or(0.0) - ev.first().copied().unwrap_or(0.0);
        if spread <= 0.0 {
            continue;
        }
        let mut images = Mat::zeros(d * d, current.ncols());
        for j in 0..current.ncols() {
            let y = column_matrix(&current, j, d);
            images.set_column(j, &linalg::vectorize(&linalg::commutator(x, &y)));
        }
        let null = linalg::null_space(&images, cfg.tol * spread);
        current = current * null;
    }
    Ok(OperatorAlgebra::from_orthonormal(d, current))
}

/// Von Neumann algebra generated by `generators` (and the identity): the
/// double commutant.
pub fn generate(generators: &[Mat], d: usize, cfg: &Config) -> Result<OperatorAlgebra> {
    let first = commutant(generators, d, cfg)?;
    let mut out = first.commutant_algebra(cfg)?;
    let mut gens = generators.to_vec();
    gens.push(linalg::identity(d));
    out.generators = gens;
    Ok(out)
}

/// `A′ ∩ M = A`, with `A ⊆ M` checked first.
pub fn is_masa(a: &OperatorAlgebra, m: &OperatorAlgebra, cfg: &Config) -> Result<bool> {
    if a.ambient_dim() != m.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: m.ambient_dim(), found: a.ambient_dim() });
    }
    let res = m.containment_residual(a);
    if res >= cfg.tol {
        return Err(Error::pre(alloc::format!("A is not contained in M (residual {res:e})")));
    }
    let rel = m.relative_commutant(&a.basis_matrices(), cfg)?;
    Ok(rel.equals(a, cfg))
}

/// A normal state given by a density matrix on the ambient space.
#[derive(Clone, Debug)]
pub struct State {
    rho: Mat,
}

impl State {
    pub fn from_density(rho: Mat, cfg: &Config) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::pre("density matrix must be square"));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > cfg.tol.max(1e-12) * 10.0 {
            return Err(Error::NotNormalized { trace: tr.re });
        }
        if !linalg::is_hermitian(&rho, 1e-9) {
            return Err(Error::pre("density matrix is not Hermitian"));
        }
        let (vals, _) = linalg::hermitian_eigen(&rho);
        if let Some(&min) = vals.first() {
            if min < -1e-9 {
                return Err(Error::NotPositive { min_eigenvalue: min });
            }
        }
        Ok(Self { rho: linalg::hermitian_part(&rho) })
    }

    /// Vector state `ω_ξ = ⟨ξ|·ξ⟩`; `ξ` must be a unit vector.
    pub fn from_vector(xi: &CVec, cfg: &Config) -> Result<Self> {
        let n = xi.norm();
        if (n * n - 1.0).abs() > cfg.tol.max(1e-12) * 10.0 {
            return Err(Error::NotNormalized { trace: n * n });
        }
        Ok(Self { rho: xi * xi.adjoint() })
    }

    pub fn tracial(d: usize) -> Self {
        Self { rho: linalg::identity(d).unscale(d as f64) }
    }

    pub fn density(&self) -> &Mat {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn eval(&self, x: &Mat) -> Complex64 {
        (&self.rho * x).trace()
    }
}

/// Distribution `μ_φ(k) = φ(z_k)` over the sectors of `m`.
pub fn qc_channel(state: &State, m: &OperatorAlgebra, cfg: &Config) -> Result<Vec<f64>> {
    if state.dim() != m.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: m.ambient_dim(), found: state.dim() });
    }
    Ok(m.sectors(cfg)?.iter().map(|s| state.eval(&s.projection).re.max(0.0)).collect())
}

/// Smallest central projection `z` with `zP = P` for a projection `P` in
/// `A` or in `A′`: the projection onto `[A′A·range(P)]`. One of the two
/// closures is trivial in each case.
pub fn central_support(p: &Mat, a: &OperatorAlgebra, cfg: &Config) -> Result<Mat> {
    let d = a.ambient_dim();
    if p.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, found: p.nrows() });
    }
    let scale = p.norm().max(1.0);
    if linalg::dist(&(p * p), p) > cfg.tol * scale || !linalg::is_hermitian(p, cfg.tol) {
        return Err(Error::pre("P is not an orthogonal projection"));
    }
    let basis = a.basis_matrices();
    let in_commutant = basis.iter().all(|b| linalg::commutator(b, p).norm() <= cfg.tol * scale * b.norm().max(1.0));
    if !in_commutant && a.membership_residual(p) >= cfg.tol {
        return Err(Error::pre("P lies neither in A nor in A′"));
    }
    let range = linalg::orthonormal_span(p, cfg.tol);
    let inner = saturate(&range, &basis, cfg);
    let outer = saturate(&inner, &a.commutant_algebra(cfg)?.basis_matrices(), cfg);
    Ok(&outer * outer.adjoint())
}

/// Orthonormal basis of `[S·range]`.
fn saturate(range: &Mat, ops: &[Mat], cfg: &Config) -> Mat {
    let (d, k) = range.shape();
    if k == 0 {
        return range.clone();
    }
    let mut stacked = Mat::zeros(d, k * ops.len());
    for (j, x) in ops.iter().enumerate() {
        stacked.view_mut((0, j * k), (d, k)).copy_from(&(x * range));
    }
    linalg::orthonormal_span(&stacked, cfg.tol)
}

/// Two subrepresentations `P, Q ∈ A′` are quasi-equivalent iff their
/// central supports agree.
pub fn quasi_equivalent(p: &Mat, q: &Mat, a: &OperatorAlgebra, cfg: &Config) -> Result<bool> {
    let (zp, zq) = (central_support(p, a, cfg)?, central_support(q, a, cfg)?);
    Ok(linalg::dist(&zp, &zq) < cfg.tol * 10.0 * (a.ambient_dim() as f64))
}

/// Fixed-point subalgebra `{x ∈ M : f(x) = x for every map}` of a family
/// of linear maps on `M`, in `M`'s coordinates.
pub fn fixed_points(
    m: &OperatorAlgebra,
    maps: &[&dyn Fn(&Mat) -> Mat],
    cfg: &Config,
) -> OperatorAlgebra {
    let d = m.ambient_dim();
    let mut current = m.subspace().basis().clone();
    for f in maps {
        if current.ncols() == 0 {
            break;
        }
        let mut images = Mat::zeros(d * d, current.ncols());
        for j in 0..current.ncols() {
            let x = column_matrix(&current, j, d);
            images.set_column(j, &linalg::vectorize(&(f(&x) - &x)));
        }
        let null = linalg::null_space(&images, cfg.tol * 2.0);
        current = current * null;
    }
    OperatorAlgebra::from_orthonormal(d, current)
}

pub(crate) fn column_matrix(basis: &Mat, j: usize, d: usize) -> Mat {
    Mat::from_iterator(d, d, basis.column(j).iter().cloned())
}

fn check_dims(mats: &[Mat], d: usize) -> Result<()> {
    for m in mats {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.nrows().max(m.ncols()) });
        }
    }
    Ok(())
}

fn hermitian_constituents(generators: &[Mat]) -> Vec<Mat> {
    let mut out = Vec::new();
    for g in generators {
        let floor = 1e-14 * g.norm().max(1.0);
        for h in [linalg::hermitian_part(g), linalg::skew_hermitian_part(g)] {
            // Drop parts proportional to the identity; they impose nothing.
            let tr = h.trace() / (h.nrows() as f64);
            let traceless = &h - linalg::identity(h.nrows()) * tr;
            if traceless.norm() > floor {
                out.push(traceless);
            }
        }
    }
    out
}

fn reference_trace(p: &Mat) -> f64 {
    (0..p.nrows()).map(|i| (i + 1) as f64 * p[(i, i)].re).sum()
}

fn isqrt(n: usize) -> usize {
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

#[allow(dead_code)]
pub(crate) fn describe(inv: &BlockInvariant) -> String {
    alloc::format!("{inv}")
}

//! Crossed products by finite abelian groups.
//!
//! For an action `α` of `U` on `M ⊆ B(H)` the crossed product lives on
//! `H⊗ℓ²(U)` and is generated by `π_α(X) = Σ_u α_u⁻¹(X)⊗|u⟩⟨u|` and
//! `1⊗λ_u`. Every action handled here is spatial, `α_u = Ad(W_u)`; inner
//! actions are those with `W_u ∈ M`.
//!
//! The dual action of `Û` is `α̂_γ = Ad(1⊗m_γ)` with `m_γ|v⟩ = γ(v)|v⟩`.
//! Second crossed products are built by calling [`crossed_product`] again
//! with the dual action.

use alloc::string::String;
use alloc::vec::Vec;

use crate::groups::{DualGroup, FiniteAbelianGroup};
use crate::kt::{build_v_prime, SpectralMeasure, UnitaryRepresentation};
use crate::linalg::{self, Mat};
use crate::vna::{self, BlockInvariant, OperatorAlgebra};
use crate::{Config, Error, Result};

#[derive(Clone, Debug)]
pub struct GroupAction {
    group: FiniteAbelianGroup,
    algebra: OperatorAlgebra,
    implementers: Vec<Mat>,
}

impl GroupAction {
    /// `α_u = Ad(W_u)` with one implementing unitary per group element.
    pub fn spatial(algebra: &OperatorAlgebra, group: &FiniteAbelianGroup, implementers: Vec<Mat>, cfg: &Config) -> Result<Self> {
        if implementers.len() != group.order() {
            return Err(Error::pre("one implementing unitary per group element is required"));
        }
        let d = algebra.ambient_dim();
        for w in &implementers {
            if w.shape() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, found: w.nrows() });
            }
            let r = linalg::unitarity_residual(w);
            if r > cfg.tol.max(1e-12) * 10.0 {
                return Err(Error::NotUnitary { residual: r });
            }
        }
        let action = Self { group: group.clone(), algebra: algebra.clone(), implementers };
        action.validate(cfg)?;
        Ok(action)
    }

    /// `W_u = Π_j W_j^{u_j}` from one unitary per cyclic factor.
    pub fn from_generators(algebra: &OperatorAlgebra, group: &FiniteAbelianGroup, gens: &[Mat], cfg: &Config) -> Result<Self> {
        if gens.len() != group.rank() {
            return Err(Error::pre(alloc::format!("expected {} generator unitaries, found {}", group.rank(), gens.len())));
        }
        let d = algebra.ambient_dim();
        let implementers = group
            .elements()
            .map(|u| {
                let mut m = linalg::identity(d);
                for (g, &k) in gens.iter().zip(&group.tuple(u)) {
                    for _ in 0..k {
                        m = &m * g;
                    }
                }
                m
            })
            .collect();
        Self::spatial(algebra, group, implementers, cfg)
    }

    pub fn from_representation(algebra: &OperatorAlgebra, rep: &UnitaryRepresentation, cfg: &Config) -> Result<Self> {
        Self::spatial(algebra, rep.group(), rep.unitaries().to_vec(), cfg)
    }

    pub fn trivial(algebra: &OperatorAlgebra, group: &FiniteAbelianGroup) -> Self {
        let d = algebra.ambient_dim();
        Self { group: group.clone(), algebra: algebra.clone(), implementers: (0..group.order()).map(|_| linalg::identity(d)).collect() }
    }

    /// Action on the canonical block algebra with the given layout: each
    /// group generator permutes blocks of equal shape and rotates each block
    /// by a unitary (`perm[k]` is the image of block `k`).
    pub fn block_permutation(
        layout: &[(usize, usize)],
        group: &FiniteAbelianGroup,
        generators: &[(Vec<usize>, Vec<Mat>)],
        cfg: &Config,
    ) -> Result<Self> {
        let algebra = OperatorAlgebra::from_blocks(layout)?;
        let d = algebra.ambient_dim();
        let offsets: Vec<usize> = layout
            .iter()
            .scan(0, |acc, &(n, m)| {
                let o = *acc;
                *acc += n * m;
                Some(o)
            })
            .collect();
        let mut gens = Vec::with_capacity(generators.len());
        for (perm, unitaries) in generators {
            if perm.len() != layout.len() || unitaries.len() != layout.len() {
                return Err(Error::pre("block permutation must list every block"));
            }
            let mut seen = alloc::vec![false; layout.len()];
            let mut w = linalg::zeros(d);
            for (k, &target) in perm.iter().enumerate() {
                if target >= layout.len() || seen[target] || layout[target] != layout[k] {
                    return Err(Error::NotAnAction(alloc::format!("block map {perm:?} is not a shape-preserving permutation")));
                }
                seen[target] = true;
                let (n, m) = layout[k];
                let u = &unitaries[k];
                if u.shape() != (n, n) {
                    return Err(Error::DimensionMismatch { expected: n, found: u.nrows() });
                }
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..m {
                            w[(offsets[target] + i * m + l, offsets[k] + j * m + l)] = u[(i, j)];
                        }
                    }
                }
            }
            gens.push(w);
        }
        Self::from_generators(&algebra, group, &gens, cfg)
    }

    /// `α_e = id`, `α_u(M) ⊆ M` and `α_{u+g} = α_u∘α_g` for every element
    /// `u` and canonical generator `g`, on a basis of `M`.
    fn validate(&self, cfg: &Config) -> Result<()> {
        let basis = self.algebra.basis_matrices();
        let tol = cfg.tol.max(1e-12) * 100.0;
        let g = &self.group;
        for x in &basis {
            let r = linalg::dist(&self.apply(0, x), x);
            if r > tol {
                return Err(Error::NotAnAction(alloc::format!("α_e moves a basis element by {r:e}")));
            }
        }
        for &gen in &g.generators() {
            for x in &basis {
                let r = self.algebra.membership_residual(&self.apply(gen, x));
                if r > tol {
                    return Err(Error::NotAnAction(alloc::format!("α_{gen} leaves the algebra (residual {r:e})")));
                }
            }
            for u in g.elements() {
                for x in &basis {
                    let lhs = self.apply(g.compose(u, gen), x);
                    let rhs = self.apply(u, &self.apply(gen, x));
                    let r = linalg::dist(&lhs, &rhs);
                    if r > tol {
                        return Err(Error::NotAnAction(alloc::format!("composition law fails at ({u},{gen}) by {r:e}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn algebra(&self) -> &OperatorAlgebra {
        &self.algebra
    }

    pub fn implementer(&self, u: usize) -> &Mat {
        &self.implementers[u]
    }

    pub fn implementers(&self) -> &[Mat] {
        &self.implementers
    }

    pub fn apply(&self, u: usize, x: &Mat) -> Mat {
        let w = &self.implementers[u];
        w * x * w.adjoint()
    }

    pub fn apply_inverse(&self, u: usize, x: &Mat) -> Mat {
        self.apply(self.group.inverse(u), x)
    }

    /// Whether every implementing unitary lies in `M`.
    pub fn is_inner(&self, cfg: &Config) -> bool {
        self.implementers.iter().all(|w| self.algebra.membership_residual(w) < cfg.tol.max(1e-12) * 10.0)
    }

    /// Whether the implementers form a genuine representation.
    pub fn representation(&self, cfg: &Config) -> Option<UnitaryRepresentation> {
        UnitaryRepresentation::from_elements(&self.group, self.implementers.clone(), cfg).ok()
    }

    pub fn is_trivial(&self, cfg: &Config) -> bool {
        let basis = self.algebra.basis_matrices();
        self.group.generators().iter().all(|&g| basis.iter().all(|x| linalg::dist(&self.apply(g, x), x) < cfg.tol * 100.0))
    }

    /// `π_α(X) = Σ_u α_u⁻¹(X)⊗|u⟩⟨u|`.
    pub fn pi(&self, x: &Mat) -> Mat {
        let n = self.group.order();
        let mut out = Mat::zeros(x.nrows() * n, x.ncols() * n);
        for u in self.group.elements() {
            out += linalg::kron(&self.apply_inverse(u, x), &linalg::unit(n, u, u));
        }
        out
    }

    /// `1⊗λ_u` on `H⊗ℓ²(U)`.
    pub fn lambda(&self, u: usize) -> Mat {
        linalg::kron(&linalg::identity(self.algebra.ambient_dim()), &self.group.regular(u))
    }
}

/// `M^α = {x ∈ M : α_u(x) = x}`.
pub fn fixed_point_algebra(action: &GroupAction, cfg: &Config) -> OperatorAlgebra {
    let gens = action.group.generators();
    let maps: Vec<_> = gens.iter().map(|&g| move |x: &Mat| action.apply(g, x)).collect();
    let refs: Vec<&dyn Fn(&Mat) -> Mat> = maps.iter().map(|f| f as &dyn Fn(&Mat) -> Mat).collect();
    vna::fixed_points(action.algebra(), &refs, cfg)
}

#[derive(Clone, Debug)]
pub struct CrossedProduct {
    action: GroupAction,
    algebra: OperatorAlgebra,
    invariant: BlockInvariant,
    covariance_residual: f64,
}

impl CrossedProduct {
    pub fn action(&self) -> &GroupAction {
        &self.action
    }

    pub fn base(&self) -> &OperatorAlgebra {
        self.action.algebra()
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        self.action.group()
    }

    pub fn algebra(&self) -> &OperatorAlgebra {
        &self.algebra
    }

    pub fn invariant(&self) -> &BlockInvariant {
        &self.invariant
    }

    /// Largest covariance residual over the generators of `M` and `U`.
    pub fn covariance_residual(&self) -> f64 {
        self.covariance_residual
    }

    pub fn ambient_dim(&self) -> usize {
        self.algebra.ambient_dim()
    }
}

fn covariance_residual(action: &GroupAction, xs: &[Mat]) -> f64 {
    let mut worst: f64 = 0.0;
    for u in action.group.elements() {
        let l = action.lambda(u);
        for x in xs {
            let lhs = &l * action.pi(x) * l.adjoint();
            let rhs = action.pi(&action.apply(u, x));
            worst = worst.max(linalg::dist(&lhs, &rhs));
        }
    }
    worst
}

/// `M⋊_αU = π_α(M) ∨ (1⊗λ(U))″`, generated by double commutant.
pub fn crossed_product(action: &GroupAction, cfg: &Config) -> Result<CrossedProduct> {
    let d = action.algebra.ambient_dim() * action.group.order();
    let base_gens: Vec<Mat> = action.algebra.generators().to_vec();
    let mut gens: Vec<Mat> = base_gens.iter().map(|x| action.pi(x)).collect();
    gens.extend(action.group.generators().iter().map(|&g| action.lambda(g)));
    let covariance = covariance_residual(action, &base_gens);
    let algebra = vna::generate(&gens, d, cfg)?;
    let invariant = algebra.block_invariant(cfg)?;
    Ok(CrossedProduct { action: action.clone(), algebra, invariant, covariance_residual: covariance })
}

/// A function `U → M`, one matrix per group element.
pub type GroupFunction = Vec<Mat>;

/// `(X∗Y)(u) = Σ_v X(v)α_v(Y(v⁻¹u))`.
pub fn convolution(x: &[Mat], y: &[Mat], action: &GroupAction) -> GroupFunction {
    let g = &action.group;
    g.elements()
        .map(|u| {
            let mut acc = linalg::zeros(action.algebra.ambient_dim());
            for v in g.elements() {
                acc += &x[v] * action.apply(v, &y[g.compose(g.inverse(v), u)]);
            }
            acc
        })
        .collect()
}

/// `X^#(u) = α_u(X(u⁻¹))†`.
pub fn involution(x: &[Mat], action: &GroupAction) -> GroupFunction {
    let g = &action.group;
    g.elements().map(|u| action.apply(u, &x[g.inverse(u)]).adjoint()).collect()
}

/// `δ_e·a`.
pub fn delta_function(action: &GroupAction, a: &Mat) -> GroupFunction {
    let d = action.algebra.ambient_dim();
    action.group.elements().map(|u| if u == 0 { a.clone() } else { linalg::zeros(d) }).collect()
}

/// `𝔉(X) = Σ_u π_α(X(u))(1⊗λ_u)`.
pub fn op_fourier(x: &[Mat], action: &GroupAction) -> Mat {
    let d = action.algebra.ambient_dim() * action.group.order();
    let mut out = linalg::zeros(d);
    for u in action.group.elements() {
        out += action.pi(&x[u]) * action.lambda(u);
    }
    out
}

/// Slice of `σ(EW)*σ` against `X`: for an inner action implemented by the
/// representation of `e` this is `Σ_u X(u)E(u)`.
pub fn symbolic_fourier(x: &[Mat], e: &SpectralMeasure) -> Mat {
    let d = e.ambient_dim();
    let n = e.group().order();
    let ew = crate::kt::coupling_ew(e);
    let sigma = linalg::flip(d, n);
    // σ: H⊗ℓ²(U) → ℓ²(U)⊗H, so S acts on ℓ²(U)⊗H with the group leg first.
    let s = &sigma * ew.adjoint() * sigma.adjoint();
    let mut out = linalg::zeros(d);
    for u in 0..n {
        let block = s.view((u * d, u * d), (d, d)).into_owned();
        out += &x[u] * block;
    }
    out
}

/// Dual action `α̂_γ = Ad(1⊗m_γ)` of `Û` on the crossed product.
pub fn dual_action(c: &CrossedProduct, cfg: &Config) -> Result<GroupAction> {
    let g = c.group();
    let dual = g.dual();
    let d = c.base().ambient_dim();
    let implementers = (0..dual.order())
        .map(|gamma| linalg::kron(&linalg::identity(d), &g.character_multiplier(gamma)))
        .collect();
    GroupAction::spatial(c.algebra(), &dual.as_group(), implementers, cfg)
}

/// `max_γ` deviation between `α̂_γ(Y)` and the block at `γ⁻¹` of
/// `(1⊗1⊗F)·Ad(1⊗σW*σ)(Y⊗1)·(1⊗1⊗F)†`, together with the largest
/// off-diagonal block.
pub fn dual_coaction_residual(c: &CrossedProduct, dual: &GroupAction, y: &Mat) -> f64 {
    let g = c.group();
    let n = g.order();
    let d = c.base().ambient_dim();
    let w = crate::kt::build_w(g);
    let sigma = linalg::flip(n, n);
    let z = &sigma * w.matrix().adjoint() * &sigma;
    let lifted = linalg::kron(&linalg::identity(d), &z);
    let delta = &lifted * linalg::kron(y, &linalg::identity(n)) * lifted.adjoint();
    let f = g.fourier_transform();
    let ff = linalg::kron(&linalg::identity(d * n), &f);
    let hat = &ff * delta * ff.adjoint();
    let dual_group = g.dual();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let blk = linalg::slot_block(&hat, d * n, n, a, b);
            if a == b {
                let gamma = dual_group.inverse(a);
                worst = worst.max(linalg::dist(&blk, &dual.apply(gamma, y)));
            } else {
                worst = worst.max(blk.norm());
            }
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantComparison {
    pub left: BlockInvariant,
    pub right: BlockInvariant,
    /// Abstract isomorphism (block sizes agree).
    pub isomorphic: bool,
    /// Block sizes and spatial multiplicities agree.
    pub spatially_equal: bool,
}

impl InvariantComparison {
    pub fn new(left: BlockInvariant, right: BlockInvariant) -> Self {
        let isomorphic = left.is_isomorphic(&right);
        let spatially_equal = left == right;
        Self { left, right, isomorphic, spatially_equal }
    }
}

#[derive(Clone, Debug)]
pub struct DualityReport {
    pub crossed: BlockInvariant,
    /// `(M⋊U)⋊Û` against `M⊗B(ℓ²(U))`.
    pub comparison: InvariantComparison,
    pub dual_coaction_residual: f64,
    pub fixed_points_of_dual_equal_pi_m: bool,
    /// The further step to `M` needs a properly infinite `M`.
    pub stabilization_note: &'static str,
}

pub const STABILIZATION_NOTE: &str =
    "the identification with M itself needs M properly infinite; not applicable in finite dimension";

/// Second crossed product by the dual action, compared with `M⊗B(ℓ²(U))`.
pub fn takesaki_duality_check(action: &GroupAction, cfg: &Config) -> Result<DualityReport> {
    let c = crossed_product(action, cfg)?;
    let dual = dual_action(&c, cfg)?;
    let second = crossed_product(&dual, cfg)?;
    let target = OperatorAlgebra::tensor(action.algebra(), &OperatorAlgebra::full(action.group().order()));
    let target_inv = target.block_invariant(cfg)?;
    let mut samples: Vec<Mat> = action.algebra().generators().iter().map(|x| action.pi(x)).collect();
    samples.extend(action.group().generators().iter().map(|&g| action.lambda(g)));
    let coaction = samples.iter().map(|y| dual_coaction_residual(&c, &dual, y)).fold(0.0, f64::max);
    let fixed = fixed_point_algebra(&dual, cfg);
    let pi_m = OperatorAlgebra::from_spanning(
        c.ambient_dim(),
        &action.algebra().basis_matrices().iter().map(|x| action.pi(x)).collect::<Vec<_>>(),
        cfg,
    )?;
    Ok(DualityReport {
        crossed: c.invariant().clone(),
        comparison: InvariantComparison::new(second.invariant().clone(), target_inv),
        dual_coaction_residual: coaction,
        fixed_points_of_dual_equal_pi_m: fixed.equals(&pi_m, &Config { tol: cfg.tol.max(1e-9) * 10.0, ..*cfg }),
        stabilization_note: STABILIZATION_NOTE,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem1Diagnostic {
    /// The MASA lives in a factor; for abelian `M` the hypotheses on `A`
    /// hold while `M⋊U` stays abelian.
    NotAFactor,
    NotAMasa,
    NotFixedPointAlgebra,
    ActionNotInner,
    GroupDoesNotGenerateMasa,
}

impl Theorem1Diagnostic {
    pub fn as_str(&self) -> &'static str {
        match self {
            Theorem1Diagnostic::NotAFactor => "not_a_factor",
            Theorem1Diagnostic::NotAMasa => "not_a_masa",
            Theorem1Diagnostic::NotFixedPointAlgebra => "not_fixed_point_algebra",
            Theorem1Diagnostic::ActionNotInner => "action_not_inner",
            Theorem1Diagnostic::GroupDoesNotGenerateMasa => "group_does_not_generate_masa",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Theorem1Report {
    pub diagnostics: Vec<Theorem1Diagnostic>,
    /// `M⋊U` against `A⊗B(ℓ²(U))`.
    pub part_i: Option<InvariantComparison>,
    /// Second crossed product of `A⊗B(ℓ²(U))` under the transported dual
    /// action against `M⊗B(ℓ²(U))`.
    pub part_ii: Option<InvariantComparison>,
    pub note: Option<String>,
}

impl Theorem1Report {
    pub fn hypotheses_hold(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Checks the hypotheses `A = A′∩M`, `A = M^α`, `A = U″` and, when they
/// hold, both halves of the split.
pub fn theorem1_split_check(action: &GroupAction, a: &OperatorAlgebra, cfg: &Config) -> Result<Theorem1Report> {
    let m = action.algebra();
    if a.ambient_dim() != m.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: m.ambient_dim(), found: a.ambient_dim() });
    }
    let mut diagnostics = Vec::new();
    if m.center(cfg)?.dim() != 1 {
        diagnostics.push(Theorem1Diagnostic::NotAFactor);
    }
    match vna::is_masa(a, m, cfg) {
        Ok(true) => {}
        Ok(false) | Err(Error::Precondition(_)) => diagnostics.push(Theorem1Diagnostic::NotAMasa),
        Err(e) => return Err(e),
    }
    if !fixed_point_algebra(action, cfg).equals(a, cfg) {
        diagnostics.push(Theorem1Diagnostic::NotFixedPointAlgebra);
    }
    if !action.is_inner(cfg) {
        diagnostics.push(Theorem1Diagnostic::ActionNotInner);
    } else {
        let generated = vna::generate(action.implementers(), m.ambient_dim(), cfg)?;
        if !generated.equals(a, cfg) {
            diagnostics.push(Theorem1Diagnostic::GroupDoesNotGenerateMasa);
        }
    }
    if !diagnostics.is_empty() {
        return Ok(Theorem1Report { diagnostics, part_i: None, part_ii: None, note: None });
    }

    let n = action.group().order();
    let c = crossed_product(action, cfg)?;
    let target = OperatorAlgebra::tensor(a, &OperatorAlgebra::full(n));
    let part_i = InvariantComparison::new(c.invariant().clone(), target.block_invariant(cfg)?);

    let form_c = c.algebra().canonical_form(cfg)?;
    let form_t = target.canonical_form(cfg)?;
    if form_c.layout != form_t.layout {
        return Ok(Theorem1Report {
            diagnostics,
            part_i: Some(part_i),
            part_ii: None,
            note: Some(alloc::format!(
                "spatial layouts {:?} and {:?} differ; dual action not transported",
                form_c.layout,
                form_t.layout
            )),
        });
    }
    let t = &form_t.unitary * form_c.unitary.adjoint();
    let dual = dual_action(&c, cfg)?;
    let transported: Vec<Mat> = dual.implementers().iter().map(|w| &t * w * t.adjoint()).collect();
    let theta = GroupAction::spatial(&target, dual.group(), transported, cfg)?;
    let second = crossed_product(&theta, cfg)?;
    let goal = OperatorAlgebra::tensor(m, &OperatorAlgebra::full(n)).block_invariant(cfg)?;
    let part_ii = InvariantComparison::new(second.invariant().clone(), goal);
    Ok(Theorem1Report { diagnostics, part_i: Some(part_i), part_ii: Some(part_ii), note: None })
}

/// `ᾱ(v)` on `H⊗ℓ²(U)⊗ℓ²(U)`: `Σ_{ij}Σ_u α_u(v_ij)⊗|i⟩⟨j|⊗|u⟩⟨u|`.
pub fn alpha_bar(action: &GroupAction, v: &Mat) -> Mat {
    let d = action.algebra.ambient_dim();
    let n = action.group.order();
    let mut out = Mat::zeros(d * n * n, d * n * n);
    for i in 0..n {
        for j in 0..n {
            let vij = linalg::slot_block(v, d, n, i, j);
            for u in 0..n {
                let a = action.apply(u, &vij);
                out += linalg::kron_all(&[&a, &linalg::unit(n, i, j), &linalg::unit(n, u, u)]);
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct SemiDualityReport {
    pub residual: f64,
    pub holds: bool,
}

/// Whether `ᾱ(v) = (v⊗1)(1⊗V′)`.
pub fn semi_duality_check(action: &GroupAction, v: &Mat, cfg: &Config) -> Result<SemiDualityReport> {
    let d = action.algebra.ambient_dim();
    let n = action.group.order();
    if v.shape() != (d * n, d * n) {
        return Err(Error::DimensionMismatch { expected: d * n, found: v.nrows() });
    }
    let r = linalg::unitarity_residual(v);
    if r > cfg.tol.max(1e-12) * 100.0 {
        return Err(Error::NotUnitary { residual: r });
    }
    let lhs = alpha_bar(action, v);
    let vp = build_v_prime(&action.group);
    let rhs = linalg::kron(v, &linalg::identity(n)) * linalg::kron(&linalg::identity(d), vp.matrix());
    let residual = linalg::dist(&lhs, &rhs);
    Ok(SemiDualityReport { residual, holds: residual < cfg.tol.max(1e-12) * 100.0 * (d * n) as f64 })
}

/// Witness `v = Σ_γ S_γ⊗Q_γ` for an inner action whose spectral measure
/// has one atom per character, all of equal rank: `Q_γ = F†|γ⟩⟨γ|F` and
/// `S_γ` is the unitary in `M` shifting atom `χ` onto atom `γχ`.
pub fn semi_duality_witness(e: &SpectralMeasure) -> Result<Mat> {
    let g = e.group();
    let n = g.order();
    let dual = g.dual();
    let d = e.ambient_dim();
    if e.atoms().len() != n || !e.is_injective() {
        return Err(Error::pre("witness needs one atom per character"));
    }
    let ranges: Vec<(usize, Mat)> = e
        .atoms()
        .iter()
        .map(|a| {
            let (vals, vecs) = linalg::hermitian_eigen(&a.projection);
            let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
            let mut r = Mat::zeros(d, keep.len());
            for (k, &i) in keep.iter().enumerate() {
                r.set_column(k, &vecs.column(i));
            }
            (a.character, r)
        })
        .collect();
    let rank = ranges[0].1.ncols();
    if ranges.iter().any(|(_, r)| r.ncols() != rank) {
        return Err(Error::pre("witness needs atoms of equal rank"));
    }
    let range_of = |chi: usize| &ranges.iter().find(|(c, _)| *c == chi).expect("bijective labels").1;
    let f = g.fourier_transform();
    let mut v = Mat::zeros(d * n, d * n);
    for gamma in 0..n {
        let mut s = linalg::zeros(d);
        for chi in 0..n {
            s += range_of(dual.multiply(gamma, chi)) * range_of(chi).adjoint();
        }
        let q = f.adjoint() * linalg::unit(n, gamma, gamma) * &f;
        v += linalg::kron(&s, &q);
    }
    Ok(v)
}

/// Candidate `Σ_u c_u E(u)†⊗|u⟩⟨u|` from the spectral measure.
pub fn diagonal_candidate(e: &SpectralMeasure, phases: &[f64]) -> Mat {
    let g = e.group();
    let n = g.order();
    let mut v = Mat::zeros(e.ambient_dim() * n, e.ambient_dim() * n);
    for u in g.elements() {
        v += linalg::kron(&(e.unitary(u).adjoint() * linalg::phase(phases[u])), &linalg::unit(n, u, u));
    }
    v
}

/// Image of the MASA in the center of an inner crossed product:
/// `span{E(u)†⊗λ_u} = Ad(EW)(1⊗λ(U)″)`, a copy of `A = U″` with atom `χ`
/// sent to `E(χ)⊗Q` for the matching spectral projection `Q` of `λ`.
pub fn masa_center_image(e: &SpectralMeasure, cfg: &Config) -> Result<OperatorAlgebra> {
    let g = e.group();
    let n = g.order();
    let elems: Vec<Mat> = g.elements().map(|u| linalg::kron(&e.unitary(u).adjoint(), &g.regular(u))).collect();
    OperatorAlgebra::from_spanning(e.ambient_dim() * n, &elems, cfg)
}

/// Index of `γ⁻¹` for reports.
pub fn dual_inverse(dual: &DualGroup, gamma: usize) -> usize {
    dual.inverse(gamma)
}

//! Abelian dynamical systems on finite atom sets and covariant systems
//! `N = ℓ^∞(X)⊗B(H)` with `θ_g = β_g⊗Ad(U_g)`.
//!
//! Automorphisms of `ℓ^∞(X)` are atom permutations, so freeness and
//! ergodicity are combinatorial; the crossed-product statements about them
//! are checked with the generic machinery of [`crate::crossed`].

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use itertools::Itertools;

use crate::crossed::{self, GroupAction};
use crate::groups::FiniteAbelianGroup;
use crate::kt::UnitaryRepresentation;
use crate::linalg::{self, c, Mat};
use crate::modular;
use crate::vna::{self, BlockInvariant, OperatorAlgebra, State};
use crate::{Config, Error, Result};

/// Largest ambient dimension `|X|·dim H·|G|` of a crossed product built here.
pub const MAX_CROSSED_DIM: usize = 64;

/// An action `β` of `G` on `ℓ^∞(X)` by atom permutations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianDynamicalSystem {
    group: FiniteAbelianGroup,
    /// `perms[g][x] = β_g(x)`.
    perms: Vec<Vec<usize>>,
}

impl AbelianDynamicalSystem {
    /// Builds the action from one permutation per cyclic factor of `G`.
    pub fn from_generators(group: &FiniteAbelianGroup, atoms: usize, generators: &[Vec<usize>]) -> Result<Self> {
        if generators.len() != group.rank() {
            return Err(Error::pre(alloc::format!("expected {} generator permutations, found {}", group.rank(), generators.len())));
        }
        for p in generators {
            check_permutation(p, atoms)?;
        }
        let perms = group
            .elements()
            .map(|u| {
                let mut p: Vec<usize> = (0..atoms).collect();
                for (gen, &k) in generators.iter().zip(&group.tuple(u)) {
                    for _ in 0..k {
                        p = compose(gen, &p);
                    }
                }
                p
            })
            .collect();
        Self::from_element_perms(group, perms)
    }

    /// Builds the action from one permutation per group element and checks
    /// the homomorphism property.
    pub fn from_element_perms(group: &FiniteAbelianGroup, perms: Vec<Vec<usize>>) -> Result<Self> {
        if perms.len() != group.order() {
            return Err(Error::pre("one permutation per group element is required"));
        }
        let atoms = perms[0].len();
        if atoms == 0 {
            return Err(Error::pre("the atom set must be non-empty"));
        }
        for p in &perms {
            check_permutation(p, atoms)?;
        }
        if perms[0].iter().enumerate().any(|(x, &y)| x != y) {
            return Err(Error::NotAnAction(String::from("the identity does not act trivially")));
        }
        for g in group.elements() {
            for h in group.elements() {
                if compose(&perms[g], &perms[h]) != perms[group.compose(g, h)] {
                    return Err(Error::NotAnAction(alloc::format!("β_{g}∘β_{h} ≠ β_{}", group.compose(g, h))));
                }
            }
        }
        Ok(Self { group: group.clone(), perms })
    }

    /// `G` acting trivially on `atoms` points.
    pub fn trivial(group: &FiniteAbelianGroup, atoms: usize) -> Self {
        Self { group: group.clone(), perms: vec![(0..atoms).collect(); group.order()] }
    }

    /// Translation action of `G` on itself.
    pub fn regular(group: &FiniteAbelianGroup) -> Self {
        let perms = group.elements().map(|g| group.elements().map(|x| group.compose(g, x)).collect()).collect();
        Self { group: group.clone(), perms }
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn atoms(&self) -> usize {
        self.perms[0].len()
    }

    pub fn perm(&self, g: usize) -> &[usize] {
        &self.perms[g]
    }

    pub fn generator_perms(&self) -> Vec<Vec<usize>> {
        self.group.generators().iter().map(|&g| self.perms[g].clone()).collect()
    }

    /// Orbits of the atom set, each sorted, ordered by smallest atom.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.atoms()];
        let mut out = Vec::new();
        for x in 0..self.atoms() {
            if seen[x] {
                continue;
            }
            let orbit: Vec<usize> = self.perms.iter().map(|p| p[x]).sorted().dedup().collect();
            for &y in &orbit {
                seen[y] = true;
            }
            out.push(orbit);
        }
        out
    }

    /// `P_g|x⟩ = |β_g(x)⟩`.
    pub fn permutation_matrix(&self, g: usize) -> Mat {
        permutation_matrix(&self.perms[g])
    }

    pub fn algebra(&self) -> OperatorAlgebra {
        OperatorAlgebra::diagonal(self.atoms())
    }

    /// The action on `ℓ^∞(X)` as diagonal matrices, `β_g = Ad(P_g)`.
    pub fn action(&self, cfg: &Config) -> Result<GroupAction> {
        let implementers = self.group.elements().map(|g| self.permutation_matrix(g)).collect();
        GroupAction::spatial(&self.algebra(), &self.group, implementers, cfg)
    }

    /// The system with atoms renamed by `sigma` (`x ↦ sigma[x]`).
    pub fn relabel(&self, sigma: &[usize]) -> Result<Self> {
        check_permutation(sigma, self.atoms())?;
        let inverse = invert(sigma);
        let perms = self.perms.iter().map(|p| compose(sigma, &compose(p, &inverse))).collect();
        Ok(Self { group: self.group.clone(), perms })
    }

    /// Atoms fixed by `β_g`.
    pub fn fixed_atoms(&self, g: usize) -> Vec<usize> {
        (0..self.atoms()).filter(|&x| self.perms[g][x] == x).collect()
    }
}

fn check_permutation(p: &[usize], atoms: usize) -> Result<()> {
    let mut seen = vec![false; atoms];
    if p.len() != atoms {
        return Err(Error::NotAnAction(alloc::format!("{p:?} does not act on {atoms} atoms")));
    }
    for &y in p {
        if y >= atoms || seen[y] {
            return Err(Error::NotAnAction(alloc::format!("{p:?} is not a permutation")));
        }
        seen[y] = true;
    }
    Ok(())
}

/// `(a∘b)(x) = a(b(x))`.
fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&y| a[y]).collect()
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut out = vec![0; p.len()];
    for (x, &y) in p.iter().enumerate() {
        out[y] = x;
    }
    out
}

fn permutation_matrix(p: &[usize]) -> Mat {
    let n = p.len();
    let mut m = linalg::zeros(n);
    for (x, &y) in p.iter().enumerate() {
        m[(y, x)] = c(1.0, 0.0);
    }
    m
}

/// No `β_g` with `g ≠ e` fixes an atom.
pub fn is_free(sys: &AbelianDynamicalSystem) -> bool {
    sys.group.elements().skip(1).all(|g| sys.fixed_atoms(g).is_empty())
}

/// The action is transitive, so only constants are invariant.
pub fn is_ergodic(sys: &AbelianDynamicalSystem) -> bool {
    sys.orbits().len() == 1
}

/// Only the identity acts trivially.
pub fn is_faithful(sys: &AbelianDynamicalSystem) -> bool {
    sys.group.elements().skip(1).all(|g| sys.fixed_atoms(g).len() < sys.atoms())
}

/// Every action of `group` on `atoms` points: all assignments of commuting
/// permutations to the cyclic factors with orders dividing the factor
/// orders.
pub fn enumerate_actions(group: &FiniteAbelianGroup, atoms: usize) -> Vec<AbelianDynamicalSystem> {
    let identity: Vec<usize> = (0..atoms).collect();
    let candidates: Vec<Vec<Vec<usize>>> = group
        .orders()
        .iter()
        .map(|&n| {
            (0..atoms)
                .permutations(atoms)
                .filter(|p| {
                    let mut q = identity.clone();
                    for _ in 0..n {
                        q = compose(p, &q);
                    }
                    q == identity
                })
                .collect()
        })
        .collect();
    candidates
        .iter()
        .map(|c| c.iter())
        .multi_cartesian_product()
        .filter(|gens| gens.iter().tuple_combinations().all(|(a, b)| compose(a, b) == compose(b, a)))
        .map(|gens| {
            let gens: Vec<Vec<usize>> = gens.into_iter().cloned().collect();
            AbelianDynamicalSystem::from_generators(group, atoms, &gens).expect("commuting generators of matching order")
        })
        .collect()
}

fn check_size(ambient: usize) -> Result<()> {
    if ambient > MAX_CROSSED_DIM {
        return Err(Error::SizeLimit { ambient, limit: MAX_CROSSED_DIM });
    }
    Ok(())
}

fn image(action: &GroupAction, a: &OperatorAlgebra, cfg: &Config) -> Result<OperatorAlgebra> {
    let d = a.ambient_dim() * action.group().order();
    let imgs: Vec<Mat> = a.basis_matrices().iter().map(|x| action.pi(x)).collect();
    OperatorAlgebra::from_spanning(d, &imgs, cfg)
}

/// Clause verdicts for `Q = ℓ^∞(X)⋊_βG`.
#[derive(Clone, Debug)]
pub struct Proposition2Report {
    pub free: bool,
    pub ergodic: bool,
    /// `π_β(A)` is maximal abelian in `Q`.
    pub masa: bool,
    pub factor: bool,
    pub fixed_point_dim: usize,
    pub center_dim: usize,
    /// `Z(Q) = π_β(A^β)`.
    pub center_is_fixed_points: bool,
    pub invariant: BlockInvariant,
    /// `free ⇔ masa`.
    pub clause_i: bool,
    /// For a free action: `factor ⇔ ergodic` and `Z(Q) = π_β(A^β)`.
    pub clause_ii: Option<bool>,
}

impl Proposition2Report {
    pub fn passed(&self) -> bool {
        self.clause_i && self.clause_ii.unwrap_or(true)
    }
}

pub fn proposition2_check(sys: &AbelianDynamicalSystem, cfg: &Config) -> Result<Proposition2Report> {
    check_size(sys.atoms() * sys.group.order())?;
    let action = sys.action(cfg)?;
    let q = crossed::crossed_product(&action, cfg)?;
    let pi_a = image(&action, action.algebra(), cfg)?;
    let masa = vna::is_masa(&pi_a, q.algebra(), cfg)?;
    let center = q.algebra().center(cfg)?;
    let fixed = crossed::fixed_point_algebra(&action, cfg);
    let pi_fixed = image(&action, &fixed, cfg)?;
    let free = is_free(sys);
    let ergodic = is_ergodic(sys);
    let factor = center.dim() == 1;
    let center_is_fixed_points = center.equals(&pi_fixed, cfg);
    Ok(Proposition2Report {
        free,
        ergodic,
        masa,
        factor,
        fixed_point_dim: fixed.dim(),
        center_dim: center.dim(),
        center_is_fixed_points,
        invariant: q.invariant().clone(),
        clause_i: free == masa,
        clause_ii: free.then_some(factor == ergodic && center_is_fixed_points),
    })
}

/// `N = ℓ^∞(X)⊗B(H)` with `θ_g = β_g⊗Ad(U_g)`, atoms as the first
/// Kronecker factor.
#[derive(Clone, Debug)]
pub struct CovariantSystem {
    central: AbelianDynamicalSystem,
    rep: UnitaryRepresentation,
}

impl CovariantSystem {
    pub fn new(central: AbelianDynamicalSystem, rep: UnitaryRepresentation) -> Result<Self> {
        if rep.group() != central.group() {
            return Err(Error::InvalidGroup(String::from("the representation and the atom action use different groups")));
        }
        Ok(Self { central, rep })
    }

    /// `N = ℓ^∞(X)` with `H = ℂ`.
    pub fn abelian(central: AbelianDynamicalSystem) -> Self {
        let rep = UnitaryRepresentation::trivial(central.group(), 1);
        Self { central, rep }
    }

    pub fn central(&self) -> &AbelianDynamicalSystem {
        &self.central
    }

    pub fn representation(&self) -> &UnitaryRepresentation {
        &self.rep
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        self.central.group()
    }

    pub fn fiber_dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.central.atoms() * self.fiber_dim()
    }

    /// `N = ⊕_x B(H)`.
    pub fn algebra(&self) -> OperatorAlgebra {
        let h = self.fiber_dim();
        OperatorAlgebra::from_blocks(&vec![(h, 1); self.central.atoms()]).expect("non-empty layout")
    }

    /// `Z(N) = ℓ^∞(X)⊗1`.
    pub fn center(&self) -> OperatorAlgebra {
        let h = self.fiber_dim();
        let x = self.central.atoms();
        let gens: Vec<Mat> = (0..x).map(|a| linalg::kron(&linalg::unit(x, a, a), &linalg::identity(h))).collect();
        OperatorAlgebra::from_spanning(x * h, &gens, &Config::default()).expect("diagonal projections")
    }

    fn implementers(&self) -> Vec<Mat> {
        self.group().elements().map(|g| linalg::kron(&self.central.permutation_matrix(g), self.rep.get(g))).collect()
    }

    /// `θ` on `N`.
    pub fn action(&self, cfg: &Config) -> Result<GroupAction> {
        GroupAction::spatial(&self.algebra(), self.group(), self.implementers(), cfg)
    }

    /// `β` on `Z(N)`, implemented by the same unitaries as `θ`.
    pub fn central_action(&self, cfg: &Config) -> Result<GroupAction> {
        GroupAction::spatial(&self.center(), self.group(), self.implementers(), cfg)
    }

    pub fn is_centrally_free(&self) -> bool {
        is_free(&self.central)
    }

    pub fn is_centrally_ergodic(&self) -> bool {
        is_ergodic(&self.central)
    }
}

/// One displayed commutant relation, both sides as subspaces of `M`.
#[derive(Clone, Debug)]
pub struct RelationVerdict {
    pub name: &'static str,
    pub left_dim: usize,
    pub right_dim: usize,
    pub residual: f64,
    pub holds: bool,
}

fn relation(name: &'static str, left: &OperatorAlgebra, right: &OperatorAlgebra, cfg: &Config) -> RelationVerdict {
    let residual = if left.dim() == right.dim() { left.equality_residual(right) } else { 1.0 };
    RelationVerdict { name, left_dim: left.dim(), right_dim: right.dim(), residual, holds: left.equals(right, cfg) }
}

/// Commutant relations inside `M = N⋊_θG` and the factoriality chain.
#[derive(Clone, Debug)]
pub struct Proposition3Report {
    pub centrally_free: bool,
    /// `false` when central freeness fails; the relations are still
    /// computed.
    pub covered_by_hypothesis: bool,
    pub relations: Vec<RelationVerdict>,
    /// `Z(M) = Z(Q) = π_β(Z(N)^β)`.
    pub corollary_chain: bool,
    pub m_is_factor: bool,
    pub centrally_ergodic: bool,
    pub invariant: BlockInvariant,
}

impl Proposition3Report {
    pub fn relations_hold(&self) -> bool {
        self.relations.iter().all(|r| r.holds)
    }

    /// Every relation and the chain hold whenever the hypothesis applies.
    pub fn passed(&self) -> bool {
        !self.covered_by_hypothesis
            || (self.relations_hold() && self.corollary_chain && self.m_is_factor == self.centrally_ergodic)
    }
}

pub fn proposition3_check(cov: &CovariantSystem, cfg: &Config) -> Result<Proposition3Report> {
    let order = cov.group().order();
    check_size(cov.ambient_dim() * order)?;
    let theta = cov.action(cfg)?;
    let beta = cov.central_action(cfg)?;
    let m = crossed::crossed_product(&theta, cfg)?;
    let d = m.ambient_dim();
    let pi_n = image(&theta, theta.algebra(), cfg)?;
    let pi_z = image(&theta, &cov.center(), cfg)?;
    let mut q_gens: Vec<Mat> = cov.center().basis_matrices().iter().map(|x| theta.pi(x)).collect();
    q_gens.extend(cov.group().generators().iter().map(|&g| theta.lambda(g)));
    let q = vna::generate(&q_gens, d, cfg)?;
    let fixed_n = crossed::fixed_point_algebra(&theta, cfg);
    let pi_fixed_n = image(&theta, &fixed_n, cfg)?;

    let rel1 = m.algebra().relative_commutant(&pi_n.basis_matrices(), cfg)?;
    let rel2 = m.algebra().relative_commutant(&pi_z.basis_matrices(), cfg)?;
    let rel3 = m.algebra().relative_commutant(&q.basis_matrices(), cfg)?;
    let relations = vec![
        relation("pi_beta(Z(N)) = M ∩ pi_theta(N)'", &pi_z, &rel1, cfg),
        relation("pi_theta(N) = M ∩ pi_beta(Z(N))'", &pi_n, &rel2, cfg),
        relation("pi_theta(N^theta) = M ∩ Q'", &pi_fixed_n, &rel3, cfg),
    ];

    let z_m = m.algebra().center(cfg)?;
    let z_q = q.center(cfg)?;
    let central_fixed = crossed::fixed_point_algebra(&beta, cfg);
    let pi_central_fixed = image(&theta, &central_fixed, cfg)?;
    let corollary_chain = z_m.equals(&z_q, cfg) && z_q.equals(&pi_central_fixed, cfg);
    let centrally_free = cov.is_centrally_free();
    Ok(Proposition3Report {
        centrally_free,
        covered_by_hypothesis: centrally_free,
        relations,
        corollary_chain,
        m_is_factor: z_m.dim() == 1,
        centrally_ergodic: cov.is_centrally_ergodic(),
        invariant: m.invariant().clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeVerdict {
    /// The central system is the translation flow of `G`.
    TypeI,
    /// Not flow-isomorphic, with a `β`-invariant measure.
    TypeIIByCriterion,
    /// Not flow-isomorphic, without a `β`-invariant measure.
    TypeIIIByCriterion,
    /// The crossed product has a nontrivial center.
    NotAFactor,
}

impl TypeVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            TypeVerdict::TypeI => "type I",
            TypeVerdict::TypeIIByCriterion => "type II by criterion (ii)",
            TypeVerdict::TypeIIIByCriterion => "type III by criterion (iii)",
            TypeVerdict::NotAFactor => "not a factor",
        }
    }
}

pub const FINITE_TYPE_NOTE: &str = "every finite-dimensional factor is type I; the type II and type III criteria \
     can only be exercised as contrapositives here";

#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: TypeVerdict,
    pub centrally_ergodic: bool,
    pub centrally_free: bool,
    /// `flow[g] = β_g(x₀)`, a `G`-equivariant bijection from the regular
    /// action, when one exists.
    pub flow: Option<Vec<usize>>,
    /// Normalized `β`-invariant weights on the atoms, when strictly positive.
    pub invariant_measure: Option<Vec<f64>>,
    pub m_is_factor: bool,
    pub invariant: BlockInvariant,
    /// A factor crossed product comes with a flow isomorphism.
    pub consistent: bool,
    pub note: &'static str,
}

/// Orbit sweep from atom 0: `g ↦ β_g(0)`, kept only if it is a bijection
/// intertwining translation with `β`.
pub fn flow_isomorphism(sys: &AbelianDynamicalSystem) -> Option<Vec<usize>> {
    let group = sys.group();
    if sys.atoms() != group.order() {
        return None;
    }
    let flow: Vec<usize> = group.elements().map(|g| sys.perm(g)[0]).collect();
    if flow.iter().copied().sorted().dedup().count() != sys.atoms() {
        return None;
    }
    let equivariant =
        group.elements().all(|h| group.elements().all(|g| sys.perm(h)[flow[g]] == flow[group.compose(h, g)]));
    equivariant.then_some(flow)
}

/// Solves `(P_g − 1)w = 0` for all generators and returns the projection of
/// the constant weight onto the solution space, normalized, when it is
/// strictly positive.
pub fn invariant_measure(sys: &AbelianDynamicalSystem, cfg: &Config) -> Option<Vec<f64>> {
    let x = sys.atoms();
    let gens = sys.group().generators();
    let mut stacked = Mat::zeros(x * gens.len().max(1), x);
    for (k, &g) in gens.iter().enumerate() {
        stacked.view_mut((k * x, 0), (x, x)).copy_from(&(sys.permutation_matrix(g) - linalg::identity(x)));
    }
    let null = linalg::null_space(&stacked, cfg.tol * 10.0);
    let ones = linalg::CVec::from_element(x, c(1.0, 0.0));
    let w = &null * (null.adjoint() * ones);
    let total: f64 = w.iter().map(|v| v.re).sum();
    if total <= 0.0 {
        return None;
    }
    let w: Vec<f64> = w.iter().map(|v| v.re / total).collect();
    w.iter().all(|&v| v > cfg.tol).then_some(w)
}

pub fn classify_type(cov: &CovariantSystem, cfg: &Config) -> Result<Classification> {
    check_size(cov.ambient_dim() * cov.group().order())?;
    let sys = cov.central();
    let centrally_ergodic = is_ergodic(sys);
    let centrally_free = is_free(sys);
    let flow = flow_isomorphism(sys);
    let invariant_measure = invariant_measure(sys, cfg);
    let m = crossed::crossed_product(&cov.action(cfg)?, cfg)?;
    let m_is_factor = m.invariant().is_factor();
    let verdict = if !centrally_ergodic || !m_is_factor {
        TypeVerdict::NotAFactor
    } else if flow.is_some() {
        TypeVerdict::TypeI
    } else if invariant_measure.is_some() {
        TypeVerdict::TypeIIByCriterion
    } else {
        TypeVerdict::TypeIIIByCriterion
    };
    let consistent = !m_is_factor || flow.is_some();
    Ok(Classification {
        verdict,
        centrally_ergodic,
        centrally_free,
        flow,
        invariant_measure,
        m_is_factor,
        invariant: m.invariant().clone(),
        consistent,
        note: FINITE_TYPE_NOTE,
    })
}

pub const MODULAR_SPECTRUM_NOTE: &str = "at finite dimension the intersection is {1}; the type III values are unreachable";

#[derive(Clone, Debug)]
pub struct ModularSpectrumReport {
    /// `∩_φ ∪_g Spec(Δ_{φ∘θ_g,φ})`, ascending and deduplicated.
    pub values: Vec<f64>,
    /// `∪_g Spec(Δ_{φ∘θ_g,φ})` per weight, the tracial weight last.
    pub per_weight: Vec<Vec<f64>>,
    pub note: &'static str,
}

/// Intersects relative modular spectra over the supplied faithful weights
/// on `N` together with the tracial weight.
pub fn modular_spectrum(cov: &CovariantSystem, weights: &[State], cfg: &Config) -> Result<ModularSpectrumReport> {
    let theta = cov.action(cfg)?;
    let n = theta.algebra();
    let d = cov.ambient_dim();
    let mut family: Vec<State> = weights.to_vec();
    family.push(State::tracial(d));
    let tol = cfg.tol.max(1e-12) * 100.0;
    let mut per_weight = Vec::with_capacity(family.len());
    for phi in &family {
        let rho = modular::density_in(n, phi, cfg)?;
        let mut values = Vec::new();
        for g in cov.group().elements() {
            let shifted = State::from_density(theta.apply_inverse(g, &rho), cfg)?;
            let rel = modular::relative_modular(n, &shifted, phi, cfg)?;
            values.extend(linalg::hermitian_eigen(&rel).0);
        }
        per_weight.push(dedup_sorted(values, tol));
    }
    let mut values = per_weight[0].clone();
    for other in &per_weight[1..] {
        values.retain(|v| other.iter().any(|w| (v - w).abs() <= tol * v.max(1.0)));
    }
    Ok(ModularSpectrumReport { values, per_weight, note: MODULAR_SPECTRUM_NOTE })
}

fn dedup_sorted(mut values: Vec<f64>, tol: f64) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for v in values {
        if out.last().map_or(true, |&last| (v - last).abs() > tol * v.max(1.0)) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diag;
    use proptest::prelude::*;

    fn cfg() -> Config {
        Config::default()
    }

    fn z(n: usize) -> FiniteAbelianGroup {
        FiniteAbelianGroup::cyclic(n).unwrap()
    }

    fn klein() -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(vec![2, 2]).unwrap()
    }

    fn sys(group: &FiniteAbelianGroup, atoms: usize, gens: &[&[usize]]) -> AbelianDynamicalSystem {
        let gens: Vec<Vec<usize>> = gens.iter().map(|g| g.to_vec()).collect();
        AbelianDynamicalSystem::from_generators(group, atoms, &gens).unwrap()
    }

    fn subsets(n: usize) -> impl Iterator<Item = u32> {
        1..(1u32 << n)
    }

    fn image_set(p: &[usize], set: u32) -> u32 {
        (0..p.len()).filter(|&x| set & (1 << x) != 0).fold(0, |acc, x| acc | (1 << p[x]))
    }

    /// Projection form of freeness: every non-zero `P` and `g ≠ e` admit a
    /// non-zero `E ≤ P` with `Eβ_g(E) = 0`.
    fn free_by_projections(s: &AbelianDynamicalSystem) -> bool {
        let n = s.atoms();
        s.group().elements().skip(1).all(|g| {
            subsets(n).all(|p| subsets(n).filter(|e| e & !p == 0).any(|e| e & image_set(s.perm(g), e) == 0))
        })
    }

    fn ergodic_by_fixed_points(s: &AbelianDynamicalSystem) -> bool {
        crossed::fixed_point_algebra(&s.action(&cfg()).unwrap(), &cfg()).dim() == 1
    }

    #[test]
    fn freeness_examples() {
        assert!(is_free(&AbelianDynamicalSystem::regular(&z(2))));
        assert!(!is_free(&sys(&z(2), 3, &[&[1, 0, 2]])));
        assert!(is_free(&AbelianDynamicalSystem::trivial(&FiniteAbelianGroup::trivial(), 3)));
    }

    #[test]
    fn ergodicity_examples() {
        assert!(is_ergodic(&AbelianDynamicalSystem::regular(&z(3))));
        let two_cycles = sys(&z(2), 4, &[&[1, 0, 3, 2]]);
        assert!(!is_ergodic(&two_cycles));
        assert_eq!(crossed::fixed_point_algebra(&two_cycles.action(&cfg()).unwrap(), &cfg()).dim(), 2);
        assert!(is_ergodic(&AbelianDynamicalSystem::trivial(&z(2), 1)));
    }

    #[test]
    fn invalid_actions_are_rejected() {
        assert!(matches!(
            AbelianDynamicalSystem::from_generators(&z(2), 3, &[vec![1, 2, 0]]),
            Err(Error::NotAnAction(_))
        ));
        assert!(matches!(AbelianDynamicalSystem::from_generators(&z(2), 2, &[vec![0, 0]]), Err(Error::NotAnAction(_))));
        // Non-commuting generators of Z_2×Z_2.
        assert!(AbelianDynamicalSystem::from_generators(&klein(), 3, &[vec![1, 0, 2], vec![0, 2, 1]]).is_err());
    }

    fn count_by_brute_force(group: &FiniteAbelianGroup, atoms: usize) -> usize {
        let all: Vec<Vec<usize>> = (0..atoms).permutations(atoms).collect();
        let id: Vec<usize> = (0..atoms).collect();
        let power = |p: &Vec<usize>, k: usize| (0..k).fold(id.clone(), |acc, _| compose(p, &acc));
        match group.orders() {
            [n] => all.iter().filter(|p| power(p, *n) == id).count(),
            [a, b] => all
                .iter()
                .flat_map(|p| all.iter().map(move |q| (p, q)))
                .filter(|(p, q)| power(p, *a) == id && power(q, *b) == id && compose(p, q) == compose(q, p))
                .count(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn enumeration_counts() {
        // Involution counts 1, 2, 4, 10 for Z_2.
        let z2: Vec<usize> = (1..=4).map(|k| enumerate_actions(&z(2), k).len()).collect();
        assert_eq!(z2, [1, 2, 4, 10]);
        for g in [z(2), z(3), z(4), klein()] {
            for k in 1..=4 {
                assert_eq!(enumerate_actions(&g, k).len(), count_by_brute_force(&g, k), "{:?} on {k}", g.orders());
            }
        }
    }

    #[test]
    fn combinatorial_predicates_match_operator_definitions() {
        for g in [z(2), z(3), z(4), klein()] {
            for k in 1..=4 {
                for s in enumerate_actions(&g, k) {
                    assert_eq!(is_free(&s), free_by_projections(&s));
                    assert_eq!(is_ergodic(&s), ergodic_by_fixed_points(&s));
                    // Transitive abelian actions have a single stabilizer, so
                    // an ergodic action is free exactly when it is faithful.
                    if is_ergodic(&s) {
                        assert_eq!(is_free(&s), is_faithful(&s));
                    }
                }
            }
        }
    }

    #[test]
    fn ergodic_but_not_free_actions_exist() {
        let point = AbelianDynamicalSystem::trivial(&z(2), 1);
        assert!(is_ergodic(&point) && !is_free(&point) && !is_faithful(&point));
        let r = proposition2_check(&point, &cfg()).unwrap();
        // ℂ⋊Z_2 ≅ ℂ², so ergodicity does not give a factor without freeness.
        assert!(!r.factor && r.clause_i);
        let halved = sys(&z(4), 2, &[&[1, 0]]);
        assert!(is_ergodic(&halved) && !is_free(&halved));
    }

    #[test]
    fn proposition2_examples() {
        let r = proposition2_check(&AbelianDynamicalSystem::regular(&z(2)), &cfg()).unwrap();
        assert!(r.free && r.ergodic && r.masa && r.factor && r.passed());
        assert_eq!(r.invariant.abstract_form(), BlockInvariant::new(vec![(2, 1)]));

        let r = proposition2_check(&sys(&z(2), 3, &[&[1, 0, 2]]), &cfg()).unwrap();
        assert!(!r.free && !r.masa && r.clause_i && r.clause_ii.is_none());

        let r = proposition2_check(&sys(&z(2), 4, &[&[1, 0, 3, 2]]), &cfg()).unwrap();
        assert!(r.free && !r.ergodic && !r.factor && r.passed());
        assert_eq!(r.center_dim, 2);
        assert_eq!(r.fixed_point_dim, 2);
        assert!(r.center_is_fixed_points);
    }

    #[test]
    fn proposition2_size_limit() {
        let g = z(5);
        let s = AbelianDynamicalSystem::trivial(&g, 13);
        assert!(matches!(proposition2_check(&s, &cfg()), Err(Error::SizeLimit { ambient: 65, limit: 64 })));
    }

    fn sigma_x() -> Mat {
        Mat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn swap_with_fiber() -> CovariantSystem {
        let rep = UnitaryRepresentation::from_generators(&z(2), &[sigma_x()], &cfg()).unwrap();
        CovariantSystem::new(AbelianDynamicalSystem::regular(&z(2)), rep).unwrap()
    }

    #[test]
    fn proposition3_examples() {
        let abelian = CovariantSystem::abelian(AbelianDynamicalSystem::regular(&z(2)));
        let r = proposition3_check(&abelian, &cfg()).unwrap();
        assert!(r.covered_by_hypothesis && r.relations_hold() && r.corollary_chain && r.passed(), "{r:?}");

        let r = proposition3_check(&swap_with_fiber(), &cfg()).unwrap();
        assert!(r.relations_hold() && r.corollary_chain && r.m_is_factor, "{r:?}");
        assert_eq!(r.invariant.abstract_form(), BlockInvariant::new(vec![(4, 1)]));

        let fixed = CovariantSystem::abelian(sys(&z(2), 3, &[&[1, 0, 2]]));
        let r = proposition3_check(&fixed, &cfg()).unwrap();
        assert!(!r.covered_by_hypothesis);
        assert!(!r.relations[0].holds);
    }

    #[test]
    fn proposition3_with_non_trivial_fiber_and_two_orbits() {
        let rep = UnitaryRepresentation::from_generators(&z(2), &[linalg::real_diag(&[1.0, -1.0])], &cfg()).unwrap();
        let cov = CovariantSystem::new(sys(&z(2), 4, &[&[1, 0, 3, 2]]), rep).unwrap();
        let r = proposition3_check(&cov, &cfg()).unwrap();
        assert!(r.passed() && !r.m_is_factor, "{r:?}");
    }

    #[test]
    fn classification_examples() {
        let r = classify_type(&CovariantSystem::abelian(AbelianDynamicalSystem::regular(&z(3))), &cfg()).unwrap();
        assert_eq!(r.verdict, TypeVerdict::TypeI);
        assert_eq!(r.invariant.abstract_form(), BlockInvariant::new(vec![(3, 1)]));
        assert_eq!(r.flow, Some(vec![0, 1, 2]));
        assert!(r.consistent && r.m_is_factor);

        let r = classify_type(&CovariantSystem::abelian(AbelianDynamicalSystem::regular(&z(2))), &cfg()).unwrap();
        let w = r.invariant_measure.unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);

        // Transitive but not free: the crossed product ℂ[Z_2] is not a factor.
        let r = classify_type(&CovariantSystem::abelian(AbelianDynamicalSystem::trivial(&z(2), 1)), &cfg()).unwrap();
        assert!(r.centrally_ergodic && !r.m_is_factor);
        assert_eq!(r.verdict, TypeVerdict::NotAFactor);

        let r = classify_type(&CovariantSystem::abelian(sys(&z(2), 4, &[&[1, 0, 3, 2]])), &cfg()).unwrap();
        assert_eq!(r.verdict, TypeVerdict::NotAFactor);
        assert!(!r.m_is_factor && r.consistent);
        // Orbit-averaged measure stays uniform.
        assert_eq!(r.invariant_measure.map(|w| w.len()), Some(4));
    }

    #[test]
    fn flow_is_an_equivariant_bijection() {
        let s = sys(&klein(), 4, &[&[2, 3, 0, 1], &[1, 0, 3, 2]]);
        let flow = flow_isomorphism(&s).unwrap();
        let g = s.group();
        for h in g.elements() {
            for x in g.elements() {
                assert_eq!(s.perm(h)[flow[x]], flow[g.compose(h, x)]);
            }
        }
        assert!(flow_isomorphism(&sys(&z(4), 4, &[&[1, 0, 3, 2]])).is_none());
    }

    #[test]
    fn modular_spectrum_examples() {
        let trivial = CovariantSystem::abelian(AbelianDynamicalSystem::trivial(&z(2), 2));
        let phi = State::from_density(real_diag(&[0.3, 0.7]), &cfg()).unwrap();
        let r = modular_spectrum(&trivial, &[phi.clone()], &cfg()).unwrap();
        assert_eq!(r.values.len(), 1);
        assert!((r.values[0] - 1.0).abs() < 1e-12);

        let swap = CovariantSystem::abelian(AbelianDynamicalSystem::regular(&z(2)));
        let r = modular_spectrum(&swap, &[], &cfg()).unwrap();
        assert_eq!(r.values.len(), 1);
        assert!((r.values[0] - 1.0).abs() < 1e-12);

        // Δ_{φ∘θ,φ} multiplies by (0.7/0.3, 0.3/0.7).
        let r = modular_spectrum(&swap, &[phi], &cfg()).unwrap();
        let expected = [0.3 / 0.7, 1.0, 0.7 / 0.3];
        assert!(r.per_weight[0].iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-10));
        assert_eq!(r.values.len(), 1);

        let bad = State::from_density(real_diag(&[1.0, 0.0]), &cfg()).unwrap();
        assert!(matches!(modular_spectrum(&swap, &[bad], &cfg()), Err(Error::NotFaithful { .. })));
    }

    #[test]
    fn modular_spectrum_contains_one_for_random_weights() {
        let cov = swap_with_fiber();
        let mut r = linalg::rng(1, 0);
        let weights: Vec<State> =
            (0..3).map(|_| State::from_density(linalg::random_faithful_density(&mut r, 4), &cfg()).unwrap()).collect();
        let report = modular_spectrum(&cov, &weights, &cfg()).unwrap();
        assert_eq!(report.values.len(), 1);
        assert!((report.values[0] - 1.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn classification_is_invariant_under_relabeling(pick in 0usize..1000, sigma in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle()) {
            let all = enumerate_actions(&klein(), 4);
            let s = &all[pick % all.len()];
            let t = s.relabel(&sigma).unwrap();
            let a = classify_type(&CovariantSystem::abelian(s.clone()), &cfg()).unwrap();
            let b = classify_type(&CovariantSystem::abelian(t), &cfg()).unwrap();
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert_eq!(a.invariant, b.invariant);
            prop_assert_eq!(a.m_is_factor, b.m_is_factor);
            prop_assert_eq!(a.flow.is_some(), b.flow.is_some());
        }
    }
}

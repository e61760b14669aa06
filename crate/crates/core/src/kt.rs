//! Multiplicative unitaries of a finite abelian group and the couplings
//! built from a spectral measure.
//!
//! - `V` on `ℓ²(Û)⊗ℓ²(Û)`: `|γ₁,γ₂⟩ ↦ |γ₁, γ₁γ₂⟩`.
//! - `W` on `ℓ²(U)⊗ℓ²(U)`: `|u₁,u₂⟩ ↦ |u₁−u₂, u₂⟩`, the Fourier conjugate
//!   of `V`.
//! - `V′` on `ℓ²(U)⊗ℓ²(U)`: `(V′ξ)(u₁,u₂) = ξ(u₁u₂, u₂)`. For abelian groups
//!   this is the same matrix as `W`.
//!
//! A [`SpectralMeasure`] labels each atom of an abelian algebra with the
//! character `χ(u) =` eigenvalue of the embedded unitary `U(u)` on the atom.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::groups::{root_of_unity_order, DualGroup, FiniteAbelianGroup};
use crate::linalg::{self, Mat, ONE};
use crate::vna::OperatorAlgebra;
use crate::{Config, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KtVariant {
    V,
    VPrime,
    W,
}

#[derive(Clone, Debug)]
pub struct KtOperator {
    variant: KtVariant,
    group: FiniteAbelianGroup,
    matrix: Mat,
}

impl KtOperator {
    pub fn variant(&self) -> KtVariant {
        self.variant
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    /// `‖X₁₂X₁₃X₂₃ − X₂₃X₁₂‖_F` on three copies of `ℓ²(G)`.
    pub fn pentagon_residual(&self) -> f64 {
        pentagon_residual(&self.matrix, self.group.order())
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }
}

fn permutation(n: usize, f: impl Fn(usize, usize) -> (usize, usize)) -> Mat {
    let mut m = Mat::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            let (x, y) = f(a, b);
            m[(x * n + y, a * n + b)] = ONE;
        }
    }
    m
}

pub fn build_v(dual: &DualGroup) -> KtOperator {
    let n = dual.order();
    let matrix = permutation(n, |g1, g2| (g1, dual.multiply(g1, g2)));
    KtOperator { variant: KtVariant::V, group: dual.as_group(), matrix }
}

pub fn build_w(group: &FiniteAbelianGroup) -> KtOperator {
    let n = group.order();
    let matrix = permutation(n, |u1, u2| (group.compose(u1, group.inverse(u2)), u2));
    KtOperator { variant: KtVariant::W, group: group.clone(), matrix }
}

pub fn build_v_prime(group: &FiniteAbelianGroup) -> KtOperator {
    let n = group.order();
    // (V′ξ)(u₁,u₂) = ξ(u₁u₂,u₂) is the pullback of |a,b⟩ ↦ |a−b,b⟩.
    let matrix = permutation(n, |a, b| (group.compose(a, group.inverse(b)), b));
    KtOperator { variant: KtVariant::VPrime, group: group.clone(), matrix }
}

/// `‖X₁₂X₁₃X₂₃ − X₂₃X₁₂‖_F` for an operator on `ℂ^n⊗ℂ^n`.
pub fn pentagon_residual(x: &Mat, n: usize) -> f64 {
    let dims = [n, n, n];
    let x12 = linalg::embed_two_legs(x, &dims, 0, 1);
    let x13 = linalg::embed_two_legs(x, &dims, 0, 2);
    let x23 = linalg::embed_two_legs(x, &dims, 1, 2);
    linalg::dist(&(&x12 * &x13 * &x23), &(&x23 * &x12))
}

/// `‖W − (F⊗F)†V(F⊗F)‖_F`.
pub fn fourier_conjugacy_residual(group: &FiniteAbelianGroup) -> f64 {
    let f = group.fourier_transform();
    let ff = linalg::kron(&f, &f);
    let v = build_v(&group.dual());
    let w = build_w(group);
    linalg::dist(w.matrix(), &(ff.adjoint() * v.matrix() * &ff))
}

/// `max_γ ‖V(λ_γ⊗1)V† − λ_γ⊗λ_γ‖_F`.
pub fn v_intertwining_residual(dual: &DualGroup) -> f64 {
    let v = build_v(dual);
    let id = linalg::identity(dual.order());
    (0..dual.order())
        .map(|g| {
            let l = dual.regular(g);
            linalg::dist(&(v.matrix() * linalg::kron(&l, &id) * v.matrix().adjoint()), &linalg::kron(&l, &l))
        })
        .fold(0.0, f64::max)
}

/// `max_u ‖W(λ_u⊗λ_u) − (1⊗λ_u)W‖_F`.
pub fn w_intertwining_residual(group: &FiniteAbelianGroup) -> f64 {
    let w = build_w(group);
    let id = linalg::identity(group.order());
    group
        .elements()
        .map(|u| {
            let l = group.regular(u);
            linalg::dist(&(w.matrix() * linalg::kron(&l, &l)), &(linalg::kron(&id, &l) * w.matrix()))
        })
        .fold(0.0, f64::max)
}

/// A unitary representation `u ↦ U(u)` of a finite abelian group, stored
/// per element in canonical order.
#[derive(Clone, Debug)]
pub struct UnitaryRepresentation {
    group: FiniteAbelianGroup,
    unitaries: Vec<Mat>,
}

impl UnitaryRepresentation {
    /// Builds `U(u) = Π_j U_j^{u_j}` from one unitary per cyclic factor and
    /// checks `U_j^{n_j} = 1`, unitarity and commutation.
    pub fn from_generators(group: &FiniteAbelianGroup, gens: &[Mat], cfg: &Config) -> Result<Self> {
        if gens.len() != group.rank() {
            return Err(Error::pre(alloc::format!(
                "expected {} generator unitaries, found {}",
                group.rank(),
                gens.len()
            )));
        }
        let d = gens.first().map(|g| g.nrows()).unwrap_or(1);
        for g in gens {
            if g.shape() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, found: g.nrows() });
            }
        }
        let unitaries = group
            .elements()
            .map(|u| {
                let t = group.tuple(u);
                let mut m = linalg::identity(d);
                for (g, &k) in gens.iter().zip(&t) {
                    for _ in 0..k {
                        m = &m * g;
                    }
                }
                m
            })
            .collect();
        let rep = Self { group: group.clone(), unitaries };
        rep.validate(cfg)?;
        Ok(rep)
    }

    pub fn from_elements(group: &FiniteAbelianGroup, unitaries: Vec<Mat>, cfg: &Config) -> Result<Self> {
        if unitaries.len() != group.order() {
            return Err(Error::pre("one unitary per group element is required"));
        }
        let rep = Self { group: group.clone(), unitaries };
        rep.validate(cfg)?;
        Ok(rep)
    }

    pub fn trivial(group: &FiniteAbelianGroup, d: usize) -> Self {
        Self { group: group.clone(), unitaries: (0..group.order()).map(|_| linalg::identity(d)).collect() }
    }

    /// Left regular representation on `ℓ²(G)`.
    pub fn regular(group: &FiniteAbelianGroup) -> Self {
        Self { group: group.clone(), unitaries: group.elements().map(|u| group.regular(u)).collect() }
    }

    fn validate(&self, cfg: &Config) -> Result<()> {
        let tol = cfg.tol.max(1e-12) * 10.0;
        for u in &self.unitaries {
            let r = linalg::unitarity_residual(u);
            if r > tol {
                return Err(Error::NotUnitary { residual: r });
            }
        }
        let g = &self.group;
        for a in g.elements() {
            for b in g.elements() {
                let lhs = &self.unitaries[a] * &self.unitaries[b];
                let r = linalg::dist(&lhs, &self.unitaries[g.compose(a, b)]);
                if r > tol * self.dim() as f64 {
                    return Err(Error::NotAnAction(alloc::format!(
                        "U({a})U({b}) differs from U({a}+{b}) by {r:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.unitaries.first().map(|u| u.nrows()).unwrap_or(0)
    }

    pub fn get(&self, u: usize) -> &Mat {
        &self.unitaries[u]
    }

    pub fn unitaries(&self) -> &[Mat] {
        &self.unitaries
    }

    pub fn generator_unitaries(&self) -> Vec<Mat> {
        self.group.generators().iter().map(|&g| self.unitaries[g].clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub projection: Mat,
    /// Index of the character in the canonical enumeration of `Û`.
    pub character: usize,
}

#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    group: FiniteAbelianGroup,
    d: usize,
    atoms: Vec<Atom>,
}

impl SpectralMeasure {
    /// Measure given directly by atoms and character labels (used for
    /// negative controls that relabel atoms).
    pub fn from_atoms(group: &FiniteAbelianGroup, atoms: Vec<Atom>, cfg: &Config) -> Result<Self> {
        let d = atoms.first().map(|a| a.projection.nrows()).ok_or_else(|| Error::pre("no atoms"))?;
        let mut sum = linalg::zeros(d);
        for a in &atoms {
            if a.character >= group.order() {
                return Err(Error::UnknownCharacter(a.character));
            }
            if a.projection.shape() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, found: a.projection.nrows() });
            }
            sum += &a.projection;
        }
        let r = linalg::dist(&sum, &linalg::identity(d));
        if r > cfg.tol.max(1e-12) * 10.0 * d as f64 {
            return Err(Error::pre(alloc::format!("atom projections do not sum to 1 (residual {r:e})")));
        }
        Ok(Self { group: group.clone(), d, atoms })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn dual(&self) -> DualGroup {
        self.group.dual()
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `E({χ})`: the sum of atoms labelled `χ` (zero if none).
    pub fn projection_of(&self, chi: usize) -> Mat {
        let mut p = linalg::zeros(self.d);
        for a in self.atoms.iter().filter(|a| a.character == chi) {
            p += &a.projection;
        }
        p
    }

    /// Characters appearing on atoms, in atom order, without repetition.
    pub fn support(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for a in &self.atoms {
            if !out.contains(&a.character) {
                out.push(a.character);
            }
        }
        out
    }

    /// Whether distinct atoms carry distinct characters (equivalently, the
    /// embedded group generates the whole abelian algebra).
    pub fn is_injective(&self) -> bool {
        self.support().len() == self.atoms.len()
    }

    /// `U_E(u) = Σ_atoms χ(u) E(atom)`.
    pub fn unitary(&self, u: usize) -> Mat {
        let mut m = linalg::zeros(self.d);
        for a in &self.atoms {
            m += a.projection.scale(1.0) * self.group.character_value(a.character, u);
        }
        m
    }

    pub fn representation(&self) -> UnitaryRepresentation {
        UnitaryRepresentation {
            group: self.group.clone(),
            unitaries: self.group.elements().map(|u| self.unitary(u)).collect(),
        }
    }

    /// Copy with the characters of atoms `i` and `j` exchanged.
    pub fn with_swapped_characters(&self, i: usize, j: usize) -> Result<Self> {
        if i >= self.atoms.len() || j >= self.atoms.len() {
            return Err(Error::pre("atom index out of range"));
        }
        let mut out = self.clone();
        let (ci, cj) = (out.atoms[i].character, out.atoms[j].character);
        out.atoms[i].character = cj;
        out.atoms[j].character = ci;
        Ok(out)
    }
}

/// Atoms of the abelian algebra `a` labelled by the characters of the
/// embedded representation `rep`.
pub fn spectral_measure(a: &OperatorAlgebra, rep: &UnitaryRepresentation, cfg: &Config) -> Result<SpectralMeasure> {
    let d = a.ambient_dim();
    if rep.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rep.dim() });
    }
    if !a.is_abelian(cfg) {
        return Err(Error::pre("algebra is not abelian"));
    }
    let group = rep.group();
    let gens = group.generators();
    for &g in &gens {
        let r = a.membership_residual(rep.get(g));
        if r >= cfg.tol.max(1e-12) * 10.0 {
            return Err(Error::pre(alloc::format!("embedded unitary U({g}) is not in A (residual {r:e})")));
        }
    }
    let sectors = a.sectors(cfg)?;
    let dual = group.dual();
    let tol = cfg.tol.max(1e-12) * 1e3;
    let mut atoms = Vec::with_capacity(sectors.len());
    for s in sectors {
        let rank = s.range.ncols() as f64;
        let mut values: Vec<Complex64> = Vec::with_capacity(gens.len());
        for (j, &g) in gens.iter().enumerate() {
            let u = rep.get(g);
            let lambda = (u * &s.projection).trace() / rank;
            let r = linalg::dist(&(u * &s.projection), &(s.projection.clone() * lambda));
            if r > tol {
                return Err(Error::pre("embedded unitary is not constant on an atom"));
            }
            if (lambda.norm() - 1.0).abs() > tol {
                return Err(Error::pre(alloc::format!("eigenvalue {lambda} is not on the unit circle")));
            }
            let n = group.orders()[j];
            match root_of_unity_order(lambda, n, tol) {
                Some(k) if n % k == 0 => {}
                _ => {
                    return Err(Error::pre(alloc::format!("eigenvalue {lambda} is not an {n}-th root of unity")));
                }
            }
            values.push(lambda);
        }
        let character = dual.match_values(&values, tol).ok_or(Error::UnknownCharacter(usize::MAX))?;
        atoms.push(Atom { projection: s.projection, character });
    }
    SpectralMeasure::from_atoms(group, atoms, cfg)
}

/// `E*(V) = Σ_atoms E(atom) ⊗ λ_χ` on `H⊗ℓ²(Û)`.
pub fn coupling_estar_v(e: &SpectralMeasure) -> Mat {
    let dual = e.dual();
    let n = dual.order();
    let mut m = Mat::zeros(e.d * n, e.d * n);
    for a in &e.atoms {
        m += linalg::kron(&a.projection, &dual.regular(a.character));
    }
    m
}

/// `EW = Σ_u U(u)† ⊗ |u⟩⟨u|` on `H⊗ℓ²(U)`, with `U` rebuilt from the atoms.
pub fn coupling_ew(e: &SpectralMeasure) -> Mat {
    let g = &e.group;
    let n = g.order();
    let mut m = Mat::zeros(e.d * n, e.d * n);
    for u in g.elements() {
        m += linalg::kron(&e.unitary(u).adjoint(), &linalg::unit(n, u, u));
    }
    m
}

/// `‖C₁₂C₁₃K₂₃ − K₂₃C₁₂‖_F` for a coupling `C` on `ℂ^d⊗ℂ^n` and a
/// multiplicative unitary `K` on `ℂ^n⊗ℂ^n`.
pub fn modified_pentagon_residual(coupling: &Mat, k: &Mat, d: usize, n: usize) -> f64 {
    let dims = [d, n, n];
    let c12 = linalg::embed_two_legs(coupling, &dims, 0, 1);
    let c13 = linalg::embed_two_legs(coupling, &dims, 0, 2);
    let k23 = linalg::embed_two_legs(k, &dims, 1, 2);
    linalg::dist(&(&c12 * &c13 * &k23), &(&k23 * &c12))
}

/// `max_u ‖EW(U(u)⊗λ_u) − (1⊗λ_u)EW‖_F`.
pub fn ew_intertwining_residual(e: &SpectralMeasure) -> f64 {
    let ew = coupling_ew(e);
    let g = &e.group;
    g.elements()
        .map(|u| {
            let l = g.regular(u);
            let lhs = &ew * linalg::kron(&e.unitary(u), &l);
            let rhs = linalg::kron(&linalg::identity(e.d), &l) * &ew;
            linalg::dist(&lhs, &rhs)
        })
        .fold(0.0, f64::max)
}

//! Finite abelian groups `Z_{n1} × … × Z_{nk}`, their Pontryagin duals, the
//! counting-measure invariant mean and the unitary Fourier transform.
//!
//! Elements and characters are addressed by their index in lexicographic
//! order of exponent tuples (last component varies fastest), so index `0` is
//! the identity element and the identity character `ι`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linalg::{self, c, phase, Mat, ONE};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteAbelianGroup {
    orders: Vec<usize>,
}

impl FiniteAbelianGroup {
    pub fn new(orders: Vec<usize>) -> Result<Self> {
        if let Some(pos) = orders.iter().position(|&n| n == 0) {
            return Err(Error::InvalidGroup(alloc::format!("factor {pos} has order 0")));
        }
        Ok(Self { orders })
    }

    pub fn trivial() -> Self {
        Self { orders: Vec::new() }
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        Self::new(alloc::vec![n])
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn order(&self) -> usize {
        self.orders.iter().product()
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn tuple(&self, index: usize) -> Vec<usize> {
        let mut out = alloc::vec![0; self.orders.len()];
        let mut rest = index;
        for (slot, &n) in out.iter_mut().zip(&self.orders).rev() {
            *slot = rest % n;
            rest /= n;
        }
        out
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        tuple.iter().zip(&self.orders).fold(0, |acc, (&u, &n)| acc * n + (u % n))
    }

    pub fn elements(&self) -> core::ops::Range<usize> {
        0..self.order()
    }

    pub fn compose(&self, a: usize, b: usize) -> usize {
        let (ta, tb) = (self.tuple(a), self.tuple(b));
        let sum: Vec<usize> =
            ta.iter().zip(&tb).zip(&self.orders).map(|((x, y), n)| (x + y) % n).collect();
        self.index(&sum)
    }

    pub fn inverse(&self, a: usize) -> usize {
        let t: Vec<usize> =
            self.tuple(a).iter().zip(&self.orders).map(|(x, n)| (n - x) % n).collect();
        self.index(&t)
    }

    /// The `j`-th canonical generator `(0,…,1,…,0)`.
    pub fn generator(&self, j: usize) -> usize {
        let mut t = alloc::vec![0; self.orders.len()];
        t[j] = 1 % self.orders[j];
        self.index(&t)
    }

    pub fn generators(&self) -> Vec<usize> {
        (0..self.rank()).map(|j| self.generator(j)).collect()
    }

    /// Regular representation `λ_u|v⟩ = |u+v⟩` on `ℓ²(G)`.
    pub fn regular(&self, u: usize) -> Mat {
        let n = self.order();
        let mut m = linalg::zeros(n);
        for v in 0..n {
            m[(self.compose(u, v), v)] = ONE;
        }
        m
    }

    /// Value of the character with exponent tuple `chi` at element `u`:
    /// `exp(2πi Σ_j a_j u_j / n_j)`.
    pub fn character_value(&self, chi: usize, u: usize) -> Complex64 {
        let (a, t) = (self.tuple(chi), self.tuple(u));
        let x: f64 = a
            .iter()
            .zip(&t)
            .zip(&self.orders)
            .map(|((&aj, &uj), &n)| ((aj * uj) % n) as f64 / n as f64)
            .sum();
        phase(x)
    }

    /// Pointer multiplication `m_γ|v⟩ = γ(v)|v⟩` on `ℓ²(G)`.
    pub fn character_multiplier(&self, chi: usize) -> Mat {
        let vals: Vec<Complex64> = self.elements().map(|v| self.character_value(chi, v)).collect();
        linalg::diag(&vals)
    }

    /// `(1/|G|) Σ_u f(u)`.
    pub fn invariant_mean(&self, f: impl Fn(usize) -> Complex64) -> Complex64 {
        let n = self.order();
        let s: Complex64 = self.elements().map(f).sum();
        s / n as f64
    }

    /// Unitary Fourier transform `F[γ,u] = conj(γ(u))/√|G|` from `ℓ²(G)` to
    /// `ℓ²(Ĝ)`.
    pub fn fourier_transform(&self) -> Mat {
        let n = self.order();
        let norm = 1.0 / libm::sqrt(n as f64);
        Mat::from_fn(n, n, |g, u| self.character_value(g, u).conj() * norm)
    }

    pub fn dual(&self) -> DualGroup {
        DualGroup { group: self.clone() }
    }
}

/// A character of a [`FiniteAbelianGroup`], identified by its exponent tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Character {
    group: FiniteAbelianGroup,
    exponents: Vec<usize>,
}

impl Character {
    pub fn new(group: &FiniteAbelianGroup, exponents: Vec<usize>) -> Result<Self> {
        if exponents.len() != group.rank() {
            return Err(Error::DimensionMismatch { expected: group.rank(), found: exponents.len() });
        }
        if exponents.iter().zip(group.orders()).any(|(a, n)| a >= n) {
            return Err(Error::InvalidGroup(alloc::format!(
                "exponents {exponents:?} out of range for {:?}",
                group.orders()
            )));
        }
        Ok(Self { group: group.clone(), exponents })
    }

    pub fn index(&self) -> usize {
        self.group.index(&self.exponents)
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    pub fn eval(&self, u: usize) -> Complex64 {
        self.group.character_value(self.index(), u)
    }

    pub fn is_identity(&self) -> bool {
        self.exponents.iter().all(|&a| a == 0)
    }
}

/// The dual group `Ĝ`, enumerated in the same lexicographic order as `G`;
/// the group law is pointwise multiplication, i.e. addition of exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualGroup {
    group: FiniteAbelianGroup,
}

impl DualGroup {
    /// Index of the neutral character `ι`.
    pub const IOTA: usize = 0;

    pub fn host(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn character(&self, index: usize) -> Character {
        Character { group: self.group.clone(), exponents: self.group.tuple(index) }
    }

    pub fn characters(&self) -> Vec<Character> {
        self.group.elements().map(|i| self.character(i)).collect()
    }

    pub fn value(&self, chi: usize, u: usize) -> Complex64 {
        self.group.character_value(chi, u)
    }

    /// Product of characters `χγ`.
    pub fn multiply(&self, chi: usize, gamma: usize) -> usize {
        self.group.compose(chi, gamma)
    }

    pub fn inverse(&self, chi: usize) -> usize {
        self.group.inverse(chi)
    }

    /// The dual group viewed as an abstract group in its own right.
    pub fn as_group(&self) -> FiniteAbelianGroup {
        self.group.clone()
    }

    /// Regular representation `λ_χ|γ⟩ = |χγ⟩` on `ℓ²(Ĝ)`.
    pub fn regular(&self, chi: usize) -> Mat {
        self.group.regular(chi)
    }

    /// Finds the character whose values on the canonical generators match
    /// `values` within `tol`.
    pub fn match_values(&self, values: &[Complex64], tol: f64) -> Option<usize> {
        let gens = self.group.generators();
        self.group.elements().find(|&chi| {
            gens.iter().zip(values).all(|(&g, &v)| (self.value(chi, g) - v).norm() <= tol)
        })
    }
}

/// Evaluation of a character table as a matrix `T[χ,u] = χ(u)`.
pub fn character_table(group: &FiniteAbelianGroup) -> Mat {
    let n = group.order();
    Mat::from_fn(n, n, |chi, u| group.character_value(chi, u))
}

pub(crate) fn root_of_unity_order(z: Complex64, max_order: usize, tol: f64) -> Option<usize> {
    (1..=max_order).find(|&k| {
        let mut p = c(1.0, 0.0);
        for _ in 0..k {
            p *= z;
        }
        (p - ONE).norm() <= tol
    })
}

//! Measurement instruments driven by the coupling `E*(V)`.
//!
//! The pointer lives on `ℓ²(Û)` and starts in the neutral position `|ι⟩`.
//! For an outcome set `Δ ⊆ Spec(A)` the instrument pairs
//! `C†(B⊗χ_Δ)C` with `ρ⊗|ι⟩⟨ι|`, where `C = E*(V)` and `χ_Δ` is the sum of
//! pointer projections `|γ⟩⟨γ|` over `γ ∈ Δ`.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::groups::DualGroup;
use crate::kt::{coupling_estar_v, SpectralMeasure};
use crate::linalg::{self, CVec, Mat, ONE};
use crate::vna::State;
use crate::{Config, Error, Result};

const SALT_SAMPLE: u64 = 0x21;

#[derive(Clone, Debug)]
pub struct InstrumentResult {
    pub outcome: Vec<usize>,
    pub probability: f64,
    /// `Tr_pointer[(1⊗χ_Δ)C(ρ⊗|ι⟩⟨ι|)C†(1⊗χ_Δ)]`; its trace is the
    /// probability.
    pub unnormalized: Mat,
    /// `None` when the probability vanishes.
    pub post_state: Option<Mat>,
}

#[derive(Clone, Debug)]
pub struct Instrument {
    measure: SpectralMeasure,
    coupling: Mat,
    d: usize,
    n: usize,
}

impl Instrument {
    pub fn new(measure: &SpectralMeasure) -> Self {
        let coupling = coupling_estar_v(measure);
        Self::with_coupling(measure, coupling)
    }

    /// Instrument reading outcomes against `measure` but coupling through an
    /// arbitrary unitary (negative controls).
    pub fn with_coupling(measure: &SpectralMeasure, coupling: Mat) -> Self {
        let d = measure.ambient_dim();
        let n = measure.group().order();
        Self { measure: measure.clone(), coupling, d, n }
    }

    pub fn coupling(&self) -> &Mat {
        &self.coupling
    }

    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }

    /// Characters that label at least one atom.
    pub fn spectrum(&self) -> Vec<usize> {
        self.measure.support()
    }

    fn check_outcome(&self, delta: &[usize]) -> Result<()> {
        let spec = self.spectrum();
        match delta.iter().find(|c| !spec.contains(c)) {
            Some(&c) => Err(Error::UnknownCharacter(c)),
            None => Ok(()),
        }
    }

    fn check_state(&self, state: &State) -> Result<()> {
        if state.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: state.dim() });
        }
        Ok(())
    }

    fn pointer_projection(&self, delta: &[usize]) -> Mat {
        let mut p = linalg::zeros(self.n);
        let mut seen: Vec<usize> = Vec::new();
        for &g in delta {
            if !seen.contains(&g) {
                p[(g, g)] = ONE;
                seen.push(g);
            }
        }
        p
    }

    fn neutral_input(&self, state: &State) -> Mat {
        linalg::kron(state.density(), &linalg::unit(self.n, DualGroup::IOTA, DualGroup::IOTA))
    }

    /// `(ω⊗|ι⟩⟨ι|)(C†(B⊗χ_Δ)C)`.
    pub fn evaluate(&self, delta: &[usize], state: &State, b: &Mat) -> Result<Complex64> {
        self.check_outcome(delta)?;
        self.check_state(state)?;
        if b.shape() != (self.d, self.d) {
            return Err(Error::DimensionMismatch { expected: self.d, found: b.nrows() });
        }
        let heis = self.coupling.adjoint() * linalg::kron(b, &self.pointer_projection(delta)) * &self.coupling;
        Ok((self.neutral_input(state) * heis).trace())
    }

    /// Same pairing with the pointer functional realised as the invariant
    /// mean: slicing by `ω` leaves `Y` on `ℓ²(Û)`; moved to `ℓ²(U)` by the
    /// Fourier transform it is paired as `m_U(u ↦ ⟨δ_u|F†YF|𝟙⟩)`.
    pub fn evaluate_by_invariant_mean(&self, delta: &[usize], state: &State, b: &Mat) -> Result<Complex64> {
        self.check_outcome(delta)?;
        self.check_state(state)?;
        let heis = self.coupling.adjoint() * linalg::kron(b, &self.pointer_projection(delta)) * &self.coupling;
        let n = self.n;
        let rho = state.density();
        // Y[γ,γ'] = Σ_{ij} ρ_{ji} X[(i,γ),(j,γ')].
        let mut y = linalg::zeros(n);
        for g in 0..n {
            for h in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..self.d {
                    for j in 0..self.d {
                        s += rho[(j, i)] * heis[(i * n + g, j * n + h)];
                    }
                }
                y[(g, h)] = s;
            }
        }
        let group = self.measure.group();
        let f = group.fourier_transform();
        let yu = f.adjoint() * y * &f;
        let ones = CVec::from_element(n, ONE);
        let col = &yu * ones;
        Ok(group.invariant_mean(|u| col[u]))
    }

    pub fn probability(&self, delta: &[usize], state: &State) -> Result<f64> {
        Ok(self.evaluate(delta, state, &linalg::identity(self.d))?.re)
    }

    pub fn post_state(&self, delta: &[usize], state: &State) -> Result<InstrumentResult> {
        self.check_outcome(delta)?;
        self.check_state(state)?;
        let p = linalg::kron(&linalg::identity(self.d), &self.pointer_projection(delta));
        let joint = &p * &self.coupling * self.neutral_input(state) * self.coupling.adjoint() * &p;
        let unnormalized = linalg::partial_trace_second(&joint, self.d, self.n);
        let probability = unnormalized.trace().re;
        let post_state = if probability > 1e-14 { Some(unnormalized.unscale(probability)) } else { None };
        Ok(InstrumentResult { outcome: delta.to_vec(), probability, unnormalized, post_state })
    }

    /// Probabilities of the singleton outcomes, in spectrum order.
    pub fn distribution(&self, state: &State) -> Result<Vec<(usize, f64)>> {
        self.spectrum().into_iter().map(|g| Ok((g, self.probability(&[g], state)?))).collect()
    }

    /// Draws one outcome from the exact distribution with a seeded RNG.
    pub fn sample(&self, state: &State, cfg: &Config, draw: u64) -> Result<usize> {
        let dist = self.distribution(state)?;
        let mut r = linalg::rng(cfg.seed ^ draw.wrapping_mul(0x2545_F491_4F6C_DD1D), SALT_SAMPLE);
        let x: f64 = r.gen_range(0.0..1.0);
        let mut acc = 0.0;
        for &(g, p) in &dist {
            acc += p;
            if x < acc {
                return Ok(g);
            }
        }
        Ok(dist.last().map(|&(g, _)| g).unwrap_or(DualGroup::IOTA))
    }
}

#[derive(Clone, Debug)]
pub struct AtomCorrelation {
    pub atom: usize,
    pub character: usize,
    pub residual: f64,
    pub exact: bool,
}

/// Checks `C(ξ⊗|ι⟩) = ξ⊗|γ⟩` on an orthonormal basis of every atom `E(γ)H`.
pub fn perfect_correlation_check(coupling: &Mat, e: &SpectralMeasure, tol: f64) -> Result<Vec<AtomCorrelation>> {
    let d = e.ambient_dim();
    let n = e.group().order();
    if coupling.shape() != (d * n, d * n) {
        return Err(Error::DimensionMismatch { expected: d * n, found: coupling.nrows() });
    }
    let mut out = Vec::new();
    for (k, atom) in e.atoms().iter().enumerate() {
        let (vals, vecs) = linalg::hermitian_eigen(&atom.projection);
        let mut worst: f64 = 0.0;
        for (j, &v) in vals.iter().enumerate() {
            if v < 0.5 {
                continue;
            }
            let xi = vecs.column(j).into_owned();
            let mut iota = CVec::zeros(n);
            iota[DualGroup::IOTA] = ONE;
            let mut target = CVec::zeros(n);
            target[atom.character] = ONE;
            let lhs = coupling * xi.kronecker(&iota);
            let rhs = xi.kronecker(&target);
            worst = worst.max((lhs - rhs).norm());
        }
        out.push(AtomCorrelation { atom: k, character: atom.character, residual: worst, exact: worst < tol });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::FiniteAbelianGroup;
    use crate::kt::{spectral_measure, UnitaryRepresentation};
    use crate::linalg::{c, dist, unit};
    use crate::vna::OperatorAlgebra;
    use proptest::prelude::*;

    fn qubit_measure() -> SpectralMeasure {
        let g = FiniteAbelianGroup::cyclic(2).unwrap();
        let rep = UnitaryRepresentation::from_generators(&g, &[linalg::real_diag(&[1.0, -1.0])], &Config::default())
            .unwrap();
        spectral_measure(&OperatorAlgebra::diagonal(2), &rep, &Config::default()).unwrap()
    }

    fn qutrit_measure() -> SpectralMeasure {
        let g = FiniteAbelianGroup::cyclic(3).unwrap();
        let w = linalg::phase(1.0 / 3.0);
        let rep = UnitaryRepresentation::from_generators(&g, &[linalg::diag(&[ONE, w, w * w])], &Config::default())
            .unwrap();
        spectral_measure(&OperatorAlgebra::diagonal(3), &rep, &Config::default()).unwrap()
    }

    fn vec_state(v: &[Complex64]) -> State {
        State::from_vector(&CVec::from_column_slice(v), &Config::default()).unwrap()
    }

    #[test]
    fn qubit_born_rule() {
        let inst = Instrument::new(&qubit_measure());
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let s = vec_state(&[a, b]);
        assert!((inst.probability(&[0], &s).unwrap() - a.norm_sqr()).abs() < 1e-12);
        let r = inst.post_state(&[1], &s).unwrap();
        assert!((r.probability - b.norm_sqr()).abs() < 1e-12);
        assert!(dist(r.post_state.as_ref().unwrap(), &unit(2, 1, 1)) < 1e-12);
        assert!((inst.probability(&[0, 1], &s).unwrap() - 1.0).abs() < 1e-12);
        assert!(inst.probability(&[], &s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn empty_outcome_has_no_post_state() {
        let inst = Instrument::new(&qubit_measure());
        let r = inst.post_state(&[], &State::tracial(2)).unwrap();
        assert_eq!(r.probability, 0.0);
        assert!(r.post_state.is_none());
    }

    #[test]
    fn eigenstate_is_left_unchanged() {
        let inst = Instrument::new(&qutrit_measure());
        let s = vec_state(&[c(0.0, 0.0), ONE, c(0.0, 0.0)]);
        let r = inst.post_state(&[1], &s).unwrap();
        assert!((r.probability - 1.0).abs() < 1e-12);
        assert!(dist(r.post_state.as_ref().unwrap(), s.density()) < 1e-12);
    }

    #[test]
    fn qutrit_uniform_superposition_gives_thirds() {
        let inst = Instrument::new(&qutrit_measure());
        let x = c(1.0 / libm::sqrt(3.0), 0.0);
        let s = vec_state(&[x, x, x]);
        for g in 0..3 {
            assert!((inst.probability(&[g], &s).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_character_is_rejected() {
        let g = FiniteAbelianGroup::cyclic(4).unwrap();
        let rep = UnitaryRepresentation::from_generators(&g, &[linalg::real_diag(&[1.0, -1.0])], &Config::default())
            .unwrap();
        let e = spectral_measure(&OperatorAlgebra::diagonal(2), &rep, &Config::default()).unwrap();
        let inst = Instrument::new(&e);
        assert_eq!(inst.probability(&[1], &State::tracial(2)), Err(Error::UnknownCharacter(1)));
    }

    #[test]
    fn perfect_correlation_and_negative_control() {
        for e in [qubit_measure(), qutrit_measure()] {
            let ok = perfect_correlation_check(&coupling_estar_v(&e), &e, 1e-10).unwrap();
            assert!(ok.iter().all(|a| a.exact));
            let bad = e.with_swapped_characters(0, 1).unwrap();
            let res = perfect_correlation_check(&coupling_estar_v(&bad), &e, 1e-10).unwrap();
            assert!(!res[0].exact && !res[1].exact);
            assert!(res[2..].iter().all(|a| a.exact));
        }
    }

    #[test]
    fn trivial_group_correlation_passes() {
        let g = FiniteAbelianGroup::trivial();
        let e = spectral_measure(&OperatorAlgebra::diagonal(2), &UnitaryRepresentation::trivial(&g, 2), &Config::default())
            .unwrap();
        let r = perfect_correlation_check(&coupling_estar_v(&e), &e, 1e-10).unwrap();
        assert!(r.iter().all(|a| a.exact && a.character == 0));
    }

    #[test]
    fn sampling_is_deterministic_and_follows_support() {
        let inst = Instrument::new(&qubit_measure());
        let s = vec_state(&[ONE, c(0.0, 0.0)]);
        let cfg = Config::default();
        for k in 0..20 {
            assert_eq!(inst.sample(&s, &cfg, k).unwrap(), 0);
        }
        let t = State::tracial(2);
        let a: Vec<usize> = (0..20).map(|k| inst.sample(&t, &cfg, k).unwrap()).collect();
        let b: Vec<usize> = (0..20).map(|k| inst.sample(&t, &cfg, k).unwrap()).collect();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn additivity_mean_agreement_and_repeatability(seed in 0u64..10_000) {
            let e = qutrit_measure();
            let inst = Instrument::new(&e);
            let mut r = linalg::rng(seed, 3);
            let rho = linalg::random_faithful_density(&mut r, 3);
            let s = State::from_density(rho, &Config::default()).unwrap();
            let b = linalg::random_matrix(&mut r, 3);
            let whole = inst.evaluate(&[0, 2], &s, &b).unwrap();
            let parts = inst.evaluate(&[0], &s, &b).unwrap() + inst.evaluate(&[2], &s, &b).unwrap();
            prop_assert!((whole - parts).norm() < 1e-12);
            for delta in [&[0usize][..], &[1, 2][..], &[0, 1, 2][..]] {
                let a = inst.evaluate(delta, &s, &b).unwrap();
                let m = inst.evaluate_by_invariant_mean(delta, &s, &b).unwrap();
                prop_assert!((a - m).norm() < 1e-10);
            }
            for g in 0..3 {
                let first = inst.post_state(&[g], &s).unwrap();
                let post = State::from_density(first.post_state.unwrap(), &Config::with_tol(1e-8)).unwrap();
                prop_assert!((inst.probability(&[g], &post).unwrap() - 1.0).abs() < 1e-10);
                // The unnormalised functional evaluates B like the instrument.
                let direct = inst.evaluate(&[g], &s, &b).unwrap();
                prop_assert!(((&first.unnormalized * &b).trace() - direct).norm() < 1e-12);
            }
        }
    }
}

//! Tomita-Takesaki theory in finite dimension.
//!
//! A faithful state `φ` on `M ⊆ B(H)` has a unique density `ρ ∈ M`. The GNS
//! space is `M` itself with the Hilbert-Schmidt inner product and the map
//! `η(x) = xρ^{1/2}`, so `Ω = ρ^{1/2}`. Operators on it are stored as matrices
//! in the coordinates of an orthonormal basis of `M`; an antilinear operator
//! `T` is stored as the matrix `A` with `T v = A·v̄`.
//!
//! Every modular object is derived from `S(yΩ) = y†Ω` through
//! [`ModularData::from_cyclic_vector`], both for `M` and for crossed
//! products, so closed formulas can be checked against it.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::crossed::GroupAction;
use crate::linalg::{self, CVec, Mat};
use crate::vna::{self, OperatorAlgebra, State};
use crate::{Config, Error, Result};

/// Smallest admissible eigenvalue of a reduced density.
pub const FAITHFULNESS_THRESHOLD: f64 = 1e-8;

/// Times at which one-parameter identities are sampled.
pub const SAMPLE_TIMES: [f64; 3] = [0.3, 1.0, core::f64::consts::SQRT_2];

/// `S`, `Δ = S*S` and `J = SΔ^{-1/2}` for a cyclic separating vector.
#[derive(Clone, Debug)]
pub struct ModularData {
    /// Antilinear matrix of `S`.
    pub s: Mat,
    pub delta: Mat,
    /// Antilinear matrix of `J`.
    pub j: Mat,
}

impl ModularData {
    /// Modular data of the algebra spanned by `ops` for `Ω_in`, with
    /// `S(yΩ_in) = y†Ω_out`. Equal vectors give the ordinary modular
    /// operator, different ones the relative modular operator.
    pub fn from_cyclic_vector(ops: &[Mat], omega_in: &CVec, omega_out: &CVec) -> Result<Self> {
        let k = omega_in.len();
        if ops.len() != k {
            return Err(Error::pre("the algebra and its Hilbert space must have equal dimension"));
        }
        let mut y = Mat::zeros(k, k);
        let mut z = Mat::zeros(k, k);
        for (col, op) in ops.iter().enumerate() {
            y.set_column(col, &(op * omega_in));
            z.set_column(col, &(op.adjoint() * omega_out));
        }
        let y_inv = y.try_inverse().ok_or_else(|| Error::pre("vector is not cyclic and separating"))?;
        let s = z * y_inv.conjugate();
        let delta = linalg::hermitian_part(&(s.transpose() * s.conjugate()));
        let (values, _) = linalg::hermitian_eigen(&delta);
        if values.first().map_or(true, |&v| v <= 0.0) {
            return Err(Error::NotPositive { min_eigenvalue: values.first().copied().unwrap_or(0.0) });
        }
        let j = &s * linalg::positive_power(&delta, -0.5).conjugate();
        Ok(Self { s, delta, j })
    }

    pub fn delta_it(&self, t: f64) -> Mat {
        linalg::positive_power_it(&self.delta, t)
    }

    /// `J A J` for a linear operator `A`.
    pub fn conjugate_by_j(&self, a: &Mat) -> Mat {
        &self.j * a.conjugate() * self.j.conjugate()
    }

    /// `‖J² − 1‖`.
    pub fn j_involution_residual(&self) -> f64 {
        linalg::dist(&(&self.j * self.j.conjugate()), &linalg::identity(self.j.nrows()))
    }

    /// `‖JΔJ − Δ⁻¹‖`.
    pub fn j_inverts_delta_residual(&self) -> f64 {
        let inv = self.delta.clone().try_inverse().unwrap_or_else(|| linalg::zeros(self.delta.nrows()));
        linalg::dist(&self.conjugate_by_j(&self.delta), &inv)
    }
}

/// The density of `φ|_M` inside `M`: the trace-preserving conditional
/// expectation of the given density, checked sector by sector.
pub fn density_in(m: &OperatorAlgebra, state: &State, cfg: &Config) -> Result<Mat> {
    if state.dim() != m.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: m.ambient_dim(), found: state.dim() });
    }
    let rho = linalg::hermitian_part(&m.project(state.density()));
    check_faithful(m, &rho, cfg)?;
    Ok(rho)
}

fn check_faithful(m: &OperatorAlgebra, rho: &Mat, cfg: &Config) -> Result<()> {
    for (k, sector) in m.sectors(cfg)?.iter().enumerate() {
        let z = &sector.projection;
        let compressed = z * rho * z;
        let (values, _) = linalg::hermitian_eigen(&compressed);
        // The sector's range carries `n·m` eigenvalues, each repeated `m`
        // times; the reduced density has them scaled by `m`.
        let rank = sector.block_size * sector.multiplicity;
        let top = &values[values.len() - rank..];
        let min = top[0] * sector.multiplicity as f64;
        if min <= FAITHFULNESS_THRESHOLD {
            return Err(Error::NotFaithful { sector: k, min_eigenvalue: min });
        }
    }
    Ok(())
}

/// Standard form of `M` for a faithful state.
#[derive(Clone, Debug)]
pub struct StandardForm {
    algebra: OperatorAlgebra,
    rho: Mat,
    basis: Vec<Mat>,
    omega: CVec,
    left_basis: Vec<Mat>,
    data: ModularData,
}

/// Residuals of the defining properties of a [`StandardForm`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StandardFormResiduals {
    /// `‖S(xΩ) − x†Ω‖` over the basis of `M`.
    pub s_on_m: f64,
    /// Smallest eigenvalue of `Δ`; must be positive.
    pub delta_min_eigenvalue: f64,
    pub j_involution: f64,
    pub j_antiunitary: f64,
    /// Equality residual of `JMJ` and `M′`.
    pub tomita: f64,
    /// Largest distance of `Δ^{it}MΔ^{-it}` from `M` at the sample times.
    pub automorphism: f64,
    /// `Spec(Δ)` closed under inversion.
    pub spectrum_symmetry: f64,
}

impl StandardFormResiduals {
    pub fn max(&self) -> f64 {
        [self.s_on_m, self.j_involution, self.j_antiunitary, self.tomita, self.automorphism, self.spectrum_symmetry]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Builds `S`, `Δ` and `J` on the GNS space of a faithful state on `M`.
pub fn standard_form(m: &OperatorAlgebra, state: &State, cfg: &Config) -> Result<StandardForm> {
    let rho = density_in(m, state, cfg)?;
    StandardForm::from_density(m, rho)
}

impl StandardForm {
    fn from_density(m: &OperatorAlgebra, rho: Mat) -> Result<Self> {
        let basis = m.basis_matrices();
        let left_basis: Vec<Mat> = basis.iter().map(|x| left_in(&basis, x)).collect();
        let omega = coords(&basis, &linalg::positive_power(&rho, 0.5));
        let data = ModularData::from_cyclic_vector(&left_basis, &omega, &omega)?;
        Ok(Self { algebra: m.clone(), rho, basis, omega, left_basis, data })
    }

    pub fn algebra(&self) -> &OperatorAlgebra {
        &self.algebra
    }

    /// Density of the state inside `M`.
    pub fn density(&self) -> &Mat {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn omega(&self) -> &CVec {
        &self.omega
    }

    pub fn data(&self) -> &ModularData {
        &self.data
    }

    pub fn delta(&self) -> &Mat {
        &self.data.delta
    }

    /// Coordinates of a GNS vector `ξ ∈ M`.
    pub fn coords(&self, xi: &Mat) -> CVec {
        coords(&self.basis, xi)
    }

    pub fn vector(&self, c: &CVec) -> Mat {
        from_coords(&self.basis, c)
    }

    /// `η(x) = xΩ`.
    pub fn eta(&self, x: &Mat) -> CVec {
        self.coords(&(x * linalg::positive_power(&self.rho, 0.5)))
    }

    /// Left multiplication by `x ∈ M` on the GNS space.
    pub fn left(&self, x: &Mat) -> Mat {
        left_in(&self.basis, x)
    }

    /// Right multiplication `ξ ↦ ξx` on the GNS space.
    pub fn right(&self, x: &Mat) -> Mat {
        operator_in(&self.basis, |b| b * x)
    }

    /// `U(ξ) = WξW†` for a unitary `W` normalising `M`.
    pub fn conjugation(&self, w: &Mat) -> Mat {
        operator_in(&self.basis, |b| w * b * w.adjoint())
    }

    pub fn apply_j(&self, v: &CVec) -> CVec {
        &self.data.j * v.conjugate()
    }

    pub fn apply_s(&self, v: &CVec) -> CVec {
        &self.data.s * v.conjugate()
    }

    /// `Spec(Δ)` in ascending order with multiplicity.
    pub fn modular_spectrum(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.data.delta).0
    }

    /// `σ_t(x)` read off from `Δ^{it}xΔ^{-it}Ω`.
    pub fn modular_automorphism(&self, x: &Mat, t: f64) -> Mat {
        let u = self.data.delta_it(t);
        let v = &u * self.left(x) * u.adjoint() * &self.omega;
        self.vector(&v) * linalg::positive_power(&self.rho, -0.5)
    }

    /// `φ(x) = ⟨Ω, xΩ⟩`.
    pub fn eval(&self, x: &Mat) -> Complex64 {
        self.omega.dotc(&(self.left(x) * &self.omega))
    }

    pub fn residuals(&self, cfg: &Config) -> Result<StandardFormResiduals> {
        let k = self.dim();
        let s_on_m = self
            .basis
            .iter()
            .map(|x| (self.apply_s(&self.eta(x)) - self.eta(&x.adjoint())).norm())
            .fold(0.0, f64::max);
        let spectrum = self.modular_spectrum();
        let delta_min_eigenvalue = spectrum.first().copied().unwrap_or(0.0);
        let mut inverted: Vec<f64> = spectrum.iter().map(|v| 1.0 / v).collect();
        inverted.sort_by(f64::total_cmp);
        let spectrum_symmetry =
            spectrum.iter().zip(&inverted).map(|(a, b)| (a - b).abs() / a.max(*b)).fold(0.0, f64::max);
        let j_involution = self.data.j_involution_residual();
        let j_antiunitary = linalg::unitarity_residual(&self.data.j);
        let jmj: Vec<Mat> = self.left_basis.iter().map(|l| self.data.conjugate_by_j(l)).collect();
        let jmj = OperatorAlgebra::from_spanning(k, &jmj, cfg)?;
        let commutant = vna::commutant(&self.left_basis, k, cfg)?;
        let tomita = if jmj.dim() == commutant.dim() { jmj.equality_residual(&commutant) } else { 1.0 };
        let mut automorphism: f64 = 0.0;
        let gns_m = OperatorAlgebra::from_spanning(k, &self.left_basis, cfg)?;
        for &t in &SAMPLE_TIMES {
            let u = self.data.delta_it(t);
            for l in &self.left_basis {
                automorphism = automorphism.max(gns_m.membership_residual(&(&u * l * u.adjoint())));
            }
        }
        Ok(StandardFormResiduals {
            s_on_m,
            delta_min_eigenvalue,
            j_involution,
            j_antiunitary,
            tomita,
            automorphism,
            spectrum_symmetry,
        })
    }
}

/// `|φ(xy) − φ(yσ_{-i}(x))|` with the left side from the density and the
/// right side from `σ_{-i}(x)Ω = ΔxΩ` on the GNS space.
pub fn kms_check(sf: &StandardForm, x: &Mat, y: &Mat, cfg: &Config) -> Result<f64> {
    for op in [x, y] {
        if op.shape() != sf.rho.shape() {
            return Err(Error::DimensionMismatch { expected: sf.rho.nrows(), found: op.nrows() });
        }
        if sf.algebra.membership_residual(op) >= cfg.tol {
            return Err(Error::pre("KMS arguments must lie in M"));
        }
    }
    let lhs = (&sf.rho * x * y).trace();
    let rhs = sf.eta(&y.adjoint()).dotc(&(sf.delta() * sf.eta(x)));
    Ok((lhs - rhs).norm())
}

/// `Δ_{ψ,φ}` on the GNS space of `φ`, from `S_{ψ,φ}(xΩ_φ) = x†Ω_ψ`.
pub fn relative_modular(m: &OperatorAlgebra, psi: &State, phi: &State, cfg: &Config) -> Result<Mat> {
    let rho_psi = density_in(m, psi, cfg)?;
    let rho_phi = density_in(m, phi, cfg)?;
    Ok(relative_modular_data(m, &rho_psi, &rho_phi)?.delta)
}

fn relative_modular_data(m: &OperatorAlgebra, rho_psi: &Mat, rho_phi: &Mat) -> Result<ModularData> {
    let basis = m.basis_matrices();
    let left: Vec<Mat> = basis.iter().map(|x| left_in(&basis, x)).collect();
    let omega_phi = coords(&basis, &linalg::positive_power(rho_phi, 0.5));
    let omega_psi = coords(&basis, &linalg::positive_power(rho_psi, 0.5));
    ModularData::from_cyclic_vector(&left, &omega_phi, &omega_psi)
}

/// `(Dψ:Dφ)_t = Δ_{ψ,φ}^{it}Δ_φ^{-it}` for a pair of faithful states.
#[derive(Clone, Debug)]
pub struct ConnesCocycle {
    form: StandardForm,
    relative: ModularData,
}

impl ConnesCocycle {
    pub fn new(m: &OperatorAlgebra, psi: &State, phi: &State, cfg: &Config) -> Result<Self> {
        let rho_psi = density_in(m, psi, cfg)?;
        let rho_phi = density_in(m, phi, cfg)?;
        Self::from_densities(m, &rho_psi, &rho_phi)
    }

    fn from_densities(m: &OperatorAlgebra, rho_psi: &Mat, rho_phi: &Mat) -> Result<Self> {
        let form = StandardForm::from_density(m, rho_phi.clone())?;
        let relative = relative_modular_data(m, rho_psi, rho_phi)?;
        Ok(Self { form, relative })
    }

    /// The cocycle as an operator on the GNS space of `φ`.
    pub fn operator(&self, t: f64) -> Mat {
        self.relative.delta_it(t) * self.form.data.delta_it(-t)
    }

    /// The element `u_t ∈ M` with `(Dψ:Dφ)_t = L_{u_t}`, read off from `u_tΩ`.
    pub fn at(&self, t: f64) -> Mat {
        let v = self.operator(t) * &self.form.omega;
        self.form.vector(&v) * linalg::positive_power(&self.form.rho, -0.5)
    }

    /// Distance of the cocycle from left multiplication by [`Self::at`].
    pub fn in_algebra_residual(&self, t: f64) -> f64 {
        linalg::dist(&self.operator(t), &self.form.left(&self.at(t)))
    }
}

/// `(Dψ:Dφ)_t` as an element of `M`.
pub fn connes_cocycle(m: &OperatorAlgebra, psi: &State, phi: &State, t: f64, cfg: &Config) -> Result<Mat> {
    Ok(ConnesCocycle::new(m, psi, phi, cfg)?.at(t))
}

/// `‖(Dψ:Dφ)_t(Dφ:Dχ)_t − (Dψ:Dχ)_t‖` at `t`.
pub fn cocycle_chain_residual(m: &OperatorAlgebra, psi: &State, phi: &State, chi: &State, t: f64, cfg: &Config) -> Result<f64> {
    let a = connes_cocycle(m, psi, phi, t, cfg)?;
    let b = connes_cocycle(m, phi, chi, t, cfg)?;
    let c = connes_cocycle(m, psi, chi, t, cfg)?;
    Ok(linalg::dist(&(a * b), &c))
}

/// Dual-weight verification on `N⋊_θG` in the picture
/// `K = H_φ⊗ℓ²(G)`, `(π_θ(x)ξ)(s) = θ_s⁻¹(x)ξ(s)`, `(λ(r)ξ)(s) = ξ(s−r)`.
#[derive(Clone, Debug)]
pub struct DualWeightReport {
    /// `max_t ‖Δ̃^{it}π_θ(x)Δ̃^{-it} − π_θ(σ_t^φ(x))‖` over a basis of `N`.
    pub pi_formula: f64,
    /// `max_t ‖Δ̃^{it}λ(s)Δ̃^{-it} − λ(s)π_θ((Dφ∘θ_s:Dφ)_t)‖`.
    pub lambda_formula: f64,
    /// Distance of `Δ̃ = ⊕_s Δ_{φ∘θ_s,φ}` from the modular operator of the
    /// dual weight computed from `Ω̃ = Ω⊗δ_e`.
    pub delta_oracle: f64,
    /// Distance of `(J̃ξ)(s) = U_φ(−s)J_φξ(−s)` from the modular conjugation
    /// computed from `Ω̃`. Reflecting `s ↦ −s` turns this into
    /// `U_φ(s)J_φξ(−s)` for `(π_θ(x)ξ)(s) = θ_s(x)ξ(s)`.
    pub j_oracle: f64,
    /// `φ∘θ_s = φ` for every `s`.
    pub invariant_weight: bool,
    /// `max ‖(Dφ∘θ_s:Dφ)_t − 1‖`; zero when the weight is invariant.
    pub cocycle_deviation: f64,
    pub times: Vec<f64>,
}

impl DualWeightReport {
    pub fn max(&self) -> f64 {
        self.pi_formula.max(self.lambda_formula).max(self.delta_oracle).max(self.j_oracle)
    }
}

/// GNS data of `N⋊_θG` for a faithful state on `N`.
struct CrossedGns {
    form: StandardForm,
    n: usize,
    /// `U_φ(s)` on `H_φ`.
    u: Vec<Mat>,
    /// Density of `φ∘θ_s` in `N`.
    shifted: Vec<Mat>,
}

impl CrossedGns {
    fn new(action: &GroupAction, state: &State, cfg: &Config) -> Result<Self> {
        let form = standard_form(action.algebra(), state, cfg)?;
        let group = action.group();
        let u = group.elements().map(|s| form.conjugation(action.implementer(s))).collect();
        let shifted = group.elements().map(|s| action.apply_inverse(s, &form.rho)).collect();
        Ok(Self { form, n: group.order(), u, shifted })
    }

    fn pi(&self, action: &GroupAction, x: &Mat) -> Mat {
        let mut out = Mat::zeros(self.form.dim() * self.n, self.form.dim() * self.n);
        for s in action.group().elements() {
            out += linalg::kron(&self.form.left(&action.apply_inverse(s, x)), &linalg::unit(self.n, s, s));
        }
        out
    }

    fn lambda(&self, action: &GroupAction, r: usize) -> Mat {
        linalg::kron(&linalg::identity(self.form.dim()), &action.group().regular(r))
    }

    fn block_diagonal(&self, blocks: &[Mat]) -> Mat {
        let k = self.form.dim();
        let mut out = Mat::zeros(k * self.n, k * self.n);
        for (s, b) in blocks.iter().enumerate() {
            out += linalg::kron(b, &linalg::unit(self.n, s, s));
        }
        out
    }
}

pub fn dual_weight_check(action: &GroupAction, state: &State, cfg: &Config) -> Result<DualWeightReport> {
    let gns = CrossedGns::new(action, state, cfg)?;
    let group = action.group();
    let base = action.algebra();
    let k = gns.form.dim();
    let n = gns.n;

    let relative: Vec<ModularData> =
        gns.shifted.iter().map(|rho_s| relative_modular_data(base, rho_s, &gns.form.rho)).collect::<Result<_>>()?;
    let cocycles: Vec<ConnesCocycle> =
        gns.shifted.iter().map(|rho_s| ConnesCocycle::from_densities(base, rho_s, &gns.form.rho)).collect::<Result<_>>()?;
    let delta_tilde = gns.block_diagonal(&relative.iter().map(|r| r.delta.clone()).collect::<Vec<_>>());

    // Modular data of the dual weight from its cyclic vector.
    let basis = base.basis_matrices();
    let mut ops = Vec::with_capacity(k * n);
    for x in &basis {
        let p = gns.pi(action, x);
        for r in group.elements() {
            ops.push(&p * gns.lambda(action, r));
        }
    }
    let mut omega = CVec::zeros(k * n);
    for i in 0..k {
        omega[i * n] = gns.form.omega[i];
    }
    let oracle = ModularData::from_cyclic_vector(&ops, &omega, &omega)?;
    let delta_oracle = linalg::dist(&delta_tilde, &oracle.delta);

    let mut j_tilde = Mat::zeros(k * n, k * n);
    for s in group.elements() {
        let block = &gns.u[group.inverse(s)] * &gns.form.data.j;
        j_tilde += linalg::kron(&block, &linalg::unit(n, s, group.inverse(s)));
    }
    let j_oracle = linalg::dist(&j_tilde, &oracle.j);

    let mut pi_formula: f64 = 0.0;
    let mut lambda_formula: f64 = 0.0;
    let mut cocycle_deviation: f64 = 0.0;
    for &t in &SAMPLE_TIMES {
        let dt = gns.block_diagonal(&relative.iter().map(|r| r.delta_it(t)).collect::<Vec<_>>());
        let rho_it = linalg::positive_power_it(&gns.form.rho, t);
        for x in &basis {
            let lhs = &dt * gns.pi(action, x) * dt.adjoint();
            let sigma = &rho_it * x * rho_it.adjoint();
            pi_formula = pi_formula.max(linalg::dist(&lhs, &gns.pi(action, &sigma)));
        }
        for s in group.elements() {
            let l = gns.lambda(action, s);
            let lhs = &dt * &l * dt.adjoint();
            let u_t = cocycles[s].at(t);
            cocycle_deviation = cocycle_deviation.max(linalg::dist(&u_t, &linalg::identity(u_t.nrows())));
            lambda_formula = lambda_formula.max(linalg::dist(&lhs, &(&l * gns.pi(action, &u_t))));
        }
    }
    let invariant_weight = gns.shifted.iter().all(|r| linalg::dist(r, &gns.form.rho) < cfg.tol);
    Ok(DualWeightReport {
        pi_formula,
        lambda_formula,
        delta_oracle,
        j_oracle,
        invariant_weight,
        cocycle_deviation,
        times: SAMPLE_TIMES.to_vec(),
    })
}

/// Residuals of the convolution algebra of functions `G → N`.
#[derive(Clone, Debug)]
pub struct LeftHilbertAlgebraReport {
    /// `‖π̃(X∗Y) − π̃(X)π̃(Y)‖` on random data.
    pub homomorphism: f64,
    /// `‖π̃(X^#) − π̃(X)†‖`.
    pub involution: f64,
    /// `‖X^{##} − X‖`.
    pub double_involution: f64,
    /// `δ_e·1` is a two-sided unit.
    pub unit: f64,
    /// Associativity of `∗`.
    pub associativity: f64,
    /// `A·(X∗Y) = (A·X)∗Y` and `(X∗Y)·A = X∗(Y·A)`.
    pub bimodule: f64,
    /// `π̃(X)η̃(Y) = η̃(X∗Y)` with `η̃(Y)(s) = η_φ(Y(s))`, evaluated only for
    /// a `θ`-invariant weight.
    pub vector_representation: Option<f64>,
}

impl LeftHilbertAlgebraReport {
    pub fn max(&self) -> f64 {
        [self.homomorphism, self.involution, self.double_involution, self.unit, self.associativity, self.bimodule]
            .into_iter()
            .chain(self.vector_representation)
            .fold(0.0, f64::max)
    }
}

/// `(X∗Y)(s) = Σ_t X(t)θ_t(Y(s−t))`.
pub fn twisted_convolution(x: &[Mat], y: &[Mat], action: &GroupAction) -> Vec<Mat> {
    let group = action.group();
    group
        .elements()
        .map(|s| {
            let mut acc = linalg::zeros(x[0].nrows());
            for t in group.elements() {
                let rest = group.compose(s, group.inverse(t));
                acc += &x[t] * action.apply(t, &y[rest]);
            }
            acc
        })
        .collect()
}

/// `X^#(s) = θ_s(X(−s))†`.
pub fn twisted_involution(x: &[Mat], action: &GroupAction) -> Vec<Mat> {
    let group = action.group();
    group.elements().map(|s| action.apply(s, &x[group.inverse(s)]).adjoint()).collect()
}

pub fn left_hilbert_algebra_check(action: &GroupAction, state: &State, cfg: &Config) -> Result<LeftHilbertAlgebraReport> {
    let gns = CrossedGns::new(action, state, cfg)?;
    let group = action.group();
    let base = action.algebra();
    let k = gns.form.dim();
    let n = gns.n;
    let d = base.ambient_dim();

    // π̃(X) = Σ_s (L_{X(s)}⊗1)(U_φ(s)⊗λ_s) on H_φ⊗ℓ²(G).
    let represent = |x: &[Mat]| {
        let mut out = Mat::zeros(k * n, k * n);
        for s in group.elements() {
            out += linalg::kron(&(gns.form.left(&x[s]) * &gns.u[s]), &group.regular(s));
        }
        out
    };
    let mut r = linalg::rng(cfg.seed, 0x4C48);
    let mut random = || -> Vec<Mat> { group.elements().map(|_| base.project(&linalg::random_matrix(&mut r, d))).collect() };
    let (x, y, z) = (random(), random(), random());
    let a = base.project(&linalg::random_matrix(&mut linalg::rng(cfg.seed, 0x4C49), d));

    let xy = twisted_convolution(&x, &y, action);
    let homomorphism = linalg::dist(&represent(&xy), &(represent(&x) * represent(&y)));
    let xs = twisted_involution(&x, action);
    let involution = linalg::dist(&represent(&xs), &represent(&x).adjoint());
    let double_involution = max_dist(&twisted_involution(&xs, action), &x);

    let mut unit_fn: Vec<Mat> = group.elements().map(|_| linalg::zeros(d)).collect();
    unit_fn[0] = linalg::identity(d);
    let unit =
        max_dist(&twisted_convolution(&unit_fn, &x, action), &x).max(max_dist(&twisted_convolution(&x, &unit_fn, action), &x));

    let associativity = max_dist(
        &twisted_convolution(&xy, &z, action),
        &twisted_convolution(&x, &twisted_convolution(&y, &z, action), action),
    );

    let left_act = |f: &[Mat]| -> Vec<Mat> { f.iter().map(|m| &a * m).collect() };
    let right_act = |f: &[Mat]| -> Vec<Mat> { group.elements().map(|s| &f[s] * action.apply(s, &a)).collect() };
    let bimodule = max_dist(&left_act(&xy), &twisted_convolution(&left_act(&x), &y, action))
        .max(max_dist(&right_act(&xy), &twisted_convolution(&x, &right_act(&y), action)));

    let invariant = gns.shifted.iter().all(|rho| linalg::dist(rho, &gns.form.rho) < cfg.tol);
    let vector_representation = invariant.then(|| {
        let eta = |f: &[Mat]| {
            let mut v = CVec::zeros(k * n);
            for s in group.elements() {
                let e = gns.form.eta(&f[s]);
                for i in 0..k {
                    v[i * n + s] = e[i];
                }
            }
            v
        };
        (represent(&x) * eta(&y) - eta(&xy)).norm()
    });

    Ok(LeftHilbertAlgebraReport { homomorphism, involution, double_involution, unit, associativity, bimodule, vector_representation })
}

fn max_dist(a: &[Mat], b: &[Mat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| linalg::dist(x, y)).fold(0.0, f64::max)
}

fn coords(basis: &[Mat], xi: &Mat) -> CVec {
    CVec::from_iterator(basis.len(), basis.iter().map(|b| linalg::inner(b, xi)))
}

fn from_coords(basis: &[Mat], c: &CVec) -> Mat {
    let d = basis.first().map_or(0, |b| b.nrows());
    basis.iter().zip(c.iter()).fold(linalg::zeros(d), |acc, (b, &v)| acc + b * v)
}

fn operator_in(basis: &[Mat], f: impl Fn(&Mat) -> Mat) -> Mat {
    let k = basis.len();
    let mut out = Mat::zeros(k, k);
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, &coords(basis, &f(b)));
    }
    out
}

fn left_in(basis: &[Mat], x: &Mat) -> Mat {
    operator_in(basis, |b| x * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::FiniteAbelianGroup;
    use crate::linalg::{c, real_diag};
    use proptest::prelude::*;

    fn cfg() -> Config {
        Config::default()
    }

    fn state(rho: Mat) -> State {
        State::from_density(rho, &cfg()).unwrap()
    }

    fn sigma_x() -> Mat {
        Mat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    /// Eigenvalues of `ξ ↦ AξB` restricted to `M_n`: `a_i·b_j`.
    fn product_spectrum(a: &[f64], b: &[f64]) -> Vec<f64> {
        sorted(a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect())
    }

    fn random_state(r: &mut impl rand::Rng, d: usize) -> State {
        state(linalg::random_faithful_density(r, d))
    }

    fn algebras() -> Vec<OperatorAlgebra> {
        alloc::vec![
            OperatorAlgebra::full(2),
            OperatorAlgebra::full(3),
            OperatorAlgebra::from_blocks(&[(2, 1), (1, 1)]).unwrap(),
        ]
    }

    #[test]
    fn tracial_state_has_trivial_modular_operator() {
        let m = OperatorAlgebra::full(2);
        let sf = standard_form(&m, &State::tracial(2), &cfg()).unwrap();
        assert!(linalg::dist(sf.delta(), &linalg::identity(4)) < 1e-12);
        // J transports ξ to ξ†.
        let xi = linalg::random_matrix(&mut linalg::rng(1, 1), 2);
        assert!((sf.apply_j(&sf.coords(&xi)) - sf.coords(&xi.adjoint())).norm() < 1e-12);
    }

    #[test]
    fn delta_spectrum_of_diagonal_density() {
        let m = OperatorAlgebra::full(2);
        let sf = standard_form(&m, &state(real_diag(&[1.0 / 3.0, 2.0 / 3.0])), &cfg()).unwrap();
        assert!(close(&sf.modular_spectrum(), &[0.5, 1.0, 1.0, 2.0], 1e-10));
    }

    #[test]
    fn delta_matches_density_oracle() {
        let mut r = linalg::rng(2, 0);
        for m in algebras() {
            let d = m.ambient_dim();
            let sf = standard_form(&m, &random_state(&mut r, d), &cfg()).unwrap();
            let rho = sf.density().clone();
            let rho_inv = rho.clone().try_inverse().unwrap();
            for b in m.basis_matrices() {
                let expected = sf.coords(&(&rho * &b * &rho_inv));
                assert!((sf.delta() * sf.coords(&b) - expected).norm() < 1e-9);
                assert!((sf.apply_j(&sf.coords(&b)) - sf.coords(&b.adjoint())).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn abelian_algebras_have_trivial_delta() {
        let m = OperatorAlgebra::diagonal(3);
        let sf = standard_form(&m, &state(real_diag(&[0.2, 0.3, 0.5])), &cfg()).unwrap();
        assert!(linalg::dist(sf.delta(), &linalg::identity(3)) < 1e-12);
    }

    #[test]
    fn standard_form_invariants() {
        let mut r = linalg::rng(3, 0);
        for m in algebras() {
            for _ in 0..3 {
                let sf = standard_form(&m, &random_state(&mut r, m.ambient_dim()), &cfg()).unwrap();
                let res = sf.residuals(&cfg()).unwrap();
                assert!(res.max() < 1e-9, "{res:?}");
                assert!(res.delta_min_eigenvalue > 0.0);
            }
        }
    }

    #[test]
    fn modular_automorphism_matches_density_and_composes() {
        let mut r = linalg::rng(4, 0);
        let m = OperatorAlgebra::from_blocks(&[(2, 1), (1, 1)]).unwrap();
        let sf = standard_form(&m, &random_state(&mut r, 3), &cfg()).unwrap();
        let x = m.project(&linalg::random_matrix(&mut r, 3));
        for &(t, s) in &[(0.3, 1.0), (-0.7, 2.5)] {
            let rho_it = linalg::positive_power_it(sf.density(), t);
            let direct = &rho_it * &x * rho_it.adjoint();
            assert!(linalg::dist(&sf.modular_automorphism(&x, t), &direct) < 1e-9);
            let composed = sf.modular_automorphism(&sf.modular_automorphism(&x, s), t);
            assert!(linalg::dist(&composed, &sf.modular_automorphism(&x, t + s)) < 1e-9);
        }
    }

    #[test]
    fn kms_examples() {
        let m = OperatorAlgebra::full(2);
        let rho = real_diag(&[1.0 / 3.0, 2.0 / 3.0]);
        let sf = standard_form(&m, &state(rho.clone()), &cfg()).unwrap();
        let x = linalg::unit(2, 0, 1);
        let y = linalg::unit(2, 1, 0);
        // φ(xy) = Tr(ρ e₀₀) = 1/3.
        assert!(((&rho * &x * &y).trace() - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(kms_check(&sf, &x, &y, &cfg()).unwrap() < 1e-12);
        let one = linalg::identity(2);
        assert!(kms_check(&sf, &one, &y, &cfg()).unwrap() < 1e-12);
        let outside = linalg::unit(3, 0, 2);
        let block = OperatorAlgebra::from_blocks(&[(2, 1), (1, 1)]).unwrap();
        let sf3 = standard_form(&block, &State::tracial(3), &cfg()).unwrap();
        assert!(matches!(kms_check(&sf3, &outside, &outside, &cfg()), Err(Error::Precondition(_))));
    }

    #[test]
    fn kms_on_random_states() {
        let mut r = linalg::rng(5, 0);
        for m in algebras() {
            let d = m.ambient_dim();
            for _ in 0..5 {
                let sf = standard_form(&m, &random_state(&mut r, d), &cfg()).unwrap();
                let x = m.project(&linalg::random_matrix(&mut r, d));
                let y = m.project(&linalg::random_matrix(&mut r, d));
                assert!(kms_check(&sf, &x, &y, &cfg()).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn relative_modular_examples() {
        let m = OperatorAlgebra::full(2);
        let phi = state(real_diag(&[1.0 / 3.0, 2.0 / 3.0]));
        let psi = state(real_diag(&[0.5, 0.5]));
        let rel = relative_modular(&m, &psi, &phi, &cfg()).unwrap();
        let spec = linalg::hermitian_eigen(&rel).0;
        assert!(close(&spec, &product_spectrum(&[0.5, 0.5], &[3.0, 1.5]), 1e-10));
        let own = relative_modular(&m, &phi, &phi, &cfg()).unwrap();
        let sf = standard_form(&m, &phi, &cfg()).unwrap();
        assert!(linalg::dist(&own, sf.delta()) < 1e-12);

        let diag = OperatorAlgebra::diagonal(2);
        let rel = relative_modular(&diag, &psi, &phi, &cfg()).unwrap();
        let spec = linalg::hermitian_eigen(&rel).0;
        assert!(close(&spec, &[0.75, 1.5], 1e-10));
    }

    #[test]
    fn relative_modular_matches_multiplication_oracle() {
        let mut r = linalg::rng(6, 0);
        let m = OperatorAlgebra::full(3);
        let phi = random_state(&mut r, 3);
        let psi = random_state(&mut r, 3);
        let rel = relative_modular(&m, &psi, &phi, &cfg()).unwrap();
        let sf = standard_form(&m, &phi, &cfg()).unwrap();
        let rho_phi_inv = phi.density().clone().try_inverse().unwrap();
        for b in m.basis_matrices() {
            let expected = sf.coords(&(psi.density() * &b * &rho_phi_inv));
            assert!((&rel * sf.coords(&b) - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn cocycle_examples() {
        let m = OperatorAlgebra::full(2);
        let phi = state(real_diag(&[1.0 / 3.0, 2.0 / 3.0]));
        let mut r = linalg::rng(7, 0);
        let psi = random_state(&mut r, 2);
        for &t in &[0.0, 0.4, 1.3] {
            let same = connes_cocycle(&m, &phi, &phi, t, &cfg()).unwrap();
            assert!(linalg::dist(&same, &linalg::identity(2)) < 1e-10);
            let u = connes_cocycle(&m, &psi, &phi, t, &cfg()).unwrap();
            let oracle = linalg::positive_power_it(psi.density(), t) * linalg::positive_power_it(phi.density(), -t);
            assert!(linalg::dist(&u, &oracle) < 1e-10);
            let cc = ConnesCocycle::new(&m, &psi, &phi, &cfg()).unwrap();
            assert!(cc.in_algebra_residual(t) < 1e-10);
        }
    }

    #[test]
    fn cocycle_chain_rule_on_random_triples() {
        let mut r = linalg::rng(8, 0);
        for m in [OperatorAlgebra::full(2), OperatorAlgebra::from_blocks(&[(2, 1), (1, 1)]).unwrap()] {
            let d = m.ambient_dim();
            for _ in 0..5 {
                let (a, b, cc) = (random_state(&mut r, d), random_state(&mut r, d), random_state(&mut r, d));
                for &t in &SAMPLE_TIMES {
                    assert!(cocycle_chain_residual(&m, &a, &b, &cc, t, &cfg()).unwrap() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn non_faithful_states_are_rejected() {
        let m = OperatorAlgebra::full(2);
        let err = standard_form(&m, &state(real_diag(&[1.0, 0.0])), &cfg()).unwrap_err();
        assert!(matches!(err, Error::NotFaithful { sector: 0, .. }));
        let block = OperatorAlgebra::from_blocks(&[(2, 1), (1, 1)]).unwrap();
        let err = standard_form(&block, &state(real_diag(&[0.5, 0.5, 0.0])), &cfg()).unwrap_err();
        assert!(matches!(err, Error::NotFaithful { .. }));
        // Faithful on the diagonal algebra even though ρ has off-diagonal
        // weight only the projection sees.
        let diag = OperatorAlgebra::diagonal(2);
        assert!(standard_form(&diag, &state(real_diag(&[0.4, 0.6])), &cfg()).is_ok());
    }

    fn z2_swap_on_m2() -> GroupAction {
        let g = FiniteAbelianGroup::cyclic(2).unwrap();
        GroupAction::from_generators(&OperatorAlgebra::full(2), &g, &[sigma_x()], &cfg()).unwrap()
    }

    #[test]
    fn dual_weight_formulas_on_z2() {
        let action = z2_swap_on_m2();
        let rho = real_diag(&[1.0 / 3.0, 2.0 / 3.0]);
        let report = dual_weight_check(&action, &state(rho.clone()), &cfg()).unwrap();
        assert!(report.max() < 1e-9, "{report:?}");
        assert!(!report.invariant_weight);
        assert!(report.cocycle_deviation > 1e-3);
        // (Dφ∘θ:Dφ)_t = (σ_xρσ_x)^{it}ρ^{-it}.
        let psi = state(sigma_x() * &rho * sigma_x());
        for &t in &SAMPLE_TIMES {
            let u = connes_cocycle(action.algebra(), &psi, &state(rho.clone()), t, &cfg()).unwrap();
            let oracle = linalg::positive_power_it(psi.density(), t) * linalg::positive_power_it(&rho, -t);
            assert!(linalg::dist(&u, &oracle) < 1e-10);
        }
    }

    #[test]
    fn dual_weight_formulas_on_z3() {
        // Z_2 cannot tell s from −s; the conjugation formula needs the sign.
        let g = FiniteAbelianGroup::cyclic(3).unwrap();
        let w = linalg::phase(1.0 / 3.0);
        let u = linalg::diag(&[linalg::ONE, w, w * w]);
        let action = GroupAction::from_generators(&OperatorAlgebra::full(3), &g, &[u], &cfg()).unwrap();
        for seed in 0..3 {
            let phi = random_state(&mut linalg::rng(seed, 31), 3);
            let report = dual_weight_check(&action, &phi, &cfg()).unwrap();
            assert!(report.max() < 1e-9, "{report:?}");
        }
    }

    #[test]
    fn dual_weight_with_invariant_weight_has_trivial_cocycle() {
        let action = z2_swap_on_m2();
        let report = dual_weight_check(&action, &State::tracial(2), &cfg()).unwrap();
        assert!(report.max() < 1e-9);
        assert!(report.invariant_weight);
        assert!(report.cocycle_deviation < 1e-10);
    }

    #[test]
    fn dual_weight_for_trivial_group_is_the_standard_form() {
        let m = OperatorAlgebra::from_blocks(&[(2, 1), (1, 1)]).unwrap();
        let action = GroupAction::trivial(&m, &FiniteAbelianGroup::trivial());
        let phi = random_state(&mut linalg::rng(9, 0), 3);
        let report = dual_weight_check(&action, &phi, &cfg()).unwrap();
        assert!(report.max() < 1e-9);
        assert!(report.invariant_weight);
    }

    #[test]
    fn dual_weight_on_outer_block_swap() {
        let g = FiniteAbelianGroup::cyclic(2).unwrap();
        let id = linalg::identity(1);
        let action = GroupAction::block_permutation(&[(1, 1), (1, 1)], &g, &[(alloc::vec![1, 0], alloc::vec![id.clone(), id])], &cfg())
            .unwrap();
        let report = dual_weight_check(&action, &state(real_diag(&[0.3, 0.7])), &cfg()).unwrap();
        assert!(report.max() < 1e-9, "{report:?}");
    }

    #[test]
    fn left_hilbert_algebra_relations() {
        let action = z2_swap_on_m2();
        let report = left_hilbert_algebra_check(&action, &state(real_diag(&[1.0 / 3.0, 2.0 / 3.0])), &cfg()).unwrap();
        assert!(report.max() < 1e-10, "{report:?}");
        assert!(report.vector_representation.is_none());
        let report = left_hilbert_algebra_check(&action, &State::tracial(2), &cfg()).unwrap();
        assert!(report.vector_representation.unwrap() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn spectrum_is_closed_under_inversion(seed in 0u64..10_000) {
            let mut r = linalg::rng(seed, 11);
            let m = OperatorAlgebra::full(3);
            let sf = standard_form(&m, &random_state(&mut r, 3), &cfg()).unwrap();
            let spec = sf.modular_spectrum();
            let inv = sorted(spec.iter().map(|v| 1.0 / v).collect());
            prop_assert!(spec.iter().zip(&inv).all(|(a, b)| (a - b).abs() < 1e-8 * a.max(*b)));
            // Spec(Δ) = {ρ_i/ρ_j}.
            let (rho_spec, _) = linalg::hermitian_eigen(sf.density());
            let inv_rho: Vec<f64> = rho_spec.iter().map(|v| 1.0 / v).collect();
            prop_assert!(close(&spec, &product_spectrum(&rho_spec, &inv_rho), 1e-8));
        }
    }
}

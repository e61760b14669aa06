//! One section per command. Each section evaluates its checks on a built
//! [`Context`] and returns report data; `all` chains them in dependency
//! order.

use serde_json::{json, Value};
use sectorlab_core::crossed;
use sectorlab_core::dynsys::{self, AbelianDynamicalSystem, CovariantSystem};
use sectorlab_core::groups::DualGroup;
use sectorlab_core::kt::{self, SpectralMeasure, UnitaryRepresentation};
use sectorlab_core::linalg::{self, Mat};
use sectorlab_core::measure::{self, Instrument};
use sectorlab_core::modular::{self, SAMPLE_TIMES};
use sectorlab_core::vna::{self, BlockInvariant, OperatorAlgebra, State};
use sectorlab_core::Error;

use crate::codec::{encode_complex, encode_matrix, encode_real};
use crate::report::{Check, Verdict};
use crate::scenario::Context;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Sectors,
    Measure,
    CrossedProduct,
    DualityCheck,
    Theorem1,
    Classify,
    VerifyProps,
    Modular,
    All,
}

impl Command {
    /// Pipeline order used by `all`.
    pub const PIPELINE: [Command; 8] = [
        Command::Sectors,
        Command::Measure,
        Command::CrossedProduct,
        Command::DualityCheck,
        Command::Theorem1,
        Command::Classify,
        Command::VerifyProps,
        Command::Modular,
    ];

    pub const ALL: [Command; 9] = [
        Command::Sectors,
        Command::Measure,
        Command::CrossedProduct,
        Command::DualityCheck,
        Command::Theorem1,
        Command::Classify,
        Command::VerifyProps,
        Command::Modular,
        Command::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Sectors => "sectors",
            Command::Measure => "measure",
            Command::CrossedProduct => "crossed-product",
            Command::DualityCheck => "duality-check",
            Command::Theorem1 => "theorem1",
            Command::Classify => "classify",
            Command::VerifyProps => "verify-props",
            Command::Modular => "modular",
            Command::All => "all",
        }
    }
}

/// Why a section produced no data.
#[derive(Debug)]
pub enum Fault {
    /// The scenario lacks an input the section needs.
    Missing(String),
    Engine(Error),
}

impl From<Error> for Fault {
    fn from(e: Error) -> Self {
        Fault::Engine(e)
    }
}

pub struct SectionOut {
    pub data: Value,
    pub checks: Vec<Check>,
    /// Hypotheses of the section's statement that the scenario does not
    /// meet; preconditions when the section runs alone.
    pub unmet: Vec<String>,
}

pub fn run_section(command: Command, ctx: &Context) -> Result<SectionOut, Fault> {
    match command {
        Command::Sectors => sectors(ctx),
        Command::Measure => measure(ctx),
        Command::CrossedProduct => crossed_product(ctx),
        Command::DualityCheck => duality_check(ctx),
        Command::Theorem1 => theorem1(ctx),
        Command::Classify => classify(ctx),
        Command::VerifyProps => verify_props(ctx),
        Command::Modular => modular(ctx),
        Command::All => unreachable!("`all` is expanded by the runner"),
    }
}

/// Residual bound for a check on operators of dimension `dim`.
fn limit(ctx: &Context, dim: usize) -> f64 {
    ctx.cfg.tol.max(1e-13) * 100.0 * (dim.max(1) as f64).sqrt()
}

fn invariant_json(inv: &BlockInvariant) -> Value {
    json!({
        "blocks": inv.blocks().iter().map(|&(n, m)| json!([n, m])).collect::<Vec<_>>(),
        "display": inv.to_string(),
        "abstract": inv.abstract_form().to_string(),
    })
}

fn reals(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&x| encode_real(x)).collect())
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn sectors(ctx: &Context) -> Result<SectionOut, Fault> {
    let m = &ctx.algebra;
    let cfg = &ctx.cfg;
    let d = m.ambient_dim();
    let mut checks = Vec::new();
    let sectors = m.sectors(cfg)?;
    let inv = m.block_invariant(cfg)?;
    let center = m.center(cfg)?;

    checks.push(Check::residual("algebra_closure", m.validate(cfg).max(), limit(ctx, d)));
    let mut sum = linalg::zeros(d);
    let mut central = 0.0f64;
    let basis = m.basis_matrices();
    for (k, s) in sectors.iter().enumerate() {
        sum += &s.projection;
        for x in &basis {
            central = central.max(linalg::dist(&(&s.projection * x), &(x * &s.projection)));
        }
        for t in &sectors[k + 1..] {
            central = central.max(linalg::frob(&(&s.projection * &t.projection)));
        }
    }
    checks.push(Check::residual("sectors_resolve_identity", linalg::dist(&sum, &linalg::identity(d)), limit(ctx, d)));
    checks.push(Check::residual("sectors_central_and_orthogonal", central, limit(ctx, d)));

    let comm = vna::commutant(m.generators(), d, cfg)?;
    let comm_inv = comm.block_invariant(cfg)?;
    checks.push(
        Check::boolean("commutant_invariant_is_transpose", comm_inv == inv.commutant())
            .with_invariants([comm_inv.to_string(), inv.commutant().to_string()]),
    );
    let double = vna::generate(&basis, d, cfg)?;
    checks.push(Check::residual("double_commutant", double.equality_residual(m), limit(ctx, d)));
    checks.push(
        Check::boolean("center_dimension_counts_sectors", center.dim() == sectors.len())
            .with_detail(format!("dim Z = {}, sectors = {}", center.dim(), sectors.len())),
    );

    let mut data = json!({
        "ambient_dim": d,
        "algebra_dim": m.dim(),
        "invariant": invariant_json(&inv),
        "commutant_invariant": invariant_json(&comm_inv),
        "is_factor": inv.is_factor(),
        "center_dim": center.dim(),
        "sectors": sectors.iter().enumerate().map(|(k, s)| json!({
            "index": k,
            "block_size": s.block_size,
            "multiplicity": s.multiplicity,
            "rank": s.range.ncols(),
            "projection": encode_matrix(&s.projection),
        })).collect::<Vec<_>>(),
    });

    if let Some(state) = &ctx.state {
        let p = vna::qc_channel(state, m, cfg)?;
        let direct: Vec<f64> = sectors.iter().map(|s| state.eval(&s.projection).re).collect();
        checks.push(Check::residual("qc_channel_normalized", (p.iter().sum::<f64>() - 1.0).abs(), limit(ctx, 1)));
        checks.push(Check::residual(
            "qc_channel_matches_direct_evaluation",
            max_of(p.iter().zip(&direct).map(|(a, b)| (a - b).abs())),
            limit(ctx, 1),
        ));
        data["qc_channel"] = reals(&p);
    }

    if let Some(a) = &ctx.masa {
        let contained = m.contains_algebra(a, cfg);
        let is_masa = contained && vna::is_masa(a, m, cfg)?;
        checks.push(Check::boolean("masa", is_masa).with_detail(if contained {
            "A′∩M = A tested as subspace equality"
        } else {
            "A is not contained in M"
        }));
        let mut atoms = Vec::new();
        if contained {
            let atom_list = a.sectors(cfg)?;
            let mut worst = 0.0f64;
            for (i, atom) in atom_list.iter().enumerate() {
                let z = vna::central_support(&atom.projection, m, cfg)?;
                let (k, r) = sectors
                    .iter()
                    .enumerate()
                    .map(|(k, s)| (k, linalg::dist(&z, &s.projection)))
                    .min_by(|x, y| x.1.total_cmp(&y.1))
                    .expect("at least one sector");
                worst = worst.max(r);
                let partners: Vec<usize> = (0..atom_list.len())
                    .filter(|&j| vna::quasi_equivalent(&atom.projection, &atom_list[j].projection, m, cfg).unwrap_or(false))
                    .collect();
                atoms.push(json!({ "index": i, "rank": atom.range.ncols(), "central_support_sector": k, "quasi_equivalent_to": partners }));
            }
            checks.push(Check::residual("central_supports_are_sectors", worst, limit(ctx, d)));
        }
        data["masa"] = json!({ "dim": a.dim(), "is_masa": is_masa, "atoms": atoms });
    }
    Ok(SectionOut { data, checks, unmet: Vec::new() })
}

/// The abelian algebra carrying the embedded group for an inner action.
fn embedded_masa(ctx: &Context) -> Result<(OperatorAlgebra, UnitaryRepresentation), Fault> {
    if !ctx.action.is_inner(&ctx.cfg) {
        return Err(Fault::Missing("needs an inner action".into()));
    }
    let rep = ctx
        .action
        .representation(&ctx.cfg)
        .ok_or_else(|| Fault::Missing("the implementing unitaries do not form a representation".into()))?;
    let a = match &ctx.masa {
        Some(a) => a.clone(),
        None => vna::generate(&rep.generator_unitaries(), ctx.algebra.ambient_dim(), &ctx.cfg)?,
    };
    Ok((a, rep))
}

fn kt_checks(ctx: &Context, checks: &mut Vec<Check>) -> Value {
    let g = &ctx.group;
    let dual = g.dual();
    let n = g.order();
    let v = kt::build_v(&dual);
    let w = kt::build_w(g);
    let vp = kt::build_v_prime(g);
    let mut orth = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let s: num_complex::Complex64 =
                g.elements().map(|u| g.character_value(a, u) * g.character_value(b, u).conj()).sum::<num_complex::Complex64>()
                    / n as f64;
            let target = if a == b { 1.0 } else { 0.0 };
            orth = orth.max((s - target).norm());
        }
    }
    let f = g.fourier_transform();
    let bound = limit(ctx, n * n);
    checks.push(Check::residual("character_orthogonality", orth, bound));
    checks.push(Check::residual("fourier_unitary", linalg::unitarity_residual(&f), bound));
    checks.push(Check::residual("pentagon_v", v.pentagon_residual(), bound));
    checks.push(Check::residual("pentagon_w", w.pentagon_residual(), bound));
    checks.push(Check::residual("pentagon_v_prime", vp.pentagon_residual(), bound));
    checks.push(Check::residual("fourier_conjugacy_w", kt::fourier_conjugacy_residual(g), bound));
    checks.push(Check::residual("v_intertwining", kt::v_intertwining_residual(&dual), bound));
    checks.push(Check::residual("w_intertwining", kt::w_intertwining_residual(g), bound));
    json!({
        "group_orders": g.orders(),
        "group_order": n,
        "fourier_transform": encode_matrix(&f),
        "v": encode_matrix(v.matrix()),
        "w": encode_matrix(w.matrix()),
    })
}

fn atom_json(e: &SpectralMeasure, dual: &DualGroup) -> Value {
    Value::Array(
        e.atoms()
            .iter()
            .enumerate()
            .map(|(k, a)| {
                json!({
                    "index": k,
                    "character": a.character,
                    "character_exponents": dual.character(a.character).exponents(),
                    "rank": a.projection.trace().re.round() as usize,
                    "projection": encode_matrix(&a.projection),
                })
            })
            .collect(),
    )
}

fn measure(ctx: &Context) -> Result<SectionOut, Fault> {
    let cfg = &ctx.cfg;
    let state = ctx.state.as_ref().ok_or_else(|| Fault::Missing("needs a state".into()))?;
    let (a, rep) = embedded_masa(ctx)?;
    let mut checks = Vec::new();
    let kt_data = kt_checks(ctx, &mut checks);
    let d = a.ambient_dim();
    let n = ctx.group.order();
    let dual = ctx.group.dual();
    let e = kt::spectral_measure(&a, &rep, cfg)?;
    let coupling_measure = match &ctx.negative_control {
        Some(nc) => e.with_swapped_characters(nc.swap_characters.0, nc.swap_characters.1)?,
        None => e.clone(),
    };
    let coupling = kt::coupling_estar_v(&coupling_measure);
    let inst = Instrument::with_coupling(&e, coupling.clone());
    let big = limit(ctx, d * n * n);

    checks.push(Check::residual("coupling_unitary", linalg::unitarity_residual(&coupling), big));
    checks.push(Check::residual(
        "modified_pentagon_estar_v",
        kt::modified_pentagon_residual(&coupling, kt::build_v(&dual).matrix(), d, n),
        big,
    ));
    let ew = kt::coupling_ew(&e);
    checks.push(Check::residual(
        "modified_pentagon_ew",
        kt::modified_pentagon_residual(&ew, kt::build_w(&ctx.group).matrix(), d, n),
        big,
    ));
    checks.push(Check::residual("ew_intertwining", kt::ew_intertwining_residual(&e), big));

    let corr = measure::perfect_correlation_check(&coupling, &e, cfg.tol.max(1e-12) * 10.0)?;
    let perfect = corr.iter().all(|c| c.exact);
    checks.push(Check {
        residual: Some(max_of(corr.iter().map(|c| c.residual))),
        ..Check::boolean("perfect_correlation", perfect)
    });

    let dist = inst.distribution(state)?;
    let total: f64 = dist.iter().map(|&(_, p)| p).sum();
    checks.push(Check::residual("probabilities_sum_to_one", (total - 1.0).abs(), limit(ctx, 1)));

    let rho = state.density();
    let mut born = 0.0f64;
    let mut post_dev = 0.0f64;
    let mut repeat = 0.0f64;
    let mut outcomes = Vec::new();
    for &(chi, p) in &dist {
        let proj = e.projection_of(chi);
        let oracle_p = (&proj * rho).trace().re;
        born = born.max((p - oracle_p).abs());
        let res = inst.post_state(&[chi], state)?;
        let post = res.post_state.clone();
        if let Some(post) = &post {
            let oracle = (&proj * rho * &proj).unscale(oracle_p.max(f64::MIN_POSITIVE));
            post_dev = post_dev.max(linalg::dist(post, &oracle));
            let again = State::from_density(post.clone(), cfg)?;
            repeat = repeat.max((inst.probability(&[chi], &again)? - 1.0).abs());
        }
        outcomes.push(json!({
            "character": chi,
            "probability": encode_real(p),
            "post_state": post.as_ref().map(encode_matrix),
        }));
    }
    checks.push(Check::residual("born_rule_probabilities", born, limit(ctx, 1)));
    checks.push(Check::residual("post_state_is_normalized_projection", post_dev, limit(ctx, d)));
    checks.push(Check::residual("repeatability", repeat, limit(ctx, 1)));

    let spectrum = inst.spectrum();
    let (left, right) = spectrum.split_at(spectrum.len() / 2);
    let mut additivity = 0.0f64;
    let mut neutral = 0.0f64;
    let tests: Vec<Mat> = ctx.algebra.basis_matrices().into_iter().take(16).collect();
    for b in &tests {
        let whole = inst.evaluate(&spectrum, state, b)?;
        let parts = if left.is_empty() { 0.0.into() } else { inst.evaluate(left, state, b)? }
            + if right.is_empty() { 0.0.into() } else { inst.evaluate(right, state, b)? };
        additivity = additivity.max((whole - parts).norm());
        for &chi in &spectrum {
            let x = inst.evaluate(&[chi], state, b)?;
            let y = inst.evaluate_by_invariant_mean(&[chi], state, b)?;
            neutral = neutral.max((x - y).norm());
        }
    }
    checks.push(Check::residual("instrument_additivity", additivity, limit(ctx, d)));
    checks.push(Check::residual("neutral_position_agreement", neutral, limit(ctx, d)));

    let samples: Vec<usize> = (0..16).map(|k| inst.sample(state, cfg, k)).collect::<Result<_, _>>()?;
    let data = json!({
        "kt": kt_data,
        "masa_dim": a.dim(),
        "spectrum_injective": e.is_injective(),
        "atoms": atom_json(&e, &dual),
        "outcomes": outcomes,
        "perfect_correlation": perfect,
        "correlation": corr.iter().map(|c| json!({
            "atom": c.atom, "character": c.character, "residual": c.residual, "exact": c.exact,
        })).collect::<Vec<_>>(),
        "negative_control": ctx.negative_control.as_ref().map(|nc| json!({"swap_characters": [nc.swap_characters.0, nc.swap_characters.1]})),
        "sampled_outcomes": samples,
    });
    Ok(SectionOut { data, checks, unmet: Vec::new() })
}

fn random_function(ctx: &Context, salt: u64) -> Vec<Mat> {
    let mut r = linalg::rng(ctx.cfg.seed, salt);
    let d = ctx.algebra.ambient_dim();
    ctx.group.elements().map(|_| ctx.algebra.project(&linalg::random_matrix(&mut r, d))).collect()
}

fn crossed_product(ctx: &Context) -> Result<SectionOut, Fault> {
    let cfg = &ctx.cfg;
    let action = &ctx.action;
    let c = crossed::crossed_product(action, cfg)?;
    let big = c.ambient_dim();
    let mut checks = Vec::new();
    checks.push(Check::residual("covariance", c.covariance_residual(), limit(ctx, big)));

    let (x, y) = (random_function(ctx, 0xc0), random_function(ctx, 0xc1));
    let fx = crossed::op_fourier(&x, action);
    let fy = crossed::op_fourier(&y, action);
    let hom = linalg::dist(&crossed::op_fourier(&crossed::convolution(&x, &y, action), action), &(&fx * &fy));
    let inv = linalg::dist(&crossed::op_fourier(&crossed::involution(&x, action), action), &fx.adjoint());
    let scale = linalg::frob(&fx).max(1.0) * linalg::frob(&fy).max(1.0);
    checks.push(Check::residual("fourier_convolution_homomorphism", hom / scale, limit(ctx, big)));
    checks.push(Check::residual("fourier_involution", inv / linalg::frob(&fx).max(1.0), limit(ctx, big)));
    checks.push(Check::residual(
        "fourier_image_in_crossed_product",
        c.algebra().membership_residual(&fx),
        limit(ctx, big),
    ));

    let dual = crossed::dual_action(&c, cfg)?;
    let mut samples: Vec<Mat> = action.algebra().generators().iter().map(|g| action.pi(g)).collect();
    samples.extend(ctx.group.generators().iter().map(|&g| action.lambda(g)));
    samples.push(fx.clone());
    let coaction = max_of(samples.iter().map(|s| crossed::dual_coaction_residual(&c, &dual, s)));
    checks.push(Check::residual("dual_coaction", coaction, limit(ctx, big)));

    let center = c.algebra().center(cfg)?;
    let fixed = crossed::fixed_point_algebra(action, cfg);
    let mut data = json!({
        "ambient_dim": big,
        "algebra_dim": c.algebra().dim(),
        "invariant": invariant_json(c.invariant()),
        "is_factor": c.invariant().is_factor(),
        "center_dim": center.dim(),
        "fixed_point_algebra": { "dim": fixed.dim(), "invariant": invariant_json(&fixed.block_invariant(cfg)?) },
        "action_inner": action.is_inner(cfg),
    });

    match embedded_masa(ctx) {
        Ok((a, rep)) if vna::is_masa(&a, &ctx.algebra, cfg).unwrap_or(false) => {
            let e = kt::spectral_measure(&a, &rep, cfg)?;
            let ew = kt::coupling_ew(&e);
            let n = ctx.group.order();
            let pi_dev = max_of(ctx.algebra.basis_matrices().iter().map(|b| {
                linalg::dist(&action.pi(b), &(&ew * linalg::kron(b, &linalg::identity(n)) * ew.adjoint()))
            }));
            checks.push(Check::residual("pi_equals_ew_conjugation", pi_dev, limit(ctx, big)));
            let sym = max_of(ctx.group.elements().map(|u| {
                let delta: Vec<Mat> = ctx
                    .group
                    .elements()
                    .map(|v| if v == u { x[u].clone() } else { linalg::zeros(ctx.algebra.ambient_dim()) })
                    .collect();
                let lhs = crossed::symbolic_fourier(&delta, &e);
                linalg::dist(&lhs, &(&x[u] * e.unitary(u)))
            }));
            checks.push(Check::residual("symbolic_fourier_slice", sym, limit(ctx, big)));
            if ctx.algebra.block_invariant(cfg)?.is_factor() {
                let image = crossed::masa_center_image(&e, cfg)?;
                checks.push(
                    Check::boolean("center_equals_masa_image", center.equals(&image, cfg))
                        .with_detail(format!("dim Z = {}, |Spec(A)| = {}", center.dim(), e.atoms().len())),
                );
            } else {
                checks.push(Check::not_applicable("center_equals_masa_image", "the algebra is not a factor"));
            }
            checks.push(Check::boolean(
                "fourier_bijection_dimension",
                c.algebra().dim() == ctx.algebra.dim() * n,
            ));
        }
        Ok(_) => checks.push(Check::not_applicable("center_equals_masa_image", "the embedded group does not generate a masa")),
        Err(Fault::Missing(why)) => checks.push(Check::not_applicable("center_equals_masa_image", why)),
        Err(e) => return Err(e),
    }
    data["dual_action_group_orders"] = json!(dual.group().orders());
    Ok(SectionOut { data, checks, unmet: Vec::new() })
}

fn duality_check(ctx: &Context) -> Result<SectionOut, Fault> {
    let r = crossed::takesaki_duality_check(&ctx.action, &ctx.cfg)?;
    let big = ctx.algebra.ambient_dim() * ctx.group.order();
    let checks = vec![
        Check::boolean("takesaki_duality", r.comparison.isomorphic)
            .with_invariants([r.comparison.left.abstract_form().to_string(), r.comparison.right.abstract_form().to_string()]),
        Check::residual("dual_coaction", r.dual_coaction_residual, limit(ctx, big)),
        Check::boolean("dual_fixed_points_equal_pi_m", r.fixed_points_of_dual_equal_pi_m),
    ];
    let data = json!({
        "crossed_product": invariant_json(&r.crossed),
        "second_crossed_product": invariant_json(&r.comparison.left),
        "target": invariant_json(&r.comparison.right),
        "isomorphic": r.comparison.isomorphic,
        "spatially_equal": r.comparison.spatially_equal,
        "stabilization_note": r.stabilization_note,
    });
    Ok(SectionOut { data, checks, unmet: Vec::new() })
}

fn theorem1(ctx: &Context) -> Result<SectionOut, Fault> {
    let cfg = &ctx.cfg;
    let action = &ctx.action;
    let a = match (&ctx.masa, embedded_masa(ctx)) {
        (Some(a), _) => a.clone(),
        (None, Ok((a, _))) => a,
        (None, Err(Fault::Missing(_))) => crossed::fixed_point_algebra(action, cfg),
        (None, Err(e)) => return Err(e),
    };
    let r = crossed::theorem1_split_check(action, &a, cfg)?;
    let mut checks = Vec::new();
    let diagnostics: Vec<&str> = r.diagnostics.iter().map(|d| d.as_str()).collect();
    let compare = |name: &str, cmp: &Option<crossed::InvariantComparison>, checks: &mut Vec<Check>| match cmp {
        Some(c) => checks.push(
            Check::boolean(name, c.isomorphic)
                .with_invariants([c.left.abstract_form().to_string(), c.right.abstract_form().to_string()]),
        ),
        None => checks.push(Check::not_applicable(
            name,
            r.note.clone().unwrap_or_else(|| format!("hypotheses fail: {}", diagnostics.join(", "))),
        )),
    };
    compare("theorem1_amplification", &r.part_i, &mut checks);
    compare("theorem1_reconstruction", &r.part_ii, &mut checks);

    let mut semi = Value::Null;
    if r.hypotheses_hold() {
        let (_, rep) = embedded_masa(ctx)?;
        let e = kt::spectral_measure(&a, &rep, cfg)?;
        match crossed::semi_duality_witness(&e) {
            Ok(v) => {
                let s = crossed::semi_duality_check(action, &v, cfg)?;
                let zero = vec![0.0; ctx.group.order()];
                let diag = crossed::semi_duality_check(action, &crossed::diagonal_candidate(&e, &zero), cfg)?;
                checks.push(Check { residual: Some(s.residual), ..Check::boolean("semi_duality_witness", s.holds) });
                semi = json!({ "witness_residual": s.residual, "diagonal_candidate_residual": diag.residual });
            }
            Err(Error::Precondition(why)) => checks.push(Check::not_applicable("semi_duality_witness", why)),
            Err(e) => return Err(e.into()),
        }
    } else {
        checks.push(Check::not_applicable("semi_duality_witness", "theorem hypotheses fail"));
    }
    let cmp_json = |c: &Option<crossed::InvariantComparison>| {
        c.as_ref().map(|c| {
            json!({
                "left": invariant_json(&c.left),
                "right": invariant_json(&c.right),
                "isomorphic": c.isomorphic,
                "spatially_equal": c.spatially_equal,
            })
        })
    };
    let data = json!({
        "masa_dim": a.dim(),
        "hypotheses_hold": r.hypotheses_hold(),
        "diagnostics": diagnostics,
        "amplification": cmp_json(&r.part_i),
        "reconstruction": cmp_json(&r.part_ii),
        "note": r.note,
        "semi_duality": semi,
    });
    let unmet = diagnostics.iter().map(|d| format!("hypothesis fails: {d}")).collect();
    Ok(SectionOut { data, checks, unmet })
}

/// Reads the scenario as `N = ⊕_x B(ℂ^h)` with `θ_g = β_g⊗Ad(U_g)`: the
/// algebra must be given as equal blocks `(h,1)` and every generator
/// implementer must map each block onto one block by a common unitary (up
/// to phase).
pub fn covariant_system(ctx: &Context) -> Result<CovariantSystem, Fault> {
    let layout = ctx.layout.as_ref().ok_or_else(|| Fault::Missing("needs an algebra given as blocks".into()))?;
    let (h, mult) = layout[0];
    if mult != 1 || layout.iter().any(|&b| b != (h, 1)) {
        return Err(Fault::Missing("needs equal blocks of multiplicity one".into()));
    }
    let x = layout.len();
    let tol = limit(ctx, h * x);
    let mut perms = Vec::new();
    let mut fiber = Vec::new();
    for g in ctx.group.generators() {
        let w = ctx.action.implementer(g);
        let mut perm = vec![0; x];
        let mut common: Option<Mat> = None;
        for k in 0..x {
            let blocks: Vec<Mat> = (0..x).map(|t| w.view((t * h, k * h), (h, h)).into_owned()).collect();
            let t = (0..x).max_by(|&i, &j| linalg::frob(&blocks[i]).total_cmp(&linalg::frob(&blocks[j]))).expect("blocks");
            let stray = max_of((0..x).filter(|&i| i != t).map(|i| linalg::frob(&blocks[i])));
            if stray > tol {
                return Err(Fault::Missing("the action does not permute blocks".into()));
            }
            perm[k] = t;
            let u = blocks[t].clone();
            match &common {
                None => common = Some(u),
                Some(u0) => {
                    let c = (u0.adjoint() * &u).trace() / h as f64;
                    if (c.norm() - 1.0).abs() > tol || linalg::dist(&u, &(u0 * c)) > tol {
                        return Err(Fault::Missing("the action is not of product form β⊗Ad(U)".into()));
                    }
                }
            }
        }
        perms.push(perm);
        fiber.push(common.expect("at least one block"));
    }
    let sys = AbelianDynamicalSystem::from_generators(&ctx.group, x, &perms)?;
    let rep = UnitaryRepresentation::from_generators(&ctx.group, &fiber, &ctx.cfg)?;
    Ok(CovariantSystem::new(sys, rep)?)
}

fn system_json(sys: &AbelianDynamicalSystem) -> Value {
    json!({
        "atoms": sys.atoms(),
        "generator_perms": sys.generator_perms(),
        "orbits": sys.orbits(),
        "free": dynsys::is_free(sys),
        "ergodic": dynsys::is_ergodic(sys),
        "faithful": dynsys::is_faithful(sys),
    })
}

fn classify(ctx: &Context) -> Result<SectionOut, Fault> {
    let cfg = &ctx.cfg;
    let cov = covariant_system(ctx)?;
    let r = dynsys::classify_type(&cov, cfg)?;
    let mut checks = vec![Check::boolean("classification_consistent", r.consistent)];
    if r.centrally_ergodic && r.m_is_factor {
        checks.push(
            Check::boolean("factor_is_type_i_with_flow", r.verdict == dynsys::TypeVerdict::TypeI && r.flow.is_some())
                .with_invariants([r.invariant.abstract_form().to_string()]),
        );
    } else {
        checks.push(Check::not_applicable("factor_is_type_i_with_flow", "the crossed product is not a factor"));
    }
    let x = cov.central().atoms();
    let shift: Vec<usize> = (0..x).map(|i| (i + 1) % x).collect();
    let moved = CovariantSystem::new(cov.central().relabel(&shift)?, cov.representation().clone())?;
    let s = dynsys::classify_type(&moved, cfg)?;
    checks.push(Check::boolean(
        "relabeling_invariance",
        s.verdict == r.verdict && s.invariant == r.invariant && s.flow.is_some() == r.flow.is_some(),
    ));
    let spec = dynsys::modular_spectrum(&cov, &ctx.weights, cfg)?;
    let contains_one = spec.values.iter().any(|v| (v - 1.0).abs() < limit(ctx, 1));
    checks.push(Check::boolean("modular_spectrum_contains_one", contains_one));
    let data = json!({
        "central_system": system_json(cov.central()),
        "fiber_dim": cov.fiber_dim(),
        "verdict": r.verdict.as_str(),
        "centrally_ergodic": r.centrally_ergodic,
        "centrally_free": r.centrally_free,
        "flow": r.flow,
        "invariant_measure": r.invariant_measure.as_deref().map(reals),
        "crossed_product_is_factor": r.m_is_factor,
        "crossed_product": invariant_json(&r.invariant),
        "note": r.note,
        "modular_spectrum": {
            "values": reals(&spec.values),
            "per_weight": spec.per_weight.iter().map(|w| reals(w)).collect::<Vec<_>>(),
            "note": spec.note,
        },
    });
    Ok(SectionOut { data, checks, unmet: Vec::new() })
}

fn verify_props(ctx: &Context) -> Result<SectionOut, Fault> {
    let cfg = &ctx.cfg;
    let cov = covariant_system(ctx)?;
    let sys = cov.central();
    let p2 = dynsys::proposition2_check(sys, cfg)?;
    let p3 = dynsys::proposition3_check(&cov, cfg)?;
    let mut checks = vec![
        Check::boolean("proposition2_free_iff_masa", p2.clause_i)
            .with_detail(format!("free = {}, masa = {}", p2.free, p2.masa)),
    ];
    checks.push(match p2.clause_ii {
        Some(ok) => Check::boolean("proposition2_ergodic_iff_factor", ok)
            .with_detail(format!("ergodic = {}, factor = {}, Z(Q) = π(A^β): {}", p2.ergodic, p2.factor, p2.center_is_fixed_points)),
        None => Check::not_applicable("proposition2_ergodic_iff_factor", "the action is not free"),
    });
    if p2.ergodic {
        checks.push(Check::boolean("ergodic_action_free_iff_faithful", p2.free == dynsys::is_faithful(sys)));
    }
    if p3.centrally_free {
        let worst = max_of(p3.relations.iter().map(|r| r.residual));
        checks.push(Check {
            residual: Some(worst),
            ..Check::boolean("proposition3_relations", p3.relations_hold())
        });
        checks.push(Check::boolean("corollary_center_chain", p3.corollary_chain));
    } else {
        checks.push(Check::not_applicable("proposition3_relations", "the action is not centrally free"));
    }
    let data = json!({
        "central_system": system_json(sys),
        "proposition2": {
            "free": p2.free,
            "ergodic": p2.ergodic,
            "masa": p2.masa,
            "factor": p2.factor,
            "fixed_point_dim": p2.fixed_point_dim,
            "center_dim": p2.center_dim,
            "center_is_fixed_points": p2.center_is_fixed_points,
            "crossed_product": invariant_json(&p2.invariant),
        },
        "proposition3": {
            "centrally_free": p3.centrally_free,
            "centrally_ergodic": p3.centrally_ergodic,
            "covered_by_hypothesis": p3.covered_by_hypothesis,
            "relations": p3.relations.iter().map(|r| json!({
                "name": r.name, "left_dim": r.left_dim, "right_dim": r.right_dim,
                "residual": r.residual, "holds": r.holds,
            })).collect::<Vec<_>>(),
            "corollary_chain": p3.corollary_chain,
            "m_is_factor": p3.m_is_factor,
            "crossed_product": invariant_json(&p3.invariant),
        },
    });
    Ok(SectionOut { data, checks, unmet: Vec::new() })
}

fn modular(ctx: &Context) -> Result<SectionOut, Fault> {
    let cfg = &ctx.cfg;
    let m = &ctx.algebra;
    let state = ctx.state.as_ref().ok_or_else(|| Fault::Missing("needs a faithful state".into()))?;
    let sf = modular::standard_form(m, state, cfg)?;
    let n = sf.dim();
    let res = sf.residuals(cfg)?;
    let bound = limit(ctx, n);
    let mut checks = vec![
        Check::residual("s_on_m", res.s_on_m, bound),
        Check::boolean("delta_positive", res.delta_min_eigenvalue > 0.0)
            .with_detail(format!("min eigenvalue {:e}", res.delta_min_eigenvalue)),
        Check::residual("j_involution", res.j_involution, bound),
        Check::residual("j_antiunitary", res.j_antiunitary, bound),
        Check::residual("tomita_jmj_equals_commutant", res.tomita, bound),
        Check::residual("modular_group_law", res.automorphism, bound),
        Check::residual("spectrum_symmetry", res.spectrum_symmetry, bound),
    ];
    let basis = m.basis_matrices();
    let mut kms = 0.0f64;
    for x in &basis {
        for y in &basis {
            kms = kms.max(modular::kms_check(&sf, x, y, cfg)?);
        }
    }
    checks.push(Check::residual("kms", kms, bound));

    let mut cocycles = Vec::new();
    for (i, psi) in ctx.weights.iter().enumerate() {
        let c = modular::ConnesCocycle::new(m, psi, state, cfg)?;
        let unitary = max_of(SAMPLE_TIMES.iter().map(|&t| linalg::unitarity_residual(&c.at(t))));
        let inside = max_of(SAMPLE_TIMES.iter().map(|&t| c.in_algebra_residual(t)));
        checks.push(Check::residual(&format!("cocycle_unitary_{i}"), unitary, bound));
        checks.push(Check::residual(&format!("cocycle_in_algebra_{i}"), inside, bound));
        cocycles.push(json!({ "weight": i, "at_one": encode_matrix(&c.at(1.0)) }));
    }
    if ctx.weights.len() >= 2 {
        let chain = max_of(SAMPLE_TIMES.iter().map(|&t| {
            modular::cocycle_chain_residual(m, &ctx.weights[0], &ctx.weights[1], state, t, cfg).unwrap_or(f64::INFINITY)
        }));
        checks.push(Check::residual("cocycle_chain_rule", chain, bound));
    } else {
        checks.push(Check::not_applicable("cocycle_chain_rule", "needs two weights besides the state"));
    }

    let dw = modular::dual_weight_check(&ctx.action, state, cfg)?;
    let big = limit(ctx, n * ctx.group.order());
    checks.push(Check::residual("dual_weight_pi_formula", dw.pi_formula, big));
    checks.push(Check::residual("dual_weight_lambda_formula", dw.lambda_formula, big));
    checks.push(Check::residual("dual_weight_delta", dw.delta_oracle, big));
    checks.push(Check::residual("dual_weight_j", dw.j_oracle, big));
    let lh = modular::left_hilbert_algebra_check(&ctx.action, state, cfg)?;
    checks.push(Check::residual("left_hilbert_algebra", lh.max(), big));

    let data = json!({
        "gns_dim": n,
        "density": encode_matrix(sf.density()),
        "omega": sf.omega().iter().map(|z| encode_complex(*z)).collect::<Vec<_>>(),
        "delta_spectrum": reals(&sf.modular_spectrum()),
        "kms_residual": kms,
        "cocycles": cocycles,
        "dual_weight": {
            "times": dw.times,
            "invariant_weight": dw.invariant_weight,
            "cocycle_deviation": dw.cocycle_deviation,
        },
        "left_hilbert_algebra": {
            "homomorphism": lh.homomorphism,
            "involution": lh.involution,
            "vector_representation": lh.vector_representation,
        },
    });
    Ok(SectionOut { data, checks, unmet: Vec::new() })
}

/// Verdict summary for a section's checks.
pub fn section_status(checks: &[Check]) -> &'static str {
    if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        "fail"
    } else {
        "pass"
    }
}

//! Scenario files: parsing (shape errors are parse errors) and construction
//! of the engine objects (engine errors are precondition or ambiguity
//! diagnostics).

use serde::Deserialize;
use sectorlab_core::crossed::GroupAction;
use sectorlab_core::groups::FiniteAbelianGroup;
use sectorlab_core::linalg::{CVec, Mat};
use sectorlab_core::vna::{self, OperatorAlgebra, State};
use sectorlab_core::{Config, Error};

use crate::codec::{self, MatrixLit, VectorLit};

pub const SCENARIO_SCHEMA: &str = "sectorlab.scenario/1";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: String,
    #[serde(default)]
    name: Option<String>,
    group: Vec<usize>,
    algebra: RawAlgebra,
    #[serde(default)]
    action: Option<RawAction>,
    #[serde(default)]
    masa: Option<Vec<MatrixLit>>,
    #[serde(default)]
    state: Option<RawState>,
    #[serde(default)]
    weights: Vec<RawState>,
    #[serde(default)]
    negative_control: Option<NegativeControl>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawAlgebra {
    Blocks(Vec<(usize, usize)>),
    Generators { dim: usize, matrices: Vec<MatrixLit> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlockMove {
    perm: Vec<usize>,
    unitaries: Vec<MatrixLit>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawAction {
    Trivial,
    Inner(Vec<MatrixLit>),
    BlockPermutation(Vec<RawBlockMove>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawState {
    Vector(VectorLit),
    Density(MatrixLit),
}

#[derive(Clone, Debug, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct NegativeControl {
    /// Atom indices whose character labels are exchanged in the coupling.
    pub swap_characters: (usize, usize),
}

#[derive(Clone, Debug)]
pub enum AlgebraSpec {
    Blocks(Vec<(usize, usize)>),
    Generators { dim: usize, matrices: Vec<Mat> },
}

#[derive(Clone, Debug)]
pub enum ActionSpec {
    Trivial,
    Inner(Vec<Mat>),
    BlockPermutation(Vec<(Vec<usize>, Vec<Mat>)>),
}

#[derive(Clone, Debug)]
pub enum StateSpec {
    Vector(CVec),
    Density(Mat),
}

/// A parsed scenario: every matrix literal is square, nothing is checked
/// against the engine yet.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: Option<String>,
    pub group: Vec<usize>,
    pub algebra: AlgebraSpec,
    pub action: ActionSpec,
    pub masa: Option<Vec<Mat>>,
    pub state: Option<StateSpec>,
    pub weights: Vec<StateSpec>,
    pub negative_control: Option<NegativeControl>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    /// The document as read, echoed into reports.
    pub source: serde_json::Value,
}

fn matrices(lits: &[MatrixLit], what: &str) -> Result<Vec<Mat>, String> {
    lits.iter().enumerate().map(|(i, m)| codec::square_matrix(m, &format!("{what}[{i}]"))).collect()
}

fn state_spec(raw: &RawState, what: &str) -> Result<StateSpec, String> {
    Ok(match raw {
        RawState::Vector(v) => StateSpec::Vector(codec::vector(v, what)?),
        RawState::Density(m) => StateSpec::Density(codec::square_matrix(m, what)?),
    })
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, String> {
        let source: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
        let raw: RawScenario = serde_json::from_value(source.clone()).map_err(|e| format!("invalid scenario: {e}"))?;
        if raw.schema != SCENARIO_SCHEMA {
            return Err(format!("unsupported schema {:?}, expected {SCENARIO_SCHEMA:?}", raw.schema));
        }
        if let Some(t) = raw.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(format!("tolerance must be positive, found {t}"));
            }
        }
        let algebra = match &raw.algebra {
            RawAlgebra::Blocks(b) => AlgebraSpec::Blocks(b.clone()),
            RawAlgebra::Generators { dim, matrices: m } => {
                AlgebraSpec::Generators { dim: *dim, matrices: matrices(m, "algebra.generators")? }
            }
        };
        let action = match &raw.action {
            None | Some(RawAction::Trivial) => ActionSpec::Trivial,
            Some(RawAction::Inner(m)) => ActionSpec::Inner(matrices(m, "action.inner")?),
            Some(RawAction::BlockPermutation(moves)) => ActionSpec::BlockPermutation(
                moves
                    .iter()
                    .enumerate()
                    .map(|(i, mv)| Ok((mv.perm.clone(), matrices(&mv.unitaries, &format!("action.block_permutation[{i}]"))?)))
                    .collect::<Result<_, String>>()?,
            ),
        };
        let masa = raw.masa.as_ref().map(|m| matrices(m, "masa")).transpose()?;
        let state = raw.state.as_ref().map(|s| state_spec(s, "state")).transpose()?;
        let weights = raw
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| state_spec(w, &format!("weights[{i}]")))
            .collect::<Result<_, String>>()?;
        Ok(Self {
            name: raw.name,
            group: raw.group,
            algebra,
            action,
            masa,
            state,
            weights,
            negative_control: raw.negative_control,
            tolerance: raw.tolerance,
            seed: raw.seed,
            source,
        })
    }
}

/// Engine objects built from a scenario; every module precondition on the
/// inputs themselves has been checked.
#[derive(Clone, Debug)]
pub struct Context {
    pub cfg: Config,
    pub group: FiniteAbelianGroup,
    pub algebra: OperatorAlgebra,
    /// Block layout when the algebra was given in canonical block form.
    pub layout: Option<Vec<(usize, usize)>>,
    pub action: GroupAction,
    /// Whether the scenario names an action explicitly.
    pub action_given: bool,
    pub masa: Option<OperatorAlgebra>,
    pub state: Option<State>,
    pub weights: Vec<State>,
    pub negative_control: Option<NegativeControl>,
}

fn build_state(spec: &StateSpec, d: usize, cfg: &Config) -> Result<State, Error> {
    let s = match spec {
        StateSpec::Vector(v) => State::from_vector(v, cfg)?,
        StateSpec::Density(m) => State::from_density(m.clone(), cfg)?,
    };
    if s.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: s.dim() });
    }
    Ok(s)
}

impl Context {
    pub fn build(sc: &Scenario, cfg: Config) -> Result<Self, Error> {
        let group = FiniteAbelianGroup::new(sc.group.clone())?;
        let (algebra, layout) = match &sc.algebra {
            AlgebraSpec::Blocks(b) => (OperatorAlgebra::from_blocks(b)?, Some(b.clone())),
            AlgebraSpec::Generators { dim, matrices } => (vna::generate(matrices, *dim, &cfg)?, None),
        };
        let d = algebra.ambient_dim();
        let action = match &sc.action {
            ActionSpec::Trivial => GroupAction::trivial(&algebra, &group),
            ActionSpec::Inner(gens) => {
                for (i, g) in gens.iter().enumerate() {
                    if g.nrows() != d {
                        return Err(Error::DimensionMismatch { expected: d, found: g.nrows() });
                    }
                    let r = algebra.membership_residual(g);
                    if r >= cfg.tol.max(1e-12) * 10.0 {
                        return Err(Error::Precondition(format!(
                            "inner action generator {i} does not lie in the algebra (residual {r:e})"
                        )));
                    }
                }
                GroupAction::from_generators(&algebra, &group, gens, &cfg)?
            }
            ActionSpec::BlockPermutation(moves) => {
                let Some(layout) = &layout else {
                    return Err(Error::Precondition("a block-permutation action needs an algebra given as blocks".into()));
                };
                GroupAction::block_permutation(layout, &group, moves, &cfg)?
            }
        };
        let masa = match &sc.masa {
            None => None,
            Some(gens) => {
                let a = vna::generate(gens, d, &cfg)?;
                if !a.is_abelian(&cfg) {
                    return Err(Error::Precondition("the masa generators do not commute".into()));
                }
                Some(a)
            }
        };
        let state = sc.state.as_ref().map(|s| build_state(s, d, &cfg)).transpose()?;
        let weights = sc.weights.iter().map(|w| build_state(w, d, &cfg)).collect::<Result<_, _>>()?;
        Ok(Self {
            cfg,
            group,
            algebra,
            layout,
            action,
            action_given: !matches!(sc.action, ActionSpec::Trivial),
            masa,
            state,
            weights,
            negative_control: sc.negative_control.clone(),
        })
    }
}

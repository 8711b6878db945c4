//! Scenario documents: parsing, validation and fingerprinting.

use std::collections::BTreeSet;
use std::path::Path;

use quorate::chain::{ObservationAlphabet, SensorModel, TransitionKernel};
use quorate::detect::{Horizon, Projection, DEFAULT_BINS, DEFAULT_GRID_CAP, DEFAULT_TREE_CAP_BITS};
use quorate::equilibrium::{InfiniteOptions, DEFAULT_CERTIFY_CAP_BITS};
use quorate::games::{Coalition, SimpleGame};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub sensors: Vec<SensorSpec>,
    pub game: GameSpec,
    pub horizon: HorizonSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub id: u32,
    pub q: f64,
    #[serde(default)]
    pub symbols: Option<Vec<String>>,
    pub initial_state: SymbolRef,
    #[serde(default)]
    pub window_past: usize,
    #[serde(default)]
    pub window_future: usize,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

/// A symbol given by index or by label.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolRef {
    Index(usize),
    Label(String),
}

/// Winning family by explicit coalitions (sensor ids), by weights and
/// quota, or by a named rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coalitions: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quota: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictator: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Majority,
    Unanimity,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonSpec {
    Steps(usize),
    Named(Infinite),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infinite {
    Infinite,
}

impl HorizonSpec {
    pub fn horizon(self) -> Horizon {
        match self {
            HorizonSpec::Steps(n) => Horizon::Finite(n),
            HorizonSpec::Named(_) => Horizon::Infinite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exact,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionSpec {
    Barycentric,
    Nearest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub backend: Backend,
    pub bins: usize,
    pub projection: ProjectionSpec,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub tree_cap_bits: f64,
    pub grid_cap: usize,
    pub certify_cap_bits: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let inf = InfiniteOptions::default();
        Self {
            backend: Backend::Exact,
            bins: DEFAULT_BINS,
            projection: ProjectionSpec::Barycentric,
            tol: inf.tol,
            max_iter: inf.max_iter,
            damping: inf.damping,
            tree_cap_bits: DEFAULT_TREE_CAP_BITS,
            grid_cap: DEFAULT_GRID_CAP,
            certify_cap_bits: DEFAULT_CERTIFY_CAP_BITS,
        }
    }
}

impl SolverSpec {
    pub fn infinite_options(&self) -> InfiniteOptions {
        InfiniteOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
        }
    }

    pub fn projection(&self) -> Projection {
        match self.projection {
            ProjectionSpec::Barycentric => Projection::Barycentric,
            ProjectionSpec::Nearest => Projection::Nearest,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub samples: u64,
    pub seed: u64,
    /// Step cap for stationary profiles.
    pub max_steps: usize,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            max_steps: 200,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: Option<String>,
}

/// Everything a command needs, checked and converted.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub models: Vec<SensorModel>,
    pub game: SimpleGame,
    pub horizon: Horizon,
    pub fingerprint: String,
}

/// Reads TOML, or JSON when the extension is `.json` or the text opens
/// with `{`.
pub fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if json {
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }
}

/// A single semantic problem found during validation.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub field: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axiom: Option<u8>,
    pub message: String,
}

fn diag(field: impl Into<String>, message: impl ToString) -> Diagnostic {
    Diagnostic {
        field: field.into(),
        axiom: None,
        message: message.to_string(),
    }
}

fn build_sensor(k: usize, s: &SensorSpec) -> Result<SensorModel, Diagnostic> {
    let field = format!("sensors[{k}]");
    let pre = TransitionKernel::from_rows(&s.pre).map_err(|e| diag(format!("{field}.pre"), e))?;
    let post = TransitionKernel::from_rows(&s.post).map_err(|e| diag(format!("{field}.post"), e))?;
    let alphabet = match &s.symbols {
        Some(labels) => ObservationAlphabet::new(labels.iter().cloned()),
        None => ObservationAlphabet::indexed(pre.size()),
    }
    .map_err(|e| diag(format!("{field}.symbols"), e))?;
    let initial = match &s.initial_state {
        SymbolRef::Index(i) => *i,
        SymbolRef::Label(l) => alphabet
            .symbols()
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| diag(format!("{field}.initial_state"), format!("unknown symbol {l:?}")))?,
    };
    let model = SensorModel::with_alphabet(s.id as usize, alphabet, pre, post, s.q, initial)
        .map_err(|e| diag(field.clone(), e))?;
    Ok(model.with_window(s.window_past, s.window_future))
}

fn build_game(spec: &GameSpec, ids: &[u32]) -> Result<SimpleGame, Diagnostic> {
    let p = ids.len();
    let position = |id: u32, field: &str| {
        ids.iter()
            .position(|&x| x == id)
            .ok_or_else(|| diag(field.to_string(), format!("unknown sensor id {id}")))
    };
    let given = [
        spec.coalitions.is_some(),
        spec.weights.is_some() || spec.quota.is_some(),
        spec.rule.is_some(),
        spec.dictator.is_some(),
    ];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(diag(
            "game",
            "give exactly one of: coalitions, weights with quota, rule, dictator",
        ));
    }
    if let Some(list) = &spec.coalitions {
        let mut family: Vec<Coalition> = Vec::with_capacity(list.len());
        for (k, members) in list.iter().enumerate() {
            let mut c: Coalition = 0;
            for &id in members {
                c |= 1 << position(id, &format!("game.coalitions[{k}]"))?;
            }
            family.push(c);
        }
        if let Err(v) = quorate::games::validate(p, &family) {
            return Err(Diagnostic {
                field: "game.coalitions".into(),
                axiom: Some(v.axiom()).filter(|&a| a > 0),
                message: v.to_string(),
            });
        }
        return SimpleGame::from_coalitions(p, &family).map_err(|e| diag("game.coalitions", e));
    }
    if spec.weights.is_some() || spec.quota.is_some() {
        let (Some(w), Some(q)) = (&spec.weights, spec.quota) else {
            return Err(diag("game", "weights and quota must be given together"));
        };
        if w.len() != p {
            return Err(diag("game.weights", format!("{} weights for {p} sensors", w.len())));
        }
        return SimpleGame::weighted(w, q).map_err(|e| diag("game", e));
    }
    if let Some(id) = spec.dictator {
        return SimpleGame::dictator(p, position(id, "game.dictator")?).map_err(|e| diag("game.dictator", e));
    }
    match spec.rule.expect("one form given") {
        Rule::Majority => SimpleGame::majority(p),
        Rule::Unanimity => SimpleGame::unanimity(p),
        Rule::Any => SimpleGame::quota(p, 1),
    }
    .map_err(|e| diag("game.rule", e))
}

/// Checks every semantic rule, collecting all problems.
pub fn resolve(scenario: Scenario) -> Result<Resolved, Vec<Diagnostic>> {
    let mut problems = Vec::new();
    if scenario.sensors.is_empty() {
        problems.push(diag("sensors", "at least one sensor is required"));
    }
    let mut seen = BTreeSet::new();
    for (k, s) in scenario.sensors.iter().enumerate() {
        if !seen.insert(s.id) {
            problems.push(diag(format!("sensors[{k}].id"), format!("duplicate sensor id {}", s.id)));
        }
    }
    let models: Vec<SensorModel> = scenario
        .sensors
        .iter()
        .enumerate()
        .filter_map(|(k, s)| build_sensor(k, s).map_err(|d| problems.push(d)).ok())
        .collect();
    let ids: Vec<u32> = scenario.sensors.iter().map(|s| s.id).collect();
    let game = if ids.is_empty() || ids.len() > quorate::games::MAX_PLAYERS {
        if !ids.is_empty() {
            problems.push(diag("sensors", format!("at most {} sensors", quorate::games::MAX_PLAYERS)));
        }
        None
    } else {
        build_game(&scenario.game, &ids).map_err(|d| problems.push(d)).ok()
    };

    let solver = &scenario.solver;
    let horizon = scenario.horizon.horizon();
    if solver.backend == Backend::Exact && horizon == Horizon::Infinite {
        problems.push(diag(
            "solver.backend",
            "the exact backend needs a finite horizon; use backend = \"grid\"",
        ));
    }
    if solver.bins < 2 {
        problems.push(diag("solver.bins", "need at least 2 bins"));
    }
    if !(solver.tol > 0.0) {
        problems.push(diag("solver.tol", "must be positive"));
    }
    if !(solver.damping > 0.0 && solver.damping <= 1.0) {
        problems.push(diag("solver.damping", "must lie in (0, 1]"));
    }
    if scenario.simulation.samples == 0 {
        problems.push(diag("simulation.samples", "must be at least 1"));
    }

    match game {
        Some(game) if problems.is_empty() => {
            let fingerprint = fingerprint(&scenario);
            Ok(Resolved {
                scenario,
                models,
                game,
                horizon,
                fingerprint,
            })
        }
        _ => Err(problems),
    }
}

/// SHA-256 of the canonical JSON form of the parts that determine the
/// solution: sensors, game, horizon and solver settings.
pub fn fingerprint(s: &Scenario) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        sensors: &'a [SensorSpec],
        game: &'a GameSpec,
        horizon: &'a HorizonSpec,
        solver: &'a SolverSpec,
    }
    let canonical = serde_json::to_vec(&Canonical {
        sensors: &s.sensors,
        game: &s.game,
        horizon: &s.horizon,
        solver: &s.solver,
    })
    .expect("scenario serializes");
    hex::encode(Sha256::digest(&canonical))
}

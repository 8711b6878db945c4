//! On-disk solution documents.

use std::path::Path;

use quorate::equilibrium::{Diagnostics, EquilibriumSolution, StrategyProfile};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::scenario::{Backend, HorizonSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub recursion_identity_error: f64,
}

impl From<&Diagnostics> for SolverDiagnostics {
    fn from(d: &Diagnostics) -> Self {
        Self {
            converged: d.converged,
            residual: d.residual,
            iterations: d.iterations,
            recursion_identity_error: d.recursion_identity_error,
        }
    }
}

/// Stopping sets are stored as strings of `0`/`1`, one character per
/// state in `keys` order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub tool: String,
    pub version: String,
    pub fingerprint: String,
    pub backend: Backend,
    pub horizon: HorizonSpec,
    pub sensor_ids: Vec<u32>,
    pub states: usize,
    pub root: usize,
    pub root_values: Vec<f64>,
    pub stationary: bool,
    pub diagnostics: SolverDiagnostics,
    pub keys: Vec<String>,
    /// `stopping_sets[player][stage]`.
    pub stopping_sets: Vec<Vec<String>>,
    /// `values[player][k][state]`: `k` stages to go, or the single fixed
    /// point when stationary.
    pub values: Vec<Vec<Vec<f64>>>,
}

fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn string_to_bits(s: &str) -> Result<Vec<bool>, Failure> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Failure::input(format!("stopping set contains {other:?}; expected 0 or 1"))),
        })
        .collect()
}

impl SolutionFile {
    pub fn from_solution(
        fingerprint: &str,
        backend: Backend,
        horizon: HorizonSpec,
        sensor_ids: Vec<u32>,
        keys: &[String],
        root: usize,
        sol: &EquilibriumSolution,
    ) -> Self {
        let profile = &sol.profile;
        Self {
            tool: crate::TOOL.into(),
            version: crate::VERSION.into(),
            fingerprint: fingerprint.into(),
            backend,
            horizon,
            sensor_ids,
            states: profile.states(),
            root,
            root_values: sol.value_at(root),
            stationary: profile.is_stationary(),
            diagnostics: (&sol.diagnostics).into(),
            keys: keys.to_vec(),
            stopping_sets: (0..profile.players())
                .map(|i| profile.player_sets(i).iter().map(|s| bits_to_string(s)).collect())
                .collect(),
            values: sol.values.clone(),
        }
    }

    pub fn profile(&self) -> Result<StrategyProfile, Failure> {
        let sets = self
            .stopping_sets
            .iter()
            .map(|stages| stages.iter().map(|s| string_to_bits(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let profile = if self.stationary {
            let flat = sets
                .into_iter()
                .map(|mut stages| {
                    if stages.len() != 1 {
                        return Err(Failure::input("a stationary solution needs exactly one set per player"));
                    }
                    Ok(stages.remove(0))
                })
                .collect::<Result<Vec<_>, _>>()?;
            StrategyProfile::stationary(flat)
        } else {
            StrategyProfile::staged(sets)
        };
        profile.map_err(|e| Failure::input(format!("bad stopping sets: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }
}

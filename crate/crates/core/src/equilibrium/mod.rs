//! Equilibria of the multilateral stopping game induced by a simple game.
//!
//! Every player declares stop or continue at each stage; the fusion rule
//! (the simple game) turns declarations into a common stopping time, and
//! each player then collects its own payoff at the stopped state.
//!
//! Stopping sets follow the threshold form `{x : f_i(x) >= v_i(x)}` where
//! `v_i` is the equilibrium continuation value. A player's set at a stage
//! depends only on its own payoff and continuation value, never on the
//! co-players' sets at that stage.

mod certify;
mod evaluate;
mod finite;
mod infinite;
mod profile;

pub use certify::{certify_equilibrium, CertificationReport, DeviationSearch, DEFAULT_CERTIFY_CAP_BITS};
pub use evaluate::{expected_payoff, expected_payoffs};
pub use finite::solve_finite;
pub use infinite::{bellman_residual, solve_infinite, truncation_check, InfiniteOptions};
pub use profile::StrategyProfile;

use serde::Serialize;

use crate::detect::GameInstance;
use crate::error::{Error, Result};
use crate::games::{Coalition, SimpleGame};

/// Solver output.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    /// `values[i][k][x]`. Finite horizon: `k` is the number of stages to go,
    /// `v_{i,k}`, with `values[i][0] == f_i`. Stationary: a single entry, the
    /// fixed point `w_i`.
    pub values: Vec<Vec<Vec<f64>>>,
    pub profile: StrategyProfile,
    pub diagnostics: Diagnostics,
}

impl EquilibriumSolution {
    /// Equilibrium payoff of every player from state `x` at time 0.
    pub fn value_at(&self, x: usize) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v.last().map_or(0.0, |w| w[x]))
            .collect()
    }

    /// `v_{i,N}` (finite) or `w_i` (stationary).
    pub fn game_values(&self, player: usize) -> &[f64] {
        self.values[player].last().expect("at least one stage")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub converged: bool,
    /// Sup-norm residual of the fixed-point equations at the returned
    /// values (0 for backward induction).
    pub residual: f64,
    pub iterations: usize,
    /// Largest per-state gap between the positive/negative-part recursion
    /// and the direct stop/continue expectation.
    pub recursion_identity_error: f64,
}

/// Tolerance for the recursion-form identity check run on every solve.
pub const RECURSION_IDENTITY_TOL: f64 = 1e-12;

/// `{x : f(x) - g(x) >= 0}`; ties stop.
pub fn best_response_set(f: &[f64], g: &[f64]) -> Result<Vec<bool>> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            found: g.len(),
        });
    }
    Ok(f.iter().zip(g).map(|(a, b)| a - b >= 0.0).collect())
}

fn check_players(instance: &GameInstance, game: &SimpleGame) -> Result<()> {
    if instance.players() != game.player_count() {
        return Err(Error::LengthMismatch {
            expected: instance.players(),
            found: game.player_count(),
        });
    }
    Ok(())
}

/// Co-players' declarations at state `y`, with player `i`'s bit cleared.
#[inline]
fn others_mask(sets: &[&[bool]], i: usize, y: usize) -> Coalition {
    sets.iter()
        .enumerate()
        .filter(|&(j, s)| j != i && s[y])
        .fold(0, |m, (j, _)| m | 1 << j)
}

/// One application of the stage recursion for every player:
///
/// `T(v)_i(x) = E_x[(f_i - v_i)^+ 1{D_i(full)}] - E_x[(f_i - v_i)^- 1{D_i(empty)}] + E_x v_i`
///
/// where `D_i(full)` / `D_i(empty)` are the aggregated stopping events with
/// player `i` forced to stop / continue and the others following `sets`.
/// Also returns the largest gap to the direct form
/// `E_x[f_i 1{D} + v_i 1{not D}]` with `D` the event induced by `sets`.
fn stage_operator(
    instance: &GameInstance,
    game: &SimpleGame,
    sets: &[Vec<bool>],
    v: &[&[f64]],
) -> (Vec<Vec<f64>>, f64) {
    let refs: Vec<&[bool]> = sets.iter().map(Vec::as_slice).collect();
    let states = instance.states();
    let mut gap: f64 = 0.0;
    let mut out = Vec::with_capacity(v.len());
    for (i, vi) in v.iter().enumerate() {
        let f = instance.payoff(i);
        // Per-state integrands, then one pass of expectations.
        let mut recursion = vec![0.0; states];
        let mut direct = vec![0.0; states];
        for y in 0..states {
            let others = others_mask(&refs, i, y);
            let d_full = game.aggregate_mask(others | 1 << i);
            let d_empty = game.aggregate_mask(others);
            let diff = f[y] - vi[y];
            let pos = diff.max(0.0);
            let neg = (-diff).max(0.0);
            recursion[y] = if d_full { pos } else { 0.0 } - if d_empty { neg } else { 0.0 } + vi[y];
            let stop = if refs[i][y] { d_full } else { d_empty };
            direct[y] = if stop { f[y] } else { vi[y] };
        }
        let next = instance.expect(&recursion);
        let check = instance.expect(&direct);
        gap = next
            .iter()
            .zip(&check)
            .fold(gap, |g, (a, b)| g.max((a - b).abs()));
        out.push(next);
    }
    (out, gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_response_ties_stop() {
        assert_eq!(best_response_set(&[0.3, 0.5], &[0.3, 0.5]).unwrap(), vec![true, true]);
        assert_eq!(best_response_set(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), vec![false, false]);
        assert!(best_response_set(&[0.0], &[1.0, 1.0]).is_err());
    }
}

use crate::detect::GameInstance;
use crate::error::{Error, Result};
use crate::games::SimpleGame;

use super::{check_players, stage_operator, Diagnostics, EquilibriumSolution, StrategyProfile, RECURSION_IDENTITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfiniteOptions {
    /// Stop once the sup-norm residual falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation weight on the new iterate, in `(0, 1]`.
    pub damping: f64,
}

impl Default for InfiniteOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            damping: 1.0,
        }
    }
}

fn threshold_sets(instance: &GameInstance, w: &[Vec<f64>]) -> Vec<Vec<bool>> {
    w.iter()
        .enumerate()
        .map(|(i, wi)| instance.payoff(i).iter().zip(wi).map(|(f, w)| f - w >= 0.0).collect())
        .collect()
}

fn sup_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Sup-norm of `T(w) - w` with the sets induced by `w` itself.
pub fn bellman_residual(instance: &GameInstance, game: &SimpleGame, w: &[Vec<f64>]) -> Result<f64> {
    check_players(instance, game)?;
    let sets = threshold_sets(instance, w);
    let refs: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
    let (next, _) = stage_operator(instance, game, &sets, &refs);
    Ok(sup_distance(&next, w))
}

/// Damped fixed-point iteration `w <- (1 - a) w + a T(w)` from `w = 0`,
/// where `T` is the stage recursion with the stationary sets `{f_i >= w_i}`.
///
/// Non-convergence is not an error: the iterate with the smallest residual
/// is returned with `diagnostics.converged == false`.
pub fn solve_infinite(instance: &GameInstance, game: &SimpleGame, opts: InfiniteOptions) -> Result<EquilibriumSolution> {
    check_players(instance, game)?;
    if !instance.is_stationary() {
        return Err(Error::Unsupported(
            "solve_infinite needs a stationary instance (history trees are time-indexed)".into(),
        ));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidModel(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidModel(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    let players = instance.players();
    let states = instance.states();
    let mut w = vec![vec![0.0; states]; players];
    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    let mut gap: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let sets = threshold_sets(instance, &w);
        let refs: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
        let (next, g) = stage_operator(instance, game, &sets, &refs);
        gap = gap.max(g);
        let residual = sup_distance(&next, &w);
        if best.as_ref().map_or(true, |(_, r)| residual < *r) {
            best = Some((w.clone(), residual));
        }
        if residual < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        for (wi, ni) in w.iter_mut().zip(next) {
            for (a, b) in wi.iter_mut().zip(ni) {
                *a = (1.0 - opts.damping) * *a + opts.damping * b;
            }
        }
    }
    assert!(
        gap <= RECURSION_IDENTITY_TOL,
        "recursion-form identity violated by {gap:e}"
    );

    let (w, residual) = match best {
        Some(b) if !converged => b,
        _ => {
            let r = bellman_residual(instance, game, &w)?;
            (w, r)
        }
    };
    let sets = threshold_sets(instance, &w);
    Ok(EquilibriumSolution {
        values: w.into_iter().map(|wi| vec![wi]).collect(),
        profile: StrategyProfile::stationary(sets)?,
        diagnostics: Diagnostics {
            converged,
            residual,
            iterations,
            recursion_identity_error: gap,
        },
    })
}

/// Largest gap between `w_i(x)` and `E_x phi_{i,N}(X_t)` under the
/// stationary profile, where the truncated payoff pays `f_i(X_t)` if play
/// stops by stage `N` and `w_i(X_N)` otherwise.
pub fn truncation_check(instance: &GameInstance, game: &SimpleGame, solution: &EquilibriumSolution, n: usize) -> Result<f64> {
    check_players(instance, game)?;
    let profile = &solution.profile;
    if !profile.is_stationary() {
        return Err(Error::Unsupported("truncation_check needs a stationary solution".into()));
    }
    let states = instance.states();
    let stop: Vec<bool> = (0..states).map(|y| game.aggregate_mask(profile.votes(0, y))).collect();
    let mut worst: f64 = 0.0;
    for i in 0..instance.players() {
        let f = instance.payoff(i);
        let w = solution.game_values(i);
        // a_0 = w; a_k(x) = E_x[f(X_1) if stop(X_1) else a_{k-1}(X_1)].
        let mut a = w.to_vec();
        for _ in 0..n {
            let integrand: Vec<f64> = (0..states).map(|y| if stop[y] { f[y] } else { a[y] }).collect();
            a = instance.expect(&integrand);
        }
        worst = a.iter().zip(w).fold(worst, |m, (x, y)| m.max((x - y).abs()));
    }
    Ok(worst)
}

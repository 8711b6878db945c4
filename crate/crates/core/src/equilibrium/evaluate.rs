use crate::detect::GameInstance;
use crate::error::{Error, Result};
use crate::games::SimpleGame;

use super::{check_players, StrategyProfile};

const ABSORPTION_TOL: f64 = 1e-15;
const ABSORPTION_MAX_SWEEPS: usize = 1_000_000;

/// `E_x f_i(X_t)` for every player and start state `x`, where `t` is the
/// first stage `n >= 1` at which the declarations under `profile` win.
/// Play that never stops is worth 0. A staged profile with horizon 0 stops
/// at time 0 if its stage-0 declarations win.
pub fn expected_payoffs(instance: &GameInstance, game: &SimpleGame, profile: &StrategyProfile) -> Result<Vec<Vec<f64>>> {
    (0..instance.players())
        .map(|i| expected_payoff(instance, game, profile, i))
        .collect()
}

pub fn expected_payoff(instance: &GameInstance, game: &SimpleGame, profile: &StrategyProfile, player: usize) -> Result<Vec<f64>> {
    check_players(instance, game)?;
    if profile.players() != instance.players() {
        return Err(Error::LengthMismatch {
            expected: instance.players(),
            found: profile.players(),
        });
    }
    if profile.states() != instance.states() {
        return Err(Error::StateOutOfDomain {
            state: profile.states(),
            states: instance.states(),
        });
    }
    let f = instance.payoff(player);
    match profile.horizon() {
        Some(0) => Ok((0..instance.states())
            .map(|x| if game.aggregate_mask(profile.votes(0, x)) { f[x] } else { 0.0 })
            .collect()),
        Some(horizon) => {
            // u_{N+1} = 0; u_n(y) = f(y) if stop at (n, y) else E_y u_{n+1}.
            let mut u = vec![0.0; instance.states()];
            for n in (1..=horizon).rev() {
                let cont = instance.expect(&u);
                u = (0..instance.states())
                    .map(|y| if game.aggregate_mask(profile.votes(n, y)) { f[y] } else { cont[y] })
                    .collect();
            }
            Ok(instance.expect(&u))
        }
        None => {
            let stop: Vec<bool> = (0..instance.states())
                .map(|y| game.aggregate_mask(profile.votes(0, y)))
                .collect();
            let u = absorbed_payoff(instance, &stop, f)?;
            Ok(instance.expect(&u))
        }
    }
}

/// Solves `u(y) = f(y)` on `stop`, `u(y) = E_y u(X_1)` elsewhere, with
/// `u = 0` on states that cannot reach `stop`.
pub(crate) fn absorbed_payoff(instance: &GameInstance, stop: &[bool], f: &[f64]) -> Result<Vec<f64>> {
    let n = instance.states();
    let reaches = reaches_set(instance, stop);
    let mut u: Vec<f64> = (0..n).map(|y| if stop[y] { f[y] } else { 0.0 }).collect();
    let transient: Vec<usize> = (0..n).filter(|&y| !stop[y] && reaches[y]).collect();
    if transient.is_empty() {
        return Ok(u);
    }
    for _ in 0..ABSORPTION_MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for &y in &transient {
            let new: f64 = instance.successors(y).iter().map(|&(z, p)| p * u[z]).sum();
            delta = delta.max((new - u[y]).abs());
            u[y] = new;
        }
        if delta <= ABSORPTION_TOL {
            return Ok(u);
        }
    }
    Err(Error::SingularSystem(format!(
        "absorption iteration did not settle within {ABSORPTION_MAX_SWEEPS} sweeps"
    )))
}

/// States from which `target` is reachable with positive probability.
fn reaches_set(instance: &GameInstance, target: &[bool]) -> Vec<bool> {
    let n = instance.states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for x in 0..n {
        for &(y, p) in instance.successors(x) {
            if p > 0.0 {
                preds[y].push(x);
            }
        }
    }
    let mut seen = target.to_vec();
    let mut queue: Vec<usize> = (0..n).filter(|&y| target[y]).collect();
    while let Some(y) = queue.pop() {
        for &x in &preds[y] {
            if !seen[x] {
                seen[x] = true;
                queue.push(x);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Horizon;
    use crate::equilibrium::solve_finite;

    fn inst(players: usize, horizon: Horizon) -> GameInstance {
        let f: Vec<Vec<f64>> = (0..players).map(|i| vec![0.1 * i as f64, 0.6, 0.9, 0.3]).collect();
        GameInstance::from_dense(
            &[
                vec![0.1, 0.4, 0.2, 0.3],
                vec![0.3, 0.3, 0.3, 0.1],
                vec![0.0, 0.5, 0.5, 0.0],
                vec![0.25, 0.25, 0.25, 0.25],
            ],
            f,
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn stop_at_first_stage_is_one_step_expectation() {
        let g = inst(2, Horizon::Finite(1));
        let game = SimpleGame::unanimity(2).unwrap();
        let p = StrategyProfile::fixed_time(2, 4, 1);
        let vals = expected_payoffs(&g, &game, &p).unwrap();
        for i in 0..2 {
            assert_eq!(vals[i], g.expect(g.payoff(i)));
        }
    }

    #[test]
    fn solver_profile_reproduces_values() {
        let g = inst(3, Horizon::Finite(3));
        let game = SimpleGame::majority(3).unwrap();
        let sol = solve_finite(&g, &game).unwrap();
        let vals = expected_payoffs(&g, &game, &sol.profile).unwrap();
        for i in 0..3 {
            for x in 0..4 {
                assert!((vals[i][x] - sol.game_values(i)[x]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn never_stopping_is_worth_zero() {
        let g = inst(1, Horizon::Infinite);
        let p = StrategyProfile::never_stop(1, 4, None);
        assert_eq!(expected_payoff(&g, &SimpleGame::identity(), &p, 0).unwrap(), vec![0.0; 4]);
        let p = StrategyProfile::never_stop(1, 4, Some(3));
        assert_eq!(expected_payoff(&g, &SimpleGame::identity(), &p, 0).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn stationary_absorption() {
        // Stop only in state 2: value is f(2) from every state that reaches it.
        let g = inst(1, Horizon::Infinite);
        let p = StrategyProfile::stationary(vec![vec![false, false, true, false]]).unwrap();
        let v = expected_payoff(&g, &SimpleGame::identity(), &p, 0).unwrap();
        for x in v {
            assert!((x - 0.9).abs() < 1e-13);
        }
    }

    #[test]
    fn domain_mismatch_rejected() {
        let g = inst(1, Horizon::Infinite);
        let p = StrategyProfile::stationary(vec![vec![true; 3]]).unwrap();
        assert!(matches!(
            expected_payoff(&g, &SimpleGame::identity(), &p, 0),
            Err(Error::StateOutOfDomain { .. })
        ));
    }
}

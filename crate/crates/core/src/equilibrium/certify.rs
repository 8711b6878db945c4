use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::detect::GameInstance;
use crate::error::{Error, Result};
use crate::games::SimpleGame;

use super::evaluate::{absorbed_payoff, expected_payoff};
use super::{check_players, StrategyProfile};

/// Default cap on the number of free deviation bits per player in
/// exhaustive mode.
pub const DEFAULT_CERTIFY_CAP_BITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationSearch {
    /// Every assignment of the deviating player's stop bits over the
    /// reachable (stage, state) pairs.
    Exhaustive { cap_bits: usize },
    /// `samples` random deviations followed by greedy single-bit flips.
    Sampled { samples: usize, seed: u64 },
    /// Exact best response by backward induction against the co-players'
    /// fixed sets.
    BestResponse,
}

impl DeviationSearch {
    fn label(&self) -> &'static str {
        match self {
            DeviationSearch::Exhaustive { .. } => "exhaustive",
            DeviationSearch::Sampled { .. } => "sampled",
            DeviationSearch::BestResponse => "best_response",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    /// Per player: max over deviations and start states of the payoff gain.
    pub gains: Vec<f64>,
    pub mode: &'static str,
    pub deviations_checked: u64,
    pub free_bits: Vec<usize>,
}

impl CertificationReport {
    pub fn max_gain(&self) -> f64 {
        self.gains.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Largest gain any single player can obtain by unilaterally changing its
/// stopping sets, measured from every start state.
pub fn certify_equilibrium(
    instance: &GameInstance,
    game: &SimpleGame,
    profile: &StrategyProfile,
    search: DeviationSearch,
) -> Result<CertificationReport> {
    check_players(instance, game)?;
    let starts = instance.start_states();
    let bits = free_bits(instance, profile);
    let mut gains = Vec::with_capacity(instance.players());
    let mut checked = 0u64;
    let mut counts = Vec::with_capacity(instance.players());

    for i in 0..instance.players() {
        let base = expected_payoff(instance, game, profile, i)?;
        let gain_of = |p: &StrategyProfile| -> Result<f64> {
            let dev = expected_payoff(instance, game, p, i)?;
            Ok(starts.iter().map(|&x| dev[x] - base[x]).fold(f64::NEG_INFINITY, f64::max))
        };
        counts.push(bits.len());
        let gain = match search {
            DeviationSearch::Exhaustive { cap_bits } => {
                if bits.len() > cap_bits {
                    return Err(Error::SizeCap {
                        what: "deviation bits",
                        required: bits.len() as f64,
                        cap: cap_bits as f64,
                    });
                }
                let mut best = f64::NEG_INFINITY;
                let mut dev = profile.clone();
                for mask in 0u64..1 << bits.len() {
                    for (b, &(stage, x)) in bits.iter().enumerate() {
                        dev.set_mut(i, stage)[x] = mask >> b & 1 == 1;
                    }
                    best = best.max(gain_of(&dev)?);
                    checked += 1;
                }
                best
            }
            DeviationSearch::Sampled { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let mut best = 0.0f64;
                let mut dev = profile.clone();
                for _ in 0..samples {
                    for &(stage, x) in &bits {
                        dev.set_mut(i, stage)[x] = rng.random();
                    }
                    best = best.max(gain_of(&dev)?);
                    checked += 1;
                }
                // Greedy single-bit flips from the profile itself.
                let mut cur = profile.clone();
                let mut cur_gain = 0.0;
                let mut budget = samples;
                let mut improved = true;
                while improved && budget > 0 {
                    improved = false;
                    for &(stage, x) in &bits {
                        if budget == 0 {
                            break;
                        }
                        budget -= 1;
                        let mut trial = cur.clone();
                        let bit = &mut trial.set_mut(i, stage)[x];
                        *bit = !*bit;
                        let g = gain_of(&trial)?;
                        checked += 1;
                        if g > cur_gain + 1e-15 {
                            cur = trial;
                            cur_gain = g;
                            improved = true;
                        }
                    }
                }
                best.max(cur_gain)
            }
            DeviationSearch::BestResponse => {
                checked += 1;
                let br = best_response_value(instance, game, profile, i)?;
                starts.iter().map(|&x| br[x] - base[x]).fold(f64::NEG_INFINITY, f64::max)
            }
        };
        gains.push(gain);
    }
    Ok(CertificationReport {
        gains,
        mode: search.label(),
        deviations_checked: checked,
        free_bits: counts,
    })
}

/// `(stage, state)` pairs the deviating player can influence.
fn free_bits(instance: &GameInstance, profile: &StrategyProfile) -> Vec<(usize, usize)> {
    match profile.horizon() {
        Some(0) => Vec::new(),
        Some(horizon) => {
            let reach = instance.reachable_by_time(horizon);
            (1..=horizon)
                .flat_map(|n| {
                    reach[n]
                        .iter()
                        .enumerate()
                        .filter(|(_, &r)| r)
                        .map(move |(x, _)| (n, x))
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        None => {
            // States hit at some time >= 1: closure of the start states' successors.
            let mut seen = vec![false; instance.states()];
            let mut stack: Vec<usize> = Vec::new();
            for x in instance.start_states() {
                for &(y, p) in instance.successors(x) {
                    if p > 0.0 && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            while let Some(x) = stack.pop() {
                for &(y, p) in instance.successors(x) {
                    if p > 0.0 && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen.iter().enumerate().filter(|(_, &r)| r).map(|(x, _)| (0, x)).collect()
        }
    }
}

/// Value of player `i`'s best response to the co-players' fixed sets.
fn best_response_value(instance: &GameInstance, game: &SimpleGame, profile: &StrategyProfile, i: usize) -> Result<Vec<f64>> {
    let f = instance.payoff(i);
    let states = instance.states();
    let options = |stage: usize, y: usize| {
        let others = profile.votes(stage, y) & !(1 << i);
        (game.aggregate_mask(others | 1 << i), game.aggregate_mask(others))
    };
    match profile.horizon() {
        Some(0) => expected_payoff(instance, game, profile, i),
        Some(horizon) => {
            let mut u = vec![0.0; states];
            for n in (1..=horizon).rev() {
                let cont = instance.expect(&u);
                u = (0..states)
                    .map(|y| {
                        let (with, without) = options(n, y);
                        let pick = |stop: bool| if stop { f[y] } else { cont[y] };
                        pick(with).max(pick(without))
                    })
                    .collect();
            }
            Ok(instance.expect(&u))
        }
        None => {
            // Value iteration from below; converges for bounded payoffs on
            // absorbing chains. Finishes with an exact evaluation of the
            // greedy stationary response.
            let mut u = vec![0.0; states];
            for _ in 0..100_000 {
                let cont = instance.expect(&u);
                let next: Vec<f64> = (0..states)
                    .map(|y| {
                        let (with, without) = options(0, y);
                        let pick = |stop: bool| if stop { f[y] } else { cont[y] };
                        pick(with).max(pick(without))
                    })
                    .collect();
                let delta = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                u = next;
                if delta < 1e-14 {
                    break;
                }
            }
            let cont = instance.expect(&u);
            let stop: Vec<bool> = (0..states)
                .map(|y| {
                    let (with, without) = options(0, y);
                    let val = |s: bool| if s { f[y] } else { cont[y] };
                    if val(with) >= val(without) { with } else { without }
                })
                .collect();
            let exact = absorbed_payoff(instance, &stop, f)?;
            Ok(instance.expect(&exact))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Horizon;
    use crate::equilibrium::{solve_finite, solve_infinite, InfiniteOptions};

    fn inst(players: usize, horizon: Horizon) -> GameInstance {
        let f: Vec<Vec<f64>> = (0..players)
            .map(|i| vec![0.2 + 0.1 * i as f64, 0.6, 0.9 - 0.2 * i as f64, 0.3])
            .collect();
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
    fn solver_output_has_no_profitable_deviation() {
        let g = inst(3, Horizon::Finite(3));
        let game = SimpleGame::majority(3).unwrap();
        let sol = solve_finite(&g, &game).unwrap();
        let r = certify_equilibrium(&g, &game, &sol.profile, DeviationSearch::Exhaustive { cap_bits: 12 }).unwrap();
        assert_eq!(r.free_bits, vec![12; 3]);
        assert!(r.max_gain() <= 1e-9, "{r:?}");
        let br = certify_equilibrium(&g, &game, &sol.profile, DeviationSearch::BestResponse).unwrap();
        for (a, b) in r.gains.iter().zip(&br.gains) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn never_stop_is_beaten() {
        let g = inst(2, Horizon::Finite(2));
        let game = SimpleGame::unanimity(2).unwrap();
        let never = StrategyProfile::never_stop(2, 4, Some(2));
        let r = certify_equilibrium(&g, &game, &never, DeviationSearch::Exhaustive { cap_bits: 20 }).unwrap();
        // Under unanimity nobody can force a stop alone.
        assert!(r.max_gain() <= 1e-12);
        let game = SimpleGame::weighted(&[1, 1], 1).unwrap();
        let r = certify_equilibrium(&g, &game, &never, DeviationSearch::Exhaustive { cap_bits: 20 }).unwrap();
        assert!(r.max_gain() > 0.1);
    }

    #[test]
    fn cap_is_enforced() {
        let g = inst(1, Horizon::Finite(3));
        let sol = solve_finite(&g, &SimpleGame::identity()).unwrap();
        let err = certify_equilibrium(&g, &SimpleGame::identity(), &sol.profile, DeviationSearch::Exhaustive { cap_bits: 4 });
        assert!(matches!(err, Err(Error::SizeCap { .. })));
    }

    #[test]
    fn sampled_mode_finds_no_gain_at_equilibrium() {
        let g = inst(2, Horizon::Finite(3));
        let game = SimpleGame::unanimity(2).unwrap();
        let sol = solve_finite(&g, &game).unwrap();
        let r = certify_equilibrium(&g, &game, &sol.profile, DeviationSearch::Sampled { samples: 200, seed: 1 }).unwrap();
        assert_eq!(r.mode, "sampled");
        assert!(r.max_gain() <= 1e-9);
    }

    #[test]
    fn stationary_solution_certifies() {
        let g = inst(2, Horizon::Infinite);
        let game = SimpleGame::unanimity(2).unwrap();
        let sol = solve_infinite(&g, &game, InfiniteOptions::default()).unwrap();
        assert!(sol.diagnostics.converged);
        let r = certify_equilibrium(&g, &game, &sol.profile, DeviationSearch::Exhaustive { cap_bits: 20 }).unwrap();
        assert!(r.max_gain() <= 1e-9, "{r:?}");
    }
}

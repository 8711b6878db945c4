//! Brute-force reference computations shared by integration tests.
//!
//! Nothing here calls the filtering, aggregation or solver code under test;
//! only model accessors (kernels, prior, windows) are read.
#![allow(dead_code)]

use quorate::chain::{SensorModel, TransitionKernel};
use quorate::detect::{GameInstance, Horizon};
use quorate::games::SimpleGame;
use rand::Rng;

/// Posterior masses from explicit enumeration over theta.
#[derive(Debug, Clone)]
pub struct BrutePosterior {
    /// `at[k] = P(theta = n - k | x_0..x_n)`.
    pub at: Vec<f64>,
    pub past_tail: f64,
    pub future: f64,
    /// Unnormalized evidence `P(x_1..x_n | x_0)`.
    pub evidence: f64,
}

fn pmf(m: &SensorModel, j: usize) -> f64 {
    (1.0 - m.q()).powi(j as i32 - 1) * m.q()
}

/// `P(x_1..x_n | x_0, theta)` multiplied out by hand.
pub fn path_weight(m: &SensorModel, theta: usize, obs: &[usize]) -> f64 {
    let mut w = 1.0;
    for k in 1..obs.len() {
        let kern = if k >= theta { m.post() } else { m.pre() };
        w *= kern.row(obs[k - 1])[obs[k]];
    }
    w
}

pub fn brute_posterior(m: &SensorModel, obs: &[usize]) -> BrutePosterior {
    let n = obs.len() - 1;
    let d1 = m.window_past();
    let mut at = vec![0.0; d1 + 1];
    let mut past = 0.0;
    for theta in 1..=n {
        let w = pmf(m, theta) * path_weight(m, theta, obs);
        let lag = n - theta;
        if lag <= d1 {
            at[lag] += w;
        } else {
            past += w;
        }
    }
    let future = (1.0 - m.q()).powi(n as i32) * path_weight(m, n + 1, obs);
    let z = at.iter().sum::<f64>() + past + future;
    BrutePosterior {
        at: at.iter().map(|a| a / z).collect(),
        past_tail: past / z,
        future: future / z,
        evidence: z,
    }
}

/// `P(n - d1 <= theta <= n + d2, x_1..x_n | x_0)`: joint mass of the
/// history and a successful stop at its last step.
pub fn success_joint(m: &SensorModel, obs: &[usize]) -> f64 {
    let n = obs.len() - 1;
    let lo = n.saturating_sub(m.window_past()).max(1);
    let hi = n + m.window_future();
    (lo..=hi).map(|theta| pmf(m, theta) * path_weight(m, theta, obs)).sum()
}

/// All observation sequences of length `n + 1` starting at `x0`.
pub fn histories(x0: usize, symbols: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![x0]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|h| {
                (0..symbols).map(move |y| {
                    let mut h = h.clone();
                    h.push(y);
                    h
                })
            })
            .collect();
    }
    out
}

/// Best success probability over every adapted stopping rule with stops in
/// `1..=horizon` (forced at the horizon), by enumerating all stop/continue
/// assignments to histories of length `1..horizon`.
pub fn exhaustive_single_sensor(m: &SensorModel, horizon: usize) -> f64 {
    let e = m.symbols();
    let x0 = m.initial_state();
    if horizon == 0 {
        return 0.0;
    }
    // Free histories in BFS order with parent links.
    let mut free: Vec<Vec<usize>> = Vec::new();
    for n in 1..horizon {
        free.extend(histories(x0, e, n).into_iter().filter(|h| h.len() == n + 1));
    }
    let index_of = |h: &[usize]| free.iter().position(|f| f.as_slice() == h);
    let leaves = histories(x0, e, horizon);
    let free_gain: Vec<f64> = free.iter().map(|h| success_joint(m, h)).collect();
    let leaf_gain: Vec<f64> = leaves.iter().map(|h| success_joint(m, h)).collect();
    // Ancestors (free indices) of every free history and every leaf.
    let anc = |h: &[usize]| -> Vec<usize> { (2..h.len()).filter_map(|l| index_of(&h[..l])).collect() };
    let free_anc: Vec<Vec<usize>> = free.iter().map(|h| anc(h)).collect();
    let leaf_anc: Vec<Vec<usize>> = leaves.iter().map(|h| anc(h)).collect();

    let bits = free.len();
    assert!(bits <= 24, "too many rules to enumerate");
    let mut best = f64::NEG_INFINITY;
    for rule in 0u64..1 << bits {
        let stops = |k: usize| rule >> k & 1 == 1;
        let mut value = 0.0;
        for (k, g) in free_gain.iter().enumerate() {
            if stops(k) && !free_anc[k].iter().any(|&a| stops(a)) {
                value += g;
            }
        }
        for (l, g) in leaf_gain.iter().enumerate() {
            if !leaf_anc[l].iter().any(|&a| stops(a)) {
                value += g;
            }
        }
        best = best.max(value);
    }
    best
}

/// `pi(x) = sum_{W winning} prod_{j in W} x_j prod_{j not in W} (1 - x_j)`.
pub fn sum_of_products(winning: &[bool], players: usize, x: &[bool]) -> u32 {
    let mut total = 0;
    for (w, &is_win) in winning.iter().enumerate() {
        if !is_win {
            continue;
        }
        let mut term = 1;
        for (j, &xj) in x.iter().enumerate().take(players) {
            let in_w = w >> j & 1 == 1;
            term *= if in_w { xj as u32 } else { 1 - xj as u32 };
        }
        total += term;
    }
    total
}

/// Axiom check written independently of the library.
pub fn table_is_valid(winning: &[bool], players: usize) -> bool {
    let grand = (1usize << players) - 1;
    if !winning[grand] || winning[0] {
        return false;
    }
    for a in 0..=grand {
        for b in 0..=grand {
            if a & b == a && winning[a] && !winning[b] {
                return false;
            }
        }
    }
    true
}

/// Every monotone table on `players` players satisfying the axioms.
pub fn all_valid_tables(players: usize) -> Vec<Vec<bool>> {
    let size = 1usize << players;
    assert!(size <= 16);
    (0u32..1 << size)
        .map(|bits| (0..size).map(|c| bits >> c & 1 == 1).collect::<Vec<_>>())
        .filter(|t| table_is_valid(t, players))
        .collect()
}

/// Random valid game: upward closure of a few random generators.
pub fn random_valid_table<R: Rng>(rng: &mut R, players: usize) -> Vec<bool> {
    let size = 1usize << players;
    let gens: Vec<usize> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(1..size)).collect();
    (0..size).map(|c| gens.iter().any(|&g| c & g == g)).collect()
}

/// `psi(C) = sum_y mu(y) [f(y) 1{D(C)}(y) + g(y) (1 - 1{D(C)}(y))]` with
/// `D(C)(y)` the aggregate of the co-players' fixed votes and player `i`'s
/// membership of `C`.
pub fn psi(
    game: &SimpleGame,
    i: usize,
    others: &[u32],
    mu: &[f64],
    f: &[f64],
    g: &[f64],
    c: &[bool],
) -> f64 {
    (0..mu.len())
        .map(|y| {
            let yes = if c[y] { others[y] | 1 << i } else { others[y] & !(1 << i) };
            let stop = game.aggregate_mask(yes);
            mu[y] * if stop { f[y] } else { g[y] }
        })
        .sum()
}

pub fn random_row<R: Rng>(rng: &mut R, len: usize, zero_prob: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..len)
            .map(|_| if rng.random::<f64>() < zero_prob { 0.0 } else { rng.random::<f64>() })
            .collect();
        let s: f64 = raw.iter().sum();
        if s > 0.0 {
            let mut row: Vec<f64> = raw.iter().map(|v| v / s).collect();
            // Pin the row sum to 1 within rounding.
            let tail: f64 = row[..len - 1].iter().sum();
            row[len - 1] = (1.0 - tail).max(0.0);
            return row;
        }
    }
}

pub fn random_kernel<R: Rng>(rng: &mut R, size: usize) -> TransitionKernel {
    let rows: Vec<Vec<f64>> = (0..size).map(|_| random_row(rng, size, 0.15)).collect();
    TransitionKernel::from_rows(&rows).unwrap()
}

pub fn random_model<R: Rng>(rng: &mut R, symbols: usize, max_d1: usize, max_d2: usize) -> SensorModel {
    let q = rng.random_range(0.05..0.95);
    let x0 = rng.random_range(0..symbols);
    SensorModel::new(1, random_kernel(rng, symbols), random_kernel(rng, symbols), q, x0)
        .unwrap()
        .with_window(rng.random_range(0..=max_d1), rng.random_range(0..=max_d2))
}

/// Dense random instance with payoffs in `[0, 1]`.
pub fn random_instance<R: Rng>(rng: &mut R, players: usize, states: usize, horizon: Horizon) -> GameInstance {
    let matrix: Vec<Vec<f64>> = (0..states).map(|_| random_row(rng, states, 0.2)).collect();
    let payoffs: Vec<Vec<f64>> = (0..players)
        .map(|_| (0..states).map(|_| rng.random::<f64>()).collect())
        .collect();
    GameInstance::from_dense(&matrix, payoffs, horizon).unwrap()
}

/// Direct stop/continue expectation `E_x[f 1{D} + v 1{not D}]` for every
/// player, where `D` aggregates the given per-player sets.
pub fn direct_stage_value(
    instance: &GameInstance,
    game: &SimpleGame,
    sets: &[&[bool]],
    v: &[&[f64]],
) -> Vec<Vec<f64>> {
    let states = instance.states();
    (0..instance.players())
        .map(|i| {
            let f = instance.payoff(i);
            (0..states)
                .map(|x| {
                    instance
                        .successors(x)
                        .iter()
                        .map(|&(y, p)| {
                            let yes = sets
                                .iter()
                                .enumerate()
                                .filter(|(_, s)| s[y])
                                .fold(0u32, |m, (j, _)| m | 1 << j);
                            p * if game.aggregate_mask(yes) { f[y] } else { v[i][y] }
                        })
                        .sum()
                })
                .collect()
        })
        .collect()
}

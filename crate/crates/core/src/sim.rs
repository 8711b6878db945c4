//! Monte Carlo execution of strategy profiles on sampled trajectories.
//!
//! Beliefs are always filtered exactly; the built instance is only used to
//! look up which state, and therefore which stopping sets, apply.

use rayon::prelude::*;
use serde::Serialize;

use crate::belief::{self, WindowedPosterior};
use crate::chain::{trajectory_rng, SensorModel};
use crate::detect::DetectionInstance;
use crate::equilibrium::StrategyProfile;
use crate::error::{Error, Result};
use crate::games::SimpleGame;

/// How an alarm at `t` scores against one sensor's disorder time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// `t - d1 <= theta <= t + d2`.
    Success,
    /// `t < theta - d2`.
    FalseAlarm,
    /// `t > theta + d1`.
    Late,
    NoAlarm,
}

impl Outcome {
    pub fn classify(model: &SensorModel, theta: usize, alarm: Option<usize>) -> Self {
        let Some(t) = alarm else {
            return Outcome::NoAlarm;
        };
        if t + model.window_future() < theta {
            Outcome::FalseAlarm
        } else if t > theta + model.window_past() {
            Outcome::Late
        } else {
            Outcome::Success
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::FalseAlarm => "false_alarm",
            Outcome::Late => "late",
            Outcome::NoAlarm => "no_alarm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryRecord {
    pub id: u64,
    pub thetas: Vec<usize>,
    pub alarm: Option<usize>,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerStats {
    pub success: u64,
    pub false_alarm: u64,
    pub late: u64,
    pub no_alarm: u64,
    pub success_rate: f64,
    pub false_alarm_rate: f64,
    pub late_rate: f64,
    pub no_alarm_rate: f64,
    pub success_se: f64,
    pub false_alarm_se: f64,
    pub late_se: f64,
    pub no_alarm_se: f64,
}

impl PlayerStats {
    fn from_counts(counts: [u64; 4], samples: u64) -> Self {
        let m = samples as f64;
        let rate = |c: u64| c as f64 / m;
        let se = |c: u64| {
            let r = rate(c);
            (r * (1.0 - r) / m).sqrt()
        };
        let [s, f, l, n] = counts;
        Self {
            success: s,
            false_alarm: f,
            late: l,
            no_alarm: n,
            success_rate: rate(s),
            false_alarm_rate: rate(f),
            late_rate: rate(l),
            no_alarm_rate: rate(n),
            success_se: se(s),
            false_alarm_se: se(f),
            late_se: se(l),
            no_alarm_se: se(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub samples: u64,
    pub seed: u64,
    pub players: Vec<PlayerStats>,
    /// `alarm_histogram[t]`: trajectories whose alarm fired at time `t`.
    pub alarm_histogram: Vec<u64>,
    pub no_alarm: u64,
    pub max_steps: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub trajectories: Vec<TrajectoryRecord>,
}

/// Simulation settings shared by [`run`] and [`compare_policies`].
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub samples: u64,
    pub seed: u64,
    /// Cap on simulated steps for stationary profiles.
    pub max_steps: usize,
}

pub fn run(
    models: &[SensorModel],
    game: &SimpleGame,
    built: &DetectionInstance,
    profile: &StrategyProfile,
    config: RunConfig,
) -> Result<RunOutput> {
    let instance = built.instance();
    if profile.states() != instance.states() {
        return Err(Error::StateOutOfDomain {
            state: profile.states(),
            states: instance.states(),
        });
    }
    if profile.players() != models.len() || game.player_count() != models.len() {
        return Err(Error::LengthMismatch {
            expected: models.len(),
            found: profile.players().min(game.player_count()),
        });
    }
    if config.samples == 0 {
        return Err(Error::InvalidModel("need at least one sample".into()));
    }
    let last = profile.horizon().unwrap_or(config.max_steps);

    let trajectories = (0..config.samples)
        .into_par_iter()
        .map(|id| simulate_one(models, game, built, profile, last, config.seed, id))
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![[0u64; 4]; models.len()];
    let mut histogram = vec![0u64; last + 1];
    let mut no_alarm = 0;
    for t in &trajectories {
        match t.alarm {
            Some(a) => histogram[a] += 1,
            None => no_alarm += 1,
        }
        for (c, o) in counts.iter_mut().zip(&t.outcomes) {
            c[*o as usize] += 1;
        }
    }
    let report = RunReport {
        samples: config.samples,
        seed: config.seed,
        players: counts
            .into_iter()
            .map(|c| PlayerStats::from_counts(c, config.samples))
            .collect(),
        alarm_histogram: histogram,
        no_alarm,
        max_steps: last,
    };
    Ok(RunOutput {
        report,
        trajectories,
    })
}

fn simulate_one(
    models: &[SensorModel],
    game: &SimpleGame,
    built: &DetectionInstance,
    profile: &StrategyProfile,
    last: usize,
    seed: u64,
    id: u64,
) -> Result<TrajectoryRecord> {
    let mut rng = trajectory_rng(seed, id);
    let thetas: Vec<usize> = models.iter().map(|m| m.sample_theta(&mut rng)).collect();
    let mut symbols: Vec<usize> = models.iter().map(SensorModel::initial_state).collect();
    let mut beliefs: Vec<WindowedPosterior> = models.iter().map(belief::initial_belief).collect();
    let mut state = built.root();
    let mut alarm = None;

    if last == 0 && game.aggregate_mask(profile.votes(0, state)) {
        alarm = Some(0);
    }
    for n in 1..=last {
        if alarm.is_some() {
            break;
        }
        for (r, m) in models.iter().enumerate() {
            let y = m.sample_step(&mut rng, thetas[r], n, symbols[r]);
            beliefs[r] = belief::update(m, &beliefs[r], symbols[r], y)?;
            symbols[r] = y;
        }
        state = built
            .step(state, &symbols, &beliefs)
            .ok_or(Error::StateOutOfDomain {
                state: usize::MAX,
                states: built.instance().states(),
            })?;
        if game.aggregate_mask(profile.votes(n, state)) {
            alarm = Some(n);
        }
    }
    let outcomes = models
        .iter()
        .zip(&thetas)
        .map(|(m, &th)| Outcome::classify(m, th, alarm))
        .collect();
    Ok(TrajectoryRecord {
        id,
        thetas,
        alarm,
        outcomes,
    })
}

/// Runs several profiles on the same trajectories (common random numbers).
pub fn compare_policies(
    models: &[SensorModel],
    game: &SimpleGame,
    built: &DetectionInstance,
    profiles: &[(String, StrategyProfile)],
    config: RunConfig,
) -> Result<Vec<(String, RunReport)>> {
    profiles
        .iter()
        .map(|(name, p)| Ok((name.clone(), run(models, game, built, p, config)?.report)))
        .collect()
}

//! Exact filtering of the disorder time.
//!
//! The posterior over `theta` at time `n` is kept as three blocks:
//! the window masses `P(theta = n - k | F_n)` for `k = 0..=d1`, the past tail
//! `P(theta <= n - d1 - 1 | F_n)`, and the future mass `P(theta > n | F_n)`.
//! The cumulative posterior `Pi_n = P(theta <= n | F_n)` is the window plus
//! the past tail.

use crate::chain::SensorModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedPosterior {
    at: Vec<f64>,
    past_tail: f64,
    future: f64,
    time: usize,
}

impl WindowedPosterior {
    /// Builds a posterior from raw masses, renormalizing them to sum to one.
    pub fn from_masses(at: Vec<f64>, past_tail: f64, future: f64, time: usize) -> Result<Self> {
        if at.is_empty() {
            return Err(Error::InvalidModel("window must hold at least one mass".into()));
        }
        if at.iter().chain([&past_tail, &future]).any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidModel("posterior masses must be finite and non-negative".into()));
        }
        let total: f64 = at.iter().sum::<f64>() + past_tail + future;
        if total <= 0.0 {
            return Err(Error::InvalidModel("posterior masses sum to zero".into()));
        }
        Ok(Self {
            at: at.into_iter().map(|m| m / total).collect(),
            past_tail: past_tail / total,
            future: future / total,
            time,
        })
    }

    /// `(pi_0, ..., pi_d1)` with `pi_k = P(theta = n - k | F_n)`.
    pub fn at(&self) -> &[f64] {
        &self.at
    }

    pub fn past_tail(&self) -> f64 {
        self.past_tail
    }

    /// `P(theta > n | F_n)`.
    pub fn future(&self) -> f64 {
        self.future
    }

    pub fn time(&self) -> usize {
        self.time
    }

    /// `Pi_n = P(theta <= n | F_n)`.
    pub fn cumulative(&self) -> f64 {
        (self.at.iter().sum::<f64>() + self.past_tail).min(1.0)
    }

    /// Masses in the order `(past_tail, pi_d1, ..., pi_0, future)`, i.e. by
    /// increasing disorder time. Sums to one.
    pub fn masses(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.at.len() + 2);
        v.push(self.past_tail);
        v.extend(self.at.iter().rev());
        v.push(self.future);
        v
    }

    /// Inverse of [`masses`](Self::masses).
    pub fn from_ordered_masses(masses: &[f64], time: usize) -> Result<Self> {
        if masses.len() < 3 {
            return Err(Error::LengthMismatch {
                expected: 3,
                found: masses.len(),
            });
        }
        let last = masses.len() - 1;
        let at: Vec<f64> = masses[1..last].iter().rev().copied().collect();
        Self::from_masses(at, masses[0], masses[last], time)
    }
}

/// `Pi_0 = 0`: all mass on `theta > 0`.
pub fn initial_belief(model: &SensorModel) -> WindowedPosterior {
    WindowedPosterior {
        at: vec![0.0; model.window_past() + 1],
        past_tail: 0.0,
        future: 1.0,
        time: 0,
    }
}

/// One Bayes step after observing the transition `x_prev -> x_new`.
pub fn update(
    model: &SensorModel,
    b: &WindowedPosterior,
    x_prev: usize,
    x_new: usize,
) -> Result<WindowedPosterior> {
    let size = model.symbols();
    for s in [x_prev, x_new] {
        if s >= size {
            return Err(Error::SymbolOutOfRange { symbol: s, size });
        }
    }
    let width = model.window_past() + 1;
    if b.at.len() != width {
        return Err(Error::LengthMismatch {
            expected: width,
            found: b.at.len(),
        });
    }
    let l_post = model.post().prob(x_prev, x_new);
    let l_pre = model.pre().prob(x_prev, x_new);

    let mut at = Vec::with_capacity(width);
    at.push(b.future * model.q() * l_post);
    at.extend(b.at[..width - 1].iter().map(|m| m * l_post));
    let past_tail = (b.past_tail + b.at[width - 1]) * l_post;
    let future = b.future * model.p() * l_pre;

    let z: f64 = at.iter().sum::<f64>() + past_tail + future;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::ImpossibleObservation {
            from: x_prev,
            to: x_new,
        });
    }
    Ok(WindowedPosterior {
        at: at.into_iter().map(|m| m / z).collect(),
        past_tail: past_tail / z,
        future: future / z,
        time: b.time + 1,
    })
}

/// Runs [`update`] along a full observation path starting at `X_0`.
pub fn filter_path(model: &SensorModel, observations: &[usize]) -> Result<WindowedPosterior> {
    let mut b = initial_belief(model);
    if let Some(&first) = observations.first() {
        if first != model.initial_state() {
            return Err(Error::InitialStateMismatch {
                expected: model.initial_state(),
                found: first,
            });
        }
    }
    for w in observations.windows(2) {
        b = update(model, &b, w[0], w[1])?;
    }
    Ok(b)
}

/// `P(n - d1 <= theta <= n + d2 | F_n)`: the success probability of raising
/// the alarm now.
pub fn payoff_of(model: &SensorModel, b: &WindowedPosterior) -> f64 {
    let window: f64 = b.at.iter().sum();
    let ahead = 1.0 - model.prior_survival(model.window_future());
    (window + b.future * ahead).clamp(0.0, 1.0)
}

/// `P(theta <= n + 1 | F_n) = Pi_n + (1 - Pi_n) q`.
pub fn predictive_change_mass(model: &SensorModel, b: &WindowedPosterior) -> f64 {
    (1.0 - b.future * model.p()).clamp(0.0, 1.0)
}

/// Predictive law of the next symbol given the current symbol and belief.
pub fn predictive_step_law(model: &SensorModel, b: &WindowedPosterior, x: usize) -> Vec<f64> {
    model.marginal_step_law(x, predictive_change_mass(model, b))
}

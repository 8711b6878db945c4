//! Finite-alphabet Markov signal models with a single geometric disorder time.
//!
//! A sensor emits a Markov chain on a finite alphabet. Strictly before the
//! disorder time `theta` it moves with the `pre` kernel; from step `theta`
//! onward it moves with the `post` kernel, continuing from the last
//! pre-change symbol. `theta` is geometric on `{1, 2, ...}` with success
//! probability `q`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};

/// Row sums must match 1 within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Ordered, unique observation labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationAlphabet {
    symbols: Vec<String>,
}

impl ObservationAlphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "alphabet needs at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidModel(format!("duplicate symbol label {s:?}")));
            }
        }
        Ok(Self { symbols })
    }

    /// Labels `"0"`, `"1"`, ... for an alphabet of the given size.
    pub fn indexed(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn label(&self, symbol: usize) -> Option<&str> {
        self.symbols.get(symbol).map(String::as_str)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

/// Row-stochastic square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    size: usize,
    data: Vec<f64>,
}

impl TransitionKernel {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if size < 2 {
            return Err(Error::InvalidModel(format!(
                "kernel needs at least 2 rows, got {size}"
            )));
        }
        let mut data = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidModel(format!(
                    "kernel row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidModel(format!(
                    "kernel row {i} has an entry outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidModel(format!(
                    "kernel row {i} sums to {sum}, expected 1"
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { size, data })
    }

    /// Kernel whose rows all equal `row`.
    pub fn repeated_row(row: &[f64]) -> Result<Self> {
        Self::from_rows(&vec![row.to_vec(); row.len()])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.size..(from + 1) * self.size]
    }

    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.size + to]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| self.row(i).to_vec()).collect()
    }
}

/// One sensor: two regimes, a geometric prior on the disorder time, and an
/// asymmetric precision window.
///
/// An alarm at time `t` counts as a detection iff
/// `t - window_past <= theta <= t + window_future`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub id: usize,
    alphabet: ObservationAlphabet,
    pre: TransitionKernel,
    post: TransitionKernel,
    q: f64,
    initial_state: usize,
    window_past: usize,
    window_future: usize,
}

impl SensorModel {
    /// Builds a model with a zero-width window. `q` must lie in `(0, 1]`;
    /// `q = 1` is the degenerate prior with `theta = 1` almost surely.
    pub fn new(
        id: usize,
        pre: TransitionKernel,
        post: TransitionKernel,
        q: f64,
        initial_state: usize,
    ) -> Result<Self> {
        let alphabet = ObservationAlphabet::indexed(pre.size())?;
        Self::with_alphabet(id, alphabet, pre, post, q, initial_state)
    }

    pub fn with_alphabet(
        id: usize,
        alphabet: ObservationAlphabet,
        pre: TransitionKernel,
        post: TransitionKernel,
        q: f64,
        initial_state: usize,
    ) -> Result<Self> {
        if pre.size() != post.size() || pre.size() != alphabet.len() {
            return Err(Error::InvalidModel(format!(
                "alphabet size {}, pre kernel {}x{}, post kernel {}x{} disagree",
                alphabet.len(),
                pre.size(),
                pre.size(),
                post.size(),
                post.size()
            )));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidModel(format!(
                "change probability q = {q} must lie in (0, 1]"
            )));
        }
        if initial_state >= pre.size() {
            return Err(Error::SymbolOutOfRange {
                symbol: initial_state,
                size: pre.size(),
            });
        }
        Ok(Self {
            id,
            alphabet,
            pre,
            post,
            q,
            initial_state,
            window_past: 0,
            window_future: 0,
        })
    }

    pub fn with_window(mut self, window_past: usize, window_future: usize) -> Self {
        self.window_past = window_past;
        self.window_future = window_future;
        self
    }

    pub fn alphabet(&self) -> &ObservationAlphabet {
        &self.alphabet
    }

    pub fn symbols(&self) -> usize {
        self.pre.size()
    }

    pub fn pre(&self) -> &TransitionKernel {
        &self.pre
    }

    pub fn post(&self) -> &TransitionKernel {
        &self.post
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `1 - q`.
    pub fn p(&self) -> f64 {
        1.0 - self.q
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn window_past(&self) -> usize {
        self.window_past
    }

    pub fn window_future(&self) -> usize {
        self.window_future
    }

    /// `P(theta = j) = p^(j-1) q`.
    pub fn prior_pmf(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::ZeroDisorderTime);
        }
        Ok(self.p().powi((j - 1) as i32) * self.q)
    }

    /// `P(theta > n) = p^n`.
    pub fn prior_survival(&self, n: usize) -> f64 {
        self.p().powi(n as i32)
    }

    /// Kernel in force for the transition into step `step` given `theta`.
    fn kernel_for_step(&self, theta: usize, step: usize) -> &TransitionKernel {
        if step < theta {
            &self.pre
        } else {
            &self.post
        }
    }

    /// Exact probability of `observations` (which include `X_0`) given
    /// `theta`.
    pub fn path_probability(&self, theta: usize, observations: &[usize]) -> Result<f64> {
        let Some(&first) = observations.first() else {
            return Ok(1.0);
        };
        if first != self.initial_state {
            return Err(Error::InitialStateMismatch {
                expected: self.initial_state,
                found: first,
            });
        }
        let size = self.symbols();
        let mut prob = 1.0;
        for (k, w) in observations.windows(2).enumerate() {
            if w[1] >= size {
                return Err(Error::SymbolOutOfRange {
                    symbol: w[1],
                    size,
                });
            }
            prob *= self.kernel_for_step(theta, k + 1).prob(w[0], w[1]);
        }
        Ok(prob)
    }

    /// One-step predictive law of the next symbol from `x` when the change is
    /// active at the next step with probability `belief_change`.
    pub fn marginal_step_law(&self, x: usize, belief_change: f64) -> Vec<f64> {
        self.pre
            .row(x)
            .iter()
            .zip(self.post.row(x))
            .map(|(a, b)| belief_change * b + (1.0 - belief_change) * a)
            .collect()
    }

    /// Draws a disorder time from the geometric prior.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.q >= 1.0 {
            return 1;
        }
        let failures = Geometric::new(self.q)
            .expect("q validated in (0, 1]")
            .sample(rng);
        usize::try_from(failures).unwrap_or(usize::MAX - 1) + 1
    }

    /// Draws the next symbol from `x` using the regime in force at `step`.
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R, theta: usize, step: usize, x: usize) -> usize {
        sample_categorical(rng, self.kernel_for_step(theta, step).row(x))
    }

    pub fn sample_trajectory_with<R: Rng + ?Sized>(&self, rng: &mut R, horizon: usize) -> Trajectory {
        let theta = self.sample_theta(rng);
        let mut observations = Vec::with_capacity(horizon + 1);
        let mut x = self.initial_state;
        observations.push(x);
        for step in 1..=horizon {
            x = self.sample_step(rng, theta, step, x);
            observations.push(x);
        }
        Trajectory {
            theta,
            observations,
        }
    }

    /// Deterministic given `seed`.
    pub fn sample_trajectory(&self, horizon: usize, seed: u64) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_trajectory_with(&mut rng, horizon)
    }
}

/// Realized disorder time and the observed symbols `X_0..=X_N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub theta: usize,
    pub observations: Vec<usize>,
}

/// Independent stream for trajectory `index` under `master_seed`.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

pub(crate) fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_symbol(q: f64, pre: [f64; 2], post: [f64; 2]) -> SensorModel {
        SensorModel::new(
            1,
            TransitionKernel::repeated_row(&pre).unwrap(),
            TransitionKernel::repeated_row(&post).unwrap(),
            q,
            0,
        )
        .unwrap()
    }

    #[test]
    fn prior_pmf_values() {
        let m = two_symbol(0.5, [0.5, 0.5], [0.1, 0.9]);
        assert_eq!(m.prior_pmf(1).unwrap(), 0.5);
        assert_eq!(m.prior_pmf(3).unwrap(), 0.125);
        assert_eq!(m.prior_pmf(0), Err(Error::ZeroDisorderTime));

        let m = two_symbol(0.2, [0.5, 0.5], [0.1, 0.9]);
        // P(theta = 2) = F(2) - F(1) with F(j) = 1 - p^j.
        let cdf = |j: i32| 1.0 - 0.8f64.powi(j);
        assert!((m.prior_pmf(2).unwrap() - (cdf(2) - cdf(1))).abs() < 1e-15);
        assert!((m.prior_pmf(2).unwrap() - 0.16).abs() < 1e-15);
    }

    #[test]
    fn kernel_validation() {
        assert!(TransitionKernel::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.7]]).is_err());
        assert!(TransitionKernel::from_rows(&[vec![1.2, -0.2], vec![0.5, 0.5]]).is_err());
        assert!(TransitionKernel::from_rows(&[vec![1.0]]).is_err());
        assert!(TransitionKernel::from_rows(&[vec![0.5, 0.5], vec![0.5]]).is_err());
        assert!(ObservationAlphabet::new(["a", "a"]).is_err());
        assert!(ObservationAlphabet::new(["a"]).is_err());
    }

    #[test]
    fn model_rejects_bad_q() {
        let k = TransitionKernel::repeated_row(&[0.5, 0.5]).unwrap();
        assert!(SensorModel::new(1, k.clone(), k.clone(), 0.0, 0).is_err());
        assert!(SensorModel::new(1, k.clone(), k.clone(), 1.5, 0).is_err());
        assert!(SensorModel::new(1, k.clone(), k, 0.5, 2).is_err());
    }

    #[test]
    fn path_probability_basics() {
        let m = two_symbol(0.3, [0.5, 0.5], [0.1, 0.9]);
        assert_eq!(m.path_probability(1, &[]).unwrap(), 1.0);
        assert_eq!(m.path_probability(1, &[0]).unwrap(), 1.0);
        assert!(matches!(
            m.path_probability(1, &[1, 0]),
            Err(Error::InitialStateMismatch { .. })
        ));
        // theta = 2: first step pre, second post.
        let p = m.path_probability(2, &[0, 1, 1]).unwrap();
        assert!((p - 0.5 * 0.9).abs() < 1e-15);

        let flat = two_symbol(0.3, [0.4, 0.6], [0.4, 0.6]);
        let a = flat.path_probability(1, &[0, 1, 0, 1]).unwrap();
        let b = flat.path_probability(7, &[0, 1, 0, 1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn marginal_step_law_mixes_rows() {
        let m = two_symbol(0.3, [0.5, 0.5], [0.1, 0.9]);
        assert_eq!(m.marginal_step_law(0, 0.0), vec![0.5, 0.5]);
        assert_eq!(m.marginal_step_law(0, 1.0), vec![0.1, 0.9]);
        let mix = m.marginal_step_law(0, 0.5);
        assert!((mix[0] - 0.3).abs() < 1e-15 && (mix[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = two_symbol(0.3, [0.5, 0.5], [0.1, 0.9]);
        assert_eq!(m.sample_trajectory(20, 7), m.sample_trajectory(20, 7));
        let t = m.sample_trajectory(0, 1);
        assert_eq!(t.observations, vec![0]);
        assert!(t.theta >= 1);
    }

    #[test]
    fn near_certain_change_samples_theta_one() {
        let m = two_symbol(1.0 - 1e-12, [0.5, 0.5], [0.1, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ones = (0..100_000).filter(|_| m.sample_theta(&mut rng) == 1).count();
        assert!(ones as f64 / 1e5 >= 1.0 - 1e-3);
    }

    #[test]
    fn trajectory_streams_differ() {
        let m = two_symbol(0.3, [0.5, 0.5], [0.1, 0.9]);
        let a = m.sample_trajectory_with(&mut trajectory_rng(9, 0), 30);
        let b = m.sample_trajectory_with(&mut trajectory_rng(9, 1), 30);
        let a2 = m.sample_trajectory_with(&mut trajectory_rng(9, 0), 30);
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }
}

use crate::error::{Error, Result};

/// Row sums of an instance's transition matrix must match 1 within this.
pub const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn finite(self) -> Option<usize> {
        match self {
            Horizon::Finite(n) => Some(n),
            Horizon::Infinite => None,
        }
    }
}

/// A finite Markov chain with one payoff function per player.
///
/// Transitions are sparse rows of `(successor, probability)`. When `root` is
/// set, only play started from that state is meaningful (history trees);
/// otherwise every state is a valid start.
#[derive(Debug, Clone)]
pub struct GameInstance {
    transitions: Vec<Vec<(usize, f64)>>,
    payoffs: Vec<Vec<f64>>,
    horizon: Horizon,
    stationary: bool,
    root: Option<usize>,
    keys: Vec<String>,
}

impl GameInstance {
    /// Validates stochastic rows and finite payoffs. `payoffs[i][x]` is player
    /// `i`'s reward for stopping in state `x`.
    pub fn new(transitions: Vec<Vec<(usize, f64)>>, payoffs: Vec<Vec<f64>>, horizon: Horizon) -> Result<Self> {
        let states = transitions.len();
        if states == 0 {
            return Err(Error::InvalidModel("instance has no states".into()));
        }
        if payoffs.is_empty() {
            return Err(Error::InvalidModel("instance has no players".into()));
        }
        for (x, row) in transitions.iter().enumerate() {
            let mut sum = 0.0;
            for &(y, p) in row {
                if y >= states {
                    return Err(Error::InvalidModel(format!("state {x} points at missing state {y}")));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidModel(format!("state {x} has probability {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidModel(format!("state {x} row sums to {sum}")));
            }
        }
        for (i, f) in payoffs.iter().enumerate() {
            if f.len() != states {
                return Err(Error::LengthMismatch {
                    expected: states,
                    found: f.len(),
                });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("player {i} has a non-finite payoff")));
            }
        }
        Ok(Self {
            keys: (0..states).map(|x| x.to_string()).collect(),
            transitions,
            payoffs,
            horizon,
            stationary: true,
            root: None,
        })
    }

    /// Builds from a dense row-stochastic matrix.
    pub fn from_dense(matrix: &[Vec<f64>], payoffs: Vec<Vec<f64>>, horizon: Horizon) -> Result<Self> {
        let transitions = matrix
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(y, &p)| (y, p))
                    .collect()
            })
            .collect();
        Self::new(transitions, payoffs, horizon)
    }

    pub(crate) fn with_root(mut self, root: usize, stationary: bool) -> Self {
        self.root = Some(root);
        self.stationary = stationary;
        self
    }

    pub(crate) fn with_keys(mut self, keys: Vec<String>) -> Self {
        debug_assert_eq!(keys.len(), self.transitions.len());
        self.keys = keys;
        self
    }

    pub fn states(&self) -> usize {
        self.transitions.len()
    }

    pub fn players(&self) -> usize {
        self.payoffs.len()
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    /// Same instance with a different horizon.
    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    /// Whether the chain is time-homogeneous in a way that makes stationary
    /// play meaningful. History trees are not.
    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    /// States from which play may start.
    pub fn start_states(&self) -> Vec<usize> {
        match self.root {
            Some(r) => vec![r],
            None => (0..self.states()).collect(),
        }
    }

    pub fn successors(&self, x: usize) -> &[(usize, f64)] {
        &self.transitions[x]
    }

    pub fn payoff(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    pub fn payoffs(&self) -> &[Vec<f64>] {
        &self.payoffs
    }

    /// Human-readable description of each state.
    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// `E_x g(X_1)` for every `x`.
    pub fn expect(&self, g: &[f64]) -> Vec<f64> {
        self.transitions
            .iter()
            .map(|row| row.iter().map(|&(y, p)| p * g[y]).sum())
            .collect()
    }

    /// States occupied with positive probability at each time `0..=steps`
    /// when starting from [`start_states`](Self::start_states).
    pub fn reachable_by_time(&self, steps: usize) -> Vec<Vec<bool>> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut now = vec![false; self.states()];
        for x in self.start_states() {
            now[x] = true;
        }
        out.push(now.clone());
        for _ in 0..steps {
            let mut next = vec![false; self.states()];
            for (x, _) in now.iter().enumerate().filter(|(_, &r)| r) {
                for &(y, p) in &self.transitions[x] {
                    if p > 0.0 {
                        next[y] = true;
                    }
                }
            }
            out.push(next.clone());
            now = next;
        }
        out
    }

    /// True when every payoff lies in `[0, 1]`, which makes
    /// `E sup_n f^+(X_n)` finite for every start.
    pub fn payoffs_bounded(&self) -> bool {
        self.payoffs.iter().flatten().all(|v| (0.0..=1.0).contains(v))
    }
}

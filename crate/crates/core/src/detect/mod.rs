//! Finite game instances built from sensor models.
//!
//! Two backends are provided. [`build_exact_tree`] unrolls every joint
//! observation history up to a horizon and carries exact beliefs at each
//! node. [`build_grid_chain`] discretizes each sensor's windowed posterior on
//! a simplex lattice, giving a stationary chain usable for long or unbounded
//! horizons. Sensors evolve independently in both.

mod grid;
mod instance;
mod tree;

pub use grid::{build_grid_chain, build_grid_chain_with, lattice_size, Projection, BeliefGrid, SensorGrid, SimplexLattice, DEFAULT_BINS, DEFAULT_GRID_CAP};
pub use instance::{GameInstance, Horizon, ROW_TOL};
pub use tree::{build_exact_tree, full_tree_nodes, ExactTree, TreeNode, DEFAULT_TREE_CAP_BITS};

use crate::belief::WindowedPosterior;
use crate::chain::SensorModel;
use crate::error::Result;

/// A built instance together with the map from observed histories to states.
#[derive(Debug, Clone)]
pub enum DetectionInstance {
    Tree(ExactTree),
    Grid(BeliefGrid),
}

impl DetectionInstance {
    pub fn instance(&self) -> &GameInstance {
        match self {
            DetectionInstance::Tree(t) => t.instance(),
            DetectionInstance::Grid(g) => g.instance(),
        }
    }

    /// State at time 0.
    pub fn root(&self) -> usize {
        match self {
            DetectionInstance::Tree(_) => 0,
            DetectionInstance::Grid(g) => g.root(),
        }
    }

    /// State reached from `state` after observing `symbols`, whose exact
    /// posteriors are `beliefs`. `None` when the tree has no such child.
    pub fn step(&self, state: usize, symbols: &[usize], beliefs: &[WindowedPosterior]) -> Option<usize> {
        match self {
            DetectionInstance::Tree(t) => t.child(state, symbols),
            DetectionInstance::Grid(g) => Some(g.locate(symbols, beliefs)),
        }
    }
}

/// Optimal single-sensor detection on the exact tree.
#[derive(Debug, Clone)]
pub struct SingleSensorOptimum {
    /// `sup_tau P(n - d1 <= theta <= n + d2)` over stopping times in `1..=N`.
    pub value: f64,
    /// Stop decision per tree node (ties stop). Depth-0 entries are unused.
    pub stop: Vec<bool>,
    pub tree: ExactTree,
}

pub fn single_sensor_optimum(model: &SensorModel, horizon: usize, cap_bits: f64) -> Result<SingleSensorOptimum> {
    let tree = build_exact_tree(std::slice::from_ref(model), horizon, cap_bits)?;
    let inst = tree.instance();
    let f = inst.payoff(0);
    let n = tree.len();
    let mut value = vec![0.0; n];
    let mut stop = vec![false; n];
    // Children always have larger indices than their parent.
    for x in (0..n).rev() {
        let depth = tree.nodes()[x].depth;
        if depth == horizon {
            value[x] = f[x];
            stop[x] = true;
            continue;
        }
        let cont: f64 = inst.successors(x).iter().map(|&(y, p)| p * value[y]).sum();
        if depth > 0 && f[x] >= cont {
            value[x] = f[x];
            stop[x] = true;
        } else {
            value[x] = cont;
        }
    }
    if horizon == 0 {
        value[0] = f[0];
    }
    Ok(SingleSensorOptimum {
        value: value[0],
        stop,
        tree,
    })
}

/// `P(n - d1 <= theta <= n + d2)` under the prior alone.
pub fn fixed_time_value(model: &SensorModel, n: usize) -> f64 {
    let lo = n.saturating_sub(model.window_past()).max(1);
    let hi = n + model.window_future();
    // P(lo <= theta <= hi) = p^(lo-1) - p^hi
    model.prior_survival(lo - 1) - model.prior_survival(hi)
}

/// Best deterministic alarm time in `1..=horizon` and its success
/// probability.
pub fn best_fixed_time(model: &SensorModel, horizon: usize) -> (usize, f64) {
    (1..=horizon.max(1))
        .map(|n| (n, fixed_time_value(model, n)))
        .fold((1, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TransitionKernel;

    fn model(q: f64, pre: [f64; 2], post: [f64; 2]) -> SensorModel {
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
    fn certain_change_is_detected_at_once() {
        let m = model(1.0, [0.5, 0.5], [0.1, 0.9]).with_window(0, 2);
        let opt = single_sensor_optimum(&m, 3, 20.0).unwrap();
        assert_eq!(opt.value, 1.0);
        for x in opt.tree.level(1) {
            assert!(opt.stop[x]);
        }
    }

    #[test]
    fn uninformative_optimum_is_prior_mode() {
        let m = model(0.5, [0.5, 0.5], [0.5, 0.5]);
        let opt = single_sensor_optimum(&m, 2, 20.0).unwrap();
        assert!((opt.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fixed_time_closed_form() {
        let m = model(0.3, [0.5, 0.5], [0.1, 0.9]).with_window(1, 2);
        for n in 1..6usize {
            let direct: f64 = (n.saturating_sub(1).max(1)..=n + 2).map(|j| m.prior_pmf(j).unwrap()).sum();
            assert!((fixed_time_value(&m, n) - direct).abs() < 1e-15);
        }
        let m0 = model(0.3, [0.5, 0.5], [0.1, 0.9]);
        assert_eq!(best_fixed_time(&m0, 4).0, 1);
    }

    #[test]
    fn optimum_beats_fixed_time() {
        let m = model(0.3, [0.5, 0.5], [0.1, 0.9]).with_window(0, 1);
        let opt = single_sensor_optimum(&m, 5, 20.0).unwrap();
        assert!(opt.value >= best_fixed_time(&m, 5).1 - 1e-15);
    }
}

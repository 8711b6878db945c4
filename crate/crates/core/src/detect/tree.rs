use crate::belief::{self, WindowedPosterior};
use crate::chain::SensorModel;
use crate::error::{Error, Result};

use super::instance::{GameInstance, Horizon};

/// Default cap on `sum_r log2|E_r| * N`.
pub const DEFAULT_TREE_CAP_BITS: f64 = 20.0;

const ABSENT: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub depth: usize,
    pub parent: Option<usize>,
    /// Current symbol of each sensor.
    pub symbols: Vec<usize>,
    /// Exact posterior of each sensor given the node's history.
    pub beliefs: Vec<WindowedPosterior>,
}

/// The unrolled tree of joint observation histories up to a horizon.
#[derive(Debug, Clone)]
pub struct ExactTree {
    instance: GameInstance,
    nodes: Vec<TreeNode>,
    /// `children[node][code]`, with `code` the mixed-radix joint symbol.
    children: Vec<Vec<usize>>,
    strides: Vec<usize>,
}

/// Number of nodes in a full tree with `branching` children per node.
pub fn full_tree_nodes(branching: f64, horizon: usize) -> f64 {
    (0..=horizon).map(|n| branching.powi(n as i32)).sum()
}

pub fn build_exact_tree(models: &[SensorModel], horizon: usize, cap_bits: f64) -> Result<ExactTree> {
    if models.is_empty() {
        return Err(Error::InvalidModel("no sensors".into()));
    }
    let branching: usize = models.iter().map(SensorModel::symbols).product();
    let bits: f64 = models.iter().map(|m| (m.symbols() as f64).log2()).sum::<f64>() * horizon as f64;
    if bits > cap_bits {
        return Err(Error::TreeTooLarge {
            bits,
            cap: cap_bits,
            nodes: full_tree_nodes(branching as f64, horizon),
        });
    }
    let mut strides = Vec::with_capacity(models.len());
    let mut acc = 1;
    for m in models {
        strides.push(acc);
        acc *= m.symbols();
    }

    let root = TreeNode {
        depth: 0,
        parent: None,
        symbols: models.iter().map(SensorModel::initial_state).collect(),
        beliefs: models.iter().map(belief::initial_belief).collect(),
    };
    let mut nodes = vec![root];
    let mut children: Vec<Vec<usize>> = Vec::new();
    let mut transitions: Vec<Vec<(usize, f64)>> = Vec::new();

    let mut next = 0;
    while next < nodes.len() {
        let node = nodes[next].clone();
        if node.depth == horizon {
            children.push(Vec::new());
            transitions.push(vec![(next, 1.0)]);
            next += 1;
            continue;
        }
        let laws: Vec<Vec<f64>> = models
            .iter()
            .zip(&node.beliefs)
            .zip(&node.symbols)
            .map(|((m, b), &x)| belief::predictive_step_law(m, b, x))
            .collect();
        let mut kids = vec![ABSENT; branching];
        let mut row = Vec::new();
        for code in 0..branching {
            let ys: Vec<usize> = models
                .iter()
                .zip(&strides)
                .map(|(m, s)| code / s % m.symbols())
                .collect();
            let prob: f64 = laws.iter().zip(&ys).map(|(law, &y)| law[y]).product();
            if prob <= 0.0 {
                continue;
            }
            let beliefs = models
                .iter()
                .zip(&node.beliefs)
                .zip(node.symbols.iter().zip(&ys))
                .map(|((m, b), (&x, &y))| belief::update(m, b, x, y))
                .collect::<Result<Vec<_>>>()?;
            let id = nodes.len();
            nodes.push(TreeNode {
                depth: node.depth + 1,
                parent: Some(next),
                symbols: ys,
                beliefs,
            });
            kids[code] = id;
            row.push((id, prob));
        }
        // Renormalize away rounding in the product of laws.
        let total: f64 = row.iter().map(|(_, p)| p).sum();
        row.iter_mut().for_each(|(_, p)| *p /= total);
        children.push(kids);
        transitions.push(row);
        next += 1;
    }

    let payoffs = models
        .iter()
        .enumerate()
        .map(|(r, m)| nodes.iter().map(|n| belief::payoff_of(m, &n.beliefs[r])).collect())
        .collect();
    let keys = tree_keys(&nodes);
    let instance = GameInstance::new(transitions, payoffs, Horizon::Finite(horizon))?
        .with_root(0, false)
        .with_keys(keys);
    Ok(ExactTree {
        instance,
        nodes,
        children,
        strides,
    })
}

fn tree_keys(nodes: &[TreeNode]) -> Vec<String> {
    let mut keys: Vec<String> = Vec::with_capacity(nodes.len());
    for n in nodes {
        let here: Vec<String> = n.symbols.iter().map(usize::to_string).collect();
        let here = here.join(",");
        let key = match n.parent {
            Some(p) => format!("{}/{}", keys[p], here),
            None => here,
        };
        keys.push(key);
    }
    keys
}

impl ExactTree {
    pub fn instance(&self) -> &GameInstance {
        &self.instance
    }

    pub fn into_instance(self) -> GameInstance {
        self.instance
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.instance.horizon().finite().unwrap_or(0)
    }

    /// Child of `node` reached by the joint symbols `ys`.
    pub fn child(&self, node: usize, ys: &[usize]) -> Option<usize> {
        let code: usize = ys.iter().zip(&self.strides).map(|(y, s)| y * s).sum();
        self.children
            .get(node)?
            .get(code)
            .copied()
            .filter(|&c| c != ABSENT)
    }

    /// Nodes at the given depth.
    pub fn level(&self, depth: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, n)| n.depth == depth)
            .map(|(i, _)| i)
    }

    /// Probability of reaching each node from the root.
    pub fn reach_probabilities(&self) -> Vec<f64> {
        let mut reach = vec![0.0; self.nodes.len()];
        reach[0] = 1.0;
        for x in 0..self.nodes.len() {
            if self.nodes[x].depth == self.horizon() {
                continue;
            }
            for &(y, p) in self.instance.successors(x) {
                reach[y] += reach[x] * p;
            }
        }
        reach
    }

    /// Joint observation history from the root to `node`, one entry per time.
    pub fn history(&self, node: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Some(node);
        while let Some(c) = cur {
            out.push(self.nodes[c].symbols.clone());
            cur = self.nodes[c].parent;
        }
        out.reverse();
        out
    }
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
    fn node_count_binary_depth_three() {
        let t = build_exact_tree(&[model(0.3, [0.5, 0.5], [0.1, 0.9])], 3, 20.0).unwrap();
        assert_eq!(t.len(), 15);
        assert_eq!(t.level(3).count(), 8);
    }

    #[test]
    fn leaves_carry_all_mass() {
        let ms = [model(0.3, [0.5, 0.5], [0.1, 0.9]), model(0.6, [0.7, 0.3], [0.2, 0.8])];
        let t = build_exact_tree(&ms, 3, 20.0).unwrap();
        let reach = t.reach_probabilities();
        let total: f64 = t.level(3).map(|x| reach[x]).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for x in 0..t.len() {
            let s: f64 = t.instance().successors(x).iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uninformative_payoffs_depend_on_depth_only() {
        let m = model(0.3, [0.4, 0.6], [0.4, 0.6]).with_window(1, 1);
        let t = build_exact_tree(std::slice::from_ref(&m), 4, 20.0).unwrap();
        let f = t.instance().payoff(0);
        for depth in 0..=4 {
            let level: Vec<usize> = t.level(depth).collect();
            // Prior window mass P(n-1 <= theta <= n+1).
            let expected: f64 = (depth.saturating_sub(1).max(1)..=depth + 1)
                .map(|j| m.prior_pmf(j).unwrap())
                .sum();
            for &x in &level {
                assert!((f[x] - expected).abs() < 1e-12, "depth {depth}");
            }
        }
    }

    #[test]
    fn cap_reports_node_count() {
        let err = build_exact_tree(&[model(0.3, [0.5, 0.5], [0.1, 0.9])], 21, 20.0).unwrap_err();
        match err {
            Error::TreeTooLarge { nodes, .. } => assert_eq!(nodes, (2f64.powi(22)) - 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn child_lookup_follows_history() {
        let ms = [model(0.3, [0.5, 0.5], [0.1, 0.9]), model(0.6, [0.7, 0.3], [0.2, 0.8])];
        let t = build_exact_tree(&ms, 2, 20.0).unwrap();
        let a = t.child(0, &[1, 0]).unwrap();
        let b = t.child(a, &[1, 1]).unwrap();
        assert_eq!(t.history(b), vec![vec![0, 0], vec![1, 0], vec![1, 1]]);
        assert_eq!(t.instance().keys()[b], "0,0/1,0/1,1");
        assert_eq!(t.child(b, &[0, 0]), None);
    }
}

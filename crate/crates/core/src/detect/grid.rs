use std::collections::HashMap;

use crate::belief::{self, WindowedPosterior};
use crate::chain::SensorModel;
use crate::error::{Error, Result};

use super::instance::{GameInstance, Horizon};

pub const DEFAULT_BINS: usize = 201;
/// Default cap on the number of joint grid states.
pub const DEFAULT_GRID_CAP: usize = 500_000;

/// Lattice on the probability simplex: points whose coordinates are
/// multiples of `1 / resolution` and sum to one.
#[derive(Debug, Clone)]
pub struct SimplexLattice {
    resolution: u32,
    dims: usize,
    points: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

/// `C(n, k)` in floating point.
fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of lattice points with `bins` values per coordinate on a simplex
/// with `dims` coordinates.
pub fn lattice_size(bins: usize, dims: usize) -> f64 {
    let r = bins - 1;
    binomial(r + dims - 1, dims - 1)
}

impl SimplexLattice {
    pub fn new(bins: usize, dims: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidModel(format!("grid needs at least 2 bins, got {bins}")));
        }
        let resolution = u32::try_from(bins - 1)
            .map_err(|_| Error::InvalidModel(format!("too many bins: {bins}")))?;
        let mut points = Vec::new();
        let mut cur = vec![0u32; dims];
        compositions(resolution, 0, &mut cur, &mut points);
        let index = points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Ok(Self {
            resolution,
            dims,
            points,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, cell: usize) -> Vec<f64> {
        let r = f64::from(self.resolution);
        self.points[cell].iter().map(|&c| f64::from(c) / r).collect()
    }

    pub fn coords(&self, cell: usize) -> &[u32] {
        &self.points[cell]
    }

    /// Nearest lattice point: scale, floor, then hand the leftover units to
    /// the coordinates with the largest remainders (lowest index on ties).
    pub fn project(&self, masses: &[f64]) -> usize {
        debug_assert_eq!(masses.len(), self.dims);
        let r = f64::from(self.resolution);
        let total: f64 = masses.iter().sum();
        let scaled: Vec<f64> = masses.iter().map(|m| m / total * r).collect();
        let mut coords: Vec<u32> = scaled.iter().map(|s| s.floor() as u32).collect();
        let used: u32 = coords.iter().sum();
        let mut order: Vec<usize> = (0..self.dims).collect();
        order.sort_by(|&a, &b| {
            let fa = scaled[a] - scaled[a].floor();
            let fb = scaled[b] - scaled[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &k in order.iter().take(self.resolution.saturating_sub(used) as usize) {
            coords[k] += 1;
        }
        self.index[&coords]
    }

    /// Splits `masses` into lattice points whose weighted mean is `masses`
    /// itself. Uses at most `dims` points, all neighbours of the input.
    pub fn split(&self, masses: &[f64]) -> Vec<(usize, f64)> {
        debug_assert_eq!(masses.len(), self.dims);
        let r = f64::from(self.resolution);
        let total: f64 = masses.iter().sum();
        let scaled: Vec<f64> = masses.iter().map(|m| m / total * r).collect();
        let base: Vec<u32> = scaled.iter().map(|s| s.floor() as u32).collect();
        let extra = self.resolution - base.iter().sum::<u32>().min(self.resolution);
        let mut frac: Vec<f64> = scaled.iter().zip(&base).map(|(s, &b)| s - f64::from(b)).collect();
        let mut out: Vec<(usize, f64)> = Vec::new();
        let mut left = 1.0;
        while left > SPLIT_EPS {
            // Take the `extra` largest fractional parts as one vertex, with
            // the largest weight keeping the remainder a valid residual.
            let mut order: Vec<usize> = (0..self.dims).collect();
            order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
            let (up, down) = order.split_at(extra as usize);
            let lo_in = up.iter().map(|&k| frac[k]).fold(1.0, f64::min);
            let hi_out = down.iter().map(|&k| frac[k]).fold(0.0, f64::max);
            let step = (lo_in.min(1.0 - hi_out) * left).clamp(0.0, left);
            let weight = if step <= SPLIT_EPS || out.len() + 1 == self.dims { left } else { step };
            let mut coords = base.clone();
            for &k in up {
                coords[k] += 1;
            }
            out.push((self.index[&coords], weight));
            left -= weight;
            if left <= SPLIT_EPS {
                break;
            }
            // Residual fractions, rescaled to the remaining weight.
            let keep = left + weight;
            for (k, f) in frac.iter_mut().enumerate() {
                let used = if up.contains(&k) { weight } else { 0.0 };
                *f = ((*f * keep - used) / left).clamp(0.0, 1.0);
            }
        }
        let sum: f64 = out.iter().map(|(_, w)| w).sum();
        out.iter_mut().for_each(|(_, w)| *w /= sum);
        out
    }
}

const SPLIT_EPS: f64 = 1e-14;

/// How an exact post-update belief is mapped back onto the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    /// Mean-preserving split over neighbouring lattice points.
    #[default]
    Barycentric,
    /// All mass to the nearest lattice point.
    Nearest,
}

fn compositions(remaining: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if k + 1 == cur.len() {
        cur[k] = remaining;
        out.push(cur.clone());
        return;
    }
    for v in 0..=remaining {
        cur[k] = v;
        compositions(remaining - v, k + 1, cur, out);
    }
}

/// One sensor's local grid: `cell * symbols + symbol`.
#[derive(Debug, Clone)]
pub struct SensorGrid {
    lattice: SimplexLattice,
    symbols: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    payoffs: Vec<f64>,
}

impl SensorGrid {
    fn build(model: &SensorModel, bins: usize, projection: Projection) -> Result<Self> {
        let lattice = SimplexLattice::new(bins, model.window_past() + 3)?;
        let symbols = model.symbols();
        let mut transitions = Vec::with_capacity(lattice.len() * symbols);
        let mut payoffs = Vec::with_capacity(lattice.len() * symbols);
        for cell in 0..lattice.len() {
            let b = WindowedPosterior::from_ordered_masses(&lattice.point(cell), 0)?;
            let f = belief::payoff_of(model, &b);
            for x in 0..symbols {
                let law = belief::predictive_step_law(model, &b, x);
                let mut row: Vec<(usize, f64)> = Vec::new();
                for (y, &p) in law.iter().enumerate() {
                    if p <= 0.0 {
                        continue;
                    }
                    let next = belief::update(model, &b, x, y)?.masses();
                    let targets = match projection {
                        Projection::Nearest => vec![(lattice.project(&next), 1.0)],
                        Projection::Barycentric => lattice.split(&next),
                    };
                    for (cell, w) in targets {
                        let target = cell * symbols + y;
                        match row.iter_mut().find(|(t, _)| *t == target) {
                            Some(entry) => entry.1 += p * w,
                            None => row.push((target, p * w)),
                        }
                    }
                }
                let total: f64 = row.iter().map(|(_, p)| p).sum();
                row.iter_mut().for_each(|(_, p)| *p /= total);
                transitions.push(row);
                payoffs.push(f);
            }
        }
        Ok(Self {
            lattice,
            symbols,
            transitions,
            payoffs,
        })
    }

    pub fn lattice(&self) -> &SimplexLattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn locate(&self, symbol: usize, b: &WindowedPosterior) -> usize {
        self.lattice.project(&b.masses()) * self.symbols + symbol
    }
}

/// Product of per-sensor belief grids; each exact update is projected back
/// onto the lattice.
#[derive(Debug, Clone)]
pub struct BeliefGrid {
    instance: GameInstance,
    sensors: Vec<SensorGrid>,
    strides: Vec<usize>,
    root: usize,
}

pub fn build_grid_chain(models: &[SensorModel], bins: usize, horizon: Horizon, cap: usize) -> Result<BeliefGrid> {
    build_grid_chain_with(models, bins, horizon, cap, Projection::default())
}

pub fn build_grid_chain_with(
    models: &[SensorModel],
    bins: usize,
    horizon: Horizon,
    cap: usize,
    projection: Projection,
) -> Result<BeliefGrid> {
    if models.is_empty() {
        return Err(Error::InvalidModel("no sensors".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidModel(format!("grid needs at least 2 bins, got {bins}")));
    }
    let required: f64 = models
        .iter()
        .map(|m| lattice_size(bins, m.window_past() + 3) * m.symbols() as f64)
        .product();
    if required > cap as f64 {
        return Err(Error::SizeCap {
            what: "grid states",
            required,
            cap: cap as f64,
        });
    }
    let sensors = models
        .iter()
        .map(|m| SensorGrid::build(m, bins, projection))
        .collect::<Result<Vec<_>>>()?;
    let mut strides = Vec::with_capacity(sensors.len());
    let mut total = 1;
    for s in &sensors {
        strides.push(total);
        total *= s.len();
    }

    let mut transitions = Vec::with_capacity(total);
    let mut payoffs = vec![Vec::with_capacity(total); sensors.len()];
    let mut keys = Vec::with_capacity(total);
    for state in 0..total {
        let locals: Vec<usize> = sensors
            .iter()
            .zip(&strides)
            .map(|(s, stride)| state / stride % s.len())
            .collect();
        let mut row = vec![(0usize, 1.0f64)];
        for ((s, &local), &stride) in sensors.iter().zip(&locals).zip(&strides) {
            let mut next = Vec::with_capacity(row.len() * s.transitions[local].len());
            for &(base, p) in &row {
                for &(t, q) in &s.transitions[local] {
                    next.push((base + t * stride, p * q));
                }
            }
            row = next;
        }
        transitions.push(row);
        for (r, (s, &local)) in sensors.iter().zip(&locals).enumerate() {
            payoffs[r].push(s.payoffs[local]);
        }
        keys.push(grid_key(&sensors, &locals));
    }

    let root = models
        .iter()
        .zip(&sensors)
        .zip(&strides)
        .map(|((m, s), stride)| s.locate(m.initial_state(), &belief::initial_belief(m)) * stride)
        .sum();
    let instance = GameInstance::new(transitions, payoffs, horizon)?.with_keys(keys);
    Ok(BeliefGrid {
        instance,
        sensors,
        strides,
        root,
    })
}

fn grid_key(sensors: &[SensorGrid], locals: &[usize]) -> String {
    let parts: Vec<String> = sensors
        .iter()
        .zip(locals)
        .map(|(s, &l)| {
            let coords: Vec<String> = s.lattice.coords(l / s.symbols).iter().map(u32::to_string).collect();
            format!("{}@{}", l % s.symbols, coords.join(":"))
        })
        .collect();
    parts.join(",")
}

impl BeliefGrid {
    pub fn instance(&self) -> &GameInstance {
        &self.instance
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn sensors(&self) -> &[SensorGrid] {
        &self.sensors
    }

    /// Joint state holding the nearest cells to the given exact beliefs.
    pub fn locate(&self, symbols: &[usize], beliefs: &[WindowedPosterior]) -> usize {
        self.sensors
            .iter()
            .zip(&self.strides)
            .zip(symbols.iter().zip(beliefs))
            .map(|((s, stride), (&x, b))| s.locate(x, b) * stride)
            .sum()
    }
}

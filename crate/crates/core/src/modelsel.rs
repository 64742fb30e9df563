//! Window selection by an outer lattice descent.
//!
//! Nodes are sequences of layer windows `W_1..W_d`, each a subset of a
//! maximal window. A node's cost is the validation error of a fresh inner fit
//! of the sequential-tables class over its windows. The outer loop moves to
//! the best sampled neighbor node at each step and keeps the best node seen.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{Window, ORIGIN};
use crate::learn::{error_counts, lda, slda, Dataset, ErrorCounts, SldaConfig, TrainResult};
use crate::par;
use crate::params::{random_init, ClassSpec};

/// The lattice of window sequences searched by [`hierarchical_slda`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowLatticeSpec {
    pub max_window: Window,
    pub depth: usize,
    pub min_size: usize,
    /// Keep the origin in every layer window.
    pub origin_pinned: bool,
}

impl WindowLatticeSpec {
    pub fn new(max_window: Window, depth: usize) -> Self {
        WindowLatticeSpec {
            max_window,
            depth,
            min_size: 1,
            origin_pinned: true,
        }
    }

    pub fn validate(&self, table_cap: usize) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::input("window lattice depth must be >= 1"));
        }
        self.max_window.check_cap(table_cap, "max window")?;
        if self.origin_pinned && !self.max_window.contains(ORIGIN) {
            return Err(Error::input("origin is pinned but not in the max window"));
        }
        if self.min_size > self.max_window.len() || self.min_size == 0 && self.max_window.is_empty() {
            return Err(Error::input("min layer size exceeds the max window"));
        }
        Ok(())
    }

    fn origin_bit(&self) -> Option<u32> {
        self.max_window.index_of(ORIGIN).map(|j| 1 << j)
    }

    fn to_masks(&self, ws: &[Window]) -> Result<Vec<u32>> {
        if ws.len() != self.depth {
            return Err(Error::input(format!(
                "expected {} layer windows, got {}",
                self.depth,
                ws.len()
            )));
        }
        ws.iter()
            .map(|w| {
                w.offsets().iter().try_fold(0u32, |m, o| {
                    self.max_window.index_of(*o).map(|j| m | 1 << j).ok_or_else(|| {
                        Error::input(format!("layer window {w} is not inside {}", self.max_window))
                    })
                })
            })
            .collect()
    }

    fn to_windows(&self, node: &[u32]) -> Vec<Window> {
        node.iter()
            .map(|&m| {
                Window::new(
                    self.max_window
                        .offsets()
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| m >> j & 1 == 1)
                        .map(|(_, o)| *o),
                )
                .expect("sub-window of a valid window")
            })
            .collect()
    }

    /// The smallest admissible node: the origin (when pinned) plus the first
    /// points of the max window up to the minimum size.
    pub fn bottom(&self) -> Vec<Window> {
        let mut m = self.origin_bit().filter(|_| self.origin_pinned).unwrap_or(0);
        for j in 0..self.max_window.len() {
            if m.count_ones() as usize >= self.min_size {
                break;
            }
            m |= 1 << j;
        }
        self.to_windows(&vec![m; self.depth])
    }

    fn neighbor_masks(&self, node: &[u32]) -> Vec<Vec<u32>> {
        let pinned = if self.origin_pinned {
            self.origin_bit().unwrap_or(0)
        } else {
            0
        };
        let mut out = Vec::new();
        for (l, &m) in node.iter().enumerate() {
            for j in 0..self.max_window.len() {
                let bit = 1u32 << j;
                let ok = if m & bit == 0 {
                    true
                } else {
                    bit != pinned && m.count_ones() as usize > self.min_size
                };
                if ok {
                    let mut n = node.to_vec();
                    n[l] ^= bit;
                    out.push(n);
                }
            }
        }
        out
    }
}

/// Single-point add/remove moves on one layer at a time, layer-major and then
/// by max-window offset order.
pub fn window_neighbors(ws: &[Window], spec: &WindowLatticeSpec) -> Result<Vec<Vec<Window>>> {
    let node = spec.to_masks(ws)?;
    Ok(spec
        .neighbor_masks(&node)
        .iter()
        .map(|n| spec.to_windows(n))
        .collect())
}

/// Training protocol run at each node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InnerFit {
    /// Stochastic descent; the configured seed is replaced by the node seed.
    Slda(SldaConfig),
    /// Deterministic descent for this many epochs.
    Lda { epochs: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Validation {
    /// Hold out this fraction of a seeded permutation (the prefix).
    Fraction(f64),
    Explicit(Dataset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterConfig {
    /// Neighbor nodes sampled per outer step.
    pub neighbors: usize,
    pub epochs: usize,
    pub inner: InnerFit,
    pub seed: u64,
    pub validation: Validation,
    /// Starting node; the lattice bottom when `None`.
    pub initial: Option<Vec<Window>>,
}

/// Result of evaluating one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFit {
    pub windows: Vec<Window>,
    pub fit: TrainResult,
    pub validation: ErrorCounts,
}

impl NodeFit {
    pub fn validation_error(&self) -> f64 {
        self.validation.rate()
    }
}

/// One outer step: the sampled nodes and where the search moved.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterStep {
    pub step: usize,
    pub candidates: Vec<(Vec<Window>, f64)>,
    pub current: Vec<Window>,
    pub best_updated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSelection {
    pub best: NodeFit,
    pub initial: NodeFit,
    pub steps: Vec<OuterStep>,
    /// Every evaluated node in first-visit order.
    pub visited: Vec<NodeFit>,
    pub train_indices: Vec<usize>,
    /// Indices into the input data; empty when validation data was explicit.
    pub validation_indices: Vec<usize>,
}

pub fn render_node(ws: &[Window]) -> String {
    ws.iter().map(Window::to_string).collect::<Vec<_>>().join(" | ")
}

/// Seed of the inner fit at a node, derived from the outer seed and the node.
pub fn node_seed(outer_seed: u64, ws: &[Window]) -> u64 {
    let d = Sha256::digest(format!("{outer_seed}:{}", render_node(ws)).as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::input(format!(
            "validation fraction {fraction} must be in (0,1)"
        )));
    }
    let k = (n as f64 * fraction).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::input(format!(
            "validation fraction {fraction} of {n} pairs leaves an empty part"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995));
    let val = order[..k].to_vec();
    let train = order[k..].to_vec();
    Ok((train, val))
}

/// Outer descent over window sequences minimizing validation error.
pub fn hierarchical_slda(
    spec: &WindowLatticeSpec,
    train: &Dataset,
    cfg: &OuterConfig,
) -> Result<ModelSelection> {
    spec.validate(crate::lattice::Caps::default().table)?;
    if cfg.neighbors == 0 || cfg.epochs == 0 {
        return Err(Error::input("outer neighbors and epochs must be >= 1"));
    }
    let (fit_data, val_data, train_indices, validation_indices) = match &cfg.validation {
        Validation::Fraction(f) => {
            let (t, v) = split(train.len(), *f, cfg.seed)?;
            (train.subset(&t)?, train.subset(&v)?, t, v)
        }
        Validation::Explicit(v) => (train.clone(), v.clone(), (0..train.len()).collect(), Vec::new()),
    };
    if let InnerFit::Slda(c) = &cfg.inner {
        c.validate(fit_data.len())?;
    }

    let evaluate = |node: &[u32]| -> Result<NodeFit> {
        let windows = spec.to_windows(node);
        let class = ClassSpec::seq_tables(windows.clone())?;
        let seed = node_seed(cfg.seed, &windows);
        let theta0 = random_init(&class, &mut ChaCha8Rng::seed_from_u64(seed));
        let fit = match &cfg.inner {
            InnerFit::Slda(c) => slda(&theta0, &fit_data, &SldaConfig { seed, ..c.clone() })?,
            InnerFit::Lda { epochs } => lda(&theta0, &fit_data, *epochs)?,
        };
        let validation = error_counts(&fit.best_param, val_data.pairs());
        Ok(NodeFit {
            windows,
            fit,
            validation,
        })
    };

    let mut memo: HashMap<Vec<u32>, NodeFit> = HashMap::new();
    let mut visited = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let start = match &cfg.initial {
        Some(ws) => spec.to_masks(ws)?,
        None => spec.to_masks(&spec.bottom())?,
    };
    let initial = evaluate(&start)?;
    memo.insert(start.clone(), initial.clone());
    visited.push(initial.clone());

    let mut current = start.clone();
    let mut best = start;
    let mut steps = Vec::with_capacity(cfg.epochs);
    for step in 1..=cfg.epochs {
        let all = spec.neighbor_masks(&current);
        let mut picks: Vec<usize> = if cfg.neighbors >= all.len() {
            (0..all.len()).collect()
        } else {
            index::sample(&mut rng, all.len(), cfg.neighbors).into_vec()
        };
        picks.sort_unstable();
        let cands: Vec<Vec<u32>> = picks.into_iter().map(|i| all[i].clone()).collect();

        let fresh: Vec<Vec<u32>> = cands.iter().filter(|c| !memo.contains_key(*c)).cloned().collect();
        for (node, fit) in fresh.iter().zip(par::map(&fresh, |n| evaluate(n))) {
            let fit = fit?;
            visited.push(fit.clone());
            memo.insert(node.clone(), fit);
        }

        let chosen = cands
            .iter()
            .min_by(|a, b| {
                let (ea, eb) = (memo[*a].validation.mismatched, memo[*b].validation.mismatched);
                ea.cmp(&eb).then_with(|| a.cmp(b))
            })
            .cloned();
        if let Some(c) = chosen {
            current = c;
        }
        let best_updated = memo[&current].validation.mismatched < memo[&best].validation.mismatched;
        if best_updated {
            best = current.clone();
        }
        steps.push(OuterStep {
            step,
            candidates: cands
                .iter()
                .map(|c| (memo[c].windows.clone(), memo[c].validation_error()))
                .collect(),
            current: spec.to_windows(&current),
            best_updated,
        });
    }

    Ok(ModelSelection {
        best: memo[&best].clone(),
        initial,
        steps,
        visited,
        train_indices,
        validation_indices,
    })
}

impl ModelSelection {
    /// Plain-text report of visited nodes, outer steps and the winner.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "split: train={} validation={}",
            self.train_indices.len(),
            if self.validation_indices.is_empty() {
                "explicit".to_string()
            } else {
                self.validation_indices.len().to_string()
            }
        );
        if !self.validation_indices.is_empty() {
            let idx: Vec<String> = self.validation_indices.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "validation_indices: {}", idx.join(","));
        }
        for v in &self.visited {
            let _ = writeln!(
                out,
                "node: {}\tvalidation_error: {}\ttrain_error: {}",
                render_node(&v.windows),
                v.validation_error(),
                v.fit.best_error
            );
        }
        for s in &self.steps {
            let _ = writeln!(
                out,
                "step: {}\tcurrent: {}\tbest_updated: {}",
                s.step,
                render_node(&s.current),
                s.best_updated
            );
        }
        let _ = writeln!(out, "winner: {}", render_node(&self.best.windows));
        let _ = writeln!(out, "winner_validation_error: {}", self.best.validation_error());
        out
    }
}

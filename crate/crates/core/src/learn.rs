//! Empirical risk and stochastic lattice descent.
//!
//! The loss is the pooled pixel-mismatch fraction: total mismatched pixels
//! over total pixels across all pairs. Errors are compared as integer counts
//! on a fixed pixel population, so argmin and best-so-far decisions are exact.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::Window;
use crate::morphology::ImageOperator;
use crate::morphology::{patch_codes, BinaryImage};
use crate::par;
use crate::params::{realize, ParamPoint};

/// An observed input/target image pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePair {
    input: BinaryImage,
    target: BinaryImage,
}

impl SamplePair {
    pub fn new(input: BinaryImage, target: BinaryImage) -> Result<Self> {
        if !input.same_shape(&target) || input.boundary() != target.boundary() {
            return Err(Error::input(format!(
                "pair mismatch: input {}x{} {:?}, target {}x{} {:?}",
                input.height(),
                input.width(),
                input.boundary(),
                target.height(),
                target.width(),
                target.boundary()
            )));
        }
        Ok(SamplePair { input, target })
    }

    pub fn input(&self) -> &BinaryImage {
        &self.input
    }

    pub fn target(&self) -> &BinaryImage {
        &self.target
    }
}

/// A nonempty ordered sample of pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pairs: Vec<SamplePair>,
}

impl Dataset {
    pub fn new(pairs: Vec<SamplePair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::input("dataset needs at least one pair"));
        }
        Ok(Dataset { pairs })
    }

    pub fn pairs(&self) -> &[SamplePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The pairs at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(indices.iter().map(|&i| self.pairs[i].clone()).collect())
    }
}

/// Mismatch and pixel totals over a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCounts {
    pub mismatched: u64,
    pub total: u64,
}

impl ErrorCounts {
    pub fn rate(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.mismatched as f64 / self.total as f64
        }
    }
}

/// Pairs with their patch codes cached on one window.
pub(crate) struct Prepared<'a> {
    pairs: &'a [SamplePair],
    codes: Vec<Vec<u32>>,
    window: Window,
}

impl<'a> Prepared<'a> {
    pub(crate) fn new(pairs: &'a [SamplePair], window: &Window) -> Self {
        let codes = par::map(pairs, |p| patch_codes(&p.input, window));
        Prepared {
            pairs,
            codes,
            window: window.clone(),
        }
    }

    fn pair_mismatch(&self, theta: &ParamPoint, i: usize) -> u64 {
        debug_assert_eq!(theta.spec().input_window(), &self.window);
        let p = &self.pairs[i];
        let pred = theta.predict_from_codes(&p.input, &self.codes[i]);
        pred.iter().zip(p.target.pixels()).filter(|(a, b)| a != b).count() as u64
    }

    pub(crate) fn counts(&self, theta: &ParamPoint, indices: &[usize]) -> ErrorCounts {
        let mismatched = par::sum_u64(indices, |&i| self.pair_mismatch(theta, i));
        let total = indices.iter().map(|&i| self.pairs[i].input.len() as u64).sum();
        ErrorCounts { mismatched, total }
    }

    fn all(&self) -> Vec<usize> {
        (0..self.pairs.len()).collect()
    }
}

/// Mismatch counts of `realize(theta)` over `pairs`.
pub fn error_counts(theta: &ParamPoint, pairs: &[SamplePair]) -> ErrorCounts {
    let prep = Prepared::new(pairs, theta.spec().input_window());
    prep.counts(theta, &prep.all())
}

/// Pooled pixel-mismatch fraction of `realize(theta)` on `pairs`.
pub fn empirical_error(theta: &ParamPoint, pairs: &[SamplePair]) -> f64 {
    error_counts(theta, pairs).rate()
}

/// Error on held-out pairs; disjointness from the training data is up to the
/// caller.
pub fn holdout_error(theta: &ParamPoint, test: &Dataset) -> f64 {
    empirical_error(theta, test.pairs())
}

/// Pooled intersection-over-union of predicted and target foregrounds. An
/// empty union counts as a perfect match.
pub fn iou(theta: &ParamPoint, pairs: &[SamplePair]) -> f64 {
    let op = realize(theta);
    let (inter, uni) = par::map(pairs, |p| {
        let pred = op.apply(&p.input);
        pred.pixels()
            .iter()
            .zip(p.target.pixels())
            .fold((0u64, 0u64), |(i, u), (&a, &b)| {
                (i + u64::from(a && b), u + u64::from(a || b))
            })
    })
    .into_iter()
    .fold((0, 0), |(i, u), (a, b)| (i + a, u + b));
    if uni == 0 {
        1.0
    } else {
        inter as f64 / uni as f64
    }
}

/// A uniformly random permutation of `0..n` cut into `⌈n/b⌉` consecutive
/// batches; only the last may be short.
pub fn partition_batches<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if b == 0 || b > n {
        return Err(Error::input(format!("batch size {b} must be in 1..={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(order.chunks(b).map(<[usize]>::to_vec).collect())
}

/// How many neighbors each descent step examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborCount {
    /// Draw this many neighbors uniformly at each step.
    Sampled(usize),
    /// Examine the whole neighborhood of the current point.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SldaConfig {
    pub batch_size: usize,
    pub neighbors: NeighborCount,
    pub epochs: usize,
    pub seed: u64,
    /// Keep the current point when it beats every sampled neighbor on the
    /// batch. Off by default; moves are otherwise unconditional.
    pub require_improvement: bool,
}

impl SldaConfig {
    pub fn new(batch_size: usize, neighbors: usize, epochs: usize, seed: u64) -> Self {
        SldaConfig {
            batch_size,
            neighbors: NeighborCount::Sampled(neighbors),
            epochs,
            seed,
            require_improvement: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::input(format!(
                "batch size {} must be in 1..={n}",
                self.batch_size
            )));
        }
        if self.neighbors == NeighborCount::Sampled(0) {
            return Err(Error::input("neighbors per step must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::input("epochs must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    /// Batch index within the epoch, from 1.
    pub batch: usize,
    /// Global step index, from 1.
    pub step: usize,
    /// Batch errors of the examined neighbors, in canonical neighbor order.
    pub candidate_errors: Vec<f64>,
    /// Serialization of the point after the step.
    pub theta: String,
    pub batch_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub full_error: f64,
    pub best_updated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub initial_error: f64,
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub best_param: ParamPoint,
    pub best_error: f64,
    pub trace: TrainTrace,
}

/// Short hex digest of a serialized parameter point.
pub fn theta_digest(serialized: &str) -> String {
    let d = Sha256::digest(serialized.as_bytes());
    d[..8].iter().fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl TrainTrace {
    /// CSV export, one row per step; `full_error_if_epoch_end` is filled on the
    /// last step of each epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,batch,step,batch_error,full_error_if_epoch_end,theta_digest\n");
        for (i, s) in self.steps.iter().enumerate() {
            let epoch_end = self.steps.get(i + 1).is_none_or(|n| n.epoch != s.epoch);
            let full = if epoch_end {
                self.epochs
                    .iter()
                    .find(|e| e.epoch == s.epoch)
                    .map(|e| e.full_error.to_string())
                    .unwrap_or_default()
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.epoch,
                s.batch,
                s.step,
                s.batch_error,
                full,
                theta_digest(&s.theta)
            );
        }
        out
    }
}

impl TrainResult {
    /// Structured text bundling the run configuration, result and `θ̂`.
    pub fn to_text(&self, cfg: &SldaConfig) -> String {
        let neighbors = match cfg.neighbors {
            NeighborCount::Sampled(n) => n.to_string(),
            NeighborCount::Exhaustive => "exhaustive".into(),
        };
        format!(
            "batch_size: {}\nneighbors: {neighbors}\nepochs: {}\nseed: {}\nrequire_improvement: {}\n\
             initial_error: {}\nbest_error: {}\nsteps: {}\ntheta:\n{}",
            cfg.batch_size,
            cfg.epochs,
            cfg.seed,
            cfg.require_improvement,
            self.trace.initial_error,
            self.best_error,
            self.trace.steps.len(),
            self.best_param.to_text()
        )
    }
}

/// Stochastic lattice descent from `theta0` on `data`.
///
/// Each epoch reshuffles the data into batches. For every batch the current
/// point moves to the examined neighbor with the least batch error (ties go to
/// the smallest serialization); at epoch end the full-sample error is compared
/// strictly against the best seen so far.
pub fn slda(theta0: &ParamPoint, data: &Dataset, cfg: &SldaConfig) -> Result<TrainResult> {
    cfg.validate(data.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let prep = Prepared::new(data.pairs(), theta0.spec().input_window());
    let all = prep.all();

    let initial = prep.counts(theta0, &all);
    let mut best_counts = initial;
    let mut best = theta0.clone();
    let mut theta = theta0.clone();
    let mut steps = Vec::new();
    let mut epochs = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let batches = partition_batches(data.len(), cfg.batch_size, &mut rng)?;
        for (j, batch) in batches.iter().enumerate() {
            let candidates = match cfg.neighbors {
                NeighborCount::Sampled(n) => theta.sample_neighbors(n, &mut rng),
                NeighborCount::Exhaustive => theta.neighbors(),
            };
            let counts = par::map(&candidates, |c| prep.counts(c, batch));
            let total = counts
                .first()
                .map_or_else(|| prep.counts(&theta, batch).total, |c| c.total);
            let candidate_errors = counts.iter().map(|c| c.rate()).collect();

            let chosen = pick_best(&candidates, &counts);
            let (next, next_counts) = match chosen {
                Some(i) if cfg.require_improvement => {
                    let cur = prep.counts(&theta, batch);
                    if cur.mismatched < counts[i].mismatched {
                        (theta.clone(), cur)
                    } else {
                        (candidates[i].clone(), counts[i])
                    }
                }
                Some(i) => (candidates[i].clone(), counts[i]),
                None => {
                    let cur = prep.counts(&theta, batch);
                    (theta.clone(), cur)
                }
            };
            debug_assert_eq!(next_counts.total, total);
            theta = next;
            steps.push(StepRecord {
                epoch,
                batch: j + 1,
                step: steps.len() + 1,
                candidate_errors,
                theta: theta.to_text(),
                batch_error: next_counts.rate(),
            });
        }
        let full = prep.counts(&theta, &all);
        let best_updated = full.mismatched < best_counts.mismatched;
        if best_updated {
            best_counts = full;
            best = theta.clone();
        }
        epochs.push(EpochRecord {
            epoch,
            full_error: full.rate(),
            best_updated,
        });
    }

    Ok(TrainResult {
        best_param: best,
        best_error: best_counts.rate(),
        trace: TrainTrace {
            initial_error: initial.rate(),
            steps,
            epochs,
        },
    })
}

/// Index of the least-error candidate, ties broken by serialization order.
fn pick_best(candidates: &[ParamPoint], counts: &[ErrorCounts]) -> Option<usize> {
    let min = counts.iter().map(|c| c.mismatched).min()?;
    let tied: Vec<usize> = (0..counts.len())
        .filter(|&i| counts[i].mismatched == min)
        .collect();
    if tied.len() == 1 {
        return Some(tied[0]);
    }
    tied.into_iter()
        .map(|i| (candidates[i].to_text(), i))
        .min()
        .map(|(_, i)| i)
}

/// Deterministic lattice descent: full-sample batches, every neighbor
/// examined at every step.
pub fn lda(theta0: &ParamPoint, data: &Dataset, epochs: usize) -> Result<TrainResult> {
    let cfg = SldaConfig {
        batch_size: data.len(),
        neighbors: NeighborCount::Exhaustive,
        epochs,
        seed: 0,
        require_improvement: false,
    };
    slda(theta0, data, &cfg)
}

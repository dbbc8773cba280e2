//! Ensembles of interval learners: bootstrap training, margin scoring,
//! median-vote integration, and Pareto pruning.
//!
//! A pool is trained once, then pruned: a search over selection masks keeps
//! the subset whose combined intervals score best (see [`pareto_prune`]).
//! Prediction uses only the selected learners, taking the per-sample median
//! of their lower and upper bounds.
//!
//! Training is deterministic given the per-learner seeds, and learners are
//! independent of one another, so training with any thread count produces
//! bit-identical pools.

mod model;
mod prune;

pub use model::{SavedModel, MODEL_FORMAT};
pub use prune::{
    pareto_prune, subset_objective, ObjectiveMode, ParetoArchive, ParetoEntry, PruneConfig,
    SelectionRule, SubsetEvaluator,
};

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::nnet::{Activation, BaseLearner, BoundMode, Bounds, OptimizerSpec, OptimizerState};
use crate::piloss::{self, IntervalBatch, LossConfig, LossReport};
use crate::seeds;
use crate::{Error, Matrix, Result};

/// Seed streams carved out of each learner's base seed.
const STREAM_BOOTSTRAP: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;

/// Everything needed to train one pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub pool_size: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Hidden layer widths; input and the two output heads are implied.
    pub hidden_dims: Vec<usize>,
    /// `None` picks by depth (relu for two or more hidden layers, sigmoid
    /// otherwise).
    pub activation: Option<Activation>,
    pub bound_mode: BoundMode,
    pub dropout_retention: f64,
    pub optimizer: OptimizerSpec,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            pool_size: 5,
            epochs: 300,
            batch_size: 32,
            hidden_dims: vec![100],
            activation: None,
            bound_mode: BoundMode::Softplus,
            dropout_retention: 0.8,
            optimizer: OptimizerSpec::default(),
            loss: LossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pool_size == 0 {
            return Err(Error::InvalidArgument("pool_size must be >= 1".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch_size must be >= 1".into(),
            ));
        }
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("zero-width hidden layer".into()));
        }
        if !(self.dropout_retention > 0.0 && self.dropout_retention <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dropout retention must lie in (0, 1], got {}",
                self.dropout_retention
            )));
        }
        self.optimizer.validate()?;
        self.loss.validate()
    }

    pub fn resolved_activation(&self) -> Activation {
        self.activation
            .unwrap_or_else(|| Activation::for_hidden_count(self.hidden_dims.len()))
    }

    pub fn layer_dims(&self, n_features: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(n_features);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(2);
        dims
    }
}

/// A trained pool plus its current selection mask.
#[derive(Debug, Clone)]
pub struct EnsemblePool {
    learners: Vec<BaseLearner>,
    selection: Vec<bool>,
    config: TrainConfig,
}

impl EnsemblePool {
    /// Wraps trained learners with everything selected.
    pub fn new(learners: Vec<BaseLearner>, config: TrainConfig) -> Result<Self> {
        if learners.is_empty() {
            return Err(Error::InvalidArgument("pool has no learners".into()));
        }
        let n_features = learners[0].layer_dims()[0];
        if learners.iter().any(|l| l.layer_dims()[0] != n_features) {
            return Err(Error::Shape(
                "learners disagree on input dimension".into(),
            ));
        }
        let selection = vec![true; learners.len()];
        Ok(EnsemblePool {
            learners,
            selection,
            config,
        })
    }

    pub fn learners(&self) -> &[BaseLearner] {
        &self.learners
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn selection(&self) -> &[bool] {
        &self.selection
    }

    pub fn set_selection(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.learners.len() {
            return Err(Error::Shape(format!(
                "selection mask of {} for {} learners",
                mask.len(),
                self.learners.len()
            )));
        }
        if mask.iter().all(|&b| !b) {
            return Err(Error::InvalidArgument(
                "selection mask keeps no learners".into(),
            ));
        }
        self.selection = mask;
        Ok(())
    }

    pub fn select_all(&mut self) {
        self.selection = vec![true; self.learners.len()];
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        self.selection
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_selected(&self) -> usize {
        self.selection.iter().filter(|&&s| s).count()
    }
}

/// One learner that never finished training.
#[derive(Debug)]
pub struct TrainFailure {
    pub learner: usize,
    pub error: Error,
}

/// Result of [`train_pool`]: the surviving learners plus any failures.
#[derive(Debug)]
pub struct TrainOutcome {
    pub pool: EnsemblePool,
    /// Indices refer to positions in the original seed list.
    pub failures: Vec<TrainFailure>,
}

/// Draws `n` rows with replacement (same size as the input).
pub fn bootstrap_resample(data: &Dataset, seed: u64) -> Result<Dataset> {
    let n = data.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    data.select(&indices)
}

/// Trains `seeds.len()` learners independently, each on its own bootstrap
/// resample of `data`. `threads` caps the worker count; results are
/// bit-identical for any value because learner `i` depends only on
/// `seeds[i]`.
///
/// A learner whose loss or gradients go non-finite is abandoned and
/// reported in [`TrainOutcome::failures`]; the pool keeps the survivors.
/// Only a pool with zero survivors is an error.
pub fn train_pool(
    data: &Dataset,
    config: &TrainConfig,
    seeds: &[u64],
    threads: usize,
) -> Result<TrainOutcome> {
    config.validate()?;
    if seeds.len() != config.pool_size {
        return Err(Error::InvalidArgument(format!(
            "{} seeds for pool_size {}",
            seeds.len(),
            config.pool_size
        )));
    }
    if threads == 0 {
        return Err(Error::InvalidArgument("threads must be >= 1".into()));
    }

    let mut results: Vec<Option<std::result::Result<BaseLearner, Error>>> =
        (0..seeds.len()).map(|_| None).collect();
    if threads == 1 || seeds.len() == 1 {
        for (i, &seed) in seeds.iter().enumerate() {
            results[i] = Some(train_single(data, config, i, seed));
        }
    } else {
        let workers = threads.min(seeds.len());
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<std::result::Result<BaseLearner, Error>>>> =
            (0..seeds.len()).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= seeds.len() {
                        break;
                    }
                    let out = train_single(data, config, i, seeds[i]);
                    *slots[i].lock().expect("no panics hold this lock") = Some(out);
                });
            }
        });
        for (i, slot) in slots.into_iter().enumerate() {
            results[i] = slot.into_inner().expect("worker threads have exited");
        }
    }

    let mut learners = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r.expect("every learner index was dispatched") {
            Ok(l) => learners.push(l),
            Err(error) => failures.push(TrainFailure { learner: i, error }),
        }
    }
    if learners.is_empty() {
        return Err(Error::Data(format!(
            "all {} learners failed to train (first failure: {})",
            seeds.len(),
            failures[0].error
        )));
    }
    let pool = EnsemblePool::new(learners, config.clone())?;
    Ok(TrainOutcome { pool, failures })
}

/// Trains one learner on its own bootstrap sample. Gradient descent on the
/// interval loss, minibatches reshuffled each epoch.
fn train_single(
    data: &Dataset,
    config: &TrainConfig,
    index: usize,
    seed: u64,
) -> std::result::Result<BaseLearner, Error> {
    let sample = bootstrap_resample(data, seeds::derive(seed, STREAM_BOOTSTRAP))?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, STREAM_INIT));
    let mut learner = BaseLearner::init(
        &config.layer_dims(data.n_features()),
        config.resolved_activation(),
        config.bound_mode,
        config.dropout_retention,
        &mut init_rng,
    )?;
    let mut opt = OptimizerState::new(config.optimizer, &learner)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, STREAM_TRAIN));

    let n = sample.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        // fresh minibatch order each epoch
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(config.batch_size) {
            let x = sample.features().select_rows(chunk)?;
            let t: Vec<f64> = chunk.iter().map(|&i| sample.targets()[i]).collect();
            let mut step = || -> Result<()> {
                let (trace, bounds) = learner.forward_train(&x, &mut rng)?;
                let batch = IntervalBatch::new(bounds.lower, bounds.upper, t.clone())?;
                let loss = piloss::loss_mbpep(&batch, &config.loss);
                if !loss.is_finite() {
                    return Err(Error::Data("loss diverged".into()));
                }
                let (dl, du) = piloss::loss_mbpep_grad(&batch, &config.loss);
                let grads = learner.backward(&x, &trace, &dl, &du)?;
                learner.apply_update(&grads, &mut opt)
            };
            // A shape error is a bug worth surfacing as-is; numeric blowups
            // become a structured abort naming the learner and epoch.
            if let Err(e) = step() {
                return Err(match e {
                    Error::Shape(_) => e,
                    Error::Data(_) => Error::NonFinite {
                        learner: index,
                        epoch,
                        what: "loss or gradients",
                    },
                    other => other,
                });
            }
        }
    }
    Ok(learner)
}

/// Mean interval width of the *selected* learners at one input point.
pub fn margin(pool: &EnsemblePool, x: &[f64]) -> Result<f64> {
    let inputs = Matrix::from_vec(1, x.len(), x.to_vec())?;
    let sel = pool.selected_indices();
    if sel.is_empty() {
        return Err(Error::InvalidArgument("no learners selected".into()));
    }
    let mut sum = 0.0;
    for &t in &sel {
        let b = pool.learners()[t].predict(&inputs)?;
        sum += (b.upper[0] - b.lower[0]).abs();
    }
    Ok(sum / sel.len() as f64)
}

/// Mean log-margin over a dataset: rewards ensembles whose intervals stay
/// tight everywhere (the log turns width ratios into differences).
///
/// Errors with [`Error::Undefined`] when some margin is exactly zero, since
/// its log diverges.
pub fn margin_score(pool: &EnsemblePool, data: &Dataset) -> Result<f64> {
    let sel = pool.selected_indices();
    if sel.is_empty() {
        return Err(Error::InvalidArgument("no learners selected".into()));
    }
    let mut bounds = Vec::with_capacity(sel.len());
    for &t in &sel {
        bounds.push(pool.learners()[t].predict(data.features())?);
    }
    let n = data.n_rows();
    let mut acc = 0.0;
    for i in 0..n {
        let m: f64 = bounds
            .iter()
            .map(|b| (b.upper[i] - b.lower[i]).abs())
            .sum::<f64>()
            / sel.len() as f64;
        if m == 0.0 {
            return Err(Error::Undefined(format!(
                "margin is zero at sample {i}, its log diverges"
            )));
        }
        acc += m.ln();
    }
    Ok(acc / n as f64)
}

/// Per-sample median of the selected learners' bounds. Even counts take the
/// mean of the two central values.
pub fn median_vote(pool: &EnsemblePool, inputs: &Matrix) -> Result<Bounds> {
    let sel = pool.selected_indices();
    if sel.is_empty() {
        return Err(Error::InvalidArgument("no learners selected".into()));
    }
    let mut all = Vec::with_capacity(sel.len());
    for &t in &sel {
        all.push(pool.learners()[t].predict(inputs)?);
    }
    let n = inputs.rows();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(sel.len());
    for i in 0..n {
        scratch.clear();
        scratch.extend(all.iter().map(|b| b.lower[i]));
        lower.push(median_in_place(&mut scratch));
        scratch.clear();
        scratch.extend(all.iter().map(|b| b.upper[i]));
        upper.push(median_in_place(&mut scratch));
    }
    Ok(Bounds { lower, upper })
}

/// Median of a non-empty scratch buffer (sorts it).
pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Metrics of a pool on a dataset, plus how long prediction took.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: LossReport,
    pub pool_size: usize,
    pub ensemble_size: usize,
    pub selected: Vec<usize>,
    pub n_samples: usize,
    /// Wall-clock seconds spent inside [`median_vote`].
    pub prediction_seconds: f64,
}

/// Scores the selected ensemble on `data` by median vote.
pub fn evaluate(pool: &EnsemblePool, data: &Dataset, loss: &LossConfig) -> Result<EvalReport> {
    loss.validate()?;
    let started = Instant::now();
    let bounds = median_vote(pool, data.features())?;
    let prediction_seconds = started.elapsed().as_secs_f64();
    let batch = IntervalBatch::new(bounds.lower, bounds.upper, data.targets().to_vec())?;
    Ok(EvalReport {
        metrics: piloss::loss_report(&batch, loss),
        pool_size: pool.learners().len(),
        ensemble_size: pool.n_selected(),
        selected: pool.selected_indices(),
        n_samples: data.n_rows(),
        prediction_seconds,
    })
}

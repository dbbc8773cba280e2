//! Subset search: prune a pool down to the mask that scores best on a
//! bi-objective front of (interval quality, ensemble size).
//!
//! The search keeps an archive of mutually non-dominated `(objective, size)`
//! masks, seeded with the full pool. Each iteration clones a uniformly
//! random archive entry, flips each bit with a small probability, scores the
//! child, and inserts it if no archive entry is at least as good on both
//! axes. Dominated entries are evicted on insert, so the archive is always
//! a Pareto front. The empty mask is barred: predicting with zero learners
//! is meaningless, so it gets an infinite objective and never enters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::piloss::{self, IntervalBatch, LossConfig};
use crate::{Error, Result};

use super::{median_in_place, EnsemblePool};

/// How a candidate subset is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// Score the median-voted ensemble interval (what prediction actually
    /// uses).
    #[default]
    FusedVote,
    /// Score each selected learner separately and average the losses.
    PerLearnerMean,
}

/// How the final mask is picked off the archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Smallest objective; ties broken by smaller size, then
    /// lexicographically smallest mask.
    #[default]
    MinObjective,
    /// The elbow of the front: the entry farthest from the chord between
    /// the best-objective and smallest-size extremes (axes normalized).
    /// Falls back to `MinObjective` when the front is too small to have an
    /// elbow.
    Knee,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Search budget; `None` means `ceil(2 * e * T^2)` for a pool of `T`.
    pub max_iterations: Option<u64>,
    /// Per-bit mutation probability; `None` means `1 / T`.
    pub flip_probability: Option<f64>,
    pub seed: u64,
    pub selection: SelectionRule,
    pub objective: ObjectiveMode,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            max_iterations: None,
            flip_probability: None,
            seed: 0,
            selection: SelectionRule::default(),
            objective: ObjectiveMode::default(),
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(0) = self.max_iterations {
            return Err(Error::InvalidArgument(
                "max_iterations must be >= 1".into(),
            ));
        }
        if let Some(p) = self.flip_probability {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "flip probability must lie in (0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn resolved_iterations(&self, pool_size: usize) -> u64 {
        self.max_iterations.unwrap_or_else(|| {
            let t = pool_size as f64;
            (2.0 * std::f64::consts::E * t * t).ceil() as u64
        })
    }

    pub fn resolved_flip_probability(&self, pool_size: usize) -> f64 {
        self.flip_probability
            .unwrap_or(1.0 / pool_size.max(1) as f64)
    }
}

/// One archived subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry {
    pub mask: Vec<bool>,
    pub objective: f64,
    pub size: usize,
}

impl ParetoEntry {
    /// Total order used for "best": objective, then size, then mask.
    fn rank_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.objective
            .total_cmp(&other.objective)
            .then(self.size.cmp(&other.size))
            .then(self.mask.cmp(&other.mask))
    }
}

/// A mutually non-dominated set of `(objective, size)` entries.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParetoArchive {
    entries: Vec<ParetoEntry>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        ParetoArchive::default()
    }

    pub fn entries(&self) -> &[ParetoEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts unless some entry is at least as good on both axes (which
    /// also rejects exact duplicates); evicts entries the candidate weakly
    /// dominates. Returns whether the candidate was kept.
    pub fn insert(&mut self, mask: Vec<bool>, objective: f64) -> bool {
        let size = mask.iter().filter(|&&b| b).count();
        if self
            .entries
            .iter()
            .any(|e| e.objective <= objective && e.size <= size)
        {
            return false;
        }
        self.entries
            .retain(|e| !(objective <= e.objective && size <= e.size));
        self.entries.push(ParetoEntry {
            mask,
            objective,
            size,
        });
        true
    }

    /// Picks the final entry per the selection rule. Panics on an empty
    /// archive (callers always seed it with the full mask).
    pub fn select(&self, rule: SelectionRule) -> &ParetoEntry {
        assert!(!self.entries.is_empty(), "selecting from an empty archive");
        let best = self
            .entries
            .iter()
            .min_by(|a, b| a.rank_cmp(b))
            .expect("archive is non-empty");
        if rule == SelectionRule::MinObjective || self.entries.len() <= 2 {
            return best;
        }

        // Knee: normalize both axes over the front, draw the chord from the
        // smallest-size extreme to the best-objective extreme, and take the
        // entry farthest from it.
        let (mut f_lo, mut f_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut s_lo, mut s_hi) = (usize::MAX, 0usize);
        for e in &self.entries {
            f_lo = f_lo.min(e.objective);
            f_hi = f_hi.max(e.objective);
            s_lo = s_lo.min(e.size);
            s_hi = s_hi.max(e.size);
        }
        if f_hi <= f_lo || s_hi <= s_lo {
            return best; // degenerate front, no elbow to find
        }
        let norm = |e: &ParetoEntry| {
            (
                (e.objective - f_lo) / (f_hi - f_lo),
                (e.size - s_lo) as f64 / (s_hi - s_lo) as f64,
            )
        };
        let small = self
            .entries
            .iter()
            .min_by(|a, b| a.size.cmp(&b.size).then(a.rank_cmp(b)))
            .expect("archive is non-empty");
        let (ax, ay) = norm(small);
        let (bx, by) = norm(best);
        let chord = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
        if chord == 0.0 {
            return best;
        }
        self.entries
            .iter()
            .max_by(|p, q| {
                let dist = |e: &ParetoEntry| {
                    let (x, y) = norm(e);
                    ((bx - ax) * (ay - y) - (ax - x) * (by - ay)).abs() / chord
                };
                dist(p)
                    .total_cmp(&dist(q))
                    .then_with(|| q.rank_cmp(p)) // max_by: invert to prefer lower rank
            })
            .expect("archive is non-empty")
    }
}

/// Caches every learner's bounds over a dataset so that subset objectives
/// cost `O(selected * samples)` instead of a forward pass per query.
pub struct SubsetEvaluator {
    lowers: Vec<Vec<f64>>,
    uppers: Vec<Vec<f64>>,
    targets: Vec<f64>,
    loss: LossConfig,
    mode: ObjectiveMode,
}

impl SubsetEvaluator {
    /// Runs every learner in the pool (selection ignored) over `data`.
    pub fn new(
        pool: &EnsemblePool,
        data: &Dataset,
        loss: LossConfig,
        mode: ObjectiveMode,
    ) -> Result<Self> {
        loss.validate()?;
        let mut lowers = Vec::with_capacity(pool.learners().len());
        let mut uppers = Vec::with_capacity(pool.learners().len());
        for learner in pool.learners() {
            let b = learner.predict(data.features())?;
            lowers.push(b.lower);
            uppers.push(b.upper);
        }
        Ok(SubsetEvaluator {
            lowers,
            uppers,
            targets: data.targets().to_vec(),
            loss,
            mode,
        })
    }

    pub fn n_learners(&self) -> usize {
        self.lowers.len()
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    /// Combined objective: mean log-margin plus interval loss. The empty
    /// mask scores infinite (it is never a valid ensemble); a zero margin
    /// is an [`Error::Undefined`] since its log diverges.
    pub fn objective(&self, mask: &[bool]) -> Result<f64> {
        if mask.len() != self.n_learners() {
            return Err(Error::Shape(format!(
                "mask of {} for {} learners",
                mask.len(),
                self.n_learners()
            )));
        }
        let sel: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b)
            .map(|(i, _)| i)
            .collect();
        if sel.is_empty() {
            return Ok(f64::INFINITY);
        }
        let n = self.n_samples();

        // mean log of the per-sample mean width across selected learners
        let mut score = 0.0;
        for i in 0..n {
            let m: f64 = sel
                .iter()
                .map(|&t| (self.uppers[t][i] - self.lowers[t][i]).abs())
                .sum::<f64>()
                / sel.len() as f64;
            if m == 0.0 {
                return Err(Error::Undefined(format!(
                    "margin is zero at sample {i}, its log diverges"
                )));
            }
            score += m.ln();
        }
        score /= n as f64;

        let loss = match self.mode {
            ObjectiveMode::FusedVote => {
                let mut lower = Vec::with_capacity(n);
                let mut upper = Vec::with_capacity(n);
                let mut scratch = Vec::with_capacity(sel.len());
                for i in 0..n {
                    scratch.clear();
                    scratch.extend(sel.iter().map(|&t| self.lowers[t][i]));
                    lower.push(median_in_place(&mut scratch));
                    scratch.clear();
                    scratch.extend(sel.iter().map(|&t| self.uppers[t][i]));
                    upper.push(median_in_place(&mut scratch));
                }
                let batch = IntervalBatch::new(lower, upper, self.targets.clone())?;
                piloss::loss_mbpep(&batch, &self.loss)
            }
            ObjectiveMode::PerLearnerMean => {
                let mut acc = 0.0;
                for &t in &sel {
                    let batch = IntervalBatch::new(
                        self.lowers[t].clone(),
                        self.uppers[t].clone(),
                        self.targets.clone(),
                    )?;
                    acc += piloss::loss_mbpep(&batch, &self.loss);
                }
                acc / sel.len() as f64
            }
        };
        Ok(score + loss)
    }
}

/// Scores one subset of the pool on `data` using the pool's own loss
/// config. Convenience wrapper; for many queries build a
/// [`SubsetEvaluator`] once instead.
pub fn subset_objective(pool: &EnsemblePool, mask: &[bool], data: &Dataset) -> Result<f64> {
    SubsetEvaluator::new(pool, data, pool.config().loss, ObjectiveMode::default())?
        .objective(mask)
}

/// Prunes the pool in place: runs the archive search on `data` (typically
/// the validation split), stores the chosen mask in the pool's selection,
/// and returns the final front plus the chosen mask.
pub fn pareto_prune(
    pool: &mut EnsemblePool,
    data: &Dataset,
    cfg: &PruneConfig,
) -> Result<(ParetoArchive, Vec<bool>)> {
    cfg.validate()?;
    let t = pool.learners().len();
    let iterations = cfg.resolved_iterations(t);
    let flip = cfg.resolved_flip_probability(t);
    let evaluator = SubsetEvaluator::new(pool, data, pool.config().loss, cfg.objective)?;

    let mut archive = ParetoArchive::new();
    let full = vec![true; t];
    let f_full = evaluator.objective(&full)?;
    archive.insert(full, f_full);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..iterations {
        let parent = rng.random_range(0..archive.len());
        let mut child = archive.entries()[parent].mask.clone();
        for bit in child.iter_mut() {
            if rng.random::<f64>() < flip {
                *bit = !*bit;
            }
        }
        if child.iter().all(|&b| !b) {
            continue; // the empty mask never enters the archive
        }
        let f = evaluator.objective(&child)?;
        archive.insert(child, f);
    }

    let chosen = archive.select(cfg.selection).mask.clone();
    pool.set_selection(chosen.clone())?;
    Ok((archive, chosen))
}

//! Report documents written by the `mbpep` binary.
//!
//! Every report is a single JSON document tagged `mbpep-report/1`, with a
//! `kind` naming the command that produced it. Serialization is
//! deterministic: fixed field order, no maps keyed by hash order, floats in
//! shortest round-trip form.
//!
//! Train and eval reports carry **no wall-clock measurements** — rerunning
//! the same command with the same seed produces byte-identical files, which
//! makes reports diffable artifacts. Timing is printed to stdout instead.
//! Bench reports are the exception: comparing costs is their purpose, so
//! they carry timing aggregates (and are not byte-reproducible).

use mbpep::ensemble::ParetoEntry;
use mbpep::piloss::LossReport;
use serde::Serialize;

use crate::config::RunConfig;

pub const REPORT_FORMAT: &str = "mbpep-report/1";

/// Shape of the dataset a command ran on. Paths are deliberately omitted:
/// two runs over copies of the same data produce identical reports.
#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub n_rows: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

/// Row counts after the three-way split.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitSizes {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// Metrics for one scored ensemble, in both unit systems. `normalized` is
/// the scale training saw; `original` maps the voted bounds back through
/// the fitted target normalization.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsSection {
    pub normalized: LossReport,
    pub original: LossReport,
}

/// Which learners survived pruning.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSection {
    pub pool_size: usize,
    pub ensemble_size: usize,
    pub selected: Vec<usize>,
}

/// One learner that failed to train (the pool keeps the survivors).
#[derive(Debug, Clone, Serialize)]
pub struct FailureNote {
    pub learner: usize,
    pub error: String,
}

/// What the subset search saw and chose.
#[derive(Debug, Clone, Serialize)]
pub struct PruneSection {
    pub iterations: u64,
    pub flip_probability: f64,
    /// Final non-dominated front, sorted by ascending objective.
    pub front: Vec<ParetoEntry>,
    pub chosen_mask: Vec<bool>,
    pub chosen_objective: f64,
}

#[derive(Debug, Serialize)]
pub struct TrainReport<'a> {
    pub format: &'static str,
    pub kind: &'static str,
    pub config: &'a RunConfig,
    pub data: DataSummary,
    pub split: SplitSizes,
    pub learner_seeds: Vec<u64>,
    pub failures: Vec<FailureNote>,
    pub pruning: Option<PruneSection>,
    pub ensemble: EnsembleSection,
    /// Test-split metrics.
    pub metrics: MetricsSection,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub format: &'static str,
    pub kind: &'static str,
    pub model_format: &'static str,
    pub data: DataSummary,
    pub ensemble: EnsembleSection,
    pub metrics: MetricsSection,
}

/// `mean ± standard error` of one metric over repeated runs. The standard
/// error uses the sample standard deviation (n - 1 denominator) over
/// sqrt(n) and is `null` for a single run, where no spread exists.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: Option<f64>,
}

impl Stat {
    pub fn from_samples(samples: &[f64]) -> Stat {
        assert!(!samples.is_empty(), "a stat needs at least one sample");
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let stderr = if samples.len() < 2 {
            None
        } else {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Some((var / n).sqrt())
        };
        Stat { mean, stderr }
    }

    /// `0.9933±0.0012`-style rendering for stdout; `NA` when no spread is
    /// defined.
    pub fn display(&self, precision: usize) -> String {
        match self.stderr {
            Some(se) => format!("{:.p$}\u{b1}{:.p$}", self.mean, se, p = precision),
            None => format!("{:.p$}\u{b1}NA", self.mean, p = precision),
        }
    }
}

/// One arm (pruned or unpruned) of one bench run.
#[derive(Debug, Clone, Serialize)]
pub struct ArmRecord {
    pub ensemble_size: usize,
    pub predict_seconds: f64,
    pub metrics: MetricsSection,
}

/// One (pool size, repeat) cell of the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRun {
    pub pool_size: usize,
    pub repeat: usize,
    pub seed: u64,
    pub train_seconds: f64,
    pub prune_seconds: Option<f64>,
    pub unpruned: ArmRecord,
    pub pruned: Option<ArmRecord>,
}

/// Aggregates over the repeats of one (pool size, arm) pair, computed on
/// normalized-unit metrics.
#[derive(Debug, Clone, Serialize)]
pub struct BenchAggregate {
    pub pool_size: usize,
    pub arm: &'static str,
    pub n_runs: usize,
    pub picp: Stat,
    pub mpiw_all: Stat,
    pub loss_mbpep: Stat,
    pub ensemble_size: Stat,
    pub predict_seconds: Stat,
}

#[derive(Debug, Serialize)]
pub struct BenchReport<'a> {
    pub format: &'static str,
    pub kind: &'static str,
    pub config: &'a RunConfig,
    pub runs: Vec<BenchRun>,
    pub aggregates: Vec<BenchAggregate>,
}

/// Renders any report as its on-disk JSON: pretty-printed, trailing
/// newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports always serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_mean_and_stderr_by_hand() {
        // samples 1, 2, 3: mean 2, sample std 1, stderr 1/sqrt(3)
        let s = Stat::from_samples(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        let se = s.stderr.unwrap();
        assert!((se - 1.0 / 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stat_single_sample_has_no_stderr() {
        let s = Stat::from_samples(&[5.0]);
        assert_eq!(s.mean, 5.0);
        assert!(s.stderr.is_none());
        assert_eq!(s.display(2), "5.00\u{b1}NA");
    }

    #[test]
    fn stat_display_renders_plus_minus() {
        let s = Stat::from_samples(&[0.9, 1.1]);
        assert_eq!(s.display(3), "1.000\u{b1}0.100");
    }

    #[test]
    fn stat_zero_spread_gives_zero_stderr() {
        let s = Stat::from_samples(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(s.stderr, Some(0.0));
    }

    #[test]
    fn report_json_is_tagged_and_stable() {
        let agg = BenchAggregate {
            pool_size: 5,
            arm: "pruned",
            n_runs: 2,
            picp: Stat::from_samples(&[0.9, 1.0]),
            mpiw_all: Stat::from_samples(&[0.5, 0.5]),
            loss_mbpep: Stat::from_samples(&[0.4, 0.6]),
            ensemble_size: Stat::from_samples(&[1.0, 2.0]),
            predict_seconds: Stat::from_samples(&[0.1]),
        };
        let a = serde_json::to_string(&agg).unwrap();
        let b = serde_json::to_string(&agg).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"arm\":\"pruned\""));
        // a single-sample stat serializes its stderr as null
        assert!(a.contains("\"stderr\":null"));
    }
}

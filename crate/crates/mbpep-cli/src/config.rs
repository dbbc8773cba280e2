//! Run configuration: defaults, a small `key = value` document format, and
//! command-line overrides layered on top.
//!
//! A config document is plain text: one `key = value` per line, `#` starts
//! a comment, blank lines are ignored. Parsing is strict — unknown keys,
//! duplicate keys, malformed values, and semantically invalid settings are
//! all collected and reported together, so one run surfaces every problem.

use std::path::PathBuf;

use mbpep::data::{SplitSpec, TargetColumn};
use mbpep::ensemble::{ObjectiveMode, PruneConfig, SelectionRule, TrainConfig};
use mbpep::nnet::{Activation, BoundMode, OptimizerKind};
use serde::Serialize;

/// Where a run's dataset comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// A CSV file on disk (`data.path`).
    Csv,
    /// Synthetic `y = x^3 + Normal(0, noise_std)`.
    Cubic,
    /// Synthetic `y = e^x + Exp(rate)`, one-sided noise.
    Exp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataConfig {
    pub source: SourceKind,
    pub path: Option<PathBuf>,
    /// Header name of the target column; the rightmost column when absent.
    pub target: Option<String>,
    /// Sample count for synthetic sources.
    pub n: usize,
    pub noise_std: f64,
    pub rate: f64,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: SourceKind::Cubic,
            path: None,
            target: None,
            n: 1000,
            noise_std: 3.0,
            rate: 1.0,
            x_min: None,
            x_max: None,
        }
    }
}

impl DataConfig {
    /// Input range for the synthetic generators; each source has its own
    /// natural default, overridable via `data.x_min` / `data.x_max`.
    pub fn x_range(&self) -> (f64, f64) {
        let (lo, hi) = match self.source {
            SourceKind::Cubic => (-4.0, 4.0),
            SourceKind::Exp => (0.0, 3.0),
            SourceKind::Csv => (0.0, 1.0), // unused
        };
        (self.x_min.unwrap_or(lo), self.x_max.unwrap_or(hi))
    }
}

/// Three-way split proportions; the shuffle seed is derived from the run
/// seed at execution time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitConfig {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train: 0.5,
            valid: 0.2,
            test: 0.3,
        }
    }
}

/// Pruning behavior; `None` fields fall back to the search's own
/// pool-size-dependent defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneSettings {
    pub enabled: bool,
    pub max_iterations: Option<u64>,
    pub flip_probability: Option<f64>,
    pub objective: ObjectiveMode,
    pub selection: SelectionRule,
}

impl Default for PruneSettings {
    fn default() -> Self {
        PruneSettings {
            enabled: true,
            max_iterations: None,
            flip_probability: None,
            objective: ObjectiveMode::default(),
            selection: SelectionRule::default(),
        }
    }
}

/// Benchmark sweep shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub pool_sizes: Vec<usize>,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            pool_sizes: vec![5, 10, 20, 30],
            repeats: 5,
        }
    }
}

/// Everything a run needs. Serializes into reports so a result file records
/// the exact settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    /// When false, only features are normalized and targets keep their
    /// original units end to end.
    pub normalize_targets: bool,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub prune: PruneSettings,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            threads: 1,
            normalize_targets: true,
            data: DataConfig::default(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            prune: PruneSettings::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train,
            valid_fraction: self.split.valid,
            test_fraction: self.split.test,
            seed,
        }
    }

    pub fn prune_config(&self, seed: u64) -> PruneConfig {
        PruneConfig {
            max_iterations: self.prune.max_iterations,
            flip_probability: self.prune.flip_probability,
            seed,
            selection: self.prune.selection,
            objective: self.prune.objective,
        }
    }

    pub fn target_column(&self) -> TargetColumn {
        match &self.data.target {
            Some(name) => TargetColumn::Named(name.clone()),
            None => TargetColumn::Last,
        }
    }

    /// Semantic checks, all collected. Field-level parse errors are caught
    /// earlier; this layer catches settings that are individually parseable
    /// but jointly or numerically wrong.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.threads == 0 {
            errors.push("threads: must be >= 1".into());
        }
        match self.data.source {
            SourceKind::Csv => {
                if self.data.path.is_none() {
                    errors.push("data.path: required when data.source = csv".into());
                }
            }
            SourceKind::Cubic | SourceKind::Exp => {
                if self.data.n == 0 {
                    errors.push("data.n: must be >= 1".into());
                }
                let (lo, hi) = self.data.x_range();
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    errors.push(format!(
                        "data.x_min/data.x_max: ({lo}, {hi}) is not a proper interval"
                    ));
                }
                if self.data.source == SourceKind::Cubic
                    && !(self.data.noise_std.is_finite() && self.data.noise_std >= 0.0)
                {
                    errors.push(format!(
                        "data.noise_std: must be finite and >= 0, got {}",
                        self.data.noise_std
                    ));
                }
                if self.data.source == SourceKind::Exp
                    && !(self.data.rate.is_finite() && self.data.rate > 0.0)
                {
                    errors.push(format!(
                        "data.rate: must be finite and > 0, got {}",
                        self.data.rate
                    ));
                }
            }
        }
        if let Err(e) = self.split_spec(0).validate() {
            errors.push(format!("split: {e}"));
        }
        if let Err(e) = self.train.validate() {
            errors.push(format!("train: {e}"));
        }
        if let Err(e) = self.prune_config(0).validate() {
            errors.push(format!("prune: {e}"));
        }
        if self.bench.repeats == 0 {
            errors.push("bench.repeats: must be >= 1".into());
        }
        if self.bench.pool_sizes.is_empty() {
            errors.push("bench.pool_sizes: must name at least one size".into());
        }
        if self.bench.pool_sizes.iter().any(|&s| s == 0) {
            errors.push("bench.pool_sizes: sizes must be >= 1".into());
        }
        errors
    }
}

/// Optimizer keys are order-independent: they accumulate here during the
/// line scan and are assembled once the whole document is read, so
/// `train.adam_beta1` works whether it appears before or after
/// `train.optimizer`.
#[derive(Default)]
struct OptimizerStage {
    kind: Option<&'static str>,
    learning_rate: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    epsilon: Option<f64>,
}

impl OptimizerStage {
    fn assemble(self, cfg: &mut RunConfig, errors: &mut Vec<String>) {
        let spec = &mut cfg.train.optimizer;
        if let Some(kind) = self.kind {
            spec.kind = match kind {
                "sgd" => OptimizerKind::Sgd,
                _ => OptimizerKind::adam_defaults(),
            };
        }
        if let Some(lr) = self.learning_rate {
            spec.learning_rate = lr;
        }
        let adam_overrides = [
            ("train.adam_beta1", self.beta1),
            ("train.adam_beta2", self.beta2),
            ("train.adam_epsilon", self.epsilon),
        ];
        match &mut spec.kind {
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                if let Some(v) = self.beta1 {
                    *beta1 = v;
                }
                if let Some(v) = self.beta2 {
                    *beta2 = v;
                }
                if let Some(v) = self.epsilon {
                    *epsilon = v;
                }
            }
            OptimizerKind::Sgd => {
                for (key, value) in adam_overrides {
                    if value.is_some() {
                        errors.push(format!("{key}: set but train.optimizer is sgd"));
                    }
                }
            }
        }
    }
}

/// Parses a config document against the defaults. Returns either the
/// resolved config or every problem found, one message per line-level or
/// semantic error.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<String>> {
    let mut cfg = RunConfig::default();
    let mut stage = OptimizerStage::default();
    let mut errors = Vec::new();
    let mut seen = std::collections::BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {lineno}: expected `key = value`"));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            errors.push(format!("line {lineno}: empty key"));
            continue;
        }
        if !seen.insert(key.to_string()) {
            errors.push(format!("line {lineno}: duplicate key {key:?}"));
            continue;
        }
        if let Err(msg) = apply_key(&mut cfg, &mut stage, key, value) {
            errors.push(format!("line {lineno}: {msg}"));
        }
    }

    stage.assemble(&mut cfg, &mut errors);
    errors.extend(cfg.validate());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

fn apply_key(
    cfg: &mut RunConfig,
    stage: &mut OptimizerStage,
    key: &str,
    value: &str,
) -> Result<(), String> {
    match key {
        "seed" => cfg.seed = num(key, value)?,
        "threads" => cfg.threads = num(key, value)?,
        "normalize_targets" => cfg.normalize_targets = boolean(key, value)?,

        "data.source" => {
            cfg.data.source = match value {
                "csv" => SourceKind::Csv,
                "cubic" => SourceKind::Cubic,
                "exp" => SourceKind::Exp,
                other => return Err(unknown_variant(key, other, "csv, cubic, exp")),
            }
        }
        "data.path" => cfg.data.path = Some(nonempty(key, value)?.into()),
        "data.target" => cfg.data.target = Some(nonempty(key, value)?.to_string()),
        "data.n" => cfg.data.n = num(key, value)?,
        "data.noise_std" => cfg.data.noise_std = num(key, value)?,
        "data.rate" => cfg.data.rate = num(key, value)?,
        "data.x_min" => cfg.data.x_min = Some(num(key, value)?),
        "data.x_max" => cfg.data.x_max = Some(num(key, value)?),

        "split.train" => cfg.split.train = num(key, value)?,
        "split.valid" => cfg.split.valid = num(key, value)?,
        "split.test" => cfg.split.test = num(key, value)?,

        "train.pool_size" => cfg.train.pool_size = num(key, value)?,
        "train.epochs" => cfg.train.epochs = num(key, value)?,
        "train.batch_size" => cfg.train.batch_size = num(key, value)?,
        "train.hidden" => cfg.train.hidden_dims = num_list(key, value)?,
        "train.activation" => {
            cfg.train.activation = match value {
                "auto" => None,
                "sigmoid" => Some(Activation::Sigmoid),
                "relu" => Some(Activation::Relu),
                other => return Err(unknown_variant(key, other, "auto, sigmoid, relu")),
            }
        }
        "train.bound_mode" => {
            cfg.train.bound_mode = match value {
                "softplus" => BoundMode::Softplus,
                "raw" => BoundMode::Raw,
                other => return Err(unknown_variant(key, other, "softplus, raw")),
            }
        }
        "train.dropout_retention" => cfg.train.dropout_retention = num(key, value)?,
        "train.optimizer" => {
            stage.kind = Some(match value {
                "adam" => "adam",
                "sgd" => "sgd",
                other => return Err(unknown_variant(key, other, "adam, sgd")),
            })
        }
        "train.learning_rate" => stage.learning_rate = Some(num(key, value)?),
        "train.adam_beta1" => stage.beta1 = Some(num(key, value)?),
        "train.adam_beta2" => stage.beta2 = Some(num(key, value)?),
        "train.adam_epsilon" => stage.epsilon = Some(num(key, value)?),

        "loss.confidence" => cfg.train.loss.confidence = num(key, value)?,
        "loss.penalty_c" => cfg.train.loss.penalty_c = num(key, value)?,
        "loss.softness" => cfg.train.loss.softness = num(key, value)?,

        "prune.enabled" => cfg.prune.enabled = boolean(key, value)?,
        "prune.max_iterations" => cfg.prune.max_iterations = Some(num(key, value)?),
        "prune.flip_probability" => cfg.prune.flip_probability = Some(num(key, value)?),
        "prune.objective" => {
            cfg.prune.objective = match value {
                "fused_vote" => ObjectiveMode::FusedVote,
                "per_learner_mean" => ObjectiveMode::PerLearnerMean,
                other => {
                    return Err(unknown_variant(key, other, "fused_vote, per_learner_mean"))
                }
            }
        }
        "prune.selection" => {
            cfg.prune.selection = match value {
                "min_objective" => SelectionRule::MinObjective,
                "knee" => SelectionRule::Knee,
                other => return Err(unknown_variant(key, other, "min_objective, knee")),
            }
        }

        "bench.pool_sizes" => cfg.bench.pool_sizes = num_list(key, value)?,
        "bench.repeats" => cfg.bench.repeats = num(key, value)?,

        other => return Err(format!("unknown key {other:?}")),
    }
    Ok(())
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?} as a number"))
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("{key}: expected true or false, got {other:?}")),
    }
}

fn nonempty<'v>(key: &str, value: &'v str) -> Result<&'v str, String> {
    if value.is_empty() {
        Err(format!("{key}: value is empty"))
    } else {
        Ok(value)
    }
}

fn num_list(key: &str, value: &str) -> Result<Vec<usize>, String> {
    let items: Vec<usize> = value
        .split(',')
        .map(|s| num(key, s.trim()))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(format!("{key}: list is empty"));
    }
    Ok(items)
}

fn unknown_variant(key: &str, got: &str, expected: &str) -> String {
    format!("{key}: unknown value {got:?} (expected one of: {expected})")
}

/// Values the command line can override. `None`/`false` leaves the config
/// untouched.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub data: Option<PathBuf>,
    pub target: Option<String>,
    pub confidence: Option<f64>,
    pub penalty_c: Option<f64>,
    pub softness: Option<f64>,
    pub pool_size: Option<usize>,
    pub epochs: Option<usize>,
    pub raw_bounds: bool,
    pub no_prune: bool,
    pub pool_sizes: Option<Vec<usize>>,
    pub repeats: Option<usize>,
}

/// Layers flag values over a parsed config. Callers re-validate afterwards:
/// flags can introduce the same semantic errors a document can.
pub fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) {
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = o.threads {
        cfg.threads = threads;
    }
    if let Some(path) = &o.data {
        cfg.data.source = SourceKind::Csv;
        cfg.data.path = Some(path.clone());
    }
    if let Some(target) = &o.target {
        cfg.data.target = Some(target.clone());
    }
    if let Some(v) = o.confidence {
        cfg.train.loss.confidence = v;
    }
    if let Some(v) = o.penalty_c {
        cfg.train.loss.penalty_c = v;
    }
    if let Some(v) = o.softness {
        cfg.train.loss.softness = v;
    }
    if let Some(v) = o.pool_size {
        cfg.train.pool_size = v;
    }
    if let Some(v) = o.epochs {
        cfg.train.epochs = v;
    }
    if o.raw_bounds {
        cfg.train.bound_mode = BoundMode::Raw;
    }
    if o.no_prune {
        cfg.prune.enabled = false;
    }
    if let Some(sizes) = &o.pool_sizes {
        cfg.bench.pool_sizes = sizes.clone();
    }
    if let Some(v) = o.repeats {
        cfg.bench.repeats = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let cfg = parse_config("# only a comment\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn document_overrides_defaults() {
        let text = "\
# quality run
seed = 7
train.pool_size = 12
train.hidden = 64, 32
train.activation = relu
loss.softness = 25
prune.selection = knee
data.source = exp
data.n = 500
bench.pool_sizes = 10,20
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.pool_size, 12);
        assert_eq!(cfg.train.hidden_dims, vec![64, 32]);
        assert_eq!(cfg.train.activation, Some(Activation::Relu));
        assert_eq!(cfg.train.loss.softness, 25.0);
        assert_eq!(cfg.prune.selection, SelectionRule::Knee);
        assert_eq!(cfg.data.source, SourceKind::Exp);
        assert_eq!(cfg.data.x_range(), (0.0, 3.0));
        assert_eq!(cfg.bench.pool_sizes, vec![10, 20]);
    }

    #[test]
    fn all_errors_are_reported_at_once() {
        let text = "\
seed = not_a_number
no_such_key = 1
threads = 0
split.train = 0.9
";
        let errors = parse_config(text).unwrap_err();
        let joined = errors.join("\n");
        assert!(joined.contains("line 1"), "{joined}");
        assert!(joined.contains("unknown key"), "{joined}");
        assert!(joined.contains("threads"), "{joined}");
        assert!(joined.contains("split"), "{joined}");
        assert!(errors.len() >= 4, "{joined}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let errors = parse_config("seed = 1\nseed = 2\n").unwrap_err();
        assert!(errors[0].contains("duplicate key"), "{errors:?}");
    }

    #[test]
    fn lines_without_equals_are_rejected() {
        let errors = parse_config("just some words\n").unwrap_err();
        assert!(errors[0].contains("expected `key = value`"), "{errors:?}");
    }

    #[test]
    fn optimizer_keys_are_order_independent() {
        let a = parse_config("train.adam_beta1 = 0.8\ntrain.optimizer = adam\n").unwrap();
        let b = parse_config("train.optimizer = adam\ntrain.adam_beta1 = 0.8\n").unwrap();
        assert_eq!(a.train.optimizer, b.train.optimizer);
        match a.train.optimizer.kind {
            OptimizerKind::Adam { beta1, .. } => assert_eq!(beta1, 0.8),
            other => panic!("expected adam, got {other:?}"),
        }
    }

    #[test]
    fn adam_keys_with_sgd_are_rejected() {
        let errors =
            parse_config("train.optimizer = sgd\ntrain.adam_beta1 = 0.8\n").unwrap_err();
        assert!(errors[0].contains("sgd"), "{errors:?}");
        // plain sgd with a learning rate is fine
        let cfg = parse_config("train.optimizer = sgd\ntrain.learning_rate = 0.5\n").unwrap();
        assert_eq!(cfg.train.optimizer.kind, OptimizerKind::Sgd);
        assert_eq!(cfg.train.optimizer.learning_rate, 0.5);
    }

    #[test]
    fn csv_source_requires_a_path() {
        let errors = parse_config("data.source = csv\n").unwrap_err();
        assert!(errors[0].contains("data.path"), "{errors:?}");
    }

    #[test]
    fn semantic_errors_surface_through_library_checks() {
        let errors = parse_config("loss.confidence = 1.5\n").unwrap_err();
        assert!(errors[0].starts_with("train:"), "{errors:?}");
        let errors = parse_config("prune.flip_probability = 2\n").unwrap_err();
        assert!(errors[0].starts_with("prune:"), "{errors:?}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = parse_config("seed = 1\ntrain.pool_size = 9\n").unwrap();
        apply_overrides(
            &mut cfg,
            &Overrides {
                seed: Some(2),
                pool_size: Some(3),
                raw_bounds: true,
                no_prune: true,
                data: Some("d.csv".into()),
                ..Overrides::default()
            },
        );
        assert_eq!(cfg.seed, 2);
        assert_eq!(cfg.train.pool_size, 3);
        assert_eq!(cfg.train.bound_mode, BoundMode::Raw);
        assert!(!cfg.prune.enabled);
        assert_eq!(cfg.data.source, SourceKind::Csv);
        assert_eq!(cfg.data.path, Some("d.csv".into()));
    }

    #[test]
    fn parser_never_panics_on_odd_input() {
        for text in [
            "=",
            "= value",
            "key =",
            "a=b=c",
            "data.path =   ",
            "train.hidden = ,",
            "train.hidden = 1,,2",
            "bench.pool_sizes = -1",
            "seed = 99999999999999999999999999",
            "\u{0}\u{1}\u{2}",
            "seed = \u{fffd}",
        ] {
            let _ = parse_config(text);
        }
    }
}

//! Command implementations behind the `mbpep` binary.
//!
//! Every command returns a [`CmdError`] carrying the process exit code:
//! `2` for configuration/usage problems, `3` for unreadable or invalid
//! input files, `4` for runtime failures. `0` is success.
//!
//! Seeding is hierarchical. Each run owes everything to one base seed:
//! dataset generation, the split shuffle, the prune search, and the
//! per-learner seeds all come from separate derived streams, and learner
//! `i`'s seed does not depend on the pool size, so growing the pool only
//! appends learners.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mbpep::data::{self, Dataset, Normalization, TargetColumn};
use mbpep::ensemble::{
    median_vote, pareto_prune, train_pool, EnsemblePool, SavedModel, TrainConfig, MODEL_FORMAT,
};
use mbpep::piloss::{self, IntervalBatch, LossConfig};
use mbpep::seeds;
use serde::Serialize;

use crate::config::{apply_overrides, parse_config, Overrides, RunConfig, SourceKind};
use crate::report::{
    to_json, ArmRecord, BenchAggregate, BenchReport, BenchRun, DataSummary, EnsembleSection,
    EvalReport, FailureNote, MetricsSection, PruneSection, SplitSizes, Stat, TrainReport,
    REPORT_FORMAT,
};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

/// A command failure plus the exit code it maps to.
#[derive(Debug)]
pub struct CmdError {
    pub exit_code: i32,
    pub message: String,
}

impl CmdError {
    pub fn config(message: impl Into<String>) -> CmdError {
        CmdError {
            exit_code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> CmdError {
        CmdError {
            exit_code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> CmdError {
        CmdError {
            exit_code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

pub type CmdResult<T> = Result<T, CmdError>;

/// Run-level seed streams; per-learner streams are carved out inside the
/// library from each learner's own seed.
const STREAM_DATA: u64 = 0;
const STREAM_SPLIT: u64 = 1;
const STREAM_PRUNE: u64 = 2;
const STREAM_POOL: u64 = 3;

/// Learner seeds for one run. Derived under a pool root of their own, so
/// they can never collide with the run-level streams, and learner `i` gets
/// the same seed regardless of pool size.
fn learner_seeds(run_seed: u64, pool_size: usize) -> Vec<u64> {
    let root = seeds::derive(run_seed, STREAM_POOL);
    (0..pool_size)
        .map(|i| seeds::derive(root, i as u64))
        .collect()
}

/// Reads a config document if given, layers flag overrides on top, and
/// validates the result. All problems exit with code 2.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> CmdResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CmdError::config(format!("config {}: {e}", p.display())))?;
            parse_config(&text).map_err(|errors| CmdError::config(errors.join("\n")))?
        }
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, overrides);
    let errors = cfg.validate();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(CmdError::config(errors.join("\n")))
    }
}

/// Loads or generates the dataset for one run.
fn load_dataset(cfg: &RunConfig, run_seed: u64) -> CmdResult<Dataset> {
    match cfg.data.source {
        SourceKind::Csv => {
            let path = cfg
                .data
                .path
                .as_ref()
                .expect("validated: csv source carries a path");
            data::load_csv(path, &cfg.target_column())
                .map_err(|e| CmdError::data(format!("{}: {e}", path.display())))
        }
        SourceKind::Cubic => data::gen_cubic(
            cfg.data.n,
            cfg.data.noise_std,
            cfg.data.x_range(),
            seeds::derive(run_seed, STREAM_DATA),
        )
        .map_err(|e| CmdError::config(e.to_string())),
        SourceKind::Exp => data::gen_exp(
            cfg.data.n,
            cfg.data.rate,
            cfg.data.x_range(),
            seeds::derive(run_seed, STREAM_DATA),
        )
        .map_err(|e| CmdError::config(e.to_string())),
    }
}

/// Splits and normalized views of one run's dataset. Normalization stats
/// are fitted on the training split only.
struct Prepared {
    train: Dataset,
    valid: Dataset,
    test: Dataset,
    /// Test split in original units, for `--test-out`.
    test_raw: Dataset,
    norm: Normalization,
}

fn prepare(dataset: &Dataset, cfg: &RunConfig, run_seed: u64) -> CmdResult<Prepared> {
    let spec = cfg.split_spec(seeds::derive(run_seed, STREAM_SPLIT));
    let (train_raw, valid_raw, test_raw) = dataset
        .split(&spec)
        .map_err(|e| CmdError::data(e.to_string()))?;
    if test_raw.n_rows() == 0 {
        return Err(CmdError::config(
            "test split is empty; raise split.test",
        ));
    }
    if cfg.prune.enabled && valid_raw.n_rows() == 0 {
        return Err(CmdError::config(
            "pruning needs a validation split; raise split.valid or pass --no-prune",
        ));
    }
    let mut norm =
        Normalization::fit(&train_raw).map_err(|e| CmdError::data(e.to_string()))?;
    if !cfg.normalize_targets {
        norm.target = Normalization::identity_target();
    }
    let apply = |d: &Dataset| -> CmdResult<Dataset> {
        d.apply_normalization(&norm)
            .map_err(|e| CmdError::runtime(e.to_string()))
    };
    Ok(Prepared {
        train: apply(&train_raw)?,
        valid: apply(&valid_raw)?,
        test: apply(&test_raw)?,
        test_raw,
        norm,
    })
}

/// Median-vote metrics for the pool's current selection, in both unit
/// systems, plus the prediction wall time.
struct Scored {
    metrics: MetricsSection,
    predict_seconds: f64,
    /// Fused bounds in original target units, row-aligned with the data.
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn score_pool(
    pool: &EnsemblePool,
    test: &Dataset,
    target_norm: (f64, f64),
    loss: &LossConfig,
) -> CmdResult<Scored> {
    let started = Instant::now();
    let bounds =
        median_vote(pool, test.features()).map_err(|e| CmdError::runtime(e.to_string()))?;
    let predict_seconds = started.elapsed().as_secs_f64();
    let batch = IntervalBatch::new(bounds.lower, bounds.upper, test.targets().to_vec())
        .map_err(|e| CmdError::runtime(e.to_string()))?;
    let original = data::denormalize_bounds(&batch, target_norm)
        .map_err(|e| CmdError::runtime(e.to_string()))?;
    let metrics = MetricsSection {
        normalized: piloss::loss_report(&batch, loss),
        original: piloss::loss_report(&original, loss),
    };
    Ok(Scored {
        metrics,
        predict_seconds,
        lower: original.lower().to_vec(),
        upper: original.upper().to_vec(),
    })
}

fn summarize(d: &Dataset) -> DataSummary {
    DataSummary {
        n_rows: d.n_rows(),
        n_features: d.n_features(),
        feature_names: d.feature_names().to_vec(),
        target_name: d.target_name().to_string(),
    }
}

pub struct GenDataParams {
    pub kind: SourceKind,
    pub n: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub rate: f64,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub out: PathBuf,
}

pub fn cmd_gen_data(p: &GenDataParams) -> CmdResult<()> {
    let (lo, hi) = match p.kind {
        SourceKind::Cubic => (-4.0, 4.0),
        SourceKind::Exp => (0.0, 3.0),
        SourceKind::Csv => {
            return Err(CmdError::config(
                "gen-data produces synthetic sources only",
            ))
        }
    };
    let range = (p.x_min.unwrap_or(lo), p.x_max.unwrap_or(hi));
    let dataset = match p.kind {
        SourceKind::Cubic => data::gen_cubic(p.n, p.noise_std, range, p.seed),
        SourceKind::Exp => data::gen_exp(p.n, p.rate, range, p.seed),
        SourceKind::Csv => unreachable!("rejected above"),
    }
    .map_err(|e| CmdError::config(e.to_string()))?;
    dataset
        .save_csv(&p.out)
        .map_err(|e| CmdError::runtime(format!("writing {}: {e}", p.out.display())))?;
    println!("wrote {} rows to {}", dataset.n_rows(), p.out.display());
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, out_dir: &Path, test_out: Option<&Path>) -> CmdResult<()> {
    let dataset = load_dataset(cfg, cfg.seed)?;
    println!(
        "dataset: {} rows, {} features",
        dataset.n_rows(),
        dataset.n_features()
    );
    let prep = prepare(&dataset, cfg, cfg.seed)?;
    println!(
        "split: train {}, valid {}, test {}",
        prep.train.n_rows(),
        prep.valid.n_rows(),
        prep.test.n_rows()
    );

    let all_seeds = learner_seeds(cfg.seed, cfg.train.pool_size);
    let started = Instant::now();
    let outcome =
        train_pool(&prep.train, &cfg.train, &all_seeds, cfg.threads).map_err(|e| match e {
            mbpep::Error::InvalidArgument(_) => CmdError::config(e.to_string()),
            other => CmdError::runtime(other.to_string()),
        })?;
    let train_seconds = started.elapsed().as_secs_f64();
    let mut pool = outcome.pool;
    let failures = outcome.failures;
    for f in &failures {
        eprintln!("warning: learner {} abandoned: {}", f.learner, f.error);
    }
    println!(
        "trained {} of {} learners in {train_seconds:.2}s",
        pool.learners().len(),
        cfg.train.pool_size
    );

    let pruning = if cfg.prune.enabled {
        let pcfg = cfg.prune_config(seeds::derive(cfg.seed, STREAM_PRUNE));
        let pool_len = pool.learners().len();
        let started = Instant::now();
        let (archive, chosen) = pareto_prune(&mut pool, &prep.valid, &pcfg)
            .map_err(|e| CmdError::runtime(e.to_string()))?;
        let prune_seconds = started.elapsed().as_secs_f64();
        println!(
            "pruned to {} of {pool_len} learners in {prune_seconds:.2}s",
            pool.n_selected()
        );
        let chosen_objective = archive
            .entries()
            .iter()
            .find(|e| e.mask == chosen)
            .expect("the chosen mask is an archive entry")
            .objective;
        let mut front = archive.entries().to_vec();
        front.sort_by(|a, b| a.objective.total_cmp(&b.objective).then(a.size.cmp(&b.size)));
        Some(PruneSection {
            iterations: pcfg.resolved_iterations(pool_len),
            flip_probability: pcfg.resolved_flip_probability(pool_len),
            front,
            chosen_mask: chosen,
            chosen_objective,
        })
    } else {
        None
    };

    let scored = score_pool(&pool, &prep.test, prep.norm.target, &cfg.train.loss)?;
    println!(
        "test: picp {:.4}, mpiw {:.4} (normalized units), prediction {:.4}s",
        scored.metrics.normalized.picp_hard,
        scored.metrics.normalized.mpiw_all,
        scored.predict_seconds
    );

    // seeds of the learners that made it into the pool, aligned with it
    let failed: BTreeSet<usize> = failures.iter().map(|f| f.learner).collect();
    let surviving_seeds: Vec<u64> = all_seeds
        .iter()
        .enumerate()
        .filter(|(i, _)| !failed.contains(i))
        .map(|(_, &s)| s)
        .collect();

    fs::create_dir_all(out_dir)
        .map_err(|e| CmdError::runtime(format!("creating {}: {e}", out_dir.display())))?;
    let ensemble = EnsembleSection {
        pool_size: pool.learners().len(),
        ensemble_size: pool.n_selected(),
        selected: pool.selected_indices(),
    };
    let model = SavedModel {
        pool,
        normalization: prep.norm.clone(),
        learner_seeds: surviving_seeds,
        feature_names: dataset.feature_names().to_vec(),
        target_name: dataset.target_name().to_string(),
    };
    let model_path = out_dir.join("model.json");
    model
        .save(&model_path)
        .map_err(|e| CmdError::runtime(format!("writing {}: {e}", model_path.display())))?;

    let report = TrainReport {
        format: REPORT_FORMAT,
        kind: "train",
        config: cfg,
        data: summarize(&dataset),
        split: SplitSizes {
            train: prep.train.n_rows(),
            valid: prep.valid.n_rows(),
            test: prep.test.n_rows(),
        },
        learner_seeds: all_seeds,
        failures: failures
            .iter()
            .map(|f| FailureNote {
                learner: f.learner,
                error: f.error.to_string(),
            })
            .collect(),
        pruning,
        ensemble,
        metrics: scored.metrics,
    };
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, to_json(&report))
        .map_err(|e| CmdError::runtime(format!("writing {}: {e}", report_path.display())))?;

    if let Some(path) = test_out {
        prep.test_raw
            .save_csv(path)
            .map_err(|e| CmdError::runtime(format!("writing {}: {e}", path.display())))?;
        println!("wrote test split to {}", path.display());
    }
    println!(
        "wrote {} and {}",
        model_path.display(),
        report_path.display()
    );
    Ok(())
}

/// One row per sample in original units — inputs, target, fused bounds —
/// for plotting interval bands over the data.
fn interval_trace_csv(dataset: &Dataset, scored: &Scored) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for name in dataset.feature_names() {
        out.push_str(name);
        out.push(',');
    }
    writeln!(out, "{},y_lower,y_upper", dataset.target_name())
        .expect("writing to a String cannot fail");
    for r in 0..dataset.n_rows() {
        for v in dataset.features().row(r) {
            write!(out, "{v},").expect("writing to a String cannot fail");
        }
        writeln!(
            out,
            "{},{},{}",
            dataset.targets()[r],
            scored.lower[r],
            scored.upper[r]
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub struct EvalParams {
    pub model: PathBuf,
    pub data: PathBuf,
    pub target: Option<String>,
    pub trace_out: Option<PathBuf>,
    pub confidence: Option<f64>,
    pub penalty_c: Option<f64>,
    pub softness: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn cmd_eval(p: &EvalParams) -> CmdResult<()> {
    let model = SavedModel::load(&p.model)
        .map_err(|e| CmdError::data(format!("{}: {e}", p.model.display())))?;
    let target_col = match &p.target {
        Some(name) => TargetColumn::Named(name.clone()),
        None => TargetColumn::Last,
    };
    let dataset = data::load_csv(&p.data, &target_col)
        .map_err(|e| CmdError::data(format!("{}: {e}", p.data.display())))?;
    if dataset.n_features() != model.feature_names.len() {
        return Err(CmdError::data(format!(
            "model takes {} features, data has {}",
            model.feature_names.len(),
            dataset.n_features()
        )));
    }
    if dataset.feature_names() != model.feature_names.as_slice() {
        eprintln!(
            "warning: feature names differ from the model's ({:?} vs {:?}); matching by position",
            dataset.feature_names(),
            model.feature_names
        );
    }

    let mut loss = model.pool.config().loss;
    if let Some(v) = p.confidence {
        loss.confidence = v;
    }
    if let Some(v) = p.penalty_c {
        loss.penalty_c = v;
    }
    if let Some(v) = p.softness {
        loss.softness = v;
    }
    loss.validate()
        .map_err(|e| CmdError::config(e.to_string()))?;

    let normalized = dataset
        .apply_normalization(&model.normalization)
        .map_err(|e| CmdError::data(e.to_string()))?;
    let scored = score_pool(&model.pool, &normalized, model.normalization.target, &loss)?;
    println!(
        "eval: {} rows; picp {:.4}, mpiw {:.4} (normalized units), prediction {:.4}s",
        dataset.n_rows(),
        scored.metrics.normalized.picp_hard,
        scored.metrics.normalized.mpiw_all,
        scored.predict_seconds
    );

    if let Some(path) = &p.trace_out {
        let text = interval_trace_csv(&dataset, &scored);
        fs::write(path, text)
            .map_err(|e| CmdError::runtime(format!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }

    let report = EvalReport {
        format: REPORT_FORMAT,
        kind: "eval",
        model_format: MODEL_FORMAT,
        data: summarize(&dataset),
        ensemble: EnsembleSection {
            pool_size: model.pool.learners().len(),
            ensemble_size: model.pool.n_selected(),
            selected: model.pool.selected_indices(),
        },
        metrics: scored.metrics,
    };
    if let Some(path) = &p.out {
        fs::write(path, to_json(&report))
            .map_err(|e| CmdError::runtime(format!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// One line of the optional bench trace: compact JSON, one object per
/// scored arm, flushed as the sweep progresses.
#[derive(Serialize)]
struct TraceLine<'a> {
    pool_size: usize,
    repeat: usize,
    arm: &'a str,
    picp: f64,
    mpiw_all: f64,
    loss_mbpep: f64,
    ensemble_size: usize,
    predict_seconds: f64,
}

fn write_trace(
    sink: &mut Option<fs::File>,
    pool_size: usize,
    repeat: usize,
    arm: &str,
    rec: &ArmRecord,
) -> CmdResult<()> {
    let Some(file) = sink else {
        return Ok(());
    };
    let line = TraceLine {
        pool_size,
        repeat,
        arm,
        picp: rec.metrics.normalized.picp_hard,
        mpiw_all: rec.metrics.normalized.mpiw_all,
        loss_mbpep: rec.metrics.normalized.loss_mbpep,
        ensemble_size: rec.ensemble_size,
        predict_seconds: rec.predict_seconds,
    };
    let mut text = serde_json::to_string(&line).expect("trace lines always serialize");
    text.push('\n');
    file.write_all(text.as_bytes())
        .map_err(|e| CmdError::runtime(format!("writing trace: {e}")))
}

pub fn cmd_bench(cfg: &RunConfig, out: &Path, trace_out: Option<&Path>) -> CmdResult<()> {
    // A CSV source is read once and re-split per repeat; synthetic sources
    // draw fresh noise per repeat instead.
    let csv_data = match cfg.data.source {
        SourceKind::Csv => Some(load_dataset(cfg, cfg.seed)?),
        _ => None,
    };
    let mut trace = match trace_out {
        Some(p) => Some(fs::File::create(p).map_err(|e| {
            CmdError::runtime(format!("creating {}: {e}", p.display()))
        })?),
        None => None,
    };

    let mut runs = Vec::new();
    for &pool_size in &cfg.bench.pool_sizes {
        for repeat in 0..cfg.bench.repeats {
            // repeat r reruns the whole pipeline under base seed + r; pool
            // sizes share these seeds, so every size sees identical data
            let run_seed = cfg.seed.wrapping_add(repeat as u64);
            let dataset = match &csv_data {
                Some(d) => d.clone(),
                None => load_dataset(cfg, run_seed)?,
            };
            let prep = prepare(&dataset, cfg, run_seed)?;
            let train_cfg = TrainConfig {
                pool_size,
                ..cfg.train.clone()
            };
            let all_seeds = learner_seeds(run_seed, pool_size);
            let started = Instant::now();
            let outcome = train_pool(&prep.train, &train_cfg, &all_seeds, cfg.threads)
                .map_err(|e| match e {
                    mbpep::Error::InvalidArgument(_) => CmdError::config(e.to_string()),
                    other => CmdError::runtime(other.to_string()),
                })?;
            let train_seconds = started.elapsed().as_secs_f64();
            let mut pool = outcome.pool;
            for f in &outcome.failures {
                eprintln!(
                    "warning: pool {pool_size} repeat {repeat}: learner {} abandoned: {}",
                    f.learner, f.error
                );
            }

            pool.select_all();
            let scored = score_pool(&pool, &prep.test, prep.norm.target, &cfg.train.loss)?;
            let unpruned = ArmRecord {
                ensemble_size: pool.n_selected(),
                predict_seconds: scored.predict_seconds,
                metrics: scored.metrics,
            };
            write_trace(&mut trace, pool_size, repeat, "unpruned", &unpruned)?;

            let (prune_seconds, pruned) = if cfg.prune.enabled {
                let pcfg = cfg.prune_config(seeds::derive(run_seed, STREAM_PRUNE));
                let started = Instant::now();
                pareto_prune(&mut pool, &prep.valid, &pcfg)
                    .map_err(|e| CmdError::runtime(e.to_string()))?;
                let prune_seconds = started.elapsed().as_secs_f64();
                let scored = score_pool(&pool, &prep.test, prep.norm.target, &cfg.train.loss)?;
                let arm = ArmRecord {
                    ensemble_size: pool.n_selected(),
                    predict_seconds: scored.predict_seconds,
                    metrics: scored.metrics,
                };
                write_trace(&mut trace, pool_size, repeat, "pruned", &arm)?;
                (Some(prune_seconds), Some(arm))
            } else {
                (None, None)
            };

            match &pruned {
                Some(arm) => println!(
                    "pool {pool_size} repeat {repeat}: unpruned picp {:.4} mpiw {:.4} | pruned picp {:.4} mpiw {:.4} size {}",
                    unpruned.metrics.normalized.picp_hard,
                    unpruned.metrics.normalized.mpiw_all,
                    arm.metrics.normalized.picp_hard,
                    arm.metrics.normalized.mpiw_all,
                    arm.ensemble_size
                ),
                None => println!(
                    "pool {pool_size} repeat {repeat}: unpruned picp {:.4} mpiw {:.4}",
                    unpruned.metrics.normalized.picp_hard,
                    unpruned.metrics.normalized.mpiw_all
                ),
            }
            runs.push(BenchRun {
                pool_size,
                repeat,
                seed: run_seed,
                train_seconds,
                prune_seconds,
                unpruned,
                pruned,
            });
        }
    }

    let mut aggregates = Vec::new();
    for &pool_size in &cfg.bench.pool_sizes {
        let subset: Vec<&BenchRun> = runs.iter().filter(|r| r.pool_size == pool_size).collect();
        let unpruned_arms: Vec<&ArmRecord> = subset.iter().map(|r| &r.unpruned).collect();
        aggregates.push(aggregate(pool_size, "unpruned", &unpruned_arms));
        let pruned_arms: Vec<&ArmRecord> =
            subset.iter().filter_map(|r| r.pruned.as_ref()).collect();
        if !pruned_arms.is_empty() {
            aggregates.push(aggregate(pool_size, "pruned", &pruned_arms));
        }
    }
    for a in &aggregates {
        println!(
            "pool {:>3} {:>8}: picp {}, mpiw {}, loss {}, size {}, predict {}s",
            a.pool_size,
            a.arm,
            a.picp.display(4),
            a.mpiw_all.display(4),
            a.loss_mbpep.display(4),
            a.ensemble_size.display(2),
            a.predict_seconds.display(6)
        );
    }

    let report = BenchReport {
        format: REPORT_FORMAT,
        kind: "bench",
        config: cfg,
        runs,
        aggregates,
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CmdError::runtime(format!("creating {}: {e}", parent.display())))?;
        }
    }
    fs::write(out, to_json(&report))
        .map_err(|e| CmdError::runtime(format!("writing {}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn aggregate(pool_size: usize, arm: &'static str, arms: &[&ArmRecord]) -> BenchAggregate {
    let stat = |f: fn(&ArmRecord) -> f64| -> Stat {
        let samples: Vec<f64> = arms.iter().map(|a| f(a)).collect();
        Stat::from_samples(&samples)
    };
    BenchAggregate {
        pool_size,
        arm,
        n_runs: arms.len(),
        picp: stat(|a| a.metrics.normalized.picp_hard),
        mpiw_all: stat(|a| a.metrics.normalized.mpiw_all),
        loss_mbpep: stat(|a| a.metrics.normalized.loss_mbpep),
        ensemble_size: stat(|a| a.ensemble_size as f64),
        predict_seconds: stat(|a| a.predict_seconds),
    }
}

//! Datasets: synthetic generators, CSV I/O, normalization, splitting.
//!
//! A [`Dataset`] is a dense feature matrix plus one target column. The CSV
//! dialect is deliberately small: comma separators, a mandatory header row,
//! `.` decimal floats, no quoting or escapes. Floats are written in
//! shortest round-trip form, so a load/save cycle reproduces the same
//! numbers bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::piloss::IntervalBatch;
use crate::{Error, Matrix, Result};

/// Per-column affine normalization parameters fitted on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// `(min, max)` per feature column.
    pub features: Vec<(f64, f64)>,
    /// `(min, max)` of the target column.
    pub target: (f64, f64),
}

impl Normalization {
    /// Fits per-column min/max stats without applying them.
    pub fn fit(data: &Dataset) -> Result<Normalization> {
        if data.is_normalized() {
            return Err(Error::Data("dataset is already normalized".into()));
        }
        let mut feat_stats = Vec::with_capacity(data.n_features());
        for c in 0..data.n_features() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in 0..data.n_rows() {
                let v = data.features.get(r, c);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            feat_stats.push((lo, hi));
        }
        let t_lo = data.targets.iter().cloned().fold(f64::INFINITY, f64::min);
        let t_hi = data
            .targets
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Normalization {
            features: feat_stats,
            target: (t_lo, t_hi),
        })
    }

    /// A target mapping that leaves values unchanged, for pipelines that
    /// only normalize features. `scale_from_unit(v, 0, 1) == v` exactly.
    pub fn identity_target() -> (f64, f64) {
        (0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    targets: Vec<f64>,
    feature_names: Vec<String>,
    target_name: String,
    /// Present iff the data has been mapped through [`Dataset::normalize`].
    norm: Option<Normalization>,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Vec<f64>) -> Result<Self> {
        let names = (0..features.cols()).map(|i| format!("x{i}")).collect();
        Self::with_names(features, targets, names, "y".to_string())
    }

    pub fn with_names(
        features: Matrix,
        targets: Vec<f64>,
        feature_names: Vec<String>,
        target_name: String,
    ) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(Error::Shape(format!(
                "{} feature rows vs {} targets",
                features.rows(),
                targets.len()
            )));
        }
        if features.rows() == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if features.cols() == 0 {
            return Err(Error::Data("dataset has no feature columns".into()));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        if features.data().iter().any(|v| !v.is_finite())
            || targets.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Data("dataset contains non-finite values".into()));
        }
        Ok(Dataset {
            features,
            targets,
            feature_names,
            target_name,
            norm: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn is_normalized(&self) -> bool {
        self.norm.is_some()
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.norm.as_ref()
    }

    /// New dataset holding the given rows, repeats allowed (bootstrap).
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let features = self.features.select_rows(indices)?;
        let targets = indices.iter().map(|&i| self.targets[i]).collect();
        Ok(Dataset {
            features,
            targets,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            norm: self.norm.clone(),
        })
    }

    /// Fits min/max stats on `fit_on` and maps `self` through them so every
    /// fitted column lands in [0, 1] *on the fitting split*; other splits
    /// may leak slightly outside, which is fine. Constant columns map to
    /// 0.5 everywhere.
    pub fn normalize(&self, fit_on: &Dataset) -> Result<Dataset> {
        if fit_on.n_features() != self.n_features() {
            return Err(Error::Shape(format!(
                "normalization fit on {} features, dataset has {}",
                fit_on.n_features(),
                self.n_features()
            )));
        }
        if self.is_normalized() {
            return Err(Error::Data("dataset is already normalized".into()));
        }
        let norm = Normalization::fit(fit_on)?;
        self.apply_normalization(&norm)
    }

    /// Maps through an already-fitted normalization (e.g. from a model file).
    pub fn apply_normalization(&self, norm: &Normalization) -> Result<Dataset> {
        if norm.features.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "normalization has {} feature columns, dataset has {}",
                norm.features.len(),
                self.n_features()
            )));
        }
        if self.is_normalized() {
            return Err(Error::Data("dataset is already normalized".into()));
        }
        let mut features = self.features.clone();
        for r in 0..features.rows() {
            let row = features.row_mut(r);
            for (c, &(lo, hi)) in norm.features.iter().enumerate() {
                row[c] = scale_to_unit(row[c], lo, hi);
            }
        }
        let (t_lo, t_hi) = norm.target;
        let targets = self
            .targets
            .iter()
            .map(|&t| scale_to_unit(t, t_lo, t_hi))
            .collect();
        Ok(Dataset {
            features,
            targets,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            norm: Some(norm.clone()),
        })
    }

    /// Inverse of [`Dataset::normalize`]: maps features and targets back to
    /// original units.
    pub fn denormalize(&self) -> Result<Dataset> {
        let norm = self
            .norm
            .as_ref()
            .ok_or_else(|| Error::Data("dataset is not normalized".into()))?;
        let mut features = self.features.clone();
        for r in 0..features.rows() {
            let row = features.row_mut(r);
            for (c, &(lo, hi)) in norm.features.iter().enumerate() {
                row[c] = scale_from_unit(row[c], lo, hi);
            }
        }
        let (t_lo, t_hi) = norm.target;
        let targets = self
            .targets
            .iter()
            .map(|&t| scale_from_unit(t, t_lo, t_hi))
            .collect();
        Ok(Dataset {
            features,
            targets,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            norm: None,
        })
    }

    /// Shuffled three-way split. Sizes are `floor(fraction * n)` for the
    /// validation and test parts; the remainder goes to training, so no row
    /// is ever lost.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
        spec.validate()?;
        let n = self.n_rows();
        let n_valid = (spec.valid_fraction * n as f64).floor() as usize;
        let n_test = (spec.test_fraction * n as f64).floor() as usize;
        let n_train = n - n_valid - n_test;
        if n_train == 0 || (n_valid == 0 && spec.valid_fraction > 0.0) {
            return Err(Error::Data(format!(
                "split of {n} rows leaves an empty part (train {n_train}, valid {n_valid}, test {n_test})"
            )));
        }
        let mut indices: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        shuffle(&mut indices, &mut rng);
        let train = self.select(&indices[..n_train])?;
        let valid = self.select(&indices[n_train..n_train + n_valid])?;
        let test = self.select(&indices[n_train + n_valid..])?;
        Ok((train, valid, test))
    }

    /// Serializes to the crate's CSV dialect (header, comma, shortest
    /// round-trip floats, `\n` line endings).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for name in &self.feature_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str(&self.target_name);
        out.push('\n');
        for r in 0..self.n_rows() {
            for v in self.features.row(r) {
                write!(out, "{v},").expect("writing to a String cannot fail");
            }
            writeln!(out, "{}", self.targets[r]).expect("writing to a String cannot fail");
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Fisher–Yates with draws taken in a fixed order.
fn shuffle(indices: &mut [usize], rng: &mut impl Rng) {
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
}

fn scale_to_unit(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5 // constant column carries no information
    }
}

fn scale_from_unit(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        v * (hi - lo) + lo
    } else {
        lo
    }
}

/// Maps normalized interval bounds back to original target units.
pub fn denormalize_bounds(batch: &IntervalBatch, target_norm: (f64, f64)) -> Result<IntervalBatch> {
    let (lo, hi) = target_norm;
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Error::InvalidArgument(format!(
            "invalid target normalization ({lo}, {hi})"
        )));
    }
    let map = |v: f64| scale_from_unit(v, lo, hi);
    IntervalBatch::new(
        batch.lower().iter().map(|&v| map(v)).collect(),
        batch.upper().iter().map(|&v| map(v)).collect(),
        batch.targets().iter().map(|&v| map(v)).collect(),
    )
}

/// Three-way split proportions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.5,
            valid_fraction: 0.2,
            test_fraction: 0.3,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [
            self.train_fraction,
            self.valid_fraction,
            self.test_fraction,
        ];
        if parts.iter().any(|f| !f.is_finite() || *f < 0.0 || *f > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split fractions must lie in [0, 1], got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        if self.train_fraction == 0.0 {
            return Err(Error::InvalidArgument(
                "training fraction must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `y = x^3 + Normal(0, noise_std)` with `x` uniform on `x_range`.
pub fn gen_cubic(n: usize, noise_std: f64, x_range: (f64, f64), seed: u64) -> Result<Dataset> {
    if noise_std < 0.0 || !noise_std.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise_std must be finite and >= 0, got {noise_std}"
        )));
    }
    let noise = Normal::new(0.0, noise_std)
        .map_err(|e| Error::InvalidArgument(format!("bad noise distribution: {e}")))?;
    gen_from(n, x_range, seed, |x, rng| x.powi(3) + noise.sample(rng))
}

/// `y = e^x + Exp(rate)` with `x` uniform on `x_range`. The noise is
/// one-sided: it only ever pushes the target above the curve.
pub fn gen_exp(n: usize, rate: f64, x_range: (f64, f64), seed: u64) -> Result<Dataset> {
    let noise = Exp::new(rate)
        .map_err(|e| Error::InvalidArgument(format!("bad noise rate {rate}: {e}")))?;
    gen_from(n, x_range, seed, |x, rng| x.exp() + noise.sample(rng))
}

fn gen_from(
    n: usize,
    x_range: (f64, f64),
    seed: u64,
    f: impl Fn(f64, &mut ChaCha8Rng) -> f64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot generate 0 samples".into()));
    }
    let (lo, hi) = x_range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "x_range ({lo}, {hi}) is not a proper interval"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random_range(lo..hi);
        ys.push(f(x, &mut rng));
        xs.push(x);
    }
    Dataset::with_names(Matrix::column(&xs), ys, vec!["x".into()], "y".into())
}

/// Which CSV column holds the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    /// Rightmost column (the generators' convention).
    Last,
    /// Column with this header name.
    Named(String),
}

/// Parses the CSV dialect from a string. Errors carry 1-based data-row and
/// column positions (the header is row 0).
pub fn parse_csv(text: &str, target: &TargetColumn) -> Result<Dataset> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Csv {
        row: 0,
        col: 0,
        msg: "empty input, expected a header row".into(),
    })?;
    let names: Vec<&str> = header.split(',').collect();
    if names.len() < 2 {
        return Err(Error::Csv {
            row: 0,
            col: 1,
            msg: format!(
                "need at least one feature and one target column, header has {}",
                names.len()
            ),
        });
    }
    if let Some(pos) = names.iter().position(|n| n.trim().is_empty()) {
        return Err(Error::Csv {
            row: 0,
            col: pos + 1,
            msg: "blank column name in header".into(),
        });
    }
    let target_idx = match target {
        TargetColumn::Last => names.len() - 1,
        TargetColumn::Named(name) => names.iter().position(|n| n == name).ok_or(Error::Csv {
            row: 0,
            col: 0,
            msg: format!("target column {name:?} not found in header"),
        })?,
    };

    let n_cols = names.len();
    let mut flat = Vec::new();
    let mut targets = Vec::new();
    let mut row = 0usize;
    for line in lines {
        row += 1;
        if line.is_empty() {
            return Err(Error::Csv {
                row,
                col: 1,
                msg: "blank line".into(),
            });
        }
        let mut col = 0usize;
        for cell in line.split(',') {
            col += 1;
            if col > n_cols {
                break;
            }
            let value: f64 = cell.trim().parse().map_err(|_| Error::Csv {
                row,
                col,
                msg: format!("cannot parse {cell:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    row,
                    col,
                    msg: format!("non-finite value {cell:?}"),
                });
            }
            if col - 1 == target_idx {
                targets.push(value);
            } else {
                flat.push(value);
            }
        }
        if col != n_cols {
            return Err(Error::Csv {
                row,
                col: col.min(n_cols),
                msg: format!("expected {n_cols} columns, found {col}"),
            });
        }
    }
    if targets.is_empty() {
        return Err(Error::Csv {
            row: 1,
            col: 1,
            msg: "no data rows".into(),
        });
    }

    let feature_names: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_idx)
        .map(|(_, n)| n.to_string())
        .collect();
    let features = Matrix::from_vec(targets.len(), n_cols - 1, flat)?;
    Dataset::with_names(
        features,
        targets,
        feature_names,
        names[target_idx].to_string(),
    )
}

/// [`parse_csv`] over a file.
pub fn load_csv(path: &Path, target: &TargetColumn) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, target)
}

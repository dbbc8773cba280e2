//! Interval-quality metrics and the differentiable coverage/width loss.
//!
//! A prediction interval is judged on two axes: coverage (how often the
//! target falls inside) and width (how tight the interval is). The hard
//! metrics here score a finished batch; the soft variants replace the
//! inclusion indicator with a product of sigmoids so the whole objective is
//! differentiable and can drive gradient training:
//!
//! ```text
//! k_i    = sigmoid(softness * (upper_i - t_i)) * sigmoid(softness * (t_i - lower_i))
//! loss   = mean(width_i * k_i) + penalty_c * max(0, confidence - mean(k_i))
//! ```
//!
//! The hinge term punishes a batch whose soft coverage falls short of the
//! configured confidence level; once coverage is met, only width pressure
//! remains and the intervals tighten.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A batch of predicted bounds paired with the true targets.
///
/// All three buffers share one length `N >= 1` and hold only finite values.
/// Lower bounds are *not* required to be below upper bounds: learners with
/// unconstrained outputs can emit crossed intervals, and the metrics must
/// score those honestly (a crossed interval never captures its target).
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBatch {
    lower: Vec<f64>,
    upper: Vec<f64>,
    targets: Vec<f64>,
}

impl IntervalBatch {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != targets.len() {
            return Err(Error::Shape(format!(
                "interval batch lengths differ: lower {}, upper {}, targets {}",
                lower.len(),
                upper.len(),
                targets.len()
            )));
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument("interval batch is empty".into()));
        }
        for (name, buf) in [("lower", &lower), ("upper", &upper), ("targets", &targets)] {
            if let Some(i) = buf.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "non-finite {name} bound at sample {i}"
                )));
            }
        }
        Ok(IntervalBatch {
            lower,
            upper,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        false // new() rejects empty batches
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

/// Knobs of the training loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Target coverage level in (0, 1); the hinge activates below it.
    pub confidence: f64,
    /// Weight of the coverage hinge. Larger values defend coverage harder
    /// before width pressure takes over.
    pub penalty_c: f64,
    /// Steepness of the soft inclusion indicator. `1.0` is the plain
    /// sigmoid product; larger values sharpen it toward the hard 0/1
    /// indicator. The default is tuned for targets normalized to [0, 1]:
    /// at equilibrium the hinge releases near width ~ 7.3/softness, so 20
    /// settles around 0.37 — wide enough to cover, tight enough to be
    /// useful.
    pub softness: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            confidence: 0.95,
            penalty_c: 15.0,
            softness: 20.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if !self.penalty_c.is_finite() || self.penalty_c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "penalty_c must be finite and >= 0, got {}",
                self.penalty_c
            )));
        }
        if !self.softness.is_finite() || self.softness <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "softness must be finite and > 0, got {}",
                self.softness
            )));
        }
        Ok(())
    }
}

/// Everything worth reporting about a scored batch, in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub picp_hard: f64,
    pub picp_soft: f64,
    pub mpiw_all: f64,
    pub mpiw_captured: f64,
    pub mpiw_soft: f64,
    pub loss_mbpep: f64,
    /// Legacy width/coverage score; `None` when its width normalizer is zero.
    pub loss_lube: Option<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-sample inclusion: `true` iff `lower_i <= target_i <= upper_i`
/// (boundaries count as captured).
pub fn hard_indicator(batch: &IntervalBatch) -> Vec<bool> {
    batch
        .targets
        .iter()
        .zip(batch.lower.iter().zip(&batch.upper))
        .map(|(&t, (&l, &u))| l <= t && t <= u)
        .collect()
}

/// Fraction of samples captured by their interval.
pub fn picp_hard(batch: &IntervalBatch) -> f64 {
    let hits = hard_indicator(batch).iter().filter(|&&c| c).count();
    hits as f64 / batch.len() as f64
}

/// Mean interval width over every sample, captured or not.
pub fn mpiw_all(batch: &IntervalBatch) -> f64 {
    let sum: f64 = batch
        .upper
        .iter()
        .zip(&batch.lower)
        .map(|(&u, &l)| u - l)
        .sum();
    sum / batch.len() as f64
}

/// Mean width counting only captured samples, still divided by the full
/// batch size: uncaptured samples contribute zero width, not a smaller
/// denominator.
pub fn mpiw_captured(batch: &IntervalBatch) -> f64 {
    let mut sum = 0.0;
    for i in 0..batch.len() {
        let (l, u, t) = (batch.lower[i], batch.upper[i], batch.targets[i]);
        if l <= t && t <= u {
            sum += u - l;
        }
    }
    sum / batch.len() as f64
}

/// Differentiable stand-in for [`hard_indicator`]: a product of sigmoids on
/// the two margins, in (0, 1), approaching the hard indicator as `softness`
/// grows.
pub fn soft_indicator(batch: &IntervalBatch, softness: f64) -> Vec<f64> {
    batch
        .targets
        .iter()
        .zip(batch.lower.iter().zip(&batch.upper))
        .map(|(&t, (&l, &u))| sigmoid(softness * (u - t)) * sigmoid(softness * (t - l)))
        .collect()
}

/// Mean soft inclusion — the differentiable coverage estimate.
pub fn picp_soft(batch: &IntervalBatch, softness: f64) -> f64 {
    let k = soft_indicator(batch, softness);
    k.iter().sum::<f64>() / k.len() as f64
}

/// Mean width weighted per sample by `k`, divided by the full batch size.
/// With hard 0/1 weights this reduces to [`mpiw_captured`] exactly — same
/// additions in the same order, bit for bit.
pub fn mpiw_weighted(batch: &IntervalBatch, k: &[f64]) -> Result<f64> {
    if k.len() != batch.len() {
        return Err(Error::Shape(format!(
            "weight vector length {} does not match batch length {}",
            k.len(),
            batch.len()
        )));
    }
    let mut sum = 0.0;
    for i in 0..batch.len() {
        sum += (batch.upper[i] - batch.lower[i]) * k[i];
    }
    Ok(sum / batch.len() as f64)
}

/// Soft-captured mean width: widths weighted by the soft indicator.
pub fn mpiw_soft(batch: &IntervalBatch, softness: f64) -> f64 {
    let k = soft_indicator(batch, softness);
    mpiw_weighted(batch, &k).expect("indicator length matches batch by construction")
}

/// The training objective: soft-captured width plus a hinge on the soft
/// coverage shortfall.
pub fn loss_mbpep(batch: &IntervalBatch, cfg: &LossConfig) -> f64 {
    let width_term = mpiw_soft(batch, cfg.softness);
    let shortfall = (cfg.confidence - picp_soft(batch, cfg.softness)).max(0.0);
    width_term + cfg.penalty_c * shortfall
}

/// Analytic gradient of [`loss_mbpep`] with respect to each bound.
/// Returns `(d_lower, d_upper)`.
///
/// At exact coverage (`picp_soft == confidence`) the hinge contributes
/// nothing: the subgradient at the kink is taken as zero.
pub fn loss_mbpep_grad(batch: &IntervalBatch, cfg: &LossConfig) -> (Vec<f64>, Vec<f64>) {
    let n = batch.len() as f64;
    let kappa = cfg.softness;
    let mut d_lower = vec![0.0; batch.len()];
    let mut d_upper = vec![0.0; batch.len()];

    // One pass for the soft indicators and their margin sigmoids.
    let mut s_up = vec![0.0; batch.len()]; // sigmoid(softness * (u - t))
    let mut s_lo = vec![0.0; batch.len()]; // sigmoid(softness * (t - l))
    let mut k_sum = 0.0;
    for i in 0..batch.len() {
        s_up[i] = sigmoid(kappa * (batch.upper[i] - batch.targets[i]));
        s_lo[i] = sigmoid(kappa * (batch.targets[i] - batch.lower[i]));
        k_sum += s_up[i] * s_lo[i];
    }
    let hinge_active = k_sum / n < cfg.confidence;

    for i in 0..batch.len() {
        let w = batch.upper[i] - batch.lower[i];
        let k = s_up[i] * s_lo[i];
        // dk/du grows coverage from the top, dk/dl shrinks it from the bottom.
        let dk_du = kappa * s_up[i] * (1.0 - s_up[i]) * s_lo[i];
        let dk_dl = -kappa * s_lo[i] * (1.0 - s_lo[i]) * s_up[i];
        d_upper[i] = (k + w * dk_du) / n;
        d_lower[i] = (-k + w * dk_dl) / n;
        if hinge_active {
            d_upper[i] -= cfg.penalty_c / n * dk_du;
            d_lower[i] -= cfg.penalty_c / n * dk_dl;
        }
    }
    (d_lower, d_upper)
}

/// Width/coverage score used for comparison only (not differentiable):
/// captured width normalized by the batch mean width, inflated
/// exponentially when hard coverage misses the confidence level.
///
/// Errors with [`Error::Undefined`] when the mean width is zero, since the
/// normalizer vanishes.
pub fn loss_lube(batch: &IntervalBatch, cfg: &LossConfig) -> Result<f64> {
    let mean_width = mpiw_all(batch);
    if mean_width == 0.0 {
        return Err(Error::Undefined(
            "batch mean width is zero, width-normalized loss has no value".into(),
        ));
    }
    let shortfall = (cfg.confidence - picp_hard(batch)).max(0.0);
    Ok(mpiw_captured(batch) / mean_width * (1.0 + (cfg.penalty_c * shortfall).exp()))
}

/// Scores a batch on every metric at once.
pub fn loss_report(batch: &IntervalBatch, cfg: &LossConfig) -> LossReport {
    LossReport {
        picp_hard: picp_hard(batch),
        picp_soft: picp_soft(batch, cfg.softness),
        mpiw_all: mpiw_all(batch),
        mpiw_captured: mpiw_captured(batch),
        mpiw_soft: mpiw_soft(batch, cfg.softness),
        loss_mbpep: loss_mbpep(batch, cfg),
        loss_lube: loss_lube(batch, cfg).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(lower: &[f64], upper: &[f64], targets: &[f64]) -> IntervalBatch {
        IntervalBatch::new(lower.to_vec(), upper.to_vec(), targets.to_vec()).unwrap()
    }

    #[test]
    fn rejects_mismatched_or_empty_batches() {
        assert!(IntervalBatch::new(vec![0.0], vec![1.0, 2.0], vec![0.5]).is_err());
        assert!(IntervalBatch::new(vec![], vec![], vec![]).is_err());
        assert!(IntervalBatch::new(vec![f64::NAN], vec![1.0], vec![0.5]).is_err());
    }

    #[test]
    fn hard_metrics_on_hand_batch() {
        // Sample 0 captured mid-interval, sample 1 misses above, sample 2
        // captured exactly on its lower boundary.
        let b = batch(&[0.0, 0.0, 1.0], &[1.0, 2.0, 2.0], &[0.5, 3.0, 1.0]);
        assert_eq!(hard_indicator(&b), vec![true, false, true]);
        assert_eq!(picp_hard(&b), 2.0 / 3.0);
        assert_eq!(mpiw_all(&b), 4.0 / 3.0);
        assert_eq!(mpiw_captured(&b), 2.0 / 3.0);
    }

    #[test]
    fn boundary_targets_count_as_captured() {
        let b = batch(&[1.0, 1.0], &[2.0, 2.0], &[1.0, 2.0]);
        assert_eq!(picp_hard(&b), 1.0);
    }

    #[test]
    fn crossed_interval_never_captures() {
        let b = batch(&[1.0], &[0.0], &[0.5]);
        assert_eq!(picp_hard(&b), 0.0);
        assert_eq!(mpiw_all(&b), -1.0);
        assert_eq!(mpiw_captured(&b), 0.0);
    }

    #[test]
    fn soft_indicator_centered_sample() {
        // softness 1, margins 0.5 both sides: k = sigmoid(0.5)^2.
        let b = batch(&[0.0], &[1.0], &[0.5]);
        let k = soft_indicator(&b, 1.0);
        let s = 1.0 / (1.0 + (-0.5f64).exp());
        assert!((k[0] - s * s).abs() < 1e-15);
        assert!(k[0] > 0.0 && k[0] < 1.0);
    }

    #[test]
    fn soft_indicator_sharpens_toward_hard() {
        let b = batch(&[0.0, 0.0], &[1.0, 1.0], &[0.5, 1.5]);
        let loose = soft_indicator(&b, 1.0);
        let sharp = soft_indicator(&b, 50.0);
        // captured sample drifts to 1, missed sample drifts to 0
        assert!(sharp[0] > loose[0]);
        assert!(sharp[0] > 0.999);
        assert!(sharp[1] < loose[1]);
        assert!(sharp[1] < 1e-9);
    }

    #[test]
    fn weighted_width_with_hard_weights_is_bit_exact() {
        let b = batch(
            &[0.0, 0.5, -1.0, 0.3],
            &[1.0, 0.4, 1.0, 0.9],
            &[0.7, 0.45, 2.0, 0.3],
        );
        let k: Vec<f64> = hard_indicator(&b)
            .into_iter()
            .map(|c| if c { 1.0 } else { 0.0 })
            .collect();
        let weighted = mpiw_weighted(&b, &k).unwrap();
        assert_eq!(weighted.to_bits(), mpiw_captured(&b).to_bits());
    }

    #[test]
    fn deep_coverage_makes_loss_pure_width() {
        // Targets sit well inside wide intervals: soft coverage ~ 1, hinge off.
        let cfg = LossConfig::default();
        let b = batch(&[0.0, 0.0], &[1.0, 1.0], &[0.45, 0.55]);
        let soft_cov = picp_soft(&b, cfg.softness);
        assert!(soft_cov > cfg.confidence);
        assert_eq!(loss_mbpep(&b, &cfg), mpiw_soft(&b, cfg.softness));
        assert!((loss_mbpep(&b, &cfg) - mpiw_all(&b)).abs() < 0.01);
    }

    #[test]
    fn hinge_punishes_undercoverage() {
        let cfg = LossConfig::default();
        // Interval far below its target: essentially no coverage.
        let miss = batch(&[0.0], &[0.05], &[0.9]);
        let loss = loss_mbpep(&miss, &cfg);
        assert!(loss > cfg.penalty_c * (cfg.confidence - 0.01));
    }

    #[test]
    fn gradient_signs_push_a_low_narrow_interval_up() {
        // Interval [0, 0.05] sits far below target 0.40: the hinge dominates,
        // so the upper bound is pushed up (negative gradient) while width
        // pressure plus negligible coverage pulls the lower bound up too.
        let cfg = LossConfig {
            confidence: 0.95,
            penalty_c: 15.0,
            softness: 10.0,
        };
        let b = batch(&[0.0], &[0.05], &[0.40]);
        let (dl, du) = loss_mbpep_grad(&b, &cfg);
        assert!(
            du[0] < 0.0,
            "upper bound should be pushed toward the target, got {}",
            du[0]
        );
        assert!(
            dl[0] > 0.0,
            "lower bound should be pulled up by width pressure, got {}",
            dl[0]
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Central differences over every coordinate of a mixed batch
        // (captured, missed low, missed high, crossed).
        let cfg = LossConfig::default();
        let lower = vec![0.1, 0.4, -0.2, 0.6];
        let upper = vec![0.9, 0.5, 0.1, 0.2];
        let targets = vec![0.5, 0.9, 0.05, 0.4];
        let b = batch(&lower, &upper, &targets);
        let (dl, du) = loss_mbpep_grad(&b, &cfg);

        // eps balances truncation against rounding noise; the denominator
        // floor keeps near-zero gradients from amplifying that noise.
        let eps = 1e-5;
        let loss_at = |lo: &[f64], up: &[f64]| {
            loss_mbpep(&batch(lo, up, &targets), &cfg)
        };
        for i in 0..lower.len() {
            let mut lp = lower.clone();
            let mut lm = lower.clone();
            lp[i] += eps;
            lm[i] -= eps;
            let num = (loss_at(&lp, &upper) - loss_at(&lm, &upper)) / (2.0 * eps);
            let denom = (num.abs() + dl[i].abs()).max(1e-4);
            assert!(
                (num - dl[i]).abs() / denom < 1e-5,
                "d_lower[{i}]: numeric {num} vs analytic {}",
                dl[i]
            );

            let mut up_p = upper.clone();
            let mut up_m = upper.clone();
            up_p[i] += eps;
            up_m[i] -= eps;
            let num = (loss_at(&lower, &up_p) - loss_at(&lower, &up_m)) / (2.0 * eps);
            let denom = (num.abs() + du[i].abs()).max(1e-4);
            assert!(
                (num - du[i]).abs() / denom < 1e-5,
                "d_upper[{i}]: numeric {num} vs analytic {}",
                du[i]
            );
        }
    }

    #[test]
    fn lube_loss_inflates_on_coverage_miss() {
        let cfg = LossConfig {
            confidence: 0.95,
            penalty_c: 15.0,
            softness: 20.0,
        };
        let covered = batch(&[0.0, 0.0], &[1.0, 1.0], &[0.5, 0.5]);
        // Full coverage: ratio term is 1, no inflation.
        assert!((loss_lube(&covered, &cfg).unwrap() - 2.0).abs() < 1e-12);

        let missed = batch(&[0.0, 0.0], &[1.0, 1.0], &[0.5, 3.0]);
        // Half coverage: exp(15 * 0.45) blows the score up.
        assert!(loss_lube(&missed, &cfg).unwrap() > 100.0);
    }

    #[test]
    fn lube_loss_undefined_for_zero_width() {
        let cfg = LossConfig::default();
        let b = batch(&[0.5], &[0.5], &[0.5]);
        assert!(matches!(loss_lube(&b, &cfg), Err(Error::Undefined(_))));
        // the aggregate report survives, recording the gap
        assert_eq!(loss_report(&b, &cfg).loss_lube, None);
    }

    #[test]
    fn loss_report_is_internally_consistent() {
        let cfg = LossConfig::default();
        let b = batch(&[0.0, 0.2], &[0.5, 0.8], &[0.3, 0.9]);
        let r = loss_report(&b, &cfg);
        assert_eq!(r.picp_hard, picp_hard(&b));
        assert_eq!(r.mpiw_all, mpiw_all(&b));
        assert_eq!(r.loss_mbpep, loss_mbpep(&b, &cfg));
        assert!(r.picp_soft > 0.0 && r.picp_soft < 1.0);
    }

    #[test]
    fn config_validation_catches_bad_domains() {
        let ok = LossConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            LossConfig { confidence: 0.0, ..ok },
            LossConfig { confidence: 1.0, ..ok },
            LossConfig { penalty_c: -1.0, ..ok },
            LossConfig { penalty_c: f64::NAN, ..ok },
            LossConfig { softness: 0.0, ..ok },
        ] {
            assert!(bad.validate().is_err(), "{bad:?} should fail validation");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn finite_batch() -> impl Strategy<Value = IntervalBatch> {
            // bounds and targets in a sane range, 1..32 samples
            proptest::collection::vec((-5.0f64..5.0, 0.0f64..4.0, -6.0f64..6.0), 1..32).prop_map(
                |rows| {
                    let (mut lower, mut upper, mut targets) =
                        (Vec::new(), Vec::new(), Vec::new());
                    for (l, w, t) in rows {
                        lower.push(l);
                        upper.push(l + w);
                        targets.push(t);
                    }
                    IntervalBatch::new(lower, upper, targets).unwrap()
                },
            )
        }

        proptest! {
            #[test]
            fn picp_stays_in_unit_range(b in finite_batch()) {
                let p = picp_hard(&b);
                prop_assert!((0.0..=1.0).contains(&p));
                let ps = picp_soft(&b, 7.0);
                prop_assert!(ps > 0.0 && ps < 1.0);
            }

            #[test]
            fn soft_indicator_in_open_unit_interval(b in finite_batch()) {
                for k in soft_indicator(&b, 13.0) {
                    prop_assert!(k > 0.0 && k < 1.0);
                }
            }

            #[test]
            fn loss_nonnegative_for_ordered_bounds(b in finite_batch()) {
                let cfg = LossConfig::default();
                prop_assert!(loss_mbpep(&b, &cfg) >= 0.0);
            }

            #[test]
            fn hard_weighted_width_always_matches_captured(b in finite_batch()) {
                let k: Vec<f64> = hard_indicator(&b)
                    .into_iter()
                    .map(|c| if c { 1.0 } else { 0.0 })
                    .collect();
                prop_assert_eq!(
                    mpiw_weighted(&b, &k).unwrap().to_bits(),
                    mpiw_captured(&b).to_bits()
                );
            }

            #[test]
            fn gradient_agrees_with_finite_differences(
                b in finite_batch(),
                softness in 0.5f64..25.0,
            ) {
                let cfg = LossConfig { softness, ..LossConfig::default() };
                // stay away from the hinge kink, where the loss is genuinely
                // non-differentiable and central differences straddle it
                prop_assume!((picp_soft(&b, softness) - cfg.confidence).abs() > 1e-3);
                let (dl, _du) = loss_mbpep_grad(&b, &cfg);
                let eps = 1e-6;
                for i in 0..b.len() {
                    let mut lp = b.lower().to_vec();
                    let mut lm = b.lower().to_vec();
                    lp[i] += eps;
                    lm[i] -= eps;
                    let plus = loss_mbpep(
                        &IntervalBatch::new(lp, b.upper().to_vec(), b.targets().to_vec()).unwrap(),
                        &cfg,
                    );
                    let minus = loss_mbpep(
                        &IntervalBatch::new(lm, b.upper().to_vec(), b.targets().to_vec()).unwrap(),
                        &cfg,
                    );
                    let num = (plus - minus) / (2.0 * eps);
                    // absolute tolerance: the hinge kink can sit between the
                    // two evaluation points, so allow a small slack scaled by
                    // the penalty weight
                    prop_assert!(
                        (num - dl[i]).abs() < 1e-4 * (1.0 + cfg.penalty_c),
                        "d_lower[{}]: numeric {} vs analytic {}", i, num, dl[i]
                    );
                }
            }
        }
    }
}

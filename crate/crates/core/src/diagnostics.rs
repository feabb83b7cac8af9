//! Monte Carlo checks of the asymptotic bias and variance laws.
//!
//! Each replication draws a fresh sample on its own RNG stream, evaluates
//! the estimators at every requested point, and the per-replication values
//! are reduced in replication order. Reports are therefore identical for any
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{gen_example, Seed};
use crate::error::{Error, Result};
use crate::estimators::{auto_from_estimates, default_eps, default_h_tilde, combine, Deconvolver, EstimatorConfig};
use crate::geom::{Point2, QuadrantProbs, QuadrantTag};
use crate::inversion::quadrant_probs_exact;
use crate::kernels::ProductKernel2D;
use crate::model::{Bundled, TrueModel};
use crate::weights::{optimal_weights, variance_form, variance_functionals, WeightVec};

/// Fewest replications accepted for a variance report.
pub const MIN_REPS: usize = 50;

/// Step for finite-difference second partials of quadrant probabilities.
const FD_STEP: f64 = 1e-3;

/// Leading bias term `½ (mu2₁ h1² f11 + mu2₂ h2² f22)` of every density
/// estimator and of any convex combination of them.
pub fn predicted_bias(model: &dyn TrueModel, kernel: &ProductKernel2D, h1: f64, h2: f64, x: Point2) -> f64 {
    let (f11, f22) = model.density_second_partials(x);
    0.5 * (kernel.k1.mu2() * h1 * h1 * f11 + kernel.k2.mu2() * h2 * h2 * f22)
}

/// Leading variance term `B(x, t) ∫w1'² ∫w2'² / (n h1³ h2³)` for fixed
/// weights `t`.
pub fn predicted_var(
    model: &dyn TrueModel,
    kernel: &ProductKernel2D,
    t: &WeightVec,
    n: usize,
    h1: f64,
    h2: f64,
    x: Point2,
) -> f64 {
    let probs = quadrant_probs_exact(model, x);
    variance_form(&probs, t) * kernel.k1.rough_dw() * kernel.k2.rough_dw()
        / (n as f64 * h1.powi(3) * h2.powi(3))
}

/// Leading bias of the quadrant estimator for `tag` with bandwidth `h_tilde`,
/// using central differences of the exact quadrant probability.
pub fn predicted_quadrant_bias(
    model: &dyn TrueModel,
    kernel: &ProductKernel2D,
    h_tilde: f64,
    tag: QuadrantTag,
    x: Point2,
) -> f64 {
    let q = |a: f64, b: f64| quadrant_probs_exact(model, Point2::new(a, b)).get(tag);
    let s = FD_STEP;
    let q0 = q(x.x1, x.x2);
    let d11 = (q(x.x1 + s, x.x2) - 2.0 * q0 + q(x.x1 - s, x.x2)) / (s * s);
    let d22 = (q(x.x1, x.x2 + s) - 2.0 * q0 + q(x.x1, x.x2 - s)) / (s * s);
    0.5 * h_tilde * h_tilde * (kernel.k1.mu2() * d11 + kernel.k2.mu2() * d22)
}

/// Leading variance `F^{tag}(x) ∫w1² ∫w2² / (n h̃²)`.
pub fn predicted_quadrant_var(
    model: &dyn TrueModel,
    kernel: &ProductKernel2D,
    h_tilde: f64,
    n: usize,
    tag: QuadrantTag,
    x: Point2,
) -> f64 {
    quadrant_probs_exact(model, x).get(tag) * kernel.k1.rough_w() * kernel.k2.rough_w()
        / (n as f64 * h_tilde * h_tilde)
}

/// Sample moments of a set of replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for v in values {
            let d = v - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
        Self {
            mean,
            var: m2 * n / (n - 1.0),
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
        }
    }
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

/// Empirical versus predicted behaviour of one estimator at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub label: String,
    pub mean: f64,
    pub var: f64,
    /// Empirical mean minus the true value.
    pub bias: f64,
    pub predicted_bias: f64,
    pub predicted_var: f64,
    /// Empirical over predicted variance.
    pub var_ratio: f64,
    /// Empirical over predicted bias.
    pub bias_ratio: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl EstimatorStats {
    fn new(label: impl Into<String>, values: &[f64], truth: f64, predicted_bias: f64, predicted_var: f64) -> Self {
        let m = Moments::of(values);
        let bias = m.mean - truth;
        Self {
            label: label.into(),
            mean: m.mean,
            var: m.var,
            bias,
            predicted_bias,
            predicted_var,
            var_ratio: m.var / predicted_var,
            bias_ratio: bias / predicted_bias,
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis,
        }
    }
}

/// Monte Carlo summary at one evaluation point.
///
/// The top-level statistics describe the headline estimator named in
/// `estimator`; `components` holds the same statistics for the companion
/// estimators evaluated on the same replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub estimator: String,
    pub point: Point2,
    pub reps: usize,
    pub n: usize,
    pub bandwidth: f64,
    pub truth: f64,
    pub mean_est: f64,
    pub var_est: f64,
    pub bias_est: f64,
    pub predicted_bias: f64,
    pub predicted_var: f64,
    pub var_ratio: f64,
    pub bias_ratio: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Empirical variances of the four single-tag estimators, tag order.
    pub per_tag_var: [f64; 4],
    pub components: Vec<EstimatorStats>,
    /// Correlation between the `--` and `-+` density replicates.
    pub cross_corr_mm_mp: Option<f64>,
    /// Root mean squared distance between estimated and true optimal weights.
    pub weight_rmse: Option<f64>,
}

impl MCReport {
    fn from_headline(
        stats: &EstimatorStats,
        point: Point2,
        reps: usize,
        n: usize,
        bandwidth: f64,
        truth: f64,
        per_tag_var: [f64; 4],
    ) -> Self {
        Self {
            estimator: stats.label.clone(),
            point,
            reps,
            n,
            bandwidth,
            truth,
            mean_est: stats.mean,
            var_est: stats.var,
            bias_est: stats.bias,
            predicted_bias: stats.predicted_bias,
            predicted_var: stats.predicted_var,
            var_ratio: stats.var_ratio,
            bias_ratio: stats.bias_ratio,
            skewness: stats.skewness,
            excess_kurtosis: stats.excess_kurtosis,
            per_tag_var,
            components: Vec::new(),
            cross_corr_mm_mp: None,
            weight_rmse: None,
        }
    }

    pub fn component(&self, label: &str) -> Option<&EstimatorStats> {
        self.components.iter().find(|c| c.label == label)
    }
}

/// Settings of a density Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Simulation example, 1 or 2.
    pub example: u8,
    pub n: usize,
    pub h: f64,
    /// Weight bandwidth; `None` means `n^{-1/6}`.
    pub h_tilde: Option<f64>,
    /// Truncation level; `None` means `1 / ln n`.
    pub eps: Option<f64>,
    pub reps: usize,
    pub points: Vec<Point2>,
    pub seed: u64,
}

impl McConfig {
    pub fn resolved_h_tilde(&self) -> f64 {
        self.h_tilde.unwrap_or_else(|| default_h_tilde(self.n))
    }

    pub fn resolved_eps(&self) -> f64 {
        self.eps.unwrap_or_else(|| default_eps(self.n))
    }
}

fn model_for(example: u8) -> Result<Box<dyn TrueModel>> {
    Bundled::example(example)
        .map(Bundled::model)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown example {example}; expected 1 or 2")))
}

fn check_sizes(n: usize, reps: usize, points: &[Point2]) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    if reps < MIN_REPS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_REPS} replications, got {reps}")));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    Ok(())
}

/// Per-replication values at one point.
#[derive(Debug, Clone, Copy)]
struct DensityDraw {
    auto: f64,
    oracle: Option<f64>,
    tags: [f64; 4],
    weights: WeightVec,
}

const ORACLE_LABEL: &str = "combined_true_weights";
const AUTO_LABEL: &str = "combined_estimated_weights";

/// Density Monte Carlo: combined estimator with estimated weights (headline),
/// combined estimator with the true optimal weights, and the four single-tag
/// estimators.
pub fn run_mc(cfg: &McConfig) -> Result<Vec<MCReport>> {
    check_sizes(cfg.n, cfg.reps, &cfg.points)?;
    let model = model_for(cfg.example)?;
    let est_cfg = EstimatorConfig::for_sample_size(cfg.h, cfg.n)
        .with_h_tilde(cfg.resolved_h_tilde())
        .with_eps(cfg.resolved_eps());
    est_cfg.validate()?;
    let kernel = est_cfg.kernel.clone();

    let oracle_weights: Vec<Option<WeightVec>> = cfg
        .points
        .iter()
        .map(|&x| optimal_weights(&quadrant_probs_exact(model.as_ref(), x)).ok())
        .collect();

    let seed = Seed(cfg.seed);
    let draws: Vec<Vec<DensityDraw>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<DensityDraw>> {
            let sim = gen_example(cfg.example, cfg.n, seed, r as u64)?;
            let d = Deconvolver::new(sim.observed, est_cfg.clone())?;
            cfg.points
                .iter()
                .zip(&oracle_weights)
                .map(|(&x, ow)| {
                    let est = d.point_estimates(x);
                    let auto = auto_from_estimates(&est, est_cfg.eps)?;
                    Ok(DensityDraw {
                        auto: auto.value,
                        oracle: ow.map(|w| combine(&est.density, &w)),
                        tags: est.density,
                        weights: auto.weights,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let (h, n) = (cfg.h, cfg.n);
    let mut reports = Vec::with_capacity(cfg.points.len());
    for (pi, &x) in cfg.points.iter().enumerate() {
        let column: Vec<DensityDraw> = draws.iter().map(|rep| rep[pi]).collect();
        let truth = model.density(x);
        let bias = predicted_bias(model.as_ref(), &kernel, h, h, x);
        let probs = quadrant_probs_exact(model.as_ref(), x);

        let tag_values: Vec<Vec<f64>> =
            (0..4).map(|i| column.iter().map(|d| d.tags[i]).collect()).collect();
        let tag_stats: Vec<EstimatorStats> = QuadrantTag::ALL
            .iter()
            .map(|&tag| {
                let pv = predicted_var(model.as_ref(), &kernel, &WeightVec::single(tag), n, h, h, x);
                EstimatorStats::new(format!("f{}", tag.label()), &tag_values[tag.index()], truth, bias, pv)
            })
            .collect();
        let per_tag_var = [tag_stats[0].var, tag_stats[1].var, tag_stats[2].var, tag_stats[3].var];

        let optimal_var = optimal_predicted_var(&probs, &kernel, n, h);
        let auto_values: Vec<f64> = column.iter().map(|d| d.auto).collect();
        let auto_stats = EstimatorStats::new(AUTO_LABEL, &auto_values, truth, bias, optimal_var);

        let mut report = MCReport::from_headline(&auto_stats, x, cfg.reps, n, h, truth, per_tag_var);
        if let Some(w) = oracle_weights[pi] {
            let values: Vec<f64> = column.iter().map(|d| d.oracle.expect("oracle weights")).collect();
            let pv = predicted_var(model.as_ref(), &kernel, &w, n, h, h, x);
            report.components.push(EstimatorStats::new(ORACLE_LABEL, &values, truth, bias, pv));
            let sq: f64 = column
                .iter()
                .map(|d| {
                    d.weights
                        .to_array()
                        .iter()
                        .zip(w.to_array())
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                })
                .sum();
            report.weight_rmse = Some((sq / cfg.reps as f64).sqrt());
        }
        report.components.extend(tag_stats);
        let cov = covariance(&tag_values[0], &tag_values[1]);
        report.cross_corr_mm_mp = Some(cov / (per_tag_var[0] * per_tag_var[1]).sqrt());
        reports.push(report);
    }
    Ok(reports)
}

fn optimal_predicted_var(probs: &QuadrantProbs, kernel: &ProductKernel2D, n: usize, h: f64) -> f64 {
    match variance_functionals(probs, &WeightVec::uniform(), kernel) {
        Ok(v) => v.sigma2 / (n as f64 * h.powi(6)),
        Err(_) => f64::NAN,
    }
}

/// Quadrant-probability Monte Carlo: one report per point and tag.
pub fn run_mc_quadrant(
    example: u8,
    n: usize,
    h_tilde: Option<f64>,
    reps: usize,
    points: &[Point2],
    seed: u64,
) -> Result<Vec<MCReport>> {
    check_sizes(n, reps, points)?;
    let model = model_for(example)?;
    let h_tilde = h_tilde.unwrap_or_else(|| default_h_tilde(n));
    let est_cfg = EstimatorConfig::for_sample_size(h_tilde, n).with_h_tilde(h_tilde);
    est_cfg.validate()?;
    let kernel = est_cfg.kernel.clone();

    let seed = Seed(seed);
    let draws: Vec<Vec<[f64; 4]>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<[f64; 4]>> {
            let sim = gen_example(example, n, seed, r as u64)?;
            let d = Deconvolver::new(sim.observed, est_cfg.clone())?;
            Ok(points.iter().map(|&x| d.quadrant_probs(x)).collect())
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(points.len() * 4);
    for (pi, &x) in points.iter().enumerate() {
        let probs = quadrant_probs_exact(model.as_ref(), x);
        let columns: Vec<Vec<f64>> = (0..4).map(|i| draws.iter().map(|rep| rep[pi][i]).collect()).collect();
        let per_tag_var = [0, 1, 2, 3].map(|i| Moments::of(&columns[i]).var);
        for tag in QuadrantTag::ALL {
            let stats = EstimatorStats::new(
                format!("F{}", tag.label()),
                &columns[tag.index()],
                probs.get(tag),
                predicted_quadrant_bias(model.as_ref(), &kernel, h_tilde, tag, x),
                predicted_quadrant_var(model.as_ref(), &kernel, h_tilde, n, tag, x),
            );
            reports.push(MCReport::from_headline(&stats, x, reps, n, h_tilde, probs.get(tag), per_tag_var));
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BetaProduct;

    #[test]
    fn predicted_bias_example1() {
        let m = BetaProduct::example1();
        let k = ProductKernel2D::biweight();
        let x = Point2::new(1.0, 1.0);
        let b = predicted_bias(&m, &k, 0.5, 0.5, x);
        assert!((b + 0.396_825_4).abs() < 1e-6, "{b}");
        let b2 = predicted_bias(&m, &k, 1.0, 1.0, x);
        assert!((b2 - 4.0 * b).abs() < 1e-12);
        let flat = predicted_bias(&crate::model::UniformSquare, &k, 0.5, 0.5, Point2::new(0.5, 0.5));
        assert_eq!(flat, 0.0);
    }

    #[test]
    fn predicted_var_examples() {
        let m = BetaProduct::example1();
        let k = ProductKernel2D::biweight();
        let x = Point2::new(1.0, 1.0);
        let v = predicted_var(&m, &k, &WeightVec::uniform(), 20_000, 0.5, 0.5, x);
        let want = (1.0 / 16.0) * (15.0f64 / 7.0).powi(2) / 312.5;
        assert!((v - want).abs() < 1e-12);
        assert!((v - 9.184e-4).abs() < 1e-6);
        let single = predicted_var(&m, &k, &WeightVec::single(QuadrantTag::PlusPlus), 20_000, 0.5, 0.5, x);
        assert!((single - 4.0 * v).abs() < 1e-12);
        let double_n = predicted_var(&m, &k, &WeightVec::uniform(), 40_000, 0.5, 0.5, x);
        assert!((double_n - v / 2.0).abs() < 1e-16);
    }

    #[test]
    fn predicted_quadrant_var_sums() {
        let m = BetaProduct::example1();
        let k = ProductKernel2D::biweight();
        let x = Point2::new(0.8, 1.3);
        let (n, h) = (10_000, 0.2);
        let total: f64 = QuadrantTag::ALL
            .iter()
            .map(|&t| predicted_quadrant_var(&m, &k, h, n, t, x))
            .sum();
        let want = (5.0f64 / 7.0).powi(2) / (n as f64 * h * h);
        assert!((total - want).abs() < 1e-12 * want);
        let center = predicted_quadrant_var(&m, &k, h, n, QuadrantTag::MinusMinus, Point2::new(1.0, 1.0));
        assert!((center - 0.25 * want).abs() < 1e-12 * want);
    }

    #[test]
    fn moments_of_known_values() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.var - 5.0 / 3.0).abs() < 1e-15);
        assert!(m.skewness.abs() < 1e-15);
        assert!((m.excess_kurtosis - (-1.36)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_sizes() {
        let cfg = McConfig {
            example: 1,
            n: 100,
            h: 0.4,
            h_tilde: None,
            eps: None,
            reps: 10,
            points: vec![Point2::new(1.0, 1.0)],
            seed: 1,
        };
        assert!(run_mc(&cfg).is_err());
        assert!(run_mc(&McConfig { example: 3, reps: 60, ..cfg.clone() }).is_err());
        assert!(run_mc(&McConfig { reps: 60, points: vec![], ..cfg }).is_err());
    }
}

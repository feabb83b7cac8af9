//! Plug-in inversion estimators built on a product-kernel estimate of the
//! observed density.
//!
//! For each observation and each axis, only the integer shifts that bring the
//! evaluation point within one bandwidth of the observation contribute, so
//! every lattice sum is finite. Shifts with offset `m <= 0` feed the `-`
//! estimators and `m >= 1` the `+` estimators. Because the kernel is a
//! product, the per-observation double sum factors into two axis sums.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AxisSign, Point2, QuadrantProbs, QuadrantTag};
use crate::kernels::{check_bandwidth, Kernel1D, ProductKernel2D};
use crate::weights::{optimal_weights, WeightVec, SIMPLEX_TOL};

/// Observations `X = Y + Z`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample2D {
    points: Vec<Point2>,
}

impl Sample2D {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "observation {i} has non-finite coordinates ({}, {})",
                p.x1, p.x2
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(min1, max1, min2, max2)`, or `None` for an empty sample.
    pub fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let first = self.points.first()?;
        Some(self.points.iter().fold(
            (first.x1, first.x1, first.x2, first.x2),
            |(a, b, c, d), p| (a.min(p.x1), b.max(p.x1), c.min(p.x2), d.max(p.x2)),
        ))
    }
}

impl From<Vec<Point2>> for Sample2D {
    fn from(points: Vec<Point2>) -> Self {
        Self { points }
    }
}

/// Weight bandwidth `n^{-1/6}`.
pub fn default_h_tilde(n: usize) -> f64 {
    (n.max(1) as f64).powf(-1.0 / 6.0)
}

/// Truncation level `1 / ln n`, or `0.5` when that is not below one (`n < 3`).
pub fn default_eps(n: usize) -> f64 {
    let e = 1.0 / (n as f64).ln();
    if e.is_finite() && e > 0.0 && e < 1.0 {
        e
    } else {
        0.5
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Density bandwidth on the first axis.
    pub h1: f64,
    /// Density bandwidth on the second axis.
    pub h2: f64,
    /// Bandwidth of the quadrant-probability estimators, both axes.
    pub h_tilde: f64,
    /// Lower truncation level for quadrant-probability estimates.
    pub eps: f64,
    pub kernel: ProductKernel2D,
}

impl EstimatorConfig {
    /// Equal density bandwidths, biweight kernel, default `h_tilde` and `eps`
    /// for a sample of size `n`.
    pub fn for_sample_size(h: f64, n: usize) -> Self {
        Self {
            h1: h,
            h2: h,
            h_tilde: default_h_tilde(n),
            eps: default_eps(n),
            kernel: ProductKernel2D::biweight(),
        }
    }

    pub fn with_bandwidths(mut self, h1: f64, h2: f64) -> Self {
        self.h1 = h1;
        self.h2 = h2;
        self
    }

    pub fn with_h_tilde(mut self, h_tilde: f64) -> Self {
        self.h_tilde = h_tilde;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_kernel(mut self, kernel: ProductKernel2D) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_bandwidth(self.h1)?;
        check_bandwidth(self.h2)?;
        check_bandwidth(self.h_tilde)?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation level {} is outside (0, 1)",
                self.eps
            )));
        }
        Ok(())
    }

    /// Set when a density bandwidth reaches 1/2. Shifted kernel windows of
    /// one observation may then overlap; estimates are still computed.
    pub fn wide_bandwidth(&self) -> bool {
        self.h1.max(self.h2) >= 0.5
    }
}

/// Integer shifts `i` of the tag's index set (`i >= 0` for `Minus`, `i >= 1`
/// for `Plus`) with `|x ∓ i - obs| <= h`. May be empty.
pub fn shift_range(sign: AxisSign, x: f64, obs: f64, h: f64) -> RangeInclusive<i64> {
    match sign {
        AxisSign::Minus => {
            let lo = ((x - obs - h).ceil() as i64).max(0);
            let hi = (x - obs + h).floor() as i64;
            lo..=hi
        }
        AxisSign::Plus => {
            let lo = ((obs - x - h).ceil() as i64).max(1);
            let hi = (obs - x + h).floor() as i64;
            lo..=hi
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KernelPart {
    Value,
    Derivative,
}

/// `(Σ_{i>=0} k((x-i-obs)/h), Σ_{i>=1} k((x+i-obs)/h))`
#[inline]
fn axis_sums(kernel: &Kernel1D, part: KernelPart, x: f64, obs: f64, h: f64) -> (f64, f64) {
    let d = obs - x;
    let first = (d - h).ceil() as i64;
    let last = (d + h).floor() as i64;
    let mut minus = 0.0;
    let mut plus = 0.0;
    for m in first..=last {
        let u = (x + m as f64 - obs) / h;
        let v = match part {
            KernelPart::Value => kernel.eval(u),
            KernelPart::Derivative => kernel.deriv(u),
        };
        if m <= 0 {
            minus += v;
        } else {
            plus += v;
        }
    }
    (minus, plus)
}

/// All eight plug-in estimates at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEstimates {
    /// Density estimates in tag order `--, -+, +-, ++`.
    pub density: [f64; 4],
    /// Untruncated quadrant-probability estimates in tag order.
    pub quadrant: [f64; 4],
}

/// Per-observation axis-1 sums at a fixed first coordinate.
pub(crate) struct RowCache {
    density: Vec<(usize, f64, f64)>,
    quadrant: Option<Vec<(usize, f64, f64)>>,
}

/// Combined estimate with weights computed from truncated quadrant estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoEstimate {
    pub value: f64,
    pub weights: WeightVec,
    /// Truncated quadrant-probability estimates the weights were built from.
    pub probs: QuadrantProbs,
}

pub fn truncate(v: f64, eps: f64) -> f64 {
    v.max(eps).min(1.0)
}

/// Inversion estimators for one sample and configuration.
#[derive(Debug, Clone)]
pub struct Deconvolver {
    sample: Sample2D,
    cfg: EstimatorConfig,
}

impl Deconvolver {
    pub fn new(sample: Sample2D, cfg: EstimatorConfig) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::NoData);
        }
        cfg.validate()?;
        Ok(Self { sample, cfg })
    }

    pub fn sample(&self) -> &Sample2D {
        &self.sample
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.sample.len()
    }

    fn part_bandwidths(&self, part: KernelPart) -> (f64, f64) {
        match part {
            KernelPart::Derivative => (self.cfg.h1, self.cfg.h2),
            KernelPart::Value => (self.cfg.h_tilde, self.cfg.h_tilde),
        }
    }

    /// `(observation index, minus sum, plus sum)` along axis 1 at `x1`, for
    /// observations with a nonzero contribution.
    fn axis1_entries(&self, x1: f64, part: KernelPart) -> Vec<(usize, f64, f64)> {
        let h1 = self.part_bandwidths(part).0;
        let k1 = &self.cfg.kernel.k1;
        self.sample
            .points()
            .iter()
            .enumerate()
            .filter_map(|(idx, p)| {
                let (am, ap) = axis_sums(k1, part, x1, p.x1, h1);
                (am != 0.0 || ap != 0.0).then_some((idx, am, ap))
            })
            .collect()
    }

    fn accumulate(&self, entries: &[(usize, f64, f64)], x2: f64, part: KernelPart) -> [f64; 4] {
        let h2 = self.part_bandwidths(part).1;
        let k2 = &self.cfg.kernel.k2;
        let pts = self.sample.points();
        let mut acc = [0.0; 4];
        for &(idx, am, ap) in entries {
            let (bm, bp) = axis_sums(k2, part, x2, pts[idx].x2, h2);
            acc[0] += am * bm;
            acc[1] += am * bp;
            acc[2] += ap * bm;
            acc[3] += ap * bp;
        }
        acc
    }

    fn raw_tag_sums(&self, x: Point2, part: KernelPart) -> [f64; 4] {
        self.accumulate(&self.axis1_entries(x.x1, part), x.x2, part)
    }

    fn scale_densities(&self, acc: [f64; 4]) -> [f64; 4] {
        let s = self.density_scale();
        let mut out = [0.0; 4];
        for tag in QuadrantTag::ALL {
            out[tag.index()] = tag.density_sign() * s * acc[tag.index()];
        }
        out
    }

    /// Axis-1 work for all nodes sharing the first coordinate `x1`.
    pub(crate) fn row_cache(&self, x1: f64, with_quadrant: bool) -> RowCache {
        RowCache {
            density: self.axis1_entries(x1, KernelPart::Derivative),
            quadrant: with_quadrant.then(|| self.axis1_entries(x1, KernelPart::Value)),
        }
    }

    /// Estimates at `(x1, x2)` where `cache` was built for `x1`. Quadrant
    /// estimates are zero unless the cache holds them.
    pub(crate) fn estimates_in_row(&self, cache: &RowCache, x2: f64) -> PointEstimates {
        let density = self.scale_densities(self.accumulate(&cache.density, x2, KernelPart::Derivative));
        let quadrant = match &cache.quadrant {
            Some(entries) => {
                let s = self.quadrant_scale();
                self.accumulate(entries, x2, KernelPart::Value).map(|v| v * s)
            }
            None => [0.0; 4],
        };
        PointEstimates { density, quadrant }
    }

    fn density_scale(&self) -> f64 {
        let (h1, h2) = (self.cfg.h1, self.cfg.h2);
        1.0 / (self.n() as f64 * h1 * h1 * h2 * h2)
    }

    fn quadrant_scale(&self) -> f64 {
        1.0 / (self.n() as f64 * self.cfg.h_tilde * self.cfg.h_tilde)
    }

    /// The four density estimates at `x`, in tag order. Values may be
    /// negative.
    pub fn densities(&self, x: Point2) -> [f64; 4] {
        self.scale_densities(self.raw_tag_sums(x, KernelPart::Derivative))
    }

    /// The four untruncated quadrant-probability estimates at `x`.
    pub fn quadrant_probs(&self, x: Point2) -> [f64; 4] {
        let s = self.quadrant_scale();
        self.raw_tag_sums(x, KernelPart::Value).map(|v| v * s)
    }

    pub fn point_estimates(&self, x: Point2) -> PointEstimates {
        PointEstimates {
            density: self.densities(x),
            quadrant: self.quadrant_probs(x),
        }
    }

    /// Density estimate from the `tag` inversion series.
    pub fn density(&self, tag: QuadrantTag, x: Point2) -> f64 {
        self.densities(x)[tag.index()]
    }

    /// Quadrant-probability estimate for `tag`, bandwidth `h_tilde`.
    pub fn quadrant_prob(&self, tag: QuadrantTag, x: Point2) -> f64 {
        self.quadrant_probs(x)[tag.index()]
    }

    /// `min(max(F, eps), 1)`
    pub fn quadrant_prob_truncated(&self, tag: QuadrantTag, x: Point2) -> f64 {
        truncate(self.quadrant_prob(tag, x), self.cfg.eps)
    }

    pub fn truncated_probs(&self, x: Point2) -> QuadrantProbs {
        QuadrantProbs::from_array(self.quadrant_probs(x).map(|v| truncate(v, self.cfg.eps)))
    }

    /// Convex combination of the four density estimates.
    pub fn combined(&self, x: Point2, t: &WeightVec) -> Result<f64> {
        check_convex(t)?;
        Ok(combine(&self.densities(x), t))
    }

    /// Combination with weights estimated at `x` from truncated quadrant
    /// estimates.
    pub fn combined_auto(&self, x: Point2) -> Result<AutoEstimate> {
        let est = self.point_estimates(x);
        auto_from_estimates(&est, self.cfg.eps)
    }
}

pub(crate) fn check_convex(t: &WeightVec) -> Result<()> {
    let s = t.sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotConvex(s));
    }
    Ok(())
}

pub(crate) fn combine(densities: &[f64; 4], t: &WeightVec) -> f64 {
    densities.iter().zip(t.to_array()).map(|(d, w)| d * w).sum()
}

pub(crate) fn auto_from_estimates(est: &PointEstimates, eps: f64) -> Result<AutoEstimate> {
    let probs = QuadrantProbs::from_array(est.quadrant.map(|v| truncate(v, eps)));
    let weights = optimal_weights(&probs)?;
    Ok(AutoEstimate {
        value: combine(&est.density, &weights),
        weights,
        probs,
    })
}

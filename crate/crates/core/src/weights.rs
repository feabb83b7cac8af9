//! Variance-optimal convex weights for the four inversion estimators.
//!
//! Minimizing `Σ aᵢ tᵢ²` over the simplex gives `tᵢ ∝ Π_{j≠i} aⱼ` with
//! minimum `Π aⱼ / Σᵢ Π_{j≠i} aⱼ`. With `aᵢ` the quadrant probabilities this
//! is the leading variance term of the combined density estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{QuadrantProbs, QuadrantTag};
use crate::kernels::ProductKernel2D;

/// Tolerance on `t1 + t2 + t3 + t4 = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Below this value leave-one-out products are formed in log space.
const LOG_SPACE_THRESHOLD: f64 = 1e-8;

/// Convex weights for the `--, -+, +-, ++` estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVec {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
}

impl WeightVec {
    pub fn new(t: [f64; 4]) -> Result<Self> {
        let sum: f64 = t.iter().sum();
        if !t.iter().all(|v| v.is_finite()) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotConvex(sum));
        }
        Ok(Self::from_array_unchecked(t))
    }

    fn from_array_unchecked(t: [f64; 4]) -> Self {
        Self { t1: t[0], t2: t[1], t3: t[2], t4: t[3] }
    }

    pub fn uniform() -> Self {
        Self::from_array_unchecked([0.25; 4])
    }

    /// All weight on a single estimator.
    pub fn single(tag: QuadrantTag) -> Self {
        let mut t = [0.0; 4];
        t[tag.index()] = 1.0;
        Self::from_array_unchecked(t)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.t1, self.t2, self.t3, self.t4]
    }

    pub fn sum(&self) -> f64 {
        self.t1 + self.t2 + self.t3 + self.t4
    }
}

fn leave_one_out_products(a: &[f64]) -> (Vec<f64>, f64) {
    let m = a.len();
    let loo: Vec<f64> = (0..m)
        .map(|i| a.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product())
        .collect();
    let full: f64 = a.iter().product();
    (loo, full)
}

/// Minimizes `Σ aᵢ tᵢ²` subject to `Σ tᵢ = 1`.
///
/// Returns the minimizer and the minimum value.
pub fn min_weighted_quadratic(a: &[f64]) -> Result<(Vec<f64>, f64)> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty coefficient list".into()));
    }
    if let Some(&bad) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidArgument(format!("coefficient {bad} is not strictly positive")));
    }

    if a.iter().any(|&v| v < LOG_SPACE_THRESHOLD) {
        let logs: Vec<f64> = a.iter().map(|v| v.ln()).collect();
        let total: f64 = logs.iter().sum();
        let loo: Vec<f64> = logs.iter().map(|l| total - l).collect();
        let top = loo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<f64> = loo.iter().map(|l| (l - top).exp()).collect();
        let s: f64 = scaled.iter().sum();
        let t = scaled.iter().map(|v| v / s).collect();
        let min = (total - top).exp() / s;
        return Ok((t, min));
    }

    let (loo, full) = leave_one_out_products(a);
    let s: f64 = loo.iter().sum();
    Ok((loo.iter().map(|p| p / s).collect(), full / s))
}

fn check_probs(probs: &QuadrantProbs) -> Result<[f64; 4]> {
    let p = probs.to_array();
    if let Some(&bad) = p.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::DegenerateQuadrant(bad));
    }
    Ok(p)
}

/// Weights minimizing the leading variance term for the given quadrant
/// probabilities. Zero probabilities are rejected; callers are expected to
/// pass truncated estimates.
pub fn optimal_weights(probs: &QuadrantProbs) -> Result<WeightVec> {
    let p = check_probs(probs)?;
    let (t, _) = min_weighted_quadratic(&p)?;
    Ok(WeightVec::from_array_unchecked([t[0], t[1], t[2], t[3]]))
}

/// Quantities of the variance expansion at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceFunctionals {
    /// `Σ tᵢ² pᵢ` for the supplied weights.
    pub variance_form: f64,
    /// Reciprocal of the sum of the four triple products.
    pub normalizer: f64,
    /// Product of the four quadrant probabilities.
    pub probs_product: f64,
    /// `normalizer · probs_product · ∫w1'² · ∫w2'²`
    pub sigma2: f64,
}

/// `Σ tᵢ² pᵢ`
pub fn variance_form(probs: &QuadrantProbs, t: &WeightVec) -> f64 {
    probs
        .to_array()
        .iter()
        .zip(t.to_array())
        .map(|(p, w)| w * w * p)
        .sum()
}

pub fn variance_functionals(
    probs: &QuadrantProbs,
    t: &WeightVec,
    kernel: &ProductKernel2D,
) -> Result<VarianceFunctionals> {
    let p = check_probs(probs)?;
    let (loo, full) = leave_one_out_products(&p);
    let normalizer = 1.0 / loo.iter().sum::<f64>();
    Ok(VarianceFunctionals {
        variance_form: variance_form(probs, t),
        normalizer,
        probs_product: full,
        sigma2: normalizer * full * kernel.k1.rough_dw() * kernel.k2.rough_dw(),
    })
}

//! Exact forward convolution with Uniform([0,1)²) noise and the four
//! lattice-sum inversions applied to an exactly known `g`.
//!
//! The observed density is `g(x) = P(Y ∈ (x1-1, x1] × (x2-1, x2])`. Summing
//! `g` over integer shifts recovers each quadrant probability; summing its
//! mixed partial recovers the density. For compactly supported models the
//! series are finite.

use crate::error::{Error, Result};
use crate::geom::{AxisSign, Point2, QuadrantProbs, QuadrantTag};
use crate::model::TrueModel;

/// `F(x) - F(x1, x2-1) - F(x1-1, x2) + F(x1-1, x2-1)`.
pub fn forward_g(model: &dyn TrueModel, x: Point2) -> f64 {
    let (a, b) = (x.x1, x.x2);
    model.cdf(Point2::new(a, b)) - model.cdf(Point2::new(a, b - 1.0)) - model.cdf(Point2::new(a - 1.0, b))
        + model.cdf(Point2::new(a - 1.0, b - 1.0))
}

/// Mixed partial `∂²g/∂x1∂x2`, which is the same alternating sum applied to
/// the density.
pub fn forward_g_mixed_partial(model: &dyn TrueModel, x: Point2) -> f64 {
    let (a, b) = (x.x1, x.x2);
    model.density(Point2::new(a, b)) - model.density(Point2::new(a, b - 1.0))
        - model.density(Point2::new(a - 1.0, b))
        + model.density(Point2::new(a - 1.0, b - 1.0))
}

/// Four-point central difference of the mixed partial.
pub fn mixed_partial_fd<G: Fn(Point2) -> f64>(g: G, x: Point2, step: f64) -> f64 {
    let p = |d1: f64, d2: f64| g(Point2::new(x.x1 + d1, x.x2 + d2));
    (p(step, step) - p(step, -step) - p(-step, step) + p(-step, -step)) / (4.0 * step * step)
}

pub fn quadrant_probs_exact(model: &dyn TrueModel, x: Point2) -> QuadrantProbs {
    let f = model.cdf(x);
    let f1 = model.marginal_cdf1(x.x1);
    let f2 = model.marginal_cdf2(x.x2);
    QuadrantProbs {
        mm: f,
        mp: f1 - f,
        pm: f2 - f,
        pp: f - f1 - f2 + 1.0,
    }
}

/// Signed integer offsets for one axis: `-i, i >= 0` or `+i, i >= 1`.
fn axis_offsets(sign: AxisSign, bound: i64) -> impl Iterator<Item = f64> {
    let (first, dir) = match sign {
        AxisSign::Minus => (0, -1.0),
        AxisSign::Plus => (1, 1.0),
    };
    (first..=bound).map(move |i| dir * i as f64)
}

fn lattice_sum<G: Fn(Point2) -> f64>(g: G, tag: QuadrantTag, x: Point2, shift_bound: i64) -> Result<f64> {
    if shift_bound < 1 {
        return Err(Error::ShiftBound(shift_bound));
    }
    let (s1, s2) = tag.axis_signs();
    let mut total = 0.0;
    for d1 in axis_offsets(s1, shift_bound) {
        for d2 in axis_offsets(s2, shift_bound) {
            total += g(Point2::new(x.x1 + d1, x.x2 + d2));
        }
    }
    Ok(total)
}

/// Quadrant probability for `tag` at `x` as a lattice sum of `g`; e.g.
/// `F--(x) = Σ_{i,j>=0} g(x1-i, x2-j)`.
pub fn invert_quadrant_series<G: Fn(Point2) -> f64>(
    g: G,
    tag: QuadrantTag,
    x: Point2,
    shift_bound: i64,
) -> Result<f64> {
    lattice_sum(g, tag, x, shift_bound)
}

/// Density at `x` as the signed lattice sum of the mixed partial of `g`.
pub fn invert_density_series<G: Fn(Point2) -> f64>(
    d2g: G,
    tag: QuadrantTag,
    x: Point2,
    shift_bound: i64,
) -> Result<f64> {
    Ok(tag.density_sign() * lattice_sum(d2g, tag, x, shift_bound)?)
}

//! Analytic bivariate models with known density and distribution function.
//!
//! These serve as ground truth: they drive the simulation examples and let
//! the estimators be checked against exact quadrant probabilities and
//! densities.

use rand::distributions::Open01;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::geom::Point2;

/// Axis-aligned bounding box of a model's support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo1: f64,
    pub hi1: f64,
    pub lo2: f64,
    pub hi2: f64,
}

impl SupportBox {
    pub fn contains(&self, y: Point2) -> bool {
        (self.lo1..=self.hi1).contains(&y.x1) && (self.lo2..=self.hi2).contains(&y.x2)
    }

    pub fn max_extent(&self) -> f64 {
        (self.hi1 - self.lo1).max(self.hi2 - self.lo2)
    }

    /// Number of integer shifts after which the convolved density `g`
    /// vanishes for any evaluation point within one unit of the box.
    pub fn shift_bound(&self) -> i64 {
        self.max_extent().ceil() as i64 + 2
    }
}

/// A bivariate distribution with analytic density and cdf.
pub trait TrueModel: Send + Sync {
    fn name(&self) -> &str;

    fn density(&self, y: Point2) -> f64;

    /// `P(Y1 <= y1, Y2 <= y2)`
    fn cdf(&self, y: Point2) -> f64;

    fn marginal_cdf1(&self, y1: f64) -> f64;

    fn marginal_cdf2(&self, y2: f64) -> f64;

    fn support_box(&self) -> SupportBox;

    /// Whether the density is continuously differentiable on the plane.
    fn is_smooth(&self) -> bool;

    /// `(f11, f22)` at `y`. Central differences with step `1e-3` unless a
    /// model supplies closed forms.
    fn density_second_partials(&self, y: Point2) -> (f64, f64) {
        let h = 1e-3;
        let f0 = self.density(y);
        let f11 = (self.density(Point2::new(y.x1 + h, y.x2)) - 2.0 * f0
            + self.density(Point2::new(y.x1 - h, y.x2)))
            / (h * h);
        let f22 = (self.density(Point2::new(y.x1, y.x2 + h)) - 2.0 * f0
            + self.density(Point2::new(y.x1, y.x2 - h)))
            / (h * h);
        (f11, f22)
    }

    /// Draws one point. Bundled models consume a fixed number of uniforms
    /// per draw so that seeded streams stay aligned.
    fn sample(&self, rng: &mut dyn RngCore) -> Point2;
}

/// Beta(3,3) density `30 v² (1-v)²` on `[0, 1]`.
pub fn beta33_pdf(v: f64) -> f64 {
    if !(0.0..=1.0).contains(&v) {
        return 0.0;
    }
    30.0 * v * v * (1.0 - v) * (1.0 - v)
}

/// Beta(3,3) cdf `10 v³ - 15 v⁴ + 6 v⁵`, clamped outside `[0, 1]`.
pub fn beta33_cdf(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if v >= 1.0 {
        1.0
    } else {
        v * v * v * (10.0 + v * (-15.0 + 6.0 * v))
    }
}

fn beta33_pdf_second(v: f64) -> f64 {
    if !(0.0..=1.0).contains(&v) {
        return 0.0;
    }
    60.0 * (1.0 - 6.0 * v + 6.0 * v * v)
}

/// Median of five independent Uniform(0,1) draws, which is Beta(3,3).
pub fn beta33_from_uniforms(mut u: [f64; 5]) -> f64 {
    u.sort_by(|a, b| a.total_cmp(b));
    u[2]
}

/// One Beta(3,3) draw from five open-interval uniforms.
pub fn sample_beta33<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let mut u = [0.0; 5];
    for slot in &mut u {
        *slot = rng.sample(Open01);
    }
    beta33_from_uniforms(u)
}

/// Uniform distribution on the unit square.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSquare;

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

impl TrueModel for UniformSquare {
    fn name(&self) -> &str {
        "uniform-square"
    }

    fn density(&self, y: Point2) -> f64 {
        if (0.0..=1.0).contains(&y.x1) && (0.0..=1.0).contains(&y.x2) {
            1.0
        } else {
            0.0
        }
    }

    fn cdf(&self, y: Point2) -> f64 {
        clamp01(y.x1) * clamp01(y.x2)
    }

    fn marginal_cdf1(&self, y1: f64) -> f64 {
        clamp01(y1)
    }

    fn marginal_cdf2(&self, y2: f64) -> f64 {
        clamp01(y2)
    }

    fn support_box(&self) -> SupportBox {
        SupportBox { lo1: 0.0, hi1: 1.0, lo2: 0.0, hi2: 1.0 }
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn density_second_partials(&self, _y: Point2) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Point2 {
        Point2::new(rng.gen::<f64>(), rng.gen::<f64>())
    }
}

/// Independent coordinates `Y_i = shift_i + scale_i V_i` with `V_i ~ Beta(3,3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaProduct {
    pub shift: (f64, f64),
    pub scale: (f64, f64),
}

impl BetaProduct {
    pub fn new(shift: (f64, f64), scale: (f64, f64)) -> Self {
        Self { shift, scale }
    }

    /// Both coordinates `0.25 + 1.5 V`, supported on `[0.25, 1.75]²`.
    pub fn example1() -> Self {
        Self::new((0.25, 0.25), (1.5, 1.5))
    }

    /// Unscaled Beta(3,3) pair on the unit square.
    pub fn unit() -> Self {
        Self::new((0.0, 0.0), (1.0, 1.0))
    }

    fn v1(&self, y1: f64) -> f64 {
        (y1 - self.shift.0) / self.scale.0
    }

    fn v2(&self, y2: f64) -> f64 {
        (y2 - self.shift.1) / self.scale.1
    }

    fn marginal_pdf1(&self, y1: f64) -> f64 {
        beta33_pdf(self.v1(y1)) / self.scale.0
    }

    fn marginal_pdf2(&self, y2: f64) -> f64 {
        beta33_pdf(self.v2(y2)) / self.scale.1
    }
}

impl TrueModel for BetaProduct {
    fn name(&self) -> &str {
        "beta33-product"
    }

    fn density(&self, y: Point2) -> f64 {
        self.marginal_pdf1(y.x1) * self.marginal_pdf2(y.x2)
    }

    fn cdf(&self, y: Point2) -> f64 {
        self.marginal_cdf1(y.x1) * self.marginal_cdf2(y.x2)
    }

    fn marginal_cdf1(&self, y1: f64) -> f64 {
        beta33_cdf(self.v1(y1))
    }

    fn marginal_cdf2(&self, y2: f64) -> f64 {
        beta33_cdf(self.v2(y2))
    }

    fn support_box(&self) -> SupportBox {
        SupportBox {
            lo1: self.shift.0,
            hi1: self.shift.0 + self.scale.0,
            lo2: self.shift.1,
            hi2: self.shift.1 + self.scale.1,
        }
    }

    fn is_smooth(&self) -> bool {
        true
    }

    fn density_second_partials(&self, y: Point2) -> (f64, f64) {
        let d11 = beta33_pdf_second(self.v1(y.x1)) / self.scale.0.powi(3);
        let d22 = beta33_pdf_second(self.v2(y.x2)) / self.scale.1.powi(3);
        (d11 * self.marginal_pdf2(y.x2), self.marginal_pdf1(y.x1) * d22)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Point2 {
        let v1 = sample_beta33(rng);
        let v2 = sample_beta33(rng);
        Point2::new(self.shift.0 + self.scale.0 * v1, self.shift.1 + self.scale.1 * v2)
    }
}

/// Finite mixture of Beta(3,3) products.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMixture {
    components: Vec<(f64, BetaProduct)>,
}

impl BetaMixture {
    /// Weights must be positive and sum to one.
    pub fn new(components: Vec<(f64, BetaProduct)>) -> Self {
        assert!(!components.is_empty());
        let total: f64 = components.iter().map(|c| c.0).sum();
        assert!((total - 1.0).abs() < 1e-12, "mixture weights sum to {total}");
        Self { components }
    }

    /// Raw Beta(3,3) coordinates shifted by `(0.2, 0.8)` with probability
    /// 2/5 and by `(0.8, 0.2)` with probability 3/5.
    pub fn example2() -> Self {
        Self::new(vec![
            (0.4, BetaProduct::new((0.2, 0.8), (1.0, 1.0))),
            (0.6, BetaProduct::new((0.8, 0.2), (1.0, 1.0))),
        ])
    }

    pub fn components(&self) -> &[(f64, BetaProduct)] {
        &self.components
    }

    /// Index of the component selected by a uniform draw `u`.
    pub fn component_for(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, (w, _)) in self.components.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.components.len() - 1
    }

    fn mix<F: Fn(&BetaProduct) -> f64>(&self, f: F) -> f64 {
        self.components.iter().map(|(w, c)| w * f(c)).sum()
    }
}

impl TrueModel for BetaMixture {
    fn name(&self) -> &str {
        "beta33-mixture"
    }

    fn density(&self, y: Point2) -> f64 {
        self.mix(|c| c.density(y))
    }

    fn cdf(&self, y: Point2) -> f64 {
        self.mix(|c| c.cdf(y))
    }

    fn marginal_cdf1(&self, y1: f64) -> f64 {
        self.mix(|c| c.marginal_cdf1(y1))
    }

    fn marginal_cdf2(&self, y2: f64) -> f64 {
        self.mix(|c| c.marginal_cdf2(y2))
    }

    fn support_box(&self) -> SupportBox {
        let boxes = self.components.iter().map(|(_, c)| c.support_box());
        boxes
            .reduce(|a, b| SupportBox {
                lo1: a.lo1.min(b.lo1),
                hi1: a.hi1.max(b.hi1),
                lo2: a.lo2.min(b.lo2),
                hi2: a.hi2.max(b.hi2),
            })
            .expect("nonempty mixture")
    }

    fn is_smooth(&self) -> bool {
        true
    }

    fn density_second_partials(&self, y: Point2) -> (f64, f64) {
        let mut out = (0.0, 0.0);
        for (w, c) in &self.components {
            let (a, b) = c.density_second_partials(y);
            out.0 += w * a;
            out.1 += w * b;
        }
        out
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Point2 {
        let u: f64 = rng.gen();
        let idx = self.component_for(u);
        self.components[idx].1.sample(rng)
    }
}

/// The bundled models by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bundled {
    UniformSquare,
    Example1,
    Example2,
}

impl Bundled {
    pub const ALL: [Bundled; 3] = [Bundled::UniformSquare, Bundled::Example1, Bundled::Example2];

    pub fn model(self) -> Box<dyn TrueModel> {
        match self {
            Bundled::UniformSquare => Box::new(UniformSquare),
            Bundled::Example1 => Box::new(BetaProduct::example1()),
            Bundled::Example2 => Box::new(BetaMixture::example2()),
        }
    }

    /// Simulation example number (1 or 2).
    pub fn example(number: u8) -> Option<Self> {
        match number {
            1 => Some(Bundled::Example1),
            2 => Some(Bundled::Example2),
            _ => None,
        }
    }
}

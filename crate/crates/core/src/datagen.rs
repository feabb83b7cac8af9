//! Seeded sample generation.
//!
//! All randomness comes from ChaCha8 (`rand_chacha` 0.3) seeded through
//! `SeedableRng::seed_from_u64`. Independent replications use distinct
//! ChaCha stream ids under the same key. Every observation consumes a fixed
//! number of 64-bit words, so the first `n` observations of a stream do not
//! depend on how many are drawn in total.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Sample2D;
use crate::geom::Point2;
use crate::model::{BetaMixture, BetaProduct, Bundled, TrueModel};

pub use crate::model::sample_beta33;

/// Name of the generator family, recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Generator for stream `stream` of this seed.
    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

/// Latent and observed samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub truth: Sample2D,
    pub observed: Sample2D,
}

/// Draws `n` pairs `Y ~ model`, `X = Y + Z` with `Z ~ Uniform([0,1)²)`.
pub fn gen_from_model<R: Rng>(model: &dyn TrueModel, n: usize, rng: &mut R) -> Result<Simulated> {
    if n < 1 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut truth = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    for _ in 0..n {
        let y = model.sample(rng);
        let z1: f64 = rng.gen();
        let z2: f64 = rng.gen();
        truth.push(y);
        observed.push(Point2::new(y.x1 + z1, y.x2 + z2));
    }
    Ok(Simulated { truth: truth.into(), observed: observed.into() })
}

/// Simulation example 1 or 2 on stream `stream` of `seed`.
pub fn gen_example(example: u8, n: usize, seed: Seed, stream: u64) -> Result<Simulated> {
    let mut rng = seed.rng(stream);
    match Bundled::example(example) {
        Some(Bundled::Example1) => gen_from_model(&BetaProduct::example1(), n, &mut rng),
        Some(Bundled::Example2) => gen_from_model(&BetaMixture::example2(), n, &mut rng),
        _ => Err(Error::InvalidArgument(format!("unknown example {example}; expected 1 or 2"))),
    }
}

/// `Y = 0.25 + 1.5 V` coordinatewise with independent `V ~ Beta(3,3)`.
pub fn gen_example1(n: usize, seed: Seed) -> Result<Simulated> {
    gen_example(1, n, seed, 0)
}

/// Two-component Beta(3,3) mixture with shifts `(0.2, 0.8)` and `(0.8, 0.2)`.
pub fn gen_example2(n: usize, seed: Seed) -> Result<Simulated> {
    gen_example(2, n, seed, 0)
}

/// An inspection point and the quadrant label of the hidden point relative
/// to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredObs {
    pub t: Point2,
    pub delta: u8,
}

impl CensoredObs {
    pub fn new(t: Point2, delta: u8) -> Result<Self> {
        if !(1..=4).contains(&delta) {
            return Err(Error::InvalidArgument(format!("quadrant label {delta} is not in 1..=4")));
        }
        if !((0.0..1.0).contains(&t.x1) && (0.0..1.0).contains(&t.x2)) {
            return Err(Error::InvalidArgument(format!(
                "inspection point ({}, {}) is outside [0,1)²",
                t.x1, t.x2
            )));
        }
        Ok(Self { t, delta })
    }
}

/// Quadrant label of `x` relative to `t`: 1 when both coordinates are at
/// least `t`, then counter-clockwise.
pub fn quadrant_label(x: Point2, t: Point2) -> u8 {
    match (x.x1 >= t.x1, x.x2 >= t.x2) {
        (true, true) => 1,
        (false, true) => 2,
        (false, false) => 3,
        (true, false) => 4,
    }
}

/// Maps a censored observation to a point whose density equals the
/// uniform-noise convolution of the hidden density.
pub fn censor_transform(obs: &CensoredObs) -> Result<Point2> {
    let (d1, d2) = match obs.delta {
        1 => (1.0, 1.0),
        2 => (0.0, 1.0),
        3 => (0.0, 0.0),
        4 => (1.0, 0.0),
        other => {
            return Err(Error::InvalidArgument(format!("quadrant label {other} is not in 1..=4")));
        }
    };
    Ok(Point2::new(obs.t.x1 + d1, obs.t.x2 + d2))
}

/// Draws `n` quadrant-censored observations: `T ~ Uniform([0,1)²)`, hidden
/// `X ~ model`, label by [`quadrant_label`].
pub fn gen_censored<R: Rng>(model: &dyn TrueModel, n: usize, rng: &mut R) -> Result<Vec<CensoredObs>> {
    let sb = model.support_box();
    if sb.lo1 < 0.0 || sb.lo2 < 0.0 || sb.hi1 > 1.0 || sb.hi2 > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "model '{}' is not supported in the unit square",
            model.name()
        )));
    }
    if n < 1 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    Ok((0..n)
        .map(|_| {
            let t = Point2::new(rng.gen(), rng.gen());
            let x = model.sample(rng);
            CensoredObs { t, delta: quadrant_label(x, t) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UniformSquare;

    #[test]
    fn beta33_moments() {
        let mut rng = Seed(7).rng(0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_beta33(&mut rng)).collect();
        assert!(draws.iter().all(|v| *v > 0.0 && *v < 1.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.5).abs() < 0.003, "{mean}");
        assert!((var - 1.0 / 28.0).abs() < 0.002, "{var}");
    }

    #[test]
    fn example1_support_and_determinism() {
        let a = gen_example1(2000, Seed(42)).unwrap();
        let b = gen_example1(2000, Seed(42)).unwrap();
        assert_eq!(a, b);
        for (y, x) in a.truth.points().iter().zip(a.observed.points()) {
            assert!((0.25..=1.75).contains(&y.x1) && (0.25..=1.75).contains(&y.x2));
            assert!((0.25..2.75).contains(&x.x1) && (0.25..2.75).contains(&x.x2));
        }
        let c = gen_example1(2000, Seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn prefix_stability() {
        let short = gen_example(2, 100, Seed(9), 3).unwrap();
        let long = gen_example(2, 250, Seed(9), 3).unwrap();
        assert_eq!(short.observed.points(), &long.observed.points()[..100]);
        let other_stream = gen_example(2, 100, Seed(9), 4).unwrap();
        assert_ne!(short, other_stream);
    }

    #[test]
    fn example1_observed_mean() {
        let n = 20_000;
        let s = gen_example1(n, Seed(1)).unwrap();
        // Var X_i = Var Y_i + Var Z_i = 2.25/28 + 1/12
        let sd = ((2.25 / 28.0 + 1.0 / 12.0) / n as f64).sqrt();
        let m1 = s.observed.points().iter().map(|p| p.x1).sum::<f64>() / n as f64;
        let m2 = s.observed.points().iter().map(|p| p.x2).sum::<f64>() / n as f64;
        assert!((m1 - 1.5).abs() < 3.0 * sd && (m2 - 1.5).abs() < 3.0 * sd);
    }

    #[test]
    fn example2_mixture_and_support() {
        let n = 100_000;
        let s = gen_example2(n, Seed(5)).unwrap();
        for y in s.truth.points() {
            assert!((0.2..=1.8).contains(&y.x1) && (0.2..=1.8).contains(&y.x2));
        }
        // E Y1 = 0.7 p + 1.3 (1 - p) for first-component share p
        let mean1 = s.truth.points().iter().map(|y| y.x1).sum::<f64>() / n as f64;
        let share = (1.3 - mean1) / 0.6;
        assert!((share - 0.4).abs() < 0.01, "{share}");
    }

    #[test]
    fn mixture_component_selection() {
        let m = BetaMixture::example2();
        assert_eq!(m.component_for(0.0), 0);
        assert_eq!(m.component_for(0.399), 0);
        assert_eq!(m.component_for(0.4), 1);
        assert_eq!(m.component_for(0.999), 1);
    }

    #[test]
    fn censor_rows() {
        let t = Point2::new(0.3, 0.4);
        let p = |d| censor_transform(&CensoredObs::new(t, d).unwrap()).unwrap();
        assert_eq!(p(3), Point2::new(0.3, 0.4));
        assert_eq!(p(1), Point2::new(1.3, 1.4));
        assert_eq!(p(2), Point2::new(0.3, 1.4));
        assert_eq!(p(4), Point2::new(1.3, 0.4));
        assert!(CensoredObs::new(t, 5).is_err());
        assert!(censor_transform(&CensoredObs { t, delta: 0 }).is_err());
    }

    #[test]
    fn quadrant_labels() {
        let t = Point2::new(0.5, 0.5);
        assert_eq!(quadrant_label(t, t), 1);
        assert_eq!(quadrant_label(Point2::new(0.0, 0.0), t), 3);
        assert_eq!(quadrant_label(Point2::new(0.2, 0.7), t), 2);
        assert_eq!(quadrant_label(Point2::new(0.7, 0.2), t), 4);
    }

    #[test]
    fn censored_generation() {
        let mut rng = Seed(3).rng(0);
        let obs = gen_censored(&UniformSquare, 500, &mut rng).unwrap();
        assert_eq!(obs.len(), 500);
        assert!(obs.iter().all(|o| (1..=4).contains(&o.delta)));
        let mut rng = Seed(3).rng(0);
        assert!(gen_censored(&BetaProduct::example1(), 10, &mut rng).is_err());
    }
}

//! Evaluation of the estimators on a square grid.
//!
//! `Exact` mode evaluates the estimator sums at every node, sharing the
//! axis-1 kernel sums along each grid row. `Binned` mode
//! spreads the observations onto a lattice with bilinear weights, convolves
//! the counts with the sampled kernel (or kernel derivative) along each
//! axis, and then accumulates integer-shift translates with strided
//! cumulative sums. Integer shifts land exactly on lattice nodes because the
//! lattice has a whole number of nodes per unit.

use std::str::FromStr;

use ndarray::{Array2, Axis, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{auto_from_estimates, Deconvolver, PointEstimates};
use crate::geom::QuadrantTag;
use crate::kernels::Kernel1D;

/// Smallest admissible `count_per_unit * bandwidth` in binned mode.
pub const MIN_NODES_PER_BANDWIDTH: f64 = 10.0;

/// Nodes `lo + k / count_per_unit`, `k = 0..=(hi - lo) * count_per_unit`,
/// shared by both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count_per_unit: u32,
    intervals: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, count_per_unit: u32) -> Result<Self> {
        let bad = || Error::NonCommensurateGrid { lo, hi, count_per_unit };
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo || count_per_unit == 0 {
            return Err(bad());
        }
        let steps = (hi - lo) * count_per_unit as f64;
        let rounded = steps.round();
        if (steps - rounded).abs() > 1e-9 * steps.max(1.0) {
            return Err(bad());
        }
        Ok(Self { lo, hi, count_per_unit, intervals: rounded as usize })
    }

    /// Number of nodes per axis.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.count_per_unit as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.lo + k as f64 / self.count_per_unit as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `lo:hi:count_per_unit`, e.g. `-1:4:100`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let err = || Error::InvalidArgument(format!("grid '{s}' is not of the form lo:hi:count_per_unit"));
        if parts.len() != 3 {
            return Err(err());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| err())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| err())?;
        let c: u32 = parts[2].trim().parse().map_err(|_| err())?;
        GridSpec::new(lo, hi, c)
    }
}

/// Which estimator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridMethod {
    /// Convex combination with weights estimated per node.
    Combined,
    Single(QuadrantTag),
}

impl FromStr for GridMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("combined") {
            return Ok(GridMethod::Combined);
        }
        s.parse::<QuadrantTag>().map(GridMethod::Single).map_err(Error::InvalidArgument)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridMode {
    Exact,
    Binned,
}

impl FromStr for GridMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(GridMode::Exact),
            "binned" => Ok(GridMode::Binned),
            other => Err(Error::InvalidArgument(format!("unknown mode '{other}'"))),
        }
    }
}

impl Deconvolver {
    /// Values at all grid nodes; entry `[a, b]` is the estimate at
    /// `(grid.node(a), grid.node(b))`.
    pub fn evaluate_grid(&self, grid: &GridSpec, method: GridMethod, mode: GridMode) -> Result<Array2<f64>> {
        match mode {
            GridMode::Exact => self.evaluate_exact(grid, method),
            GridMode::Binned => self.evaluate_binned(grid, method),
        }
    }

    fn evaluate_exact(&self, grid: &GridSpec, method: GridMethod) -> Result<Array2<f64>> {
        let m = grid.len();
        let rows: Vec<Result<Vec<f64>>> = (0..m)
            .into_par_iter()
            .map(|a| {
                let cache = self.row_cache(grid.node(a), method == GridMethod::Combined);
                (0..m)
                    .map(|b| {
                        let est = self.estimates_in_row(&cache, grid.node(b));
                        match method {
                            GridMethod::Single(tag) => Ok(est.density[tag.index()]),
                            GridMethod::Combined => auto_from_estimates(&est, self.config().eps).map(|e| e.value),
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = Array2::zeros((m, m));
        for (a, row) in rows.into_iter().enumerate() {
            for (b, v) in row?.into_iter().enumerate() {
                out[[a, b]] = v;
            }
        }
        Ok(out)
    }

    fn evaluate_binned(&self, grid: &GridSpec, method: GridMethod) -> Result<Array2<f64>> {
        let cfg = self.config();
        let mut bandwidths = vec![cfg.h1, cfg.h2];
        if method == GridMethod::Combined {
            bandwidths.push(cfg.h_tilde);
        }
        let c = grid.count_per_unit;
        for &h in &bandwidths {
            if (c as f64) * h < MIN_NODES_PER_BANDWIDTH {
                return Err(Error::UnderResolved {
                    count_per_unit: c,
                    bandwidth: h,
                    min_nodes: MIN_NODES_PER_BANDWIDTH,
                });
            }
        }
        let reach = bandwidths.iter().cloned().fold(0.0, f64::max);
        let lattice = Lattice::new(grid, self, reach);
        let counts = lattice.bin(self);
        let n = self.n() as f64;

        let k = &cfg.kernel;
        let dens = lattice.tag_surfaces(
            &counts,
            (&k.k1, cfg.h1),
            (&k.k2, cfg.h2),
            Part::Derivative,
            1.0 / (n * cfg.h1 * cfg.h1 * cfg.h2 * cfg.h2),
        );
        let dens: [Array2<f64>; 4] = {
            let mut d = dens;
            for tag in QuadrantTag::ALL {
                d[tag.index()] *= tag.density_sign();
            }
            d
        };

        let m = grid.len();
        match method {
            GridMethod::Single(tag) => Ok(lattice.extract(&dens[tag.index()], m)),
            GridMethod::Combined => {
                let quad = lattice.tag_surfaces(
                    &counts,
                    (&k.k1, cfg.h_tilde),
                    (&k.k2, cfg.h_tilde),
                    Part::Value,
                    1.0 / (n * cfg.h_tilde * cfg.h_tilde),
                );
                let dens: Vec<Array2<f64>> = dens.iter().map(|s| lattice.extract(s, m)).collect();
                let quad: Vec<Array2<f64>> = quad.iter().map(|s| lattice.extract(s, m)).collect();
                let mut out = Array2::zeros((m, m));
                for a in 0..m {
                    for b in 0..m {
                        let est = PointEstimates {
                            density: [dens[0][[a, b]], dens[1][[a, b]], dens[2][[a, b]], dens[3][[a, b]]],
                            quadrant: [quad[0][[a, b]], quad[1][[a, b]], quad[2][[a, b]], quad[3][[a, b]]],
                        };
                        out[[a, b]] = auto_from_estimates(&est, cfg.eps)?.value;
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Value,
    Derivative,
}

/// Lattice aligned with the output grid and extended to cover the data.
/// Index `l` (relative to `start`) sits at `grid.lo + (start + l) / c`.
struct Lattice {
    lo: f64,
    c: usize,
    start: [i64; 2],
    len: [usize; 2],
}

impl Lattice {
    fn new(grid: &GridSpec, d: &Deconvolver, reach: f64) -> Self {
        let c = grid.count_per_unit as f64;
        let (min1, max1, min2, max2) = d.sample().bounds().expect("nonempty sample");
        let pad = (reach * c).ceil() as i64 + 2;
        let span = |lo_data: f64, hi_data: f64| {
            let s = (((lo_data - grid.lo) * c).floor() as i64 - pad).min(0);
            let e = (((hi_data - grid.lo) * c).ceil() as i64 + pad).max(grid.len() as i64 - 1);
            (s, (e - s + 1) as usize)
        };
        let (s1, l1) = span(min1, max1);
        let (s2, l2) = span(min2, max2);
        Self { lo: grid.lo, c: grid.count_per_unit as usize, start: [s1, s2], len: [l1, l2] }
    }

    fn bin(&self, d: &Deconvolver) -> Array2<f64> {
        let mut counts = Array2::zeros((self.len[0], self.len[1]));
        let c = self.c as f64;
        for p in d.sample().points() {
            let pos1 = (p.x1 - self.lo) * c - self.start[0] as f64;
            let pos2 = (p.x2 - self.lo) * c - self.start[1] as f64;
            let (i, fi) = (pos1.floor(), pos1 - pos1.floor());
            let (j, fj) = (pos2.floor(), pos2 - pos2.floor());
            let (i, j) = (i as usize, j as usize);
            counts[[i, j]] += (1.0 - fi) * (1.0 - fj);
            counts[[i + 1, j]] += fi * (1.0 - fj);
            counts[[i, j + 1]] += (1.0 - fi) * fj;
            counts[[i + 1, j + 1]] += fi * fj;
        }
        counts
    }

    fn stencil(&self, kernel: &Kernel1D, h: f64, part: Part) -> Vec<f64> {
        let half = (h * self.c as f64).ceil() as i64;
        (-half..=half)
            .map(|m| {
                let u = m as f64 / (self.c as f64 * h);
                match part {
                    Part::Value => kernel.eval(u),
                    Part::Derivative => kernel.deriv(u),
                }
            })
            .collect()
    }

    /// Four lattice surfaces in tag order, each scaled by `scale`.
    fn tag_surfaces(
        &self,
        counts: &Array2<f64>,
        (k1, h1): (&Kernel1D, f64),
        (k2, h2): (&Kernel1D, f64),
        part: Part,
        scale: f64,
    ) -> [Array2<f64>; 4] {
        let s1 = self.stencil(k1, h1, part);
        let s2 = self.stencil(k2, h2, part);
        let mut smooth = convolve_axis(counts, Axis(0), &s1);
        smooth = convolve_axis(&smooth, Axis(1), &s2);
        smooth *= scale;

        let (m1, p1) = (
            shift_sum(&smooth, Axis(0), self.c, false),
            shift_sum(&smooth, Axis(0), self.c, true),
        );
        [
            shift_sum(&m1, Axis(1), self.c, false),
            shift_sum(&m1, Axis(1), self.c, true),
            shift_sum(&p1, Axis(1), self.c, false),
            shift_sum(&p1, Axis(1), self.c, true),
        ]
    }

    fn extract(&self, surface: &Array2<f64>, m: usize) -> Array2<f64> {
        let o1 = (-self.start[0]) as usize;
        let o2 = (-self.start[1]) as usize;
        Array2::from_shape_fn((m, m), |(a, b)| surface[[a + o1, b + o2]])
    }
}

/// Discrete convolution along `axis`: `out[l] = Σ_m input[l - m] s[m]` with
/// the stencil centred.
fn convolve_axis(input: &Array2<f64>, axis: Axis, stencil: &[f64]) -> Array2<f64> {
    let half = (stencil.len() / 2) as isize;
    let mut out = Array2::zeros(input.raw_dim());
    Zip::from(out.lanes_mut(axis))
        .and(input.lanes(axis))
        .par_for_each(|mut o, i| {
            let len = i.len() as isize;
            for (src, &v) in i.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let src = src as isize;
                let lo = (src - half).max(0);
                let hi = (src + half).min(len - 1);
                for l in lo..=hi {
                    o[l as usize] += v * stencil[(l - src + half) as usize];
                }
            }
        });
    out
}

/// Lattice sums over integer shifts (`stride` nodes per unit):
/// `Σ_{i>=0} a[l - i·stride]` for the minus direction and
/// `Σ_{i>=1} a[l + i·stride]` for the plus direction.
fn shift_sum(input: &Array2<f64>, axis: Axis, stride: usize, plus: bool) -> Array2<f64> {
    let mut out = Array2::zeros(input.raw_dim());
    Zip::from(out.lanes_mut(axis))
        .and(input.lanes(axis))
        .par_for_each(|mut o, i| {
            let len = i.len();
            if plus {
                let mut acc = vec![0.0; len];
                for l in (0..len).rev() {
                    acc[l] = i[l] + if l + stride < len { acc[l + stride] } else { 0.0 };
                    o[l] = if l + stride < len { acc[l + stride] } else { 0.0 };
                }
            } else {
                for l in 0..len {
                    o[l] = i[l] + if l >= stride { o[l - stride] } else { 0.0 };
                }
            }
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{EstimatorConfig, Sample2D};
    use crate::geom::Point2;

    #[test]
    fn grid_spec() {
        let g = GridSpec::new(-1.0, 4.0, 100).unwrap();
        assert_eq!(g.len(), 501);
        assert!((g.node(500) - 4.0).abs() < 1e-12);
        assert!((g.node(200) - 1.0).abs() < 1e-12);
        assert!(matches!(GridSpec::new(-1.0, 4.005, 100), Err(Error::NonCommensurateGrid { .. })));
        assert!(GridSpec::new(1.0, 1.0, 100).is_err());
        let p: GridSpec = "-1:4:100".parse().unwrap();
        assert_eq!(p, g);
        assert!("-1:4".parse::<GridSpec>().is_err());
    }

    #[test]
    fn method_and_mode_parse() {
        assert_eq!("combined".parse::<GridMethod>().unwrap(), GridMethod::Combined);
        assert_eq!("pp".parse::<GridMethod>().unwrap(), GridMethod::Single(QuadrantTag::PlusPlus));
        assert_eq!("-+".parse::<GridMethod>().unwrap(), GridMethod::Single(QuadrantTag::MinusPlus));
        assert!("median".parse::<GridMethod>().is_err());
        assert_eq!("BINNED".parse::<GridMode>().unwrap(), GridMode::Binned);
    }

    #[test]
    fn shift_sum_directions() {
        let a = Array2::from_shape_vec((1, 7), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let minus = shift_sum(&a, Axis(1), 2, false);
        assert_eq!(minus.row(0).to_vec(), vec![1.0, 2.0, 4.0, 6.0, 9.0, 12.0, 16.0]);
        let plus = shift_sum(&a, Axis(1), 2, true);
        assert_eq!(plus.row(0).to_vec(), vec![15.0, 10.0, 12.0, 6.0, 7.0, 0.0, 0.0]);
    }

    #[test]
    fn convolution_places_stencil() {
        let mut a = Array2::zeros((1, 7));
        a[[0, 3]] = 2.0;
        let out = convolve_axis(&a, Axis(1), &[1.0, 10.0, 100.0]);
        assert_eq!(out.row(0).to_vec(), vec![0.0, 0.0, 2.0, 20.0, 200.0, 0.0, 0.0]);
    }

    fn max_abs_diff(e: &Array2<f64>, b: &Array2<f64>) -> (f64, f64) {
        let max = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = (e - b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (diff, max)
    }

    #[test]
    fn binned_matches_exact_for_single_point() {
        let s = Sample2D::new(vec![Point2::new(1.234, 0.987)]).unwrap();
        let cfg = EstimatorConfig::for_sample_size(0.3, 1000).with_h_tilde(0.25);
        let d = Deconvolver::new(s, cfg).unwrap();
        let grid = GridSpec::new(-1.0, 3.0, 100).unwrap();
        for tag in QuadrantTag::ALL {
            let method = GridMethod::Single(tag);
            let e = d.evaluate_grid(&grid, method, GridMode::Exact).unwrap();
            let b = d.evaluate_grid(&grid, method, GridMode::Binned).unwrap();
            let (diff, max) = max_abs_diff(&e, &b);
            assert!(diff <= 0.01 * max, "{method:?}: {diff} vs {max}");
        }
    }

    #[test]
    fn binned_matches_exact_for_combined() {
        let sim = crate::datagen::gen_example1(300, crate::datagen::Seed(5)).unwrap();
        let d = Deconvolver::new(sim.observed, EstimatorConfig::for_sample_size(0.4, 300)).unwrap();
        let grid = GridSpec::new(0.0, 3.0, 50).unwrap();
        let e = d.evaluate_grid(&grid, GridMethod::Combined, GridMode::Exact).unwrap();
        let b = d.evaluate_grid(&grid, GridMethod::Combined, GridMode::Binned).unwrap();
        let (diff, max) = max_abs_diff(&e, &b);
        assert!(diff <= 0.01 * max, "{diff} vs {max}");
    }

    #[test]
    fn far_grid_is_zero() {
        let s = Sample2D::new(vec![Point2::new(1.2, 1.3), Point2::new(1.5, 1.1)]).unwrap();
        let d = Deconvolver::new(s, EstimatorConfig::for_sample_size(0.2, 100)).unwrap();
        let grid = GridSpec::new(-6.0, -4.0, 100).unwrap();
        for mode in [GridMode::Exact, GridMode::Binned] {
            let out = d.evaluate_grid(&grid, GridMethod::Single(QuadrantTag::MinusMinus), mode).unwrap();
            assert!(out.iter().all(|v| *v == 0.0));
            // Plus shifts reach the data from below.
            let out = d.evaluate_grid(&grid, GridMethod::Single(QuadrantTag::PlusPlus), mode).unwrap();
            assert!(out.iter().any(|v| *v != 0.0));
        }
    }

    #[test]
    fn under_resolved_kernel_rejected() {
        let s = Sample2D::new(vec![Point2::new(1.2, 1.3)]).unwrap();
        let d = Deconvolver::new(s, EstimatorConfig::for_sample_size(0.05, 100)).unwrap();
        let grid = GridSpec::new(0.0, 2.0, 100).unwrap();
        let r = d.evaluate_grid(&grid, GridMethod::Single(QuadrantTag::PlusPlus), GridMode::Binned);
        assert!(matches!(r, Err(Error::UnderResolved { .. })));
        assert!(d.evaluate_grid(&grid, GridMethod::Single(QuadrantTag::PlusPlus), GridMode::Exact).is_ok());
    }
}

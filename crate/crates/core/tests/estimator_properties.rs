use proptest::prelude::*;
use udeconv::datagen::{gen_example, gen_example1, Seed};
use udeconv::estimators::{Deconvolver, EstimatorConfig, Sample2D};
use udeconv::geom::{Point2, QuadrantTag};
use udeconv::grid::{GridMethod, GridMode, GridSpec};
use udeconv::kernels::Kernel1D;
use udeconv::weights::WeightVec;

/// Trapezoid rule over a square grid of values.
fn trapezoid(values: &ndarray::Array2<f64>, spacing: f64) -> f64 {
    let m = values.nrows();
    let wt = |k: usize| if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
    let mut total = 0.0;
    for ((a, b), v) in values.indexed_iter() {
        total += wt(a) * wt(b) * v;
    }
    total * spacing * spacing
}

// Over a box whose lower corner lies below every observation minus one
// bandwidth, the `--` density estimate integrates to the `--` quadrant
// estimate at the upper corner computed with the same bandwidth; the `++`
// case mirrors this at the lower corner.
#[test]
fn density_estimate_mass_matches_quadrant_estimate() {
    let h = 0.4;
    let sim = gen_example1(500, Seed(11)).unwrap();
    let cfg = EstimatorConfig::for_sample_size(h, 500).with_h_tilde(h);
    let d = Deconvolver::new(sim.observed, cfg).unwrap();
    let grid = GridSpec::new(-0.5, 4.5, 100).unwrap();
    let (lo, hi) = (Point2::new(-0.5, -0.5), Point2::new(4.5, 4.5));

    let mm = d.evaluate_grid(&grid, GridMethod::Single(QuadrantTag::MinusMinus), GridMode::Exact).unwrap();
    let mass = trapezoid(&mm, grid.spacing());
    let want = d.quadrant_prob(QuadrantTag::MinusMinus, hi);
    assert!((mass - want).abs() < 2e-3, "{mass} vs {want}");

    let pp = d.evaluate_grid(&grid, GridMethod::Single(QuadrantTag::PlusPlus), GridMode::Exact).unwrap();
    let mass = trapezoid(&pp, grid.spacing());
    let want = d.quadrant_prob(QuadrantTag::PlusPlus, lo);
    assert!((mass - want).abs() < 2e-3, "{mass} vs {want}");
}

// The mass of a single estimate fluctuates with standard deviation of order
// ∫w² / (h √n); its expectation is exactly one. Averaged over replications
// it must sit within 2e-2 of one.
#[test]
fn density_estimate_mass_is_one_on_average() {
    let (n, reps) = (500, 100);
    for h in [0.4, 0.5] {
        let cfg = EstimatorConfig::for_sample_size(h, n).with_h_tilde(h);
        let corner = Point2::new(4.5, 4.5);
        let mean = (0..reps)
            .map(|r| {
                let sim = gen_example(1, n, Seed(2024), r).unwrap();
                Deconvolver::new(sim.observed, cfg.clone()).unwrap().quadrant_prob(QuadrantTag::MinusMinus, corner)
            })
            .sum::<f64>()
            / reps as f64;
        assert!((mean - 1.0).abs() < 2e-2, "h = {h}: mean mass {mean}");
    }
}

fn small_sample() -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec((0.0..4.0f64, 0.0..4.0f64).prop_map(|(a, b)| Point2::new(a, b)), 1..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn combination_is_linear(
        pts in small_sample(),
        x1 in -1.0..5.0f64,
        x2 in -1.0..5.0f64,
        raw in prop::array::uniform4(0.01..1.0f64),
        h in 0.1..0.9f64,
    ) {
        let n = pts.len();
        let d = Deconvolver::new(Sample2D::new(pts).unwrap(), EstimatorConfig::for_sample_size(h, n)).unwrap();
        let x = Point2::new(x1, x2);
        let f = d.densities(x);
        let s: f64 = raw.iter().sum();
        let t = WeightVec::new(raw.map(|v| v / s)).unwrap();
        let want: f64 = f.iter().zip(t.to_array()).map(|(a, b)| a * b).sum();
        let got = d.combined(x, &t).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
        let avg = d.combined(x, &WeightVec::uniform()).unwrap();
        prop_assert!((avg - f.iter().sum::<f64>() / 4.0).abs() <= 1e-12 * (1.0 + avg.abs()));
    }

    // For a weight bandwidth below one half each observation reaches `x`
    // through at most one integer shift per axis, so the four quadrant
    // estimates add up to a kernel estimate of the data folded modulo 1.
    #[test]
    fn quadrant_estimates_sum_to_folded_estimate(
        pts in small_sample(),
        x1 in -1.0..5.0f64,
        x2 in -1.0..5.0f64,
        h in 0.05..0.49f64,
    ) {
        let n = pts.len();
        let cfg = EstimatorConfig::for_sample_size(0.3, n).with_h_tilde(h);
        let d = Deconvolver::new(Sample2D::new(pts.clone()).unwrap(), cfg).unwrap();
        let x = Point2::new(x1, x2);
        let q = d.quadrant_probs(x);
        prop_assert!(q.iter().all(|v| *v >= 0.0));
        let k = Kernel1D::biweight();
        let folded = |a: f64, b: f64| {
            let r = a - b;
            k.eval((r - r.round()) / h)
        };
        let want: f64 = pts.iter().map(|p| folded(x1, p.x1) * folded(x2, p.x2)).sum::<f64>() / (n as f64 * h * h);
        prop_assert!((q.iter().sum::<f64>() - want).abs() <= 1e-10 * (1.0 + want));
    }

    #[test]
    fn estimates_scale_with_duplication(
        pts in small_sample(),
        x1 in -1.0..5.0f64,
        x2 in -1.0..5.0f64,
    ) {
        let n = pts.len();
        let cfg = EstimatorConfig::for_sample_size(0.4, n).with_h_tilde(0.3);
        let once = Deconvolver::new(Sample2D::new(pts.clone()).unwrap(), cfg.clone()).unwrap();
        let twice_pts: Vec<Point2> = pts.iter().chain(pts.iter()).copied().collect();
        let twice = Deconvolver::new(Sample2D::new(twice_pts).unwrap(), cfg).unwrap();
        let x = Point2::new(x1, x2);
        for (a, b) in once.densities(x).iter().zip(twice.densities(x)) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}

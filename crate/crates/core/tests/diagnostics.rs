use udeconv::diagnostics::{run_mc, run_mc_quadrant, McConfig};
use udeconv::geom::Point2;

fn config(n: usize, h: f64, reps: usize) -> McConfig {
    McConfig {
        example: 1,
        n,
        h,
        h_tilde: None,
        eps: None,
        reps,
        points: vec![Point2::new(1.0, 1.0)],
        seed: 7,
    }
}

#[test]
fn weight_error_shrinks_with_sample_size() {
    let rmse: Vec<f64> = [1000, 4000, 16000]
        .iter()
        .map(|&n| run_mc(&config(n, 0.3, 60)).unwrap()[0].weight_rmse.unwrap())
        .collect();
    assert!(rmse[0] > rmse[1] && rmse[1] > rmse[2], "{rmse:?}");
}

// For h < 1/2 the `--` and `-+` estimators share no product terms, leaving a
// covariance of order 1/n against variances of order 1/(n h⁶). With 4000
// replications the sampling spread of the correlation is about 0.016.
#[test]
fn cross_correlation_vanishes() {
    let r = &run_mc(&config(2000, 0.3, 4000)).unwrap()[0];
    let corr = r.cross_corr_mm_mp.unwrap();
    assert!(corr.abs() <= 0.05, "{corr}");
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let cfg = McConfig { points: vec![Point2::new(1.0, 1.0), Point2::new(0.8, 1.3)], ..config(500, 0.4, 50) };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (run_mc(&cfg).unwrap(), run_mc_quadrant(1, 500, None, 50, &cfg.points, 3).unwrap()))
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one, three);
    assert_eq!(serde_json::to_string(&one.0).unwrap(), serde_json::to_string(&three.0).unwrap());
}

#[test]
fn report_schema() {
    let reports = run_mc(&McConfig { points: vec![Point2::new(1.0, 1.0), Point2::new(0.7, 1.2)], ..config(800, 0.5, 50) }).unwrap();
    assert_eq!(reports.len(), 2);
    let r = &reports[0];
    assert!((r.predicted_bias + 0.396_825_4).abs() < 1e-6);
    assert!((r.truth - 1.5625).abs() < 1e-12);
    for r in &reports {
        assert!(r.var_est >= 0.0 && r.var_ratio.is_finite() && r.bias_ratio.is_finite());
        assert_eq!(r.components.len(), 5);
        assert!(r.per_tag_var.iter().all(|v| *v > 0.0));
        assert!(r.component("combined_true_weights").is_some());
        assert!(r.component("f++").is_some());
    }
    let q = run_mc_quadrant(1, 800, None, 50, &[Point2::new(1.0, 1.0)], 1).unwrap();
    assert_eq!(q.len(), 4);
    for r in &q {
        assert!((r.truth - 0.25).abs() < 1e-12);
    }
}

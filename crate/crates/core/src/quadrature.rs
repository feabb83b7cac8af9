//! Composite Simpson quadrature on a compact interval.

/// Panel count used for kernel constants.
pub const KERNEL_PANELS: usize = 4096;

/// Composite Simpson rule with `panels` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = (panels.max(2) + 1) & !1;
    let step = (b - a) / panels as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..panels {
        let v = f(a + k as f64 * step);
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    step / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Tensor-product Simpson rule over a rectangle.
pub fn simpson_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (a1, b1): (f64, f64),
    (a2, b2): (f64, f64),
    panels: usize,
) -> f64 {
    simpson(|u| simpson(|v| f(u, v), a2, b2, panels), a1, b1, panels)
}

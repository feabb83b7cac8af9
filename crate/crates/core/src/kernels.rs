//! Univariate kernels with compact support `[-1, 1]` and the product kernel
//! built from two of them.
//!
//! Every kernel carries the three constants that enter the asymptotic bias
//! and variance formulas: the second moment `mu2 = ∫ z² w(z) dz`, the
//! roughness `∫ w(z)² dz` and the derivative roughness `∫ w'(z)² dz`. They
//! are computed once by quadrature when the kernel is built.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::quadrature::{simpson, KERNEL_PANELS};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Biweight,
    Triweight,
    Custom {
        name: String,
        eval: ScalarFn,
        deriv: ScalarFn,
    },
}

/// A symmetric probability density on `[-1, 1]` with a continuous derivative.
#[derive(Clone)]
pub struct Kernel1D {
    shape: Shape,
    mu2: f64,
    rough_w: f64,
    rough_dw: f64,
}

impl fmt::Debug for Kernel1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel1D")
            .field("name", &self.name())
            .field("mu2", &self.mu2)
            .field("rough_w", &self.rough_w)
            .field("rough_dw", &self.rough_dw)
            .finish()
    }
}

impl Kernel1D {
    /// `w(u) = 15/16 (1 - u²)²` on `[-1, 1]`.
    pub fn biweight() -> Self {
        let k = Self::with_constants(Shape::Biweight);
        debug_assert!((k.mu2 - 1.0 / 7.0).abs() < 1e-12);
        debug_assert!((k.rough_w - 5.0 / 7.0).abs() < 1e-12);
        debug_assert!((k.rough_dw - 15.0 / 7.0).abs() < 1e-12);
        k
    }

    /// `w(u) = 35/32 (1 - u²)³` on `[-1, 1]`.
    pub fn triweight() -> Self {
        Self::with_constants(Shape::Triweight)
    }

    /// Builds a kernel from user-supplied density and derivative.
    ///
    /// Both functions are only ever called inside `[-1, 1]`; the kernel is
    /// rejected if it is not symmetric, does not integrate to one, carries
    /// mass just outside the unit interval, or if `deriv` disagrees with a
    /// finite difference of `eval`.
    pub fn custom<F, D>(name: impl Into<String>, eval: F, deriv: D) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let eval: ScalarFn = Arc::new(eval);
        let deriv: ScalarFn = Arc::new(deriv);

        for k in 1..=40 {
            let u = 1.0 + k as f64 * 0.05;
            if eval(u) != 0.0 || eval(-u) != 0.0 {
                return Err(Error::InvalidKernel(format!(
                    "nonzero mass outside [-1, 1] at u = {u}"
                )));
            }
        }
        for k in 0..=200 {
            let u = k as f64 / 200.0;
            let (a, b) = (eval(u), eval(-u));
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidKernel(format!("w({u}) = {a} is not a density value")));
            }
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Err(Error::InvalidKernel(format!("not symmetric at u = {u}")));
            }
        }
        let mass = simpson(|u| eval(u), -1.0, 1.0, KERNEL_PANELS);
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidKernel(format!("integrates to {mass}, not 1")));
        }
        let step = 1e-5;
        for k in 1..100 {
            let u = -1.0 + 2.0 * k as f64 / 100.0;
            let fd = (eval(u + step) - eval(u - step)) / (2.0 * step);
            let d = deriv(u);
            if (fd - d).abs() > 1e-4 * (1.0 + d.abs()) {
                return Err(Error::InvalidKernel(format!(
                    "derivative mismatch at u = {u}: {d} vs finite difference {fd}"
                )));
            }
        }

        Ok(Self::with_constants(Shape::Custom {
            name: name.into(),
            eval,
            deriv,
        }))
    }

    fn with_constants(shape: Shape) -> Self {
        let mut k = Self {
            shape,
            mu2: 0.0,
            rough_w: 0.0,
            rough_dw: 0.0,
        };
        k.mu2 = simpson(|z| z * z * k.eval(z), -1.0, 1.0, KERNEL_PANELS);
        k.rough_w = simpson(|z| k.eval(z).powi(2), -1.0, 1.0, KERNEL_PANELS);
        k.rough_dw = simpson(|z| k.deriv(z).powi(2), -1.0, 1.0, KERNEL_PANELS);
        k
    }

    pub fn name(&self) -> &str {
        match &self.shape {
            Shape::Biweight => "biweight",
            Shape::Triweight => "triweight",
            Shape::Custom { name, .. } => name,
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        match &self.shape {
            Shape::Biweight => {
                let s = 1.0 - u * u;
                0.9375 * s * s
            }
            Shape::Triweight => {
                let s = 1.0 - u * u;
                1.09375 * s * s * s
            }
            Shape::Custom { eval, .. } => eval(u),
        }
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        match &self.shape {
            Shape::Biweight => -3.75 * u * (1.0 - u * u),
            Shape::Triweight => {
                let s = 1.0 - u * u;
                -6.5625 * u * s * s
            }
            Shape::Custom { deriv, .. } => deriv(u),
        }
    }

    pub fn support_halfwidth(&self) -> f64 {
        1.0
    }

    /// `∫ z² w(z) dz`
    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    /// `∫ w(z)² dz`
    pub fn rough_w(&self) -> f64 {
        self.rough_w
    }

    /// `∫ w'(z)² dz`
    pub fn rough_dw(&self) -> f64 {
        self.rough_dw
    }
}

/// Product kernel `w(u1, u2) = w1(u1) w2(u2)`.
#[derive(Debug, Clone)]
pub struct ProductKernel2D {
    pub k1: Kernel1D,
    pub k2: Kernel1D,
}

impl ProductKernel2D {
    pub fn new(k1: Kernel1D, k2: Kernel1D) -> Self {
        Self { k1, k2 }
    }

    pub fn biweight() -> Self {
        let k = Kernel1D::biweight();
        Self::new(k.clone(), k)
    }

    pub fn eval(&self, u1: f64, u2: f64) -> f64 {
        self.k1.eval(u1) * self.k2.eval(u2)
    }

    /// Mixed partial `∂²w/∂u1∂u2 = w1'(u1) w2'(u2)`.
    pub fn mixed_partial(&self, u1: f64, u2: f64) -> f64 {
        self.k1.deriv(u1) * self.k2.deriv(u2)
    }
}

impl Default for ProductKernel2D {
    fn default() -> Self {
        Self::biweight()
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::BadBandwidth(h))
    }
}

/// Bivariate product-kernel density estimate at `x`.
pub fn kde2(sample: &[Point2], kernel: &ProductKernel2D, h1: f64, h2: f64, x: Point2) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::NoData);
    }
    check_bandwidth(h1)?;
    check_bandwidth(h2)?;
    let sum: f64 = sample
        .iter()
        .map(|p| kernel.eval((x.x1 - p.x1) / h1, (x.x2 - p.x2) / h2))
        .sum();
    Ok(sum / (sample.len() as f64 * h1 * h2))
}

//! Kernel weights, the local evaluation grid and interpolation back to sample sites.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::quad;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
    Epanechnikov,
}

impl KernelKind {
    /// The unscaled kernel `W(s)`.
    #[inline]
    pub fn eval(self, s: f64) -> f64 {
        match self {
            KernelKind::Gaussian => INV_SQRT_2PI * (-0.5 * s * s).exp(),
            KernelKind::Epanechnikov => {
                if s.abs() <= 1.0 {
                    0.75 * (1.0 - s * s)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width beyond which `W` is zero (or below `1e-31` for the Gaussian).
    fn effective_radius(self) -> f64 {
        match self {
            KernelKind::Gaussian => 12.0,
            KernelKind::Epanechnikov => 1.0,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Gaussian => f.write_str("gaussian"),
            KernelKind::Epanechnikov => f.write_str("epanechnikov"),
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(KernelKind::Gaussian),
            "epanechnikov" | "epa" => Ok(KernelKind::Epanechnikov),
            other => Err(Error::Input(format!("unknown kernel '{other}'"))),
        }
    }
}

/// A kernel together with its bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub h: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
        }
        Ok(KernelSpec { kind, h })
    }

    pub fn gaussian(h: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian, h)
    }

    /// The rescaled weight `W_h(t) = W(t/h)/h`.
    #[inline]
    pub fn weight(&self, t: f64) -> f64 {
        self.kind.eval(t / self.h) / self.h
    }

    pub fn with_bandwidth(&self, h: f64) -> Self {
        KernelSpec { kind: self.kind, h }
    }
}

/// `W_h(t) = W(t/h)/h`.
pub fn kernel_weight(spec: &KernelSpec, t: f64) -> f64 {
    spec.weight(t)
}

/// Ordered, strictly increasing local points at which curves are estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LocalGrid {
    points: Vec<f64>,
}

impl LocalGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Contract(format!(
                "a local grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Contract("grid points must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Contract("grid points must be strictly increasing".into()));
        }
        Ok(LocalGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Segment index and interpolation fraction for `x`, clamped to the span.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let p = &self.points;
        let last = p.len() - 1;
        if x <= p[0] {
            return (0, 0.0);
        }
        if x >= p[last] {
            return (last - 1, 1.0);
        }
        // first index with p[j] > x, so x lies in [p[j-1], p[j])
        let j = p.partition_point(|&v| v <= x);
        let lo = j - 1;
        let t = (x - p[lo]) / (p[lo + 1] - p[lo]);
        (lo, t)
    }

    /// Precomputed interpolation stencils for a fixed set of query points.
    pub fn stencil(&self, xs: &[f64]) -> Stencil {
        let (seg, frac) = xs.iter().map(|&x| self.locate(x)).unzip();
        Stencil { seg, frac }
    }
}

impl TryFrom<Vec<f64>> for LocalGrid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        LocalGrid::new(points)
    }
}

impl From<LocalGrid> for Vec<f64> {
    fn from(g: LocalGrid) -> Self {
        g.points
    }
}

/// Linear-interpolation weights of a fixed set of query points on a grid.
#[derive(Debug, Clone)]
pub struct Stencil {
    seg: Vec<usize>,
    frac: Vec<f64>,
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.seg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seg.is_empty()
    }

    #[inline]
    pub fn eval(&self, values: &[f64], i: usize) -> f64 {
        lerp(values, self.seg[i], self.frac[i])
    }

    /// Interpolate one curve at every query point.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (0..self.seg.len()).map(|i| self.eval(values, i)).collect()
    }
}

#[inline]
fn lerp(values: &[f64], j: usize, t: f64) -> f64 {
    // (1-t)a + tb reproduces both end values exactly at t = 0 and t = 1
    (1.0 - t) * values[j] + t * values[j + 1]
}

/// `G` equispaced points from `min x` to `max x` inclusive.
pub fn make_grid(data: &Dataset, size: usize) -> Result<LocalGrid> {
    let (lo, hi) = data.x_range();
    if hi <= lo {
        return Err(Error::DegenerateCovariate(lo));
    }
    equispaced(lo, hi, size)
}

/// `size` equispaced points on `[lo, hi]`, endpoints included exactly.
pub fn equispaced(lo: f64, hi: f64, size: usize) -> Result<LocalGrid> {
    if size < 2 {
        return Err(Error::Contract(format!("grid size must be at least 2, got {size}")));
    }
    let step = (hi - lo) / (size - 1) as f64;
    let mut pts: Vec<f64> = (0..size).map(|g| lo + g as f64 * step).collect();
    pts[size - 1] = hi;
    LocalGrid::new(pts)
}

/// Default grid size: one point per observation up to 100.
pub fn default_grid_size(n: usize) -> usize {
    n.clamp(2, 100)
}

/// Piecewise-linear interpolation, clamped to the end values outside the span.
pub fn interpolate(grid: &LocalGrid, values: &[f64], x: f64) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::Contract(format!(
            "{} curve values for a grid of {} points",
            values.len(),
            grid.len()
        )));
    }
    let (j, t) = grid.locate(x);
    Ok(lerp(values, j, t))
}

/// Kernel constants used by the effective degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelFunctionals {
    /// `W(0)`
    pub w0: f64,
    /// `∫ W(t)^2 dt`
    pub int_w2: f64,
    /// `{W(0) - ½∫W²} / ∫{W(t) - ½(W*W)(t)}² dt`
    pub tau_w: f64,
}

/// `W(0)`, `∫W²` and `τ_W`, by adaptive quadrature. The self-convolution `W*W`
/// is itself integrated numerically, so no closed form is assumed for any kernel.
pub fn kernel_functionals(kind: KernelKind) -> KernelFunctionals {
    static GAUSSIAN: OnceLock<KernelFunctionals> = OnceLock::new();
    static EPANECHNIKOV: OnceLock<KernelFunctionals> = OnceLock::new();
    let cell = match kind {
        KernelKind::Gaussian => &GAUSSIAN,
        KernelKind::Epanechnikov => &EPANECHNIKOV,
    };
    *cell.get_or_init(|| compute_functionals(kind))
}

fn compute_functionals(kind: KernelKind) -> KernelFunctionals {
    let r = kind.effective_radius();
    let w = |t: f64| kind.eval(t);
    let w0 = w(0.0);
    let int_w2 = quad::integrate(|t| w(t) * w(t), -r, r, 1e-13);
    let conv = |t: f64| {
        let lo = (t - r).max(-r);
        let hi = (t + r).min(r);
        if hi <= lo {
            0.0
        } else {
            quad::integrate(|s| w(s) * w(t - s), lo, hi, 1e-12)
        }
    };
    let denom = quad::integrate(
        |t| {
            let d = w(t) - 0.5 * conv(t);
            d * d
        },
        -2.0 * r,
        2.0 * r,
        1e-11,
    );
    let numer = w0 - 0.5 * int_w2;
    KernelFunctionals { w0, int_w2, tau_w: numer / denom }
}

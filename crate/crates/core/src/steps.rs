//! E- and M-step building blocks shared by every model variant.
//!
//! All per-grid-point sums run in index order over observations, so results do
//! not depend on how grid points are scheduled across threads.

use std::borrow::Cow;

use rayon::prelude::*;

use crate::config::{Contamination, FitConfig};
use crate::density::{cg_log_parts, log_sum_exp, normal_log_pdf};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, LocalGrid};
use crate::params::{ComponentScalars, Posterior, SiteValues};

/// Below this total responsibility a component counts as empty.
pub const EMPTY_COMPONENT: f64 = 1e-8;

/// Global E-step: `γ_ik ∝ π_k(x_i) f_CG(y_i)` and `λ_ik = α_k N(y_i) / f_CG(y_i)`.
///
/// With `gaussian` set, the density is the plain normal and `λ ≡ 1`. Returns the
/// posterior and the observed-data log-likelihood at the supplied parameters.
pub fn estep(
    y: &[f64],
    sites: &SiteValues,
    scalars: &[ComponentScalars],
    gaussian: bool,
) -> Result<(Posterior, f64)> {
    let n = y.len();
    let k = scalars.len();
    let mut gamma = vec![0.0; n * k];
    let mut lambda = vec![0.0; n * k];
    let mut joint = vec![0.0; k];
    let mut loglik = 0.0;
    for i in 0..n {
        for c in 0..k {
            let m = sites.mean[c][i];
            let v = sites.var[c][i];
            let lp = sites.pi[c][i].ln();
            if gaussian {
                joint[c] = lp + normal_log_pdf(y[i], m, v);
                lambda[i * k + c] = 1.0;
            } else {
                let s = scalars[c];
                let (good, total) = cg_log_parts(y[i], m, v, s.alpha, s.eta);
                joint[c] = lp + total;
                lambda[i * k + c] = if total == f64::NEG_INFINITY {
                    1.0
                } else {
                    (good - total).exp().clamp(0.0, 1.0)
                };
            }
        }
        let lse = log_sum_exp(&joint);
        if !lse.is_finite() {
            return Err(Error::FitFailure(format!(
                "observation {i} has zero or non-finite likelihood under every component"
            )));
        }
        loglik += lse;
        let row = &mut gamma[i * k..(i + 1) * k];
        let mut total = 0.0;
        for c in 0..k {
            row[c] = (joint[c] - lse).exp();
            total += row[c];
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok((Posterior::from_flat(n, k, gamma, lambda), loglik))
}

/// Fails when some component has collapsed to (numerically) no responsibility.
pub fn check_nonempty(post: &Posterior) -> Result<()> {
    for (c, nk) in post.component_sizes().iter().enumerate() {
        if !(*nk >= EMPTY_COMPONENT) {
            return Err(Error::FitFailure(format!(
                "component {} is empty (total responsibility {nk:e})",
                c + 1
            )));
        }
    }
    Ok(())
}

/// M-step weights `w_ik = γ_ik (λ_ik + (1 - λ_ik)/η_k)`, component-major.
pub fn mstep_weights(post: &Posterior, eta: &[f64]) -> Vec<Vec<f64>> {
    (0..post.k())
        .map(|c| {
            (0..post.n())
                .map(|i| {
                    let l = post.lambda(i, c);
                    post.gamma(i, c) * (l + (1.0 - l) / eta[c])
                })
                .collect()
        })
        .collect()
}

/// Responsibilities of one component as a column.
pub fn gamma_column(post: &Posterior, c: usize) -> Vec<f64> {
    (0..post.n()).map(|i| post.gamma(i, c)).collect()
}

/// `W_h(x_i - u_g)` for every grid point and observation.
///
/// Rows whose weights vanish (possible with compact kernels) are rebuilt with the
/// bandwidth doubled at that grid point.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    xs: Vec<f64>,
    grid: Vec<f64>,
    kern: KernelSpec,
    rows: Vec<Vec<f64>>,
    widened: usize,
}

const MAX_WIDEN: usize = 60;

impl KernelMatrix {
    pub fn new(xs: &[f64], grid: &LocalGrid, kern: KernelSpec) -> Self {
        let mut widened = 0;
        let rows = grid
            .points()
            .iter()
            .map(|&u| {
                let mut h = kern.h;
                let mut row = kernel_row(xs, u, &kern);
                let mut tries = 0;
                while row.iter().sum::<f64>() <= 0.0 && tries < MAX_WIDEN {
                    h *= 2.0;
                    row = kernel_row(xs, u, &kern.with_bandwidth(h));
                    tries += 1;
                }
                if tries > 0 {
                    widened += 1;
                }
                if row.iter().sum::<f64>() <= 0.0 {
                    row = vec![1.0; xs.len()];
                }
                row
            })
            .collect();
        KernelMatrix {
            xs: xs.to_vec(),
            grid: grid.points().to_vec(),
            kern,
            rows,
            widened,
        }
    }

    pub fn row(&self, g: usize) -> &[f64] {
        &self.rows[g]
    }

    /// Grid points whose kernel row had to be widened at construction.
    pub fn widened_rows(&self) -> usize {
        self.widened
    }

    /// A kernel row at grid point `g` with `Σ_i w_i W > 0`, widening the bandwidth
    /// locally if needed. The flag reports whether widening happened.
    pub fn row_for(&self, g: usize, w: &[f64]) -> Option<(Cow<'_, [f64]>, bool)> {
        let base = &self.rows[g];
        if dot(w, base) > 0.0 {
            return Some((Cow::Borrowed(base.as_slice()), false));
        }
        let mut h = self.kern.h;
        for _ in 0..MAX_WIDEN {
            h *= 2.0;
            let row = kernel_row(&self.xs, self.grid[g], &self.kern.with_bandwidth(h));
            if dot(w, &row) > 0.0 {
                return Some((Cow::Owned(row), true));
            }
        }
        let flat = vec![1.0; self.xs.len()];
        if dot(w, &flat) > 0.0 {
            return Some((Cow::Owned(flat), true));
        }
        None
    }
}

fn kernel_row(xs: &[f64], u: f64, kern: &KernelSpec) -> Vec<f64> {
    xs.iter().map(|&x| kern.weight(x - u)).collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Local curves produced by a kernel-weighted M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCurves {
    pub pi: Vec<Vec<f64>>,
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
    /// `(grid index, component)` pairs where the bandwidth had to be widened.
    pub widened: Vec<(usize, usize)>,
}

/// Kernel-weighted local mean `m_k(u) = Σ w W y / Σ w W` for every grid point.
pub fn local_means(
    kmat: &KernelMatrix,
    w: &[f64],
    y: &[f64],
) -> Result<(Vec<f64>, Vec<usize>)> {
    let out: Vec<Result<(f64, bool)>> = (0..kmat.rows.len())
        .into_par_iter()
        .map(|g| {
            let (row, widened) = kmat
                .row_for(g, w)
                .ok_or_else(|| Error::FitFailure("component has no weight anywhere".into()))?;
            let mut sw = 0.0;
            let mut swy = 0.0;
            for i in 0..y.len() {
                let t = w[i] * row[i];
                sw += t;
                swy += t * y[i];
            }
            Ok((swy / sw, widened))
        })
        .collect();
    let mut means = Vec::with_capacity(out.len());
    let mut widened = Vec::new();
    for (g, r) in out.into_iter().enumerate() {
        let (m, wd) = r?;
        means.push(m);
        if wd {
            widened.push(g);
        }
    }
    Ok((means, widened))
}

/// Full local M-step for one component: `π_k(u)`, `m_k(u)`, `σ²_k(u)`.
pub fn local_component(
    kmat: &KernelMatrix,
    gamma: &[f64],
    w: &[f64],
    y: &[f64],
    var_floor: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<usize>)> {
    let out: Vec<Result<(f64, f64, f64, bool)>> = (0..kmat.rows.len())
        .into_par_iter()
        .map(|g| {
            let base = kmat.row(g);
            let mut sgw = 0.0;
            let mut sw_all = 0.0;
            for i in 0..y.len() {
                sgw += gamma[i] * base[i];
                sw_all += base[i];
            }
            let pi = sgw / sw_all;
            let (row, widened) = kmat
                .row_for(g, w)
                .ok_or_else(|| Error::FitFailure("component has no weight anywhere".into()))?;
            let mut sw = 0.0;
            let mut swy = 0.0;
            let mut sg = 0.0;
            for i in 0..y.len() {
                let t = w[i] * row[i];
                sw += t;
                swy += t * y[i];
                sg += gamma[i] * row[i];
            }
            let m = swy / sw;
            let mut ss = 0.0;
            for i in 0..y.len() {
                let r = y[i] - m;
                ss += w[i] * row[i] * r * r;
            }
            let var = (ss / sg).max(var_floor);
            Ok((pi, m, var, widened))
        })
        .collect();
    let g_len = out.len();
    let mut pi = Vec::with_capacity(g_len);
    let mut mean = Vec::with_capacity(g_len);
    let mut var = Vec::with_capacity(g_len);
    let mut widened = Vec::new();
    for (g, r) in out.into_iter().enumerate() {
        let (p, m, v, wd) = r?;
        pi.push(p);
        mean.push(m);
        var.push(if v.is_finite() { v } else { var_floor });
        if wd {
            widened.push(g);
        }
    }
    Ok((pi, mean, var, widened))
}

/// Local M-step for all components with `(α, η)` held fixed.
pub fn local_mstep(
    kmat: &KernelMatrix,
    post: &Posterior,
    eta: &[f64],
    y: &[f64],
    var_floor: f64,
) -> Result<LocalCurves> {
    let w = mstep_weights(post, eta);
    let mut curves = LocalCurves {
        pi: Vec::new(),
        mean: Vec::new(),
        var: Vec::new(),
        widened: Vec::new(),
    };
    for c in 0..post.k() {
        let gamma = gamma_column(post, c);
        let (p, m, v, wd) = local_component(kmat, &gamma, &w[c], y, var_floor)?;
        curves.pi.push(p);
        curves.mean.push(m);
        curves.var.push(v);
        curves.widened.extend(wd.into_iter().map(|g| (g, c)));
    }
    Ok(curves)
}

/// `α_k = Σ γ λ / Σ γ`, clamped by the config.
pub fn update_alpha(post: &Posterior, config: &FitConfig) -> Vec<f64> {
    let sizes = post.component_sizes();
    (0..post.k())
        .map(|c| {
            let s: f64 = (0..post.n()).map(|i| post.gamma(i, c) * post.lambda(i, c)).sum();
            config.clamp_alpha(s / sizes[c])
        })
        .collect()
}

/// `η_k = max{1, b_k / a_k}` with `a_k = Σ γ(1-λ)` and
/// `b_k = Σ γ(1-λ)(y - m)² / σ²`; `η_k = 1` when `a_k < 1e-10`.
pub fn update_eta(post: &Posterior, y: &[f64], mean: &[Vec<f64>], var: &[Vec<f64>]) -> Vec<f64> {
    (0..post.k())
        .map(|c| {
            let mut a = 0.0;
            let mut b = 0.0;
            for i in 0..post.n() {
                let t = post.gamma(i, c) * (1.0 - post.lambda(i, c));
                let r = y[i] - mean[c][i];
                a += t;
                b += t * r * r / var[c][i];
            }
            if a < 1e-10 {
                1.0
            } else {
                (b / a).max(1.0)
            }
        })
        .collect()
}

/// Largest change across two flattened parameter vectors, relative to
/// `max(1, |old|)` so that values near zero are compared absolutely.
pub fn param_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(o, n)| (n - o).abs() / o.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Initial scalars for a fit under the given contamination mode.
pub fn mode_scalars(mode: Contamination, estimated: &[ComponentScalars]) -> Vec<ComponentScalars> {
    match mode {
        Contamination::Estimate => estimated.to_vec(),
        Contamination::Frozen { alpha, eta } => vec![ComponentScalars { alpha, eta }; estimated.len()],
        Contamination::Disabled => vec![ComponentScalars::GAUSSIAN; estimated.len()],
    }
}

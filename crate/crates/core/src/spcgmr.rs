//! Semiparametric contaminated mixture of regressions: scalar `π_k`, `σ²_k`,
//! `α_k`, `η_k` and regression curves `m_k(u)` on a local grid.
//!
//! Fitted by a modified ECM. CM-step 1 (with `η` fixed) sets `π_k = n_k / n`,
//! updates `α_k`, smooths each `m_k` with the kernel weights
//! `w_ik W_h(x_i - u)`, interpolates it back to the sample sites and sets
//! `σ²_k = Σ w_ik (y_i - m_k(x_i))² / n_k`. CM-step 2 updates `η`.

use crate::cgmlr::fit_cgmlr;
use crate::config::{Contamination, FitConfig};
use crate::data::Dataset;
use crate::density::{cg_log_density, log_sum_exp};
use crate::error::{Error, Result};
use crate::fit::{build_report, check_sample_size, FitOutput, IterationSnapshot, Observer};
use crate::kernel::{KernelSpec, LocalGrid, Stencil};
use crate::params::{sp_site_values, ComponentScalars, ModelKind, ModelParams, Posterior, SpcgmrParams};
use crate::steps::{
    check_nonempty, estep, gamma_column, local_means, mstep_weights, param_change, update_alpha,
    update_eta, KernelMatrix,
};

/// Observed-data log-likelihood `Σ_i log Σ_k π_k f_CG(y_i | m_k(x_i), σ²_k, α_k, η_k)`.
pub fn loglik_spcgmr(data: &Dataset, params: &SpcgmrParams) -> Result<f64> {
    params.validate()?;
    let st = params.grid.stencil(data.x());
    let mut total = 0.0;
    let mut terms = vec![0.0; params.k()];
    for (i, &y) in data.y().iter().enumerate() {
        for (c, t) in terms.iter_mut().enumerate() {
            let s = params.scalars[c];
            *t = params.pi[c].ln() + cg_log_density(y, st.eval(&params.mean[c], i), params.var[c], s.alpha, s.eta)?;
        }
        total += log_sum_exp(&terms);
    }
    if !total.is_finite() {
        return Err(Error::Contract(format!("log-likelihood is not finite ({total})")));
    }
    Ok(total)
}

fn flatten(p: &SpcgmrParams) -> Vec<f64> {
    let mut v = p.pi.clone();
    v.extend(&p.var);
    v.extend(p.mean.concat());
    v.extend(p.scalars.iter().flat_map(|s| [s.alpha, s.eta]));
    v
}

pub fn fit_spcgmr(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
) -> Result<FitOutput> {
    fit_spcgmr_observed(data, k, kern, grid, config, None)
}

/// [`fit_spcgmr`] calling `observer` after every iteration.
pub fn fit_spcgmr_observed(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
    mut observer: Observer<'_>,
) -> Result<FitOutput> {
    config.validate()?;
    check_sample_size(data, k)?;
    let init = fit_cgmlr(data, k, config)?;
    let mut warnings = Vec::new();
    if init.failed_starts > 0 {
        warnings.push(format!("initializer: {} random starts failed", init.failed_starts));
    }
    let (x, y) = (data.x(), data.y());
    let floor = data.variance_floor();
    let gaussian = config.contamination == Contamination::Disabled;
    let estimate = config.contamination == Contamination::Estimate;
    let kmat = KernelMatrix::new(x, grid, *kern);
    if kmat.widened_rows() > 0 {
        warnings.push(format!("bandwidth widened at {} grid points with no data in reach", kmat.widened_rows()));
    }
    let stencil = grid.stencil(x);
    let mut params = SpcgmrParams {
        grid: grid.clone(),
        pi: init.params.pi.clone(),
        var: init.params.var.clone(),
        mean: init
            .params
            .beta
            .iter()
            .map(|b| grid.points().iter().map(|&u| b[0] + b[1] * u).collect())
            .collect(),
        scalars: init.params.scalars.clone(),
    };
    let mut sites = sp_site_values(&params, &stencil);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        let (post, ll) = estep(y, &sites, &params.scalars, gaussian)?;
        trace.push(ll);
        check_nonempty(&post)?;
        iterations += 1;

        // CM-step 1 with eta fixed
        let mut scalars = params.scalars.clone();
        if estimate {
            for (s, a) in scalars.iter_mut().zip(update_alpha(&post, config)) {
                s.alpha = a;
            }
        }
        let (mut next, widened) = cm_curves(&post, scalars, y, grid, &kmat, &stencil, floor)?;
        if widened > 0 && warnings.len() < 20 {
            warnings.push(format!("iteration {iterations}: bandwidth widened at {widened} points"));
        }
        let next_sites = sp_site_values(&next, &stencil);

        // CM-step 2
        if estimate {
            for (s, e) in next.scalars.iter_mut().zip(update_eta(&post, y, &next_sites.mean, &next_sites.var)) {
                s.eta = e;
            }
        }
        let change = param_change(&flatten(&params), &flatten(&next));
        params = next;
        sites = next_sites;
        if let Some(f) = observer.as_mut() {
            let snapshot = ModelParams::Semiparametric(params.clone());
            f(&IterationSnapshot { iteration: iterations, posterior: &post, params: &snapshot, loglik: ll });
        }
        if change < config.tol {
            converged = true;
            break;
        }
    }
    let (post, ll) = estep(y, &sites, &params.scalars, gaussian)?;
    trace.push(ll);
    if !converged {
        warnings.push(format!("stopped at the iteration cap ({iterations}) before converging"));
    }
    let kind = if gaussian { ModelKind::Spgmr } else { ModelKind::Spcgmr };
    let params = ModelParams::Semiparametric(params);
    let report = build_report(kind, data, &params, &post, trace, iterations, converged, Some(kern), warnings)?;
    Ok(FitOutput { params, posterior: post, report })
}

/// `π_k = n_k/n`, kernel-smoothed `m_k(u)` and `σ²_k = Σ w_ik (y_i - m_k(x_i))² / n_k`
/// for the given scalars. Also returns how many grid points needed a wider bandwidth.
fn cm_curves(
    post: &Posterior,
    scalars: Vec<ComponentScalars>,
    y: &[f64],
    grid: &LocalGrid,
    kmat: &KernelMatrix,
    stencil: &Stencil,
    floor: f64,
) -> Result<(SpcgmrParams, usize)> {
    let n = y.len() as f64;
    let sizes = post.component_sizes();
    let eta: Vec<f64> = scalars.iter().map(|s| s.eta).collect();
    let w = mstep_weights(post, &eta);
    let mut mean = Vec::with_capacity(w.len());
    let mut widened = 0;
    for wc in &w {
        let (m, wd) = local_means(kmat, wc, y)?;
        widened += wd.len();
        mean.push(m);
    }
    let var: Vec<f64> = mean
        .iter()
        .enumerate()
        .map(|(c, m)| {
            let ms = stencil.apply(m);
            let ss: f64 = (0..y.len())
                .map(|i| {
                    let r = y[i] - ms[i];
                    w[c][i] * r * r
                })
                .sum();
            (ss / sizes[c]).max(floor)
        })
        .collect();
    let pi = sizes.iter().map(|s| s / n).collect();
    Ok((SpcgmrParams { grid: grid.clone(), pi, var, mean, scalars }, widened))
}

/// One first CM-step with `(α, η)` held at `scalars`.
pub fn mstep_semiparametric(
    data: &Dataset,
    post: &Posterior,
    scalars: &[ComponentScalars],
    grid: &LocalGrid,
    kern: &KernelSpec,
) -> Result<SpcgmrParams> {
    let kmat = KernelMatrix::new(data.x(), grid, *kern);
    let stencil = grid.stencil(data.x());
    Ok(cm_curves(post, scalars.to_vec(), data.y(), grid, &kmat, &stencil, data.variance_floor())?.0)
}

/// Mixing-proportion update `π_k = Σ_i γ_ik / n` from responsibility columns.
pub fn mixing_proportions(post: &Posterior) -> Vec<f64> {
    let n = post.n() as f64;
    (0..post.k()).map(|c| gamma_column(post, c).iter().sum::<f64>() / n).collect()
}

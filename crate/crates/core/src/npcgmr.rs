//! Nonparametric contaminated mixture of regressions: `π_k(x)`, `m_k(x)` and
//! `σ²_k(x)` are curves on a local grid, `α_k` and `η_k` are scalars.
//!
//! Two fitting algorithms are provided. Both compute responsibilities once per
//! iteration for all local points (the global E-step), which keeps component
//! labels consistent along the curves.
//!
//! * [`fit_npcgmr_backfit`]: with `(α, η)` frozen at the linear initializer's
//!   values, iterate E-step and local M-step until the curves settle; then
//!   freeze the curves and iterate E-step and scalar M-step for `(α, η)`.
//! * [`fit_npcgmr_ecm`]: a single ECM loop. CM-step 1 updates the curves and `α`
//!   with `η` fixed; CM-step 2 updates `η` with the new curves interpolated to
//!   the sample sites.

use crate::cgmlr::fit_cgmlr;
use crate::config::{Contamination, FitConfig};
use crate::data::Dataset;
use crate::error::Result;
use crate::fit::{build_report, check_sample_size, FitOutput, IterationSnapshot, Observer};
use crate::kernel::{KernelSpec, LocalGrid, Stencil};
use crate::params::{
    np_site_values, CgmlrParams, ComponentScalars, ModelKind, ModelParams, NpcgmrParams, Posterior,
};
use crate::steps::{
    check_nonempty, estep, local_mstep, param_change, update_alpha, update_eta, KernelMatrix,
    LocalCurves,
};

/// Global E-step at the current curve values (interpolated to the sample sites).
pub fn estep_global(data: &Dataset, params: &NpcgmrParams) -> Result<Posterior> {
    params.validate()?;
    let st = params.grid.stencil(data.x());
    let sites = np_site_values(params, &st);
    Ok(estep(data.y(), &sites, &params.scalars, false)?.0)
}

/// Local M-step at every grid point with `(α, η)` fixed:
/// `π_k(u) = Σγ W / Σ W`, `m_k(u) = Σ w W y / Σ w W`,
/// `σ²_k(u) = Σ w W (y - m_k(u))² / Σ γ W` floored at the variance floor.
pub fn mstep_local(
    data: &Dataset,
    post: &Posterior,
    scalars: &[ComponentScalars],
    grid: &LocalGrid,
    kern: &KernelSpec,
) -> Result<LocalCurves> {
    let kmat = KernelMatrix::new(data.x(), grid, *kern);
    let eta: Vec<f64> = scalars.iter().map(|s| s.eta).collect();
    local_mstep(&kmat, post, &eta, data.y(), data.variance_floor())
}

/// Scalar M-step with the curves fixed at the sample sites: returns `(α, η)`.
pub fn mstep_scalars(
    data: &Dataset,
    post: &Posterior,
    mean_sites: &[Vec<f64>],
    var_sites: &[Vec<f64>],
    config: &FitConfig,
) -> (Vec<f64>, Vec<f64>) {
    (update_alpha(post, config), update_eta(post, data.y(), mean_sites, var_sites))
}

/// Broadcast the linear fit over the grid: lines for `m`, constants for `π` and `σ²`.
pub(crate) fn broadcast_linear(p: &CgmlrParams, grid: &LocalGrid) -> NpcgmrParams {
    let g = grid.len();
    NpcgmrParams {
        grid: grid.clone(),
        pi: p.pi.iter().map(|&v| vec![v; g]).collect(),
        mean: p
            .beta
            .iter()
            .map(|b| grid.points().iter().map(|&u| b[0] + b[1] * u).collect())
            .collect(),
        var: p.var.iter().map(|&v| vec![v; g]).collect(),
        scalars: p.scalars.clone(),
    }
}

fn flatten(p: &NpcgmrParams) -> Vec<f64> {
    let mut v: Vec<f64> = p.pi.concat();
    v.extend(p.mean.concat());
    v.extend(p.var.concat());
    v.extend(p.scalars.iter().flat_map(|s| [s.alpha, s.eta]));
    v
}

fn widen_note(curves: &LocalCurves, notes: &mut Vec<String>, iteration: usize) {
    if !curves.widened.is_empty() && notes.len() < 20 {
        notes.push(format!(
            "iteration {iteration}: bandwidth widened at {} (grid point, component) pairs",
            curves.widened.len()
        ));
    }
}

fn emit(observer: &mut Observer<'_>, iteration: usize, post: &Posterior, p: &NpcgmrParams, ll: f64) {
    if let Some(f) = observer.as_mut() {
        let params = ModelParams::Nonparametric(p.clone());
        f(&IterationSnapshot { iteration, posterior: post, params: &params, loglik: ll });
    }
}

struct Setup {
    params: NpcgmrParams,
    kmat: KernelMatrix,
    stencil: Stencil,
    gaussian: bool,
    estimate: bool,
    floor: f64,
    warnings: Vec<String>,
}

fn setup(data: &Dataset, k: usize, kern: &KernelSpec, grid: &LocalGrid, config: &FitConfig) -> Result<Setup> {
    config.validate()?;
    check_sample_size(data, k)?;
    let init = fit_cgmlr(data, k, config)?;
    let mut warnings = Vec::new();
    if init.failed_starts > 0 {
        warnings.push(format!("initializer: {} random starts failed", init.failed_starts));
    }
    let kmat = KernelMatrix::new(data.x(), grid, *kern);
    if kmat.widened_rows() > 0 {
        warnings.push(format!("bandwidth widened at {} grid points with no data in reach", kmat.widened_rows()));
    }
    Ok(Setup {
        params: broadcast_linear(&init.params, grid),
        kmat,
        stencil: grid.stencil(data.x()),
        gaussian: config.contamination == Contamination::Disabled,
        estimate: config.contamination == Contamination::Estimate,
        floor: data.variance_floor(),
        warnings,
    })
}

/// Modified ECM fit.
pub fn fit_npcgmr_ecm(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
) -> Result<FitOutput> {
    fit_npcgmr_ecm_observed(data, k, kern, grid, config, None)
}

/// [`fit_npcgmr_ecm`] calling `observer` after every iteration.
pub fn fit_npcgmr_ecm_observed(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
    observer: Observer<'_>,
) -> Result<FitOutput> {
    let kind = if config.contamination == Contamination::Disabled { ModelKind::Npgmr } else { ModelKind::NpcgmrEcm };
    run_ecm(data, k, kern, grid, config, kind, observer)
}

pub(crate) fn run_ecm(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
    kind: ModelKind,
    mut observer: Observer<'_>,
) -> Result<FitOutput> {
    let Setup { mut params, kmat, stencil, gaussian, estimate, floor, mut warnings } =
        setup(data, k, kern, grid, config)?;
    let y = data.y();
    let mut sites = np_site_values(&params, &stencil);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        let (post, ll) = estep(y, &sites, &params.scalars, gaussian)?;
        trace.push(ll);
        check_nonempty(&post)?;
        iterations += 1;

        // CM-step 1: curves and alpha, eta held at its previous value
        let eta: Vec<f64> = params.scalars.iter().map(|s| s.eta).collect();
        let curves = local_mstep(&kmat, &post, &eta, y, floor)?;
        widen_note(&curves, &mut warnings, iterations);
        let mut scalars = params.scalars.clone();
        if estimate {
            for (s, a) in scalars.iter_mut().zip(update_alpha(&post, config)) {
                s.alpha = a;
            }
        }
        let mut next = NpcgmrParams {
            grid: grid.clone(),
            pi: curves.pi,
            mean: curves.mean,
            var: curves.var,
            scalars,
        };
        let next_sites = np_site_values(&next, &stencil);

        // CM-step 2: eta from the updated curves at the sample sites
        if estimate {
            for (s, e) in next.scalars.iter_mut().zip(update_eta(&post, y, &next_sites.mean, &next_sites.var)) {
                s.eta = e;
            }
        }
        let change = param_change(&flatten(&params), &flatten(&next));
        params = next;
        sites = next_sites;
        emit(&mut observer, iterations, &post, &params, ll);
        if change < config.tol {
            converged = true;
            break;
        }
    }
    finish(data, kind, kern, params, &sites, gaussian, trace, iterations, converged, warnings)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    data: &Dataset,
    kind: ModelKind,
    kern: &KernelSpec,
    params: NpcgmrParams,
    sites: &crate::params::SiteValues,
    gaussian: bool,
    mut trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    mut warnings: Vec<String>,
) -> Result<FitOutput> {
    let (post, ll) = estep(data.y(), sites, &params.scalars, gaussian)?;
    trace.push(ll);
    if !converged {
        warnings.push(format!("stopped at the iteration cap ({iterations}) before converging"));
    }
    let params = ModelParams::Nonparametric(params);
    let report = build_report(kind, data, &params, &post, trace, iterations, converged, Some(kern), warnings)?;
    Ok(FitOutput { params, posterior: post, report })
}

/// One-step backfitting fit (`config.backfit_passes` outer passes, default 1).
pub fn fit_npcgmr_backfit(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
) -> Result<FitOutput> {
    fit_npcgmr_backfit_observed(data, k, kern, grid, config, None)
}

/// [`fit_npcgmr_backfit`] calling `observer` after every iteration of both stages.
pub fn fit_npcgmr_backfit_observed(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
    mut observer: Observer<'_>,
) -> Result<FitOutput> {
    let Setup { mut params, kmat, stencil, gaussian, estimate, floor, mut warnings } =
        setup(data, k, kern, grid, config)?;
    let y = data.y();
    let mut sites = np_site_values(&params, &stencil);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = true;
    for _pass in 0..config.backfit_passes {
        // Stage 1: curves with (alpha, eta) frozen
        let mut stage_converged = false;
        for _ in 0..config.max_iter {
            let (post, ll) = estep(y, &sites, &params.scalars, gaussian)?;
            trace.push(ll);
            check_nonempty(&post)?;
            iterations += 1;
            let eta: Vec<f64> = params.scalars.iter().map(|s| s.eta).collect();
            let curves = local_mstep(&kmat, &post, &eta, y, floor)?;
            widen_note(&curves, &mut warnings, iterations);
            let next = NpcgmrParams {
                grid: grid.clone(),
                pi: curves.pi,
                mean: curves.mean,
                var: curves.var,
                scalars: params.scalars.clone(),
            };
            let change = param_change(&flatten(&params), &flatten(&next));
            params = next;
            sites = np_site_values(&params, &stencil);
            emit(&mut observer, iterations, &post, &params, ll);
            if change < config.tol {
                stage_converged = true;
                break;
            }
        }
        converged &= stage_converged;

        // Stage 2: (alpha, eta) with the curves frozen at the sample sites
        if estimate {
            let mut stage_converged = false;
            for _ in 0..config.max_iter {
                let (post, ll) = estep(y, &sites, &params.scalars, gaussian)?;
                trace.push(ll);
                check_nonempty(&post)?;
                iterations += 1;
                let (alpha, eta) = mstep_scalars(data, &post, &sites.mean, &sites.var, config);
                let old: Vec<f64> = params.scalars.iter().flat_map(|s| [s.alpha, s.eta]).collect();
                for (s, (a, e)) in params.scalars.iter_mut().zip(alpha.into_iter().zip(eta)) {
                    s.alpha = a;
                    s.eta = e;
                }
                let new: Vec<f64> = params.scalars.iter().flat_map(|s| [s.alpha, s.eta]).collect();
                emit(&mut observer, iterations, &post, &params, ll);
                if param_change(&old, &new) < config.tol {
                    stage_converged = true;
                    break;
                }
            }
            converged &= stage_converged;
        }
    }
    let kind = if gaussian { ModelKind::Npgmr } else { ModelKind::NpcgmrEm };
    finish(data, kind, kern, params, &sites, gaussian, trace, iterations, converged, warnings)
}

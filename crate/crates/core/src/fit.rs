//! Uniform entry point over every model variant, and the report a fit produces.

use serde::{Deserialize, Serialize};

use crate::config::{Contamination, FitConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{default_grid_size, make_grid, KernelSpec, LocalGrid};
use crate::params::{ModelKind, ModelParams, Posterior};
use crate::selection::{complete_loglik, criteria, edf, model_df, Criteria};
use crate::{baselines, cgmlr, npcgmr, spcgmr};

/// Summary of a converged (or iteration-capped) fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ModelKind,
    pub k: usize,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log-likelihood at every E-step.
    pub loglik_trace: Vec<f64>,
    pub loglik: f64,
    /// Classification log-likelihood with MAP-hardened `z` and `v`.
    pub complete_loglik: f64,
    pub df: f64,
    pub criteria: Criteria,
    pub var_floor: f64,
    pub warnings: Vec<String>,
}

/// Parameters, final posterior and report of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub params: ModelParams,
    pub posterior: Posterior,
    pub report: FitReport,
}

/// State handed to an observer after every iteration of a curve fit.
#[derive(Debug)]
pub struct IterationSnapshot<'a> {
    pub iteration: usize,
    /// Posterior from this iteration's E-step.
    pub posterior: &'a Posterior,
    /// Parameters after this iteration's M-/CM-steps.
    pub params: &'a ModelParams,
    /// Log-likelihood at the parameters the E-step used.
    pub loglik: f64,
}

pub type Observer<'o> = Option<&'o mut dyn FnMut(&IterationSnapshot<'_>)>;

/// Everything besides the data needed to run a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub k: usize,
    pub kernel: KernelSpec,
    /// Number of equispaced local points; defaults to `min(n, 100)`.
    pub grid_size: Option<usize>,
    pub config: FitConfig,
}

impl FitSpec {
    pub fn new(k: usize, kernel: KernelSpec) -> Self {
        FitSpec { k, kernel, grid_size: None, config: FitConfig::default() }
    }

    pub fn grid_for(&self, data: &Dataset) -> Result<LocalGrid> {
        make_grid(data, self.grid_size.unwrap_or_else(|| default_grid_size(data.len())))
    }
}

pub(crate) fn check_sample_size(data: &Dataset, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Contract("K must be at least 1".into()));
    }
    if data.len() <= 5 * k {
        return Err(Error::Contract(format!(
            "need more than 5K = {} observations, got {}",
            5 * k,
            data.len()
        )));
    }
    Ok(())
}

/// Fit any model variant. Gaussian baselines ignore `config.contamination`.
pub fn fit(data: &Dataset, kind: ModelKind, spec: &FitSpec) -> Result<FitOutput> {
    match kind {
        ModelKind::Cgmlr => cgmlr::fit_cgmlr(data, spec.k, &spec.config).and_then(|f| f.into_output(data)),
        _ => {
            let grid = spec.grid_for(data)?;
            let kern = &spec.kernel;
            match kind {
                ModelKind::Npgmr => baselines::fit_npgmr(data, spec.k, kern, &grid, &spec.config),
                ModelKind::Spgmr => baselines::fit_spgmr(data, spec.k, kern, &grid, &spec.config),
                ModelKind::NpcgmrEm => npcgmr::fit_npcgmr_backfit(data, spec.k, kern, &grid, &spec.config),
                ModelKind::NpcgmrEcm => npcgmr::fit_npcgmr_ecm(data, spec.k, kern, &grid, &spec.config),
                ModelKind::Spcgmr => spcgmr::fit_spcgmr(data, spec.k, kern, &grid, &spec.config),
                ModelKind::Cgmlr => unreachable!(),
            }
        }
    }
}

/// Degrees of freedom of a fitted model.
pub fn fitted_df(kind: ModelKind, k: usize, data: &Dataset, kern: Option<&KernelSpec>) -> Result<f64> {
    let e = match kern {
        Some(kern) => {
            let (lo, hi) = data.x_range();
            edf(kern, hi - lo)?
        }
        None => 0.0,
    };
    model_df(kind, k, e)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build_report(
    kind: ModelKind,
    data: &Dataset,
    params: &ModelParams,
    posterior: &Posterior,
    loglik_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    kern: Option<&KernelSpec>,
    warnings: Vec<String>,
) -> Result<FitReport> {
    let loglik = *loglik_trace.last().expect("at least one E-step");
    let complete = complete_loglik(data, params, posterior);
    let df = fitted_df(kind, params.k(), data, kern)?;
    Ok(FitReport {
        model: kind,
        k: params.k(),
        n: data.len(),
        iterations,
        converged,
        loglik_trace,
        loglik,
        complete_loglik: complete,
        df,
        criteria: criteria(loglik, complete, df, data.len())?,
        var_floor: data.variance_floor(),
        warnings,
    })
}

/// Gaussian configuration derived from a caller's config.
pub(crate) fn gaussian_config(config: &FitConfig) -> FitConfig {
    config.clone().with_contamination(Contamination::Disabled)
}

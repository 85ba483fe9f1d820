//! Gaussian-error baselines. They run the contaminated code paths with the
//! contamination switched off: `λ ≡ 1`, and `α = η = 1` in the returned
//! parameters. The linear initializer is switched off the same way.

use crate::config::FitConfig;
use crate::data::Dataset;
use crate::error::Result;
use crate::fit::{gaussian_config, FitOutput, Observer};
use crate::kernel::{KernelSpec, LocalGrid};
use crate::npcgmr;
use crate::params::ModelKind;
use crate::spcgmr;

/// Nonparametric Gaussian mixture of regressions.
pub fn fit_npgmr(data: &Dataset, k: usize, kern: &KernelSpec, grid: &LocalGrid, config: &FitConfig) -> Result<FitOutput> {
    fit_npgmr_observed(data, k, kern, grid, config, None)
}

pub fn fit_npgmr_observed(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
    observer: Observer<'_>,
) -> Result<FitOutput> {
    npcgmr::run_ecm(data, k, kern, grid, &gaussian_config(config), ModelKind::Npgmr, observer)
}

/// Semiparametric Gaussian mixture of regressions.
pub fn fit_spgmr(data: &Dataset, k: usize, kern: &KernelSpec, grid: &LocalGrid, config: &FitConfig) -> Result<FitOutput> {
    fit_spgmr_observed(data, k, kern, grid, config, None)
}

pub fn fit_spgmr_observed(
    data: &Dataset,
    k: usize,
    kern: &KernelSpec,
    grid: &LocalGrid,
    config: &FitConfig,
    observer: Observer<'_>,
) -> Result<FitOutput> {
    spcgmr::fit_spcgmr_observed(data, k, kern, grid, &gaussian_config(config), observer)
}

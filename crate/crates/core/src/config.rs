use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the contamination scalars `(alpha, eta)` are treated during a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Contamination {
    /// Estimate `alpha` and `eta` (the contaminated models).
    Estimate,
    /// Hold `alpha` and `eta` at fixed values for every component; the
    /// contaminated code path still runs.
    Frozen { alpha: f64, eta: f64 },
    /// Plain Gaussian errors: `lambda` is identically 1 and the scalars are
    /// reported as `(1, 1)`. Used by the Gaussian baselines.
    Disabled,
}

/// Tuning knobs shared by all fitting routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Convergence threshold on the largest relative parameter change
    /// (curve and scalar fits).
    pub tol: f64,
    pub max_iter: usize,
    /// Convergence threshold on the relative log-likelihood change of the
    /// linear initializer.
    pub init_tol: f64,
    pub init_max_iter: usize,
    /// Random starts of the linear initializer.
    pub n_starts: usize,
    pub seed: u64,
    /// Lower clamp for `alpha`. Zero reproduces the unconstrained `(0, 1)` range.
    pub alpha_min: f64,
    pub contamination: Contamination,
    /// Outer passes of the backfitting algorithm (1 = one-step backfitting, at most 5).
    pub backfit_passes: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol: 1e-6,
            max_iter: 300,
            init_tol: 1e-8,
            init_max_iter: 500,
            n_starts: 10,
            seed: 0,
            alpha_min: 0.5,
            contamination: Contamination::Estimate,
            backfit_passes: 1,
        }
    }
}

/// Largest `alpha` an update may produce.
pub const ALPHA_MAX: f64 = 1.0 - 1e-6;

/// Largest number of backfitting passes accepted.
pub const MAX_BACKFIT_PASSES: usize = 5;

impl FitConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_contamination(mut self, c: Contamination) -> Self {
        self.contamination = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.init_tol > 0.0) {
            return Err(Error::Contract("tolerances must be positive".into()));
        }
        if self.max_iter == 0 || self.init_max_iter == 0 || self.n_starts == 0 {
            return Err(Error::Contract("iteration and start counts must be positive".into()));
        }
        if !(0.0..ALPHA_MAX).contains(&self.alpha_min) {
            return Err(Error::Contract(format!(
                "alpha_min must lie in [0, {ALPHA_MAX}), got {}",
                self.alpha_min
            )));
        }
        if !(1..=MAX_BACKFIT_PASSES).contains(&self.backfit_passes) {
            return Err(Error::Contract(format!(
                "backfit_passes must lie in 1..={MAX_BACKFIT_PASSES}"
            )));
        }
        if let Contamination::Frozen { alpha, eta } = self.contamination {
            if !(alpha > 0.0 && alpha <= 1.0 && eta >= 1.0 && eta.is_finite()) {
                return Err(Error::Contract(format!("invalid frozen scalars ({alpha}, {eta})")));
            }
        }
        Ok(())
    }

    pub(crate) fn clamp_alpha(&self, a: f64) -> f64 {
        a.clamp(self.alpha_min.max(f64::MIN_POSITIVE), ALPHA_MAX)
    }
}

//! Robust finite mixtures of regressions with contaminated Gaussian errors.
//!
//! Each component error follows `α N(0, σ²) + (1 - α) N(0, η σ²)`, so mild
//! outliers are absorbed by the inflated part instead of distorting the fit.
//! Three model families are provided:
//!
//! * nonparametric: proportions, means and variances are all smooth functions
//!   of `x`, estimated by kernel local likelihood ([`npcgmr`]);
//! * semiparametric: only the means are curves ([`spcgmr`]);
//! * linear: straight-line components, used as the initializer ([`cgmlr`]).
//!
//! Gaussian versions of the smooth models live in [`baselines`].
//!
//! ```
//! use mixreg::{fit, FitSpec, KernelSpec, ModelKind};
//! use mixreg::simbench::{generate, ScenarioKind, ScenarioSpec};
//!
//! let (data, _) = generate(&ScenarioSpec::new(ScenarioKind::B, 200, 7)?)?;
//! let spec = FitSpec::new(2, KernelSpec::gaussian(0.1)?);
//! let out = fit(&data, ModelKind::Spcgmr, &spec)?;
//! assert_eq!(out.params.k(), 2);
//! assert!(out.report.criteria.bic > out.report.criteria.aic);
//! # Ok::<(), mixreg::Error>(())
//! ```

pub mod baselines;
pub mod cgmlr;
pub mod cli;
pub mod config;
pub mod data;
pub mod density;
pub mod error;
pub mod fit;
pub mod io;
pub mod kernel;
pub mod npcgmr;
pub mod params;
pub mod posterior;
mod quad;
pub mod selection;
pub mod simbench;
pub mod spcgmr;
pub mod steps;

pub use config::{Contamination, FitConfig};
pub use data::{Dataset, Label};
pub use error::{Error, Result};
pub use fit::{fit, FitOutput, FitReport, FitSpec};
pub use kernel::{KernelKind, KernelSpec, LocalGrid};
pub use params::{ComponentScalars, ModelKind, ModelParams, Posterior};
pub use selection::Criteria;

/// Compiles and runs the code blocks of the guide under `book/`.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(contaminated_errors, "../../../book/src/contaminated-errors.md");
    chapter!(local_likelihood, "../../../book/src/local-likelihood.md");
    chapter!(algorithms, "../../../book/src/algorithms.md");
    chapter!(outliers, "../../../book/src/outliers.md");
    chapter!(selection, "../../../book/src/selection.md");
    chapter!(simulation, "../../../book/src/simulation.md");
    chapter!(command_line, "../../../book/src/command-line.md");
}

//! Contaminated Gaussian mixture of linear regressions.
//!
//! Fitted by ECM: the E-step gives `γ` and `λ`; CM-step 1 updates `π`, `α`, the
//! lines (weighted least squares with weights `w_ik`) and `σ²` with `η` fixed;
//! CM-step 2 updates `η`. Each CM-step is an exact conditional maximizer, so the
//! observed log-likelihood never decreases. The best of several random starts is
//! kept. This is both a model in its own right and the starting point of every
//! curve fit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Contamination, FitConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fit::{build_report, check_sample_size, FitOutput};
use crate::params::{linear_site_values, CgmlrParams, ComponentScalars, ModelKind, ModelParams, Posterior};
use crate::steps::{check_nonempty, estep, mode_scalars, mstep_weights, update_alpha, update_eta};

/// Result of [`fit_cgmlr`].
#[derive(Debug, Clone, PartialEq)]
pub struct CgmlrFit {
    pub params: CgmlrParams,
    pub posterior: Posterior,
    /// Observed-data log-likelihood at every E-step of the winning start.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the winning random start.
    pub start: usize,
    pub failed_starts: usize,
}

impl CgmlrFit {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("non-empty trace")
    }

    pub fn into_output(self, data: &Dataset) -> Result<FitOutput> {
        let params = ModelParams::Linear(self.params);
        let mut warnings = Vec::new();
        if self.failed_starts > 0 {
            warnings.push(format!("{} random starts failed", self.failed_starts));
        }
        let report = build_report(
            ModelKind::Cgmlr,
            data,
            &params,
            &self.posterior,
            self.loglik_trace,
            self.iterations,
            self.converged,
            None,
            warnings,
        )?;
        Ok(FitOutput { params, posterior: self.posterior, report })
    }
}

/// Weighted least-squares line `(intercept, slope)`; `None` if the weights sum to zero.
/// A covariate without spread gives a flat line through the weighted mean.
pub fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> Option<[f64; 2]> {
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return None;
    }
    let xbar = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - xbar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (y[i] - ybar);
    }
    let slope = if sxx > 1e-14 * sw * (1.0 + xbar * xbar) { sxy / sxx } else { 0.0 };
    Some([ybar - slope * xbar, slope])
}

/// Random initialization: `K` contiguous `y`-quantile slabs with a least-squares
/// line each, `π = 1/K`, `α = 0.95`, `η = 10`. The rng moves each point to a
/// uniformly chosen slab with probability 0.2.
pub fn init_random<R: Rng>(data: &Dataset, k: usize, rng: &mut R) -> CgmlrParams {
    init_slabs(data, k, rng, 0.2, Contamination::Estimate)
}

pub(crate) fn init_slabs<R: Rng>(
    data: &Dataset,
    k: usize,
    rng: &mut R,
    perturb: f64,
    mode: Contamination,
) -> CgmlrParams {
    let n = data.len();
    let (x, y) = (data.x(), data.y());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let mut slab = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        slab[i] = rank * k / n;
    }
    if k > 1 && perturb > 0.0 {
        for s in slab.iter_mut() {
            if rng.gen::<f64>() < perturb {
                *s = rng.gen_range(0..k);
            }
        }
    }
    let ones = vec![1.0; n];
    let global = weighted_line(x, y, &ones).expect("non-empty data");
    let floor = data.variance_floor();
    let mut beta = Vec::with_capacity(k);
    let mut var = Vec::with_capacity(k);
    for c in 0..k {
        let w: Vec<f64> = slab.iter().map(|&s| if s == c { 1.0 } else { 0.0 }).collect();
        let count: f64 = w.iter().sum();
        let line = if count >= 2.0 { weighted_line(x, y, &w).unwrap_or(global) } else { global };
        let mut ss = 0.0;
        for i in 0..n {
            let r = y[i] - line[0] - line[1] * x[i];
            ss += w[i] * r * r;
        }
        let v = if count >= 2.0 { ss / count } else { data.y_variance() };
        beta.push(line);
        var.push(v.max(floor));
    }
    let scalars = mode_scalars(mode, &vec![ComponentScalars { alpha: 0.95, eta: 10.0 }; k]);
    CgmlrParams { pi: vec![1.0 / k as f64; k], beta, var, scalars }
}

/// One ECM run from a given start.
pub(crate) fn run_ecm(data: &Dataset, start: CgmlrParams, config: &FitConfig) -> Result<CgmlrFit> {
    let (x, y) = (data.x(), data.y());
    let n = data.len() as f64;
    let k = start.k();
    let floor = data.variance_floor();
    let gaussian = config.contamination == Contamination::Disabled;
    let estimate = config.contamination == Contamination::Estimate;
    let mut params = start;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut post;
    loop {
        let sites = linear_site_values(&params, x);
        let (p, ll) = estep(y, &sites, &params.scalars, gaussian)?;
        post = p;
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if ((ll - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < config.init_tol {
                converged = true;
            }
        }
        trace.push(ll);
        if converged || iterations >= config.init_max_iter {
            break;
        }
        check_nonempty(&post)?;
        iterations += 1;

        // CM-step 1: pi, alpha, lines and variances with eta fixed
        let sizes = post.component_sizes();
        let eta: Vec<f64> = params.scalars.iter().map(|s| s.eta).collect();
        let w = mstep_weights(&post, &eta);
        let pi: Vec<f64> = sizes.iter().map(|s| s / n).collect();
        let alpha = if estimate { Some(update_alpha(&post, config)) } else { None };
        let mut beta = Vec::with_capacity(k);
        let mut var = Vec::with_capacity(k);
        for c in 0..k {
            let line = weighted_line(x, y, &w[c])
                .ok_or_else(|| Error::FitFailure(format!("component {} has no weight", c + 1)))?;
            let mut ss = 0.0;
            for i in 0..x.len() {
                let r = y[i] - line[0] - line[1] * x[i];
                ss += w[c][i] * r * r;
            }
            beta.push(line);
            var.push((ss / sizes[c]).max(floor));
        }
        let mut scalars = params.scalars.clone();
        if let Some(alpha) = alpha {
            for (s, a) in scalars.iter_mut().zip(alpha) {
                s.alpha = a;
            }
        }
        let next = CgmlrParams { pi, beta, var, scalars };

        // CM-step 2: eta with the lines and variances just updated
        let params_next = if estimate {
            let sites = linear_site_values(&next, x);
            let eta = update_eta(&post, y, &sites.mean, &sites.var);
            let mut next = next;
            for (s, e) in next.scalars.iter_mut().zip(eta) {
                s.eta = e;
            }
            next
        } else {
            next
        };
        params = params_next;
    }
    Ok(CgmlrFit {
        params,
        posterior: post,
        loglik_trace: trace,
        iterations,
        converged,
        start: 0,
        failed_starts: 0,
    })
}

/// Seed of random start `s` derived from the run seed.
pub(crate) fn start_seed(seed: u64, s: usize) -> u64 {
    seed ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fit a `K`-component model from `config.n_starts` starts and keep the one with
/// the highest final log-likelihood (lowest start index on ties).
///
/// Start 0 uses the unperturbed quantile slabs; the others perturb them.
pub fn fit_cgmlr(data: &Dataset, k: usize, config: &FitConfig) -> Result<CgmlrFit> {
    config.validate()?;
    check_sample_size(data, k)?;
    let runs: Vec<Result<CgmlrFit>> = (0..config.n_starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(start_seed(config.seed, s));
            let perturb = if s == 0 { 0.0 } else { 0.2 };
            let init = init_slabs(data, k, &mut rng, perturb, config.contamination);
            run_ecm(data, init, config).map(|mut f| {
                f.start = s;
                f
            })
        })
        .collect();
    let mut best: Option<CgmlrFit> = None;
    let mut failed = 0;
    let mut last_err = None;
    for r in runs {
        match r {
            Ok(f) if f.loglik().is_finite() => {
                if best.as_ref().is_none_or(|b| f.loglik() > b.loglik()) {
                    best = Some(f);
                }
            }
            Ok(_) => failed += 1,
            Err(e) => {
                failed += 1;
                last_err = Some(e);
            }
        }
    }
    let mut best = best.ok_or_else(|| {
        Error::FitFailure(format!(
            "all {} starts of the linear mixture failed (last: {})",
            config.n_starts,
            last_err.map_or_else(|| "non-finite likelihood".to_string(), |e| e.to_string())
        ))
    })?;
    best.failed_starts = failed;
    Ok(best)
}

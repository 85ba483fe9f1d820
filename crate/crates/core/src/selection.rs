//! Information criteria with effective degrees of freedom, and joint search over
//! the number of components and the bandwidth.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::density::normal_log_pdf;
use crate::error::{Error, Result};
use crate::fit::{fit, FitSpec};
use crate::io::fmt_num;
use crate::kernel::{kernel_functionals, KernelSpec};
use crate::params::{ModelKind, ModelParams, Posterior};
use crate::posterior::{map_classify, OUTLIER_THRESHOLD};

/// Effective degrees of freedom of one smoothed curve,
/// `τ_W h⁻¹ |Φ| {W(0) - ½∫W²}` with `|Φ|` the covariate span.
pub fn edf(kern: &KernelSpec, support_length: f64) -> Result<f64> {
    if !(support_length > 0.0 && support_length.is_finite()) {
        return Err(Error::Domain(format!("support length must be positive, got {support_length}")));
    }
    let f = kernel_functionals(kern.kind);
    Ok(f.tau_w / kern.h * support_length * (f.w0 - 0.5 * f.int_w2))
}

/// Degrees of freedom per model.
///
/// The nonparametric contaminated model has `3K - 1` curves and `2K` scalars; the
/// semiparametric one has `K` curves and `4K - 1` scalars. The Gaussian baselines
/// drop the `2K` contamination scalars (our convention: NPGMR `(3K-1) edf`,
/// SPGMR `K edf + 2K - 1`). The linear model counts `6K - 1` parameters.
pub fn model_df(kind: ModelKind, k: usize, edf: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Contract("K must be at least 1".into()));
    }
    if kind.is_smooth() && !(edf > 0.0) {
        return Err(Error::Contract(format!("edf must be positive, got {edf}")));
    }
    let kf = k as f64;
    Ok(match kind {
        ModelKind::NpcgmrEm | ModelKind::NpcgmrEcm => (3.0 * kf - 1.0) * edf + 2.0 * kf,
        ModelKind::Spcgmr => kf * edf + (4.0 * kf - 1.0),
        ModelKind::Npgmr => (3.0 * kf - 1.0) * edf,
        ModelKind::Spgmr => kf * edf + (2.0 * kf - 1.0),
        ModelKind::Cgmlr => 6.0 * kf - 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub aic: f64,
    pub bic: f64,
    pub icl: f64,
}

/// `AIC = -2ℓ + 2 df`, `BIC = -2ℓ + df log n`, `ICL = -2ℓ_c + df log n`.
pub fn criteria(loglik: f64, complete_loglik: f64, df: f64, n: usize) -> Result<Criteria> {
    if n == 0 || !(df > 0.0) {
        return Err(Error::Contract(format!("need n >= 1 and df > 0 (n = {n}, df = {df})")));
    }
    let ln_n = (n as f64).ln();
    Ok(Criteria {
        aic: -2.0 * loglik + 2.0 * df,
        bic: -2.0 * loglik + df * ln_n,
        icl: -2.0 * complete_loglik + df * ln_n,
    })
}

/// Classification log-likelihood with both latent indicators hardened: each
/// point goes to its MAP component, and counts as a good point when
/// `λ ≥ 0.5` there.
pub fn complete_loglik(data: &Dataset, params: &ModelParams, post: &Posterior) -> f64 {
    let sites = params.site_values(data.x());
    let labels = map_classify(post);
    let scalars = params.scalars();
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let c = l - 1;
        let s = scalars[c];
        let y = data.y()[i];
        let m = sites.mean[c][i];
        let v = sites.var[c][i];
        let good = post.lambda(i, c) >= OUTLIER_THRESHOLD;
        let term = if good {
            s.alpha.ln() + normal_log_pdf(y, m, v)
        } else {
            (1.0 - s.alpha).ln() + normal_log_pdf(y, m, s.eta * v)
        };
        total += sites.pi[c][i].ln() + term;
    }
    total
}

/// One evaluated `(K, h)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: usize,
    pub h: f64,
    /// `None` when the fit failed; the message is kept in `error`.
    pub fit: Option<CandidateFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub loglik: f64,
    pub complete_loglik: f64,
    pub df: f64,
    pub criteria: Criteria,
}

/// Full search table plus the arg-min cell per criterion (indices into `candidates`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub model: ModelKind,
    pub n: usize,
    pub candidates: Vec<Candidate>,
    pub best_aic: usize,
    pub best_bic: usize,
    pub best_icl: usize,
}

impl SelectionResult {
    pub fn chosen(&self, idx: usize) -> (usize, f64) {
        (self.candidates[idx].k, self.candidates[idx].h)
    }

    /// CSV with columns `model,K,h,loglik,df,aic,bic,icl,chosen_aic,chosen_bic,chosen_icl`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["model", "K", "h", "loglik", "df", "aic", "bic", "icl", "chosen_aic", "chosen_bic", "chosen_icl"])
            .map_err(io)?;
        for (idx, c) in self.candidates.iter().enumerate() {
            let num = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt_num);
            let f = c.fit.as_ref();
            w.write_record([
                self.model.name().to_string(),
                c.k.to_string(),
                fmt_num(c.h),
                num(f.map(|f| f.loglik)),
                num(f.map(|f| f.df)),
                num(f.map(|f| f.criteria.aic)),
                num(f.map(|f| f.criteria.bic)),
                num(f.map(|f| f.criteria.icl)),
                (idx == self.best_aic).to_string(),
                (idx == self.best_bic).to_string(),
                (idx == self.best_icl).to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Index of the smallest value, visiting cells sorted by `(K, h)` so ties go to
/// the smaller `K`, then the smaller `h`. Missing cells are skipped.
pub fn argmin_by(cells: &[(usize, f64, Option<f64>)]) -> Option<usize> {
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| cells[a].0.cmp(&cells[b].0).then(cells[a].1.total_cmp(&cells[b].1)));
    let mut best: Option<(usize, f64)> = None;
    for i in order {
        if let Some(v) = cells[i].2 {
            if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Fit every `(K, h)` pair and pick the minimizer of each criterion.
pub fn search_kh(
    data: &Dataset,
    model: ModelKind,
    k_set: &[usize],
    h_set: &[f64],
    base: &FitSpec,
) -> Result<SelectionResult> {
    if k_set.is_empty() || h_set.is_empty() {
        return Err(Error::Contract("K and h sets must be non-empty".into()));
    }
    let hs: Vec<f64> = if model.is_smooth() { h_set.to_vec() } else { vec![base.kernel.h] };
    let cells: Vec<(usize, f64)> = k_set.iter().flat_map(|&k| hs.iter().map(move |&h| (k, h))).collect();
    let candidates: Vec<Candidate> = cells
        .par_iter()
        .map(|&(k, h)| {
            let mut spec = base.clone();
            spec.k = k;
            let result = KernelSpec::new(spec.kernel.kind, h).and_then(|kern| {
                spec.kernel = kern;
                fit(data, model, &spec)
            });
            match result {
                Ok(out) => Candidate {
                    k,
                    h,
                    fit: Some(CandidateFit {
                        loglik: out.report.loglik,
                        complete_loglik: out.report.complete_loglik,
                        df: out.report.df,
                        criteria: out.report.criteria,
                    }),
                    error: None,
                },
                Err(e) => Candidate { k, h, fit: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let pick = |f: fn(&Criteria) -> f64| {
        let v: Vec<(usize, f64, Option<f64>)> =
            candidates.iter().map(|c| (c.k, c.h, c.fit.as_ref().map(|x| f(&x.criteria)))).collect();
        argmin_by(&v)
    };
    let (Some(best_aic), Some(best_bic), Some(best_icl)) = (pick(|c| c.aic), pick(|c| c.bic), pick(|c| c.icl)) else {
        let first = candidates.iter().find_map(|c| c.error.clone()).unwrap_or_default();
        return Err(Error::SelectionFailure(format!("all {} candidate fits failed ({first})", candidates.len())));
    };
    Ok(SelectionResult { model, n: data.len(), candidates, best_aic, best_bic, best_icl })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn edf_values() {
        let k = KernelSpec::gaussian(0.1).unwrap();
        // tau_W * 10 * (W(0) - ½∫W²) with the closed-form Gaussian constants
        let pi = std::f64::consts::PI;
        let numer = 1.0 / (2.0 * pi).sqrt() - 0.25 / pi.sqrt();
        let denom = 0.5 / pi.sqrt() - 1.0 / (6.0 * pi).sqrt() + 0.125 / (2.0 * pi).sqrt();
        let oracle = numer / denom * 10.0 * numer;
        assert_relative_eq!(edf(&k, 1.0).unwrap(), oracle, epsilon = 1e-6);
        assert_relative_eq!(edf(&k, 1.0).unwrap(), 6.544, epsilon = 1e-3);
        let e1 = edf(&k, 1.0).unwrap();
        assert_relative_eq!(edf(&k, 3.0).unwrap(), 3.0 * e1, epsilon = 1e-12);
        assert_relative_eq!(edf(&KernelSpec::gaussian(0.2).unwrap(), 1.0).unwrap(), e1 / 2.0, epsilon = 1e-12);
        assert!(edf(&k, 0.0).is_err());
    }

    #[test]
    fn df_formulas() {
        assert_relative_eq!(model_df(ModelKind::NpcgmrEcm, 2, 6.544).unwrap(), 36.72, epsilon = 1e-12);
        assert_relative_eq!(model_df(ModelKind::Spcgmr, 2, 6.544).unwrap(), 20.088, epsilon = 1e-12);
        assert_relative_eq!(model_df(ModelKind::Spcgmr, 1, 4.0).unwrap(), 7.0, epsilon = 1e-12);
        // contaminated minus Gaussian: 2K scalars
        for k in 1..5 {
            let d1 = model_df(ModelKind::Spcgmr, k, 3.3).unwrap() - model_df(ModelKind::Spgmr, k, 3.3).unwrap();
            let d2 = model_df(ModelKind::NpcgmrEm, k, 3.3).unwrap() - model_df(ModelKind::Npgmr, k, 3.3).unwrap();
            assert_relative_eq!(d1, 2.0 * k as f64, epsilon = 1e-12);
            assert_relative_eq!(d2, 2.0 * k as f64, epsilon = 1e-12);
        }
        assert_eq!(model_df(ModelKind::Cgmlr, 2, 0.0).unwrap(), 11.0);
    }

    #[test]
    fn criteria_substitution() {
        let n = (std::f64::consts::E * std::f64::consts::E).round() as usize; // 7, log 7 != 2
        let c = criteria(0.0, -1.5, 1.0, n).unwrap();
        assert_eq!(c.aic, 2.0);
        assert_relative_eq!(c.bic, (n as f64).ln(), epsilon = 1e-15);
        assert_relative_eq!(c.icl, 3.0 + (n as f64).ln(), epsilon = 1e-15);
        // log n > 2 -> AIC < BIC
        let c = criteria(-10.0, -12.0, 5.0, 100).unwrap();
        assert!(c.aic < c.bic);
        assert_relative_eq!(c.bic - c.aic, 5.0 * ((100f64).ln() - 2.0), epsilon = 1e-12);
        assert!(criteria(0.0, 0.0, 0.0, 10).is_err());
    }

    #[test]
    fn argmin_ties() {
        let cells = vec![
            (2, 0.1, Some(5.0)),
            (1, 0.3, Some(5.0)),
            (1, 0.2, Some(5.0)),
            (2, 0.2, Some(7.0)),
            (1, 0.1, None),
            (2, 0.3, Some(6.0)),
        ];
        assert_eq!(argmin_by(&cells), Some(2));
        assert_eq!(argmin_by(&[(1, 0.1, None)]), None);
    }
}

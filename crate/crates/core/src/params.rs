//! Parameter families of the three model shapes and the posterior they induce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{cg_log_density, log_sum_exp};
use crate::error::{Error, Result};
use crate::kernel::{interpolate, LocalGrid, Stencil};

/// Proportion of good points `alpha` and degree of contamination `eta` of one component.
///
/// `alpha == 1, eta == 1` is the Gaussian special case used by the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScalars {
    pub alpha: f64,
    pub eta: f64,
}

impl ComponentScalars {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(eta >= 1.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("eta must be finite and at least 1, got {eta}")));
        }
        Ok(ComponentScalars { alpha, eta })
    }

    pub const GAUSSIAN: ComponentScalars = ComponentScalars { alpha: 1.0, eta: 1.0 };
}

/// Which model a fit or a model file refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Contaminated Gaussian mixture of linear regressions.
    #[serde(rename = "cgmlr")]
    Cgmlr,
    /// Nonparametric Gaussian mixture of regressions.
    #[serde(rename = "npgmr")]
    Npgmr,
    /// Semiparametric Gaussian mixture of regressions.
    #[serde(rename = "spgmr")]
    Spgmr,
    /// Nonparametric contaminated model, one-step backfitting EM.
    #[serde(rename = "npcgmr-em")]
    NpcgmrEm,
    /// Nonparametric contaminated model, modified ECM.
    #[serde(rename = "npcgmr-ecm")]
    NpcgmrEcm,
    /// Semiparametric contaminated model, modified ECM.
    #[serde(rename = "spcgmr")]
    Spcgmr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Cgmlr,
        ModelKind::Npgmr,
        ModelKind::Spgmr,
        ModelKind::NpcgmrEm,
        ModelKind::NpcgmrEcm,
        ModelKind::Spcgmr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cgmlr => "cgmlr",
            ModelKind::Npgmr => "npgmr",
            ModelKind::Spgmr => "spgmr",
            ModelKind::NpcgmrEm => "npcgmr-em",
            ModelKind::NpcgmrEcm => "npcgmr-ecm",
            ModelKind::Spcgmr => "spcgmr",
        }
    }

    /// Whether the errors are contaminated Gaussian (as opposed to Gaussian).
    pub fn is_contaminated(self) -> bool {
        matches!(self, ModelKind::Cgmlr | ModelKind::NpcgmrEm | ModelKind::NpcgmrEcm | ModelKind::Spcgmr)
    }

    /// Whether the model needs a kernel and a local grid.
    pub fn is_smooth(self) -> bool {
        !matches!(self, ModelKind::Cgmlr)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ModelKind::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown model '{s}'")))
    }
}

/// Curves `π_k(u)`, `m_k(u)`, `σ²_k(u)` on a grid plus per-component scalars.
/// Curves are stored component-major: `pi[k][g]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcgmrParams {
    pub grid: LocalGrid,
    pub pi: Vec<Vec<f64>>,
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
    pub scalars: Vec<ComponentScalars>,
}

/// Scalar `π_k`, `σ²_k`, curves `m_k(u)` and per-component scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpcgmrParams {
    pub grid: LocalGrid,
    pub pi: Vec<f64>,
    pub var: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub scalars: Vec<ComponentScalars>,
}

/// Linear regression lines `β_k0 + β_k1 x` with scalar `π_k`, `σ²_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgmlrParams {
    pub pi: Vec<f64>,
    pub beta: Vec<[f64; 2]>,
    pub var: Vec<f64>,
    pub scalars: Vec<ComponentScalars>,
}

/// Any fitted parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum ModelParams {
    Nonparametric(NpcgmrParams),
    Semiparametric(SpcgmrParams),
    Linear(CgmlrParams),
}

/// Curve values at the sample sites, component-major (`mean[k][i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SiteValues {
    pub pi: Vec<Vec<f64>>,
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

const SUM_TOL: f64 = 1e-10;

fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SUM_TOL || p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain(format!("{what} is not a probability vector: {p:?}")));
    }
    Ok(())
}

fn check_positive(v: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = v.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("{what} must be positive, found {bad}")));
    }
    Ok(())
}

fn check_scalars(s: &[ComponentScalars]) -> Result<()> {
    for c in s {
        ComponentScalars::new(c.alpha, c.eta)?;
    }
    Ok(())
}

impl NpcgmrParams {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        let g = self.grid.len();
        if k == 0 || self.mean.len() != k || self.var.len() != k || self.scalars.len() != k {
            return Err(Error::Contract("inconsistent component counts".into()));
        }
        for c in self.pi.iter().chain(&self.mean).chain(&self.var) {
            if c.len() != g {
                return Err(Error::Contract("curve length differs from grid size".into()));
            }
        }
        for j in 0..g {
            let col: Vec<f64> = self.pi.iter().map(|c| c[j]).collect();
            check_simplex(&col, "pi curves at a grid point")?;
        }
        for c in &self.var {
            check_positive(c, "variance curve")?;
        }
        check_scalars(&self.scalars)
    }
}

impl SpcgmrParams {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 || self.mean.len() != k || self.var.len() != k || self.scalars.len() != k {
            return Err(Error::Contract("inconsistent component counts".into()));
        }
        if self.mean.iter().any(|c| c.len() != self.grid.len()) {
            return Err(Error::Contract("curve length differs from grid size".into()));
        }
        check_simplex(&self.pi, "mixing proportions")?;
        check_positive(&self.var, "variances")?;
        check_scalars(&self.scalars)
    }
}

impl CgmlrParams {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 || self.beta.len() != k || self.var.len() != k || self.scalars.len() != k {
            return Err(Error::Contract("inconsistent component counts".into()));
        }
        check_simplex(&self.pi, "mixing proportions")?;
        check_positive(&self.var, "variances")?;
        check_scalars(&self.scalars)
    }
}

impl ModelParams {
    pub fn k(&self) -> usize {
        match self {
            ModelParams::Nonparametric(p) => p.k(),
            ModelParams::Semiparametric(p) => p.k(),
            ModelParams::Linear(p) => p.k(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Nonparametric(p) => p.validate(),
            ModelParams::Semiparametric(p) => p.validate(),
            ModelParams::Linear(p) => p.validate(),
        }
    }

    pub fn grid(&self) -> Option<&LocalGrid> {
        match self {
            ModelParams::Nonparametric(p) => Some(&p.grid),
            ModelParams::Semiparametric(p) => Some(&p.grid),
            ModelParams::Linear(_) => None,
        }
    }

    pub fn scalars(&self) -> &[ComponentScalars] {
        match self {
            ModelParams::Nonparametric(p) => &p.scalars,
            ModelParams::Semiparametric(p) => &p.scalars,
            ModelParams::Linear(p) => &p.scalars,
        }
    }

    /// Whether `π` is a curve in `x` (otherwise it is a constant per component).
    pub fn pi_is_curve(&self) -> bool {
        matches!(self, ModelParams::Nonparametric(_))
    }

    pub fn var_is_curve(&self) -> bool {
        matches!(self, ModelParams::Nonparametric(_))
    }

    /// Mixing proportions at `x`; curve values are interpolated and renormalized.
    pub fn pi_at(&self, x: f64) -> Vec<f64> {
        match self {
            ModelParams::Nonparametric(p) => {
                let mut v: Vec<f64> = p
                    .pi
                    .iter()
                    .map(|c| interpolate(&p.grid, c, x).expect("curve length checked"))
                    .collect();
                normalize(&mut v);
                v
            }
            ModelParams::Semiparametric(p) => p.pi.clone(),
            ModelParams::Linear(p) => p.pi.clone(),
        }
    }

    pub fn mean_at(&self, k: usize, x: f64) -> f64 {
        match self {
            ModelParams::Nonparametric(p) => interpolate(&p.grid, &p.mean[k], x).expect("curve"),
            ModelParams::Semiparametric(p) => interpolate(&p.grid, &p.mean[k], x).expect("curve"),
            ModelParams::Linear(p) => p.beta[k][0] + p.beta[k][1] * x,
        }
    }

    pub fn var_at(&self, k: usize, x: f64) -> f64 {
        match self {
            ModelParams::Nonparametric(p) => interpolate(&p.grid, &p.var[k], x).expect("curve"),
            ModelParams::Semiparametric(p) => p.var[k],
            ModelParams::Linear(p) => p.var[k],
        }
    }

    /// Interpolated curve values at every `x`.
    pub fn site_values(&self, xs: &[f64]) -> SiteValues {
        match self {
            ModelParams::Nonparametric(p) => {
                let st = p.grid.stencil(xs);
                np_site_values(p, &st)
            }
            ModelParams::Semiparametric(p) => {
                let st = p.grid.stencil(xs);
                sp_site_values(p, &st)
            }
            ModelParams::Linear(p) => linear_site_values(p, xs),
        }
    }
}

pub(crate) fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for p in v.iter_mut() {
            *p /= s;
        }
    }
}

pub(crate) fn np_site_values(p: &NpcgmrParams, st: &Stencil) -> SiteValues {
    let k = p.k();
    let n = st.len();
    let mut pi: Vec<Vec<f64>> = p.pi.iter().map(|c| st.apply(c)).collect();
    let mut col = vec![0.0; k];
    for i in 0..n {
        for c in 0..k {
            col[c] = pi[c][i];
        }
        normalize(&mut col);
        for c in 0..k {
            pi[c][i] = col[c];
        }
    }
    SiteValues {
        pi,
        mean: p.mean.iter().map(|c| st.apply(c)).collect(),
        var: p.var.iter().map(|c| st.apply(c)).collect(),
    }
}

pub(crate) fn sp_site_values(p: &SpcgmrParams, st: &Stencil) -> SiteValues {
    let n = st.len();
    SiteValues {
        pi: p.pi.iter().map(|&v| vec![v; n]).collect(),
        mean: p.mean.iter().map(|c| st.apply(c)).collect(),
        var: p.var.iter().map(|&v| vec![v; n]).collect(),
    }
}

pub(crate) fn linear_site_values(p: &CgmlrParams, xs: &[f64]) -> SiteValues {
    let n = xs.len();
    SiteValues {
        pi: p.pi.iter().map(|&v| vec![v; n]).collect(),
        mean: p.beta.iter().map(|b| xs.iter().map(|&x| b[0] + b[1] * x).collect()).collect(),
        var: p.var.iter().map(|&v| vec![v; n]).collect(),
    }
}

/// Conditional density `p(y | x) = Σ_k π_k(x) f_CG(y | m_k(x), σ²_k(x), α_k, η_k)`.
pub fn mixture_density(y: f64, x: f64, params: &ModelParams) -> Result<f64> {
    Ok(mixture_log_density(y, x, params)?.exp())
}

pub fn mixture_log_density(y: f64, x: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("covariate must be finite, got {x}")));
    }
    let pi = params.pi_at(x);
    let terms = params
        .scalars()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            Ok(pi[k].ln() + cg_log_density(y, params.mean_at(k, x), params.var_at(k, x), s.alpha, s.eta)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_sum_exp(&terms))
}

/// Responsibilities `γ_ik` and good-point probabilities `λ_ik`, row-major `n × K`.
///
/// Responsibilities are global: one row per observation, shared by every local point.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    n: usize,
    k: usize,
    gamma: Vec<f64>,
    lambda: Vec<f64>,
}

impl Posterior {
    pub fn from_rows(gamma: Vec<Vec<f64>>, lambda: Vec<Vec<f64>>) -> Result<Self> {
        let n = gamma.len();
        if n == 0 || lambda.len() != n {
            return Err(Error::Contract("posterior needs matching non-empty gamma and lambda".into()));
        }
        let k = gamma[0].len();
        if k == 0 || gamma.iter().chain(&lambda).any(|r| r.len() != k) {
            return Err(Error::Contract("ragged posterior rows".into()));
        }
        let p = Posterior {
            n,
            k,
            gamma: gamma.concat(),
            lambda: lambda.concat(),
        };
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn from_flat(n: usize, k: usize, gamma: Vec<f64>, lambda: Vec<f64>) -> Self {
        debug_assert_eq!(gamma.len(), n * k);
        debug_assert_eq!(lambda.len(), n * k);
        Posterior { n, k, gamma, lambda }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn gamma(&self, i: usize, k: usize) -> f64 {
        self.gamma[i * self.k + k]
    }

    #[inline]
    pub fn lambda(&self, i: usize, k: usize) -> f64 {
        self.lambda[i * self.k + k]
    }

    pub fn gamma_row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.k..(i + 1) * self.k]
    }

    pub fn lambda_row(&self, i: usize) -> &[f64] {
        &self.lambda[i * self.k..(i + 1) * self.k]
    }

    /// `n_k = Σ_i γ_ik`.
    pub fn component_sizes(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.k];
        for i in 0..self.n {
            for (c, v) in s.iter_mut().enumerate() {
                *v += self.gamma(i, c);
            }
        }
        s
    }

    /// Checks row sums of `γ` and the range of `λ`.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            let row = self.gamma_row(i);
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOL || row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Domain(format!("gamma row {i} is not a probability vector")));
            }
            if self.lambda_row(i).iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Domain(format!("lambda row {i} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{cg_density, normal_pdf};
    use approx::assert_relative_eq;

    fn sp(pi: Vec<f64>, mean: Vec<f64>, var: Vec<f64>, s: Vec<ComponentScalars>) -> ModelParams {
        let grid = LocalGrid::new(vec![0.0, 1.0]).unwrap();
        ModelParams::Semiparametric(SpcgmrParams {
            grid,
            pi,
            var,
            mean: mean.into_iter().map(|m| vec![m, m]).collect(),
            scalars: s,
        })
    }

    #[test]
    fn single_component_is_cg_density() {
        let s = ComponentScalars::new(0.8, 15.0).unwrap();
        let p = sp(vec![1.0], vec![0.4], vec![2.0], vec![s]);
        let a = mixture_density(1.7, 0.3, &p).unwrap();
        let b = cg_density(1.7, 0.4, 2.0, 0.8, 15.0).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn identical_components_collapse() {
        let s = ComponentScalars::new(0.9, 20.0).unwrap();
        let p = sp(vec![0.5, 0.5], vec![1.0, 1.0], vec![0.5, 0.5], vec![s, s]);
        let a = mixture_density(-0.2, 0.5, &p).unwrap();
        assert_relative_eq!(a, cg_density(-0.2, 1.0, 0.5, 0.9, 20.0).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn gaussian_limit_two_components() {
        let g = ComponentScalars::GAUSSIAN;
        let p = sp(vec![0.3, 0.7], vec![-1.0, 2.0], vec![0.5, 1.5], vec![g, g]);
        for &y in &[-2.0, 0.0, 1.1, 4.0] {
            let oracle = 0.3 * normal_pdf(y, -1.0, 0.5) + 0.7 * normal_pdf(y, 2.0, 1.5);
            assert_relative_eq!(mixture_density(y, 0.1, &p).unwrap(), oracle, epsilon = 1e-14);
        }
    }

    #[test]
    fn integrates_to_one_over_y() {
        let grid = LocalGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let p = ModelParams::Nonparametric(NpcgmrParams {
            grid,
            pi: vec![vec![0.2, 0.5, 0.9], vec![0.8, 0.5, 0.1]],
            mean: vec![vec![0.0, 1.0, 0.0], vec![3.0, 2.0, 4.0]],
            var: vec![vec![0.3, 0.2, 0.4], vec![1.0, 0.6, 0.5]],
            scalars: vec![
                ComponentScalars::new(0.9, 20.0).unwrap(),
                ComponentScalars::new(0.85, 40.0).unwrap(),
            ],
        });
        for &x in &[0.0, 0.37, 0.8] {
            let v = crate::quad::integrate(|y| mixture_density(y, x, &p).unwrap(), -150.0, 150.0, 1e-10);
            assert_relative_eq!(v, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let s = ComponentScalars::new(0.9, 2.0).unwrap();
        let p = sp(vec![0.6, 0.6], vec![0.0, 1.0], vec![1.0, 1.0], vec![s, s]);
        assert!(mixture_density(0.0, 0.0, &p).is_err());
        let q = sp(vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 0.0], vec![s, s]);
        assert!(mixture_density(0.0, 0.0, &q).is_err());
        assert!(ComponentScalars::new(0.9, 0.99).is_err());
    }

    #[test]
    fn model_kind_names_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(m.name().parse::<ModelKind>().unwrap(), m);
            let js = serde_json::to_string(&m).unwrap();
            assert_eq!(js, format!("\"{}\"", m.name()));
        }
        assert!("npgmrs".parse::<ModelKind>().is_err());
    }

    #[test]
    fn posterior_validation() {
        assert!(Posterior::from_rows(vec![vec![0.3, 0.7]], vec![vec![1.0, 0.2]]).is_ok());
        assert!(Posterior::from_rows(vec![vec![0.3, 0.6]], vec![vec![1.0, 0.2]]).is_err());
        assert!(Posterior::from_rows(vec![vec![0.3, 0.7]], vec![vec![1.2, 0.2]]).is_err());
    }
}

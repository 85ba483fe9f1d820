//! Simulation scenarios, RASE metrics, label alignment and the replication harness.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::FitConfig;
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::fit::{fit, FitOutput, FitSpec};
use crate::kernel::KernelSpec;
use crate::params::{ComponentScalars, ModelKind, ModelParams};

/// Data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Covariate-dependent proportions and variances with contaminated errors.
    Exp1,
    /// Gaussian errors.
    A,
    /// Contaminated Gaussian errors, `0.9 N(0,1) + 0.1 N(0,20)`.
    B,
    /// Student t errors with 4 degrees of freedom.
    C,
    /// Gaussian errors, then 5% of points replaced by high-leverage pairs `(0.5, U(10,15))`.
    D,
    /// Gaussian errors, then 5% of points replaced by `(U(0,1), U(-10,10))`.
    E,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] =
        [ScenarioKind::Exp1, ScenarioKind::A, ScenarioKind::B, ScenarioKind::C, ScenarioKind::D, ScenarioKind::E];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Exp1 => "exp1",
            ScenarioKind::A => "a",
            ScenarioKind::B => "b",
            ScenarioKind::C => "c",
            ScenarioKind::D => "d",
            ScenarioKind::E => "e",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ScenarioKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown scenario '{s}' (expected exp1, a, b, c, d or e)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, n: usize, seed: u64) -> Result<Self> {
        if n < 10 {
            return Err(Error::Contract(format!("scenario needs n >= 10, got {n}")));
        }
        Ok(ScenarioSpec { kind, n, seed })
    }
}

/// True parameter functions of a scenario (always two components).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truth {
    pub kind: ScenarioKind,
}

impl Truth {
    pub fn k(&self) -> usize {
        2
    }

    /// Whether `π` and `σ²` vary with `x`.
    pub fn is_curve(&self) -> bool {
        self.kind == ScenarioKind::Exp1
    }

    pub fn pi(&self, x: f64) -> [f64; 2] {
        let p1 = match self.kind {
            ScenarioKind::Exp1 => 0.1 + 0.8 * (PI * x).sin(),
            _ => 0.5,
        };
        [p1, 1.0 - p1]
    }

    pub fn mean(&self, k: usize, x: f64) -> f64 {
        match k {
            0 => (3.0 * PI * x).cos(),
            _ => 3.0 - (2.0 * PI * x).sin(),
        }
    }

    pub fn var(&self, k: usize, x: f64) -> f64 {
        match self.kind {
            ScenarioKind::Exp1 => {
                let s = if k == 0 { 0.6 * (0.5 * x).exp() } else { 0.5 * (-0.2 * x).exp() };
                s * s
            }
            _ => 1.0,
        }
    }

    /// Contamination scalars of the good-point model, where one exists.
    pub fn scalars(&self) -> Option<[ComponentScalars; 2]> {
        match self.kind {
            ScenarioKind::Exp1 => Some([ComponentScalars { alpha: 0.9, eta: 20.0 }, ComponentScalars { alpha: 0.9, eta: 40.0 }]),
            ScenarioKind::B => Some([ComponentScalars { alpha: 0.9, eta: 20.0 }; 2]),
            ScenarioKind::A => Some([ComponentScalars::GAUSSIAN; 2]),
            _ => None,
        }
    }
}

/// Draw a labelled sample. Points replaced in scenarios (d) and (e) carry [`Label::Noise`].
pub fn generate(spec: &ScenarioSpec) -> Result<(Dataset, Truth)> {
    ScenarioSpec::new(spec.kind, spec.n, spec.seed)?;
    let truth = Truth { kind: spec.kind };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let chi = ChiSquared::new(4.0).expect("positive dof");
    let n = spec.n;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = rng.gen();
        let z = if rng.gen::<f64>() < truth.pi(xi)[0] { 0 } else { 1 };
        let sd = truth.var(z, xi).sqrt();
        let normal: f64 = rng.sample(StandardNormal);
        let e = match spec.kind {
            ScenarioKind::Exp1 | ScenarioKind::B => {
                let s = truth.scalars().expect("contaminated truth")[z];
                if rng.gen::<f64>() < s.alpha {
                    sd * normal
                } else {
                    sd * s.eta.sqrt() * normal
                }
            }
            ScenarioKind::C => {
                let c: f64 = chi.sample(&mut rng);
                normal / (c / 4.0).sqrt()
            }
            _ => sd * normal,
        };
        x.push(xi);
        y.push(truth.mean(z, xi) + e);
        labels.push(Label::Component(z + 1));
    }
    if matches!(spec.kind, ScenarioKind::D | ScenarioKind::E) {
        let m = (0.05 * n as f64).round() as usize;
        let mut idx = sample(&mut rng, n, m).into_vec();
        idx.sort_unstable();
        for i in idx {
            if spec.kind == ScenarioKind::D {
                x[i] = 0.5;
                y[i] = rng.gen_range(10.0..15.0);
            } else {
                x[i] = rng.gen();
                y[i] = rng.gen_range(-10.0..10.0);
            }
            labels[i] = Label::Noise;
        }
    }
    let data = Dataset::new(x, y)?.with_labels(labels, 2)?;
    Ok((data, truth))
}

/// `sqrt((1/n) Σ_i Σ_k (est_k(x_i) - true_k(x_i))²)` over component-major site values.
pub fn rase_curves(truth: &[Vec<f64>], est: &[Vec<f64>]) -> Result<f64> {
    if truth.len() != est.len() || truth.is_empty() {
        return Err(Error::Contract("curve sets must have equal, non-zero component counts".into()));
    }
    let n = truth[0].len();
    if n == 0 || truth.iter().chain(est).any(|c| c.len() != n) {
        return Err(Error::Contract("every curve must be evaluated at the same non-empty sites".into()));
    }
    let ss: f64 = truth.iter().zip(est).flat_map(|(t, e)| t.iter().zip(e).map(|(a, b)| (b - a) * (b - a))).sum();
    Ok((ss / n as f64).sqrt())
}

/// `sqrt((1/K) Σ_k (est_k - true_k)²)`.
pub fn rase_params(truth: &[f64], est: &[f64]) -> Result<f64> {
    if truth.len() != est.len() || truth.is_empty() {
        return Err(Error::Contract(format!("length mismatch: {} true vs {} estimated", truth.len(), est.len())));
    }
    let ss: f64 = truth.iter().zip(est).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok((ss / truth.len() as f64).sqrt())
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Largest `K` for which exhaustive alignment is attempted.
pub const MAX_ALIGN_K: usize = 8;

/// Permutation `perm` such that estimated component `perm[k]` plays the role of
/// true component `k`, minimizing the summed squared distance between the
/// estimated and true regression curves at `xs`.
pub fn align_labels(true_mean: &[Vec<f64>], est_mean: &[Vec<f64>]) -> Result<Vec<usize>> {
    let k = true_mean.len();
    if est_mean.len() != k {
        return Err(Error::Contract(format!("truth has {k} components, fit has {}", est_mean.len())));
    }
    if k > MAX_ALIGN_K {
        return Err(Error::Contract(format!("label alignment is exhaustive and refuses K = {k} > {MAX_ALIGN_K}")));
    }
    let cost: Vec<Vec<f64>> = true_mean
        .iter()
        .map(|t| {
            est_mean
                .iter()
                .map(|e| t.iter().zip(e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .collect()
        })
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for p in permutations(k) {
        let c: f64 = p.iter().enumerate().map(|(t, &e)| cost[t][e]).sum();
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, p));
        }
    }
    Ok(best.expect("K >= 1").1)
}

/// Accuracy of one fit against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rase_m: f64,
    pub rase_pi: f64,
    pub rase_var: f64,
}

/// Invariant checks on a fitted model: posterior rows, `λ` range, `η ≥ 1`,
/// `Σπ = 1`, `σ²` above the variance floor. Returns one message per violation.
pub fn check_invariants(out: &FitOutput) -> Vec<String> {
    let mut v = Vec::new();
    if let Err(e) = out.posterior.validate() {
        v.push(format!("posterior: {e}"));
    }
    if let Err(e) = out.params.validate() {
        v.push(format!("params: {e}"));
    }
    for (k, s) in out.params.scalars().iter().enumerate() {
        if s.eta < 1.0 {
            v.push(format!("eta[{k}] = {} < 1", s.eta));
        }
    }
    let floor = out.report.var_floor;
    let vars: Vec<f64> = match &out.params {
        ModelParams::Nonparametric(p) => p.var.iter().flatten().copied().collect(),
        ModelParams::Semiparametric(p) => p.var.clone(),
        ModelParams::Linear(p) => p.var.clone(),
    };
    if let Some(bad) = vars.iter().find(|&&s| !(s >= floor)) {
        v.push(format!("variance {bad} below floor {floor}"));
    }
    v
}

/// Align a fit to the truth and compute RASE of the mean, proportion and variance.
///
/// Scalar estimates against scalar truth use [`rase_params`]; everything else is
/// compared as curves at the sample sites.
pub fn evaluate_fit(truth: &Truth, data: &Dataset, params: &ModelParams) -> Result<Metrics> {
    let xs = data.x();
    let k = truth.k();
    if params.k() != k {
        return Err(Error::Contract(format!("fit has K = {}, truth has K = {k}", params.k())));
    }
    let sites = params.site_values(xs);
    let tm: Vec<Vec<f64>> = (0..k).map(|c| xs.iter().map(|&x| truth.mean(c, x)).collect()).collect();
    let perm = align_labels(&tm, &sites.mean)?;
    let em: Vec<Vec<f64>> = perm.iter().map(|&p| sites.mean[p].clone()).collect();
    let rase_m = rase_curves(&tm, &em)?;
    let scalar_truth = !truth.is_curve();
    let rase_pi = if scalar_truth && !params.pi_is_curve() {
        let t: Vec<f64> = truth.pi(0.0).to_vec();
        let e: Vec<f64> = perm.iter().map(|&p| sites.pi[p][0]).collect();
        rase_params(&t, &e)?
    } else {
        let t: Vec<Vec<f64>> = (0..k).map(|c| xs.iter().map(|&x| truth.pi(x)[c]).collect()).collect();
        let e: Vec<Vec<f64>> = perm.iter().map(|&p| sites.pi[p].clone()).collect();
        rase_curves(&t, &e)?
    };
    let rase_var = if scalar_truth && !params.var_is_curve() {
        let t: Vec<f64> = (0..k).map(|c| truth.var(c, 0.0)).collect();
        let e: Vec<f64> = perm.iter().map(|&p| sites.var[p][0]).collect();
        rase_params(&t, &e)?
    } else {
        let t: Vec<Vec<f64>> = (0..k).map(|c| xs.iter().map(|&x| truth.var(c, x)).collect()).collect();
        let e: Vec<Vec<f64>> = perm.iter().map(|&p| sites.var[p].clone()).collect();
        rase_curves(&t, &e)?
    };
    Ok(Metrics { rase_m, rase_pi, rase_var })
}

/// Replication study configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub n_set: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub reps: usize,
    pub base_seed: u64,
    pub kernel: KernelSpec,
    pub grid_size: Option<usize>,
    pub fit: FitConfig,
}

/// One (model, n, replicate) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub model: ModelKind,
    pub n: usize,
    pub rep: usize,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
    pub violations: Vec<String>,
}

/// Aggregate of one (model, n) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: ModelKind,
    pub n: usize,
    pub avg: Metrics,
    pub sd: Metrics,
    pub successes: usize,
    pub failures: usize,
    /// More than 20% of replicates failed.
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: ScenarioKind,
    pub reps: usize,
    pub records: Vec<ReplicateRecord>,
    pub cells: Vec<CellSummary>,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (m, (ss / (v.len() - 1) as f64).sqrt())
}

/// Run every (n, model, replicate) fit. Replicate `r` uses seed `base_seed + r`
/// for both the data and the fit.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.reps < 2 {
        return Err(Error::Contract(format!("need at least 2 replicates, got {}", cfg.reps)));
    }
    if cfg.n_set.is_empty() || cfg.models.is_empty() {
        return Err(Error::Contract("n set and model list must be non-empty".into()));
    }
    cfg.fit.validate()?;
    let jobs: Vec<(usize, usize)> = cfg.n_set.iter().flat_map(|&n| (0..cfg.reps).map(move |r| (n, r))).collect();
    let per_job: Vec<Result<Vec<ReplicateRecord>>> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let seed = cfg.base_seed.wrapping_add(r as u64);
            let (data, truth) = generate(&ScenarioSpec::new(cfg.scenario, n, seed)?)?;
            Ok(cfg
                .models
                .iter()
                .map(|&model| {
                    let spec = FitSpec {
                        k: truth.k(),
                        kernel: cfg.kernel,
                        grid_size: cfg.grid_size,
                        config: cfg.fit.clone().with_seed(seed),
                    };
                    let res = fit(&data, model, &spec).and_then(|out| {
                        let m = evaluate_fit(&truth, &data, &out.params)?;
                        Ok((m, check_invariants(&out)))
                    });
                    match res {
                        Ok((m, violations)) => {
                            ReplicateRecord { model, n, rep: r, metrics: Some(m), error: None, violations }
                        }
                        Err(e) => ReplicateRecord {
                            model,
                            n,
                            rep: r,
                            metrics: None,
                            error: Some(e.to_string()),
                            violations: Vec::new(),
                        },
                    }
                })
                .collect())
        })
        .collect();
    let mut records = Vec::new();
    for r in per_job {
        records.extend(r?);
    }
    let mut cells = Vec::new();
    for &n in &cfg.n_set {
        for &model in &cfg.models {
            let ms: Vec<Metrics> = records
                .iter()
                .filter(|r| r.n == n && r.model == model)
                .filter_map(|r| r.metrics)
                .collect();
            let failures = cfg.reps - ms.len();
            let col = |f: fn(&Metrics) -> f64| mean_sd(&ms.iter().map(f).collect::<Vec<_>>());
            let (am, sm) = col(|m| m.rase_m);
            let (ap, sp) = col(|m| m.rase_pi);
            let (av, sv) = col(|m| m.rase_var);
            cells.push(CellSummary {
                model,
                n,
                avg: Metrics { rase_m: am, rase_pi: ap, rase_var: av },
                sd: Metrics { rase_m: sm, rase_pi: sp, rase_var: sv },
                successes: ms.len(),
                failures,
                unreliable: failures * 5 > cfg.reps,
            });
        }
    }
    Ok(ExperimentResult { scenario: cfg.scenario, reps: cfg.reps, records, cells })
}

impl ExperimentResult {
    pub fn cell(&self, model: ModelKind, n: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.model == model && c.n == n)
    }

    /// Table with one row per (n, metric, statistic) and one column per model.
    /// Failure counts and reliability flags follow as extra rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut models: Vec<ModelKind> = Vec::new();
        let mut ns: Vec<usize> = Vec::new();
        for c in &self.cells {
            if !models.contains(&c.model) {
                models.push(c.model);
            }
            if !ns.contains(&c.n) {
                ns.push(c.n);
            }
        }
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["scenario".to_string(), "n".into(), "metric".into(), "stat".into()];
        header.extend(models.iter().map(|m| m.name().to_string()));
        w.write_record(&header).map_err(io)?;
        let metrics: [(&str, fn(&Metrics) -> f64); 3] =
            [("rase_m", |m| m.rase_m), ("rase_pi", |m| m.rase_pi), ("rase_var", |m| m.rase_var)];
        for &n in &ns {
            let cells: Vec<&CellSummary> =
                models.iter().map(|&m| self.cell(m, n).expect("cell for every model and n")).collect();
            let mut row = |metric: &str, stat: &str, vals: Vec<String>| {
                let mut r = vec![self.scenario.name().to_string(), n.to_string(), metric.to_string(), stat.to_string()];
                r.extend(vals);
                w.write_record(&r).map_err(io)
            };
            for (name, f) in metrics {
                row(name, "AVG", cells.iter().map(|c| format!("{:.6}", f(&c.avg))).collect())?;
                row(name, "SD", cells.iter().map(|c| format!("{:.6}", f(&c.sd))).collect())?;
            }
            row("fits", "failures", cells.iter().map(|c| c.failures.to_string()).collect())?;
            row("fits", "unreliable", cells.iter().map(|c| c.unreliable.to_string()).collect())?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exp1_truth_values() {
        let t = Truth { kind: ScenarioKind::Exp1 };
        assert_relative_eq!(t.pi(0.0)[0], 0.1, epsilon = 1e-15);
        assert!(t.mean(0, 0.5).abs() < 1e-15);
        assert_relative_eq!(t.mean(1, 0.5), 3.0, epsilon = 1e-15);
        assert_relative_eq!(t.var(0, 0.0), 0.36, epsilon = 1e-15);
        assert_relative_eq!(t.var(1, 0.0), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn scenario_d_leverage_points() {
        let (d, _) = generate(&ScenarioSpec::new(ScenarioKind::D, 200, 3).unwrap()).unwrap();
        let lev: Vec<usize> = (0..200).filter(|&i| d.labels().unwrap()[i] == Label::Noise).collect();
        assert_eq!(lev.len(), 10);
        for i in lev {
            assert_eq!(d.x()[i], 0.5);
            assert!(d.y()[i] > 10.0 && d.y()[i] < 15.0);
        }
    }

    #[test]
    fn scenario_e_noise_count() {
        let (d, _) = generate(&ScenarioSpec::new(ScenarioKind::E, 250, 9).unwrap()).unwrap();
        let noise = d.labels().unwrap().iter().filter(|l| **l == Label::Noise).count();
        assert_eq!(noise, 13);
    }

    #[test]
    fn deterministic() {
        for kind in ScenarioKind::ALL {
            let s = ScenarioSpec::new(kind, 50, 17).unwrap();
            assert_eq!(generate(&s).unwrap().0, generate(&s).unwrap().0);
        }
        assert!(ScenarioSpec::new(ScenarioKind::A, 9, 0).is_err());
    }

    #[test]
    fn rase_examples() {
        assert_eq!(rase_curves(&[vec![1.0, 2.0]], &[vec![1.0, 2.0]]).unwrap(), 0.0);
        assert_eq!(rase_curves(&[vec![0.0; 4]], &[vec![1.0; 4]]).unwrap(), 1.0);
        assert_eq!(rase_curves(&[vec![0.0], vec![0.0]], &[vec![1.0], vec![0.0]]).unwrap(), 1.0);
        assert_eq!(rase_params(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rase_params(&[2.5], &[1.0]).unwrap(), 1.5);
        assert!(rase_params(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn alignment_examples() {
        let a = vec![vec![0.0, 1.0], vec![5.0, 6.0]];
        assert_eq!(align_labels(&a, &a).unwrap(), vec![0, 1]);
        let swapped = vec![a[1].clone(), a[0].clone()];
        assert_eq!(align_labels(&a, &swapped).unwrap(), vec![1, 0]);
        let big = vec![vec![0.0]; 9];
        assert!(align_labels(&big, &big).is_err());
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn identical_seeds_give_zero_sd() {
        assert_eq!(mean_sd(&[0.3, 0.3]).1, 0.0);
    }

    proptest! {
        #[test]
        fn alignment_is_optimal(vals in proptest::collection::vec(-5.0f64..5.0, 18)) {
            let truth: Vec<Vec<f64>> = vals[..9].chunks(3).map(|c| c.to_vec()).collect();
            let est: Vec<Vec<f64>> = vals[9..].chunks(3).map(|c| c.to_vec()).collect();
            let p = align_labels(&truth, &est).unwrap();
            let aligned: Vec<Vec<f64>> = p.iter().map(|&j| est[j].clone()).collect();
            let best = rase_curves(&truth, &aligned).unwrap();
            for q in permutations(3) {
                let other: Vec<Vec<f64>> = q.iter().map(|&j| est[j].clone()).collect();
                prop_assert!(best <= rase_curves(&truth, &other).unwrap() + 1e-12);
            }
        }

        #[test]
        fn rase_nonnegative(a in proptest::collection::vec(-5.0f64..5.0, 6),
                            b in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let r = rase_curves(&[a[..3].to_vec(), a[3..].to_vec()], &[b[..3].to_vec(), b[3..].to_vec()]).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert_eq!(r == 0.0, a == b);
        }

        // Constant curves: the curve form sums over components where the parameter
        // form averages, so the two differ by a factor sqrt(K).
        #[test]
        fn constant_curves_relate_to_params(t in proptest::collection::vec(0.0f64..1.0, 3),
                                            e in proptest::collection::vec(0.0f64..1.0, 3),
                                            n in 1usize..20) {
            let tc: Vec<Vec<f64>> = t.iter().map(|&v| vec![v; n]).collect();
            let ec: Vec<Vec<f64>> = e.iter().map(|&v| vec![v; n]).collect();
            let rc = rase_curves(&tc, &ec).unwrap();
            let rp = rase_params(&t, &e).unwrap();
            prop_assert!((rc - 3f64.sqrt() * rp).abs() <= 1e-12 * (1.0 + rc));
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth membership of a simulated observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    /// 1-based component index.
    Component(usize),
    /// A point that replaced a model draw (leverage points, uniform noise).
    Noise,
}

/// Paired covariate/response sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    labels: Option<Vec<Label>>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Contract(format!(
                "x has {} values but y has {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::Contract("dataset must contain at least one observation".into()));
        }
        if let Some(i) = x.iter().zip(&y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::Contract(format!("observation {i} is not finite")));
        }
        Ok(Dataset { x, y, labels: None })
    }

    /// Attach ground-truth labels; component indices must lie in `1..=k`.
    pub fn with_labels(mut self, labels: Vec<Label>, k: usize) -> Result<Self> {
        if labels.len() != self.x.len() {
            return Err(Error::Contract(format!(
                "{} labels for {} observations",
                labels.len(),
                self.x.len()
            )));
        }
        if let Some(bad) = labels
            .iter()
            .find(|l| matches!(l, Label::Component(c) if *c == 0 || *c > k))
        {
            return Err(Error::Contract(format!("label {bad:?} outside 1..={k}")));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x_range(&self) -> (f64, f64) {
        let lo = self.x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Unbiased sample variance of `y` (zero for a single observation).
    pub fn y_variance(&self) -> f64 {
        let n = self.y.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.y.iter().sum::<f64>() / n as f64;
        self.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    /// Lower bound applied to every variance update: `1e-10` times the sample
    /// variance of `y`, or `1e-10` when `y` is constant.
    pub fn variance_floor(&self) -> f64 {
        let v = self.y_variance();
        if v > 0.0 {
            1e-10 * v
        } else {
            1e-10
        }
    }

    /// A copy with `count` identical `(x, y)` rows appended at the end.
    pub fn with_appended(&self, x: f64, y: f64, count: usize) -> Result<Self> {
        let mut xs = self.x.clone();
        let mut ys = self.y.clone();
        xs.extend(std::iter::repeat_n(x, count));
        ys.extend(std::iter::repeat_n(y, count));
        Dataset::new(xs, ys)
    }
}

//! Clustering and outlier detection from a fitted posterior.

use crate::params::Posterior;

/// Default cut-off on the good-point probability below which a point is an outlier.
pub const OUTLIER_THRESHOLD: f64 = 0.5;

/// MAP component of every observation (1-based; ties go to the lowest index).
pub fn map_classify(post: &Posterior) -> Vec<usize> {
    (0..post.n())
        .map(|i| {
            let row = post.gamma_row(i);
            let mut best = 0;
            for (c, &g) in row.iter().enumerate().skip(1) {
                if g > row[best] {
                    best = c;
                }
            }
            best + 1
        })
        .collect()
}

/// `λ` of each observation at its assigned component.
pub fn lambda_at_labels(post: &Posterior, labels: &[usize]) -> Vec<f64> {
    labels.iter().enumerate().map(|(i, &l)| post.lambda(i, l - 1)).collect()
}

/// `true` where `λ_{i, label_i} < threshold` (strict).
pub fn flag_outliers(post: &Posterior, labels: &[usize], threshold: f64) -> Vec<bool> {
    lambda_at_labels(post, labels).into_iter().map(|l| l < threshold).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn post(g: Vec<Vec<f64>>, l: Vec<Vec<f64>>) -> Posterior {
        Posterior::from_rows(g, l).unwrap()
    }

    #[test]
    fn argmax_and_ties() {
        let p = post(vec![vec![0.3, 0.7], vec![0.5, 0.5]], vec![vec![1.0, 1.0]; 2]);
        assert_eq!(map_classify(&p), vec![2, 1]);
        let single = post(vec![vec![1.0]; 3], vec![vec![1.0]; 3]);
        assert_eq!(map_classify(&single), vec![1, 1, 1]);
    }

    #[test]
    fn outlier_boundary() {
        let p = post(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.97576, 0.1], vec![0.9, 0.49], vec![0.5, 0.0]],
        );
        let labels = map_classify(&p);
        assert_eq!(flag_outliers(&p, &labels, OUTLIER_THRESHOLD), vec![false, true, false]);
    }

    #[test]
    fn gaussian_posterior_flags_nothing() {
        let p = post(vec![vec![0.2, 0.8]; 4], vec![vec![1.0, 1.0]; 4]);
        assert!(flag_outliers(&p, &map_classify(&p), OUTLIER_THRESHOLD).iter().all(|f| !f));
    }

    proptest! {
        #[test]
        fn invariant_to_row_rescaling(raw in proptest::collection::vec(0.01f64..1.0, 3), scale in 0.1f64..50.0) {
            let s: f64 = raw.iter().sum();
            let row: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let p = post(vec![row.clone()], vec![vec![1.0; 3]]);
            let scaled: Vec<f64> = row.iter().map(|v| v * scale).collect();
            let mut best = 0;
            for c in 1..3 {
                if scaled[c] > scaled[best] { best = c; }
            }
            prop_assert_eq!(map_classify(&p)[0], best + 1);
        }
    }
}

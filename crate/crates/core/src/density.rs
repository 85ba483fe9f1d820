//! Gaussian and contaminated-Gaussian densities.
//!
//! Everything is computed in log space and only exponentiated when a ratio or a
//! final density is requested. Inflated-variance components make residuals of
//! tens of standard deviations routine, and `exp` of those underflows long
//! before the ratio of two such densities does.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln N(y | mean, var)`.
#[inline]
pub fn normal_log_pdf(y: f64, mean: f64, var: f64) -> f64 {
    let r = y - mean;
    -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * r * r / var
}

/// `N(y | mean, var)`.
#[inline]
pub fn normal_pdf(y: f64, mean: f64, var: f64) -> f64 {
    normal_log_pdf(y, mean, var).exp()
}

/// `ln(exp(a) + exp(b))` without overflow. Either argument may be `-inf`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(v_j)`. Returns `-inf` for an empty slice or all `-inf` entries.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - hi).exp()).sum();
    hi + s.ln()
}

/// Log of the good-point part and of the whole contaminated density.
///
/// Returns `(ln α + ln N(y|m,var), ln f_CG(y))`. With `alpha == 1` the second
/// term is exactly the Gaussian log density, so the Gaussian special case is
/// reproduced bit for bit.
#[inline]
pub fn cg_log_parts(y: f64, mean: f64, var: f64, alpha: f64, eta: f64) -> (f64, f64) {
    let good = alpha.ln() + normal_log_pdf(y, mean, var);
    let bad = (1.0 - alpha).ln() + normal_log_pdf(y, mean, eta * var);
    (good, log_add_exp(good, bad))
}

fn check_cg_args(y: f64, mean: f64, var: f64, alpha: f64, eta: f64) -> Result<()> {
    if !(y.is_finite() && mean.is_finite() && var.is_finite() && alpha.is_finite() && eta.is_finite())
    {
        return Err(Error::Domain(format!(
            "non-finite density argument (y={y}, m={mean}, var={var}, alpha={alpha}, eta={eta})"
        )));
    }
    if var <= 0.0 {
        return Err(Error::Domain(format!("variance must be positive, got {var}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if eta < 1.0 {
        return Err(Error::Domain(format!("eta must be at least 1, got {eta}")));
    }
    Ok(())
}

/// Contaminated Gaussian density `α N(y|m,var) + (1-α) N(y|m,η var)`.
///
/// `alpha == 1` is accepted and gives the plain Gaussian density.
pub fn cg_density(y: f64, mean: f64, var: f64, alpha: f64, eta: f64) -> Result<f64> {
    Ok(cg_log_density(y, mean, var, alpha, eta)?.exp())
}

/// Natural log of [`cg_density`].
pub fn cg_log_density(y: f64, mean: f64, var: f64, alpha: f64, eta: f64) -> Result<f64> {
    check_cg_args(y, mean, var, alpha, eta)?;
    Ok(cg_log_parts(y, mean, var, alpha, eta).1)
}

/// Posterior probability that `y` came from the uninflated part of the density.
pub fn good_point_probability(y: f64, mean: f64, var: f64, alpha: f64, eta: f64) -> Result<f64> {
    check_cg_args(y, mean, var, alpha, eta)?;
    let (good, total) = cg_log_parts(y, mean, var, alpha, eta);
    Ok((good - total).exp().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn phi(z: f64) -> f64 {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn worked_value_at_the_centre() {
        // 0.9 * phi(0) + 0.1 * phi(0) / sqrt(20)
        let oracle = 0.9 * phi(0.0) + 0.1 * phi(0.0) / 20f64.sqrt();
        assert_relative_eq!(oracle, 0.367_968_7, epsilon = 1e-7);
        let v = cg_density(0.0, 0.0, 1.0, 0.9, 20.0).unwrap();
        assert_relative_eq!(v, oracle, epsilon = 1e-14);
    }

    #[test]
    fn alpha_one_is_gaussian_bitwise() {
        for &y in &[-3.0, 0.2, 7.5] {
            let (_, lf) = cg_log_parts(y, 0.5, 2.0, 1.0, 37.0);
            assert_eq!(lf.to_bits(), normal_log_pdf(y, 0.5, 2.0).to_bits());
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(cg_density(0.0, 0.0, 0.0, 0.9, 2.0).is_err());
        assert!(cg_density(0.0, 0.0, -1.0, 0.9, 2.0).is_err());
        assert!(cg_density(f64::NAN, 0.0, 1.0, 0.9, 2.0).is_err());
        assert!(cg_density(0.0, 0.0, 1.0, 0.9, 0.5).is_err());
        assert!(cg_density(0.0, 0.0, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn far_tail_stays_finite_and_positive() {
        let v = cg_log_density(400.0, 0.0, 1.0, 0.9, 50.0).unwrap();
        assert!(v.is_finite());
        let lam = good_point_probability(400.0, 0.0, 1.0, 0.9, 50.0).unwrap();
        assert!((0.0..1e-100).contains(&lam));
    }

    #[test]
    fn integrates_to_one() {
        let f = |y: f64| cg_density(y, 0.3, 0.8, 0.85, 25.0).unwrap();
        let total = crate::quad::integrate(f, -200.0, 200.0, 1e-10);
        assert_relative_eq!(total, 1.0, epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn symmetric_in_residual(d in -30.0f64..30.0, m in -5.0f64..5.0, var in 0.01f64..10.0,
                                 alpha in 0.01f64..0.999, eta in 1.0f64..100.0) {
            let a = cg_density(m + d, m, var, alpha, eta).unwrap();
            let b = cg_density(m - d, m, var, alpha, eta).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
        }

        #[test]
        fn non_increasing_in_abs_residual(d1 in 0.0f64..20.0, d2 in 0.0f64..20.0,
                                          var in 0.01f64..10.0, alpha in 0.01f64..0.999,
                                          eta in 1.0f64..100.0) {
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let a = cg_log_density(near, 0.0, var, alpha, eta).unwrap();
            let b = cg_log_density(far, 0.0, var, alpha, eta).unwrap();
            prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn log_sum_exp_matches_pairwise(a in -700.0f64..700.0, b in -700.0f64..700.0) {
            let l = log_sum_exp(&[a, b]);
            prop_assert!((l - log_add_exp(a, b)).abs() <= 1e-12 * l.abs().max(1.0));
        }
    }
}

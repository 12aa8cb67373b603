//! Observation transform `y = YJ_lambda(log t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LAMBDA_BRACKET: (f64, f64) = (-5.0, 5.0);
const GRID_POINTS: usize = 201;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeTransform {
    pub yj_lambda: f64,
    pub fitted_on_n: usize,
    /// Standard deviation of the transformed training observations.
    pub y_std: f64,
}

/// Yeo-Johnson map of a real `x`.
pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    if x >= 0.0 {
        if lambda == 0.0 {
            x.ln_1p()
        } else {
            (lambda * x.ln_1p()).exp_m1() / lambda
        }
    } else {
        let l2 = 2.0 - lambda;
        if l2 == 0.0 {
            -(-x).ln_1p()
        } else {
            -(l2 * (-x).ln_1p()).exp_m1() / l2
        }
    }
}

/// Inverse Yeo-Johnson map; `None` outside the image of the forward map.
pub fn yeo_johnson_inverse(y: f64, lambda: f64) -> Option<f64> {
    if !y.is_finite() {
        return None;
    }
    let x = if y >= 0.0 {
        if lambda == 0.0 {
            y.exp_m1()
        } else {
            let base = lambda * y;
            if base <= -1.0 {
                return None;
            }
            (base.ln_1p() / lambda).exp_m1()
        }
    } else {
        let l2 = 2.0 - lambda;
        if l2 == 0.0 {
            -(-y).exp_m1()
        } else {
            let base = -l2 * y;
            if base <= -1.0 {
                return None;
            }
            -(base.ln_1p() / l2).exp_m1()
        }
    };
    x.is_finite().then_some(x)
}

/// Gaussian profile log-likelihood of `lambda` for the sample `xs`.
pub fn profile_log_likelihood(xs: &[f64], lambda: f64) -> f64 {
    let n = xs.len() as f64;
    let ys: Vec<f64> = xs.iter().map(|&x| yeo_johnson(x, lambda)).collect();
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    if !(var > 0.0 && var.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let jacobian: f64 = xs.iter().map(|x| x.signum() * x.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jacobian
}

impl TimeTransform {
    /// A transform with a fixed exponent, for callers that do not fit.
    pub fn with_lambda(yj_lambda: f64, y_std: f64) -> Self {
        TimeTransform { yj_lambda, fitted_on_n: 0, y_std }
    }

    /// Fits the exponent by maximum likelihood on `log(times)`.
    pub fn fit(times: &[f64]) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::Fit(format!("need at least 3 times, got {}", times.len())));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::domain(format!("non-positive or non-finite time {t}")));
        }
        let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let first = xs[0];
        if xs.iter().all(|&x| x == first) {
            return Err(Error::Fit("constant time sample has zero variance".into()));
        }
        let lambda = maximize_profile(&xs);
        let ys: Vec<f64> = xs.iter().map(|&x| yeo_johnson(x, lambda)).collect();
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let y_std = (ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n).sqrt();
        if !(y_std > 0.0 && y_std.is_finite()) {
            return Err(Error::Fit(format!("degenerate transformed sample (std {y_std})")));
        }
        Ok(TimeTransform {
            yj_lambda: lambda,
            fitted_on_n: times.len(),
            y_std,
        })
    }

    pub fn forward(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::domain(format!("time must be positive and finite, got {t}")));
        }
        Ok(yeo_johnson(t.ln(), self.yj_lambda))
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        let x = yeo_johnson_inverse(y, self.yj_lambda).ok_or_else(|| {
            Error::domain(format!(
                "y = {y} outside the image of the transform (lambda = {})",
                self.yj_lambda
            ))
        })?;
        let t = x.exp();
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::domain(format!("inverse transform of {y} is not representable")));
        }
        Ok(t)
    }
}

/// Coarse grid scan over the bracket, then golden-section refinement around
/// the best grid point.
fn maximize_profile(xs: &[f64]) -> f64 {
    let (lo, hi) = LAMBDA_BRACKET;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..GRID_POINTS {
        let lam = lo + step * i as f64;
        let ll = profile_log_likelihood(xs, lam);
        if ll > best.1 {
            best = (lam, ll);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    golden_section_max(|l| profile_log_likelihood(xs, l), a, b, GOLDEN_TOL)
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const E: f64 = std::f64::consts::E;

    #[test]
    fn forward_examples() {
        assert!((TimeTransform::with_lambda(1.0, 1.0).forward(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((TimeTransform::with_lambda(0.0, 1.0).forward(E).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((TimeTransform::with_lambda(2.0, 1.0).forward(1.0 / E).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert!(TimeTransform::with_lambda(1.0, 1.0).forward(0.0).is_err());
        assert!(TimeTransform::with_lambda(1.0, 1.0).forward(-2.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        let tt = TimeTransform::with_lambda(1.0, 1.0);
        assert!((tt.inverse(0.0).unwrap() - 1.0).abs() < 1e-15);
        for lam in [-1.5, 0.0, 0.7, 2.0, 3.2] {
            let tt = TimeTransform::with_lambda(lam, 1.0);
            for t in [0.1, 1.0, 50.0] {
                let back = tt.inverse(tt.forward(t).unwrap()).unwrap();
                assert!((back / t - 1.0).abs() < 1e-12, "lam {lam} t {t}");
            }
        }
    }

    #[test]
    fn inverse_outside_image() {
        // lambda = -1 maps x >= 0 into [0, 1)
        let tt = TimeTransform::with_lambda(-1.0, 1.0);
        assert!(tt.inverse(1.0).is_err());
        assert!(tt.inverse(2.0).is_err());
        // lambda = 3 maps x < 0 into (-1, 0)
        let tt = TimeTransform::with_lambda(3.0, 1.0);
        assert!(tt.inverse(-1.0).is_err());
        assert!(tt.inverse(f64::NAN).is_err());
    }

    #[test]
    fn constant_sample_fails() {
        assert!(matches!(TimeTransform::fit(&[2.0, 2.0, 2.0, 2.0]), Err(Error::Fit(_))));
        assert!(TimeTransform::fit(&[1.0, 2.0]).is_err());
        assert!(matches!(TimeTransform::fit(&[1.0, 0.0, 2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn gaussian_log_times_give_unit_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal: Normal<f64> = Normal::new(0.0, 1.0).unwrap();
        let times: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng).exp()).collect();
        let tt = TimeTransform::fit(&times).unwrap();
        assert!((tt.yj_lambda - 1.0).abs() < 0.1, "lambda {}", tt.yj_lambda);
        assert_eq!(tt.fitted_on_n, 10_000);
    }

    #[test]
    fn matches_brute_force_grid() {
        // log t = exp(2z): strongly right-skewed on the log scale
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal: Normal<f64> = Normal::new(0.5, 0.8).unwrap();
        let times: Vec<f64> = (0..2_000)
            .map(|_| {
                let ln = normal.sample(&mut rng).exp();
                (ln * ln).exp()
            })
            .collect();
        let tt = TimeTransform::fit(&times).unwrap();
        let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let mut best = (0.0, f64::NEG_INFINITY);
        let mut lam = -5.0;
        while lam <= 5.0 {
            let ll = profile_log_likelihood(&xs, lam);
            if ll > best.1 {
                best = (lam, ll);
            }
            lam += 1e-4;
        }
        assert!((tt.yj_lambda - best.0).abs() < 1e-3, "{} vs {}", tt.yj_lambda, best.0);
    }

    #[test]
    fn fitted_lambda_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal: Normal<f64> = Normal::new(1.0, 0.6).unwrap();
        let times: Vec<f64> = (0..500).map(|_| normal.sample(&mut rng).powi(2).exp()).collect();
        let tt = TimeTransform::fit(&times).unwrap();
        let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let at = profile_log_likelihood(&xs, tt.yj_lambda);
        for d in [-1e-3, 1e-3] {
            assert!(profile_log_likelihood(&xs, tt.yj_lambda + d) <= at + 1e-9);
        }
    }

    #[test]
    fn forward_is_increasing() {
        let tt = TimeTransform::with_lambda(-0.7, 1.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 1..2000 {
            let y = tt.forward(i as f64 * 0.05).unwrap();
            assert!(y > prev);
            prev = y;
        }
    }
}

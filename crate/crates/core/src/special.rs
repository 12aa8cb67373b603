//! Scalar special functions shared across modules.

use crate::dual::Real;

/// Exponent floor applied before `exp` of large negative arguments.
pub const EXP_FLOOR: f64 = -745.0;

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF, evaluated through `erfc` so both tails keep relative accuracy.
pub fn norm_cdf<T: Real>(z: T) -> T {
    (z * (-std::f64::consts::FRAC_1_SQRT_2)).erfc() * 0.5
}

/// Standard normal upper tail `1 - Φ(z)`.
pub fn norm_sf<T: Real>(z: T) -> T {
    (z * std::f64::consts::FRAC_1_SQRT_2).erfc() * 0.5
}

/// `Φ(b) - Φ(a)` for `a <= b`, computed on whichever tail avoids cancellation.
pub fn norm_cdf_diff<T: Real>(a: T, b: T) -> T {
    if a.value() >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else if b.value() <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else {
        T::cst(1.0) - norm_sf(b) - norm_cdf(a)
    }
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `exp(x)` with the argument clamped at [`EXP_FLOOR`].
pub fn exp_clamped<T: Real>(x: T) -> T {
    if x.value() < EXP_FLOOR {
        T::cst(0.0)
    } else {
        x.exp()
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`: power series for
/// `x < a + 1`, Lentz continued fraction otherwise.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefactor = a * x.ln() - x - libm::lgamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (1.0 - sum * log_prefactor.exp()).max(0.0)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (log_prefactor.exp() * h).clamp(0.0, 1.0)
    }
}

/// Upper-tail p-value of a chi-square statistic.
pub fn chi2_sf(stat: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, stat / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((norm_sf(-1.959963984540054) - 0.975).abs() < 1e-12);
        // tail keeps relative precision
        let tail = norm_cdf(-30.0);
        assert!(tail > 0.0 && (tail / 4.906713927148187e-198 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cdf_diff_matches_direct() {
        for &(a, b) in &[(-2.0, -1.0), (-0.5, 0.7), (1.0, 3.0), (0.2, 0.2000001)] {
            let d = norm_cdf_diff(a, b);
            assert!((d - (norm_cdf(b) - norm_cdf(a))).abs() < 1e-15);
        }
    }

    #[test]
    fn softplus_round_trip() {
        for &y in &[1e-8, 0.3, 1.0, 17.0, 45.0] {
            assert!((softplus(softplus_inv(y)) / y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chi2_one_df() {
        // P(chi2_1 > 3.841458820694124) = 0.05
        assert!((chi2_sf(3.841458820694124, 1.0) - 0.05).abs() < 1e-12);
        assert_eq!(chi2_sf(0.0, 1.0), 1.0);
        for &x in &[0.01, 0.5, 2.0, 9.0, 40.0] {
            let closed = erfc((x / 2.0f64).sqrt());
            assert!((chi2_sf(x, 1.0) / closed - 1.0).abs() < 1e-12, "x = {x}");
        }
        // df = 2 has the closed form exp(-x/2)
        assert!((chi2_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-14);
    }
}

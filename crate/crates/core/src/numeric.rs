//! Normal distribution helpers, binomial coefficients and the significance level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile for `p` in (0, 1).
///
/// Acklam's rational approximation followed by one Halley step; absolute
/// error is below 1e-12 across (1e-300, 1 - 1e-16).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "normal quantile requires 0 < p < 1, got {p}"
        )));
    }
    #[allow(clippy::excessive_precision)]
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement. Work in the tail that keeps the residual accurate.
    let e = if x < 0.0 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_cdf(-x)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Exact binomial coefficient, or an overflow error past 128 bits.
pub fn binomial_coefficient(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1) after the multiplication.
        let num = u128::from(n - i);
        c = match c.checked_mul(num) {
            Some(v) => v / u128::from(i + 1),
            None => {
                // Reduce by the gcd first to postpone overflow.
                let d = u128::from(i + 1);
                let g = gcd(c, d);
                let (c1, d1) = (c / g, d / g);
                let num1 = num / d1;
                c1.checked_mul(num1).ok_or(Error::Overflow { n, k })?
            }
        };
    }
    Ok(c)
}

/// Natural log of the binomial coefficient.
pub fn ln_binomial_coefficient(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Two-sided significance level together with its critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    value: f64,
    z: f64,
}

impl Alpha {
    /// Level with the exact critical value `z_{1 - alpha/2}`.
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {value}"
            )));
        }
        let z = normal_quantile(1.0 - value / 2.0)?;
        Ok(Self { value, z })
    }

    /// Level whose critical value is rounded to two decimals (1.96 at 0.05),
    /// the convention of printed normal tables.
    pub fn rounded(value: f64) -> Result<Self> {
        let exact = Self::new(value)?;
        Ok(Self {
            value,
            z: (exact.z * 100.0).round() / 100.0,
        })
    }

    /// Level with a caller-supplied critical value.
    pub fn with_critical_value(value: f64, z: f64) -> Result<Self> {
        Self::new(value)?;
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::invalid(format!(
                "critical value must be positive, got {z}"
            )));
        }
        Ok(Self { value, z })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Positive critical value `z_{1 - alpha/2}`.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Confidence level `1 - alpha`.
    pub fn confidence(&self) -> f64 {
        1.0 - self.value
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Self::new(0.05).expect("0.05 is a valid level")
    }
}

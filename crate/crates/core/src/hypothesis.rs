//! Tests of no treatment effect and the matching power / sample-size formulas.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::counts::{PairCounts, Proportions};
use crate::error::{Error, Result};
use crate::numeric::{
    binomial_coefficient, ln_binomial_coefficient, normal_cdf, normal_quantile, Alpha,
};

/// Available tests of `H0: p_w = p_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    /// Score test on decided pairs, `(n_w - n_l) / sqrt(n_w + n_l)`.
    Z,
    /// Wald test on the win fraction `Q_w`.
    ZPocock,
    /// Exact conditional binomial (sign) test.
    Exact,
}

impl TestMethod {
    pub const ALL: [TestMethod; 3] = [TestMethod::Z, TestMethod::ZPocock, TestMethod::Exact];

    pub fn name(&self) -> &'static str {
        match self {
            TestMethod::Z => "z",
            TestMethod::ZPocock => "z-pocock",
            TestMethod::Exact => "exact",
        }
    }
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z" => Ok(TestMethod::Z),
            "z-pocock" | "zp" | "pocock" => Ok(TestMethod::ZPocock),
            "exact" | "binomial" | "sign" => Ok(TestMethod::Exact),
            other => Err(Error::invalid(format!("unknown test '{other}'"))),
        }
    }
}

/// Outcome of a test. The exact test has no statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: TestMethod,
    pub statistic: Option<f64>,
    pub p_value: f64,
}

impl TestResult {
    /// Two-sided rejection at level `alpha`, judged on the statistic when
    /// there is one so that a supplied critical value is honoured.
    pub fn rejects(&self, alpha: &Alpha) -> bool {
        match self.statistic {
            Some(z) => z.abs() > alpha.z(),
            None => self.p_value < alpha.value(),
        }
    }
}

fn two_sided_normal_p(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Score test `Z = (n_w - n_l) / sqrt(n_w + n_l)`.
pub fn z_corrected(counts: &PairCounts) -> Result<TestResult> {
    let m = counts.decided();
    if m == 0 {
        return Err(Error::AllTies);
    }
    let z = (counts.n_win as f64 - counts.n_loss as f64) / (m as f64).sqrt();
    Ok(TestResult {
        method: TestMethod::Z,
        statistic: Some(z),
        p_value: two_sided_normal_p(z),
    })
}

/// Wald test on the win fraction, `(Q_w - 1/2) / sqrt(Q_w (1 - Q_w) / m)`.
pub fn z_pocock(counts: &PairCounts) -> Result<TestResult> {
    let m = counts.decided();
    if m == 0 {
        return Err(Error::AllTies);
    }
    if counts.n_win == 0 || counts.n_loss == 0 {
        return Err(Error::degenerate("win fraction is 0 or 1"));
    }
    let q = counts.n_win as f64 / m as f64;
    let z = (q - 0.5) / (q * (1.0 - q) / m as f64).sqrt();
    Ok(TestResult {
        method: TestMethod::ZPocock,
        statistic: Some(z),
        p_value: two_sided_normal_p(z),
    })
}

/// Exact two-sided binomial p-value given the number of decided pairs,
/// `min(1, 2 P(X <= min(n_w, n_l)))` with `X ~ Bin(n_w + n_l, 1/2)`.
pub fn exact_p_value(counts: &PairCounts) -> Result<TestResult> {
    let m = counts.decided();
    if m == 0 {
        return Err(Error::AllTies);
    }
    let p_value = if counts.n_win == counts.n_loss {
        1.0
    } else {
        (2.0 * lower_tail_half(m, counts.n_win.min(counts.n_loss))?).min(1.0)
    };
    Ok(TestResult {
        method: TestMethod::Exact,
        statistic: None,
        p_value,
    })
}

/// `P(X <= k)` for `X ~ Bin(m, 1/2)`.
fn lower_tail_half(m: u64, k: u64) -> Result<f64> {
    if m < 127 {
        let mut sum: u128 = 0;
        for j in 0..=k {
            sum += binomial_coefficient(m, j)?;
        }
        return Ok(sum as f64 / 2f64.powi(m as i32));
    }
    // Log-space sum anchored on the largest term, C(m, k).
    let ln2m = m as f64 * std::f64::consts::LN_2;
    let top = ln_binomial_coefficient(m, k);
    let mut term = 1.0;
    let mut acc = 1.0;
    for j in (1..=k).rev() {
        // C(m, j-1) / C(m, j) = j / (m - j + 1)
        term *= j as f64 / (m - j + 1) as f64;
        acc += term;
        if term < acc * 1e-17 {
            break;
        }
    }
    Ok((top - ln2m + acc.ln()).exp())
}

/// Run one test by name.
pub fn run_test(method: TestMethod, counts: &PairCounts) -> Result<TestResult> {
    match method {
        TestMethod::Z => z_corrected(counts),
        TestMethod::ZPocock => z_pocock(counts),
        TestMethod::Exact => exact_p_value(counts),
    }
}

/// Alternative used for power and sample-size calculations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignTarget {
    /// Net benefit `delta` with decided probability `pi_decided = p_w + p_l`.
    NetBenefit { delta: f64, pi_decided: f64 },
    /// Win ratio `ratio` with decided probability `pi_decided`.
    WinRatio { ratio: f64, pi_decided: f64 },
    /// Win and loss probabilities given directly.
    Raw { pi_win: f64, pi_loss: f64 },
}

impl DesignTarget {
    /// Win and loss probabilities implied by the target, validated.
    pub fn probabilities(&self) -> Result<(f64, f64)> {
        let (pw, pl) = match *self {
            DesignTarget::NetBenefit { delta, pi_decided } => {
                if !(delta > -1.0 && delta < 1.0) {
                    return Err(Error::invalid(format!(
                        "net benefit must lie in (-1, 1), got {delta}"
                    )));
                }
                if delta == 0.0 {
                    return Err(Error::NoEffect);
                }
                if !(pi_decided >= delta.abs() && pi_decided <= 1.0) {
                    return Err(Error::invalid(format!(
                        "decided probability must lie in [|delta|, 1], got {pi_decided}"
                    )));
                }
                ((pi_decided + delta) / 2.0, (pi_decided - delta) / 2.0)
            }
            DesignTarget::WinRatio { ratio, pi_decided } => {
                if !(ratio > 0.0 && ratio.is_finite()) {
                    return Err(Error::invalid(format!(
                        "win ratio must be positive, got {ratio}"
                    )));
                }
                if ratio == 1.0 {
                    return Err(Error::NoEffect);
                }
                if !(pi_decided > 0.0 && pi_decided <= 1.0) {
                    return Err(Error::invalid(format!(
                        "decided probability must lie in (0, 1], got {pi_decided}"
                    )));
                }
                let pl = pi_decided / (1.0 + ratio);
                (ratio * pl, pl)
            }
            DesignTarget::Raw { pi_win, pi_loss } => {
                let p = Proportions::from_win_loss(pi_win, pi_loss)?;
                if p.decided() == 0.0 {
                    return Err(Error::invalid("win and loss probabilities are both zero"));
                }
                if pi_win == pi_loss {
                    return Err(Error::NoEffect);
                }
                (pi_win, pi_loss)
            }
        };
        let decided = pw + pl;
        if decided - (pw - pl).powi(2) <= 0.0 {
            return Err(Error::Infeasible(
                "alternative has zero variance (all pairs won or all lost)".into(),
            ));
        }
        Ok((pw, pl))
    }
}

/// Approximate power of the two-sided score test with `n_pairs` pairs.
pub fn power(n_pairs: u64, target: &DesignTarget, alpha: &Alpha) -> Result<f64> {
    if n_pairs == 0 {
        return Err(Error::invalid("number of pairs must be at least 1"));
    }
    let (pw, pl) = target.probabilities()?;
    let n = n_pairs as f64;
    let delta = pw - pl;
    let sigma0 = ((pw + pl) / n).sqrt();
    let sigma1 = ((pw + pl - delta * delta) / n).sqrt();
    Ok(normal_cdf((delta.abs() - alpha.z() * sigma0) / sigma1))
}

/// Smallest number of pairs whose approximate power reaches `target_power`.
pub fn sample_size(target: &DesignTarget, alpha: &Alpha, target_power: f64) -> Result<u64> {
    if !(target_power > 0.0 && target_power < 1.0) {
        return Err(Error::invalid(format!(
            "power must lie in (0, 1), got {target_power}"
        )));
    }
    let (pw, pl) = target.probabilities()?;
    let delta = pw - pl;
    let decided = pw + pl;
    let z_beta = normal_quantile(target_power)?;
    let root = alpha.z() * decided.sqrt() + z_beta * (decided - delta * delta).sqrt();
    if root <= 0.0 {
        return Ok(1);
    }
    let n = (root / delta).powi(2);
    if !n.is_finite() || n > 1e15 {
        return Err(Error::Infeasible(format!(
            "required sample size {n} is not representable"
        )));
    }
    // Absorb rounding noise so an exact integer does not round up.
    Ok(((n - 1e-9).ceil() as u64).max(1))
}

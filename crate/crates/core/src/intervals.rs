//! Confidence intervals for a single proportion, the net benefit and the win ratio.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence_set::ConfidenceSet;
use crate::counts::{net_benefit, win_fraction, win_ratio, PairCounts};
use crate::error::{Error, Result};
use crate::numeric::Alpha;

/// Interval construction for a single binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProportionMethod {
    Wald,
    Wilson,
    AgrestiCoull,
}

/// Interval for one proportion, clipped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleProportionInterval {
    pub lower: f64,
    pub upper: f64,
    pub method: ProportionMethod,
}

fn check_proportion(p: f64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "proportion must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

fn clipped(center: f64, half: f64, method: ProportionMethod) -> SingleProportionInterval {
    SingleProportionInterval {
        lower: (center - half).max(0.0),
        upper: (center + half).min(1.0),
        method,
    }
}

/// Score (Wilson) interval.
pub fn wilson_interval(p: f64, n: u64, alpha: &Alpha) -> Result<SingleProportionInterval> {
    check_proportion(p, n)?;
    let z = alpha.z();
    let nf = n as f64;
    let n_adj = nf + z * z;
    let center = (nf * p + 0.5 * z * z) / n_adj;
    let half = 0.5 / n_adj * z * (z * z + 4.0 * nf * p * (1.0 - p)).sqrt();
    Ok(clipped(center, half, ProportionMethod::Wilson))
}

/// Agresti-Coull interval: a Wald interval around the Wilson centre.
pub fn agresti_coull_interval(p: f64, n: u64, alpha: &Alpha) -> Result<SingleProportionInterval> {
    check_proportion(p, n)?;
    let z = alpha.z();
    let nf = n as f64;
    let n_adj = nf + z * z;
    let center = (nf * p + 0.5 * z * z) / n_adj;
    let half = z * (center * (1.0 - center) / n_adj).sqrt();
    Ok(clipped(center, half, ProportionMethod::AgrestiCoull))
}

/// Wald interval `p +/- z sqrt(p (1 - p) / n)`, clipped.
pub fn wald_proportion_interval(p: f64, n: u64, alpha: &Alpha) -> Result<SingleProportionInterval> {
    check_proportion(p, n)?;
    let half = alpha.z() * (p * (1.0 - p) / n as f64).sqrt();
    Ok(clipped(p, half, ProportionMethod::Wald))
}

pub fn proportion_interval(
    method: ProportionMethod,
    p: f64,
    n: u64,
    alpha: &Alpha,
) -> Result<SingleProportionInterval> {
    match method {
        ProportionMethod::Wald => wald_proportion_interval(p, n, alpha),
        ProportionMethod::Wilson => wilson_interval(p, n, alpha),
        ProportionMethod::AgrestiCoull => agresti_coull_interval(p, n, alpha),
    }
}

/// Correlation between the observed win and loss proportions under the
/// multinomial model; zero when either proportion is 0 or 1.
pub fn win_loss_correlation(p_win: f64, p_loss: f64) -> f64 {
    let denom = p_win * (1.0 - p_win) * p_loss * (1.0 - p_loss);
    if denom > 0.0 {
        -p_win * p_loss / denom.sqrt()
    } else {
        0.0
    }
}

/// Net benefit interval methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NbMethod {
    Wald,
    MoverAc,
    MoverWilson,
}

impl NbMethod {
    pub const ALL: [NbMethod; 3] = [NbMethod::Wald, NbMethod::MoverAc, NbMethod::MoverWilson];

    pub fn name(&self) -> &'static str {
        match self {
            NbMethod::Wald => "wald",
            NbMethod::MoverAc => "mover-ac",
            NbMethod::MoverWilson => "mover-wilson",
        }
    }
}

/// Win ratio interval methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WrMethod {
    Pocock,
    Wald,
    WaldLog,
    Fieller,
    MoverAc,
    MoverWilson,
}

impl WrMethod {
    pub const ALL: [WrMethod; 6] = [
        WrMethod::Pocock,
        WrMethod::Wald,
        WrMethod::WaldLog,
        WrMethod::Fieller,
        WrMethod::MoverAc,
        WrMethod::MoverWilson,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WrMethod::Pocock => "pocock",
            WrMethod::Wald => "wald",
            WrMethod::WaldLog => "wald-log",
            WrMethod::Fieller => "fieller",
            WrMethod::MoverAc => "mover-ac",
            WrMethod::MoverWilson => "mover-wilson",
        }
    }
}

macro_rules! name_traits {
    ($t:ty, $what:literal) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let key = s.trim().to_ascii_lowercase().replace('_', "-");
                Self::ALL
                    .into_iter()
                    .find(|m| m.name() == key)
                    .ok_or_else(|| {
                        Error::invalid(format!("unknown {} method '{}'", $what, s.trim()))
                    })
            }
        }
    };
}

name_traits!(NbMethod, "net benefit");
name_traits!(WrMethod, "win ratio");

/// Wald interval for the net benefit, `D +/- z sqrt((p_w + p_l - D^2) / N)`.
///
/// Not clipped; endpoints outside `[-1, 1]` are left for the caller to flag.
pub fn nb_wald(counts: &PairCounts, alpha: &Alpha) -> Result<ConfidenceSet> {
    let p = counts.proportions()?;
    let d = net_benefit(counts)?;
    let var = ((p.p_win + p.p_loss - d * d) / counts.total() as f64).max(0.0);
    let half = alpha.z() * var.sqrt();
    Ok(ConfidenceSet::bounded(d - half, d + half))
}

/// MOVER interval for the net benefit from explicit win and loss limits.
pub fn nb_mover_from_limits(
    p_win: f64,
    p_loss: f64,
    win: (f64, f64),
    loss: (f64, f64),
) -> ConfidenceSet {
    let (lw, uw) = win;
    let (ll, ul) = loss;
    let rho = win_loss_correlation(p_win, p_loss);
    let d = p_win - p_loss;
    let (a, b) = (p_win - lw, ul - p_loss);
    let lower = d - (a * a + b * b - 2.0 * rho * a * b).max(0.0).sqrt();
    let (a, b) = (uw - p_win, p_loss - ll);
    let upper = d + (a * a + b * b - 2.0 * rho * a * b).max(0.0).sqrt();
    ConfidenceSet::bounded(lower, upper)
}

/// MOVER interval for the net benefit with Wilson or Agresti-Coull limits.
pub fn nb_mover(
    counts: &PairCounts,
    alpha: &Alpha,
    base: ProportionMethod,
) -> Result<ConfidenceSet> {
    let p = counts.proportions()?;
    let n = counts.total();
    let w = proportion_interval(base, p.p_win, n, alpha)?;
    let l = proportion_interval(base, p.p_loss, n, alpha)?;
    Ok(nb_mover_from_limits(
        p.p_win,
        p.p_loss,
        (w.lower, w.upper),
        (l.lower, l.upper),
    ))
}

pub fn nb_interval(method: NbMethod, counts: &PairCounts, alpha: &Alpha) -> Result<ConfidenceSet> {
    match method {
        NbMethod::Wald => nb_wald(counts, alpha),
        NbMethod::MoverAc => nb_mover(counts, alpha, ProportionMethod::AgrestiCoull),
        NbMethod::MoverWilson => nb_mover(counts, alpha, ProportionMethod::Wilson),
    }
}

/// Interval from the Wald interval for the win fraction `Q_w`, mapped by
/// `Q / (1 - Q)`.
pub fn wr_pocock(counts: &PairCounts, alpha: &Alpha) -> Result<ConfidenceSet> {
    let m = counts.decided();
    let q = win_fraction(counts)?;
    let half = alpha.z() * (q * (1.0 - q) / m as f64).sqrt();
    let q_lo = (q - half).max(0.0);
    let q_hi = (q + half).min(1.0);
    if q_lo >= 1.0 {
        return Ok(ConfidenceSet::undefined("no losses: win fraction is 1"));
    }
    let lower = q_lo / (1.0 - q_lo);
    if q_hi >= 1.0 {
        return Ok(ConfidenceSet::UpperUnbounded { lower });
    }
    Ok(ConfidenceSet::bounded(lower, q_hi / (1.0 - q_hi)))
}

/// Delta-method Wald interval, variance `p_w (p_w + p_l) / (N p_l^3)`.
///
/// Not clipped; a negative lower endpoint is left for the caller to flag.
pub fn wr_wald(counts: &PairCounts, alpha: &Alpha) -> Result<ConfidenceSet> {
    if counts.n_win == 0 || counts.n_loss == 0 {
        if counts.decided() == 0 {
            return Err(Error::AllTies);
        }
        return Err(Error::degenerate(
            "Wald variance needs at least one win and one loss",
        ));
    }
    let p = counts.proportions()?;
    let r = win_ratio(counts)?;
    let var = p.p_win * (p.p_win + p.p_loss) / (counts.total() as f64 * p.p_loss.powi(3));
    let half = alpha.z() * var.sqrt();
    Ok(ConfidenceSet::bounded(r - half, r + half))
}

/// Wald interval on the log scale, variance `1/n_w + 1/n_l`.
pub fn wr_wald_log(counts: &PairCounts, alpha: &Alpha) -> Result<ConfidenceSet> {
    if counts.n_win == 0 || counts.n_loss == 0 {
        if counts.decided() == 0 {
            return Err(Error::AllTies);
        }
        return Err(Error::degenerate(
            "log-scale variance needs at least one win and one loss",
        ));
    }
    let log_r = (counts.n_win as f64 / counts.n_loss as f64).ln();
    let half = alpha.z() * (1.0 / counts.n_win as f64 + 1.0 / counts.n_loss as f64).sqrt();
    Ok(ConfidenceSet::bounded(
        (log_r - half).exp(),
        (log_r + half).exp(),
    ))
}

/// Coefficients of the Fieller quadratic `A R^2 - 2 B R + C <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiellerCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FiellerCoefficients {
    pub fn discriminant(&self) -> f64 {
        self.b * self.b - self.a * self.c
    }
}

pub fn fieller_coefficients(counts: &PairCounts, alpha: &Alpha) -> Result<FiellerCoefficients> {
    let p = counts.proportions()?;
    let n = counts.total() as f64;
    let z2 = alpha.z() * alpha.z();
    let (pw, pl) = (p.p_win, p.p_loss);
    Ok(FiellerCoefficients {
        a: n * pl * pl - z2 * pl * (1.0 - pl),
        b: pw * pl * (n + z2),
        c: n * pw * pw - z2 * pw * (1.0 - pw),
    })
}

/// Fieller confidence set for the win ratio.
pub fn wr_fieller(counts: &PairCounts, alpha: &Alpha) -> Result<ConfidenceSet> {
    let FiellerCoefficients { a, b, c } = fieller_coefficients(counts, alpha)?;
    let disc = b * b - a * c;
    if a > 0.0 {
        let root = disc.max(0.0).sqrt();
        return Ok(ConfidenceSet::bounded(
            ((b - root) / a).max(0.0),
            (b + root) / a,
        ));
    }
    if a < 0.0 {
        if disc > 0.0 {
            let root = disc.sqrt();
            return Ok(ConfidenceSet::RayUnion {
                a: (b + root) / a,
                b: (b - root) / a,
            });
        }
        return Ok(ConfidenceSet::WholeLine);
    }
    // Linear case: -2 B R + C <= 0.
    if b > 0.0 {
        return Ok(ConfidenceSet::UpperUnbounded {
            lower: (c / (2.0 * b)).max(0.0),
        });
    }
    if c <= 0.0 {
        Ok(ConfidenceSet::WholeLine)
    } else {
        Ok(ConfidenceSet::undefined("Fieller set is empty"))
    }
}

/// MOVER interval for the win ratio with Wilson or Agresti-Coull limits.
///
/// The lower limit uses the closed-form root whenever it exists and is
/// clipped at zero. The set is upper-unbounded when the loss lower limit
/// reaches zero or the upper quadratic has no real root.
pub fn wr_mover(
    counts: &PairCounts,
    alpha: &Alpha,
    base: ProportionMethod,
) -> Result<ConfidenceSet> {
    let p = counts.proportions()?;
    if counts.n_loss == 0 {
        return Err(Error::UndefinedRatio);
    }
    let n = counts.total();
    let w = proportion_interval(base, p.p_win, n, alpha)?;
    let l = proportion_interval(base, p.p_loss, n, alpha)?;
    Ok(wr_mover_from_limits(
        p.p_win,
        p.p_loss,
        (w.lower, w.upper),
        (l.lower, l.upper),
    ))
}

/// MOVER ratio interval from explicit win and loss limits.
pub fn wr_mover_from_limits(
    p_win: f64,
    p_loss: f64,
    win: (f64, f64),
    loss: (f64, f64),
) -> ConfidenceSet {
    let (lw, uw) = win;
    let (ll, ul) = loss;
    let rho = win_loss_correlation(p_win, p_loss);
    let cross = p_win * p_loss;

    let a = cross - rho * (p_win - lw) * (ul - p_loss);
    let den = ul * (2.0 * p_loss - ul);
    let disc = a * a - lw * (2.0 * p_win - lw) * den;
    let lower = if disc < 0.0 {
        0.0
    } else if den == 0.0 {
        if a > 0.0 {
            lw * (2.0 * p_win - lw) / (2.0 * a)
        } else {
            0.0
        }
    } else {
        (a - disc.sqrt()) / den
    };
    let lower = lower.max(0.0);

    let b = cross - rho * (uw - p_win) * (p_loss - ll);
    let den = ll * (2.0 * p_loss - ll);
    let disc = b * b - uw * (2.0 * p_win - uw) * den;
    if den <= 0.0 || disc < 0.0 {
        return ConfidenceSet::UpperUnbounded { lower };
    }
    ConfidenceSet::bounded(lower, (b + disc.sqrt()) / den)
}

pub fn wr_interval(method: WrMethod, counts: &PairCounts, alpha: &Alpha) -> Result<ConfidenceSet> {
    match method {
        WrMethod::Pocock => wr_pocock(counts, alpha),
        WrMethod::Wald => wr_wald(counts, alpha),
        WrMethod::WaldLog => wr_wald_log(counts, alpha),
        WrMethod::Fieller => wr_fieller(counts, alpha),
        WrMethod::MoverAc => wr_mover(counts, alpha, ProportionMethod::AgrestiCoull),
        WrMethod::MoverWilson => wr_mover(counts, alpha, ProportionMethod::Wilson),
    }
}

//! Matched-pair counts and the point estimators built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tally of adjudicated matched pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PairCounts {
    pub n_win: u64,
    pub n_loss: u64,
    pub n_tie: u64,
}

impl PairCounts {
    pub fn new(n_win: u64, n_loss: u64, n_tie: u64) -> Self {
        Self {
            n_win,
            n_loss,
            n_tie,
        }
    }

    /// Total number of pairs, N.
    pub fn total(&self) -> u64 {
        self.n_win + self.n_loss + self.n_tie
    }

    /// Number of decided (non-tied) pairs.
    pub fn decided(&self) -> u64 {
        self.n_win + self.n_loss
    }

    /// Treatment and control labels swapped.
    pub fn reflected(&self) -> Self {
        Self::new(self.n_loss, self.n_win, self.n_tie)
    }

    /// Observed win/loss/tie proportions.
    pub fn proportions(&self) -> Result<Proportions> {
        let n = self.total();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let n = n as f64;
        Ok(Proportions {
            p_win: self.n_win as f64 / n,
            p_loss: self.n_loss as f64 / n,
            p_tie: self.n_tie as f64 / n,
        })
    }

    /// Small-sample advisory: normal approximations want at least 20 decided pairs.
    pub fn small_sample(&self) -> bool {
        self.decided() < 20
    }
}

/// Win/loss/tie probabilities (or proportions) summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub p_win: f64,
    pub p_loss: f64,
    pub p_tie: f64,
}

impl Proportions {
    /// Validated constructor; the components must be in [0, 1] and sum to one.
    pub fn new(p_win: f64, p_loss: f64, p_tie: f64) -> Result<Self> {
        let ok = [p_win, p_loss, p_tie]
            .iter()
            .all(|p| p.is_finite() && (0.0..=1.0).contains(p));
        if !ok || ((p_win + p_loss + p_tie) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "probabilities ({p_win}, {p_loss}, {p_tie}) must lie in [0, 1] and sum to 1"
            )));
        }
        Ok(Self {
            p_win,
            p_loss,
            p_tie,
        })
    }

    /// Probabilities given only the win and loss components.
    pub fn from_win_loss(p_win: f64, p_loss: f64) -> Result<Self> {
        Self::new(p_win, p_loss, 1.0 - p_win - p_loss)
    }

    /// Probability that a pair is decided, `p_w + p_l`.
    pub fn decided(&self) -> f64 {
        self.p_win + self.p_loss
    }

    /// Net benefit `p_w - p_l`.
    pub fn net_benefit(&self) -> f64 {
        self.p_win - self.p_loss
    }

    /// Win ratio `p_w / p_l`, if `p_l > 0`.
    pub fn win_ratio(&self) -> Option<f64> {
        (self.p_loss > 0.0).then(|| self.p_win / self.p_loss)
    }
}

/// Net benefit `(n_w - n_l) / N`.
pub fn net_benefit(counts: &PairCounts) -> Result<f64> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    Ok((counts.n_win as f64 - counts.n_loss as f64) / n as f64)
}

/// Win ratio `n_w / n_l`.
pub fn win_ratio(counts: &PairCounts) -> Result<f64> {
    if counts.total() == 0 {
        return Err(Error::EmptyData);
    }
    if counts.n_loss == 0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(counts.n_win as f64 / counts.n_loss as f64)
}

/// Fraction of decided pairs won by treatment, `n_w / (n_w + n_l)`.
pub fn win_fraction(counts: &PairCounts) -> Result<f64> {
    let m = counts.decided();
    if m == 0 {
        return Err(Error::AllTies);
    }
    Ok(counts.n_win as f64 / m as f64)
}

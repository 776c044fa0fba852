//! Inference for the matched net benefit and matched win ratio.
//!
//! Matched pairs of treated and control subjects are compared on a
//! prioritized list of outcomes. Each pair is a win, loss or tie for
//! treatment, and the resulting counts feed point estimates, tests,
//! confidence sets, power calculations and a Monte-Carlo engine.

pub mod cli;
pub mod comparator;
pub mod confidence_set;
pub mod counts;
pub mod error;
pub mod hypothesis;
pub mod input;
pub mod intervals;
pub mod numeric;
pub mod report;

pub mod simulation;

pub use confidence_set::ConfidenceSet;
pub use counts::{net_benefit, win_fraction, win_ratio, PairCounts, Proportions};
pub use error::{Error, Result};
pub use hypothesis::{DesignTarget, TestMethod, TestResult};
pub use intervals::{NbMethod, ProportionMethod, WrMethod};
pub use numeric::Alpha;

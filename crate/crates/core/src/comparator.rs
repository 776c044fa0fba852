//! Adjudication of matched pairs on a prioritized outcome hierarchy.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::counts::PairCounts;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeKind {
    /// Event time with censoring at the subject's follow-up.
    TimeToEvent,
    Continuous,
    /// 0/1 indicator.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

/// One level of the hierarchy.
///
/// For time-to-event outcomes `LowerIsBetter` means the event is harmful
/// (later or no event wins); `HigherIsBetter` treats the event as beneficial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub name: String,
    pub kind: OutcomeKind,
    pub direction: Direction,
    #[serde(default)]
    pub tie_margin: f64,
}

/// Outcomes in priority order, highest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    #[serde(rename = "outcome", alias = "outcomes")]
    pub outcomes: Vec<OutcomeSpec>,
}

impl Hierarchy {
    pub fn new(outcomes: Vec<OutcomeSpec>) -> Result<Self> {
        let h = Self { outcomes };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outcomes.is_empty() {
            return Err(Error::invalid("hierarchy has no outcomes"));
        }
        let mut seen = HashSet::new();
        for o in &self.outcomes {
            if o.name.trim().is_empty() {
                return Err(Error::invalid("outcome name is empty"));
            }
            if !seen.insert(o.name.as_str()) {
                return Err(Error::invalid(format!("duplicate outcome '{}'", o.name)));
            }
            if !(o.tie_margin.is_finite() && o.tie_margin >= 0.0) {
                return Err(Error::invalid(format!(
                    "tie margin for '{}' must be non-negative, got {}",
                    o.name, o.tie_margin
                )));
            }
        }
        Ok(())
    }

    /// Parse the TOML form: an `[[outcome]]` table per level, in priority order.
    pub fn from_toml(text: &str) -> Result<Self> {
        let h: Hierarchy = toml::from_str(text).map_err(|e| Error::invalid(e.to_string()))?;
        h.validate()?;
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    Treatment,
    Control,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Treatment => "treatment",
            Arm::Control => "control",
        })
    }
}

/// One subject's data. For time-to-event outcomes the value is the event
/// time, `None` meaning no event during follow-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub arm: Arm,
    pub follow_up: Option<f64>,
    pub values: BTreeMap<String, Option<f64>>,
    pub risk_score: Option<f64>,
}

impl SubjectRecord {
    fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Win,
    Loss,
    Tie,
}

impl Verdict {
    fn flip(self) -> Self {
        match self {
            Verdict::Win => Verdict::Loss,
            Verdict::Loss => Verdict::Win,
            Verdict::Tie => Verdict::Tie,
        }
    }
}

/// Verdict for treatment and the outcome that decided it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub verdict: Verdict,
    pub deciding_outcome: Option<String>,
}

fn data_err(subject: &SubjectRecord, msg: impl Into<String>) -> Error {
    Error::Data {
        subject: subject.subject_id.clone(),
        message: msg.into(),
    }
}

fn check_event(s: &SubjectRecord, name: &str) -> Result<Option<(f64, f64)>> {
    let event = s.value(name);
    match (event, s.follow_up) {
        (None, None) => Ok(None),
        (Some(_), None) => Err(data_err(
            s,
            format!("event time for '{name}' without follow-up"),
        )),
        (ev, Some(fu)) => {
            if !(fu.is_finite() && fu >= 0.0) {
                return Err(data_err(s, format!("invalid follow-up {fu}")));
            }
            if let Some(t) = ev {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(data_err(s, format!("invalid event time {t} for '{name}'")));
                }
                if t > fu {
                    return Err(data_err(
                        s,
                        format!("event time {t} for '{name}' exceeds follow-up {fu}"),
                    ));
                }
            }
            Ok(Some((ev.unwrap_or(f64::INFINITY), fu)))
        }
    }
}

fn compare_event(t: &SubjectRecord, c: &SubjectRecord, o: &OutcomeSpec) -> Result<Verdict> {
    let (Some((et, ft)), Some((ec, fc))) = (check_event(t, &o.name)?, check_event(c, &o.name)?)
    else {
        return Ok(Verdict::Tie);
    };
    // Compare only over the window both subjects were observed.
    let tau = ft.min(fc);
    let verdict = match (et <= tau, ec <= tau) {
        (true, false) => Verdict::Loss,
        (false, true) => Verdict::Win,
        (false, false) => Verdict::Tie,
        (true, true) => {
            if (et - ec).abs() <= o.tie_margin {
                Verdict::Tie
            } else if et > ec {
                Verdict::Win
            } else {
                Verdict::Loss
            }
        }
    };
    Ok(match o.direction {
        Direction::LowerIsBetter => verdict,
        Direction::HigherIsBetter => verdict.flip(),
    })
}

fn compare_value(t: &SubjectRecord, c: &SubjectRecord, o: &OutcomeSpec) -> Result<Verdict> {
    for s in [t, c] {
        if let Some(v) = s.value(&o.name) {
            if !v.is_finite() {
                return Err(data_err(s, format!("non-finite value for '{}'", o.name)));
            }
            if o.kind == OutcomeKind::Binary && v != 0.0 && v != 1.0 {
                return Err(data_err(
                    s,
                    format!("binary outcome '{}' has value {v}", o.name),
                ));
            }
        }
    }
    let (Some(vt), Some(vc)) = (t.value(&o.name), c.value(&o.name)) else {
        return Ok(Verdict::Tie);
    };
    let diff = vt - vc;
    if diff.abs() <= o.tie_margin {
        return Ok(Verdict::Tie);
    }
    let treated_higher = diff > 0.0;
    Ok(match (o.direction, treated_higher) {
        (Direction::HigherIsBetter, true) | (Direction::LowerIsBetter, false) => Verdict::Win,
        _ => Verdict::Loss,
    })
}

/// Adjudicate one pair: the first outcome that is not tied decides.
pub fn compare_pair(
    treated: &SubjectRecord,
    control: &SubjectRecord,
    hierarchy: &Hierarchy,
) -> Result<PairVerdict> {
    for o in &hierarchy.outcomes {
        let v = match o.kind {
            OutcomeKind::TimeToEvent => compare_event(treated, control, o)?,
            OutcomeKind::Continuous | OutcomeKind::Binary => compare_value(treated, control, o)?,
        };
        if v != Verdict::Tie {
            return Ok(PairVerdict {
                verdict: v,
                deciding_outcome: Some(o.name.clone()),
            });
        }
    }
    Ok(PairVerdict {
        verdict: Verdict::Tie,
        deciding_outcome: None,
    })
}

pub fn tally(verdicts: &[PairVerdict]) -> PairCounts {
    let mut c = PairCounts::default();
    for v in verdicts {
        match v.verdict {
            Verdict::Win => c.n_win += 1,
            Verdict::Loss => c.n_loss += 1,
            Verdict::Tie => c.n_tie += 1,
        }
    }
    c
}

/// Wins and losses decided at each level of the hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeAttribution {
    pub outcome: String,
    pub wins: u64,
    pub losses: u64,
}

pub fn attribute(verdicts: &[PairVerdict], hierarchy: &Hierarchy) -> Vec<OutcomeAttribution> {
    hierarchy
        .outcomes
        .iter()
        .map(|o| {
            let decided = verdicts
                .iter()
                .filter(|v| v.deciding_outcome.as_deref() == Some(o.name.as_str()));
            let (mut wins, mut losses) = (0, 0);
            for v in decided {
                match v.verdict {
                    Verdict::Win => wins += 1,
                    Verdict::Loss => losses += 1,
                    Verdict::Tie => {}
                }
            }
            OutcomeAttribution {
                outcome: o.name.clone(),
                wins,
                losses,
            }
        })
        .collect()
}

/// A treated subject and its matched control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub pair_id: String,
    pub treated: SubjectRecord,
    pub control: SubjectRecord,
}

pub fn compare_pairs(pairs: &[MatchedPair], hierarchy: &Hierarchy) -> Result<Vec<PairVerdict>> {
    pairs
        .iter()
        .map(|p| compare_pair(&p.treated, &p.control, hierarchy))
        .collect()
}

/// Greedy nearest-neighbour matching on `risk_score`.
///
/// Treated subjects are visited in order of score (then id); each takes the
/// closest unclaimed control, ties broken by control id. Treated subjects
/// left over when controls run out stay unmatched.
pub fn greedy_match(
    treated: &[SubjectRecord],
    controls: &[SubjectRecord],
) -> Result<Vec<MatchedPair>> {
    let score = |s: &SubjectRecord| -> Result<f64> {
        match s.risk_score {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(data_err(s, "missing or invalid risk score")),
        }
    };
    let mut order: Vec<(f64, &SubjectRecord)> = treated
        .iter()
        .map(|s| Ok((score(s)?, s)))
        .collect::<Result<_>>()?;
    order.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.subject_id.cmp(&b.1.subject_id))
    });
    let mut pool: Vec<(f64, &SubjectRecord)> = controls
        .iter()
        .map(|s| Ok((score(s)?, s)))
        .collect::<Result<_>>()?;
    pool.sort_by(|a, b| a.1.subject_id.cmp(&b.1.subject_id));
    let mut claimed = vec![false; pool.len()];

    let mut pairs = Vec::new();
    for (ts, t) in order {
        let best = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| !claimed[*i])
            .min_by(|(_, a), (_, b)| {
                (a.0 - ts)
                    .abs()
                    .total_cmp(&(b.0 - ts).abs())
                    .then_with(|| a.1.subject_id.cmp(&b.1.subject_id))
            })
            .map(|(i, _)| i);
        let Some(i) = best else { break };
        claimed[i] = true;
        pairs.push(MatchedPair {
            pair_id: format!("{}:{}", t.subject_id, pool[i].1.subject_id),
            treated: t.clone(),
            control: pool[i].1.clone(),
        });
    }
    Ok(pairs)
}

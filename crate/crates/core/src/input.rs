//! Reading hierarchy configs and subject-level CSV files.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::comparator::{Arm, Hierarchy, MatchedPair, OutcomeKind, SubjectRecord};
use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_hierarchy(path: &Path) -> Result<Hierarchy> {
    Hierarchy::from_toml(&read_text(path)?).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: match e {
            Error::InvalidArgument(m) => m,
            other => other.to_string(),
        },
    })
}

/// CSV column holding an outcome's value.
pub fn outcome_column(name: &str, kind: OutcomeKind) -> String {
    match kind {
        OutcomeKind::TimeToEvent => format!("{name}_time"),
        _ => name.to_string(),
    }
}

struct Columns {
    pair_id: Option<usize>,
    subject_id: Option<usize>,
    arm: usize,
    follow_up: Option<usize>,
    risk_score: Option<usize>,
    outcomes: Vec<(String, usize)>,
}

struct Parser<'a> {
    path: &'a Path,
}

impl Parser<'_> {
    fn err(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Parse {
            path: PathBuf::from(self.path),
            line,
            message: message.into(),
        }
    }

    fn columns(
        &self,
        headers: &csv::StringRecord,
        hierarchy: &Hierarchy,
        need_pair: bool,
    ) -> Result<Columns> {
        let index: HashMap<&str, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim(), i))
            .collect();
        let find = |name: &str| index.get(name).copied();
        let require =
            |name: &str| find(name).ok_or_else(|| self.err(1, format!("missing column '{name}'")));
        let mut outcomes = Vec::new();
        for o in &hierarchy.outcomes {
            let col = outcome_column(&o.name, o.kind);
            outcomes.push((o.name.clone(), require(&col)?));
        }
        Ok(Columns {
            pair_id: if need_pair {
                Some(require("pair_id")?)
            } else {
                find("pair_id")
            },
            subject_id: find("subject_id"),
            arm: require("arm")?,
            follow_up: find("follow_up"),
            risk_score: find("risk_score"),
            outcomes,
        })
    }

    fn number(&self, line: u64, column: &str, cell: Option<&str>) -> Result<Option<f64>> {
        let cell = cell.unwrap_or("").trim();
        if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
            return Ok(None);
        }
        let v: f64 = cell
            .parse()
            .map_err(|_| self.err(line, format!("column '{column}': '{cell}' is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(line, format!("column '{column}': value must be finite")));
        }
        Ok(Some(v))
    }

    fn arm(&self, line: u64, cell: &str) -> Result<Arm> {
        match cell.trim().to_ascii_lowercase().as_str() {
            "treatment" | "treated" | "t" | "1" => Ok(Arm::Treatment),
            "control" | "c" | "0" => Ok(Arm::Control),
            other => Err(self.err(line, format!("unknown arm '{other}'"))),
        }
    }

    fn records<R: Read>(
        &self,
        reader: R,
        hierarchy: &Hierarchy,
        need_pair: bool,
    ) -> Result<Vec<(u64, Option<String>, SubjectRecord)>> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| self.err(1, e.to_string()))?
            .clone();
        let cols = self.columns(&headers, hierarchy, need_pair)?;
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                self.err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let pair_id = cols
                .pair_id
                .map(|i| rec.get(i).unwrap_or("").trim().to_string());
            if matches!(pair_id.as_deref(), Some("")) {
                return Err(self.err(line, "empty pair_id"));
            }
            let arm = self.arm(line, rec.get(cols.arm).unwrap_or(""))?;
            let subject_id = match cols.subject_id.and_then(|i| rec.get(i)).map(str::trim) {
                Some(s) if !s.is_empty() => s.to_string(),
                _ => match &pair_id {
                    Some(p) => format!("{p}-{arm}"),
                    None => return Err(self.err(line, "missing subject_id")),
                },
            };
            let follow_up = match cols.follow_up {
                Some(i) => self.number(line, "follow_up", rec.get(i))?,
                None => None,
            };
            let risk_score = match cols.risk_score {
                Some(i) => self.number(line, "risk_score", rec.get(i))?,
                None => None,
            };
            let mut values = BTreeMap::new();
            for (name, i) in &cols.outcomes {
                values.insert(name.clone(), self.number(line, name, rec.get(*i))?);
            }
            out.push((
                line,
                pair_id,
                SubjectRecord {
                    subject_id,
                    arm,
                    follow_up,
                    values,
                    risk_score,
                },
            ));
        }
        Ok(out)
    }
}

/// Parse a matched-pair CSV: two rows per `pair_id`, one per arm.
pub fn parse_pairs<R: Read>(
    reader: R,
    hierarchy: &Hierarchy,
    path: &Path,
) -> Result<Vec<MatchedPair>> {
    let p = Parser { path };
    let rows = p.records(reader, hierarchy, true)?;
    let mut order: Vec<String> = Vec::new();
    let mut slots: HashMap<String, (u64, Option<SubjectRecord>, Option<SubjectRecord>)> =
        HashMap::new();
    for (line, pair_id, rec) in rows {
        let pair_id = pair_id.expect("pair_id column is required");
        let slot = slots.entry(pair_id.clone()).or_insert_with(|| {
            order.push(pair_id.clone());
            (line, None, None)
        });
        let target = match rec.arm {
            Arm::Treatment => &mut slot.1,
            Arm::Control => &mut slot.2,
        };
        if target.is_some() {
            return Err(p.err(line, format!("pair '{pair_id}' has two {} rows", rec.arm)));
        }
        *target = Some(rec);
    }
    order
        .into_iter()
        .map(|id| {
            let (line, t, c) = slots.remove(&id).expect("slot exists");
            match (t, c) {
                (Some(treated), Some(control)) => Ok(MatchedPair {
                    pair_id: id,
                    treated,
                    control,
                }),
                _ => Err(p.err(
                    line,
                    format!("pair '{id}' needs one treatment and one control row"),
                )),
            }
        })
        .collect()
}

pub fn read_pairs(path: &Path, hierarchy: &Hierarchy) -> Result<Vec<MatchedPair>> {
    let text = read_text(path)?;
    parse_pairs(text.as_bytes(), hierarchy, path)
}

/// Parse an unpaired subject CSV (`subject_id`, `arm`, `risk_score`, outcomes)
/// into treated and control lists.
pub fn parse_subjects<R: Read>(
    reader: R,
    hierarchy: &Hierarchy,
    path: &Path,
) -> Result<(Vec<SubjectRecord>, Vec<SubjectRecord>)> {
    let p = Parser { path };
    let rows = p.records(reader, hierarchy, false)?;
    let (mut t, mut c) = (Vec::new(), Vec::new());
    for (line, _, rec) in rows {
        if rec.risk_score.is_none() {
            return Err(p.err(
                line,
                format!("subject '{}' has no risk_score", rec.subject_id),
            ));
        }
        match rec.arm {
            Arm::Treatment => t.push(rec),
            Arm::Control => c.push(rec),
        }
    }
    Ok((t, c))
}

pub fn read_subjects(
    path: &Path,
    hierarchy: &Hierarchy,
) -> Result<(Vec<SubjectRecord>, Vec<SubjectRecord>)> {
    let text = read_text(path)?;
    parse_subjects(text.as_bytes(), hierarchy, path)
}

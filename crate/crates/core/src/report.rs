//! Analysis, comparison and design reports with text, CSV and JSON rendering.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comparator::OutcomeAttribution;
use crate::confidence_set::ConfidenceSet;
use crate::counts::{net_benefit, win_fraction, win_ratio, PairCounts};
use crate::error::{Error, Result};
use crate::hypothesis::{run_test, DesignTarget, TestMethod};
use crate::intervals::{
    fieller_coefficients, nb_interval, wr_interval, FiellerCoefficients, NbMethod, WrMethod,
};
use crate::numeric::Alpha;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(OutputFormat::Text),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!("unknown output format '{other}'"))),
        }
    }
}

/// What to compute for a set of counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRequest {
    pub counts: PairCounts,
    pub alpha: Alpha,
    pub tests: Vec<TestMethod>,
    pub nb_methods: Vec<NbMethod>,
    pub wr_methods: Vec<WrMethod>,
}

impl AnalysisRequest {
    /// Every test and interval method.
    pub fn all(counts: PairCounts, alpha: Alpha) -> Self {
        Self {
            counts,
            alpha,
            tests: TestMethod::ALL.to_vec(),
            nb_methods: NbMethod::ALL.to_vec(),
            wr_methods: WrMethod::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub method: TestMethod,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalFlag {
    BoundaryViolation,
    Undefined,
    RayUnion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEntry {
    pub method: String,
    pub set: ConfidenceSet,
    pub width: Option<f64>,
    pub flags: Vec<IntervalFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub counts: PairCounts,
    pub n_pairs: u64,
    pub alpha: f64,
    pub z: f64,
    pub net_benefit: f64,
    pub win_ratio: Option<f64>,
    pub win_fraction: Option<f64>,
    pub small_sample: bool,
    pub tests: Vec<TestEntry>,
    pub net_benefit_intervals: Vec<IntervalEntry>,
    pub win_ratio_intervals: Vec<IntervalEntry>,
    pub fieller: Option<FiellerCoefficients>,
}

fn dedup<T: PartialEq + Copy>(xs: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &x in xs {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn entry(method: &str, result: Result<ConfidenceSet>, range: (f64, f64)) -> IntervalEntry {
    let set = result.unwrap_or_else(|e| ConfidenceSet::undefined(e.to_string()));
    let mut flags = Vec::new();
    if set.exceeds(range.0, range.1) {
        flags.push(IntervalFlag::BoundaryViolation);
    }
    match set {
        ConfidenceSet::Undefined { .. } => flags.push(IntervalFlag::Undefined),
        ConfidenceSet::RayUnion { .. } => flags.push(IntervalFlag::RayUnion),
        _ => {}
    }
    IntervalEntry {
        method: method.to_string(),
        width: set.width(),
        set,
        flags,
    }
}

/// Run the requested tests and intervals. Per-method failures are reported
/// inside the report; only empty data is an error.
pub fn analyze(req: &AnalysisRequest) -> Result<AnalysisReport> {
    if req.tests.is_empty() && req.nb_methods.is_empty() && req.wr_methods.is_empty() {
        return Err(Error::invalid("no tests or interval methods requested"));
    }
    let c = &req.counts;
    let nb = net_benefit(c)?;
    let tests = dedup(&req.tests)
        .into_iter()
        .map(|m| match run_test(m, c) {
            Ok(r) => TestEntry {
                method: m,
                statistic: r.statistic,
                p_value: Some(r.p_value),
                error: None,
            },
            Err(e) => TestEntry {
                method: m,
                statistic: None,
                p_value: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let nb_int = dedup(&req.nb_methods)
        .into_iter()
        .map(|m| entry(m.name(), nb_interval(m, c, &req.alpha), (-1.0, 1.0)))
        .collect();
    let wr_methods = dedup(&req.wr_methods);
    let wr_int = wr_methods
        .iter()
        .map(|&m| {
            entry(
                m.name(),
                wr_interval(m, c, &req.alpha),
                (0.0, f64::INFINITY),
            )
        })
        .collect();
    let fieller = if wr_methods.contains(&WrMethod::Fieller) {
        fieller_coefficients(c, &req.alpha).ok()
    } else {
        None
    };
    Ok(AnalysisReport {
        counts: *c,
        n_pairs: c.total(),
        alpha: req.alpha.value(),
        z: req.alpha.z(),
        net_benefit: nb,
        win_ratio: win_ratio(c).ok(),
        win_fraction: win_fraction(c).ok(),
        small_sample: c.small_sample(),
        tests,
        net_benefit_intervals: nb_int,
        win_ratio_intervals: wr_int,
        fieller,
    })
}

fn p_text(p: f64) -> String {
    if p < 0.001 {
        format!("{p:.2e}")
    } else {
        format!("{p:.3}")
    }
}

fn opt_csv(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn flags_text(flags: &[IntervalFlag]) -> String {
    flags
        .iter()
        .map(|f| match f {
            IntervalFlag::BoundaryViolation => "boundary-violation",
            IntervalFlag::Undefined => "undefined",
            IntervalFlag::RayUnion => "ray-union",
        })
        .collect::<Vec<_>>()
        .join(";")
}

impl AnalysisReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Text => self.to_text(),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => to_json(self),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.counts;
        let level = ((1.0 - self.alpha) * 100.0 * 1e6).round() / 1e6;
        let _ = writeln!(
            s,
            "Matched pairs: N = {} (wins {}, losses {}, ties {})",
            self.n_pairs, c.n_win, c.n_loss, c.n_tie
        );
        let _ = writeln!(s, "Alpha: {} (z = {:.2})", self.alpha, self.z);
        if self.small_sample {
            let _ = writeln!(
                s,
                "Advisory: fewer than 20 decided pairs; normal approximations may be poor, consider the exact test."
            );
        }
        let _ = writeln!(s, "\nEstimates");
        let _ = writeln!(s, "  {:<14}{:.2}", "net benefit", self.net_benefit);
        let _ = writeln!(
            s,
            "  {:<14}{}",
            "win ratio",
            self.win_ratio
                .map_or("undefined (no losses)".to_string(), |r| format!("{r:.2}"))
        );
        if !self.tests.is_empty() {
            let _ = writeln!(s, "\nTests of no effect");
            for t in &self.tests {
                let line = match (&t.error, t.statistic, t.p_value) {
                    (Some(e), _, _) => format!("undefined ({e})"),
                    (None, Some(z), Some(p)) => format!("statistic {z:.2}  p = {}", p_text(p)),
                    (None, None, Some(p)) => format!("p = {}", p_text(p)),
                    _ => String::new(),
                };
                let _ = writeln!(s, "  {:<14}{line}", t.method.name());
            }
        }
        let mut section = |title: &str, est: Option<f64>, entries: &[IntervalEntry]| {
            if entries.is_empty() {
                return;
            }
            let _ = writeln!(s, "\n{title} {level}% confidence sets");
            for e in entries {
                let est = est.map_or("-".to_string(), |v| format!("{v:.2}"));
                let mut line = format!("  {:<14}{:<8}{}", e.method, est, e.set.render(2));
                if let Some(w) = e.width {
                    let _ = write!(line, "  width {w:.2}");
                }
                if e.flags.contains(&IntervalFlag::BoundaryViolation) {
                    line.push_str("  [boundary violation]");
                }
                let _ = writeln!(s, "{line}");
            }
        };
        section(
            "Net benefit",
            Some(self.net_benefit),
            &self.net_benefit_intervals,
        );
        section("Win ratio", self.win_ratio, &self.win_ratio_intervals);
        if let Some(f) = &self.fieller {
            let _ = writeln!(
                s,
                "\nFieller coefficients: A = {:.2}, B = {:.2}, C = {:.2}",
                f.a, f.b, f.c
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "section",
            "method",
            "estimate",
            "statistic",
            "p_value",
            "set_kind",
            "lower",
            "upper",
            "a",
            "b",
            "width",
            "flags",
            "error",
        ];
        w.write_record(header).expect("in-memory write");
        let c = &self.counts;
        let mut put = |row: [String; 13]| w.write_record(&row).expect("in-memory write");
        let blank = String::new;
        put([
            "counts".into(),
            format!("{}/{}/{}", c.n_win, c.n_loss, c.n_tie),
            self.n_pairs.to_string(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            if self.small_sample {
                "small-sample".into()
            } else {
                blank()
            },
            blank(),
        ]);
        for t in &self.tests {
            put([
                "test".into(),
                t.method.name().into(),
                blank(),
                opt_csv(t.statistic),
                opt_csv(t.p_value),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                t.error.clone().unwrap_or_default(),
            ]);
        }
        let sections = [
            (
                "net-benefit",
                Some(self.net_benefit),
                &self.net_benefit_intervals,
            ),
            ("win-ratio", self.win_ratio, &self.win_ratio_intervals),
        ];
        for (name, est, entries) in sections {
            for e in entries {
                let (a, b) = match e.set {
                    ConfidenceSet::RayUnion { a, b } => (a.to_string(), b.to_string()),
                    _ => (blank(), blank()),
                };
                let reason = match &e.set {
                    ConfidenceSet::Undefined { reason } => reason.clone(),
                    _ => blank(),
                };
                put([
                    name.into(),
                    e.method.clone(),
                    opt_csv(est),
                    blank(),
                    blank(),
                    e.set.kind().into(),
                    opt_csv(e.set.lower()),
                    opt_csv(e.set.upper()),
                    a,
                    b,
                    opt_csv(e.width),
                    flags_text(&e.flags),
                    reason,
                ]);
            }
        }
        if let Some(f) = &self.fieller {
            for (name, v) in [("a", f.a), ("b", f.b), ("c", f.c)] {
                let mut row: [String; 13] = Default::default();
                row[0] = "fieller".into();
                row[1] = name.into();
                row[2] = v.to_string();
                put(row);
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Result of adjudicating a pair file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub counts: PairCounts,
    pub attribution: Vec<OutcomeAttribution>,
    pub analysis: Option<AnalysisReport>,
}

impl CompareReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Text => {
                let mut s = String::from("Decisions by outcome\n");
                for a in &self.attribution {
                    let _ = writeln!(
                        s,
                        "  {:<20}wins {:<6}losses {}",
                        a.outcome, a.wins, a.losses
                    );
                }
                let _ = writeln!(s, "  {:<20}{}", "ties", self.counts.n_tie);
                if let Some(r) = &self.analysis {
                    s.push('\n');
                    s.push_str(&r.to_text());
                }
                s
            }
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["outcome", "wins", "losses"])
                    .expect("in-memory write");
                for a in &self.attribution {
                    w.write_record([a.outcome.clone(), a.wins.to_string(), a.losses.to_string()])
                        .expect("in-memory write");
                }
                w.write_record([
                    "(tie)".to_string(),
                    String::new(),
                    self.counts.n_tie.to_string(),
                ])
                .expect("in-memory write");
                let mut s = String::from_utf8(w.into_inner().expect("flush")).expect("utf-8");
                if let Some(r) = &self.analysis {
                    s.push('\n');
                    s.push_str(&r.to_csv());
                }
                s
            }
        }
    }
}

/// Sample size or power for a design target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub target: DesignTarget,
    pub pi_win: f64,
    pub pi_loss: f64,
    pub alpha: f64,
    pub z: f64,
    pub target_power: Option<f64>,
    pub n_pairs: u64,
    pub power: f64,
}

impl DesignReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Text => {
                let mut s = String::new();
                let _ = writeln!(
                    s,
                    "Implied probabilities: pi_w = {:.4}, pi_l = {:.4}",
                    self.pi_win, self.pi_loss
                );
                let _ = writeln!(s, "Alpha: {} (two-sided)", self.alpha);
                if let Some(p) = self.target_power {
                    let _ = writeln!(s, "Target power: {p}");
                }
                let label = if self.target_power.is_some() {
                    "Pairs required"
                } else {
                    "Pairs"
                };
                let _ = writeln!(s, "{label}: {}", self.n_pairs);
                let _ = writeln!(s, "Power at {} pairs: {:.4}", self.n_pairs, self.power);
                s
            }
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record([
                    "pi_win",
                    "pi_loss",
                    "alpha",
                    "target_power",
                    "n_pairs",
                    "power",
                ])
                .expect("in-memory write");
                w.write_record([
                    self.pi_win.to_string(),
                    self.pi_loss.to_string(),
                    self.alpha.to_string(),
                    opt_csv(self.target_power),
                    self.n_pairs.to_string(),
                    self.power.to_string(),
                ])
                .expect("in-memory write");
                String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
            }
        }
    }
}

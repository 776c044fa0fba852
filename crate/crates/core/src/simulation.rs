//! Seeded, parallel Monte-Carlo studies of tests and confidence intervals.
//!
//! Replicate `i` of scenario stream `s` draws from its own generator keyed
//! by `(seed, s, i)`, and block partial sums are combined in block order,
//! so reports are bitwise identical for any thread count.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{PairCounts, Proportions};
use crate::error::{Error, Result};
use crate::hypothesis::{run_test, TestMethod};
use crate::input::read_text;
use crate::intervals::{nb_interval, wr_interval, NbMethod, WrMethod};
use crate::numeric::Alpha;
use crate::ConfidenceSet;

const BLOCK: u64 = 2048;

/// How the true win/loss/tie probabilities are specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Parameterization {
    Raw {
        pi_win: f64,
        pi_loss: f64,
    },
    /// `pi_w = (1 + nb - pi_t) / 2`, `pi_l = pi_w - nb`.
    FromNb {
        nb: f64,
        pi_tie: f64,
    },
    /// `pi_l = (1 - pi_t) / (1 + wr)`, `pi_w = wr * pi_l`.
    FromWr {
        wr: f64,
        pi_tie: f64,
    },
}

impl Parameterization {
    pub fn probabilities(&self) -> Result<Proportions> {
        match *self {
            Parameterization::Raw { pi_win, pi_loss } => {
                Proportions::from_win_loss(pi_win, pi_loss)
            }
            Parameterization::FromNb { nb, pi_tie } => {
                let pw = (1.0 + nb - pi_tie) / 2.0;
                Proportions::new(pw, pw - nb, pi_tie)
            }
            Parameterization::FromWr { wr, pi_tie } => {
                if !(wr > 0.0 && wr.is_finite()) {
                    return Err(Error::invalid(format!(
                        "win ratio must be positive, got {wr}"
                    )));
                }
                let pl = (1.0 - pi_tie) / (1.0 + wr);
                Proportions::new(wr * pl, pl, pi_tie)
            }
        }
    }
}

/// Which confidence sets may count as covering the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoveragePolicy {
    /// Only bounded intervals can cover; ray unions, half-lines, the whole
    /// line and undefined sets count as misses.
    #[default]
    BoundedOnly,
    /// Any set that contains the truth covers; undefined sets still miss.
    ContainsTruth,
}

/// One cell of a simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n_pairs: u64,
    pub truth: Parameterization,
    pub replicates: u64,
    pub alpha: Alpha,
    pub seed: u64,
    /// Scenario index within its grid; part of every replicate's RNG key.
    pub stream: u64,
    #[serde(default)]
    pub tests: Vec<TestMethod>,
    #[serde(default)]
    pub nb_methods: Vec<NbMethod>,
    #[serde(default)]
    pub wr_methods: Vec<WrMethod>,
    #[serde(default)]
    pub coverage: CoveragePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub method: TestMethod,
    pub rejections: u64,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimand {
    NetBenefit,
    WinRatio,
}

/// Coverage counts every replicate in the denominator. Mean width is over
/// the `n_defined` bounded sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub estimand: Estimand,
    pub method: String,
    pub covered: u64,
    pub n_defined: u64,
    pub coverage: f64,
    pub mean_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: SimScenario,
    pub pi_win: f64,
    pub pi_loss: f64,
    pub pi_tie: f64,
    pub tests: Vec<TestSummary>,
    pub intervals: Vec<IntervalSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenarios: Vec<ScenarioReport>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for one replicate; depends only on its key.
pub fn replicate_rng(seed: u64, stream: u64, replicate: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ replicate);
    ChaCha8Rng::seed_from_u64(key)
}

/// Multinomial draw by sequential conditional binomials.
pub fn sample_counts<R: rand::Rng + ?Sized>(n: u64, p: &Proportions, rng: &mut R) -> PairCounts {
    let draw = |rng: &mut R, n: u64, q: f64| -> u64 {
        if n == 0 || q <= 0.0 {
            0
        } else if q >= 1.0 {
            n
        } else {
            Binomial::new(n, q)
                .expect("probability in (0, 1)")
                .sample(rng)
        }
    };
    let n_win = draw(rng, n, p.p_win);
    let rest = 1.0 - p.p_win;
    let q_loss = if rest > 0.0 { p.p_loss / rest } else { 0.0 };
    let n_loss = draw(rng, n - n_win, q_loss);
    PairCounts::new(n_win, n_loss, n - n_win - n_loss)
}

/// Counts drawn for replicate `i` of a scenario, computed in isolation.
pub fn replicate_counts(s: &SimScenario, i: u64) -> Result<PairCounts> {
    let truth = s.validate()?;
    Ok(sample_counts(
        s.n_pairs,
        &truth,
        &mut replicate_rng(s.seed, s.stream, i),
    ))
}

/// Whether a replicate counts as a rejection. No decided pairs is a
/// non-rejection; a degenerate Pocock statistic (all decided pairs won, or
/// all lost) diverges and counts as a rejection.
fn rejects(method: TestMethod, counts: &PairCounts, alpha: &Alpha) -> bool {
    if counts.decided() == 0 {
        return false;
    }
    match run_test(method, counts) {
        Ok(r) => r.rejects(alpha),
        Err(Error::DegenerateVariance(_)) => true,
        Err(_) => false,
    }
}

#[derive(Clone, Default)]
struct Acc {
    rejections: Vec<u64>,
    covered: Vec<u64>,
    defined: Vec<u64>,
    width: Vec<f64>,
}

impl Acc {
    fn new(tests: usize, intervals: usize) -> Self {
        Self {
            rejections: vec![0; tests],
            covered: vec![0; intervals],
            defined: vec![0; intervals],
            width: vec![0.0; intervals],
        }
    }

    fn merge(mut self, other: &Acc) -> Acc {
        for (a, b) in self.rejections.iter_mut().zip(&other.rejections) {
            *a += b;
        }
        for i in 0..self.covered.len() {
            self.covered[i] += other.covered[i];
            self.defined[i] += other.defined[i];
            self.width[i] += other.width[i];
        }
        self
    }

    fn record_set(
        &mut self,
        i: usize,
        set: &ConfidenceSet,
        truth: Option<f64>,
        policy: CoveragePolicy,
    ) {
        if let Some(w) = set.width() {
            self.defined[i] += 1;
            self.width[i] += w;
        }
        let eligible = match policy {
            CoveragePolicy::BoundedOnly => set.is_bounded(),
            CoveragePolicy::ContainsTruth => true,
        };
        if eligible && truth.is_some_and(|t| set.contains(t)) {
            self.covered[i] += 1;
        }
    }
}

impl SimScenario {
    fn validate(&self) -> Result<Proportions> {
        if self.n_pairs == 0 {
            return Err(Error::invalid("n_pairs must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        self.truth.probabilities()
    }
}

/// Run every requested test and interval on the scenario.
pub fn run_scenario(s: &SimScenario) -> Result<ScenarioReport> {
    let truth = s.validate()?;
    let nb_true = truth.net_benefit();
    let wr_true = truth.win_ratio();
    let n_int = s.nb_methods.len() + s.wr_methods.len();
    let blocks = s.replicates.div_ceil(BLOCK);

    let partials: Vec<Acc> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Acc::new(s.tests.len(), n_int);
            let end = ((b + 1) * BLOCK).min(s.replicates);
            for i in b * BLOCK..end {
                let c = sample_counts(s.n_pairs, &truth, &mut replicate_rng(s.seed, s.stream, i));
                for (k, m) in s.tests.iter().enumerate() {
                    acc.rejections[k] += u64::from(rejects(*m, &c, &s.alpha));
                }
                for (k, m) in s.nb_methods.iter().enumerate() {
                    if let Ok(set) = nb_interval(*m, &c, &s.alpha) {
                        acc.record_set(k, &set, Some(nb_true), s.coverage);
                    }
                }
                let off = s.nb_methods.len();
                for (k, m) in s.wr_methods.iter().enumerate() {
                    if let Ok(set) = wr_interval(*m, &c, &s.alpha) {
                        acc.record_set(off + k, &set, wr_true, s.coverage);
                    }
                }
            }
            acc
        })
        .collect();
    let total = partials
        .iter()
        .fold(Acc::new(s.tests.len(), n_int), |a, b| a.merge(b));

    let reps = s.replicates as f64;
    let tests = s
        .tests
        .iter()
        .zip(&total.rejections)
        .map(|(m, &r)| TestSummary {
            method: *m,
            rejections: r,
            rejection_rate: r as f64 / reps,
        })
        .collect();
    let names = s
        .nb_methods
        .iter()
        .map(|m| (Estimand::NetBenefit, m.name()))
        .chain(s.wr_methods.iter().map(|m| (Estimand::WinRatio, m.name())));
    let intervals = names
        .enumerate()
        .map(|(i, (estimand, name))| IntervalSummary {
            estimand,
            method: name.to_string(),
            covered: total.covered[i],
            n_defined: total.defined[i],
            coverage: total.covered[i] as f64 / reps,
            mean_width: (total.defined[i] > 0).then(|| total.width[i] / total.defined[i] as f64),
        })
        .collect();
    Ok(ScenarioReport {
        scenario: s.clone(),
        pi_win: truth.p_win,
        pi_loss: truth.p_loss,
        pi_tie: truth.p_tie,
        tests,
        intervals,
    })
}

/// Rejection rates under the null `pi_w = pi_l`.
pub fn run_type_one_error(s: &SimScenario) -> Result<ScenarioReport> {
    let p = s.validate()?;
    if (p.p_win - p.p_loss).abs() > 1e-12 {
        return Err(Error::invalid(
            "type I error scenarios need pi_win = pi_loss",
        ));
    }
    run_scenario(&SimScenario {
        nb_methods: vec![],
        wr_methods: vec![],
        ..s.clone()
    })
}

/// Rejection rates under an alternative `pi_w != pi_l`.
pub fn run_power(s: &SimScenario) -> Result<ScenarioReport> {
    let p = s.validate()?;
    if p.p_win == p.p_loss {
        return Err(Error::NoEffect);
    }
    run_scenario(&SimScenario {
        nb_methods: vec![],
        wr_methods: vec![],
        ..s.clone()
    })
}

/// Coverage and width of the requested intervals.
pub fn run_ci_study(s: &SimScenario) -> Result<ScenarioReport> {
    run_scenario(&SimScenario {
        tests: vec![],
        ..s.clone()
    })
}

/// Run a list of scenarios on the current rayon pool.
pub fn run_grid(scenarios: &[SimScenario]) -> Result<SimulationReport> {
    let scenarios = scenarios
        .par_iter()
        .map(run_scenario)
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationReport { scenarios })
}

/// Run on a dedicated pool with `threads` workers.
pub fn run_grid_with_threads(
    scenarios: &[SimScenario],
    threads: usize,
) -> Result<SimulationReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_grid(scenarios))
}

/// One block of a grid config; list-valued fields are crossed.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n_pairs: Vec<u64>,
    /// Null scenarios with `pi_w = pi_l = pi`.
    #[serde(default)]
    pub pi: Vec<f64>,
    #[serde(default)]
    pub pi_win: Vec<f64>,
    #[serde(default)]
    pub pi_loss: Vec<f64>,
    #[serde(default)]
    pub nb: Vec<f64>,
    #[serde(default)]
    pub wr: Vec<f64>,
    #[serde(default)]
    pub pi_tie: Vec<f64>,
    #[serde(default)]
    pub tests: Vec<String>,
    #[serde(default)]
    pub nb_methods: Vec<String>,
    #[serde(default)]
    pub wr_methods: Vec<String>,
}

/// Simulation grid as read from TOML.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub replicates: u64,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Use the two-decimal critical value (1.96 at 0.05).
    #[serde(default)]
    pub rounded_z: bool,
    #[serde(default)]
    pub coverage: CoveragePolicy,
    #[serde(rename = "grid")]
    pub blocks: Vec<GridBlock>,
}

fn default_alpha() -> f64 {
    0.05
}

fn parse_all<T: std::str::FromStr<Err = Error>>(names: &[String]) -> Result<Vec<T>> {
    names.iter().map(|s| s.parse()).collect()
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: match e {
                Error::InvalidArgument(m) => m,
                other => other.to_string(),
            },
        })
    }

    pub fn alpha(&self) -> Result<Alpha> {
        if self.rounded_z {
            Alpha::rounded(self.alpha)
        } else {
            Alpha::new(self.alpha)
        }
    }

    /// Expand into scenarios. Parameters vary slowest in the order listed in
    /// a block, `n_pairs` fastest; `stream` is the global position.
    pub fn scenarios(&self) -> Result<Vec<SimScenario>> {
        let alpha = self.alpha()?;
        let mut out = Vec::new();
        for (bi, b) in self.blocks.iter().enumerate() {
            let bad = |m: &str| Error::invalid(format!("grid block {}: {m}", bi + 1));
            let mut truths = Vec::new();
            let modes = [
                !b.pi.is_empty(),
                !b.pi_win.is_empty() || !b.pi_loss.is_empty(),
                !b.nb.is_empty(),
                !b.wr.is_empty(),
            ];
            if modes.iter().filter(|m| **m).count() != 1 {
                return Err(bad("give exactly one of pi, pi_win/pi_loss, nb or wr"));
            }
            if !b.pi.is_empty() {
                for &p in &b.pi {
                    truths.push(Parameterization::Raw {
                        pi_win: p,
                        pi_loss: p,
                    });
                }
            } else if modes[1] {
                if b.pi_win.is_empty() || b.pi_loss.is_empty() {
                    return Err(bad("pi_win and pi_loss must both be given"));
                }
                for &pw in &b.pi_win {
                    for &pl in &b.pi_loss {
                        truths.push(Parameterization::Raw {
                            pi_win: pw,
                            pi_loss: pl,
                        });
                    }
                }
            } else {
                if b.pi_tie.is_empty() {
                    return Err(bad("nb and wr grids need pi_tie"));
                }
                for &v in if modes[2] { &b.nb } else { &b.wr } {
                    for &pt in &b.pi_tie {
                        truths.push(if modes[2] {
                            Parameterization::FromNb { nb: v, pi_tie: pt }
                        } else {
                            Parameterization::FromWr { wr: v, pi_tie: pt }
                        });
                    }
                }
            }
            if b.n_pairs.is_empty() {
                return Err(bad("n_pairs is empty"));
            }
            let tests: Vec<TestMethod> = parse_all(&b.tests)?;
            let nb_methods: Vec<NbMethod> = parse_all(&b.nb_methods)?;
            let wr_methods: Vec<WrMethod> = parse_all(&b.wr_methods)?;
            if tests.is_empty() && nb_methods.is_empty() && wr_methods.is_empty() {
                return Err(bad("no tests or interval methods requested"));
            }
            for t in truths {
                t.probabilities().map_err(|e| bad(&e.to_string()))?;
                for &n in &b.n_pairs {
                    out.push(SimScenario {
                        n_pairs: n,
                        truth: t,
                        replicates: self.replicates,
                        alpha,
                        seed: self.seed,
                        stream: out.len() as u64,
                        tests: tests.clone(),
                        nb_methods: nb_methods.clone(),
                        wr_methods: wr_methods.clone(),
                        coverage: self.coverage,
                    });
                }
            }
        }
        Ok(out)
    }
}

const CSV_HEADER: [&str; 19] = [
    "scenario",
    "n_pairs",
    "param",
    "param_value",
    "pi_tie",
    "pi_win",
    "pi_loss",
    "alpha",
    "z",
    "replicates",
    "seed",
    "kind",
    "estimand",
    "method",
    "rejection_rate",
    "coverage",
    "mean_width",
    "n_defined",
    "count",
];

impl SimulationReport {
    /// Long-format CSV, one row per scenario and method.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.scenarios {
            let s = &r.scenario;
            let (param, value, pt) = match s.truth {
                Parameterization::Raw { pi_win, .. } => ("raw", pi_win, r.pi_tie),
                Parameterization::FromNb { nb, pi_tie } => ("nb", nb, pi_tie),
                Parameterization::FromWr { wr, pi_tie } => ("wr", wr, pi_tie),
            };
            let base = [
                s.stream.to_string(),
                s.n_pairs.to_string(),
                param.to_string(),
                value.to_string(),
                pt.to_string(),
                r.pi_win.to_string(),
                r.pi_loss.to_string(),
                s.alpha.value().to_string(),
                s.alpha.z().to_string(),
                s.replicates.to_string(),
                s.seed.to_string(),
            ];
            for t in &r.tests {
                let mut row = base.to_vec();
                row.extend([
                    "test".into(),
                    String::new(),
                    t.method.name().into(),
                    t.rejection_rate.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    t.rejections.to_string(),
                ]);
                w.write_record(&row).expect("in-memory write");
            }
            for iv in &r.intervals {
                let mut row = base.to_vec();
                row.extend([
                    "interval".into(),
                    match iv.estimand {
                        Estimand::NetBenefit => "nb".into(),
                        Estimand::WinRatio => "wr".into(),
                    },
                    iv.method.clone(),
                    String::new(),
                    iv.coverage.to_string(),
                    iv.mean_width.map(|w| w.to_string()).unwrap_or_default(),
                    iv.n_defined.to_string(),
                    iv.covered.to_string(),
                ]);
                w.write_record(&row).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

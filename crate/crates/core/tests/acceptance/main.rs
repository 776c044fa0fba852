//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion,
//! followed by the cells that missed, and exits non-zero if any failed.


use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use matched_wr::hypothesis::{exact_p_value, power, run_test, sample_size, z_corrected};
use matched_wr::intervals::{
    fieller_coefficients, nb_interval, nb_mover_from_limits, nb_wald, wr_pocock, wr_wald_log,
    NbMethod,
};
use matched_wr::simulation::{
    run_grid_with_threads, run_power, CoveragePolicy, Estimand, GridConfig, Parameterization,
    ScenarioReport, SimScenario, SimulationReport,
};
use matched_wr::{net_benefit, Alpha, ConfidenceSet, DesignTarget, PairCounts, TestMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use reference::*;

type RatioInterval = fn(&PairCounts, &Alpha) -> matched_wr::Result<ConfidenceSet>;

struct Outcome {
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
    elapsed: Duration,
    budget: Option<Duration>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.failures.is_empty() && self.budget.map_or(true, |b| self.elapsed <= b)
    }
}

fn check(
    name: &'static str,
    budget: Option<Duration>,
    f: impl FnOnce(&mut Vec<String>, &mut Vec<String>),
) -> Outcome {
    let start = Instant::now();
    let (mut failures, mut notes) = (Vec::new(), Vec::new());
    f(&mut failures, &mut notes);
    Outcome {
        name,
        failures,
        notes,
        elapsed: start.elapsed(),
        budget,
    }
}

fn mwr_json(args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_mwr"))
        .args(args)
        .args(["--format", "json"])
        .env_remove("MWR_FORMAT")
        .output()
        .expect("spawn mwr");
    assert!(
        out.status.success(),
        "mwr {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn interval<'a>(report: &'a Value, estimand: &str, method: &str) -> &'a Value {
    let key = if estimand == "nb" {
        "net_benefit_intervals"
    } else {
        "win_ratio_intervals"
    };
    report[key]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["method"] == method)
        .unwrap_or_else(|| panic!("{key} has no {method}"))
}

fn test_entry<'a>(report: &'a Value, method: &str) -> &'a Value {
    report["tests"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["method"] == method)
        .unwrap()
}

/// Per-endpoint tolerance for values printed to two decimals.
const ENDPOINT_TOL: f64 = 0.005 + 1e-12;

fn compare_endpoints(
    fails: &mut Vec<String>,
    label: &str,
    set: &Value,
    lower: f64,
    upper: f64,
    tol_upper: f64,
) {
    if set["kind"] != "bounded" {
        fails.push(format!("{label}: expected ({lower}, {upper}), got {set}"));
        return;
    }
    let (lo, hi) = (
        set["lower"].as_f64().unwrap(),
        set["upper"].as_f64().unwrap(),
    );
    if (lo - lower).abs() > ENDPOINT_TOL || (hi - upper).abs() > tol_upper {
        fails.push(format!(
            "{label}: expected ({lower}, {upper}), got ({lo:.4}, {hi:.4})"
        ));
    }
}

fn large_trials(fails: &mut Vec<String>, _: &mut Vec<String>) {
    for ((w, l, t), z, rows) in &LARGE_TRIALS {
        let counts = format!("{w},{l},{t}");
        let r = mwr_json(&["analyze", "--counts", &counts]);
        let got_z = test_entry(&r, "z")["statistic"].as_f64().unwrap();
        if (got_z - z).abs() > 0.005 {
            fails.push(format!("{counts} z: expected {z}, got {got_z:.4}"));
        }
        for g in rows {
            let e = interval(&r, g.estimand, g.method);
            let label = format!("{counts} {} {}", g.estimand, g.method);
            compare_endpoints(fails, &label, &e["set"], g.lower, g.upper, ENDPOINT_TOL);
        }
    }
}

fn small_study(fails: &mut Vec<String>, notes: &mut Vec<String>) {
    notes.push("critical value 1.96 (--rounded-z)".into());
    for s in &SMALL_STUDY {
        let (w, l, t) = s.counts;
        let counts = format!("{w},{l},{t}");
        let r = mwr_json(&["analyze", "--counts", &counts, "--rounded-z"]);
        for (method, expected) in [("z", s.p_z), ("z-pocock", s.p_pocock)] {
            let p = test_entry(&r, method)["p_value"].as_f64().unwrap();
            if (p - expected).abs() > 0.0005 {
                fails.push(format!(
                    "{counts} {method} p-value: expected {expected} +/- 0.0005, got {p:.4}"
                ));
            }
        }
        for g in s.intervals {
            let tol = if g.upper > 500.0 { 0.5 } else { ENDPOINT_TOL };
            let label = format!("{counts} {} {}", g.estimand, g.method);
            compare_endpoints(
                fails,
                &label,
                &interval(&r, g.estimand, g.method)["set"],
                g.lower,
                g.upper,
                tol,
            );
        }
        if s.counts == (10, 3, 71) {
            let set = &interval(&r, "wr", "fieller")["set"];
            let (a, b) = SMALL_STUDY_FIELLER_RAYS;
            let ok = set["kind"] == "ray-union"
                && (set["a"].as_f64().unwrap() - a).abs() <= 0.005
                && (set["b"].as_f64().unwrap() - b).abs() <= 0.005;
            if !ok {
                fails.push(format!(
                    "{counts} fieller: expected (-inf, {a}) U ({b}, +inf), got {set}"
                ));
            }
            let (ea, eb, ec) = SMALL_STUDY_FIELLER_ABC;
            let f = &r["fieller"];
            for (name, want) in [("a", ea), ("b", eb), ("c", ec)] {
                let got = f[name].as_f64().unwrap();
                if (got - want).abs() > 0.005 {
                    fails.push(format!(
                        "{counts} fieller {name}: expected {want}, got {got:.4}"
                    ));
                }
            }
        }
    }
}

fn tables_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tables")
}

fn run_table(name: &str, threads: usize) -> SimulationReport {
    let cfg = GridConfig::read(&tables_dir().join(name)).expect("grid config");
    run_grid_with_threads(&cfg.scenarios().unwrap(), threads).expect("grid run")
}

fn rate(s: &ScenarioReport, method: TestMethod) -> f64 {
    s.tests
        .iter()
        .find(|t| t.method == method)
        .unwrap()
        .rejection_rate
}

fn find_raw(r: &SimulationReport, pw: f64, pl: f64, n: u64) -> &ScenarioReport {
    r.scenarios
        .iter()
        .find(|s| {
            s.scenario.n_pairs == n
                && s.scenario.truth
                    == Parameterization::Raw {
                        pi_win: pw,
                        pi_loss: pl,
                    }
        })
        .unwrap()
}

fn type_one_error(r: &SimulationReport, fails: &mut Vec<String>, notes: &mut Vec<String>) {
    for (i, &pi) in TYPE_ONE_PI.iter().enumerate() {
        for (j, &n) in TYPE_ONE_N.iter().enumerate() {
            let s = find_raw(r, pi, pi, n);
            for (method, table) in [
                (TestMethod::ZPocock, &TYPE_ONE_POCOCK),
                (TestMethod::Z, &TYPE_ONE_Z),
            ] {
                let got = rate(s, method);
                if (got - table[i][j]).abs() > 0.01 {
                    fails.push(format!(
                        "pi={pi} N={n} {method}: expected {} +/- 0.01, got {got:.4}",
                        table[i][j]
                    ));
                }
            }
            let z = rate(s, TestMethod::Z);
            if !(0.04..=0.07).contains(&z) {
                fails.push(format!("pi={pi} N={n} z: rate {z:.4} outside [0.04, 0.07]"));
            }
        }
    }
    notes.push(format!(
        "{} scenarios x {} replicates",
        r.scenarios.len(),
        r.scenarios[0].scenario.replicates
    ));
}

fn power_grid(r: &SimulationReport, fails: &mut Vec<String>, _: &mut Vec<String>) {
    for (i, &pw) in POWER_PI_WIN.iter().enumerate() {
        for (j, &n) in POWER_N.iter().enumerate() {
            let s = find_raw(r, pw, 0.3, n);
            for (method, table) in [
                (TestMethod::ZPocock, &POWER_POCOCK),
                (TestMethod::Z, &POWER_Z),
            ] {
                let got = rate(s, method);
                if (got - table[i][j]).abs() > 0.015 {
                    fails.push(format!(
                        "pi_w={pw} N={n} {method}: expected {} +/- 0.015, got {got:.4}",
                        table[i][j]
                    ));
                }
            }
            let (z, zp) = (rate(s, TestMethod::Z), rate(s, TestMethod::ZPocock));
            if z > zp {
                fails.push(format!(
                    "pi_w={pw} N={n}: z rate {z:.4} exceeds z-pocock rate {zp:.4}"
                ));
            }
        }
    }
}

struct Cell<'a> {
    label: String,
    summary: &'a matched_wr::simulation::IntervalSummary,
    method: &'static str,
    n: u64,
    pi_tie: f64,
    value: f64,
    is_wr: bool,
}

fn interval_cells(r: &SimulationReport) -> Vec<(Cell<'_>, f64, f64)> {
    let mut cells = Vec::new();
    for s in &r.scenarios {
        let (is_wr, value, pi_tie) = match s.scenario.truth {
            Parameterization::FromNb { nb, pi_tie } => (false, nb, pi_tie),
            Parameterization::FromWr { wr, pi_tie } => (true, wr, pi_tie),
            Parameterization::Raw { .. } => continue,
        };
        let row = PI_TIE.iter().position(|&p| p == pi_tie).unwrap();
        let n_col = if s.scenario.n_pairs == 30 { 0 } else { 1 };
        let methods: &[&'static str] = if is_wr { &WR_METHODS } else { &NB_METHODS };
        for (k, &method) in methods.iter().enumerate() {
            let estimand = if is_wr {
                Estimand::WinRatio
            } else {
                Estimand::NetBenefit
            };
            let summary = s
                .intervals
                .iter()
                .find(|i| i.estimand == estimand && i.method == method)
                .unwrap();
            let col = n_col * methods.len() + k;
            let (cov, width) = if is_wr {
                let c = WR_COVERAGE.iter().find(|(v, _)| *v == value).unwrap().1[row][col];
                let w = WR_WIDTH.iter().find(|(v, _)| *v == value).unwrap().1[row][col];
                (c, w)
            } else {
                let c = NB_COVERAGE.iter().find(|(v, _)| *v == value).unwrap().1[row][col];
                let w = NB_WIDTH.iter().find(|(v, _)| *v == value).unwrap().1[row][col];
                (c, w)
            };
            let label = format!(
                "{} {value} pi_t={pi_tie} N={} {method}",
                if is_wr { "wr" } else { "nb" },
                s.scenario.n_pairs
            );
            cells.push((
                Cell {
                    label,
                    summary,
                    method,
                    n: s.scenario.n_pairs,
                    pi_tie,
                    value,
                    is_wr,
                },
                cov,
                width,
            ));
        }
    }
    cells
}

fn coverage_grid(r: &SimulationReport, fails: &mut Vec<String>, notes: &mut Vec<String>) {
    let cells = interval_cells(r);
    for (c, expected, _) in &cells {
        let degenerate_fieller =
            c.is_wr && c.method == "fieller" && c.value == 2.0 && c.pi_tie >= 0.4 && c.n == 30;
        let tol = if degenerate_fieller { 0.02 } else { 0.01 };
        let got = c.summary.coverage;
        if (got - expected).abs() > tol + 1e-12 {
            fails.push(format!(
                "{}: expected {expected} +/- {tol}, got {got:.4}",
                c.label
            ));
        }
    }
    notes.push(format!(
        "{} cells, non-bounded sets count as misses",
        cells.len()
    ));
}

fn width_grid(r: &SimulationReport, fails: &mut Vec<String>, notes: &mut Vec<String>) {
    let cells = interval_cells(r);
    for (c, _, expected) in &cells {
        let Some(got) = c.summary.mean_width else {
            fails.push(format!("{}: no bounded replicate", c.label));
            continue;
        };
        let widened =
            c.is_wr && matches!(c.method, "fieller" | "pocock") && c.n == 30 && c.pi_tie >= 0.4;
        let (ok, tol) = if widened {
            ((got - expected).abs() <= 0.05 * expected, "5%".to_string())
        } else if *expected < 2.0 {
            ((got - expected).abs() <= 0.02 + 1e-12, "0.02".to_string())
        } else {
            ((got - expected).abs() <= 0.02 * expected, "2%".to_string())
        };
        if !ok {
            fails.push(format!(
                "{}: expected {expected} +/- {tol}, got {got:.4}",
                c.label
            ));
        }
    }
    notes.push(format!("{} cells, mean over bounded sets", cells.len()));
}

fn properties(fails: &mut Vec<String>, notes: &mut Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let alpha = Alpha::default();
    let draw = |rng: &mut ChaCha8Rng| loop {
        let c = PairCounts::new(
            rng.random_range(0..500),
            rng.random_range(0..500),
            rng.random_range(0..1000),
        );
        if c.decided() > 0 {
            return c;
        }
    };
    let mut bad = |what: &str, c: &PairCounts, detail: String| {
        if fails.len() < 20 {
            fails.push(format!("{what} at {c:?}: {detail}"));
        }
    };

    for _ in 0..10_000 {
        let c = draw(&mut rng);
        let z = z_corrected(&c).unwrap().statistic.unwrap();
        let p = c.proportions().unwrap();
        let z_m = net_benefit(&c).unwrap() / ((p.p_win + p.p_loss) / c.total() as f64).sqrt();
        if (z - z_m).abs() > 1e-10 {
            bad(
                "net benefit statistic differs from z",
                &c,
                format!("{z_m} vs {z}"),
            );
        }
    }

    for _ in 0..100_000 {
        let c = draw(&mut rng);
        let d = fieller_coefficients(&c, &alpha).unwrap().discriminant();
        if d < -1e-12 {
            bad("negative Fieller discriminant", &c, format!("{d}"));
        }
    }

    for _ in 0..10_000 {
        let c = draw(&mut rng);
        let p = c.proportions().unwrap();
        let n = c.total() as f64;
        let lim = |q: f64| {
            let h = alpha.z() * (q * (1.0 - q) / n).sqrt();
            (q - h, q + h)
        };
        let mover = nb_mover_from_limits(p.p_win, p.p_loss, lim(p.p_win), lim(p.p_loss));
        let wald = nb_wald(&c, &alpha).unwrap();
        if let (
            ConfidenceSet::Bounded { lower: a, upper: b },
            ConfidenceSet::Bounded { lower: x, upper: y },
        ) = (mover, wald)
        {
            if (a - x).abs() > 1e-9 || (b - y).abs() > 1e-9 {
                bad(
                    "MOVER with Wald limits differs from Wald",
                    &c,
                    format!("({a}, {b}) vs ({x}, {y})"),
                );
            }
        } else {
            bad("MOVER with Wald limits not bounded", &c, String::new());
        }
    }

    for _ in 0..10_000 {
        let c = draw(&mut rng);
        let more = PairCounts::new(c.n_win, c.n_loss, c.n_tie + rng.random_range(1..1000));
        for m in TestMethod::ALL {
            if run_test(m, &c).ok() != run_test(m, &more).ok() {
                bad("test depends on ties", &c, m.to_string());
            }
        }
    }

    for _ in 0..10_000 {
        let c = draw(&mut rng);
        let r = c.reflected();
        for m in NbMethod::ALL {
            let (
                ConfidenceSet::Bounded { lower: a, upper: b },
                ConfidenceSet::Bounded { lower: x, upper: y },
            ) = (
                nb_interval(m, &c, &alpha).unwrap(),
                nb_interval(m, &r, &alpha).unwrap(),
            )
            else {
                bad("net benefit interval not bounded", &c, m.to_string());
                continue;
            };
            if (a + y).abs() > 1e-9 || (b + x).abs() > 1e-9 {
                bad("net benefit reflection", &c, m.to_string());
            }
        }
        let ratio_methods: [(&str, RatioInterval); 2] =
            [("wald-log", wr_wald_log), ("pocock", wr_pocock)];
        for (name, f) in ratio_methods {
            if let (
                Ok(ConfidenceSet::Bounded { lower: a, upper: b }),
                Ok(ConfidenceSet::Bounded { lower: x, upper: y }),
            ) = (f(&c, &alpha), f(&r, &alpha))
            {
                if a > 0.0
                    && x > 0.0
                    && ((a - 1.0 / y).abs() > 1e-9 * a.max(1.0)
                        || (b - 1.0 / x).abs() > 1e-9 * b.max(1.0))
                {
                    bad("win ratio reflection", &c, name.to_string());
                }
            }
        }
    }

    let mut exact_cases = 0;
    for m in 1u32..=25 {
        let mut hist = vec![0u64; m as usize + 1];
        for bits in 0u64..(1u64 << m) {
            hist[bits.count_ones() as usize] += 1;
        }
        for w in 0..=m {
            let dev = (2 * w as i64 - m as i64).abs();
            let extreme: u64 = (0..=m)
                .filter(|&k| (2 * k as i64 - m as i64).abs() >= dev)
                .map(|k| hist[k as usize])
                .sum();
            let oracle = extreme as f64 / (1u64 << m) as f64;
            let c = PairCounts::new(w.into(), (m - w).into(), 0);
            let got = exact_p_value(&c).unwrap().p_value;
            if got != oracle {
                bad(
                    "exact p-value",
                    &c,
                    format!("{got} vs enumeration {oracle}"),
                );
            }
            exact_cases += 1;
        }
    }
    notes.push(format!(
        "1e4 identity, 1e5 discriminant, 1e4 collapse/ties/reflection, {exact_cases} exact cases"
    ));
}

fn sample_size_consistency(fails: &mut Vec<String>, notes: &mut Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alpha = Alpha::default();
    let mut targets = 0;
    let mut worst: f64 = 0.0;
    while targets < 100 {
        let pi_decided: f64 = rng.random_range(0.2..1.0);
        let q: f64 = rng.random_range(0.55..0.8);
        let (pi_win, pi_loss) = if rng.random_bool(0.5) {
            (q * pi_decided, (1.0 - q) * pi_decided)
        } else {
            ((1.0 - q) * pi_decided, q * pi_decided)
        };
        let goal: f64 = rng.random_range(0.7..0.95);
        let target = DesignTarget::Raw { pi_win, pi_loss };
        let Ok(n) = sample_size(&target, &alpha, goal) else {
            continue;
        };
        if n > 5000 {
            continue;
        }
        targets += 1;
        let scenario = SimScenario {
            n_pairs: n,
            truth: Parameterization::Raw { pi_win, pi_loss },
            replicates: 20_000,
            alpha,
            seed: 99,
            stream: targets,
            tests: vec![TestMethod::Z],
            nb_methods: vec![],
            wr_methods: vec![],
            coverage: CoveragePolicy::BoundedOnly,
        };
        let sim = run_power(&scenario).unwrap().tests[0].rejection_rate;
        let nominal = power(n, &target, &alpha).unwrap();
        worst = worst.max((sim - goal).abs());
        if !(goal - 0.02..=goal + 0.03).contains(&sim) {
            fails.push(format!(
                "pi_w={pi_win:.4} pi_l={pi_loss:.4} target {goal:.3}: N={n}, formula power {nominal:.4}, simulated {sim:.4}"
            ));
        }
    }
    notes.push(format!(
        "100 targets x 20000 replicates, largest |simulated - target| {worst:.4}"
    ));
}

fn main() {
    let mut outcomes = Vec::new();
    let second = Some(Duration::from_secs(1));
    outcomes.push(check(
        "golden: two large matched trials",
        second,
        large_trials,
    ));
    outcomes.push(check(
        "golden: small study, three hierarchies",
        second,
        small_study,
    ));

    let mut grids = Vec::new();
    let timed = |name: &str| {
        let start = Instant::now();
        let r = run_table(name, 8);
        (r, start.elapsed())
    };
    let (t1, d1) = timed("type_one_error.toml");
    let (pw, d2) = timed("power.toml");
    let (ci, d3) = timed("intervals.toml");
    let mut o = check("type I error grid", None, |f, n| type_one_error(&t1, f, n));
    (o.elapsed, o.budget) = (d1, Some(Duration::from_secs(120)));
    outcomes.push(o);
    let mut o = check("power grid", None, |f, n| power_grid(&pw, f, n));
    (o.elapsed, o.budget) = (d2, Some(Duration::from_secs(120)));
    outcomes.push(o);
    let mut o = check("interval coverage grid", None, |f, n| {
        coverage_grid(&ci, f, n)
    });
    (o.elapsed, o.budget) = (d3, Some(Duration::from_secs(600)));
    outcomes.push(o);
    outcomes.push(check("interval width grid", None, |f, n| {
        width_grid(&ci, f, n)
    }));
    grids.extend([
        ("type_one_error.toml", t1),
        ("power.toml", pw),
        ("intervals.toml", ci),
    ]);

    outcomes.push(check("property suites", None, properties));
    outcomes.push(check(
        "sample size consistency",
        None,
        sample_size_consistency,
    ));
    outcomes.push(check(
        "determinism across thread counts",
        None,
        |fails, notes| {
            for (name, eight) in &grids {
                let one = run_table(name, 1);
                if one.to_csv() != eight.to_csv() {
                    fails.push(format!("{name}: CSV differs between 1 and 8 threads"));
                }
                let again = run_table(name, 8);
                if again.to_csv() != eight.to_csv() {
                    fails.push(format!("{name}: CSV differs between two 8-thread runs"));
                }
            }
            notes.push("all grids, 1 vs 8 threads and repeated runs".into());
        },
    ));

    let mut failed = 0;
    for (i, o) in outcomes.iter().enumerate() {
        let status = if o.passed() { "PASS" } else { "FAIL" };
        let timing = match o.budget {
            Some(b) => format!("{:.2}s of {}s", o.elapsed.as_secs_f64(), b.as_secs()),
            None => format!("{:.2}s", o.elapsed.as_secs_f64()),
        };
        let extra = if o.notes.is_empty() {
            String::new()
        } else {
            format!("; {}", o.notes.join("; "))
        };
        println!("{status} [{}] {} ({timing}{extra})", i + 1, o.name);
        for f in &o.failures {
            println!("       {f}");
        }
        if !o.passed() {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        outcomes.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero when any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fairlens::dataset::{encode, load_csv, partition_groups, split, DatasetSchema, DatasetTable};
use fairlens::harness::{run_grid, CellResult, Experiment, ExperimentConfig, Favor, ResultTable};
use fairlens::inject::{inject_bias, InjectionSpec};
use fairlens::learner::{fit, Hyperparams, Objective};
use fairlens::metrics::{accuracy, aod, eod, evaluate, f1, grouped_confusion, presentation, spd};
use fairlens::reweigh::{fair_balance_class, Reweigh, SampleWeights};

const METRIC_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-12;
const GRADIENT_REL_TOL: f64 = 1e-5;
const BRUTE_FORCE_TOL: f64 = 1e-4;
const EPSILON: f64 = 0.05;
const BASELINE_MIN_EOD: f64 = 0.20;
const METRIC_BUDGET: Duration = Duration::from_secs(10);
const BASELINE_BUDGET: Duration = Duration::from_secs(120);
const GRID_BUDGET: Duration = Duration::from_secs(600);
const DATASETS: [&str; 4] = ["adult", "compas", "bank", "heart"];

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.details.push(format!("FAIL {}", detail.into()));
        }
    }

    fn note(&mut self, detail: impl Into<String>) {
        self.details.push(detail.into());
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_json_file(root().join("configs").join(format!("{name}.json"))).unwrap()
}

fn missing_data(name: &str) -> Option<String> {
    let c = config(name);
    (!c.data.exists()).then(|| {
        format!(
            "{name}: data/{} missing; obtain the source file and run scripts/prepare_datasets.py",
            c.data.file_name().unwrap().to_string_lossy()
        )
    })
}

/// Rows, sides and predictions of a random instance.
fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<u8>, Vec<u8>, Vec<Vec<u8>>) {
    let n = rng.random_range(1..=200);
    let k = rng.random_range(1..=2);
    // skewed rates exercise empty denominators
    let p_label = rng.random_range(0.0..1.0);
    let p_side = rng.random_range(0.0..1.0);
    let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(p_label))).collect();
    let c: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let a = (0..k).map(|_| (0..n).map(|_| u8::from(rng.random_bool(p_side))).collect()).collect();
    (y, c, a)
}

/// Per-row counting oracle: (eod, aod, spd) with `None` on an empty denominator.
fn oracle_metrics(y: &[u8], c: &[u8], a: &[u8]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let rate = |side: u8, cond_y: Option<u8>| -> Option<f64> {
        let mut hits = 0u32;
        let mut total = 0u32;
        for i in 0..y.len() {
            if a[i] == side && cond_y.is_none_or(|v| y[i] == v) {
                total += 1;
                if c[i] == 1 {
                    hits += 1;
                }
            }
        }
        (total > 0).then(|| f64::from(hits) / f64::from(total))
    };
    let tpr = [rate(0, Some(1)), rate(1, Some(1))];
    let fpr = [rate(0, Some(0)), rate(1, Some(0))];
    let pos = [rate(0, None), rate(1, None)];
    let eod = tpr[1].zip(tpr[0]).map(|(t1, t0)| t1 - t0);
    let aod = match (fpr[1], fpr[0], eod) {
        (Some(f1), Some(f0), Some(e)) => Some(0.5 * ((f1 - f0) + e)),
        _ => None,
    };
    let spd = pos[1].zip(pos[0]).map(|(p1, p0)| p1 - p0);
    (eod, aod, spd)
}

fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for inst in 0..1000 {
        let (y, c, attrs) = random_instance(&mut rng);
        let n = y.len();
        let tp = (0..n).filter(|&i| y[i] == 1 && c[i] == 1).count() as f64;
        let fp = (0..n).filter(|&i| y[i] == 0 && c[i] == 1).count() as f64;
        let fneg = (0..n).filter(|&i| y[i] == 1 && c[i] == 0).count() as f64;
        let oracle_acc = (0..n).filter(|&i| y[i] == c[i]).count() as f64 / n as f64;
        let oracle_f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fneg) };
        out.check(
            (accuracy(&y, &c).unwrap() - oracle_acc).abs() <= METRIC_TOL,
            format!("instance {inst}: accuracy"),
        );
        out.check((f1(&y, &c).unwrap() - oracle_f1).abs() <= METRIC_TOL, format!("instance {inst}: f1"));
        for a in &attrs {
            let gc = grouped_confusion(&y, &c, a).unwrap();
            let (e, o, s) = oracle_metrics(&y, &c, a);
            out.check(close(eod(&gc).ok(), e, METRIC_TOL), format!("instance {inst}: eod"));
            out.check(close(aod(&gc).ok(), o, METRIC_TOL), format!("instance {inst}: aod"));
            out.check(close(spd(&c, a).ok(), s, METRIC_TOL), format!("instance {inst}: spd"));
        }
    }
    let elapsed = start.elapsed();
    out.check(elapsed < METRIC_BUDGET, format!("took {elapsed:?}"));
    out.note(format!("1000 instances in {elapsed:.2?}"));
    out
}

fn synthetic_table(y: Vec<u8>, attrs: &[Vec<u8>]) -> DatasetTable {
    let n = y.len();
    let sens = Array2::from_shape_fn((n, attrs.len()), |(i, j)| attrs[j][i]);
    DatasetTable::from_parts(Array2::zeros((n, 1)), sens, y).unwrap()
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for inst in 0..1000 {
        let (y, _, attrs) = random_instance(&mut rng);
        let t = synthetic_table(y, &attrs);
        let w = fair_balance_class(&t);
        let mut cells: BTreeMap<(Vec<u8>, u8), f64> = BTreeMap::new();
        for i in 0..t.row_count() {
            *cells.entry((t.group_key(i).0, t.labels()[i])).or_default() += w.as_slice()[i];
        }
        for total in cells.values() {
            worst = worst.max((total - 1.0).abs());
            out.check((total - 1.0).abs() <= WEIGHT_TOL, format!("instance {inst}: cell sum {total}"));
        }
        for rows in partition_groups(&t).values() {
            let mass = |label: u8| -> f64 {
                rows.iter().filter(|&&i| t.labels()[i] == label).map(|&i| w.as_slice()[i]).sum()
            };
            let (pos, neg) = (mass(1), mass(0));
            if pos > 0.0 && neg > 0.0 {
                out.check((pos - neg).abs() <= WEIGHT_TOL, format!("instance {inst}: {pos} vs {neg}"));
            }
        }
    }
    out.note(format!("worst cell deviation {worst:e}"));
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    for name in DATASETS {
        if let Some(msg) = missing_data(name) {
            out.check(false, msg);
            continue;
        }
        let c = config(name);
        let schema = DatasetSchema::from_json_file(&c.schema).unwrap();
        let table = encode(&load_csv(&c.data, &schema).unwrap(), &schema).unwrap();
        for (label, part) in [("full", table.clone()), ("test split", split(&table, 0.7, 0).unwrap().1)] {
            let r = evaluate(part.labels(), part.labels(), part.sensitive().view(), part.attributes()).unwrap();
            for a in &r.attributes {
                out.check(
                    a.eod == Some(0.0) && a.aod == Some(0.0),
                    format!("{name} {label} {}: eod {:?} aod {:?}", a.attribute, a.eod, a.aod),
                );
            }
        }
        out.note(format!("{name}: ok"));
    }
    out
}

fn random_fit_instance(rng: &mut ChaCha8Rng) -> (DatasetTable, SampleWeights) {
    let n = rng.random_range(3..40);
    let d = rng.random_range(1..6);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
    y[0] = 0;
    y[1] = 1;
    let w = SampleWeights::new((0..n).map(|_| rng.random_range(0.1..3.0)).collect());
    (DatasetTable::from_parts(x, Array2::zeros((n, 1)), y).unwrap(), w)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for inst in 0..100 {
        let (t, w) = random_fit_instance(&mut rng);
        let l2 = rng.random_range(0.0..2.0);
        let obj = Objective::new(t.features().view(), t.labels(), &w, l2).unwrap();
        let p: Vec<f64> = (0..obj.dim()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (_, g) = obj.loss_and_gradient(&p);
        let h = 1e-5;
        for k in 0..obj.dim() {
            let (mut up, mut down) = (p.clone(), p.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (obj.loss(&up) - obj.loss(&down)) / (2.0 * h);
            // relative error, floored at 1 for near-zero components
            let rel = (g[k] - fd).abs() / g[k].abs().max(1.0);
            worst = worst.max(rel);
            out.check(rel <= GRADIENT_REL_TOL, format!("instance {inst} component {k}: {rel:e}"));
        }
    }
    out.note(format!("worst gradient error {worst:e}"));

    for inst in 0..20 {
        let (t, w) = random_fit_instance(&mut rng);
        let base = fit(&t, &w, &Hyperparams::default()).unwrap();
        for c in [0.5, 8.0] {
            let scaled = SampleWeights::new(w.as_slice().iter().map(|v| v * c).collect());
            out.check(
                fit(&t, &scaled, &Hyperparams::default()).unwrap() == base,
                format!("instance {inst}: scaling weights by {c} changed the model"),
            );
        }
    }

    let t = DatasetTable::from_parts(ndarray::array![[-1.0], [1.0]], Array2::zeros((2, 1)), vec![0, 1]).unwrap();
    let m = fit(&t, &SampleWeights::new(vec![1.0, 1.0]), &Hyperparams::default()).unwrap();
    let softplus = |z: f64| z.max(0.0) + (-z.abs()).exp().ln_1p();
    // symmetric pair: intercept 0, loss 2 softplus(-beta) + beta^2 / 2
    let beta = golden_section(|b| 2.0 * softplus(-b) + 0.5 * b * b, -10.0, 10.0);
    out.check(
        (m.coefficients[0] - beta).abs() <= BRUTE_FORCE_TOL && m.intercept.abs() <= BRUTE_FORCE_TOL,
        format!("1-D fit {} / {} vs brute force {beta}", m.coefficients[0], m.intercept),
    );
    out.note(format!("1-D coefficient {:.8} vs brute force {beta:.8}", m.coefficients[0]));
    out
}

fn eod_median(cell: Option<&CellResult>, attribute: usize) -> Option<f64> {
    Some(cell?.aggregate()?.attributes[attribute].eod?.median)
}

fn aod_median(cell: Option<&CellResult>, attribute: usize) -> Option<f64> {
    Some(cell?.aggregate()?.attributes[attribute].aod?.median)
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let mut c = config("adult");
    c.single = vec![Favor {
        attribute: "sex".into(),
        favor: "Female".into(),
    }];
    c.joint.clear();
    let start = Instant::now();
    let experiment = Experiment::prepare(c).unwrap();
    let table = run_grid(&experiment, None).unwrap();
    let elapsed = start.elapsed();
    let sex = experiment.data.attribute_index("sex").unwrap();
    let female = experiment.data.attributes()[sex].sides.iter().position(|s| s == "Female").unwrap() as u8;

    let baseline = eod_median(table.uninjected(Reweigh::None), sex);
    out.check(
        baseline.is_some_and(|v| v.abs() >= BASELINE_MIN_EOD),
        format!("baseline median EOD(sex) {baseline:?} below {BASELINE_MIN_EOD}"),
    );
    for d in &experiment.config.degrees {
        let favored = eod_median(table.single(sex, female, *d), sex);
        out.check(
            matches!((baseline, favored), (Some(b), Some(f)) if b * f < 0.0),
            format!("Favor-Female ({d}) EOD {favored:?} not opposite to baseline {baseline:?}"),
        );
        out.note(format!("Female ({d}) EOD {:+.4}", favored.unwrap_or(f64::NAN)));
    }
    out.check(elapsed < BASELINE_BUDGET, format!("took {elapsed:?}"));
    out.note(format!("baseline median EOD(sex) {:+.4}; {elapsed:.1?}", baseline.unwrap_or(f64::NAN)));
    out
}

struct Grids {
    tables: BTreeMap<&'static str, ResultTable>,
    missing: Vec<String>,
    elapsed: Duration,
}

fn run_grids() -> Grids {
    let mut tables = BTreeMap::new();
    let mut missing = Vec::new();
    let start = Instant::now();
    for name in DATASETS {
        if let Some(msg) = missing_data(name) {
            missing.push(msg);
            continue;
        }
        let t = Instant::now();
        let experiment = Experiment::prepare(config(name)).unwrap();
        tables.insert(name, run_grid(&experiment, None).unwrap());
        println!("  grid {name}: {:.1?}", t.elapsed());
    }
    Grids {
        tables,
        missing,
        elapsed: start.elapsed(),
    }
}

fn criterion_6(grids: &Grids) -> Outcome {
    let mut out = Outcome::new();
    for msg in &grids.missing {
        out.check(false, msg.clone());
    }
    for (name, table) in &grids.tables {
        let names: Vec<&str> = table.attributes.iter().map(|a| a.name.as_str()).collect();
        let clean = table.uninjected(Reweigh::FairBalanceClass);
        for (j, attr) in names.iter().enumerate() {
            let (e, o) = (eod_median(clean, j), aod_median(clean, j));
            out.check(
                matches!((e, o), (Some(e), Some(o)) if e.abs() < EPSILON && o.abs() < EPSILON),
                format!("{name} no injection, {attr}: EOD {e:?} AOD {o:?}"),
            );
        }
        for cell in &table.cells {
            let Some(inj) = cell.row.single() else { continue };
            if inj.degree != table.detection_degree || cell.row.strategy != Reweigh::FairBalanceClass {
                continue;
            }
            for (j, attr) in names.iter().enumerate() {
                let (e, o) = (eod_median(Some(cell), j), aod_median(Some(cell), j));
                let Some((e, o)) = e.zip(o) else {
                    out.check(false, format!("{name} {}: {attr} undefined", cell.row.label()));
                    continue;
                };
                if j == inj.attribute {
                    out.check(
                        e.abs().max(o.abs()) >= EPSILON,
                        format!("{name} {}: {attr} missed (EOD {e:+.4}, AOD {o:+.4})", cell.row.label()),
                    );
                } else {
                    out.check(
                        e.abs() < EPSILON && o.abs() < EPSILON,
                        format!("{name} {}: {attr} false positive (EOD {e:+.4}, AOD {o:+.4})", cell.row.label()),
                    );
                }
            }
        }
        out.note(format!("{name}: checked"));
    }
    out.check(grids.elapsed < GRID_BUDGET, format!("grids took {:?}", grids.elapsed));
    out.note(format!("grids ran in {:.1?}", grids.elapsed));
    out
}

fn criterion_7(grids: &Grids) -> Outcome {
    let mut out = Outcome::new();
    for msg in &grids.missing {
        out.check(false, msg.clone());
    }
    for (name, table) in &grids.tables {
        let d = table.detection_degree;
        for (j, attr) in table.attributes.iter().enumerate() {
            let m = |side: u8| {
                let cell = table.single(j, side, d);
                eod_median(cell, j).zip(aod_median(cell, j))
            };
            match (m(0), m(1)) {
                (Some((e0, o0)), Some((e1, o1))) => {
                    out.check(
                        e0 * e1 < 0.0 && o0 * o1 < 0.0,
                        format!("{name} {}: EOD {e0:+.4}/{e1:+.4}, AOD {o0:+.4}/{o1:+.4}", attr.name),
                    );
                    out.note(format!(
                        "{name} {}: favor {} EOD {e0:+.3} AOD {o0:+.3}; favor {} EOD {e1:+.3} AOD {o1:+.3}",
                        attr.name, attr.sides[0], attr.sides[1]
                    ));
                }
                _ => out.check(false, format!("{name} {}: missing degree-{d} rows", attr.name)),
            }
        }
    }
    match grids.tables.get("bank") {
        None => out.check(false, "bank: monotonicity not checked (no data)"),
        Some(table) => {
            for side in [0u8, 1] {
                // at table precision: 100x the median, rounded
                let series: Vec<i64> = [0.1, 0.2, 0.3, 0.4]
                    .iter()
                    .filter_map(|&d| eod_median(table.single(0, side, d), 0))
                    .map(|v| presentation(v).abs())
                    .collect();
                out.check(
                    series.len() == 4 && series.windows(2).all(|w| w[0] <= w[1]),
                    format!("bank favor side {side}: |EOD| series {series:?}"),
                );
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let dir = tempfile::tempdir().unwrap();
    let cfg = root().join("configs/heart.json");
    let run = |sub: &str, jobs: &[&str]| {
        let dest = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_fairlens"))
            .args(["experiment", "--config", cfg.to_str().unwrap(), "--out", dest.to_str().unwrap()])
            .args(jobs)
            .output()
            .unwrap();
        (status.status.success(), std::fs::read(dest.join("results.csv")).unwrap_or_default())
    };
    let (ok_a, a) = run("a", &[]);
    let (ok_b, b) = run("b", &[]);
    let (ok_c, c) = run("c", &["--jobs", "3"]);
    out.check(ok_a && ok_b && ok_c, "experiment command failed");
    out.check(!a.is_empty() && a == b, "repeated runs differ");
    out.check(a == c, "thread count changed results.csv");
    out.note(format!("results.csv {} bytes, identical across 3 runs", a.len()));
    out
}

fn criterion_9() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for pair in 0..1000 {
        let n = rng.random_range(1..=300);
        let k = rng.random_range(1..=3);
        let p_label = rng.random_range(0.05..0.95);
        let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(p_label))).collect();
        let attrs: Vec<Vec<u8>> = (0..k).map(|_| (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect()).collect();
        let t = synthetic_table(y.clone(), &attrs);
        let percent: usize = rng.random_range(0..100);
        let spec = InjectionSpec {
            attribute: rng.random_range(0..k),
            favored_side: rng.random_range(0..2),
            degree: percent as f64 / 100.0,
            seed: rng.random(),
        };
        let (after, log) = inject_bias(&t, &spec).unwrap();
        let a = &attrs[spec.attribute];
        let s = spec.favored_side;
        let promote_cell = (0..n).filter(|&i| a[i] == s && y[i] == 0).count();
        let demote_cell = (0..n).filter(|&i| a[i] != s && y[i] == 1).count();
        // round half up of percent * cell / 100 in integers
        let expected = |cell: usize| (2 * percent * cell + 100) / 200;
        out.check(log.promoted.len() == expected(promote_cell), format!("pair {pair}: promoted count"));
        out.check(log.demoted.len() == expected(demote_cell), format!("pair {pair}: demoted count"));
        for i in 0..n {
            let promoted = log.promoted.contains(&i);
            let demoted = log.demoted.contains(&i);
            let ok = if promoted {
                a[i] == s && y[i] == 0 && after.labels()[i] == 1
            } else if demoted {
                a[i] != s && y[i] == 1 && after.labels()[i] == 0
            } else {
                after.labels()[i] == y[i]
            };
            out.check(ok, format!("pair {pair}: row {i} touched outside its cell"));
        }
    }
    out.note("1000 random (table, spec) pairs");
    out
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} [{name}]: {status}");
        for d in o.details.iter().take(25) {
            println!("    {d}");
        }
        if o.details.len() > 25 {
            println!("    ... {} more", o.details.len() - 25);
        }
        results.push((n, name, o));
    };
    report(1, "metric oracle equivalence", criterion_1());
    report(2, "FairBalanceClass invariants", criterion_2());
    report(3, "perfect-model fairness", criterion_3());
    report(4, "learner correctness", criterion_4());
    report(5, "Adult baseline unfairness", criterion_5());
    let grids = run_grids();
    report(6, "detection on four datasets", criterion_6(&grids));
    report(7, "direction and trend", criterion_7(&grids));
    report(8, "determinism", criterion_8());
    report(9, "injection exactness", criterion_9());

    println!();
    for (n, name, o) in &results {
        println!("criterion {n} {:<30} {}", name, if o.pass { "PASS" } else { "FAIL" });
    }
    if results.iter().all(|(_, _, o)| o.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use dimwit::classical::{
    classical_probability_matrix, exhaustive_binary_max, verify_table2, ClassicalModel, CLASSICAL_MAXIMA,
};
use dimwit::detect::{
    first_order_witness, null_variance, random_state, second_order_witness, simulate_witness_trials,
    PerturbedScenario,
};
use dimwit::optimizer::{optimize, AngleParametrization, AnnealSchedule, RefineOptions};
use dimwit::rng::stream;
use dimwit::{
    build_probability_matrix, gram_schmidt, minimal_counts, registry, witness, Effect, Field, Model,
    Preparation, ProbabilityMatrix, Scenario, StateVector,
};
use nalgebra::{Complex, DMatrix};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dimwit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimwit"))
        .args(args)
        .current_dir(dir)
        .env_remove("DIMWIT_SEED")
        .output()
        .expect("binary runs")
}

fn random_effect<R: Rng>(g: &mut R, d: usize, field: Field, rank: usize) -> Effect {
    let vs: Vec<StateVector> = (0..rank).map(|_| random_state(g, d, field)).collect();
    Effect::from_columns(d, gram_schmidt(&vs).unwrap()).unwrap()
}

fn random_preparation<R: Rng>(g: &mut R, d: usize, field: Field) -> Preparation {
    let a = random_state(g, d, field);
    if g.random_range(0..4) > 0 {
        return Preparation::from_pure(a);
    }
    let b = random_state(g, d, field);
    let lam: f64 = g.random();
    Preparation::from_matrix(a.projector() * Complex::from(lam) + b.projector() * Complex::from(1.0 - lam)).unwrap()
}

fn random_scenario<R: Rng>(g: &mut R, d: usize, field: Field, k: usize) -> Scenario {
    let preps = (0..=k).map(|_| random_preparation(g, d, field)).collect();
    let effs = (0..k)
        .map(|_| {
            let rank = g.random_range(1..=d.max(2) - 1);
            random_effect(g, d, field, rank)
        })
        .collect();
    Scenario::new(d, field, preps, effs).unwrap()
}

fn random_pure_scenario<R: Rng>(g: &mut R, d: usize, field: Field, k: usize) -> Scenario {
    let preps = (0..=k).map(|_| Preparation::from_pure(random_state(g, d, field))).collect();
    let effs = (0..k).map(|_| random_effect(g, d, field, 1)).collect();
    Scenario::new(d, field, preps, effs).unwrap()
}

fn pm(s: &Scenario) -> ProbabilityMatrix {
    build_probability_matrix(s).unwrap()
}

fn registry_pm(name: &str) -> ProbabilityMatrix {
    pm(&registry::build(name).unwrap())
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let o = dimwit(&["registry", "verify", "--all", "--json"], dir.path());
    let elapsed = t.elapsed();
    if o.status.code() != Some(0) {
        return Err(format!("exit status {:?}", o.status.code()));
    }
    let results: serde_json::Value = serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())?;
    let results = results.as_array().ok_or("verify output is not a list")?;
    let mut bad = Vec::new();
    for r in results {
        let name = r["name"].as_str().unwrap_or_default();
        let e = registry::entry(name).map_err(|e| e.to_string())?;
        let tol = if e.numeric_only { 1e-6 } else { 1e-9 };
        let err = (r["computed"].as_f64().unwrap() - e.expected()).abs();
        if !(r["pass"].as_bool() == Some(true) && err < tol && r["tolerance"].as_f64() == Some(tol)) {
            bad.push(name.to_string());
        }
    }
    let n = registry::entries().len();
    check(
        bad.is_empty() && results.len() == n && elapsed < Duration::from_secs(10),
        format!("{} of {n} entries in {:.2?}, failing {bad:?}", results.len(), elapsed),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut exhaustive = Vec::new();
    for k in 1..=4 {
        exhaustive.push(exhaustive_binary_max(k).map_err(|e| e.to_string())?.0);
    }
    let mut certified = Vec::new();
    for k in 1..=9 {
        let (got, want) = verify_table2(k).map_err(|e| e.to_string())?;
        if want != CLASSICAL_MAXIMA[k - 1] {
            return Err(format!("k = {k}: stored maximum {want}"));
        }
        certified.push(got);
    }
    let elapsed = t.elapsed();
    check(
        exhaustive == [1, 1, 2, 3] && certified == CLASSICAL_MAXIMA && elapsed < Duration::from_secs(60),
        format!("exhaustive {exhaustive:?}, certificates {certified:?}, {elapsed:.2?}"),
    )
}

fn classical_zero(seed: u64, d: usize, k: usize) -> f64 {
    let mut g = stream(seed, &[d as u64, k as u64]);
    let mut r = DMatrix::from_fn(d, k + 1, |_, _| g.random::<f64>());
    for mut col in r.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    let q = DMatrix::from_fn(k, d, |_, _| g.random::<f64>());
    witness(&classical_probability_matrix(&ClassicalModel::new(r, q).unwrap()).unwrap()).abs()
}

fn criterion_3() -> Outcome {
    const TRIALS: u64 = 1000;
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for d in 2..=3 {
        for t in 0..TRIALS {
            worst = worst.max(classical_zero(t, d, d));
        }
        cells += 1;
    }
    // quantum threshold cells plus every zero cell of the table with d <= 3
    let mut quantum = Vec::new();
    for d in 2..=3 {
        for (field, model) in [(Field::Real, Model::Real), (Field::Complex, Model::Complex)] {
            let kmin = minimal_counts(d, model).0;
            quantum.push((d, field, kmin));
            for k in kmin + 1..=9 {
                quantum.push((d, field, k));
            }
        }
    }
    for &(d, field, k) in &quantum {
        if k <= 9 {
            let tv = registry::table_value(k, d, field).ok_or(format!("no table cell k={k} d={d}"))?;
            if tv.rounded != 0.0 {
                return Err(format!("table lists {} for k={k} d={d} {field}", tv.rounded));
            }
        }
        let mut g = stream(3, &[d as u64, k as u64, field as u64]);
        for _ in 0..TRIALS {
            worst = worst.max(witness(&pm(&random_scenario(&mut g, d, field, k))).abs());
        }
        cells += 1;
    }
    check(worst < TOL, format!("{cells} cells x {TRIALS} scenarios, max |W_k| = {worst:.2e}"))
}

struct Target {
    label: &'static str,
    dim: usize,
    k: usize,
    field: Field,
    rank: usize,
    restarts: usize,
    expected: f64,
    tol: f64,
}

fn criterion_4() -> Outcome {
    let e = |name: &str| registry::entry(name).unwrap().expected();
    let targets = [
        Target { label: "d2k2", dim: 2, k: 2, field: Field::Real, rank: 1, restarts: 8, expected: 0.6495, tol: 1e-3 },
        Target { label: "d2k3c", dim: 2, k: 3, field: Field::Complex, rank: 1, restarts: 8, expected: 0.3849, tol: 1e-3 },
        Target { label: "d4k4c r1", dim: 4, k: 4, field: Field::Complex, rank: 1, restarts: 8, expected: 0.9364, tol: 1e-3 },
        Target { label: "d4k4c r2", dim: 4, k: 4, field: Field::Complex, rank: 2, restarts: 8, expected: 1.8729, tol: 1e-3 },
        Target { label: "d3k4r", dim: 3, k: 4, field: Field::Real, rank: 1, restarts: 32, expected: e("real_qutrit_k4"), tol: 1e-2 },
        Target { label: "d3k4c", dim: 3, k: 4, field: Field::Complex, rank: 1, restarts: 32, expected: e("complex_qutrit_k4"), tol: 1e-2 },
        Target { label: "d3k5r", dim: 3, k: 5, field: Field::Real, rank: 1, restarts: 32, expected: e("real_qutrit_icosahedron_k5"), tol: 1e-2 },
        Target { label: "d3k5c", dim: 3, k: 5, field: Field::Complex, rank: 1, restarts: 32, expected: e("complex_qutrit_k5"), tol: 1e-2 },
        Target { label: "d5k5c r2", dim: 5, k: 5, field: Field::Complex, rank: 2, restarts: 32, expected: e("ququint_k5_rank2"), tol: 1e-2 },
    ];
    let schedule = AnnealSchedule::default();
    let refine = RefineOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for t in &targets {
        let par = AngleParametrization::uniform(t.dim, t.field, t.k, t.rank).map_err(|e| e.to_string())?;
        let run = optimize(&par, &schedule, t.restarts, Some(&refine)).map_err(|e| e.to_string())?;
        let v = run.best.value();
        let hit = (v - t.expected).abs() < t.tol;
        ok &= hit;
        parts.push(format!("{} {v:.6}{}", t.label, if hit { "" } else { " (miss)" }));
    }
    check(ok, parts.join(", "))
}

fn criterion_5() -> Outcome {
    let n = 10_000u64;
    let sat = null_variance(&registry_pm("variance_saturating_k4"), n).map_err(|e| e.to_string())?;
    let axes = null_variance(&registry_pm("qubit_axes_test_k4"), n).map_err(|e| e.to_string())?;
    let r1 = (sat * 6.0 * n as f64 - 1.0).abs();
    let r2 = (axes * 16.0 * n as f64 - 1.0).abs();
    let mut g = stream(5, &[]);
    let base = pm(&random_pure_scenario(&mut g, 2, Field::Complex, 4));
    let ws = simulate_witness_trials(&base, n, 10_000, 77).map_err(|e| e.to_string())?;
    let var = ws.iter().map(|w| w * w).sum::<f64>() / ws.len() as f64;
    let want = null_variance(&base, n).map_err(|e| e.to_string())?;
    let mc = (var / want - 1.0).abs();
    check(
        r1 < 1e-12 && r2 < 1e-12 && mc < 0.05,
        format!("closed forms rel err {r1:.1e}, {r2:.1e}; Monte Carlo ratio off by {:.2}%", 100.0 * mc),
    )
}

fn random_dp<R: Rng>(g: &mut R, k: usize, eps: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k + 1, k + 1, |i, _| if i < k { eps * g.random_range(-1.0..1.0) } else { 0.0 })
}

fn error_slope(second: bool, instances: usize) -> f64 {
    let k = if second { 5 } else { 4 };
    let eps = [1e-2, 1e-3, 1e-4];
    let mut g = stream(21, &[k as u64]);
    let mut errs = [0.0; 3];
    let mut done = 0;
    while done < instances {
        let base = pm(&random_pure_scenario(&mut g, 2, Field::Complex, k));
        let dir = random_dp(&mut g, k, 1.0);
        let cases: Result<Vec<_>, _> = eps.iter().map(|&e| PerturbedScenario::new(base.clone(), &dir * e)).collect();
        let Ok(cases) = cases else { continue };
        for (slot, ps) in errs.iter_mut().zip(&cases) {
            let approx = if second { second_order_witness(ps) } else { first_order_witness(ps) };
            *slot += (ps.exact_witness() - approx).abs();
        }
        done += 1;
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.log10()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| (e / instances as f64).log10()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn criterion_6() -> Outcome {
    let s1 = error_slope(false, 100);
    let s2 = error_slope(true, 100);
    check(
        (s1 - 2.0).abs() < 0.1 && (s2 - 3.0).abs() < 0.15,
        format!("first-order slope {s1:.3}, second-order slope {s2:.3}"),
    )
}

fn criterion_7() -> Outcome {
    let p0 = registry_pm("qubit_axes_test_k4");
    let mut g = stream(13, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dp = DMatrix::from_fn(5, 5, |i, j| {
            if i == 4 {
                return 0.0;
            }
            let x: f64 = g.random_range(-1e-3..1e-3);
            match p0.get(i, j) {
                p if p < 1e-9 => x.abs(),
                p if p > 1.0 - 1e-9 => -x.abs(),
                _ => x,
            }
        });
        let ps = PerturbedScenario::new(p0.clone(), dp.clone()).map_err(|e| e.to_string())?;
        let sum: f64 = (0..2).map(|i| dp[(i, 0)] + dp[(i, 1)] - dp[(i, 3)] - dp[(i, 4)]).sum();
        worst = worst.max((first_order_witness(&ps) - sum / 4.0).abs());
    }
    check(worst < 1e-12, format!("100 perturbations, max deviation {worst:.1e}"))
}

fn criterion_8() -> Outcome {
    let s = registry::build("d5_k7_heptagonal").map_err(|e| e.to_string())?;
    let checks = registry::heptagonal_checks(&s).map_err(|e| e.to_string())?;
    let w = witness(&pm(&s)).abs();
    let want = registry::entry("d5_k7_heptagonal").unwrap().expected();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    check(
        failed.is_empty() && !checks.is_empty() && (w - want).abs() < 1e-9,
        format!("{} structural checks, failing {failed:?}, |W_7| = {w:.12}", checks.len()),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let build = dimwit(&["registry", "build", "qubit_axes_test_k4", "--out", "axes.json"], p);
    if !build.status.success() {
        return Err("registry build failed".into());
    }
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let opt = format!("opt{jobs}.json");
        let runs = format!("runs{jobs}.csv");
        let o = dimwit(
            &["--jobs", jobs, "optimize", "--dim", "3", "--k", "4", "--field", "real", "--restarts", "4", "--seed", "17", "--out", &opt],
            p,
        );
        let s = dimwit(
            &["--jobs", jobs, "simulate", "--scenario", "axes.json", "--shots", "100000", "--trials", "200", "--seed", "17", "--out", &runs],
            p,
        );
        if !o.status.success() || !s.status.success() {
            return Err(format!("run with --jobs {jobs} failed"));
        }
        let rec = format!("runs{jobs}.json");
        for f in [&opt, &rec] {
            let r = dimwit(&["--jobs", jobs, "replay", f], p);
            if r.status.code() != Some(0) {
                return Err(format!("replay of {f} exited {:?}: {}", r.status.code(), String::from_utf8_lossy(&r.stderr)));
            }
        }
        let read = |f: &str| std::fs::read(p.join(f)).unwrap();
        outputs.push((read(&opt), read(&runs), read(&rec)));
    }
    let same_opt = outputs[0].0 == outputs[1].0;
    let same_runs = outputs[0].1 == outputs[1].1;
    let same_sim = outputs[0].2 == outputs[1].2;
    check(
        same_opt && same_runs && same_sim,
        format!("replays exit 0; identical across --jobs 1/4: optimize {same_opt}, runs.csv {same_runs}, simulate {same_sim}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("registry verification", criterion_1),
        ("classical maxima", criterion_2),
        ("vanishing at threshold", criterion_3),
        ("optimizer targets", criterion_4),
        ("null variances", criterion_5),
        ("expansion error slopes", criterion_6),
        ("axes first-order identity", criterion_7),
        ("heptagonal structure", criterion_8),
        ("replay and thread independence", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS: {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL: {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! The ten acceptance gates of the project, one test per criterion.
//! Each test prints exactly one `criterion NN: PASS/FAIL` line (visible
//! under `--nocapture`); tolerances are pinned here on purpose and must
//! not be loosened to turn a red criterion green.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use thermoform::random;
use thermoform::{
    bowen_root, constrained_grid_search, equilibrium, gibbs_ratio_check, mcmullen_dimension,
    mcmullen_system, measure_dimension, solve_beta, solve_full_dimension, t_extremes, t_of_nu,
    CarpetRow, CarpetSystem, Potential, ShiftSpace, Tolerances,
};

fn verdict(number: u32, description: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("criterion {number:02}: PASS - {description}");
    } else {
        println!("criterion {number:02}: FAIL - {description}");
        panic!(
            "criterion {number:02} failed with {} problem(s):\n{}",
            failures.len(),
            failures.join("\n")
        );
    }
}

fn full2() -> ShiftSpace {
    ShiftSpace::full(2).unwrap()
}

fn golden() -> ShiftSpace {
    ShiftSpace::new(vec![vec![1, 1], vec![1, 0]]).unwrap()
}

fn depth1(space: &ShiftSpace, values: &[f64]) -> Potential {
    Potential::depth1(space, values).unwrap()
}

fn simplex_entropy(w: &[f64]) -> f64 {
    w.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// `(h_mu - h_nu) / int phi dmu` for the product of `nu` and per-row
/// fiber weights; the numerator reduces to the fiber entropy term.
fn fiber_ratio(system: &CarpetSystem, nu_stationary: &[f64], weights: &[Vec<f64>]) -> f64 {
    let mut fiber_entropy = 0.0;
    let mut integral_phi = 0.0;
    for (row, (w, &p)) in system.rows().iter().zip(weights.iter().zip(nu_stationary)) {
        fiber_entropy += p * simplex_entropy(w);
        integral_phi += p * row.phi.iter().zip(w).map(|(&f, &wj)| wj * f).sum::<f64>();
    }
    fiber_entropy / integral_phi
}

#[test]
fn criterion_01_mcmullen_agreement() {
    let description = "solver matches the closed-form grid dimension on 12 random instances";
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut failures = Vec::new();
    let grids: [(u64, u64); 4] = [(3, 2), (4, 2), (4, 3), (5, 2)];
    for &(l, m) in &grids {
        for _ in 0..3 {
            // Nonempty pattern with at least two rectangles; a single unit
            // cell is a point and is rejected by construction.
            let counts: Vec<u64> = loop {
                let c: Vec<u64> = (0..m).map(|_| rng.random_range(0..=l)).collect();
                if c.iter().sum::<u64>() >= 2 {
                    break c;
                }
            };
            let label = format!("l={l} m={m} counts={counts:?}");
            let oracle = mcmullen_dimension::<f64>(l, m, &counts).unwrap();
            let system = mcmullen_system::<f64>(l, m, &counts).unwrap();
            let start = Instant::now();
            match solve_full_dimension(&system, &tol) {
                Ok(report) => {
                    let gap = (report.dimension - oracle.value).abs();
                    if gap > 1e-6 {
                        failures.push(format!("{label}: |solver - closed form| = {gap:e}"));
                    }
                }
                Err(e) => failures.push(format!("{label}: solver failed: {e}")),
            }
            if start.elapsed() >= Duration::from_secs(5) {
                failures.push(format!("{label}: took {:?}", start.elapsed()));
            }
        }
    }
    verdict(1, description, failures);
}

#[test]
fn criterion_02_level_set_closed_form() {
    let description = "level-set pressure and beta match the binary closed forms at 1e-9";
    let tol = Tolerances::default();
    let space = full2();
    let phi = depth1(&space, &[0.0, 0.0]);
    let psi = depth1(&space, &[0.0, 1.0]);
    let mut failures = Vec::new();
    for k in 1..=9 {
        let alpha = k as f64 / 10.0;
        let sol = solve_beta(&space, &phi, &psi, alpha, &tol).unwrap();
        let entropy = -(alpha * alpha.ln() + (1.0 - alpha) * (1.0 - alpha).ln());
        let beta = (alpha / (1.0 - alpha)).ln();
        if (sol.pressure - entropy).abs() >= 1e-9 {
            failures.push(format!(
                "alpha={alpha}: pressure off by {:e}",
                (sol.pressure - entropy).abs()
            ));
        }
        if (sol.beta - beta).abs() >= 1e-9 {
            failures.push(format!(
                "alpha={alpha}: beta off by {:e}",
                (sol.beta - beta).abs()
            ));
        }
    }
    verdict(2, description, failures);
}

#[test]
fn criterion_03_grid_search_brackets_the_solver() {
    let description = "grid search stays a lower bound within 5e-3 of the level-set solver";
    let tol = Tolerances::default();
    let cases: [(ShiftSpace, Vec<f64>); 2] = [
        (full2(), vec![0.2, 0.35, 0.5, 0.65, 0.8]),
        (golden(), vec![0.15, 0.25, 0.35]),
    ];
    let mut failures = Vec::new();
    for (space, alphas) in &cases {
        let n = space.symbol_count();
        let phi = depth1(space, &vec![0.0; n]);
        let psi_values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let psi = depth1(space, &psi_values);
        for &alpha in alphas {
            let label = format!("{n}-symbol space, alpha={alpha}");
            let grid = constrained_grid_search(space, &phi, &psi, alpha, 200, &tol).unwrap();
            let sol = solve_beta(space, &phi, &psi, alpha, &tol).unwrap();
            if grid.value > sol.pressure + 1e-9 {
                failures.push(format!(
                    "{label}: grid overestimates by {:e}",
                    grid.value - sol.pressure
                ));
            }
            if sol.pressure - grid.value >= 5e-3 {
                failures.push(format!(
                    "{label}: gap {:e} at resolution 200",
                    sol.pressure - grid.value
                ));
            }
        }
    }
    verdict(3, description, failures);
}

#[test]
fn criterion_04_variational_identity() {
    let description = "h + int phi = P within 1e-9 on 1000 random systems";
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut failures = Vec::new();
    for round in 0..1000 {
        let space = random::random_mixing_shift(&mut rng, 5);
        let values: Vec<f64> = random::random_values(&mut rng, space.symbol_count(), 2.0);
        let phi = depth1(&space, &values);
        match equilibrium(&space, &phi, &tol) {
            Ok(eq) => {
                let defect = (eq.entropy + eq.integral_phi - eq.pressure).abs();
                if defect >= 1e-9 {
                    failures.push(format!("round {round}: defect {defect:e}"));
                }
            }
            Err(e) => failures.push(format!("round {round}: equilibrium failed: {e}")),
        }
    }
    verdict(4, description, failures);
}

#[test]
fn criterion_05_gibbs_ratio_stability() {
    let description = "cylinder ratios respect the eigenvector bounds and stabilize per length";
    let tol = Tolerances::default();
    let space = golden();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut failures = Vec::new();
    for draw in 0..5 {
        let values: Vec<f64> = random::random_values(&mut rng, 2, 1.0);
        let phi = depth1(&space, &values);
        let eq = equilibrium(&space, &phi, &tol).unwrap();
        let check = gibbs_ratio_check(&space, &phi, &eq, 12, &tol).unwrap();
        for (i, &(lo, hi)) in check.per_length.iter().enumerate() {
            if lo < eq.gibbs_lower - 1e-9 || hi > eq.gibbs_upper + 1e-9 {
                failures.push(format!(
                    "draw {draw}, length {}: [{lo}, {hi}] escapes [{}, {}]",
                    i + 1,
                    eq.gibbs_lower,
                    eq.gibbs_upper
                ));
            }
        }
        // Ratios depend only on the (first, last) symbol pair; every pair
        // is realized from length 3 on, so the extremes freeze there.
        for i in 2..11 {
            let (lo_a, hi_a) = check.per_length[i];
            let (lo_b, hi_b) = check.per_length[i + 1];
            let drift = (lo_a - lo_b).abs().max((hi_a - hi_b).abs());
            if drift >= 1e-9 {
                failures.push(format!(
                    "draw {draw}: drift {drift:e} between lengths {} and {}",
                    i + 1,
                    i + 2
                ));
            }
        }
    }
    verdict(5, description, failures);
}

#[test]
fn criterion_06_fiber_entropy_bound() {
    let description =
        "500 product measures obey the fiber-entropy bound, tight at canonical weights";
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut failures = Vec::new();
    for carpet_idx in 0..5 {
        let system: CarpetSystem = random::random_carpet(&mut rng, 4, 3);
        for round in 0..100 {
            let label = format!("carpet {carpet_idx}, measure {round}");
            let nu = random::random_markov(&mut rng, system.base(), &tol);
            let weights = random::random_fiber_weights(&mut rng, &system);
            let t = match t_of_nu(&system, &nu, &tol) {
                Ok(t) => t,
                Err(e) => {
                    failures.push(format!("{label}: t(nu) failed: {e}"));
                    continue;
                }
            };
            let ratio = fiber_ratio(&system, &nu.stationary, &weights);
            if ratio > t + 1e-9 {
                failures.push(format!("{label}: ratio exceeds t by {:e}", ratio - t));
            }
            let canonical: Vec<Vec<f64>> = system
                .rows()
                .iter()
                .map(|row| {
                    let raw: Vec<f64> = row.phi.iter().map(|&f| (-t * f).exp()).collect();
                    let total: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / total).collect()
                })
                .collect();
            let tight = fiber_ratio(&system, &nu.stationary, &canonical);
            if (tight - t).abs() > 1e-8 {
                failures.push(format!(
                    "{label}: canonical weights miss equality by {:e}",
                    (tight - t).abs()
                ));
            }
        }
    }
    verdict(6, description, failures);
}

#[test]
fn criterion_07_dimension_is_the_supremum() {
    let description = "random base measures never beat D, and the reported maximizer attains it";
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut systems: Vec<(String, CarpetSystem)> = vec![
        (
            "grid 3x2 (2,1)".into(),
            mcmullen_system::<f64>(3, 2, &[2, 1]).unwrap(),
        ),
        (
            "grid 5x2 (3,2)".into(),
            mcmullen_system::<f64>(5, 2, &[3, 2]).unwrap(),
        ),
    ];
    systems.push((
        "random carpet".into(),
        random::random_carpet(&mut rng, 4, 3),
    ));
    let mut failures = Vec::new();
    for (label, system) in &systems {
        let report = match solve_full_dimension(system, &tol) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{label}: solver failed: {e}"));
                continue;
            }
        };
        let attained = measure_dimension(system, &report.nu_star, &tol).unwrap();
        if (attained - report.dimension).abs() > 1e-8 {
            failures.push(format!(
                "{label}: nu_star attains {attained}, reported {}",
                report.dimension
            ));
        }
        for round in 0..200 {
            let nu = random::random_markov(&mut rng, system.base(), &tol);
            let d = measure_dimension(system, &nu, &tol).unwrap();
            if d > report.dimension + 1e-8 {
                failures.push(format!(
                    "{label}, measure {round}: dimension {d} beats D = {} by {:e}",
                    report.dimension,
                    d - report.dimension
                ));
            }
        }
    }
    verdict(7, description, failures);
}

#[test]
fn criterion_08_endpoint_branches() {
    let description =
        "degenerate carpets take the Bowen branch; boundary levels exit 2 with cycles";
    let tol = Tolerances::default();
    let ln2 = std::f64::consts::LN_2;
    let ln3 = 3f64.ln();
    let mut failures = Vec::new();

    // Identical column data across rows collapses the t-family to a point.
    let base = full2();
    let make = |delta: f64| {
        CarpetSystem::new(
            base.clone(),
            vec![
                CarpetRow {
                    row: 0,
                    columns: vec![0, 1],
                    phi: vec![ln3, ln3],
                },
                CarpetRow {
                    row: 1,
                    columns: vec![0, 1],
                    phi: vec![ln3 + delta, ln3 - delta],
                },
            ],
            vec![ln2, ln2],
        )
        .unwrap()
    };
    let degenerate = solve_full_dimension(&make(0.0), &tol).unwrap();
    if !degenerate.diagnostics.degenerate {
        failures.push("t-collapsed system was not flagged degenerate".into());
    }
    let psi_pot = depth1(&base, &[ln2, ln2]);
    let bowen = bowen_root(&base, &psi_pot, &tol).unwrap();
    let (_, t_upper) = t_extremes(&make(0.0), &tol).unwrap();
    if (degenerate.dimension - (bowen + t_upper)).abs() > 1e-12 {
        failures.push(format!(
            "degenerate value {} differs from Bowen root + t = {}",
            degenerate.dimension,
            bowen + t_upper
        ));
    }
    // The interior solver on a slightly split t-family must approach the
    // same value (the symmetric split cancels the first-order term).
    let nearby = solve_full_dimension(&make(1e-4), &tol).unwrap();
    if nearby.diagnostics.degenerate {
        failures.push("perturbed system still took the degenerate branch".into());
    }
    if (nearby.dimension - degenerate.dimension).abs() > 1e-8 {
        failures.push(format!(
            "interior limit off by {:e}",
            (nearby.dimension - degenerate.dimension).abs()
        ));
    }

    // Rejection path through the binary: a boundary level exits 2 and the
    // report carries the witness cycles.
    let out = run_binary(&[
        "levelset",
        fixture("levelset-rejected.json").to_str().unwrap(),
    ]);
    if out.status.code() != Some(2) {
        failures.push(format!(
            "boundary level exited {:?}, want 2",
            out.status.code()
        ));
    }
    match serde_json::from_slice::<Value>(&out.stdout) {
        Ok(v) => {
            let range = &v["error"]["birkhoff_range"];
            if range["lower_cycle"].as_array().is_none_or(Vec::is_empty)
                || range["upper_cycle"].as_array().is_none_or(Vec::is_empty)
            {
                failures.push("rejection report lacks witness cycles".into());
            }
        }
        Err(e) => failures.push(format!("rejection stdout is not JSON: {e}")),
    }
    verdict(8, description, failures);
}

#[test]
fn criterion_09_birkhoff_sampling() {
    let description = "sampled trajectories of the level-set maximizer concentrate at alpha";
    let tol = Tolerances::default();
    let space = full2();
    let phi = depth1(&space, &[0.0, 0.0]);
    let psi = depth1(&space, &[0.0, 1.0]);
    let sol = solve_beta(&space, &phi, &psi, 0.75, &tol).unwrap();
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let path = sol.maximizer.sample_path(100_000, seed);
        let ones = path.iter().filter(|&&s| s == 1).count();
        let mean = ones as f64 / path.len() as f64;
        let miss = (mean - 0.75).abs();
        worst = worst.max(miss);
        if miss < 0.005 {
            hits += 1;
        }
    }
    let failures = if hits >= 99 {
        Vec::new()
    } else {
        vec![format!(
            "only {hits}/100 runs within 0.005 (worst miss {worst})"
        )]
    };
    verdict(9, description, failures);
}

#[test]
fn criterion_10_byte_identical_reports() {
    let description = "carpet-dim reports are byte-identical across runs and thread counts";
    let input = fixture("carpet-mcmullen.json");
    let input = input.to_str().unwrap();
    let mut reports: Vec<Vec<u8>> = Vec::new();
    let mut traces: Vec<Vec<u8>> = Vec::new();
    let mut failures = Vec::new();
    for (i, threads) in ["1", "1", "4", "4"].iter().enumerate() {
        let report_path = scratch(&format!("det-report-{i}.json"));
        let csv_path = scratch(&format!("det-trace-{i}.csv"));
        let out = run_binary(&[
            "carpet-dim",
            input,
            "--threads",
            threads,
            "--output",
            report_path.to_str().unwrap(),
            "--csv",
            csv_path.to_str().unwrap(),
        ]);
        if !out.status.success() {
            failures.push(format!(
                "run {i} (threads {threads}) exited {:?}",
                out.status.code()
            ));
            continue;
        }
        reports.push(std::fs::read(&report_path).unwrap());
        traces.push(std::fs::read(&csv_path).unwrap());
    }
    for (i, r) in reports.iter().enumerate().skip(1) {
        if r != &reports[0] {
            failures.push(format!("report {i} differs from report 0"));
        }
    }
    for (i, t) in traces.iter().enumerate().skip(1) {
        if t != &traces[0] {
            failures.push(format!("trace {i} differs from trace 0"));
        }
    }
    if reports.first().is_none_or(Vec::is_empty) {
        failures.push("no report bytes captured".into());
    }
    verdict(10, description, failures);
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../inputs")
        .join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("thermoform-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir.join(name)
}

fn run_binary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoform"))
        .args(args)
        .output()
        .expect("binary starts")
}

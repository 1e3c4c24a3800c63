//! Cross-module property sweeps: oracle agreement, the fiber-entropy
//! bound, scaling and monotonicity of the carpet dimension, spectrum
//! shape, and bilinearity of the covariance form.  All randomness is
//! seeded, so failures reproduce exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermoform::carpet::{CarpetRow, CarpetSystem};
use thermoform::{
    equilibrium, integrate, levelset_spectrum, mcmullen_dimension, mcmullen_system, pressure,
    q_form, random, solve_full_dimension, t_of_nu, Potential, ShiftSpace, Tolerances,
};

#[test]
fn mcmullen_solver_and_search_agree() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grids: [(u64, u64); 4] = [(3, 2), (4, 2), (4, 3), (5, 2)];
    for round in 0..4 {
        let (l, m) = grids[round % grids.len()];
        let rows: Vec<u64> = loop {
            let candidate: Vec<u64> = (0..m).map(|_| rng.random_range(0..=l)).collect();
            if candidate.iter().sum::<u64>() >= 2 {
                break candidate;
            }
        };
        let closed = mcmullen_dimension::<f64>(l, m, &rows).unwrap().value;
        let sys = mcmullen_system::<f64>(l, m, &rows).unwrap();
        let solved = solve_full_dimension(&sys, &tol).unwrap().dimension;
        assert!(
            (closed - solved).abs() < 1e-6,
            "l={l} m={m} rows={rows:?}: closed {closed} vs solver {solved}"
        );
        let searched = thermoform::bernoulli_search(&sys, 0).unwrap().value;
        assert!(
            (closed - searched).abs() < 1e-6,
            "l={l} m={m} rows={rows:?}: closed {closed} vs search {searched}"
        );
    }
}

#[test]
fn fiber_entropy_bound_on_random_carpets() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..8 {
        let sys: CarpetSystem<f64> = random::random_carpet(&mut rng, 4, 3);
        for _ in 0..12 {
            let nu = random::random_markov(&mut rng, sys.base(), &tol);
            let weights = random::random_fiber_weights(&mut rng, &sys);
            let ly = thermoform::ly_dimension(&sys, &nu, &weights, &tol).unwrap();
            let md = thermoform::measure_dimension(&sys, &nu, &tol).unwrap();
            assert!(ly <= md + 1e-9, "product bound {ly} exceeds {md}");

            // Equality at the canonical weights w proportional to
            // exp(-t(nu) phi).
            let t = t_of_nu(&sys, &nu, &tol).unwrap();
            let canonical: Vec<Vec<f64>> = sys
                .rows()
                .iter()
                .map(|row| {
                    let raw: Vec<f64> = row.phi.iter().map(|&v| (-t * v).exp()).collect();
                    let sum: f64 = raw.iter().sum();
                    raw.into_iter().map(|w| w / sum).collect()
                })
                .collect();
            let ly_star = thermoform::ly_dimension(&sys, &nu, &canonical, &tol).unwrap();
            assert!(
                (ly_star - md).abs() < 1e-8,
                "canonical weights miss equality: {ly_star} vs {md}"
            );
        }
    }
}

#[test]
fn joint_scaling_invariance_on_random_carpets() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..3 {
        let sys: CarpetSystem<f64> = random::random_carpet(&mut rng, 3, 3);
        let d1 = solve_full_dimension(&sys, &tol).unwrap().dimension;
        for &c in &[0.5, 2.0] {
            let rows = sys
                .rows()
                .iter()
                .map(|r| CarpetRow {
                    row: r.row,
                    columns: r.columns.clone(),
                    phi: r.phi.iter().map(|&v| c * v).collect(),
                })
                .collect();
            let psi = sys.psi().iter().map(|&v| c * v).collect();
            let scaled = CarpetSystem::new(sys.base().clone(), rows, psi).unwrap();
            let dc = solve_full_dimension(&scaled, &tol).unwrap().dimension;
            assert!(
                (c * dc - d1).abs() < 5e-7,
                "scaling broke: c={c}, c*D={} vs {}",
                c * dc,
                d1
            );
        }
    }
}

#[test]
fn adding_a_column_cannot_shrink_the_dimension() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..4 {
        let sys: CarpetSystem<f64> = random::random_carpet(&mut rng, 3, 2);
        let d = solve_full_dimension(&sys, &tol).unwrap().dimension;
        // Duplicate the last column of row 0 as a new column.
        let mut rows: Vec<CarpetRow<f64>> = sys.rows().to_vec();
        let extra_phi = *rows[0].phi.last().unwrap();
        let next_id = rows[0].columns.iter().max().unwrap() + 1;
        rows[0].columns.push(next_id);
        rows[0].phi.push(extra_phi);
        let bigger = CarpetSystem::new(sys.base().clone(), rows, sys.psi().to_vec()).unwrap();
        let d_bigger = solve_full_dimension(&bigger, &tol).unwrap().dimension;
        assert!(
            d_bigger >= d - 1e-8,
            "extra column shrank the dimension: {d_bigger} < {d}"
        );
    }
}

#[test]
fn slower_fibers_shrink_the_dimension() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..4 {
        let sys: CarpetSystem<f64> = random::random_carpet(&mut rng, 3, 3);
        let d = solve_full_dimension(&sys, &tol).unwrap().dimension;
        // Scale up every fiber exponent: stronger fiber contraction.
        let rows = sys
            .rows()
            .iter()
            .map(|r| CarpetRow {
                row: r.row,
                columns: r.columns.clone(),
                phi: r.phi.iter().map(|&v| 1.5 * v).collect(),
            })
            .collect();
        let steeper = CarpetSystem::new(sys.base().clone(), rows, sys.psi().to_vec()).unwrap();
        let d_steep = solve_full_dimension(&steeper, &tol).unwrap().dimension;
        assert!(
            d_steep <= d + 1e-8,
            "steeper fibers grew the dimension: {d_steep} > {d}"
        );
    }
}

#[test]
fn spectrum_is_concave_with_peak_at_the_equilibrium_average() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let space = random::random_mixing_shift(&mut rng, 4);
    let n = space.symbol_count();
    let phi = Potential::depth1(&space, &random::random_values(&mut rng, n, 0.5)).unwrap();
    let psi = Potential::depth1(&space, &random::random_values(&mut rng, n, 1.0)).unwrap();
    let range = thermoform::birkhoff_range(&space, &psi, &tol).unwrap();
    if range.is_degenerate(&tol) {
        return;
    }
    let span = range.upper - range.lower;
    let alphas: Vec<f64> = (1..40)
        .map(|k| range.lower + span * k as f64 / 40.0)
        .collect();
    let points = levelset_spectrum(&space, &phi, &psi, &alphas, &tol).unwrap();
    let values: Vec<f64> = points
        .into_iter()
        .map(|p| p.expect("interior alphas are feasible").pressure)
        .collect();
    for w in values.windows(3) {
        // Midpoint concavity with slack for the solver tolerance.
        assert!(w[1] >= 0.5 * (w[0] + w[2]) - 1e-7);
    }
    // The unconstrained equilibrium average is the peak location.
    let eq = equilibrium(&space, &phi, &tol).unwrap();
    let alpha_star = integrate(&space, &psi, &eq.measure).unwrap();
    let at_peak = thermoform::solve_beta(&space, &phi, &psi, alpha_star, &tol)
        .unwrap()
        .pressure;
    let p = pressure(&space, &phi, &tol).unwrap();
    assert!((at_peak - p).abs() < 1e-9);
    for v in values {
        assert!(v <= p + 1e-9);
    }
}

#[test]
fn covariance_form_is_symmetric_and_bilinear() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let space = random::random_mixing_shift(&mut rng, 4);
    let n = space.symbol_count();
    let phi = Potential::depth1(&space, &random::random_values(&mut rng, n, 0.4)).unwrap();
    let f = Potential::depth1(&space, &random::random_values(&mut rng, n, 1.0)).unwrap();
    let g = Potential::depth1(&space, &random::random_values(&mut rng, n, 1.0)).unwrap();
    let fg_vals: Vec<f64> = {
        let fv = f.as_depth1(&space).unwrap();
        let gv = g.as_depth1(&space).unwrap();
        fv.iter().zip(&gv).map(|(a, b)| a + b).collect()
    };
    let fg = Potential::depth1(&space, &fg_vals).unwrap();
    let truncation = 60;
    let q_ff = q_form(&space, &phi, &f, &f, truncation, &tol).unwrap();
    let q_gg = q_form(&space, &phi, &g, &g, truncation, &tol).unwrap();
    let q_fg = q_form(&space, &phi, &f, &g, truncation, &tol).unwrap();
    let q_gf = q_form(&space, &phi, &g, &f, truncation, &tol).unwrap();
    let q_sum = q_form(&space, &phi, &fg, &fg, truncation, &tol).unwrap();
    let slack = q_ff.tail_bound + q_gg.tail_bound + 2.0 * q_fg.tail_bound + q_sum.tail_bound;
    assert!((q_fg.value - q_gf.value).abs() < slack + 1e-10);
    assert!((q_sum.value - (q_ff.value + 2.0 * q_fg.value + q_gg.value)).abs() < slack + 1e-9);
    // Diagonal values are asymptotic variances, hence nonnegative.
    assert!(q_ff.value > -q_ff.tail_bound - 1e-12);
    assert!(q_gg.value > -q_gg.tail_bound - 1e-12);
}

#[test]
fn dimension_dominates_random_measures_on_random_carpets() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(320);
    for _ in 0..3 {
        let sys: CarpetSystem<f64> = random::random_carpet(&mut rng, 4, 3);
        let report = solve_full_dimension(&sys, &tol).unwrap();
        for _ in 0..25 {
            let nu = random::random_markov(&mut rng, sys.base(), &tol);
            let md = thermoform::measure_dimension(&sys, &nu, &tol).unwrap();
            assert!(
                md <= report.dimension + 1e-8,
                "random measure dimension {md} exceeds D {}",
                report.dimension
            );
        }
        let attained = thermoform::measure_dimension(&sys, &report.nu_star, &tol).unwrap();
        assert!(
            (attained - report.dimension).abs() < 1e-6,
            "reported maximizer attains {attained}, claimed {}",
            report.dimension
        );
    }
}

#[test]
fn degenerate_carpet_matches_interior_limit() {
    // Identical column data across rows: t is constant, and the dimension
    // must equal the Bowen root plus that constant.  Compare against a
    // nearby non-degenerate system to confirm continuity.
    let tol = Tolerances::default();
    let ln2 = std::f64::consts::LN_2;
    let ln3 = 3f64.ln();
    let base = ShiftSpace::full(2).unwrap();
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
    assert!(degenerate.diagnostics.degenerate);
    let expected = 1.0 + ln2 / ln3;
    assert!((degenerate.dimension - expected).abs() < 1e-10);
    // A tiny asymmetry leaves the dimension within o(delta) of the limit.
    let nearby = solve_full_dimension(&make(1e-5), &tol).unwrap();
    assert!((nearby.dimension - expected).abs() < 1e-8);
}

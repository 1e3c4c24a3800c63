//! One handler per command: pull typed objects out of the input document,
//! run the library operation, and return the report payload plus the
//! optional CSV artifact.

use serde_json::{json, Value};

use thermoform::carpet::CarpetSystem as GenericCarpetSystem;
use thermoform::levelset::BirkhoffRange;
use thermoform::shift::Word;
use thermoform::{
    bernoulli_search, birkhoff_range, equilibrium, higher_block, levelset_spectrum, ly_dimension,
    mcmullen_dimension, mcmullen_system, measure_dimension, measure_entropy, solve_beta,
    solve_full_dimension, t_of_nu, MarkovMeasure, Potential, ShiftSpace, Tolerances,
};

use crate::errors::{self, CliError};
use crate::input;
use crate::output::CsvData;

type CarpetSystem = GenericCarpetSystem<f64>;

pub type CommandOutput = (Value, Option<CsvData>);

/// A system reduced to depth-1 potentials, recoding through the
/// higher-block shift when the input potentials are deeper.
struct Depth1System {
    space: ShiftSpace,
    phi: Potential,
    psi: Option<Potential>,
    /// New symbol -> first symbol of its original word, for projecting
    /// cycles back to the input alphabet.
    project: Option<Vec<usize>>,
    note: Option<String>,
}

fn to_depth1(
    space: ShiftSpace,
    phi: Potential,
    psi: Option<Potential>,
) -> Result<Depth1System, CliError> {
    let k = phi.depth.max(psi.as_ref().map_or(1, |p| p.depth));
    if k <= 1 {
        return Ok(Depth1System {
            space,
            phi,
            psi,
            project: None,
            note: None,
        });
    }
    let driver = if phi.depth == k {
        phi.clone()
    } else {
        psi.clone().expect("a potential of maximal depth exists")
    };
    let hb = higher_block(&space, &driver).map_err(errors::from_shift)?;
    // A shallower potential becomes depth 1 by reading the word prefix it
    // actually depends on.
    let lift = |p: &Potential| -> Result<Potential, CliError> {
        let mut values = Vec::with_capacity(hb.words.len());
        for w in &hb.words {
            let prefix = Word(w.0[..p.depth].to_vec());
            let v = p.value(&prefix).ok_or_else(|| {
                CliError::Internal(format!("recoded potential misses the word `{prefix}`"))
            })?;
            values.push(v);
        }
        Potential::depth1(&hb.space, &values).map_err(errors::from_shift)
    };
    let phi1 = if phi.depth == k {
        hb.potential.clone()
    } else {
        lift(&phi)?
    };
    let psi1 = match &psi {
        None => None,
        Some(p) if p.depth == k && phi.depth != k => Some(hb.potential.clone()),
        Some(p) => Some(lift(p)?),
    };
    let note = format!(
        "depth-{k} potentials recoded onto the {} allowed {k}-words; reported measures and cycles live on the recoded alphabet unless projected",
        hb.space.symbol_count()
    );
    Ok(Depth1System {
        project: Some(hb.words.iter().map(|w| w.0[0]).collect()),
        space: hb.space,
        phi: phi1,
        psi: psi1,
        note: Some(note),
    })
}

/// Deserialized potentials have not seen the space yet; rebuild through
/// the validating constructor so junk words fail here with a pointer
/// instead of deep inside a solver.
fn validated_potential(space: &ShiftSpace, p: Potential, ptr: &str) -> Result<Potential, CliError> {
    Potential::new(space, p.depth, p.values)
        .map_err(|e| CliError::Input(format!("at `{ptr}`: {e}")))
}

fn attach_notes(report: &mut Value, notes: Vec<String>) {
    if !notes.is_empty() {
        report["notes"] = json!(notes);
    }
}

/// The hypothesis `0 not in the boundary of I_psi` is warn-only: flag it,
/// keep computing.
fn boundary_zero_note(range: &BirkhoffRange<f64>, tol: &Tolerances, notes: &mut Vec<String>) {
    let scale = 1f64.max(range.lower.abs()).max(range.upper.abs());
    let margin = tol.interior_margin * scale;
    if range.lower.abs() <= margin || range.upper.abs() <= margin {
        let msg = format!(
            "0 lies on the boundary of the computed Birkhoff range [{}, {}]",
            range.lower, range.upper
        );
        log::warn!("{msg}");
        notes.push(msg);
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(format!("cannot serialize report: {e}")))
}

pub fn pressure(root: &Value, tol: &Tolerances) -> Result<CommandOutput, CliError> {
    let space: ShiftSpace = input::parse(root, "/space")?;
    let phi: Potential = input::parse(root, "/phi")?;
    let phi = validated_potential(&space, phi, "/phi")?;
    let sys = to_depth1(space, phi, None)?;
    let p = thermoform::pressure(&sys.space, &sys.phi, tol).map_err(errors::from_transfer)?;
    let mut report = json!({
        "pressure": p,
        "symbols": sys.space.symbol_count(),
    });
    attach_notes(&mut report, sys.note.into_iter().collect());
    Ok((report, None))
}

pub fn equilibrium_cmd(root: &Value, tol: &Tolerances) -> Result<CommandOutput, CliError> {
    let space: ShiftSpace = input::parse(root, "/space")?;
    let phi: Potential = input::parse(root, "/phi")?;
    let phi = validated_potential(&space, phi, "/phi")?;
    let sys = to_depth1(space, phi, None)?;
    let rep = equilibrium(&sys.space, &sys.phi, tol).map_err(errors::from_transfer)?;
    let mut report = to_value(&rep)?;
    attach_notes(&mut report, sys.note.into_iter().collect());
    Ok((report, None))
}

pub fn levelset(root: &Value, tol: &Tolerances) -> Result<CommandOutput, CliError> {
    let space: ShiftSpace = input::parse(root, "/space")?;
    let phi: Potential = input::parse(root, "/phi")?;
    let psi: Potential = input::parse(root, "/psi")?;
    let alpha: f64 = input::parse(root, "/alpha")?;
    let phi = validated_potential(&space, phi, "/phi")?;
    let psi = validated_potential(&space, psi, "/psi")?;
    let sys = to_depth1(space, phi, Some(psi))?;
    let psi1 = sys.psi.expect("psi was provided");
    let range = birkhoff_range(&sys.space, &psi1, tol).map_err(errors::from_levelset)?;
    let mut notes: Vec<String> = sys.note.into_iter().collect();
    boundary_zero_note(&range, tol, &mut notes);
    let sol = solve_beta(&sys.space, &sys.phi, &psi1, alpha, tol).map_err(errors::from_levelset)?;
    let mut report = json!({
        "solution": to_value(&sol)?,
        "birkhoff_range": to_value(&range)?,
    });
    attach_notes(&mut report, notes);
    Ok((report, None))
}

pub fn spectrum(root: &Value, tol: &Tolerances) -> Result<CommandOutput, CliError> {
    let space: ShiftSpace = input::parse(root, "/space")?;
    let phi: Potential = input::parse(root, "/phi")?;
    let psi: Potential = input::parse(root, "/psi")?;
    let phi = validated_potential(&space, phi, "/phi")?;
    let psi = validated_potential(&space, psi, "/psi")?;
    let sys = to_depth1(space, phi, Some(psi))?;
    let psi1 = sys.psi.expect("psi was provided");
    let range = birkhoff_range(&sys.space, &psi1, tol).map_err(errors::from_levelset)?;
    let mut notes: Vec<String> = sys.note.into_iter().collect();
    boundary_zero_note(&range, tol, &mut notes);

    let alphas: Vec<f64> = match input::parse_opt::<Vec<f64>>(root, "/alphas")? {
        Some(list) => {
            if list.is_empty() {
                return Err(CliError::Input("`/alphas` must not be empty".into()));
            }
            if let Some(&bad) = list.iter().find(|&&a| !range.contains_interior(a, tol)) {
                return Err(CliError::Domain {
                    message: format!(
                        "level {bad} is outside the interior of the Birkhoff range [{}, {}]",
                        range.lower, range.upper
                    ),
                    witness: Some(("birkhoff_range", to_value(&range)?)),
                });
            }
            list
        }
        None => {
            let count: usize = input::parse(root, "/alpha_count")?;
            if count == 0 || count > 10_000 {
                return Err(CliError::Input(
                    "`/alpha_count` must be between 1 and 10000".into(),
                ));
            }
            if range.is_degenerate(tol) {
                return Err(CliError::Domain {
                    message: "every invariant measure has the same average; no spectrum".into(),
                    witness: Some(("birkhoff_range", to_value(&range)?)),
                });
            }
            let span = range.upper - range.lower;
            (0..count)
                .map(|i| range.lower + span * (i + 1) as f64 / (count + 1) as f64)
                .collect()
        }
    };

    let sols = levelset_spectrum(&sys.space, &sys.phi, &psi1, &alphas, tol)
        .map_err(errors::from_levelset)?;
    let mut points = Vec::with_capacity(sols.len());
    let mut rows = Vec::with_capacity(sols.len());
    for sol in sols {
        let s = sol.map_err(errors::from_levelset)?;
        points.push(json!({
            "alpha": s.alpha,
            "beta": s.beta,
            "pressure": s.pressure,
            "entropy": s.entropy,
            "integral_phi": s.integral_phi,
            "integral_psi": s.integral_psi,
        }));
        rows.push(vec![s.alpha, s.beta, s.pressure]);
    }
    let mut report = json!({
        "birkhoff_range": to_value(&range)?,
        "points": points,
    });
    attach_notes(&mut report, notes);
    Ok((
        report,
        Some(CsvData {
            header: "alpha,beta,pressure",
            rows,
        }),
    ))
}

pub fn birkhoff_range_cmd(root: &Value, tol: &Tolerances) -> Result<CommandOutput, CliError> {
    let space: ShiftSpace = input::parse(root, "/space")?;
    let psi: Potential = input::parse(root, "/psi")?;
    let psi = validated_potential(&space, psi, "/psi")?;
    let sys = to_depth1(space, psi, None)?;
    let mut range = birkhoff_range(&sys.space, &sys.phi, tol).map_err(errors::from_levelset)?;
    if let Some(project) = &sys.project {
        range.lower_cycle = range.lower_cycle.iter().map(|&i| project[i]).collect();
        range.upper_cycle = range.upper_cycle.iter().map(|&i| project[i]).collect();
    }
    let mut notes: Vec<String> = sys.note.into_iter().collect();
    boundary_zero_note(&range, tol, &mut notes);
    let degenerate = range.is_degenerate(tol);
    let mut report = json!({
        "range": to_value(&range)?,
        "degenerate": degenerate,
    });
    attach_notes(&mut report, notes);
    Ok((report, None))
}

pub fn carpet_dim(root: &Value, tol: &Tolerances) -> Result<CommandOutput, CliError> {
    let system: CarpetSystem = input::parse(root, "/carpet")?;
    let full = solve_full_dimension(&system, tol).map_err(errors::from_carpet)?;
    let rows = full.trace.iter().map(|p| vec![p.t, p.beta, p.h]).collect();
    let report = to_value(&full)?;
    Ok((
        report,
        Some(CsvData {
            header: "t,beta,h",
            rows,
        }),
    ))
}

fn measure_from(
    root: &Value,
    space: &ShiftSpace,
    tol: &Tolerances,
) -> Result<MarkovMeasure, CliError> {
    if input::opt(root, "/measure/bernoulli").is_some() {
        let weights: Vec<f64> = input::parse(root, "/measure/bernoulli")?;
        return MarkovMeasure::bernoulli(space, &weights, tol).map_err(errors::from_shift);
    }
    let stochastic: Vec<Vec<f64>> = input::parse(root, "/measure/stochastic")?;
    match input::parse_opt::<Vec<f64>>(root, "/measure/stationary")? {
        Some(stationary) => MarkovMeasure::with_stationary(space, stochastic, stationary, tol)
            .map_err(errors::from_shift),
        None => MarkovMeasure::new(space, stochastic, tol).map_err(errors::from_shift),
    }
}

pub fn measure_dim(root: &Value, tol: &Tolerances) -> Result<CommandOutput, CliError> {
    let system: CarpetSystem = input::parse(root, "/carpet")?;
    let nu = measure_from(root, system.base(), tol)?;
    let t = t_of_nu(&system, &nu, tol).map_err(errors::from_carpet)?;
    let dim = measure_dimension(&system, &nu, tol).map_err(errors::from_carpet)?;
    let entropy = measure_entropy(system.base(), &nu).map_err(errors::from_shift)?;
    let integral_psi: f64 = system
        .psi()
        .iter()
        .zip(&nu.stationary)
        .map(|(&w, &p)| w * p)
        .sum();
    let mut report = json!({
        "measure_dimension": dim,
        "t_of_nu": t,
        "entropy": entropy,
        "integral_psi": integral_psi,
        "measure": to_value(&nu)?,
    });
    if let Some(weights) = input::parse_opt::<Vec<Vec<f64>>>(root, "/fiber_weights")? {
        let ly = ly_dimension(&system, &nu, &weights, tol).map_err(errors::from_carpet)?;
        report["ly_dimension"] = json!(ly);
    }
    Ok((report, None))
}

pub fn oracle_compare(
    root: &Value,
    seed: u64,
    tol: &Tolerances,
) -> Result<CommandOutput, CliError> {
    let mut entries: Vec<Value> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut notes: Vec<String> = Vec::new();

    let system: CarpetSystem = if input::opt(root, "/mcmullen").is_some() {
        let l: u64 = input::parse(root, "/mcmullen/l")?;
        let m: u64 = input::parse(root, "/mcmullen/m")?;
        let row_counts: Vec<u64> = input::parse(root, "/mcmullen/row_counts")?;
        let closed = mcmullen_dimension::<f64>(l, m, &row_counts).map_err(errors::from_oracle)?;
        values.push(closed.value);
        entries.push(json!({
            "method": to_value(&closed.method)?,
            "value": closed.value,
            "certificate": to_value(&closed.certificate)?,
        }));
        mcmullen_system(l, m, &row_counts).map_err(errors::from_oracle)?
    } else {
        input::parse(root, "/carpet")?
    };

    let solved = solve_full_dimension(&system, tol).map_err(errors::from_carpet)?;
    values.push(solved.dimension);
    entries.push(json!({
        "method": "dimension_solver",
        "value": solved.dimension,
        "case": to_value(&solved.case)?,
    }));

    if system.base().is_full_shift() {
        let search = bernoulli_search(&system, seed).map_err(errors::from_oracle)?;
        values.push(search.value);
        entries.push(json!({
            "method": to_value(&search.method)?,
            "value": search.value,
            "certificate": to_value(&search.certificate)?,
        }));
    } else {
        notes.push("Bernoulli direct search skipped: the base is not a full shift".into());
    }

    let mut max_gap = 0f64;
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            max_gap = max_gap.max((a - b).abs());
        }
    }
    let mut report = json!({
        "entries": entries,
        "max_gap": max_gap,
        "seed": seed,
    });
    attach_notes(&mut report, notes);
    Ok((report, None))
}

//! Skew-product carpet systems: fiber pressure, the per-measure exponent
//! `t(nu)`, and the nested optimization producing the full Hausdorff
//! dimension of the invariant set, with endpoint and degenerate handling.
//!
//! The symbolic model is row-driven: base transitions constrain the row
//! word, and at every step a column is chosen freely from the current row's
//! column set.  Fiber expansion rates depend only on the rectangle symbol,
//! so the relative pressure over a base fiber collapses to the depth-1
//! function `log A(i; t) = log sum_j exp(-t phi(i,j))`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::graph;
use crate::levelset::{self, LevelSetError};
use crate::numerics;
use crate::scalar::Scalar;
use crate::shift::{self, MarkovMeasure, ShiftError, ShiftSpace};

#[cfg(test)]
use crate::shift::Word;
use crate::transfer::{self, TransferError};

/// Errors of the carpet layer.
#[derive(Debug, Clone, Error)]
pub enum CarpetError<S: std::fmt::Display + std::fmt::Debug> {
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    LevelSet(#[from] LevelSetError<S>),
    #[error("system has {got} row entries but the base has {expected} symbols")]
    RowCountMismatch { got: usize, expected: usize },
    #[error("row entry at position {position} is labeled {found}; entries must be in order")]
    RowIndexMismatch { position: usize, found: usize },
    #[error("row {row} has no columns")]
    NoColumns { row: usize },
    #[error("row {row} repeats a column id")]
    DuplicateColumn { row: usize },
    #[error("row {row} has {columns} columns but {phi} fiber exponents")]
    PhiLengthMismatch {
        row: usize,
        columns: usize,
        phi: usize,
    },
    #[error("fiber exponent in row {row} must be positive and finite")]
    NonPositivePhi { row: usize },
    #[error("psi has {got} entries but the base has {expected} rows")]
    PsiLengthMismatch { got: usize, expected: usize },
    #[error("base exponent of row {row} must be positive and finite")]
    NonPositivePsi { row: usize },
    #[error("domination fails: min fiber exponent {min_phi} < max base exponent {max_psi}")]
    DominationViolated { min_phi: S, max_psi: S },
    #[error("system is degenerate: one row, one column, nothing to optimize")]
    DegenerateSystem,
    #[error("fiber pressure needs t >= 0, got {t}")]
    NegativeT { t: S },
    #[error("base shift must be mixing for the dimension solver")]
    BaseNotMixing,
    #[error("fiber weights for row {row} are malformed: {reason}")]
    BadWeights { row: usize, reason: String },
    #[error("solver failed: {0}")]
    Solver(String),
}

/// One row of a carpet: its column ids and per-column fiber log-expansions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarpetRow<S> {
    pub row: usize,
    pub columns: Vec<usize>,
    pub phi: Vec<S>,
}

/// A row-driven self-affine carpet system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CarpetSystemRepr<S>", into = "CarpetSystemRepr<S>")]
#[serde(bound(
    serialize = "S: Scalar + Serialize",
    deserialize = "S: Scalar + for<'a> Deserialize<'a>"
))]
pub struct CarpetSystem<S: Scalar> {
    base: ShiftSpace,
    rows: Vec<CarpetRow<S>>,
    psi: Vec<S>,
}

/// Wire form; deserialization goes through [`CarpetSystem::new`].
#[derive(Serialize, Deserialize)]
struct CarpetSystemRepr<S> {
    base: ShiftSpace,
    rows: Vec<CarpetRow<S>>,
    psi: Vec<S>,
}

impl<S: Scalar + for<'a> Deserialize<'a>> TryFrom<CarpetSystemRepr<S>> for CarpetSystem<S> {
    type Error = CarpetError<S>;

    fn try_from(repr: CarpetSystemRepr<S>) -> Result<Self, CarpetError<S>> {
        CarpetSystem::new(repr.base, repr.rows, repr.psi)
    }
}

impl<S: Scalar> From<CarpetSystem<S>> for CarpetSystemRepr<S> {
    fn from(sys: CarpetSystem<S>) -> Self {
        CarpetSystemRepr {
            base: sys.base,
            rows: sys.rows,
            psi: sys.psi,
        }
    }
}

impl<S: Scalar> CarpetSystem<S> {
    pub fn new(
        base: ShiftSpace,
        rows: Vec<CarpetRow<S>>,
        psi: Vec<S>,
    ) -> Result<Self, CarpetError<S>> {
        let n = base.symbol_count();
        if rows.len() != n {
            return Err(CarpetError::RowCountMismatch {
                got: rows.len(),
                expected: n,
            });
        }
        for (position, row) in rows.iter().enumerate() {
            if row.row != position {
                return Err(CarpetError::RowIndexMismatch {
                    position,
                    found: row.row,
                });
            }
            if row.columns.is_empty() {
                return Err(CarpetError::NoColumns { row: position });
            }
            let mut seen = row.columns.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != row.columns.len() {
                return Err(CarpetError::DuplicateColumn { row: position });
            }
            if row.phi.len() != row.columns.len() {
                return Err(CarpetError::PhiLengthMismatch {
                    row: position,
                    columns: row.columns.len(),
                    phi: row.phi.len(),
                });
            }
            if row.phi.iter().any(|&v| !v.is_finite() || v <= S::zero()) {
                return Err(CarpetError::NonPositivePhi { row: position });
            }
        }
        if psi.len() != n {
            return Err(CarpetError::PsiLengthMismatch {
                got: psi.len(),
                expected: n,
            });
        }
        for (row, &v) in psi.iter().enumerate() {
            if !v.is_finite() || v <= S::zero() {
                return Err(CarpetError::NonPositivePsi { row });
            }
        }
        let min_phi = rows
            .iter()
            .flat_map(|r| r.phi.iter().copied())
            .fold(S::infinity(), S::min);
        let max_psi = psi.iter().copied().fold(S::neg_infinity(), S::max);
        if min_phi < max_psi {
            return Err(CarpetError::DominationViolated { min_phi, max_psi });
        }
        if n == 1 && rows[0].columns.len() == 1 {
            return Err(CarpetError::DegenerateSystem);
        }
        Ok(CarpetSystem { base, rows, psi })
    }

    pub fn base(&self) -> &ShiftSpace {
        &self.base
    }

    pub fn rows(&self) -> &[CarpetRow<S>] {
        &self.rows
    }

    pub fn psi(&self) -> &[S] {
        &self.psi
    }

    /// Static warnings about borderline but accepted inputs.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let min_phi = self
            .rows
            .iter()
            .flat_map(|r| r.phi.iter().copied())
            .fold(S::infinity(), S::min);
        let max_psi = self.psi.iter().copied().fold(S::neg_infinity(), S::max);
        if min_phi - max_psi <= S::of(1e-12) * S::one().max(max_psi.abs()) {
            out.push(
                "domination holds only non-strictly (min fiber exponent equals max base exponent)"
                    .into(),
            );
        }
        out
    }

    /// `log A(i; t)` for every row, evaluated stably.
    fn log_a(&self, t: S) -> Vec<S> {
        self.rows
            .iter()
            .map(|row| {
                let terms: Vec<S> = row.phi.iter().map(|&v| -t * v).collect();
                numerics::log_sum_exp(&terms)
            })
            .collect()
    }
}

/// Row-wise fiber pressure at a fixed exponent `t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberPressure<S> {
    pub t: S,
    /// `log_a[i] = log sum_j exp(-t phi(i,j))`.
    pub log_a: Vec<S>,
}

/// Evaluate the fiber pressure function `log A(.; t)`.
pub fn fiber_pressure<S: Scalar>(
    system: &CarpetSystem<S>,
    t: S,
) -> Result<FiberPressure<S>, CarpetError<S>> {
    if !(t >= S::zero()) {
        return Err(CarpetError::NegativeT { t });
    }
    Ok(FiberPressure {
        t,
        log_a: system.log_a(t),
    })
}

/// The unique `t` with `int log A(.; t) d nu = 0`: zero of a strictly
/// decreasing function, found by bracketed descent from `[0, 1]` with the
/// upper end doubled as needed.
pub fn t_of_nu<S: Scalar>(
    system: &CarpetSystem<S>,
    nu: &MarkovMeasure<S>,
    tol: &Tolerances<S>,
) -> Result<S, CarpetError<S>> {
    nu.check_compatible(&system.base)?;
    t_of_weights(system, &nu.stationary, tol)
}

fn t_of_weights<S: Scalar>(
    system: &CarpetSystem<S>,
    weights: &[S],
    tol: &Tolerances<S>,
) -> Result<S, CarpetError<S>> {
    let f = |t: S| -> S {
        system
            .log_a(t)
            .iter()
            .zip(weights)
            .map(|(&a, &p)| a * p)
            .sum()
    };
    // Every visited row with a single column contributes zero at t = 0; the
    // root is exactly 0 then.
    if f(S::zero()) <= tol.t_root {
        return Ok(S::zero());
    }
    let r = numerics::decreasing_root(
        f,
        S::zero(),
        S::one(),
        true,
        tol.t_root,
        tol.max_root_iterations,
    )
    .map_err(|e| CarpetError::Solver(format!("t(nu) search failed: {e}")))?;
    Ok(r.x)
}

#[derive(Debug, Clone)]
struct TExtremes<S> {
    lower: S,
    upper: S,
    lower_cycle: Vec<usize>,
    upper_cycle: Vec<usize>,
}

fn t_extremes_with_witnesses<S: Scalar>(
    system: &CarpetSystem<S>,
    tol: &Tolerances<S>,
) -> Result<TExtremes<S>, CarpetError<S>> {
    let space = &system.base;
    let root = |maximal: bool| -> Result<S, CarpetError<S>> {
        let f = |t: S| -> S {
            let w = system.log_a(t);
            if maximal {
                graph::max_mean_value(space, &w)
            } else {
                graph::min_mean_value(space, &w)
            }
        };
        if f(S::zero()) <= tol.t_root {
            return Ok(S::zero());
        }
        let r = numerics::decreasing_root(
            f,
            S::zero(),
            S::one(),
            true,
            tol.t_root,
            tol.max_root_iterations,
        )
        .map_err(|e| CarpetError::Solver(format!("t-extreme search failed: {e}")))?;
        Ok(r.x)
    };
    let upper = root(true)?;
    let lower = root(false)?;
    let upper_cycle = graph::max_mean_cycle(space, &system.log_a(upper)).cycle;
    let lower_cycle = graph::min_mean_cycle(space, &system.log_a(lower)).cycle;
    Ok(TExtremes {
        lower,
        upper,
        lower_cycle,
        upper_cycle,
    })
}

/// Extremal values of `t(nu)` over all invariant base measures.
pub fn t_extremes<S: Scalar>(
    system: &CarpetSystem<S>,
    tol: &Tolerances<S>,
) -> Result<(S, S), CarpetError<S>> {
    let e = t_extremes_with_witnesses(system, tol)?;
    Ok((e.lower, e.upper))
}

/// Which branch produced the reported dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionCase {
    Interior,
    LowerEndpoint,
    UpperEndpoint,
}

/// One feasible point of the final inner scan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TracePoint<S> {
    pub t: S,
    pub beta: S,
    pub h: S,
}

/// Residuals and cross-checks accompanying a dimension report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarpetDiagnostics<S> {
    /// `G(D)` at the reported dimension (interior root residual).
    pub outer_residual: Option<S>,
    /// `int log A(.; t*) d nu*` in the interior case.
    pub constraint_residual: Option<S>,
    /// Base pressure of `(t*-D) psi + beta* log A(.; t*)` in the interior case.
    pub tilted_pressure_residual: Option<S>,
    /// Best interior value of `D`, when the outer root-find succeeded.
    pub interior_candidate: Option<S>,
    /// Dimension of the equilibrium of the Bowen potential `-s psi`.
    pub lower_candidate: S,
    /// Dimension of the best measure with `t(nu)` at the upper extreme.
    pub upper_candidate: S,
    /// `h + (t_upper - D) int psi` for the upper-extreme certificate measure.
    pub upper_certificate_residual: S,
    /// The extremal-`t` family collapsed to a point.
    pub degenerate: bool,
    /// Feasible points in the final inner scan.
    pub feasible_grid_points: usize,
    /// Cycle attaining the lower `t` extreme.
    pub lower_cycle: Vec<usize>,
    /// Cycle attaining the upper `t` extreme.
    pub upper_cycle: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Result of the full-dimension optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullDimensionReport<S> {
    /// The carpet's Hausdorff dimension.
    pub dimension: S,
    pub t_star: S,
    /// Lagrange parameter of the inner constrained problem; absent on
    /// endpoint and degenerate branches.
    pub beta_star: Option<S>,
    /// Maximizing base measure.
    pub nu_star: MarkovMeasure<S>,
    /// Per row, the column distribution `w(j) proportional to exp(-t* phi(i,j))`.
    pub fiber_weights: Vec<Vec<S>>,
    pub case: SolutionCase,
    pub t_range: (S, S),
    /// `(t, beta, h)` over the feasible grid of the final inner scan.
    pub trace: Vec<TracePoint<S>>,
    pub diagnostics: CarpetDiagnostics<S>,
}

struct ScanBest<S> {
    h: S,
    t: S,
    beta: S,
}

/// One inner scan: maximize `t -> h_D(t)` over the open extreme interval,
/// where `h_D(t)` is the base pressure of `(t-D) psi + beta(t) log A(.; t)`
/// under the constraint `int log A(.; t) d nu = 0`.  Sequential by design:
/// the Lagrange parameter is warm-started along the grid, and determinism
/// must not depend on thread count.
fn scan_inner<S: Scalar>(
    system: &CarpetSystem<S>,
    ext: &TExtremes<S>,
    d: S,
    tol: &Tolerances<S>,
    mut trace: Option<&mut Vec<TracePoint<S>>>,
) -> (Option<ScanBest<S>>, usize) {
    let space = &system.base;
    let span = ext.upper - ext.lower;
    let n_grid = tol.t_grid.max(3);
    let mut warm: Option<S> = None;
    let mut best: Option<ScanBest<S>> = None;
    let mut feasible = 0usize;
    let eval = |t: S, warm: &mut Option<S>| -> Option<(S, S)> {
        let log_a = system.log_a(t);
        let phi_level: Vec<S> = system.psi.iter().map(|&v| (t - d) * v).collect();
        match levelset::solve_beta_vec(space, &phi_level, &log_a, S::zero(), *warm, tol) {
            Ok(sol) => {
                *warm = Some(sol.beta);
                Some((sol.pressure, sol.beta))
            }
            Err(_) => None,
        }
    };
    let grid_ts: Vec<S> = (0..n_grid)
        .map(|k| ext.lower + span * (S::of(k as f64) + S::of(0.5)) / S::of(n_grid as f64))
        .collect();
    let mut best_index = None;
    for (k, &t) in grid_ts.iter().enumerate() {
        if let Some((h, beta)) = eval(t, &mut warm) {
            feasible += 1;
            if let Some(points) = trace.as_deref_mut() {
                points.push(TracePoint { t, beta, h });
            }
            if best.as_ref().is_none_or(|b| h > b.h) {
                best = Some(ScanBest { h, t, beta });
                best_index = Some(k);
            }
        }
    }
    if let Some(k) = best_index {
        // Golden-section refinement between the neighbors of the best grid
        // point; infeasible probes count as minus infinity.
        let cell = span / S::of(n_grid as f64);
        let a = (grid_ts[k] - cell).max(ext.lower);
        let b = (grid_ts[k] + cell).min(ext.upper);
        let mut warm_golden = Some(best.as_ref().unwrap().beta);
        let mut refined: Option<ScanBest<S>> = None;
        numerics::golden_max(
            |t| match eval(t, &mut warm_golden) {
                Some((h, beta)) => {
                    if refined.as_ref().is_none_or(|r| h > r.h) {
                        refined = Some(ScanBest { h, t, beta });
                    }
                    h
                }
                None => S::neg_infinity(),
            },
            a,
            b,
            tol.golden_t,
        );
        if let Some(r) = refined {
            if r.h > best.as_ref().unwrap().h {
                best = Some(r);
            }
        }
    }
    (best, feasible)
}

/// Dimension of the equilibrium of `-s psi` where `s` is the Bowen root,
/// i.e. the best measure when the fiber exponent is ignored.
fn lower_candidate<S: Scalar>(
    system: &CarpetSystem<S>,
    s_bowen: S,
    tol: &Tolerances<S>,
) -> Result<(S, S, MarkovMeasure<S>), CarpetError<S>> {
    let neg: Vec<S> = system.psi.iter().map(|&v| -s_bowen * v).collect();
    let core = transfer::equilibrium_core(&system.base, &neg, tol)?;
    let nu = MarkovMeasure::with_stationary(&system.base, core.stochastic, core.stationary, tol)?;
    let t = t_of_nu(system, &nu, tol)?;
    let h = shift::measure_entropy(&system.base, &nu)?;
    let ipsi: S = system
        .psi
        .iter()
        .zip(&nu.stationary)
        .map(|(&v, &p)| v * p)
        .sum();
    Ok((h / ipsi + t, t, nu))
}

/// Edges that can lie on a maximum-mean cycle of the vertex-weighted base
/// graph, via longest-path potentials of the reduced weights.
fn tight_subgraph(space: &ShiftSpace, weight: &[f64], mean: f64) -> (Vec<usize>, Vec<bool>) {
    let n = space.symbol_count();
    let reduced: Vec<f64> = weight.iter().map(|&w| w - mean).collect();
    // Longest-path potentials; no positive reduced cycles exist, so values
    // stabilize within n rounds.
    let mut y = vec![0.0f64; n];
    for _ in 0..n {
        let mut next = y.clone();
        for a in 0..n {
            for b in 0..n {
                if space.allowed(a, b) {
                    let cand = y[a] + reduced[a];
                    if cand > next[b] {
                        next[b] = cand;
                    }
                }
            }
        }
        y = next;
    }
    let scale: f64 = weight.iter().fold(1.0f64, |acc, &w| acc.max(w.abs()));
    let mut slack_tol = 1e-9 * scale * n as f64;
    for _ in 0..6 {
        let mut keep = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                if space.allowed(a, b) && (y[a] + reduced[a] - y[b]).abs() <= slack_tol {
                    keep[a * n + b] = true;
                }
            }
        }
        // Trim to the cyclic core.
        loop {
            let mut changed = false;
            for v in 0..n {
                let has_out = (0..n).any(|b| keep[v * n + b]);
                let has_in = (0..n).any(|a| keep[a * n + v]);
                if has_out != has_in || (!has_out && has_in) {
                    for x in 0..n {
                        if keep[v * n + x] || keep[x * n + v] {
                            keep[v * n + x] = false;
                            keep[x * n + v] = false;
                            changed = true;
                        }
                    }
                } else if !has_out {
                    continue;
                }
            }
            if !changed {
                break;
            }
        }
        let vertices: Vec<usize> = (0..n)
            .filter(|&v| (0..n).any(|b| keep[v * n + b]))
            .collect();
        if !vertices.is_empty() {
            return (vertices, keep);
        }
        slack_tol *= 10.0;
    }
    (Vec::new(), vec![false; n * n])
}

/// Best dimension among measures whose `t(nu)` sits at the upper extreme:
/// such measures live on the subgraph of maximal cycles of `log A(.; t_up)`,
/// where the problem reduces to a Bowen equation.
fn upper_candidate<S: Scalar>(
    system: &CarpetSystem<S>,
    ext: &TExtremes<S>,
    tol: &Tolerances<S>,
) -> Result<(S, MarkovMeasure<S>, S), CarpetError<S>> {
    let space = &system.base;
    let n = space.symbol_count();
    let w = system.log_a(ext.upper);
    let w64: Vec<f64> = w.iter().map(|&v| v.lossy_f64()).collect();
    let mean = graph::max_mean_value(space, &w).lossy_f64();
    let (vertices, keep) = tight_subgraph(space, &w64, mean);
    let (vertices, keep) = if vertices.is_empty() {
        // Fall back to the witness cycle alone.
        let cycle = &ext.upper_cycle;
        let mut keep = vec![false; n * n];
        for i in 0..cycle.len() {
            keep[cycle[i] * n + cycle[(i + 1) % cycle.len()]] = true;
        }
        (cycle.clone(), keep)
    } else {
        (vertices, keep)
    };
    let m = vertices.len();
    let index_of: Vec<Option<usize>> = {
        let mut map = vec![None; n];
        for (i, &v) in vertices.iter().enumerate() {
            map[v] = Some(i);
        }
        map
    };
    let psi_sub: Vec<S> = vertices.iter().map(|&v| system.psi[v]).collect();
    let sub_pressure = |s: S| -> Result<(S, numerics::PerronData<S>), CarpetError<S>> {
        let shift = psi_sub
            .iter()
            .map(|&v| -s * v)
            .fold(S::neg_infinity(), S::max);
        let mut mat = vec![S::zero(); m * m];
        for (i, &vi) in vertices.iter().enumerate() {
            let entry = (-s * psi_sub[i] - shift).exp();
            for (j, &vj) in vertices.iter().enumerate() {
                if keep[vi * n + vj] {
                    mat[i * m + j] = entry;
                }
            }
        }
        let data = numerics::perron_shifted(m, &mat, tol).map_err(|e| {
            CarpetError::Solver(format!(
                "power iteration on the extreme subgraph stalled (residual {:e})",
                e.residual
            ))
        })?;
        Ok((shift + data.lambda.ln(), data))
    };
    let mut failure: Option<CarpetError<S>> = None;
    let root = numerics::decreasing_root(
        |s| match sub_pressure(s) {
            Ok((p, _)) => p,
            Err(e) => {
                failure = Some(e);
                S::nan()
            }
        },
        S::zero(),
        S::one(),
        true,
        tol.t_root,
        tol.max_root_iterations,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let s_sub = match root {
        Ok(r) => r.x,
        Err(e) => {
            return Err(CarpetError::Solver(format!(
                "Bowen equation on the extreme subgraph failed: {e}"
            )))
        }
    };
    // Equilibrium chain on the subgraph from the eigen data, embedded into
    // the full base with uniform off-support rows.
    let (_, data) = sub_pressure(s_sub)?;
    let mut stochastic = vec![vec![S::zero(); n]; n];
    for a in 0..n {
        match index_of[a] {
            Some(i) => {
                let mut row_sum = S::zero();
                for (j, &vj) in vertices.iter().enumerate() {
                    if keep[a * n + vj] {
                        row_sum = row_sum + data.right[j];
                    }
                }
                if row_sum > S::zero() {
                    for (j, &vj) in vertices.iter().enumerate() {
                        if keep[a * n + vj] {
                            stochastic[a][vj] = data.right[j] / row_sum;
                        }
                    }
                } else {
                    uniform_row(space, a, &mut stochastic[a], i == usize::MAX);
                }
            }
            None => uniform_row(space, a, &mut stochastic[a], false),
        }
    }
    let flat: Vec<S> = stochastic.iter().flatten().copied().collect();
    let stationary = numerics::stationary_vector(n, &flat).ok_or_else(|| {
        CarpetError::Solver("no stationary vector on the extreme subgraph".into())
    })?;
    let nu = MarkovMeasure::with_stationary(space, stochastic, stationary, tol)?;
    let h = shift::measure_entropy(space, &nu)?;
    let ipsi: S = system
        .psi
        .iter()
        .zip(&nu.stationary)
        .map(|(&v, &p)| v * p)
        .sum();
    let value = h / ipsi + ext.upper;
    Ok((value, nu, s_sub))
}

fn uniform_row<S: Scalar>(space: &ShiftSpace, a: usize, row: &mut [S], _unused: bool) {
    let n = space.symbol_count();
    let count = (0..n).filter(|&b| space.allowed(a, b)).count();
    let p = S::one() / S::of(count as f64);
    for b in 0..n {
        row[b] = if space.allowed(a, b) { p } else { S::zero() };
    }
}

fn fiber_weights_at<S: Scalar>(system: &CarpetSystem<S>, t: S) -> Vec<Vec<S>> {
    system
        .rows
        .iter()
        .map(|row| {
            let min = row.phi.iter().copied().fold(S::infinity(), S::min);
            let raw: Vec<S> = row.phi.iter().map(|&v| (-t * (v - min)).exp()).collect();
            let sum: S = raw.iter().copied().sum();
            raw.into_iter().map(|w| w / sum).collect()
        })
        .collect()
}

/// Full Hausdorff dimension of the carpet: outer monotone root in `D` of
/// the decreasing map `G(D) = max_t h_D(t)`, inner constrained maximization
/// over `t`, with endpoint and degenerate branches cross-checked and the
/// best certified value reported.
pub fn solve_full_dimension<S: Scalar>(
    system: &CarpetSystem<S>,
    tol: &Tolerances<S>,
) -> Result<FullDimensionReport<S>, CarpetError<S>> {
    let space = &system.base;
    if !space.is_mixing() {
        return Err(CarpetError::BaseNotMixing);
    }
    let mut warnings = system.warnings();
    let ext = t_extremes_with_witnesses(system, tol)?;
    if ext.upper > S::one() + tol.t_root {
        warnings.push(format!(
            "t-extremes reach {:.6} > 1; inputs are outside the geometric regime",
            ext.upper.lossy_f64()
        ));
    }
    let s_bowen = transfer::bowen_root_vec(space, &system.psi, tol)?;
    let t_scale = S::one().max(ext.upper.abs()).max(ext.lower.abs());
    let degenerate = ext.upper - ext.lower <= tol.degenerate_span * t_scale;
    let (d_low, t_low, nu_low) = lower_candidate(system, s_bowen, tol)?;

    if degenerate {
        // Every measure has the same t; the dimension splits into the Bowen
        // root plus that constant.
        let t_star = ext.upper;
        let dimension = s_bowen + t_star;
        warnings.push("extremal t-family is a single point; dimension = Bowen root + t".into());
        let ipsi: S = system
            .psi
            .iter()
            .zip(&nu_low.stationary)
            .map(|(&v, &p)| v * p)
            .sum();
        let h = shift::measure_entropy(space, &nu_low)?;
        let diagnostics = CarpetDiagnostics {
            outer_residual: None,
            constraint_residual: None,
            tilted_pressure_residual: None,
            interior_candidate: None,
            lower_candidate: d_low,
            upper_candidate: d_low,
            upper_certificate_residual: h + (ext.upper - dimension) * ipsi,
            degenerate: true,
            feasible_grid_points: 0,
            lower_cycle: ext.lower_cycle.clone(),
            upper_cycle: ext.upper_cycle.clone(),
            warnings,
        };
        return Ok(FullDimensionReport {
            dimension,
            t_star,
            beta_star: None,
            nu_star: nu_low,
            fiber_weights: fiber_weights_at(system, t_star),
            case: SolutionCase::LowerEndpoint,
            t_range: (ext.lower, ext.upper),
            trace: Vec::new(),
            diagnostics,
        });
    }

    let (d_up, nu_up, _s_sub) = upper_candidate(system, &ext, tol)?;

    // Outer root: G is strictly decreasing, positive at D = t_lower and
    // nonpositive at D = Bowen root + t_upper.
    let mut interior: Option<S> = None;
    let mut outer_residual: Option<S> = None;
    {
        let mut g = |d: S| -> S {
            match scan_inner(system, &ext, d, tol, None).0 {
                Some(best) => best.h,
                None => S::nan(),
            }
        };
        match numerics::decreasing_root(
            &mut g,
            ext.lower,
            s_bowen + ext.upper,
            false,
            tol.outer_root,
            tol.max_root_iterations,
        ) {
            Ok(r) => {
                interior = Some(r.x);
                outer_residual = Some(r.residual);
            }
            Err(e) => {
                warnings.push(format!("outer dimension bracket failed: {e}"));
            }
        }
    }

    // Final scan at the interior root (or at the best candidate when the
    // root failed) for the trace and the reporting measure.
    let d_probe = interior.unwrap_or_else(|| d_low.max(d_up));
    let mut trace = Vec::new();
    let (best, feasible) = scan_inner(system, &ext, d_probe, tol, Some(&mut trace));

    if best.is_none() {
        warnings.push("no feasible point in the final inner scan".into());
    }
    // Pick the winner: the endpoint branches are certified lower bounds of
    // the dimension, the interior root is the variational value; whichever
    // is largest is reported, together with a measure that attains it.
    let interior_valid = interior.is_some() && best.is_some();
    let d_interior = if interior_valid {
        interior.unwrap()
    } else {
        S::neg_infinity()
    };
    let notable = tol.outer_root * S::of(100.0);
    let (dimension, winner) = if d_interior >= d_low && d_interior >= d_up {
        (d_interior, SolutionCase::Interior)
    } else if d_up >= d_low {
        if interior_valid && d_up - d_interior > notable {
            warnings.push("upper-extreme certificate beats the interior root".into());
        }
        (d_up, SolutionCase::UpperEndpoint)
    } else {
        if interior_valid && d_low - d_interior > notable {
            warnings.push("Bowen certificate beats the interior root".into());
        }
        (d_low, SolutionCase::LowerEndpoint)
    };
    if !dimension.is_finite() {
        return Err(CarpetError::Solver(
            "no dimension candidate could be certified".into(),
        ));
    }

    let h_up = shift::measure_entropy(space, &nu_up)?;
    let ipsi_up: S = system
        .psi
        .iter()
        .zip(&nu_up.stationary)
        .map(|(&v, &p)| v * p)
        .sum();
    let upper_certificate_residual = h_up + (ext.upper - dimension) * ipsi_up;

    let (t_star, beta_star, nu_star, constraint_residual, tilted_pressure_residual) = match winner {
        SolutionCase::Interior => {
            let b = best.as_ref().unwrap();
            let log_a = system.log_a(b.t);
            let phi_level: Vec<S> = system.psi.iter().map(|&v| (b.t - dimension) * v).collect();
            let sol =
                levelset::solve_beta_vec(space, &phi_level, &log_a, S::zero(), Some(b.beta), tol)?;
            (
                b.t,
                Some(sol.beta),
                sol.maximizer,
                Some(sol.integral_psi),
                Some(sol.pressure),
            )
        }
        SolutionCase::LowerEndpoint => (t_low, None, nu_low.clone(), None, None),
        SolutionCase::UpperEndpoint => (ext.upper, None, nu_up.clone(), None, None),
    };
    // The case label is about structure, not bookkeeping: an interior
    // optimum sitting within the endpoint tolerance of an extreme is
    // reported as that endpoint.
    let near = |a: S, b: S| (a - b).abs() <= tol.endpoint_t;
    let case = if near(t_star, ext.upper) {
        SolutionCase::UpperEndpoint
    } else if near(t_star, ext.lower) {
        SolutionCase::LowerEndpoint
    } else {
        winner
    };

    let diagnostics = CarpetDiagnostics {
        outer_residual,
        constraint_residual,
        tilted_pressure_residual,
        interior_candidate: interior,
        lower_candidate: d_low,
        upper_candidate: d_up,
        upper_certificate_residual,
        degenerate: false,
        feasible_grid_points: feasible,
        lower_cycle: ext.lower_cycle.clone(),
        upper_cycle: ext.upper_cycle.clone(),
        warnings,
    };
    Ok(FullDimensionReport {
        dimension,
        t_star,
        beta_star,
        nu_star,
        fiber_weights: fiber_weights_at(system, t_star),
        case,
        t_range: (ext.lower, ext.upper),
        trace,
        diagnostics,
    })
}

/// Hausdorff dimension of the canonical measure over a base measure:
/// `h(nu)/int psi d nu + t(nu)`.
pub fn measure_dimension<S: Scalar>(
    system: &CarpetSystem<S>,
    nu: &MarkovMeasure<S>,
    tol: &Tolerances<S>,
) -> Result<S, CarpetError<S>> {
    nu.check_compatible(&system.base)?;
    let h = shift::measure_entropy(&system.base, nu)?;
    let ipsi: S = system
        .psi
        .iter()
        .zip(&nu.stationary)
        .map(|(&v, &p)| v * p)
        .sum();
    let t = t_of_nu(system, nu, tol)?;
    Ok(h / ipsi + t)
}

/// Dimension of a product measure: row Markov measure `nu` together with an
/// independent column distribution per row.  `h(mu) = h(nu) + sum_i p(i)
/// H(weights_i)` exactly for this product structure.
pub fn ly_dimension<S: Scalar>(
    system: &CarpetSystem<S>,
    nu: &MarkovMeasure<S>,
    fiber_weights: &[Vec<S>],
    tol: &Tolerances<S>,
) -> Result<S, CarpetError<S>> {
    nu.check_compatible(&system.base)?;
    if fiber_weights.len() != system.rows.len() {
        return Err(CarpetError::BadWeights {
            row: fiber_weights.len(),
            reason: "one weight vector per row required".into(),
        });
    }
    let mut weights = Vec::with_capacity(fiber_weights.len());
    for (i, (w, row)) in fiber_weights.iter().zip(&system.rows).enumerate() {
        if w.len() != row.columns.len() {
            return Err(CarpetError::BadWeights {
                row: i,
                reason: format!("expected {} entries, got {}", row.columns.len(), w.len()),
            });
        }
        if w.iter().any(|&x| !x.is_finite() || x < S::zero()) {
            return Err(CarpetError::BadWeights {
                row: i,
                reason: "entries must be finite and nonnegative".into(),
            });
        }
        let sum: S = w.iter().copied().sum();
        if (sum - S::one()).abs() > tol.stationary.max(S::of(1e-6)) {
            return Err(CarpetError::BadWeights {
                row: i,
                reason: format!("entries sum to {}, expected 1", sum.lossy_f64()),
            });
        }
        weights.push(w.iter().map(|&x| x / sum).collect::<Vec<S>>());
    }
    let h_nu = shift::measure_entropy(&system.base, nu)?;
    let p = &nu.stationary;
    let fiber_entropy: S = weights
        .iter()
        .zip(p)
        .map(|(w, &pi)| pi * numerics::entropy_of(w))
        .sum();
    let int_psi: S = system.psi.iter().zip(p).map(|(&v, &q)| v * q).sum();
    let int_phi: S = weights
        .iter()
        .zip(&system.rows)
        .zip(p)
        .map(|((w, row), &pi)| {
            let mean: S = w.iter().zip(&row.phi).map(|(&x, &v)| x * v).sum();
            pi * mean
        })
        .sum();
    Ok(h_nu / int_psi + fiber_entropy / int_phi)
}

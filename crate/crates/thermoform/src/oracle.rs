//! Independent ground-truth generators: the closed-form dimension of
//! grid-aligned carpets, derivative-free search over product measures,
//! exhaustive cycle enumeration, and a brute-force grid over Markov chains.
//! Each oracle computes its answer by a route disjoint from the solvers it
//! checks, and ships a certificate that re-evaluates to the reported value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::carpet::{CarpetError, CarpetRow, CarpetSystem};
use crate::config::Tolerances;
use crate::graph;
use crate::numerics;
use crate::scalar::Scalar;
use crate::shift::{Potential, ShiftError, ShiftSpace};

/// Errors of the oracle layer.
#[derive(Debug, Clone, Error)]
pub enum OracleError<S: std::fmt::Display + std::fmt::Debug> {
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Carpet(#[from] CarpetError<S>),
    #[error("need column count > row count > 1, got l = {l}, m = {m}")]
    BadGrid { l: u64, m: u64 },
    #[error("need one count per row: {expected} rows, got {got} counts")]
    BadRowCounts { got: usize, expected: usize },
    #[error("row {row} selects {count} of {limit} columns")]
    RowCountTooLarge { row: usize, count: u64, limit: u64 },
    #[error("at least one row must select a column")]
    NoRectangles,
    #[error("the search requires a full-shift base")]
    FullShiftRequired,
    #[error("cycle enumeration is capped at length {limit}, got {got}")]
    MaxLenTooLarge { got: usize, limit: usize },
    #[error("no cycle of length at most {max_len} exists")]
    NoCycles { max_len: usize },
    #[error("enumeration guard tripped after {count} items (limit {limit})")]
    EnumerationGuard { count: usize, limit: usize },
    #[error("grid search supports at most {limit} symbols, got {got}")]
    TooManySymbols { got: usize, limit: usize },
    #[error("resolution must be in 1..={limit}, got {got}")]
    BadResolution { got: usize, limit: usize },
    #[error("grid would hold {points} matrices (guard {limit})")]
    GridTooLarge { points: u128, limit: usize },
    #[error("no grid measure reaches alpha = {alpha}; attained range [{lo}, {hi}]")]
    InfeasibleAlpha { alpha: S, lo: S, hi: S },
}

/// How an oracle value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    McmullenClosedForm,
    BernoulliSearch,
    CycleEnumeration,
    GridSearch,
}

/// Method-specific evidence; re-evaluating it reproduces the value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleCertificate<S> {
    /// Optimal per-rectangle weights of the closed form, row-major.
    ClosedForm { weights: Vec<S> },
    /// Winning per-rectangle weights of the direct search, row-major,
    /// with the RNG seed and start count that produced them.
    SearchWeights {
        seed: u64,
        starts: usize,
        weights: Vec<S>,
    },
    /// Witness cycles for both extremes of the mean weight.
    ExtremeCycles {
        min_cycle: Vec<usize>,
        min_mean: S,
        max_cycle: Vec<usize>,
        max_mean: S,
    },
    /// Two grid measures and the mixture coefficient matching the target
    /// average exactly; the value is the same mixture of their values.
    GridMixture {
        resolution: usize,
        alpha: S,
        support: [[S; 2]; 2],
        lambda: S,
    },
}

/// An independently computed reference value with its evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult<S> {
    pub value: S,
    pub method: OracleMethod,
    pub certificate: OracleCertificate<S>,
}

/// Closed-form dimension of the grid-aligned carpet on an `l x m` grid
/// (`l` columns, `m` rows) keeping `row_counts[i]` rectangles in row `i`:
/// `log_m sum_{r_i > 0} r_i^(log m / log l)`.
pub fn mcmullen_dimension<S: Scalar>(
    l: u64,
    m: u64,
    row_counts: &[u64],
) -> Result<OracleResult<S>, OracleError<S>> {
    if !(l > m && m > 1) {
        return Err(OracleError::BadGrid { l, m });
    }
    if row_counts.len() != m as usize {
        return Err(OracleError::BadRowCounts {
            got: row_counts.len(),
            expected: m as usize,
        });
    }
    for (row, &r) in row_counts.iter().enumerate() {
        if r > l {
            return Err(OracleError::RowCountTooLarge {
                row,
                count: r,
                limit: l,
            });
        }
    }
    if row_counts.iter().all(|&r| r == 0) {
        return Err(OracleError::NoRectangles);
    }
    let a = S::of(m as f64).ln() / S::of(l as f64).ln();
    let total: S = row_counts
        .iter()
        .filter(|&&r| r > 0)
        .map(|&r| S::of(r as f64).powf(a))
        .sum();
    let value = total.ln() / S::of(m as f64).ln();
    // Per-rectangle weights proportional to r_i^(a-1); the normalizer is
    // exactly the sum above.
    let mut weights = Vec::new();
    for &r in row_counts {
        if r > 0 {
            let w = S::of(r as f64).powf(a - S::one()) / total;
            weights.extend(std::iter::repeat_n(w, r as usize));
        }
    }
    Ok(OracleResult {
        value,
        method: OracleMethod::McmullenClosedForm,
        certificate: OracleCertificate::ClosedForm { weights },
    })
}

/// The carpet system realizing a grid-aligned instance: full shift over the
/// nonempty rows, all fiber exponents `log l`, all base exponents `log m`.
pub fn mcmullen_system<S: Scalar>(
    l: u64,
    m: u64,
    row_counts: &[u64],
) -> Result<CarpetSystem<S>, OracleError<S>> {
    // Reuse the closed form's validation.
    mcmullen_dimension::<S>(l, m, row_counts)?;
    let kept: Vec<u64> = row_counts.iter().copied().filter(|&r| r > 0).collect();
    let base = ShiftSpace::full(kept.len())?;
    let rows = kept
        .iter()
        .enumerate()
        .map(|(i, &r)| CarpetRow {
            row: i,
            columns: (0..r as usize).collect(),
            phi: vec![S::of(l as f64).ln(); r as usize],
        })
        .collect();
    let psi = vec![S::of(m as f64).ln(); kept.len()];
    Ok(CarpetSystem::new(base, rows, psi)?)
}

/// Product-measure dimension objective in closed form: row entropy over the
/// base exponent plus conditional column entropy over the fiber exponent.
/// `x` is a row-major distribution over all rectangles.
fn product_objective<S: Scalar>(rows: &[CarpetRow<S>], psi: &[S], x: &[S]) -> S {
    let mut h_row = S::zero();
    let mut int_psi = S::zero();
    let mut h_fiber = S::zero();
    let mut int_phi = S::zero();
    let mut k = 0usize;
    for (row, &psi_i) in rows.iter().zip(psi) {
        let width = row.columns.len();
        let cell = &x[k..k + width];
        let p: S = cell.iter().copied().sum();
        if p > S::zero() {
            h_row = h_row - p * p.ln();
            int_psi = int_psi + p * psi_i;
            for (&xi, &phi) in cell.iter().zip(&row.phi) {
                if xi > S::zero() {
                    // sum x ln(p/x) = p * H(x/p)
                    h_fiber = h_fiber + xi * (p / xi).ln();
                    int_phi = int_phi + xi * phi;
                }
            }
        }
        k += width;
    }
    let mut value = S::zero();
    if int_psi > S::zero() {
        value = value + h_row / int_psi;
    }
    if int_phi > S::zero() {
        value = value + h_fiber / int_phi;
    }
    value
}

/// One compass-search run on the rectangle simplex from a given start.
fn compass_search<S: Scalar>(rows: &[CarpetRow<S>], psi: &[S], start: Vec<S>) -> (S, Vec<S>) {
    let k = start.len();
    let mut x = start;
    let mut value = product_objective(rows, psi, &x);
    if k < 2 {
        return (value, x);
    }
    let mut step = S::of(0.25);
    let stop = S::of(1e-10);
    let mut evals = 0usize;
    while step >= stop && evals < 200_000 {
        let mut best: Option<(S, Vec<S>)> = None;
        for i in 0..k {
            for &sign in &[S::one(), -S::one()] {
                let mut y = x.clone();
                y[i] = (y[i] + sign * step).max(S::zero());
                let sum: S = y.iter().copied().sum();
                if sum <= S::zero() {
                    continue;
                }
                for v in &mut y {
                    *v = *v / sum;
                }
                let val = product_objective(rows, psi, &y);
                evals += 1;
                if val > value && best.as_ref().is_none_or(|(b, _)| val > *b) {
                    best = Some((val, y));
                }
            }
        }
        match best {
            Some((val, y)) => {
                value = val;
                x = y;
            }
            None => step = step * S::of(0.5),
        }
    }
    (value, x)
}

const SEARCH_STARTS: usize = 32;

/// Maximize the product-measure dimension over rectangle distributions by
/// multi-start compass search.  Requires a full-shift base, where product
/// measures are known to attain the full dimension.  Starts run in
/// parallel; the reduction is by value with ties broken by the lowest start
/// index, so the result does not depend on thread count.
pub fn bernoulli_search<S: Scalar>(
    system: &CarpetSystem<S>,
    seed: u64,
) -> Result<OracleResult<S>, OracleError<S>> {
    use rand::{Rng, SeedableRng};
    let base = system.base();
    let n = base.symbol_count();
    if !(0..n).all(|a| (0..n).all(|b| base.allowed(a, b))) {
        return Err(OracleError::FullShiftRequired);
    }
    let rows = system.rows();
    let k: usize = rows.iter().map(|r| r.columns.len()).sum();
    let uniform = vec![S::one() / S::of(k as f64); k];
    let results: Vec<(S, Vec<S>)> = (0..SEARCH_STARTS)
        .into_par_iter()
        .map(|idx| {
            let start = if idx == 0 {
                uniform.clone()
            } else {
                // Exponential spacings normalized to the simplex.
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
                let raw: Vec<S> = (0..k)
                    .map(|_| S::of(-rng.random::<f64>().max(1e-16).ln()))
                    .collect();
                let sum: S = raw.iter().copied().sum();
                raw.into_iter().map(|v| v / sum).collect()
            };
            compass_search(rows, system.psi(), start)
        })
        .collect();
    let mut best = 0usize;
    for i in 1..results.len() {
        if results[i].0 > results[best].0 {
            best = i;
        }
    }
    let (value, weights) = results[best].clone();
    Ok(OracleResult {
        value,
        method: OracleMethod::BernoulliSearch,
        certificate: OracleCertificate::SearchWeights {
            seed,
            starts: SEARCH_STARTS,
            weights,
        },
    })
}

const MAX_CYCLE_LEN: usize = 20;

/// Extreme mean weights over all simple cycles up to `max_len`; the value
/// is the maximal mean, and both witness cycles ride in the certificate.
pub fn cycle_enumeration<S: Scalar>(
    space: &ShiftSpace,
    psi: &Potential<S>,
    max_len: usize,
    tol: &Tolerances<S>,
) -> Result<OracleResult<S>, OracleError<S>> {
    if max_len == 0 || max_len > MAX_CYCLE_LEN {
        return Err(OracleError::MaxLenTooLarge {
            got: max_len,
            limit: MAX_CYCLE_LEN,
        });
    }
    let values = psi.as_depth1(space)?;
    let mut count = 0usize;
    let mut min: Option<(S, Vec<usize>)> = None;
    let mut max: Option<(S, Vec<usize>)> = None;
    let completed = graph::for_each_simple_cycle(space, max_len, |cycle| {
        count += 1;
        if count > tol.enumeration_guard {
            return false;
        }
        let total: S = cycle.iter().map(|&v| values[v]).sum();
        let mean = total / S::of(cycle.len() as f64);
        if min.as_ref().is_none_or(|(m, _)| mean < *m) {
            min = Some((mean, cycle.to_vec()));
        }
        if max.as_ref().is_none_or(|(m, _)| mean > *m) {
            max = Some((mean, cycle.to_vec()));
        }
        true
    });
    if !completed {
        return Err(OracleError::EnumerationGuard {
            count,
            limit: tol.enumeration_guard,
        });
    }
    let (min_mean, min_cycle) = min.ok_or(OracleError::NoCycles { max_len })?;
    let (max_mean, max_cycle) = max.unwrap();
    Ok(OracleResult {
        value: max_mean,
        method: OracleMethod::CycleEnumeration,
        certificate: OracleCertificate::ExtremeCycles {
            min_cycle,
            min_mean,
            max_cycle,
            max_mean,
        },
    })
}

const MAX_GRID_SYMBOLS: usize = 3;
const MAX_RESOLUTION: usize = 200;

/// All distributions of `res` units over `parts` slots, as probabilities.
fn compositions<S: Scalar>(res: usize, parts: usize) -> Vec<Vec<S>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; parts];
    fn rec<S: Scalar>(
        res_left: usize,
        slot: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<S>>,
        res: usize,
    ) {
        if slot + 1 == current.len() {
            current[slot] = res_left;
            out.push(
                current
                    .iter()
                    .map(|&k| S::of(k as f64) / S::of(res as f64))
                    .collect(),
            );
            return;
        }
        for k in 0..=res_left {
            current[slot] = k;
            rec(res_left - k, slot + 1, current, out, res);
        }
    }
    rec(res, 0, &mut current, &mut out, res);
    out
}

/// Brute-force lower bound for the constrained variational value: grid the
/// stochastic matrices of the shift, collect `(int psi, h + int phi)` for
/// every stationary chain, and evaluate the upper concave envelope of that
/// cloud at `alpha`.  Mixtures of invariant measures are invariant and
/// entropy is affine, so every envelope point is attained by a genuine
/// measure with the exact constraint value: the result is a true lower
/// bound, never an overestimate.
pub fn constrained_grid_search<S: Scalar>(
    space: &ShiftSpace,
    phi: &Potential<S>,
    psi: &Potential<S>,
    alpha: S,
    resolution: usize,
    tol: &Tolerances<S>,
) -> Result<OracleResult<S>, OracleError<S>> {
    let n = space.symbol_count();
    if n > MAX_GRID_SYMBOLS {
        return Err(OracleError::TooManySymbols {
            got: n,
            limit: MAX_GRID_SYMBOLS,
        });
    }
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(OracleError::BadResolution {
            got: resolution,
            limit: MAX_RESOLUTION,
        });
    }
    let phi_v = phi.as_depth1(space)?;
    let psi_v = psi.as_depth1(space)?;
    let successors: Vec<Vec<usize>> = (0..n)
        .map(|a| (0..n).filter(|&b| space.allowed(a, b)).collect())
        .collect();
    let mut points: u128 = 1;
    for succ in &successors {
        let rows = compositions::<S>(resolution, succ.len()).len() as u128;
        points = points.saturating_mul(rows);
        if points > tol.enumeration_guard as u128 {
            return Err(OracleError::GridTooLarge {
                points,
                limit: tol.enumeration_guard,
            });
        }
    }
    let row_choices: Vec<Vec<Vec<S>>> = successors
        .iter()
        .map(|succ| compositions::<S>(resolution, succ.len()))
        .collect();

    // Enumerate the product of per-row choices.
    let mut cloud: Vec<(S, S)> = Vec::new();
    let mut pick = vec![0usize; n];
    loop {
        let mut q = vec![S::zero(); n * n];
        for a in 0..n {
            for (slot, &b) in successors[a].iter().enumerate() {
                q[a * n + b] = row_choices[a][pick[a]][slot];
            }
        }
        if let Some(p) = numerics::stationary_vector(n, &q) {
            let mut h = S::zero();
            let mut int_phi = S::zero();
            let mut int_psi = S::zero();
            for a in 0..n {
                int_phi = int_phi + p[a] * phi_v[a];
                int_psi = int_psi + p[a] * psi_v[a];
                for b in 0..n {
                    let qq = q[a * n + b];
                    if qq > S::zero() {
                        h = h - p[a] * qq * qq.ln();
                    }
                }
            }
            cloud.push((int_psi, h + int_phi));
        }
        // Odometer increment.
        let mut a = 0;
        loop {
            if a == n {
                break;
            }
            pick[a] += 1;
            if pick[a] < row_choices[a].len() {
                break;
            }
            pick[a] = 0;
            a += 1;
        }
        if a == n {
            break;
        }
    }

    cloud.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let lo = cloud.first().unwrap().0;
    let hi = cloud.last().unwrap().0;
    if alpha < lo || alpha > hi {
        return Err(OracleError::InfeasibleAlpha { alpha, lo, hi });
    }
    // Upper concave envelope (monotone chain over the sorted cloud).
    let mut hull: Vec<(S, S)> = Vec::new();
    for &(x, y) in &cloud {
        if let Some(&(px, py)) = hull.last() {
            if x == px {
                if y > py {
                    hull.pop();
                } else {
                    continue;
                }
            }
        }
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // Keep the middle point only if it lies strictly above the
            // chord from its neighbors.
            if (y2 - y1) * (x - x1) <= (y - y1) * (x2 - x1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    let seg = hull.partition_point(|&(x, _)| x < alpha);
    let ((x1, y1), (x2, y2), lambda) = if seg < hull.len() && hull[seg].0 == alpha {
        (hull[seg], hull[seg], S::one())
    } else {
        let right = hull[seg.min(hull.len() - 1)];
        let left = hull[seg.saturating_sub(1)];
        let lambda = if right.0 == left.0 {
            S::one()
        } else {
            (right.0 - alpha) / (right.0 - left.0)
        };
        (left, right, lambda)
    };
    let value = lambda * y1 + (S::one() - lambda) * y2;
    Ok(OracleResult {
        value,
        method: OracleMethod::GridSearch,
        certificate: OracleCertificate::GridMixture {
            resolution,
            alpha,
            support: [[x1, y1], [x2, y2]],
            lambda,
        },
    })
}

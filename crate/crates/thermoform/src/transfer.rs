//! Transfer operators for depth-1 potentials: topological pressure,
//! equilibrium states, Gibbs ratio diagnostics, and the asymptotic
//! covariance form.
//!
//! The weight convention puts `exp(phi(a))` on the source vertex of the edge
//! `a -> b`, matching Birkhoff sums that read the first symbol of a word.
//! Matrices are scaled by `exp(-max phi)` internally so that large potential
//! values (which arise transiently inside root finding) cannot overflow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::numerics::{self, PerronData};
use crate::scalar::Scalar;
use crate::shift::{MarkovMeasure, Potential, ShiftError, ShiftSpace};

/// Errors of the transfer layer.
#[derive(Debug, Clone, Error)]
pub enum TransferError {
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error("transition matrix is not primitive; pressure needs a mixing shift")]
    NotPrimitive,
    #[error("power iteration stalled after {iterations} iterations (residual {residual:e})")]
    PowerIteration { iterations: usize, residual: f64 },
    #[error("cylinder enumeration would visit {count} words, over the guard {limit}")]
    EnumerationGuard { count: u64, limit: usize },
    #[error("potential must be strictly positive for the Bowen equation")]
    PsiNotPositive,
    #[error("root finding failed: {0}")]
    Root(String),
}

/// The weighted transition matrix `B(a,b) = A(a,b) exp(phi(a))`, stored with
/// an explicit log-scale so entries stay representable.
#[derive(Debug, Clone)]
pub struct TransferMatrix<S> {
    n: usize,
    /// Row-major entries of `B * exp(-log_scale)`.
    scaled: Vec<S>,
    /// `max phi`; the Perron root of `B` is `exp(log_scale)` times the
    /// Perron root of the scaled matrix.
    log_scale: S,
}

impl<S: Scalar> TransferMatrix<S> {
    pub fn new(space: &ShiftSpace, phi: &Potential<S>) -> Result<Self, TransferError> {
        let values = phi.as_depth1(space)?;
        Ok(Self::from_values(space, &values))
    }

    pub(crate) fn from_values(space: &ShiftSpace, phi: &[S]) -> Self {
        let n = space.symbol_count();
        let shift = phi.iter().copied().fold(S::neg_infinity(), S::max);
        let mut scaled = vec![S::zero(); n * n];
        for a in 0..n {
            let w = (phi[a] - shift).exp();
            for b in 0..n {
                if space.allowed(a, b) {
                    scaled[a * n + b] = w;
                }
            }
        }
        TransferMatrix {
            n,
            scaled,
            log_scale: shift,
        }
    }

    pub fn symbol_count(&self) -> usize {
        self.n
    }

    /// `log B(a,b)`, or `-inf` on a forbidden transition.
    pub fn log_entry(&self, a: usize, b: usize) -> S {
        self.scaled[a * self.n + b].ln() + self.log_scale
    }

    fn perron(&self, tol: &Tolerances<S>) -> Result<PerronData<S>, TransferError> {
        numerics::perron(self.n, &self.scaled, tol).map_err(|e| TransferError::PowerIteration {
            iterations: e.iterations,
            residual: e.residual,
        })
    }
}

/// Equilibrium data of a depth-1 potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport<S> {
    pub pressure: S,
    pub measure: MarkovMeasure<S>,
    pub entropy: S,
    pub integral_phi: S,
    /// Left Perron eigenvector, positive, L1-normalized.
    pub left_eigvec: Vec<S>,
    /// Right Perron eigenvector, positive, L1-normalized.
    pub right_eigvec: Vec<S>,
    /// Lower Gibbs constant over all boundary symbol pairs.
    pub gibbs_lower: S,
    /// Upper Gibbs constant over all boundary symbol pairs.
    pub gibbs_upper: S,
}

/// Eigendata and the induced Markov chain, shared by the solvers.
#[derive(Debug, Clone)]
pub(crate) struct EquilibriumCore<S> {
    pub pressure: S,
    pub left: Vec<S>,
    pub right: Vec<S>,
    pub stochastic: Vec<Vec<S>>,
    pub stationary: Vec<S>,
}

fn require_mixing(space: &ShiftSpace) -> Result<(), TransferError> {
    if space.is_mixing() {
        Ok(())
    } else {
        Err(TransferError::NotPrimitive)
    }
}

/// Topological pressure `P(phi)` as the log Perron root of the transfer
/// matrix.  Requires a mixing shift and a depth-1 potential.
pub fn pressure<S: Scalar>(
    space: &ShiftSpace,
    phi: &Potential<S>,
    tol: &Tolerances<S>,
) -> Result<S, TransferError> {
    let values = phi.as_depth1(space)?;
    pressure_vec(space, &values, tol)
}

pub(crate) fn pressure_vec<S: Scalar>(
    space: &ShiftSpace,
    phi: &[S],
    tol: &Tolerances<S>,
) -> Result<S, TransferError> {
    require_mixing(space)?;
    let tm = TransferMatrix::from_values(space, phi);
    let eigen = tm.perron(tol)?;
    Ok(tm.log_scale + eigen.lambda.ln())
}

pub(crate) fn equilibrium_core<S: Scalar>(
    space: &ShiftSpace,
    phi: &[S],
    tol: &Tolerances<S>,
) -> Result<EquilibriumCore<S>, TransferError> {
    require_mixing(space)?;
    let n = space.symbol_count();
    let tm = TransferMatrix::from_values(space, phi);
    let eigen = tm.perron(tol)?;
    // q(a,b) = B(a,b) v(b) / (B v)(a); the scale cancels and rows are
    // renormalized so the chain is exactly stochastic.
    let mut stochastic = vec![vec![S::zero(); n]; n];
    for a in 0..n {
        let mut row_sum = S::zero();
        for b in 0..n {
            let w = tm.scaled[a * n + b] * eigen.right[b];
            stochastic[a][b] = w;
            row_sum = row_sum + w;
        }
        for b in 0..n {
            stochastic[a][b] = stochastic[a][b] / row_sum;
        }
    }
    let flat: Vec<S> = stochastic.iter().flatten().copied().collect();
    let stationary = numerics::stationary_vector(n, &flat).ok_or_else(|| {
        TransferError::Root("no stationary vector for the equilibrium chain".into())
    })?;
    Ok(EquilibriumCore {
        pressure: tm.log_scale + eigen.lambda.ln(),
        left: eigen.left,
        right: eigen.right,
        stochastic,
        stationary,
    })
}

/// Equilibrium state of a depth-1 potential, with eigendata and the Gibbs
/// constants implied by the eigenvectors.
pub fn equilibrium<S: Scalar>(
    space: &ShiftSpace,
    phi: &Potential<S>,
    tol: &Tolerances<S>,
) -> Result<EquilibriumReport<S>, TransferError> {
    let values = phi.as_depth1(space)?;
    equilibrium_vec(space, &values, tol)
}

pub(crate) fn equilibrium_vec<S: Scalar>(
    space: &ShiftSpace,
    phi: &[S],
    tol: &Tolerances<S>,
) -> Result<EquilibriumReport<S>, TransferError> {
    let core = equilibrium_core(space, phi, tol)?;
    let n = space.symbol_count();
    let measure = MarkovMeasure::with_stationary(
        space,
        core.stochastic.clone(),
        core.stationary.clone(),
        tol,
    )
    .map_err(TransferError::Shift)?;
    let entropy = crate::shift::measure_entropy(space, &measure)?;
    let integral_phi: S = phi
        .iter()
        .zip(&measure.stationary)
        .map(|(&v, &p)| v * p)
        .sum();
    // Cylinder ratio mu[w] / exp(-P n + S_n phi) telescopes to
    // lambda u(first) v(last) exp(-phi(last)) / <u, v>, so the sharp
    // constants come from extremizing over boundary symbol pairs.
    let z: S = core
        .left
        .iter()
        .zip(&core.right)
        .map(|(&u, &v)| u * v)
        .sum();
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for a in 0..n {
        for b in 0..n {
            let log_r = core.pressure + core.left[a].ln() + core.right[b].ln() - phi[b] - z.ln();
            lo = lo.min(log_r);
            hi = hi.max(log_r);
        }
    }
    Ok(EquilibriumReport {
        pressure: core.pressure,
        measure,
        entropy,
        integral_phi,
        left_eigvec: core.left,
        right_eigvec: core.right,
        gibbs_lower: lo.exp(),
        gibbs_upper: hi.exp(),
    })
}

/// Result of a cylinder-by-cylinder Gibbs ratio sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GibbsRatioCheck<S> {
    pub min_ratio: S,
    pub max_ratio: S,
    /// `(min, max)` of the ratio over cylinders of each length `1..=max_len`.
    pub per_length: Vec<(S, S)>,
}

/// Ratios `mu[w] / exp(-P |w| + S_|w| phi(w))` over every allowed cylinder of
/// length `1..=max_len`.  The enumeration is guarded against blowup.
pub fn gibbs_ratio_check<S: Scalar>(
    space: &ShiftSpace,
    phi: &Potential<S>,
    report: &EquilibriumReport<S>,
    max_len: usize,
    tol: &Tolerances<S>,
) -> Result<GibbsRatioCheck<S>, TransferError> {
    let values = phi.as_depth1(space)?;
    report.measure.check_compatible(space)?;
    let total: u64 = space
        .word_counts(max_len)
        .iter()
        .fold(0u64, |a, &b| a.saturating_add(b));
    if total > tol.enumeration_guard as u64 {
        return Err(TransferError::EnumerationGuard {
            count: total,
            limit: tol.enumeration_guard,
        });
    }
    let n = space.symbol_count();
    let mut per_length = vec![(S::infinity(), S::neg_infinity()); max_len];
    // DFS over allowed words carrying log mu and the Birkhoff sum.
    let mut stack: Vec<(usize, usize, S, S)> = Vec::new();
    for a in 0..n {
        let p = report.measure.stationary[a];
        if p > S::zero() {
            stack.push((a, 1, p.ln(), values[a]));
        }
    }
    while let Some((last, len, log_mu, birkhoff)) = stack.pop() {
        let log_ratio = log_mu + report.pressure * S::of(len as f64) - birkhoff;
        let r = log_ratio.exp();
        let slot = &mut per_length[len - 1];
        slot.0 = slot.0.min(r);
        slot.1 = slot.1.max(r);
        if len < max_len {
            for b in 0..n {
                let q = report.measure.stochastic[last][b];
                if space.allowed(last, b) && q > S::zero() {
                    stack.push((b, len + 1, log_mu + q.ln(), birkhoff + values[b]));
                }
            }
        }
    }
    let min_ratio = per_length
        .iter()
        .map(|&(lo, _)| lo)
        .fold(S::infinity(), S::min);
    let max_ratio = per_length
        .iter()
        .map(|&(_, hi)| hi)
        .fold(S::neg_infinity(), S::max);
    Ok(GibbsRatioCheck {
        min_ratio,
        max_ratio,
        per_length,
    })
}

/// Truncated asymptotic covariance with a spectral tail estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QFormEstimate<S> {
    pub value: S,
    pub truncation_n: usize,
    /// Geometric bound on the discarded tail, from the subdominant
    /// eigenvalue of the equilibrium chain.  Diagnostic only.
    pub tail_bound: S,
}

/// The bilinear form `sum_n ( int h1 (h2 o T^n) - int h1 int h2 )` for the
/// equilibrium state of `h_base`, truncated at `truncation` (inclusive).
pub fn q_form<S: Scalar>(
    space: &ShiftSpace,
    h_base: &Potential<S>,
    h1: &Potential<S>,
    h2: &Potential<S>,
    truncation: usize,
    tol: &Tolerances<S>,
) -> Result<QFormEstimate<S>, TransferError> {
    let base = h_base.as_depth1(space)?;
    let f = h1.as_depth1(space)?;
    let g = h2.as_depth1(space)?;
    let core = equilibrium_core(space, &base, tol)?;
    let n = space.symbol_count();
    let p = &core.stationary;
    let i1: S = f.iter().zip(p).map(|(&a, &b)| a * b).sum();
    let i2: S = g.iter().zip(p).map(|(&a, &b)| a * b).sum();
    let mut w = g.clone();
    let mut value = S::zero();
    let mut recent = [S::zero(); 3];
    for step in 0..=truncation {
        let term: S = (0..n).map(|a| p[a] * f[a] * w[a]).sum::<S>() - i1 * i2;
        value = value + term;
        recent[step % 3] = term.abs();
        if step < truncation {
            let mut next = vec![S::zero(); n];
            for (a, slot) in next.iter_mut().enumerate() {
                *slot = (0..n).map(|b| core.stochastic[a][b] * w[b]).sum();
            }
            w = next;
        }
    }
    let s = subdominant_modulus(n, &core.stochastic, p);
    let cap = recent.iter().copied().fold(S::zero(), S::max);
    let tail_bound = if s < S::one() {
        cap * s / (S::one() - s)
    } else {
        S::infinity()
    };
    Ok(QFormEstimate {
        value,
        truncation_n: truncation,
        tail_bound,
    })
}

/// Modulus of the subdominant eigenvalue of a stochastic matrix, by power
/// iteration on the deflated operator `Q - 1 p^T`.  Used only for tail
/// bounds, never for reported values.
fn subdominant_modulus<S: Scalar>(n: usize, q: &[Vec<S>], p: &[S]) -> S {
    if n == 1 {
        return S::zero();
    }
    let mut x: Vec<S> = (0..n)
        .map(|i| if i % 2 == 0 { S::one() } else { -S::one() })
        .collect();
    let steps = 80;
    let tail = 40;
    let mut log_ratio_sum = S::zero();
    let mut counted = 0usize;
    for step in 0..steps {
        let dot: S = p.iter().zip(&x).map(|(&a, &b)| a * b).sum();
        let mut y = vec![S::zero(); n];
        for (a, slot) in y.iter_mut().enumerate() {
            let qa: S = (0..n).map(|b| q[a][b] * x[b]).sum();
            *slot = qa - dot;
        }
        let norm = y.iter().map(|v| v.abs()).fold(S::zero(), S::max);
        if !(norm > S::zero()) {
            return S::zero();
        }
        if step >= steps - tail {
            log_ratio_sum = log_ratio_sum + norm.ln();
            counted += 1;
        }
        for v in &mut y {
            *v = *v / norm;
        }
        x = y;
    }
    let s = (log_ratio_sum / S::of(counted as f64)).exp();
    s.min(S::one() - S::of(1e-9)).max(S::zero())
}

/// Root `s` of the Bowen equation `P(-s psi) = 0` for strictly positive
/// `psi`; the map is strictly decreasing so bracketed descent applies.
pub fn bowen_root<S: Scalar>(
    space: &ShiftSpace,
    psi: &Potential<S>,
    tol: &Tolerances<S>,
) -> Result<S, TransferError> {
    let values = psi.as_depth1(space)?;
    bowen_root_vec(space, &values, tol)
}

pub(crate) fn bowen_root_vec<S: Scalar>(
    space: &ShiftSpace,
    psi: &[S],
    tol: &Tolerances<S>,
) -> Result<S, TransferError> {
    if psi.iter().any(|&v| !(v > S::zero())) {
        return Err(TransferError::PsiNotPositive);
    }
    require_mixing(space)?;
    let mut failure: Option<TransferError> = None;
    let result = numerics::decreasing_root(
        |s| {
            let shifted: Vec<S> = psi.iter().map(|&v| -s * v).collect();
            match pressure_vec(space, &shifted, tol) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    S::nan()
                }
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
    match result {
        Ok(r) => Ok(r.x),
        Err(e) => Err(TransferError::Root(format!("{e}"))),
    }
}

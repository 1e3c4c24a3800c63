//! Birkhoff level sets: the attainable range of ergodic averages, and the
//! constrained variational problem on a level set solved through its
//! Lagrange parameter.
//!
//! For a depth-1 `psi` the set of ergodic averages is the closed interval
//! between the minimal and maximal cycle means of the transition graph.  For
//! `alpha` strictly inside, the level-set pressure is
//! `inf_beta ( P(phi + beta psi) - beta alpha )`, and the infimum is attained
//! at the unique `beta` where the equilibrium state of `phi + beta psi` has
//! `psi`-average exactly `alpha`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::graph;
use crate::numerics;
use crate::scalar::Scalar;
use crate::shift::{MarkovMeasure, Potential, ShiftError, ShiftSpace};
use crate::transfer::{self, EquilibriumCore, TransferError};

/// The attainable range of Birkhoff averages of a depth-1 potential,
/// with extremal cycles as certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BirkhoffRange<S> {
    pub lower: S,
    pub upper: S,
    /// A simple cycle attaining the minimal mean.
    pub lower_cycle: Vec<usize>,
    /// A simple cycle attaining the maximal mean.
    pub upper_cycle: Vec<usize>,
}

impl<S: Scalar> BirkhoffRange<S> {
    fn scale(&self) -> S {
        S::one().max(self.lower.abs()).max(self.upper.abs())
    }

    /// True when every invariant measure has the same average, i.e. the
    /// range is a single point up to numerical width.
    pub fn is_degenerate(&self, tol: &Tolerances<S>) -> bool {
        self.upper - self.lower <= tol.degenerate_span * self.scale()
    }

    /// True when `alpha` lies strictly inside with a safety margin; only
    /// such levels admit a finite Lagrange parameter.
    pub fn contains_interior(&self, alpha: S, tol: &Tolerances<S>) -> bool {
        let margin = tol.interior_margin * self.scale();
        alpha > self.lower + margin && alpha < self.upper - margin
    }
}

/// Errors of the level-set layer.
#[derive(Debug, Clone, Error)]
pub enum LevelSetError<S: std::fmt::Display + std::fmt::Debug> {
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(
        "level {alpha} is outside the interior of the Birkhoff range [{lower}, {upper}]",
        lower = .range.lower,
        upper = .range.upper
    )]
    AlphaOutsideRange { alpha: S, range: BirkhoffRange<S> },
    #[error("every invariant measure has average {value}; the level-set family is degenerate")]
    DegenerateRange { value: S },
    #[error("Lagrange parameter search failed: {0}")]
    Root(String),
}

/// Extremal Birkhoff averages of a depth-1 potential over all invariant
/// measures, certified by minimal and maximal mean cycles.
pub fn birkhoff_range<S: Scalar>(
    space: &ShiftSpace,
    psi: &Potential<S>,
    tol: &Tolerances<S>,
) -> Result<BirkhoffRange<S>, LevelSetError<S>> {
    let values = psi.as_depth1(space)?;
    birkhoff_range_vec(space, &values, tol)
}

pub(crate) fn birkhoff_range_vec<S: Scalar>(
    space: &ShiftSpace,
    psi: &[S],
    tol: &Tolerances<S>,
) -> Result<BirkhoffRange<S>, LevelSetError<S>> {
    let lo = graph::min_mean_cycle(space, psi);
    let hi = graph::max_mean_cycle(space, psi);
    let scale = S::one().max(lo.mean.abs()).max(hi.mean.abs());
    // The witness means are exact cycle averages; they must reproduce the
    // dynamic-programming values far more tightly than the feasibility
    // margin that consumes the endpoints, or the extraction went wrong.
    let guard = tol.interior_margin * S::of(100.0) * scale;
    if (lo.mean - lo.karp_value).abs() > guard || (hi.mean - hi.karp_value).abs() > guard {
        return Err(LevelSetError::Root(
            "extremal cycle witnesses disagree with the mean-cycle values".into(),
        ));
    }
    Ok(BirkhoffRange {
        lower: lo.mean,
        upper: hi.mean,
        lower_cycle: lo.cycle,
        upper_cycle: hi.cycle,
    })
}

/// Solution of the constrained problem on one level set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetSolution<S> {
    pub alpha: S,
    /// Lagrange parameter: the minimizer of `P(phi + b psi) - b alpha`.
    pub beta: S,
    /// Pressure of the level set, `P(phi + beta psi) - beta alpha`.
    pub pressure: S,
    /// Equilibrium state of `phi + beta psi`; it maximizes `h + int phi`
    /// among invariant measures with `int psi = alpha`.
    pub maximizer: MarkovMeasure<S>,
    /// Entropy of the maximizer.
    pub entropy: S,
    /// `int phi` under the maximizer.
    pub integral_phi: S,
    /// `int psi` under the maximizer; equals `alpha` up to the root target.
    pub integral_psi: S,
}

/// Solve the level-set problem at one `alpha` (depth-1 potentials only;
/// recode deeper potentials to a higher-block shift first).
pub fn solve_beta<S: Scalar>(
    space: &ShiftSpace,
    phi: &Potential<S>,
    psi: &Potential<S>,
    alpha: S,
    tol: &Tolerances<S>,
) -> Result<LevelSetSolution<S>, LevelSetError<S>> {
    let phi_v = phi.as_depth1(space)?;
    let psi_v = psi.as_depth1(space)?;
    solve_beta_vec(space, &phi_v, &psi_v, alpha, None, tol)
}

/// Average of `psi` under the equilibrium state of `phi + beta psi`.
fn tilted_average<S: Scalar>(
    space: &ShiftSpace,
    phi: &[S],
    psi: &[S],
    beta: S,
    tol: &Tolerances<S>,
) -> Result<EquilibriumCore<S>, TransferError> {
    let tilted: Vec<S> = phi.iter().zip(psi).map(|(&f, &g)| f + beta * g).collect();
    transfer::equilibrium_core(space, &tilted, tol)
}

pub(crate) fn solve_beta_vec<S: Scalar>(
    space: &ShiftSpace,
    phi: &[S],
    psi: &[S],
    alpha: S,
    warm_start: Option<S>,
    tol: &Tolerances<S>,
) -> Result<LevelSetSolution<S>, LevelSetError<S>> {
    let range = birkhoff_range_vec(space, psi, tol)?;
    if range.is_degenerate(tol) {
        return Err(LevelSetError::DegenerateRange {
            value: (range.lower + range.upper) * S::of(0.5),
        });
    }
    if !range.contains_interior(alpha, tol) {
        return Err(LevelSetError::AlphaOutsideRange { alpha, range });
    }
    let mut failure: Option<TransferError> = None;
    let center = warm_start.unwrap_or(S::zero());
    let result = numerics::increasing_root(
        |beta| match tilted_average(space, phi, psi, beta, tol) {
            Ok(core) => {
                let avg: S = psi.iter().zip(&core.stationary).map(|(&v, &p)| v * p).sum();
                avg - alpha
            }
            Err(e) => {
                failure = Some(e);
                S::nan()
            }
        },
        center - S::one(),
        center + S::one(),
        true,
        tol.beta_root,
        tol.max_root_iterations,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    let beta = match result {
        Ok(r) => r.x,
        Err(e) => return Err(LevelSetError::Root(format!("{e}"))),
    };
    let core = tilted_average(space, phi, psi, beta, tol)?;
    let maximizer = MarkovMeasure::with_stationary(space, core.stochastic, core.stationary, tol)?;
    let entropy = crate::shift::measure_entropy(space, &maximizer)?;
    let integral_phi: S = phi
        .iter()
        .zip(&maximizer.stationary)
        .map(|(&v, &p)| v * p)
        .sum();
    let integral_psi: S = psi
        .iter()
        .zip(&maximizer.stationary)
        .map(|(&v, &p)| v * p)
        .sum();
    Ok(LevelSetSolution {
        alpha,
        beta,
        pressure: core.pressure - beta * alpha,
        maximizer,
        entropy,
        integral_phi,
        integral_psi,
    })
}

/// Outcome at a single level of a spectrum sweep: a level inside the
/// achievable range may still fail individually without sinking the others.
pub type SpectrumPoint<S> = Result<LevelSetSolution<S>, LevelSetError<S>>;

/// Solve the level-set problem over a grid of levels.  Points are
/// independent; each is solved from a cold start so the result does not
/// depend on evaluation order or thread count.
pub fn levelset_spectrum<S: Scalar>(
    space: &ShiftSpace,
    phi: &Potential<S>,
    psi: &Potential<S>,
    alphas: &[S],
    tol: &Tolerances<S>,
) -> Result<Vec<SpectrumPoint<S>>, LevelSetError<S>> {
    use rayon::prelude::*;
    let phi_v = phi.as_depth1(space)?;
    let psi_v = psi.as_depth1(space)?;
    Ok(alphas
        .par_iter()
        .map(|&alpha| solve_beta_vec(space, &phi_v, &psi_v, alpha, None, tol))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    type S = f64;

    fn tol() -> Tolerances<S> {
        Tolerances::default()
    }

    fn golden() -> ShiftSpace {
        ShiftSpace::new(vec![vec![1, 1], vec![1, 0]]).unwrap()
    }

    fn depth1(space: &ShiftSpace, v: &[f64]) -> Potential<S> {
        Potential::depth1(space, v).unwrap()
    }

    #[test]
    fn golden_mean_range_and_witnesses() {
        let space = golden();
        let psi = depth1(&space, &[0.0, 1.0]);
        let r = birkhoff_range(&space, &psi, &tol()).unwrap();
        assert!(r.lower.abs() < 1e-15);
        assert!((r.upper - 0.5).abs() < 1e-15);
        assert_eq!(r.lower_cycle, vec![0]);
        assert_eq!(r.upper_cycle.len(), 2);
        assert!(!r.is_degenerate(&tol()));
    }

    #[test]
    fn constant_potential_range_is_degenerate() {
        let space = golden();
        let psi = depth1(&space, &[2.5, 2.5]);
        let r = birkhoff_range(&space, &psi, &tol()).unwrap();
        assert!(r.is_degenerate(&tol()));
        let phi = depth1(&space, &[0.0, 0.0]);
        let err = solve_beta(&space, &phi, &psi, 2.5, &tol()).unwrap_err();
        assert!(matches!(err, LevelSetError::DegenerateRange { .. }));
    }

    #[test]
    fn full_shift_closed_form() {
        // On the full 2-shift with phi = 0 and psi = indicator of symbol 1,
        // the maximizer on the level alpha is Bernoulli(1-alpha, alpha), so
        // beta = log(alpha/(1-alpha)) and the pressure is the entropy.
        let space = ShiftSpace::full(2).unwrap();
        let phi = depth1(&space, &[0.0, 0.0]);
        let psi = depth1(&space, &[0.0, 1.0]);
        let t = tol();
        for &alpha in &[0.25, 0.5, 0.75] {
            let sol = solve_beta(&space, &phi, &psi, alpha, &t).unwrap();
            let beta_true = (alpha / (1.0 - alpha)).ln();
            let h_true = -alpha * alpha.ln() - (1.0 - alpha) * (1.0 - alpha).ln();
            assert!((sol.beta - beta_true).abs() < 1e-10, "beta at {alpha}");
            assert!((sol.pressure - h_true).abs() < 1e-10, "pressure at {alpha}");
            assert!((sol.entropy - h_true).abs() < 1e-10);
            assert!((sol.integral_psi - alpha).abs() < 1e-10);
            assert!((sol.maximizer.stationary[1] - alpha).abs() < 1e-10);
        }
    }

    #[test]
    fn levels_outside_the_range_are_rejected() {
        let space = golden();
        let phi = depth1(&space, &[0.0, 0.0]);
        let psi = depth1(&space, &[0.0, 1.0]);
        let t = tol();
        for alpha in [-0.25, 0.0, 0.5, 0.8] {
            let err = solve_beta(&space, &phi, &psi, alpha, &t).unwrap_err();
            match err {
                LevelSetError::AlphaOutsideRange { range, .. } => {
                    assert_eq!(range.lower_cycle, vec![0]);
                    assert_eq!(range.upper_cycle.len(), 2);
                }
                other => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn spectrum_is_concave_and_peaks_at_the_free_average() {
        let space = golden();
        let phi = depth1(&space, &[0.0, 0.0]);
        let psi = depth1(&space, &[0.0, 1.0]);
        let t = tol();
        let alphas: Vec<f64> = (1..25).map(|i| 0.02 * i as f64).collect();
        let sols = levelset_spectrum(&space, &phi, &psi, &alphas, &t).unwrap();
        let values: Vec<f64> = sols.iter().map(|r| r.as_ref().unwrap().pressure).collect();
        for w in values.windows(3) {
            // Midpoint above the chord: concavity on the uniform grid.
            assert!(w[1] >= (w[0] + w[2]) / 2.0 - 1e-9);
        }
        // The unconstrained equilibrium (Parry measure) sits on the level
        // alpha* = 1/(phi_g^2 + 1); the constrained pressure there equals
        // the full pressure.
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let alpha_star = 1.0 / (g * g + 1.0);
        let sol = solve_beta(&space, &phi, &psi, alpha_star, &t).unwrap();
        assert!(sol.beta.abs() < 1e-9);
        assert!((sol.pressure - g.ln()).abs() < 1e-10);
        let below = solve_beta(&space, &phi, &psi, alpha_star - 0.05, &t).unwrap();
        let above = solve_beta(&space, &phi, &psi, alpha_star + 0.05, &t).unwrap();
        assert!(below.pressure < sol.pressure);
        assert!(above.pressure < sol.pressure);
    }

    #[test]
    fn spectrum_matches_pointwise_solves() {
        let space = golden();
        let phi = depth1(&space, &[0.3, -0.2]);
        let psi = depth1(&space, &[0.0, 1.0]);
        let t = tol();
        let alphas = [0.1, 0.2, 0.3, 0.4];
        let sols = levelset_spectrum(&space, &phi, &psi, &alphas, &t).unwrap();
        for (&alpha, sol) in alphas.iter().zip(&sols) {
            let sol = sol.as_ref().unwrap();
            let direct = solve_beta(&space, &phi, &psi, alpha, &t).unwrap();
            assert_eq!(sol.beta.to_bits(), direct.beta.to_bits());
            assert_eq!(sol.pressure.to_bits(), direct.pressure.to_bits());
        }
    }

    #[test]
    fn duality_identity_holds_on_the_level() {
        // h(maximizer) + int phi = pressure + ... : on the level set,
        // entropy + integral_phi - pressure must vanish when phi = 0 is
        // replaced by the defining identity h = P_K + 0; in general
        // h + int phi = P(phi + beta psi) - beta alpha + int phi - int phi.
        let space = golden();
        let phi = depth1(&space, &[0.4, -0.1]);
        let psi = depth1(&space, &[0.0, 1.0]);
        let sol = solve_beta(&space, &phi, &psi, 0.3, &tol()).unwrap();
        // The maximizer is the equilibrium of phi + beta psi, so
        // h + int(phi + beta psi) = P(phi + beta psi); rearranged:
        let resid = sol.entropy + sol.integral_phi + sol.beta * sol.integral_psi
            - (sol.pressure + sol.beta * sol.alpha);
        assert!(resid.abs() < 1e-10);
        assert!((sol.integral_psi - 0.3).abs() < 1e-10);
    }
}

//! Tolerance and iteration budgets shared by all solvers.

use crate::scalar::Scalar;

/// Numeric tolerances and iteration caps.
///
/// The defaults are the contract the rest of the crate is tested against;
/// every field can be overridden (the CLI exposes them as `--tol name=value`).
/// For scalar types coarser than `f64` the defaults are clamped below by a
/// multiple of the machine epsilon so that the solvers remain reachable.
#[derive(Debug, Clone)]
pub struct Tolerances<S> {
    /// Structural identities: stochastic row sums, weight normalizations.
    pub structural: S,
    /// Stationary-vector fixed point residual.
    pub stationary: S,
    /// Power-iteration eigenvector residual (max per-step change).
    pub eigen: S,
    /// Residual `|integral psi d(mu_beta) - alpha|` for the beta root.
    pub beta_root: S,
    /// Residual for roots in `t` (fiber exponent, cycle extremes, Bowen).
    pub t_root: S,
    /// Residual `|G(D)|` for the outer dimension root.
    pub outer_root: S,
    /// Minimum distance of `alpha` from the boundary of the Birkhoff range.
    pub interior_margin: S,
    /// Distance in `t` below which the inner maximizer counts as an endpoint.
    pub endpoint_t: S,
    /// Golden-section bracket width for the inner `t` refinement.
    pub golden_t: S,
    /// Width of the `t` range below which the system counts as degenerate.
    pub degenerate_span: S,
    /// Power iteration cap; exceeding it is reported as a failure.
    pub max_power_iterations: usize,
    /// Cap for one-dimensional root finding iterations.
    pub max_root_iterations: usize,
    /// Number of coarse grid points for the inner `t` scan.
    pub t_grid: usize,
    /// Cylinder/cycle enumeration guard.
    pub enumeration_guard: usize,
}

impl<S: Scalar> Default for Tolerances<S> {
    fn default() -> Self {
        let eps = S::epsilon();
        let floor = |x: f64, k: f64| S::of(x).max(eps * S::of(k));
        Tolerances {
            structural: floor(1e-12, 16.0),
            stationary: floor(1e-10, 64.0),
            eigen: floor(1e-14, 16.0),
            beta_root: floor(1e-11, 64.0),
            t_root: floor(1e-11, 64.0),
            outer_root: floor(1e-9, 512.0),
            interior_margin: floor(1e-9, 512.0),
            endpoint_t: floor(1e-7, 1024.0),
            golden_t: floor(1e-10, 64.0),
            degenerate_span: floor(1e-10, 64.0),
            max_power_iterations: 1_000_000,
            max_root_iterations: 500,
            t_grid: 64,
            enumeration_guard: 1_000_000,
        }
    }
}

impl<S: Scalar> Tolerances<S> {
    /// Override a tolerance by name; `Err` carries the unknown name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        match name {
            "structural" => self.structural = S::of(value),
            "stationary" => self.stationary = S::of(value),
            "eigen" => self.eigen = S::of(value),
            "beta_root" => self.beta_root = S::of(value),
            "t_root" => self.t_root = S::of(value),
            "outer_root" => self.outer_root = S::of(value),
            "interior_margin" => self.interior_margin = S::of(value),
            "endpoint_t" => self.endpoint_t = S::of(value),
            "golden_t" => self.golden_t = S::of(value),
            "degenerate_span" => self.degenerate_span = S::of(value),
            "max_power_iterations" => self.max_power_iterations = value as usize,
            "max_root_iterations" => self.max_root_iterations = value as usize,
            "t_grid" => self.t_grid = value as usize,
            "enumeration_guard" => self.enumeration_guard = value as usize,
            other => return Err(format!("unknown tolerance `{other}`")),
        }
        Ok(())
    }

    /// `(name, value)` pairs for logging.
    pub fn describe(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("structural", self.structural.lossy_f64()),
            ("stationary", self.stationary.lossy_f64()),
            ("eigen", self.eigen.lossy_f64()),
            ("beta_root", self.beta_root.lossy_f64()),
            ("t_root", self.t_root.lossy_f64()),
            ("outer_root", self.outer_root.lossy_f64()),
            ("interior_margin", self.interior_margin.lossy_f64()),
            ("endpoint_t", self.endpoint_t.lossy_f64()),
            ("golden_t", self.golden_t.lossy_f64()),
            ("degenerate_span", self.degenerate_span.lossy_f64()),
            ("max_power_iterations", self.max_power_iterations as f64),
            ("max_root_iterations", self.max_root_iterations as f64),
            ("t_grid", self.t_grid as f64),
            ("enumeration_guard", self.enumeration_guard as f64),
        ]
    }
}

//! Thermodynamic formalism on subshifts of finite type.
//!
//! The crate computes topological pressure and equilibrium states for
//! depth-1 potentials on mixing shifts, solves the constrained variational
//! problem on Birkhoff level sets, and combines the two to produce the full
//! Hausdorff dimension of Bedford-McMullen-type self-affine carpets with
//! shift-invariant column structure.
//!
//! Everything numeric is generic over the scalar type through the
//! [`scalar::Scalar`] trait (any `num_traits::Float` with conversions, so
//! `f32` and `f64` both work); the crate root re-exports `f64` aliases for
//! the common case.
//!
//! ```
//! use thermoform::{ShiftSpace, Potential, Tolerances};
//!
//! let space = ShiftSpace::full(2).unwrap();
//! let phi = Potential::depth1(&space, &[0.0, 0.0]).unwrap();
//! let p = thermoform::pressure(&space, &phi, &Tolerances::default()).unwrap();
//! assert!((p - 2f64.ln()).abs() < 1e-12);
//! ```

// Indexed loops mirror the matrix formulas; negated comparisons like
// `!(x > 0)` are NaN guards and must not become `x <= 0`.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod carpet;
pub mod config;
pub(crate) mod graph;
pub mod levelset;
pub(crate) mod numerics;
pub mod oracle;
pub mod random;
pub mod scalar;
pub mod shift;
pub mod transfer;

pub use carpet::{
    fiber_pressure, ly_dimension, measure_dimension, solve_full_dimension, t_extremes, t_of_nu,
    CarpetError, SolutionCase,
};
pub use config::Tolerances as GenericTolerances;
pub use levelset::{birkhoff_range, levelset_spectrum, solve_beta, LevelSetError};
pub use oracle::{
    bernoulli_search, constrained_grid_search, cycle_enumeration, mcmullen_dimension,
    mcmullen_system, OracleError, OracleMethod,
};
pub use scalar::Scalar;
pub use shift::{
    higher_block, integrate, measure_entropy, MixingReport, ShiftError, ShiftSpace, Word,
};
pub use transfer::{bowen_root, equilibrium, gibbs_ratio_check, pressure, q_form, TransferError};

/// Solver tolerances instantiated at `f64`.
pub type Tolerances = config::Tolerances<f64>;
/// Depth-k potential with `f64` values.
pub type Potential = shift::Potential<f64>;
/// Stationary Markov measure with `f64` entries.
pub type MarkovMeasure = shift::MarkovMeasure<f64>;
/// Higher-block recoding carrying an `f64` potential.
pub type HigherBlock = shift::HigherBlock<f64>;
/// Equilibrium state report at `f64`.
pub type EquilibriumReport = transfer::EquilibriumReport<f64>;
/// Birkhoff average range at `f64`.
pub type BirkhoffRange = levelset::BirkhoffRange<f64>;
/// Level-set solution at `f64`.
pub type LevelSetSolution = levelset::LevelSetSolution<f64>;
/// Gibbs ratio sweep report at `f64`.
pub type GibbsRatioCheck = transfer::GibbsRatioCheck<f64>;
/// Truncated covariance estimate at `f64`.
pub type QFormEstimate = transfer::QFormEstimate<f64>;
/// Transfer matrix at `f64`.
pub type TransferMatrix = transfer::TransferMatrix<f64>;
/// Carpet system at `f64`.
pub type CarpetSystem = carpet::CarpetSystem<f64>;
/// Carpet row at `f64`.
pub type CarpetRow = carpet::CarpetRow<f64>;
/// Fiber pressure evaluation at `f64`.
pub type FiberPressure = carpet::FiberPressure<f64>;
/// Full-dimension report at `f64`.
pub type FullDimensionReport = carpet::FullDimensionReport<f64>;
/// Carpet solver diagnostics at `f64`.
pub type CarpetDiagnostics = carpet::CarpetDiagnostics<f64>;
/// Oracle result at `f64`.
pub type OracleResult = oracle::OracleResult<f64>;
/// Oracle certificate at `f64`.
pub type OracleCertificate = oracle::OracleCertificate<f64>;

//! Weighted translation operators, the integer cosine sequence
//! `C^(n) = ½ (T^n + T^{-n})` and their adjoints on discrete solid Banach
//! function spaces over `Z^d`, together with checkers for the
//! transitivity and chaos conditions and the witnesses that realize them.

pub mod adjoint;
pub mod criteria;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod norm;
pub mod scalar;
pub mod witnesses;

pub use adjoint::{adjoint_cosine, adjoint_s_pow, adjoint_t_pow, check_adjoint_bounds, pair, DualFunctional};
pub use criteria::{
    check_bounds_necessary, check_necessary_decay_s, check_necessary_decay_t, check_sufficient_chaotic,
    check_sufficient_transitive, Budget, ConditionId, CriterionReport, Verdict,
};
pub use dynamics::{
    aperiodicity_horizon, apply_cosine, apply_s, apply_s_pow, apply_t, apply_t_pow, compose_ops, map_pow,
    weight_product, DynMap, Horizon, OperatorHandle, ProductSide, WeightFn,
};
pub use error::{Error, Result};
pub use grid::{scale_restrict, CompactSet, GridFunction, Site};
pub use norm::{luxemburg_norm, morrey_norm, norm, SpaceNorm, YoungFunction};
pub use scalar::{NumericMode, Scalar};
pub use witnesses::{
    build_periodic_point, build_transitivity_witness, orbit_trace, periodicity_residual, verify_transition,
    WitnessBundle,
};

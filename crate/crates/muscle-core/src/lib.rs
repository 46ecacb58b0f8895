//! Forward model of hybrid positive–negative-pressure pouch artificial
//! muscles: a foldable pouch skeleton inflated from inside an evacuated
//! skin envelope.
//!
//! The crate provides:
//! * a cross-section statics solver over the four contact regimes, with
//!   blocked-state location and force–contraction curve tracing
//!   ([`solver`]);
//! * the sealed-skeleton (closed-chamber) drive regime coupling the statics
//!   to an isothermal gas law ([`chamber`]);
//! * multilayer stacking and maximum-contraction accounting
//!   ([`multilayer`]);
//! * fold-resistance calibration from blocked-force measurements
//!   ([`resistance`]);
//! * performance metrics from measured time series ([`metrics`]);
//! * the airflow operation-mode combinatorics ([`modes`]).
//!
//! Everything internal is SI (meters, pascals, newtons); file formats use
//! millimeter/kilopascal conventions, converted at the boundary by [`io`].

pub mod chamber;
pub mod geom;
pub mod io;
pub mod metrics;
pub mod modes;
pub mod multilayer;
pub mod plot;
pub mod resistance;
pub mod solver;
pub mod state;
pub mod types;

pub use chamber::{seal_chamber, skeleton_volume, trace_curve_closed};
pub use resistance::{fit_kr, KrFit, ResistanceModel, DEFAULT_LINEAR_THRESHOLD};
pub use solver::{
    blocked_force, blocked_point, classify_variant, force_at_state, force_decomposition,
    residuals_at, solve_equilibrium, trace_curve, ForceDecomposition, MIN_GAS_VOLUME,
};
pub use state::{CrossSectionState, Curve, CurvePoint, GasState, ModelVariant};
pub use types::{
    ActuatorSpec, Error, PressureCondition, Result, SkeletonRegime, SolverSettings,
    STANDARD_ATMOSPHERE, STANDARD_GRAVITY,
};

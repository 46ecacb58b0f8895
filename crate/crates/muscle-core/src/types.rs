//! Input descriptions, solver settings, unit helpers and the crate-wide
//! error type.
//!
//! Everything inside the library is strict SI (m, Pa, N, kg, m³, s, rad).
//! File boundaries (JSON/CSV) use mm, kPa and mm³; the conversion helpers
//! here are the only place that factor lives.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::ModelVariant;

// ============================================================================
// Physical constants
// ============================================================================

/// Standard atmosphere [Pa], the default absolute ambient pressure.
pub const STANDARD_ATMOSPHERE: f64 = 101_325.0;

/// Standard gravitational acceleration [m/s²] used by the load metrics.
pub const STANDARD_GRAVITY: f64 = 9.81;

// ============================================================================
// Unit helpers (file boundary <-> SI)
// ============================================================================

/// Millimetres → metres. `x / 1000.0` so that a round trip through
/// [`m_to_mm`] is correct to 1 ulp.
pub fn mm_to_m(x: f64) -> f64 {
    x / 1000.0
}

/// Metres → millimetres.
pub fn m_to_mm(x: f64) -> f64 {
    x * 1000.0
}

/// Kilopascals → pascals.
pub fn kpa_to_pa(x: f64) -> f64 {
    x * 1000.0
}

/// Pascals → kilopascals.
pub fn pa_to_kpa(x: f64) -> f64 {
    x / 1000.0
}

/// Cubic millimetres → cubic metres.
pub fn mm3_to_m3(x: f64) -> f64 {
    x / 1.0e9
}

/// Cubic metres → cubic millimetres.
pub fn m3_to_mm3(x: f64) -> f64 {
    x * 1.0e9
}

// ============================================================================
// Errors
// ============================================================================

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An actuator description or argument violates a documented invariant.
    #[error("invalid actuator description: {0}")]
    InvalidSpec(String),

    /// The damped Newton iteration did not reach the residual tolerance.
    #[error(
        "equilibrium solve failed to converge ({context}): scaled residual \
         {residual:.3e} after {iters} iterations"
    )]
    NoConvergence {
        residual: f64,
        iters: usize,
        context: String,
    },

    /// No cross-section satisfies zero net contraction for this pressure pair.
    #[error("no blocked state exists for this pressure pair: {0}")]
    NoBlockedState(String),

    /// The requested operation is not defined for this cross-section variant.
    #[error("operation not supported for cross-section variant {0}")]
    UnsupportedVariant(ModelVariant),

    /// A solve converged, but the solution violates the closure conditions of
    /// the requested variant (e.g. a negative contact run) — the caller must
    /// switch variants.
    #[error("variant {variant} closure violated at the solution: {reason}")]
    InvalidVariant { variant: ModelVariant, reason: String },

    /// The sealed skeleton volume fell below the physical floor.
    #[error("sealed chamber volume {volume:.3e} m^3 collapsed below {floor:.1e} m^3")]
    VolumeCollapse { volume: f64, floor: f64 },

    /// Too few samples survive the linear-region filter of a fit.
    #[error("not enough samples in the linear region: need at least 2, found {0}")]
    InsufficientData(usize),

    /// A least-squares fit has no unique solution.
    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),

    /// A resistance model was given two samples at the same pressure.
    #[error("duplicate pressure sample at {dp1_pa} Pa")]
    DuplicatePressure { dp1_pa: f64 },

    /// A time series is empty or its channels disagree in length.
    #[error("unusable time series: {0}")]
    EmptyTrace(String),

    /// Time samples must strictly increase.
    #[error("time samples must strictly increase (violation at index {0})")]
    NonMonotonicTime(usize),

    /// Sample abscissae that a fit requires to strictly increase do not.
    #[error("samples must strictly increase: {0}")]
    NonMonotonicSamples(String),

    /// The pneumatic input energy integral vanished; efficiency is undefined.
    #[error("input energy integral is zero; efficiency undefined")]
    ZeroInputEnergy,

    /// A requested geometry cannot fold/unfold as designed.
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    /// An operation-mode code does not parse.
    #[error("malformed mode code {code:?}: {reason}")]
    MalformedCode { code: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

// ============================================================================
// Actuator description
// ============================================================================

/// Geometry and material description of one pouch-muscle actuator.
///
/// All fields are SI. "Designed" lengths are the as-cut flat dimensions; the
/// sheets are bonded with a small slack (`prestrain_delta`) so the *natural*
/// (unstretched) length of each segment is `(1 + delta)` times its designed
/// length — see [`ActuatorSpec::natural_pouch_length`] etc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActuatorSpec {
    /// Designed flat length of one pouch (skeleton sheet span per cell) [m].
    pub pouch_length_l10: f64,
    /// Designed flat length of the gap (exposed skin span) between pouches [m].
    pub gap_length_l20: f64,
    /// Actuator width (out-of-plane depth of the cross-section) [m].
    pub width_w: f64,
    /// Number of pouch columns along the actuator.
    pub columns_n: u32,
    /// Number of stacked pouch layers (the cross-section model resolves one
    /// symmetric two-layer unit; more layers rescale volumes and design
    /// contraction bounds).
    pub layers_m: u32,
    /// Skeleton sheet thickness [m].
    pub skeleton_thickness_t1: f64,
    /// Skin sheet thickness [m].
    pub skin_thickness_t2: f64,
    /// Elastic modulus of the sheet material [Pa].
    pub elastic_modulus_e: f64,
    /// Bonding slack: natural length = (1 + delta) × designed length.
    pub prestrain_delta: f64,
    /// Total actuator mass [kg], if known (used only by the metrics module).
    pub actuator_mass: Option<f64>,
    /// Flat (uninflated) envelope volume [m³], if known (metrics only).
    pub flat_volume_vflat: Option<f64>,
}

impl ActuatorSpec {
    /// The standard development actuator used across the test-suite:
    /// 20 mm pouches, 10 mm gaps, 80 mm width, 7 columns, 2 layers,
    /// 0.09 / 0.17 mm sheets, 400 MPa modulus, 4% bonding slack.
    pub fn reference() -> Self {
        ActuatorSpec {
            pouch_length_l10: 0.020,
            gap_length_l20: 0.010,
            width_w: 0.080,
            columns_n: 7,
            layers_m: 2,
            skeleton_thickness_t1: 0.09e-3,
            skin_thickness_t2: 0.17e-3,
            elastic_modulus_e: 400.0e6,
            prestrain_delta: 0.04,
            actuator_mass: Some(0.0246),
            flat_volume_vflat: Some(9.8e-6),
        }
    }

    /// Validate the documented invariants. Returns `InvalidSpec` on the first
    /// violation.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pouch_length_l10", self.pouch_length_l10),
            ("gap_length_l20", self.gap_length_l20),
            ("width_w", self.width_w),
            ("skeleton_thickness_t1", self.skeleton_thickness_t1),
            ("skin_thickness_t2", self.skin_thickness_t2),
            ("elastic_modulus_e", self.elastic_modulus_e),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.prestrain_delta >= 0.0) || !self.prestrain_delta.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "prestrain_delta must be >= 0, got {}",
                self.prestrain_delta
            )));
        }
        if self.columns_n < 1 {
            return Err(Error::InvalidSpec("columns_n must be >= 1".into()));
        }
        if self.layers_m < 2 {
            return Err(Error::InvalidSpec(
                "layers_m must be >= 2 (the cross-section unit is a symmetric two-layer stack)"
                    .into(),
            ));
        }
        if let Some(m) = self.actuator_mass {
            if !(m > 0.0) {
                return Err(Error::InvalidSpec(format!("actuator_mass must be positive, got {m}")));
            }
        }
        if let Some(v) = self.flat_volume_vflat {
            if !(v > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "flat_volume_vflat must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Natural (unstretched) pouch sheet length: `(1 + delta)·L10` [m].
    pub fn natural_pouch_length(&self) -> f64 {
        (1.0 + self.prestrain_delta) * self.pouch_length_l10
    }

    /// Natural gap/skin segment length: `(1 + delta)·L20` [m].
    pub fn natural_gap_length(&self) -> f64 {
        (1.0 + self.prestrain_delta) * self.gap_length_l20
    }

    /// Natural length of the pouch *bottom* sheet; identical to the top sheet.
    pub fn natural_bottom_length(&self) -> f64 {
        self.natural_pouch_length()
    }

    /// Membrane stiffness of the pouch top sheet: `E·t1·W / L10n` [N/m].
    pub fn stiffness_k1(&self) -> f64 {
        self.elastic_modulus_e * self.skeleton_thickness_t1 * self.width_w
            / self.natural_pouch_length()
    }

    /// Membrane stiffness of the skin segment: `E·t2·W / L20n` [N/m].
    pub fn stiffness_k2(&self) -> f64 {
        self.elastic_modulus_e * self.skin_thickness_t2 * self.width_w / self.natural_gap_length()
    }

    /// Membrane stiffness of the pouch bottom sheet (same sheet as the top).
    pub fn stiffness_k3(&self) -> f64 {
        self.elastic_modulus_e * self.skeleton_thickness_t1 * self.width_w
            / self.natural_bottom_length()
    }

    /// Flat actuator length `n·L10 + (n−1)·L20` [m] — the designed span and
    /// the reference length for every contraction ratio.
    pub fn flat_length(&self) -> f64 {
        let n = self.columns_n as f64;
        n * self.pouch_length_l10 + (n - 1.0) * self.gap_length_l20
    }
}

// ============================================================================
// Pressure condition
// ============================================================================

/// How the positive-pressure (skeleton) side is driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SkeletonRegime {
    /// The skeleton is held at a constant gauge pressure by its supply.
    ConstantPressure,
    /// The skeleton is charged to `initial_dp1` gauge [Pa] at the blocked
    /// state with no vacuum applied, then sealed; afterwards the trapped gas
    /// follows the isothermal law and the gauge pressure floats.
    /// `dead_volume` [m³] is tubing/connector volume added to the pouch lumen
    /// on the gas side (0 for an ideally plumbed seal).
    ClosedChamber {
        initial_dp1: f64,
        #[serde(default)]
        dead_volume: f64,
    },
}

/// One operating point: positive gauge on the pouches, negative gauge on the
/// skin envelope, and the skeleton drive regime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PressureCondition {
    /// Skeleton (pouch) gauge pressure `ΔP1 = P1 − P0 ≥ 0` [Pa]. Under
    /// `ClosedChamber` this is the initial charge; the instantaneous value
    /// floats and is reported per curve point.
    pub positive_gauge_dp1: f64,
    /// Skin gauge pressure `ΔP2 = P2 − P0 ≤ 0` [Pa] (vacuum is negative).
    pub negative_gauge_dp2: f64,
    /// Skeleton drive regime.
    pub skeleton_regime: SkeletonRegime,
    /// Absolute ambient pressure `P0` [Pa].
    pub atmospheric_p0: f64,
}

impl PressureCondition {
    /// Constant-pressure condition at ambient `P0` = one standard atmosphere.
    pub fn constant(dp1: f64, dp2: f64) -> Self {
        PressureCondition {
            positive_gauge_dp1: dp1,
            negative_gauge_dp2: dp2,
            skeleton_regime: SkeletonRegime::ConstantPressure,
            atmospheric_p0: STANDARD_ATMOSPHERE,
        }
    }

    /// Sealed-skeleton condition: charge to `initial_dp1` at the no-vacuum
    /// blocked state, seal, then apply `dp2` to the skin.
    pub fn closed(initial_dp1: f64, dp2: f64) -> Self {
        Self::closed_with_dead_volume(initial_dp1, dp2, 0.0)
    }

    /// Sealed-skeleton condition with explicit tubing/connector dead volume
    /// [m³] included on the gas side.
    pub fn closed_with_dead_volume(initial_dp1: f64, dp2: f64, dead_volume: f64) -> Self {
        PressureCondition {
            positive_gauge_dp1: initial_dp1,
            negative_gauge_dp2: dp2,
            skeleton_regime: SkeletonRegime::ClosedChamber { initial_dp1, dead_volume },
            atmospheric_p0: STANDARD_ATMOSPHERE,
        }
    }

    /// Validate gauge signs and a physically meaningful ambient.
    pub fn validate(&self) -> Result<()> {
        if !(self.atmospheric_p0 > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "atmospheric_p0 must be positive, got {}",
                self.atmospheric_p0
            )));
        }
        if !(self.positive_gauge_dp1 >= 0.0) || !self.positive_gauge_dp1.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "positive_gauge_dp1 must be >= 0, got {}",
                self.positive_gauge_dp1
            )));
        }
        if !(self.negative_gauge_dp2 <= 0.0) || !self.negative_gauge_dp2.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "negative_gauge_dp2 must be <= 0, got {}",
                self.negative_gauge_dp2
            )));
        }
        if self.atmospheric_p0 + self.negative_gauge_dp2 <= 0.0 {
            return Err(Error::InvalidSpec(
                "absolute skin-side pressure P0 + dP2 must stay positive".into(),
            ));
        }
        if let SkeletonRegime::ClosedChamber { initial_dp1, dead_volume } = self.skeleton_regime {
            if !(initial_dp1 > 0.0) || !initial_dp1.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "closed-chamber initial_dp1 must be > 0, got {initial_dp1}"
                )));
            }
            if !(dead_volume >= 0.0) || !dead_volume.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "closed-chamber dead_volume must be >= 0, got {dead_volume}"
                )));
            }
        }
        Ok(())
    }
}

// ============================================================================
// Solver settings
// ============================================================================

/// Numerical settings for the statics solver and curve tracer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Continuation step for the skin half-angle θ2 [rad] (and for the pouch
    /// half-angle on the no-vacuum branch).
    pub theta2_step: f64,
    /// Convergence threshold on the largest scaled residual component.
    pub residual_tol: f64,
    /// Newton iteration cap per solve.
    pub max_newton_iters: usize,
    /// Initial Newton step fraction; halved whenever a step would increase
    /// the scaled residual norm.
    pub newton_damping: f64,
    /// Replace the first force-nonpositive curve point by a point linearly
    /// interpolated in (CR, F) to F = 0 exactly.
    pub zero_force_interp: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            theta2_step: 0.01,
            residual_tol: 1e-10,
            max_newton_iters: 100,
            newton_damping: 1.0,
            zero_force_interp: true,
        }
    }
}

//! Solved cross-section states and force–contraction curves.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::types::{ActuatorSpec, PressureCondition};

// ============================================================================
// Cross-section variant
// ============================================================================

/// Contact regime of the two-layer cross-section unit.
///
/// * `A` — no contact: skin and skeleton sheets are separate arcs.
/// * `B` — skin–skeleton contact: the skin wraps part of the pouch top sheet
///   (a shared arc patch of angle θ4).
/// * `C` — skin–midplane contact: the sagging skin touches the stack
///   midplane over a flat run w2.
/// * `D` — both contacts at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    A,
    B,
    C,
    D,
}

impl ModelVariant {
    /// Single-letter label used in CSV output.
    pub fn letter(&self) -> &'static str {
        match self {
            ModelVariant::A => "A",
            ModelVariant::B => "B",
            ModelVariant::C => "C",
            ModelVariant::D => "D",
        }
    }

    /// Parse the single-letter label.
    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "A" => Some(ModelVariant::A),
            "B" => Some(ModelVariant::B),
            "C" => Some(ModelVariant::C),
            "D" => Some(ModelVariant::D),
            _ => None,
        }
    }

    /// Whether the skin contacts the pouch sheet (B and D).
    pub fn has_skin_skeleton_contact(&self) -> bool {
        matches!(self, ModelVariant::B | ModelVariant::D)
    }

    /// Whether the skin contacts the stack midplane (C and D).
    pub fn has_midplane_contact(&self) -> bool {
        matches!(self, ModelVariant::C | ModelVariant::D)
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.letter())
    }
}

// ============================================================================
// Cross-section state
// ============================================================================

/// Serialize a radius with the zero-curvature sentinel: straight segments
/// carry `R = ∞` internally but JSON has no infinity literal, so `0.0`
/// encodes "straight" at every file boundary.
fn radius_ser<S: Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(if r.is_finite() { *r } else { 0.0 })
}

fn radius_de<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let v = f64::deserialize(d)?;
    Ok(if v == 0.0 { f64::INFINITY } else { v })
}

/// One converged cross-section of the two-layer pouch unit.
///
/// Geometry is per *cell*: `C1` is the pouch top sheet (arc of half-angle θ1,
/// length L1), `C3` the pouch bottom sheet (θ3, arc length L3 − w1 plus a
/// flat midplane contact run w1), and `C2` the exposed skin segment between
/// pouches (θ2, with variant-dependent arc/patch/flat decomposition, plus a
/// flat run w2 in variants C/D). Spans `S1..S3` are the horizontal widths of
/// the three segments; `S1 = S3` always holds at equilibrium.
///
/// Radii of straight segments are stored as `f64::INFINITY`; file boundaries
/// encode them as `0.0` (zero curvature).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossSectionState {
    /// Contact regime this state was solved under.
    pub model_variant: ModelVariant,
    /// Pouch top sheet radius [m] (∞ when straight).
    #[serde(serialize_with = "radius_ser", deserialize_with = "radius_de")]
    pub r1: f64,
    /// Skin segment radius [m] (∞ when straight, e.g. with no vacuum).
    #[serde(serialize_with = "radius_ser", deserialize_with = "radius_de")]
    pub r2: f64,
    /// Pouch bottom sheet radius [m] (∞ when straight).
    #[serde(serialize_with = "radius_ser", deserialize_with = "radius_de")]
    pub r3: f64,
    /// Pouch top sheet half-angle [rad].
    pub theta1: f64,
    /// Skin segment half-angle [rad] (0 with no vacuum).
    pub theta2: f64,
    /// Pouch bottom sheet half-angle [rad].
    pub theta3: f64,
    /// Skin–skeleton shared patch angle [rad] (variants B/D; else 0).
    pub theta4: f64,
    /// Flat midplane contact run of the pouch bottom sheet [m].
    pub contact_w1: f64,
    /// Flat midplane contact run of the skin [m] (variants C/D; else 0).
    pub contact_w2: f64,
    /// Material length of the pouch top sheet per cell [m].
    pub l1: f64,
    /// Material length of the skin segment per cell [m].
    pub l2: f64,
    /// Material length of the pouch bottom sheet per cell [m].
    pub l3: f64,
    /// Horizontal span of the pouch top sheet [m].
    pub s1: f64,
    /// Horizontal span of the skin segment [m].
    pub s2: f64,
    /// Horizontal span of the pouch bottom sheet [m].
    pub s3: f64,
    /// Skin tension over the full width [N].
    pub t2: f64,
    /// Pouch top sheet tension [N].
    pub t1: f64,
    /// Pouch bottom sheet tension [N].
    pub t3: f64,
    /// Mid-gap void height `2R3(1−cosθ3) − 2R2(1−cosθ2)` [m]; ≈ 0 for C/D
    /// where the height constraint closes the void.
    pub section_height_h: f64,
}

impl CrossSectionState {
    /// The flat, unpressurized cross-section: every segment straight and
    /// slack, spans equal to the designed lengths.
    pub fn flat(spec: &ActuatorSpec) -> Self {
        CrossSectionState {
            model_variant: ModelVariant::A,
            r1: f64::INFINITY,
            r2: f64::INFINITY,
            r3: f64::INFINITY,
            theta1: 0.0,
            theta2: 0.0,
            theta3: 0.0,
            theta4: 0.0,
            contact_w1: 0.0,
            contact_w2: 0.0,
            l1: spec.natural_pouch_length(),
            l2: spec.natural_gap_length(),
            l3: spec.natural_bottom_length(),
            s1: spec.pouch_length_l10,
            s2: spec.gap_length_l20,
            s3: spec.pouch_length_l10,
            t1: 0.0,
            t2: 0.0,
            t3: 0.0,
            section_height_h: 0.0,
        }
    }

    /// Actuator length at this cross-section: `n·S1 + (n−1)·S2` [m].
    pub fn actuator_length(&self, spec: &ActuatorSpec) -> f64 {
        let n = spec.columns_n as f64;
        n * self.s1 + (n - 1.0) * self.s2
    }

    /// Contraction ratio relative to the designed flat length.
    pub fn contraction_ratio(&self, spec: &ActuatorSpec) -> f64 {
        let l0 = spec.flat_length();
        (l0 - self.actuator_length(spec)) / l0
    }

    /// Inflated pouch lumen height `R1(1−cosθ1) + R3(1−cosθ3)` [m]: the
    /// vertical opening a cut through a pouch crosses.
    pub fn pouch_lumen_height(&self) -> f64 {
        let sag1 = if self.r1.is_finite() { self.r1 * (1.0 - self.theta1.cos()) } else { 0.0 };
        let sag3 = if self.r3.is_finite() { self.r3 * (1.0 - self.theta3.cos()) } else { 0.0 };
        sag1 + sag3
    }
}

/// Mid-gap void height for any state: `2R3(1−cosθ3) − 2R2(1−cosθ2)` [m].
///
/// For variants C and D the equal-heights constraint drives this to zero
/// (within solver tolerance).
pub fn section_height(state: &CrossSectionState) -> f64 {
    let sag3 = if state.r3.is_finite() {
        state.r3 * (1.0 - state.theta3.cos())
    } else {
        0.0
    };
    let sag2 = if state.r2.is_finite() {
        state.r2 * (1.0 - state.theta2.cos())
    } else {
        0.0
    };
    2.0 * (sag3 - sag2)
}

// ============================================================================
// Curve containers
// ============================================================================

/// One point of a force–contraction curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Contraction ratio `CR = (Ssum0 − Ssum)/Ssum0` (fraction, 0 at blocked).
    pub contraction_ratio_cr: f64,
    /// Output force at this contraction [N].
    pub output_force_f: f64,
    /// Internal fold-resistance force `Fr = kr(ΔP1)·(Ssum0 − Ssum)` [N].
    pub resistance_fr: f64,
    /// Actuator length `Ssum` [m].
    pub actuator_length_ssum: f64,
    /// Converged cross-section at this point.
    pub state: CrossSectionState,
    /// Instantaneous skeleton gauge pressure [Pa] (equals the supply gauge
    /// under constant pressure; floats under a sealed chamber).
    pub skeleton_gauge_dp1: f64,
}

/// A full force–contraction curve at one pressure condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Curve {
    /// Points ordered from the blocked state (CR = 0) toward free contraction.
    pub points: Vec<CurvePoint>,
    /// Actuator the curve was traced for.
    pub spec: ActuatorSpec,
    /// Pressure condition the curve was traced at.
    pub condition: PressureCondition,
    /// Contraction ratio of the final point (the zero-force crossing when
    /// the tracer completed).
    pub terminal_cr_max: f64,
    /// True when the tracer stopped early on a solver failure; the points
    /// gathered up to that step are retained.
    pub truncated: bool,
    /// Failure description when `truncated` is set.
    pub truncation_reason: Option<String>,
}

// ============================================================================
// Sealed-gas bookkeeping
// ============================================================================

/// Isothermal bookkeeping for a sealed skeleton chamber.
///
/// The trapped gas satisfies `P_abs·V = const`; with temperature fixed the
/// product is a proxy for the trapped amount of gas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GasState {
    /// Conserved product `P_abs·V` [Pa·m³].
    pub trapped_moles_proxy: f64,
    /// Skeleton volume at sealing [m³].
    pub sealed_volume_v0: f64,
    /// Absolute skeleton pressure at sealing [Pa].
    pub sealed_absolute_p1: f64,
}

impl GasState {
    /// Absolute pressure after an isothermal volume change to `v` [Pa].
    pub fn absolute_pressure_at(&self, v: f64) -> f64 {
        self.trapped_moles_proxy / v
    }
}

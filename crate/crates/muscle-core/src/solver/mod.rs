//! Cross-section statics: equilibrium solving, blocked-state location,
//! force–contraction curve tracing, and force decomposition.
//!
//! The public entry points dispatch on the pressure condition:
//! * skin under vacuum (`ΔP2 < 0`) — Newton continuation over the skin
//!   half-angle with automatic contact-regime escalation;
//! * skin at ambient (`ΔP2 = 0`) — the one-dimensional symmetric branch;
//! * sealed skeleton — either branch augmented with the isothermal gas law
//!   (see the `chamber` module for sealing).

pub(crate) mod continuation;
mod newton;
pub(crate) mod slack;
pub(crate) mod system;

pub(crate) use continuation::Drive;
pub(crate) use system::Ctx;

use crate::chamber;
use crate::resistance::ResistanceModel;
use crate::state::{CrossSectionState, Curve, CurvePoint, ModelVariant};
use crate::types::{ActuatorSpec, Error, PressureCondition, Result, SkeletonRegime, SolverSettings};

/// Gas volume floor below which the sealed-skeleton closure is ill-posed.
pub const MIN_GAS_VOLUME: f64 = 1e-9;

// ============================================================================
// Equilibrium at a prescribed skin angle
// ============================================================================

/// Solve the cross-section equilibrium at skin half-angle `theta2` under the
/// prescribed contact regime `variant`.
///
/// `warm_start` seeds the iteration (converted between variants as needed);
/// without it a cold-start ladder is used. The converged solution is checked
/// against the variant's closure conditions: violations return
/// [`Error::InvalidVariant`], signalling that the caller must switch variants
/// (see [`classify_variant`]).
///
/// Special cases: with both gauges zero the flat state is returned directly.
/// The ambient-skin branch (`ΔP2 = 0` with inflation) is one-dimensional and
/// not addressable by `theta2`; use [`blocked_force`] or [`trace_curve`].
pub fn solve_equilibrium(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    theta2: f64,
    variant: ModelVariant,
    warm_start: Option<&CrossSectionState>,
    settings: &SolverSettings,
) -> Result<CrossSectionState> {
    spec.validate()?;
    cond.validate()?;
    if cond.positive_gauge_dp1 == 0.0 && cond.negative_gauge_dp2 == 0.0 {
        return Ok(CrossSectionState::flat(spec));
    }
    if cond.negative_gauge_dp2 == 0.0 {
        return Err(Error::InvalidSpec(
            "with the skin at ambient pressure the cross-section is not parameterized by \
             theta2; use blocked_force or trace_curve for that branch"
                .into(),
        ));
    }
    if cond.positive_gauge_dp1 <= 0.0 {
        return Err(Error::InvalidSpec(
            "the cross-section model needs inflated pouches (dP1 > 0) when vacuum is applied"
                .into(),
        ));
    }
    if !(theta2 > 0.0 && theta2 < std::f64::consts::PI) {
        return Err(Error::InvalidSpec(format!(
            "theta2 must lie in (0, pi), got {theta2}"
        )));
    }
    let ctx = Ctx::new(spec, cond);
    let theta2_min = ctx.d2 * ctx.w / (2.0 * ctx.k2);
    if theta2 <= theta2_min {
        return Err(Error::InvalidSpec(format!(
            "theta2 = {theta2} is below the skin membrane limit {theta2_min:.6}; the skin \
             cannot carry this vacuum at a smaller fold angle"
        )));
    }

    let gas_store;
    let drive = match cond.skeleton_regime {
        SkeletonRegime::ConstantPressure => Drive::Constant(cond.positive_gauge_dp1),
        SkeletonRegime::ClosedChamber { initial_dp1, dead_volume } => {
            let (gas, _) =
                chamber::seal_impl(spec, initial_dp1, dead_volume, cond.atmospheric_p0, settings)?;
            gas_store = gas;
            Drive::Sealed { gas: &gas_store, seed_dp1: initial_dp1 }
        }
    };

    let start = warm_start.map(|w| {
        let x = system::pack_from_state(w);
        if w.model_variant == variant {
            x
        } else {
            system::convert_start(&ctx, w.model_variant, variant, theta2, &x)
        }
    });
    let out = continuation::solve_fixed_variant(&ctx, settings, variant, theta2, drive, start)?;
    if let Some(reason) = system::validity_error(&ctx, &out.g) {
        return Err(Error::InvalidVariant { variant, reason });
    }
    Ok(out.state)
}

/// The contact regime the next continuation step must use, given a solved
/// state: the skin wraps the pouch once `θ1 ≤ θ2` (A→B, C→D) and flattens
/// onto the mid-plane once its sag exceeds the bottom sheet's (A→C, B→D).
/// Transitions are one-directional along a sweep.
pub fn classify_variant(state: &CrossSectionState) -> ModelVariant {
    let wrap = state.model_variant.has_skin_skeleton_contact()
        || (state.theta2 > 0.0 && state.theta1 <= state.theta2);
    let sag2 = if state.r2.is_finite() {
        state.r2 * (1.0 - state.theta2.cos())
    } else {
        0.0
    };
    let sag3 = if state.r3.is_finite() {
        state.r3 * (1.0 - state.theta3.cos())
    } else {
        0.0
    };
    let flatten = state.model_variant.has_midplane_contact() || sag2 > sag3;
    match (wrap, flatten) {
        (false, false) => ModelVariant::A,
        (true, false) => ModelVariant::B,
        (false, true) => ModelVariant::C,
        (true, true) => ModelVariant::D,
    }
}

// ============================================================================
// Forces
// ============================================================================

/// Output force and fold resistance at a solved state:
/// `F = 2·T2 + (P0−P2)·H·W − Fr` while the mid-gap is open (variants A/B),
/// `F = 2·T2 − Fr` once it has closed (C/D), with
/// `Fr = kr(ΔP1)·(Ssum0 − Ssum)`.
///
/// Under a sealed skeleton pass the instantaneous gauge via
/// `cond.positive_gauge_dp1` (curve points already carry their own force).
pub fn force_at_state(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    state: &CrossSectionState,
    resistance: &ResistanceModel,
) -> (f64, f64) {
    let d2 = -cond.negative_gauge_dp2;
    let raw = match state.model_variant {
        ModelVariant::A | ModelVariant::B => {
            2.0 * state.t2 + d2 * state.section_height_h * spec.width_w
        }
        ModelVariant::C | ModelVariant::D => 2.0 * state.t2,
    };
    let shortfall = (spec.flat_length() - state.actuator_length(spec)).max(0.0);
    let fr = resistance.kr_at(cond.positive_gauge_dp1) * shortfall;
    (raw - fr, fr)
}

/// The two independent force accountings at a solved A/B state.
///
/// Cutting through the skin: the skin tension pulls and the vacuum acting on
/// the open gap height pushes the load the same way. Cutting through the
/// skeleton sheets instead: both pouch-sheet tensions pull while the inflated
/// pouch pushes back over its own height. In the free regime (A) both cuts,
/// minus fold resistance, reconstruct the same output force; once the skin
/// wraps the pouch crest (B) the shared patch transfers load between skin
/// and sheet, and only the skin cut still equals the output force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceDecomposition {
    /// Skin-cut tension contribution `2·T2` [N].
    pub skin_cut_tension: f64,
    /// Skin-cut pressure contribution `(P0−P2)·H·W` [N] (aids contraction).
    pub skin_cut_push: f64,
    /// Skeleton-cut tension contribution `2·(T1+T3)` [N].
    pub skeleton_cut_tension: f64,
    /// Skeleton-cut pressure contribution `2·(P1−P0)·H1·W` [N] with
    /// `H1 = R1(1−cosθ1) + R3(1−cosθ3)` (resists contraction).
    pub skeleton_cut_push: f64,
    /// Fold resistance `Fr` [N] at this state.
    pub fold_resistance_fr: f64,
}

impl ForceDecomposition {
    /// Output force reconstructed from the skin cut.
    pub fn output_force_skin_cut(&self) -> f64 {
        self.skin_cut_tension + self.skin_cut_push - self.fold_resistance_fr
    }

    /// Output force reconstructed from the skeleton cut. Equals the skin-cut
    /// value only in the free regime (A); under a wrap (B) the contact patch
    /// carries part of the load and this sum overshoots the output force.
    pub fn output_force_skeleton_cut(&self) -> f64 {
        self.skeleton_cut_tension - self.skeleton_cut_push - self.fold_resistance_fr
    }
}

/// Decompose the output force at a solved state along both cuts.
/// Only defined while the pouch height is open (variants A and B).
pub fn force_decomposition(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    state: &CrossSectionState,
    resistance: &ResistanceModel,
) -> Result<ForceDecomposition> {
    match state.model_variant {
        ModelVariant::A | ModelVariant::B => {}
        v => return Err(Error::UnsupportedVariant(v)),
    }
    let d1 = cond.positive_gauge_dp1;
    let d2 = -cond.negative_gauge_dp2;
    let shortfall = (spec.flat_length() - state.actuator_length(spec)).max(0.0);
    Ok(ForceDecomposition {
        skin_cut_tension: 2.0 * state.t2,
        skin_cut_push: d2 * state.section_height_h * spec.width_w,
        skeleton_cut_tension: 2.0 * (state.t1 + state.t3),
        skeleton_cut_push: 2.0 * d1 * state.pouch_lumen_height() * spec.width_w,
        fold_resistance_fr: resistance.kr_at(d1) * shortfall,
    })
}

// ============================================================================
// Blocked state and curve tracing
// ============================================================================

/// Blocked state as a full curve point (contraction pinned to zero, `Fr = 0`,
/// instantaneous pouch gauge recorded).
pub fn blocked_point(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    resistance: &ResistanceModel,
    settings: &SolverSettings,
) -> Result<CurvePoint> {
    spec.validate()?;
    cond.validate()?;
    let _ = resistance; // Fr is exactly 0 at zero contraction.
    match cond.skeleton_regime {
        SkeletonRegime::ConstantPressure => {
            let d1 = cond.positive_gauge_dp1;
            if d1 <= 0.0 {
                return Err(Error::NoBlockedState(
                    "pouches are unpressurized (dP1 = 0); the flat state carries no force".into(),
                ));
            }
            let ctx = Ctx::new(spec, cond);
            if ctx.d2 == 0.0 {
                let state = slack::blocked_state(&ctx, d1)?;
                Ok(CurvePoint {
                    contraction_ratio_cr: 0.0,
                    output_force_f: 2.0 * state.t2,
                    resistance_fr: 0.0,
                    actuator_length_ssum: ctx.ssum0,
                    state,
                    skeleton_gauge_dp1: d1,
                })
            } else {
                let (out, _) = continuation::blocked(&ctx, settings, Drive::Constant(d1))?;
                Ok(CurvePoint {
                    contraction_ratio_cr: 0.0,
                    output_force_f: continuation::raw_force(&ctx, &out.state),
                    resistance_fr: 0.0,
                    actuator_length_ssum: ctx.ssum0,
                    state: out.state,
                    skeleton_gauge_dp1: out.dp1,
                })
            }
        }
        SkeletonRegime::ClosedChamber { initial_dp1, .. } => {
            chamber::blocked_point_closed(spec, cond, initial_dp1, settings)
        }
    }
}

/// Blocked force: the output force at zero contraction, and the state there.
/// Located by bisection on the skin angle until `|CR| < 1e-9`.
pub fn blocked_force(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    resistance: &ResistanceModel,
    settings: &SolverSettings,
) -> Result<(f64, CrossSectionState)> {
    let point = blocked_point(spec, cond, resistance, settings)?;
    Ok((point.output_force_f, point.state))
}

/// Trace the force–contraction curve: start at the blocked state, sweep the
/// fold angle, and stop at the first non-positive force (interpolating the
/// exact zero crossing when `settings.zero_force_interp`). A mid-sweep solver
/// failure returns the curve up to the last converged point with `truncated`
/// set.
pub fn trace_curve(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    resistance: &ResistanceModel,
    settings: &SolverSettings,
) -> Result<Curve> {
    spec.validate()?;
    cond.validate()?;
    let kr_at = |dp1: f64| resistance.kr_at(dp1);
    let (points, truncated, reason) = match cond.skeleton_regime {
        SkeletonRegime::ConstantPressure => {
            let d1 = cond.positive_gauge_dp1;
            if d1 <= 0.0 {
                return Err(Error::NoBlockedState(
                    "pouches are unpressurized (dP1 = 0); no force–contraction curve exists"
                        .into(),
                ));
            }
            let ctx = Ctx::new(spec, cond);
            if ctx.d2 == 0.0 {
                slack::trace(&ctx, settings, d1, None, &kr_at, MIN_GAS_VOLUME)?
            } else {
                continuation::trace(&ctx, settings, Drive::Constant(d1), &kr_at, MIN_GAS_VOLUME)?
            }
        }
        SkeletonRegime::ClosedChamber { initial_dp1, .. } => {
            chamber::trace_closed(spec, cond, initial_dp1, resistance, settings)?
        }
    };
    let terminal_cr_max = points.last().map_or(0.0, |p| p.contraction_ratio_cr);
    Ok(Curve {
        points,
        spec: spec.clone(),
        condition: cond.clone(),
        terminal_cr_max,
        truncated,
        truncation_reason: reason,
    })
}

/// Scaled equilibrium residuals of `state` under `cond`, re-evaluated
/// independently of how the state was produced. Ambient-skin states
/// (`θ2 = 0`) report the three residuals of the one-dimensional branch;
/// vacuum states report their variant's full system.
pub fn residuals_at(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    state: &CrossSectionState,
) -> Result<Vec<f64>> {
    spec.validate()?;
    cond.validate()?;
    let ctx = Ctx::new(spec, cond);
    let d1 = cond.positive_gauge_dp1;
    if state.theta2 == 0.0 {
        let t1 = ctx.k1 * (state.l1 - ctx.l10n);
        let t2 = ctx.k2 * (state.l2 - ctx.l20n).max(0.0);
        let t3 = ctx.k3 * (state.l3 - ctx.l30n);
        return Ok(vec![
            (2.0 * t1 * state.theta1 - d1 * ctx.w * state.l1) / ctx.force_scale,
            (2.0 * t1 * state.theta1.cos() - t2) / ctx.force_scale,
            (2.0 * t3 * state.theta3 - ctx.d13(d1) * ctx.w * state.l3) / ctx.force_scale,
        ]);
    }
    let x = system::pack_from_state(state);
    let g = system::decode(&ctx, state.model_variant, state.theta2, &x);
    let mut out = vec![0.0; system::dim(state.model_variant)];
    system::residuals(&ctx, &g, d1, &mut out);
    Ok(out)
}

/// Replace a terminal force-overshoot point by the exact zero crossing,
/// linearly interpolated in contraction (and in gauge pressure for sealed
/// sweeps); the overshoot step's cross-section is kept as the terminal state.
pub(crate) fn interpolate_terminal(
    ctx: &Ctx,
    settings: &SolverSettings,
    points: &mut [CurvePoint],
    kr_at: &dyn Fn(f64) -> f64,
) {
    if !settings.zero_force_interp || points.len() < 2 {
        return;
    }
    let (before, tail) = points.split_at_mut(points.len() - 1);
    let p = before.last().unwrap();
    let q = &mut tail[0];
    if q.output_force_f > 0.0 || p.output_force_f <= 0.0 {
        return;
    }
    let t = p.output_force_f / (p.output_force_f - q.output_force_f);
    let cr = p.contraction_ratio_cr
        + t * (q.contraction_ratio_cr - p.contraction_ratio_cr);
    let dp1 = p.skeleton_gauge_dp1 + t * (q.skeleton_gauge_dp1 - p.skeleton_gauge_dp1);
    let ssum = ctx.ssum0 * (1.0 - cr);
    q.contraction_ratio_cr = cr;
    q.actuator_length_ssum = ssum;
    q.skeleton_gauge_dp1 = dp1;
    q.resistance_fr = kr_at(dp1) * (ctx.ssum0 - ssum).max(0.0);
    q.output_force_f = 0.0;
}

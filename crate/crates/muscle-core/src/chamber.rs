//! Sealed-skeleton behavior: the pouches are inflated to an initial charge at
//! the no-vacuum blocked state, the supply valve is closed, and from then on
//! the trapped gas follows the isothermal law `P_abs·V = const`. The pouch
//! gauge pressure becomes a solved quantity that rises as the skin vacuum
//! squeezes the lumen and falls as contraction lets the pouches round out.

use crate::geom::segment_area;
use crate::resistance::ResistanceModel;
use crate::solver::{self, Ctx, Drive, MIN_GAS_VOLUME};
use crate::state::{CrossSectionState, Curve, CurvePoint, GasState};
use crate::types::{
    ActuatorSpec, Error, PressureCondition, Result, SkeletonRegime, SolverSettings,
};

/// Skeleton lumen volume of a solved state:
/// `V = m·n·W·[seg(R1, θ1) + seg(R3, θ3)]` with `seg(R, θ) = R²(θ − sinθcosθ)`.
/// End effects are neglected; tubing dead volume is not included.
pub fn skeleton_volume(spec: &ActuatorSpec, state: &CrossSectionState) -> f64 {
    let cell = segment_area(state.r1, state.theta1) + segment_area(state.r3, state.theta3);
    spec.layers_m as f64 * spec.columns_n as f64 * spec.width_w * cell
}

/// Charge the skeleton to `initial_dp1` at the no-vacuum blocked state and
/// seal it, recording the trapped-gas state. Ambient is one standard
/// atmosphere and dead volume zero; see
/// [`PressureCondition::closed_with_dead_volume`] for the general case.
pub fn seal_chamber(
    spec: &ActuatorSpec,
    initial_dp1: f64,
    settings: &SolverSettings,
) -> Result<GasState> {
    let (gas, _) = seal_impl(
        spec,
        initial_dp1,
        0.0,
        crate::types::STANDARD_ATMOSPHERE,
        settings,
    )?;
    Ok(gas)
}

/// Seal at `initial_dp1` with explicit dead volume and ambient pressure;
/// returns the gas state and the sealing cross-section.
pub(crate) fn seal_impl(
    spec: &ActuatorSpec,
    initial_dp1: f64,
    dead_volume: f64,
    p0: f64,
    settings: &SolverSettings,
) -> Result<(GasState, CrossSectionState)> {
    spec.validate()?;
    let _ = settings; // the sealing branch is closed-form up to bisection
    if !(initial_dp1 > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "sealing requires a positive initial charge, got {initial_dp1} Pa"
        )));
    }
    let mut seal_cond = PressureCondition::closed_with_dead_volume(initial_dp1, 0.0, dead_volume);
    seal_cond.atmospheric_p0 = p0;
    seal_cond.validate()?;
    let ctx = Ctx::new(spec, &seal_cond);
    let state = solver::slack::blocked_state(&ctx, initial_dp1)?;
    let v0 = skeleton_volume(spec, &state) + dead_volume;
    if v0 < MIN_GAS_VOLUME {
        return Err(Error::VolumeCollapse { volume: v0, floor: MIN_GAS_VOLUME });
    }
    let p_abs = p0 + initial_dp1;
    Ok((
        GasState {
            trapped_moles_proxy: p_abs * v0,
            sealed_volume_v0: v0,
            sealed_absolute_p1: p_abs,
        },
        state,
    ))
}

/// Blocked state under a sealed skeleton, as a curve point carrying the
/// instantaneous pouch gauge.
pub(crate) fn blocked_point_closed(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    initial_dp1: f64,
    settings: &SolverSettings,
) -> Result<CurvePoint> {
    let dead_volume = match cond.skeleton_regime {
        SkeletonRegime::ClosedChamber { dead_volume, .. } => dead_volume,
        SkeletonRegime::ConstantPressure => 0.0,
    };
    let (gas, seal_state) =
        seal_impl(spec, initial_dp1, dead_volume, cond.atmospheric_p0, settings)?;
    if cond.negative_gauge_dp2 == 0.0 {
        // No vacuum yet: the blocked state IS the sealing state.
        return Ok(CurvePoint {
            contraction_ratio_cr: 0.0,
            output_force_f: 2.0 * seal_state.t2,
            resistance_fr: 0.0,
            actuator_length_ssum: spec.flat_length(),
            state: seal_state,
            skeleton_gauge_dp1: initial_dp1,
        });
    }
    let ctx = Ctx::new(spec, cond);
    let (out, _) = solver::continuation::blocked(
        &ctx,
        settings,
        Drive::Sealed { gas: &gas, seed_dp1: initial_dp1 },
    )?;
    let v = skeleton_volume(spec, &out.state) + dead_volume;
    if v < MIN_GAS_VOLUME {
        return Err(Error::VolumeCollapse { volume: v, floor: MIN_GAS_VOLUME });
    }
    Ok(CurvePoint {
        contraction_ratio_cr: 0.0,
        output_force_f: solver::continuation::raw_force(&ctx, &out.state),
        resistance_fr: 0.0,
        actuator_length_ssum: spec.flat_length(),
        state: out.state,
        skeleton_gauge_dp1: out.dp1,
    })
}

/// Sealed-skeleton curve points (dispatch target of `trace_curve`).
pub(crate) fn trace_closed(
    spec: &ActuatorSpec,
    cond: &PressureCondition,
    initial_dp1: f64,
    resistance: &ResistanceModel,
    settings: &SolverSettings,
) -> Result<(Vec<CurvePoint>, bool, Option<String>)> {
    let dead_volume = match cond.skeleton_regime {
        SkeletonRegime::ClosedChamber { dead_volume, .. } => dead_volume,
        SkeletonRegime::ConstantPressure => 0.0,
    };
    let (gas, _) = seal_impl(spec, initial_dp1, dead_volume, cond.atmospheric_p0, settings)?;
    let ctx = Ctx::new(spec, cond);
    let kr_at = |dp1: f64| resistance.kr_at(dp1);
    if ctx.d2 == 0.0 {
        solver::slack::trace(&ctx, settings, initial_dp1, Some(&gas), &kr_at, MIN_GAS_VOLUME)
    } else {
        solver::continuation::trace(
            &ctx,
            settings,
            Drive::Sealed { gas: &gas, seed_dp1: initial_dp1 },
            &kr_at,
            MIN_GAS_VOLUME,
        )
    }
}

/// Trace the force–contraction curve with the skeleton charged to
/// `initial_dp1`, sealed at the flat length, and the skin then evacuated to
/// `dp2`. Every curve point records the instantaneous pouch gauge pressure.
pub fn trace_curve_closed(
    spec: &ActuatorSpec,
    initial_dp1: f64,
    dp2: f64,
    resistance: &ResistanceModel,
    settings: &SolverSettings,
) -> Result<Curve> {
    let cond = PressureCondition::closed(initial_dp1, dp2);
    solver::trace_curve(spec, &cond, resistance, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_state_has_zero_volume() {
        let spec = ActuatorSpec::reference();
        let flat = CrossSectionState::flat(&spec);
        assert_eq!(skeleton_volume(&spec, &flat), 0.0);
    }

    #[test]
    fn semicircular_single_pouch_volume() {
        // Both arcs semicircles of R = 10 mm, W = 80 mm, n = 1, m = 2:
        // V = 2·1·0.08·(2·(π/2)·1e-4) = 5.0265e-5 m³.
        let spec = ActuatorSpec {
            columns_n: 1,
            layers_m: 2,
            ..ActuatorSpec::reference()
        };
        let mut state = CrossSectionState::flat(&spec);
        state.r1 = 0.010;
        state.r3 = 0.010;
        state.theta1 = std::f64::consts::FRAC_PI_2;
        state.theta3 = std::f64::consts::FRAC_PI_2;
        assert_relative_eq!(
            skeleton_volume(&spec, &state),
            5.0265e-5,
            max_relative = 1e-3
        );
    }

    #[test]
    fn halving_volume_doubles_absolute_pressure() {
        let gas = GasState {
            trapped_moles_proxy: 101_325.0 * 2e-4,
            sealed_volume_v0: 2e-4,
            sealed_absolute_p1: 101_325.0,
        };
        assert_relative_eq!(
            gas.absolute_pressure_at(1e-4),
            2.0 * 101_325.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn sealing_records_a_consistent_gas_state() {
        let spec = ActuatorSpec::reference();
        let settings = SolverSettings::default();
        let gas = seal_chamber(&spec, 60e3, &settings).unwrap();
        assert!(gas.sealed_volume_v0 > 1e-6, "v0 = {}", gas.sealed_volume_v0);
        assert_relative_eq!(
            gas.trapped_moles_proxy,
            gas.sealed_absolute_p1 * gas.sealed_volume_v0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            gas.sealed_absolute_p1,
            crate::types::STANDARD_ATMOSPHERE + 60e3,
            epsilon = 1e-9
        );
    }

    #[test]
    fn dead_volume_enters_the_gas_state() {
        let spec = ActuatorSpec::reference();
        let settings = SolverSettings::default();
        let (g0, _) = seal_impl(&spec, 60e3, 0.0, 101_325.0, &settings).unwrap();
        let dead = 5e-5;
        let (g1, _) = seal_impl(&spec, 60e3, dead, 101_325.0, &settings).unwrap();
        assert_relative_eq!(g1.sealed_volume_v0 - g0.sealed_volume_v0, dead, epsilon = 1e-12);
    }
}
